#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace uniest {

struct RDPoint {
    double rate;       // bits per symbol
    double distortion; // mean squared error per symbol (or the supplied measure)
};

// ---------------------------------------------------------------------------
// l1 recovery
// ---------------------------------------------------------------------------

struct FistaOptions {
    std::size_t max_iterations = 20000;
    double tolerance = 1e-8;  // relative objective change on an accepted step
};

struct FistaResult {
    std::vector<double> x;
    double objective;
    std::size_t iterations;
    bool converged;
    std::vector<double> objective_trace;  // objective after every iteration
};

/// 0.5 ||y - J x||^2 + lambda ||x||_1
double lasso_objective(const Eigen::MatrixXd& J, std::span<const double> y, std::span<const double> x, double lambda);

/// Largest eigenvalue of J^T J by power iteration.
double lipschitz_constant(const Eigen::MatrixXd& J, std::size_t max_iterations = 500, double tolerance = 1e-12);

/// Monotone FISTA for the LASSO with step 1/L. A step that would raise the
/// objective is rejected and momentum restarts, so the objective trace is
/// nonincreasing. Throws std::invalid_argument for lambda <= 0 or a zero
/// matrix.
FistaResult fista(const Eigen::MatrixXd& J, std::span<const double> y, double lambda, const FistaOptions& opts = {});

double soft_threshold(double v, double t);

// ---------------------------------------------------------------------------
// Lossy compression references
// ---------------------------------------------------------------------------

/// Midtread uniform quantizer with reconstruction at cell centres; rate is
/// the order-0 empirical entropy of the cell indices.
RDPoint ecsq_rd_point(std::span<const double> x, double step);

struct BlahutOptions {
    double tolerance = 1e-7;  // successive rate change, bits
    std::size_t max_iterations = 200000;
};

/// Rate-distortion points by alternating minimization, one per slope.
///
/// `distortion(i, j)` is the cost of reproducing source point i by
/// reproduction point j; `slopes` are Lagrange multipliers in nats per unit
/// distortion (larger means lower distortion). The pmf must be nonnegative
/// and sum to 1 within 1e-9.
std::vector<RDPoint> blahut_arimoto(std::span<const double> pmf, const Eigen::MatrixXd& distortion,
                                    std::span<const double> slopes, const BlahutOptions& opts = {});

/// Probability mass of a Laplace(scale) density on a uniform grid.
struct DiscreteSource {
    std::vector<double> points;
    std::vector<double> pmf;
};

/// Bin masses over [-half_width, half_width], renormalized after truncation.
DiscreteSource discretize_laplace(double scale, double half_width = 14.0, std::size_t bins = 1401);

/// (a_i - b_j)^2.
Eigen::MatrixXd squared_error_matrix(std::span<const double> source, std::span<const double> reproduction);

/// Differential entropy of Laplace(scale) in bits: log2(2 e b).
double laplace_entropy_bits(double scale);
/// h(X) - 0.5 log2(2 pi e D), floored at 0.
double shannon_lower_bound(double entropy_bits, double distortion);

} // namespace uniest
