#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uniest {

enum class OperatorKind { Identity, Matrix, Map };

/// The known measurement operator w = J(x).
class SystemOperator {
public:
    using MapFn = std::function<std::vector<double>(std::span<const double>)>;

    static SystemOperator identity(std::size_t n);
    /// Dense operator; every entry must be finite.
    static SystemOperator matrix(Eigen::MatrixXd J);
    /// Arbitrary (possibly nonlinear) map R^n -> R^m. Incremental updates
    /// fall back to full re-evaluation.
    static SystemOperator map(std::size_t n, std::size_t m, MapFn fn);

    OperatorKind kind() const noexcept { return kind_; }
    std::size_t input_size() const noexcept { return n_; }
    std::size_t output_size() const noexcept { return m_; }
    /// Only valid for OperatorKind::Matrix.
    const Eigen::MatrixXd& matrix() const;

    std::vector<double> apply(std::span<const double> x) const;

private:
    SystemOperator(OperatorKind kind, std::size_t n, std::size_t m);

    OperatorKind kind_;
    std::size_t n_;
    std::size_t m_;
    std::shared_ptr<const Eigen::MatrixXd> J_;
    MapFn fn_;
};

std::vector<double> apply_operator(const SystemOperator& op, std::span<const double> x);

/// Separable noise density f(y | w) = prod_m g(y_m - w_m).
class NoiseModel {
public:
    virtual ~NoiseModel() = default;
    /// log g(r) in nats.
    virtual double log_pdf(double residual) const = 0;
    /// Set for Gaussian noise; enables closed-form updates.
    virtual std::optional<double> gaussian_variance() const { return std::nullopt; }
    virtual std::string name() const = 0;
};

class AwgnNoise final : public NoiseModel {
public:
    explicit AwgnNoise(double variance);

    double variance() const noexcept { return variance_; }
    double log_pdf(double residual) const override;
    std::optional<double> gaussian_variance() const override { return variance_; }
    std::string name() const override { return "awgn"; }

private:
    double variance_;
};

/// Operator, noise law and the observed measurements.
class ChannelModel {
public:
    ChannelModel(SystemOperator op, std::shared_ptr<const NoiseModel> noise, std::vector<double> y);

    static ChannelModel awgn(SystemOperator op, std::vector<double> y, double variance);
    /// Lossy-compression channel: identity operator with variance 1/(2*lambda),
    /// so the likelihood term is lambda * ||y - x||^2 (nats) up to a constant.
    static ChannelModel lossy(std::vector<double> source, double lambda);

    const SystemOperator& op() const noexcept { return op_; }
    const NoiseModel& noise() const noexcept { return *noise_; }
    std::span<const double> measurements() const noexcept { return y_; }
    std::size_t input_size() const noexcept { return op_.input_size(); }
    std::size_t output_size() const noexcept { return y_.size(); }

private:
    SystemOperator op_;
    std::shared_ptr<const NoiseModel> noise_;
    std::vector<double> y_;
};

/// y - J(x).
std::vector<double> residual(const ChannelModel& ch, std::span<const double> x);

/// log f(y | w = J(x)) in nats. Throws NumericError on non-finite results.
double log_likelihood(const ChannelModel& ch, std::span<const double> x);
double log_likelihood_from_residual(const ChannelModel& ch, std::span<const double> r);

struct LikelihoodUpdate {
    double log_likelihood;
    std::vector<double> residual;
};

/// Likelihood after changing coordinate `n` from `old_value` to `new_value`,
/// given the residual r = y - J(x) of the current x. Not available for Map
/// operators (they have no column structure); use ResidualCache instead.
LikelihoodUpdate delta_log_likelihood(const ChannelModel& ch, std::span<const double> r, std::size_t n,
                                      double old_value, double new_value);

/// Cached residual for single-coordinate updates.
///
/// Usage per coordinate: focus(n), any number of probe(delta), then
/// commit(n, delta). Probes are O(1) for Gaussian noise (after an O(M) focus
/// for matrices) and O(M) otherwise.
class ResidualCache {
public:
    ResidualCache(const ChannelModel& ch, std::span<const double> x);

    double log_likelihood() const noexcept { return loglik_; }
    std::span<const double> residual() const noexcept { return r_; }
    std::span<const double> x() const noexcept { return x_; }

    void focus(std::size_t n);
    /// Log-likelihood if x[n] += delta for the focused n.
    double probe(double delta) const;
    void commit(std::size_t n, double delta);

    /// Recomputes everything from the stored x.
    void refresh();
    /// Replaces x and recomputes.
    void reset(std::span<const double> x);

private:
    double gaussian_loglik(double sumsq) const;
    double sum_log_pdf() const;

    const ChannelModel* ch_;
    std::vector<double> x_;
    std::vector<double> r_;
    std::optional<double> variance_;
    double norm_const_ = 0.0;  // -M/2 log(2 pi sigma^2)
    double sumsq_ = 0.0;       // ||r||^2, Gaussian only
    double loglik_ = 0.0;
    std::vector<double> col_sqnorm_;
    // focus state
    std::size_t focus_ = 0;
    double focus_dot_ = 0.0;
    mutable std::vector<double> scratch_;
};

/// Whitespace-separated text, one matrix row per line.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& J);
Eigen::MatrixXd read_matrix(std::istream& in);
/// One value per line.
void write_vector(std::ostream& out, std::span<const double> v);
std::vector<double> read_vector(std::istream& in);

} // namespace uniest
