#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uniest {

enum class SourceKind { BernoulliGaussian, Laplace, TwoStateMarkov };

/// Amplitude law for the nonzero entries of a Bernoulli source.
enum class Amplitude { PlusMinusOne, Gaussian };

struct SourceSpec {
    SourceKind kind = SourceKind::BernoulliGaussian;
    std::size_t length = 256;
    std::uint64_t seed = 0;

    double p = 0.03;                          // Bernoulli nonzero probability
    Amplitude amplitude = Amplitude::PlusMinusOne;
    double scale = 1.0;                       // Laplace b
    std::array<double, 2> stay{0.9, 0.9};     // Markov self-transition probabilities
    std::array<double, 2> levels{0.0, 1.0};   // Markov emission per state

    void validate() const;
};

std::string to_string(SourceKind kind);
std::string to_string(Amplitude amplitude);

/// Pure function of the SourceSpec, including its seed.
std::vector<double> generate(const SourceSpec& spec);

/// M x N matrix with iid N(0, 1/M) entries.
Eigen::MatrixXd gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

struct NoisyMeasurements {
    std::vector<double> y;
    double variance;  // noise variance actually used; 0 for infinite SNR
};

/// y = w + N(0, s2) with s2 = ||w||^2 / (M 10^(snr_db/10)). snr_db = +inf
/// returns y = w. Throws std::invalid_argument for all-zero w at finite SNR.
NoisyMeasurements add_awgn(std::span<const double> w, double snr_db, std::uint64_t seed);

} // namespace uniest
