#include "uniest/sources.hpp"

#include "uniest/rng.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace uniest {

void SourceSpec::validate() const {
    if (length == 0) throw std::invalid_argument("source length must be positive");
    switch (kind) {
    case SourceKind::BernoulliGaussian:
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli p must lie in [0, 1]");
        break;
    case SourceKind::Laplace:
        if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("laplace scale must be positive");
        break;
    case SourceKind::TwoStateMarkov:
        for (double s : stay) {
            if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("markov stay probabilities must lie in [0, 1]");
        }
        for (double v : levels) {
            if (!std::isfinite(v)) throw std::invalid_argument("markov levels must be finite");
        }
        break;
    }
}

std::string to_string(SourceKind kind) {
    switch (kind) {
    case SourceKind::BernoulliGaussian: return "bernoulli";
    case SourceKind::Laplace: return "laplace";
    case SourceKind::TwoStateMarkov: return "markov";
    }
    return "?";
}

std::string to_string(Amplitude amplitude) {
    return amplitude == Amplitude::PlusMinusOne ? "pm1" : "gaussian";
}

std::vector<double> generate(const SourceSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<double> x(spec.length, 0.0);
    switch (spec.kind) {
    case SourceKind::BernoulliGaussian: {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& v : x) {
            if (uniform01(rng) >= spec.p) continue;
            if (spec.amplitude == Amplitude::PlusMinusOne) {
                v = uniform01(rng) < 0.5 ? -1.0 : 1.0;
            } else {
                v = normal(rng);
            }
        }
        break;
    }
    case SourceKind::Laplace: {
        std::exponential_distribution<double> expo(1.0 / spec.scale);
        for (auto& v : x) {
            const double mag = expo(rng);
            v = uniform01(rng) < 0.5 ? -mag : mag;
        }
        break;
    }
    case SourceKind::TwoStateMarkov: {
        const double leave0 = 1.0 - spec.stay[0];
        const double leave1 = 1.0 - spec.stay[1];
        // Start from the stationary law; absorbing chains start in state 0.
        const double pi1 = (leave0 + leave1) > 0.0 ? leave0 / (leave0 + leave1) : 0.0;
        int state = uniform01(rng) < pi1 ? 1 : 0;
        for (auto& v : x) {
            v = spec.levels[static_cast<std::size_t>(state)];
            if (uniform01(rng) >= spec.stay[static_cast<std::size_t>(state)]) state = 1 - state;
        }
        break;
    }
    }
    return x;
}

Eigen::MatrixXd gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("gaussian_matrix needs positive dimensions");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(rows)));
    Eigen::MatrixXd J(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    // Row-major fill so the draw order does not depend on storage layout.
    for (Eigen::Index i = 0; i < J.rows(); ++i) {
        for (Eigen::Index j = 0; j < J.cols(); ++j) J(i, j) = normal(rng);
    }
    return J;
}

NoisyMeasurements add_awgn(std::span<const double> w, double snr_db, std::uint64_t seed) {
    if (w.empty()) throw std::invalid_argument("add_awgn: empty signal");
    double power = 0.0;
    for (double v : w) {
        if (!std::isfinite(v)) throw std::invalid_argument("add_awgn: signal must be finite");
        power += v * v;
    }
    NoisyMeasurements out{{w.begin(), w.end()}, 0.0};
    if (std::isinf(snr_db) && snr_db > 0) return out;
    if (std::isnan(snr_db)) throw std::invalid_argument("add_awgn: SNR is NaN");
    if (power == 0.0) throw std::invalid_argument("add_awgn: zero signal has no defined SNR");
    out.variance = power / (static_cast<double>(w.size()) * std::pow(10.0, snr_db / 10.0));
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(out.variance));
    for (auto& v : out.y) v += normal(rng);
    return out;
}

} // namespace uniest
