#pragma once

#include "uniest/channel.hpp"
#include "uniest/quantizer.hpp"
#include "uniest/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace test {

inline std::vector<double> normals(std::size_t n, uniest::Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

inline std::vector<uniest::Symbol> random_symbols(std::size_t n, std::size_t alphabet, uniest::Rng& rng) {
    std::vector<uniest::Symbol> s(n);
    for (auto& v : s) v = static_cast<uniest::Symbol>(uniest::uniform_index(rng, alphabet));
    return s;
}

inline Eigen::MatrixXd random_matrix(std::size_t rows, std::size_t cols, uniest::Rng& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    Eigen::MatrixXd J(rows, cols);
    for (Eigen::Index i = 0; i < J.rows(); ++i)
        for (Eigen::Index j = 0; j < J.cols(); ++j) J(i, j) = d(rng);
    return J;
}

// Unit-scale Laplace noise; exercises the non-Gaussian code paths.
class LaplaceNoise final : public uniest::NoiseModel {
public:
    double log_pdf(double r) const override { return -std::abs(r) - std::numbers::ln2; }
    std::string name() const override { return "laplace"; }
};

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

} // namespace test
