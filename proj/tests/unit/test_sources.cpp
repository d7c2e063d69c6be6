#include "uniest/sources.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

using namespace uniest;

namespace {

SourceSpec spec_of(SourceKind kind, std::size_t n, std::uint64_t seed) {
    SourceSpec s;
    s.kind = kind;
    s.length = n;
    s.seed = seed;
    return s;
}

double sum_sq(const std::vector<double>& v) { return std::inner_product(v.begin(), v.end(), v.begin(), 0.0); }

} // namespace

TEST_CASE("bernoulli source sparsity and amplitudes") {
    const auto x = generate(spec_of(SourceKind::BernoulliGaussian, 10000, 1));
    REQUIRE(x.size() == 10000);
    std::size_t nz = 0;
    for (double v : x) {
        if (v != 0.0) {
            ++nz;
            CHECK(std::abs(v) == 1.0);
        }
    }
    const double frac = static_cast<double>(nz) / 1e4;
    CHECK(frac >= 0.02);
    CHECK(frac <= 0.04);

    auto g = spec_of(SourceKind::BernoulliGaussian, 10000, 1);
    g.amplitude = Amplitude::Gaussian;
    const auto xg = generate(g);
    bool non_unit = false;
    for (double v : xg) non_unit |= v != 0.0 && std::abs(v) != 1.0;
    CHECK(non_unit);
}

TEST_CASE("laplace source mean magnitude") {
    for (double b : {1.0, 2.5}) {
        auto s = spec_of(SourceKind::Laplace, 100000, 2);
        s.scale = b;
        const auto x = generate(s);
        double m = 0.0;
        for (double v : x) m += std::abs(v);
        m /= static_cast<double>(x.size());
        CHECK(std::abs(m - b) <= 0.02 * b);
    }
}

TEST_CASE("absorbing markov chain is constant") {
    auto s = spec_of(SourceKind::TwoStateMarkov, 500, 3);
    s.stay = {1.0, 1.0};
    s.levels = {-2.0, 5.0};
    const auto x = generate(s);
    for (double v : x) CHECK(v == x[0]);
    CHECK((x[0] == -2.0 || x[0] == 5.0));
}

TEST_CASE("markov transition frequencies") {
    auto s = spec_of(SourceKind::TwoStateMarkov, 100000, 4);
    s.stay = {0.8, 0.6};
    s.levels = {0.0, 1.0};
    const auto x = generate(s);
    double n[2] = {0, 0}, stay[2] = {0, 0};
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const int a = x[i] == 1.0;
        n[a] += 1;
        stay[a] += x[i + 1] == x[i];
    }
    CHECK(std::abs(stay[0] / n[0] - 0.8) <= 0.02);
    CHECK(std::abs(stay[1] / n[1] - 0.6) <= 0.02);
}

TEST_CASE("generators are pure functions of SourceSpec") {
    for (auto kind : {SourceKind::BernoulliGaussian, SourceKind::Laplace, SourceKind::TwoStateMarkov}) {
        CHECK(generate(spec_of(kind, 1000, 9)) == generate(spec_of(kind, 1000, 9)));
        CHECK(generate(spec_of(kind, 1000, 9)) != generate(spec_of(kind, 1000, 10)));
    }
}

TEST_CASE("invalid specs are rejected") {
    auto s = spec_of(SourceKind::BernoulliGaussian, 10, 0);
    s.p = 1.5;
    CHECK_THROWS_AS(generate(s), std::invalid_argument);
    s = spec_of(SourceKind::Laplace, 10, 0);
    s.scale = 0.0;
    CHECK_THROWS_AS(generate(s), std::invalid_argument);
    s = spec_of(SourceKind::TwoStateMarkov, 10, 0);
    s.stay = {-0.1, 0.5};
    CHECK_THROWS_AS(generate(s), std::invalid_argument);
    s = spec_of(SourceKind::Laplace, 0, 0);
    CHECK_THROWS_AS(generate(s), std::invalid_argument);
}

TEST_CASE("gaussian matrix") {
    const auto J = gaussian_matrix(200, 50, 5);
    CHECK(J.rows() == 200);
    CHECK(J.cols() == 50);
    const double mean_norm = J.colwise().squaredNorm().mean();
    CHECK(std::abs(mean_norm - 1.0) <= 0.05);
    CHECK(gaussian_matrix(200, 50, 5) == J);
    CHECK(gaussian_matrix(200, 50, 6) != J);
    const auto one = gaussian_matrix(1, 1, 7);
    REQUIRE(one.size() == 1);
    CHECK(std::isfinite(one(0, 0)));
    CHECK(one(0, 0) != 0.0);
}

TEST_CASE("awgn at infinite snr is noiseless") {
    const std::vector<double> w{1.0, -2.0, 0.5};
    const auto r = add_awgn(w, std::numeric_limits<double>::infinity(), 1);
    CHECK(r.y == w);
    CHECK(r.variance == 0.0);
}

TEST_CASE("awgn at 0 dB uses the per-entry signal power") {
    const std::vector<double> w{1.0, -2.0, 0.5, 3.0};
    const auto r = add_awgn(w, 0.0, 2);
    CHECK(r.variance == doctest::Approx(sum_sq(w) / 4.0).epsilon(1e-14));
    CHECK(add_awgn(w, 10.0, 2).variance == doctest::Approx(sum_sq(w) / 40.0).epsilon(1e-14));
}

TEST_CASE("awgn realized snr is near the target") {
    const auto w = generate(spec_of(SourceKind::Laplace, 10000, 3));
    for (double snr : {0.0, 5.0, 10.0, 20.0}) {
        const auto r = add_awgn(w, snr, 4);
        std::vector<double> e(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) e[i] = r.y[i] - w[i];
        const double realized = 10.0 * std::log10(sum_sq(w) / sum_sq(e));
        CHECK(std::abs(realized - snr) <= 0.5);
    }
    CHECK(add_awgn(w, 5.0, 4).y == add_awgn(w, 5.0, 4).y);
}

TEST_CASE("awgn rejects degenerate input") {
    const std::vector<double> zero(5, 0.0);
    CHECK_THROWS_AS(add_awgn(zero, 10.0, 1), std::invalid_argument);
    CHECK_NOTHROW(add_awgn(zero, std::numeric_limits<double>::infinity(), 1));
    const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(add_awgn(bad, 10.0, 1), std::invalid_argument);
}
