#include "support.hpp"

#include "uniest/oracle.hpp"
#include "uniest/sampler.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace uniest;

namespace {

SamplerConfig quick(std::uint64_t seed) {
    SamplerConfig c;
    c.seed = seed;
    return c;
}

// Exact posterior weights 2^-E over every grid sequence.
std::vector<std::pair<std::vector<double>, double>> posterior(const oracle::Instance& inst) {
    std::vector<std::pair<std::vector<double>, double>> out;
    double min_e = std::numeric_limits<double>::infinity();
    std::vector<double> energies;
    oracle::enumerate(inst.channel.input_size(), inst.grid.size(), [&](const std::vector<Symbol>& s) {
        const double e = oracle::energy_bits(s, inst.grid, inst.order, inst.channel);
        out.emplace_back(dequantize(s, inst.grid), e);
        min_e = std::min(min_e, e);
    });
    double z = 0.0;
    for (auto& [x, w] : out) z += (w = std::exp2(min_e - w));
    for (auto& [x, w] : out) w /= z;
    return out;
}

} // namespace

TEST_CASE("energy terms") {
    const auto grid = build_fixed_grid(8);
    SUBCASE("constant sequence has zero coding length") {
        const auto ch = ChannelModel::awgn(SystemOperator::identity(8), std::vector<double>(8, 0.7), 0.3);
        const std::vector<Symbol> s(8, 5);
        CHECK(energy(s, grid, 1, ch).coding_bits == 0.0);
    }
    SUBCASE("on-grid noiseless observation maximizes the likelihood term") {
        Rng rng(1);
        const auto s = test::random_symbols(8, grid.size(), rng);
        const auto y = dequantize(s, grid);
        const double var = 1e-4;
        const auto ch = ChannelModel::awgn(SystemOperator::identity(8), y, var);
        const auto e = energy(quantize(y, grid), grid, 1, ch);
        CHECK(e.likelihood_bits == doctest::Approx(4.0 * std::log2(2.0 * std::numbers::pi * var)).epsilon(1e-12));
    }
    SUBCASE("matches the independent composition") {
        Rng rng(2);
        for (int t = 0; t < 40; ++t) {
            const auto inst = oracle::map_instance(static_cast<std::uint64_t>(t), t % 2 == 1);
            const auto s = test::random_symbols(inst.channel.input_size(), inst.grid.size(), rng);
            const auto e = energy(s, inst.grid, inst.order, inst.channel);
            CHECK(e.total() == doctest::Approx(e.coding_bits + e.likelihood_bits));
            CHECK(test::rel_diff(e.total(), oracle::energy_bits(s, inst.grid, inst.order, inst.channel)) <= 1e-12);
        }
    }
}

TEST_CASE("schedule validation") {
    AnnealSchedule s;
    CHECK_NOTHROW(s.validate());
    s.s0 = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = {};
    s.rho = 1.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = {};
    s.sweeps_per_stage = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("Gibbs conditionals equal the brute-force Boltzmann restriction") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = oracle::posterior_instance(seed, seed % 2 == 1);
        for (double s : {0.3, 1.0, 4.0}) {
            Rng rng(seed);
            AnnealState st(inst.channel, inst.grid, test::random_symbols(4, 2, rng), inst.order, Rng(seed + 100), s);
            std::vector<Symbol> before;
            double worst = 0.0;
            for (int sweep = 0; sweep < 10; ++sweep) {
                for (std::size_t i = 0; i < 4; ++i) {
                    before.assign(st.symbols().begin(), st.symbols().end());
                    st.resample(i, [&](std::size_t pos, std::span<const double> p) {
                        const auto exact = oracle::conditional(before, pos, inst.grid, inst.order, inst.channel, s);
                        for (std::size_t k = 0; k < p.size(); ++k) worst = std::max(worst, std::abs(p[k] - exact[k]));
                    });
                }
            }
            CHECK(worst <= 1e-12);
        }
    }
}

TEST_CASE("temperature limits of a Gibbs update") {
    const auto inst = oracle::map_instance(3, true);
    const std::size_t n = inst.channel.input_size();
    SUBCASE("s = 0 samples uniformly") {
        AnnealState st(inst.channel, inst.grid, std::vector<Symbol>(n, 0), inst.order, Rng(1), 0.0);
        gibbs_sweep(st, [](std::size_t, std::span<const double> p) {
            for (double v : p) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
        });
    }
    SUBCASE("very large s moves to the conditional argmin") {
        AnnealState st(inst.channel, inst.grid, std::vector<Symbol>(n, 0), inst.order, Rng(1), 1e6);
        for (int sweep = 0; sweep < 3; ++sweep) {
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<Symbol> cur(st.symbols().begin(), st.symbols().end());
                std::vector<double> e(inst.grid.size());
                for (Symbol a = 0; a < inst.grid.size(); ++a) {
                    cur[i] = a;
                    e[a] = oracle::energy_bits(cur, inst.grid, inst.order, inst.channel);
                }
                const auto arg = static_cast<Symbol>(std::min_element(e.begin(), e.end()) - e.begin());
                const Symbol picked = st.resample(i);
                if (std::abs(e[0] - e[1]) > 1e-6) CHECK(picked == arg);
            }
        }
    }
}

TEST_CASE("cached energy tracks recomputation") {
    Rng rng(9);
    const std::size_t n = 40, m = 25;
    const auto ch = ChannelModel::awgn(SystemOperator::matrix(test::random_matrix(m, n, rng)), test::normals(m, rng), 0.5);
    const auto grid = build_fixed_grid(n);
    AnnealState st(ch, grid, test::random_symbols(n, grid.size(), rng), 1, Rng(3), 1.0);
    for (int k = 0; k < 60; ++k) {
        gibbs_sweep(st);
        CHECK(st.cache_drift() <= 1e-6);
    }
    const auto e = energy(st.symbols(), grid, 1, ch);
    CHECK(test::rel_diff(st.energy().total(), e.total()) <= 1e-6);
}

TEST_CASE("anneal with no budget returns the initial state") {
    const auto inst = oracle::map_instance(1, false);
    AnnealSchedule sched;
    sched.total_sweeps = 0;
    const std::vector<Symbol> init{1, 0, 1, 1, 0, 0};
    const auto res = anneal(init, sched, inst.grid, inst.channel, inst.order, Rng(0));
    CHECK(res.symbols == init);
    CHECK(res.trace.empty());
}

TEST_CASE("anneal trace: best-so-far nonincreasing, s increasing across stages") {
    Rng rng(4);
    const std::size_t n = 64;
    const auto y = test::normals(n, rng);
    const auto ch = ChannelModel::awgn(SystemOperator::identity(n), y, 0.5);
    const auto grid = build_fixed_grid(n);
    const auto res = anneal(quantize(y, grid), AnnealSchedule{}, grid, ch, 1, Rng(5));
    REQUIRE(res.trace.size() == 400);
    for (std::size_t k = 1; k < res.trace.size(); ++k) {
        CHECK(res.trace[k].energy.total() <= res.trace[k - 1].energy.total());
        CHECK(res.trace[k].sweep == k + 1);
        if (k % 2 == 0) CHECK(res.trace[k].inverse_temperature > res.trace[k - 1].inverse_temperature);
        else CHECK(res.trace[k].inverse_temperature == res.trace[k - 1].inverse_temperature);
    }
    CHECK(res.energy.total() == doctest::Approx(res.trace.back().energy.total()).epsilon(1e-9));

    std::ostringstream out;
    write_trace_csv(out, res.trace);
    const auto text = out.str();
    CHECK(text.rfind("sweep,s,coding_bits,likelihood_bits,total_bits\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 401);
}

TEST_CASE("estimate_map finds the exhaustive optimum on small instances") {
    int matches = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto trial = oracle::run_map_trial(oracle::map_instance(seed, seed % 2 == 1), quick(seed));
        matches += trial.match;
        CHECK(trial.energy_gap >= -1e-9);
        CHECK(trial.energy_gap < 0.5);
    }
    CHECK(matches >= 38);
}

TEST_CASE("estimate_map limits") {
    SUBCASE("noiseless constant observation") {
        const std::size_t n = 32;
        const auto ch = ChannelModel::awgn(SystemOperator::identity(n), std::vector<double>(n, 0.3), 1e-4);
        const auto est = estimate_map(ch, quick(1));
        for (double v : est.x) CHECK(v == 0.25);  // nearest level of the n = 32 grid
        CHECK(est.energy.coding_bits == 0.0);
    }
    SUBCASE("overwhelming noise gives a constant estimate") {
        Rng rng(3);
        const std::size_t n = 32;
        const auto ch = ChannelModel::awgn(SystemOperator::identity(n), test::normals(n, rng), 1e6);
        const auto est = estimate_map(ch, quick(2));
        CHECK(est.energy.coding_bits <= 1e-9);
        auto cfg = quick(2);
        cfg.order = 0;
        const auto flat = estimate_map(ch, cfg);
        for (double v : flat.x) CHECK(v == flat.x.front());
    }
}

TEST_CASE("estimate_map improves on its starting point and is seed-deterministic") {
    Rng rng(6);
    for (int t = 0; t < 4; ++t) {
        const std::size_t n = 48, m = 30;
        const auto ch = ChannelModel::awgn(SystemOperator::matrix(test::random_matrix(m, n, rng)), test::normals(m, rng), 0.2);
        auto cfg = quick(static_cast<std::uint64_t>(t));
        cfg.schedule.total_sweeps = 100;
        const auto a = estimate_map(ch, cfg);
        const auto b = estimate_map(ch, cfg);
        CHECK(a.energy.total() <= a.initial_energy.total() + 1e-9);
        CHECK(a.symbols == b.symbols);
        CHECK(a.x == b.x);
        CHECK(test::rel_diff(a.energy.total(), energy(a.symbols, a.grid, a.order, ch).total()) <= 1e-12);
    }
}

TEST_CASE("estimate_map with an adaptive grid") {
    const std::size_t n = 128;
    Rng rng(8);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (i / 16) % 2 ? 1.3 : -0.4;
    auto y = x;
    for (auto& v : y) v += 0.3 * test::normals(1, rng)[0];
    const auto ch = ChannelModel::awgn(SystemOperator::identity(n), y, 0.09);
    auto cfg = quick(3);
    cfg.schedule.total_sweeps = 200;
    const auto est = estimate_map(ch, build_uniform_grid(-1.5, 2.5, 4), cfg);
    CHECK(est.grid.kind() == GridKind::Adaptive);
    CHECK(est.energy.total() <= est.initial_energy.total());
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err += (est.x[i] - x[i]) * (est.x[i] - x[i]);
    CHECK(err / n < 0.05);
}

TEST_CASE("estimate_mmse matches the exact posterior mean") {
    SamplerConfig cfg;
    cfg.burn_in = 200;
    cfg.samples = 2000;
    int within = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        cfg.seed = seed;
        within += oracle::run_mmse_trial(oracle::posterior_instance(seed, seed % 2 == 1), cfg).within;
    }
    CHECK(within >= 36);
}

TEST_CASE("estimate_mmse limits") {
    const auto grid = build_uniform_grid(0.0, 1.0, 2);
    SUBCASE("symmetric posterior averages to the midpoint") {
        const auto ch = ChannelModel::awgn(SystemOperator::identity(4), std::vector<double>(4, 0.5), 0.5);
        SamplerConfig cfg;
        cfg.samples = 4000;
        cfg.seed = 5;
        const auto est = estimate_mmse(ch, grid, cfg);
        for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(est.x[i] - 0.5) <= std::max(0.05, 4 * est.std_error[i]));
    }
    SUBCASE("noiseless on-grid observation") {
        const std::vector<double> y{0.0, 1.0, 1.0, 0.0, 1.0};
        const auto ch = ChannelModel::awgn(SystemOperator::identity(5), y, 1e-6);
        const auto est = estimate_mmse(ch, grid, quick(1));
        CHECK(est.x == y);
        for (double se : est.std_error) CHECK(se == 0.0);
    }
}

TEST_CASE("min-distortion estimator") {
    SUBCASE("squared error comes within 5% of the posterior optimum") {
        SamplerConfig cfg;
        cfg.samples = 1000;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto inst = oracle::posterior_instance(seed, seed % 2 == 1);
            cfg.seed = seed;
            cfg.order = inst.order;
            const auto w = estimate_min_distortion(inst.channel, inst.grid, squared_error(), cfg);
            const auto post = posterior(inst);
            const auto mean = oracle::posterior_mean(inst.channel, inst.grid, inst.order);
            double risk_w = 0.0, risk_opt = 0.0;
            for (const auto& [x, p] : post) {
                risk_w += p * squared_error()(x, w);
                risk_opt += p * squared_error()(x, mean);
            }
            CHECK(risk_w <= 1.05 * risk_opt + 1e-12);
        }
    }
    SUBCASE("Hamming distortion picks the coordinate-wise mode") {
        const std::vector<std::vector<double>> samples{{0, 1, 1}, {1, 1, 0}, {0, 0, 0}, {0, 1, 1}, {1, 1, 0}};
        CHECK(min_distortion_candidate(samples, hamming()) == std::vector<double>{0, 1, 0});
    }
    SUBCASE("a single posterior atom is returned for any distortion") {
        const std::vector<std::vector<double>> samples(7, std::vector<double>{0.5, -1.0, 2.0});
        for (const auto& d : {squared_error(), absolute_error(), hamming()}) CHECK(min_distortion_candidate(samples, d) == samples[0]);
    }
    CHECK_THROWS_AS(min_distortion_candidate({}, squared_error()), std::invalid_argument);
}

TEST_CASE("initial estimate") {
    const std::vector<double> y{1.0, -2.0};
    CHECK(initial_estimate(ChannelModel::awgn(SystemOperator::identity(2), y, 1.0)) == y);
    Eigen::MatrixXd J(2, 2);
    J << 2.0, 0.0, 0.0, 4.0;
    const auto x = initial_estimate(ChannelModel::awgn(SystemOperator::matrix(J), y, 1.0));
    CHECK(x[0] == doctest::Approx(0.5));
    CHECK(x[1] == doctest::Approx(-0.5));
}
