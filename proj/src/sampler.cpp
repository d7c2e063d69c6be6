#include "uniest/sampler.hpp"

#include "uniest/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace uniest {

namespace {

constexpr double kLog2e = std::numbers::log2e;
constexpr double kLn2 = std::numbers::ln2;

double relative_gap(double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

} // namespace

EnergyTerms energy(const ContextCounts& counts, const QuantGrid& grid, const ChannelModel& ch) {
    if (counts.alphabet() != grid.size()) throw std::invalid_argument("counts and grid disagree on alphabet size");
    EnergyTerms e;
    e.coding_bits = h_q(counts) * static_cast<double>(counts.length());
    e.likelihood_bits = -log_likelihood(ch, dequantize(counts.symbols(), grid)) * kLog2e;
    return e;
}

EnergyTerms energy(std::span<const Symbol> symbols, const QuantGrid& grid, std::size_t order, const ChannelModel& ch) {
    return energy(build_counts(symbols, grid.size(), order), grid, ch);
}

void AnnealSchedule::validate() const {
    if (!(s0 > 0.0) || !std::isfinite(s0)) throw std::invalid_argument("schedule: s0 must be positive");
    if (!(rho > 1.0) || !std::isfinite(rho)) throw std::invalid_argument("schedule: rho must exceed 1");
    if (sweeps_per_stage == 0) throw std::invalid_argument("schedule: sweeps_per_stage must be positive");
}

AnnealState::AnnealState(const ChannelModel& ch, QuantGrid grid, std::vector<Symbol> symbols, std::size_t order,
                         Rng rng, double inverse_temperature)
    : ch_(&ch),
      grid_(std::move(grid)),
      counts_(symbols, grid_.size(), order),
      cache_(ch, dequantize(symbols, grid_)),
      rng_(rng),
      s_(inverse_temperature) {
    if (symbols.size() != ch.input_size()) throw std::invalid_argument("state length does not match channel");
    set_inverse_temperature(inverse_temperature);
    scratch_energy_.resize(grid_.size());
    scratch_prob_.resize(grid_.size());
    sync_energy();
}

void AnnealState::set_inverse_temperature(double s) {
    if (!(s >= 0.0) || std::isnan(s)) throw std::invalid_argument("inverse temperature must be nonnegative");
    s_ = s;
}

void AnnealState::sync_energy() {
    energy_.coding_bits = counts_.coding_length();
    energy_.likelihood_bits = -cache_.log_likelihood() * kLog2e;
}

Symbol AnnealState::resample(std::size_t i, const ConditionalObserver& observer) {
    const std::size_t A = grid_.size();
    const auto levels = grid_.levels();
    const Symbol old = counts_.symbols()[i];
    const double old_value = levels[old];

    counts_.detach(i);
    cache_.focus(i);
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < A; ++b) {
        const double coding = counts_.probe(static_cast<Symbol>(b));
        const double loglik = cache_.probe(levels[b] - old_value);
        const double e = coding - loglik * kLog2e;
        scratch_energy_[b] = e;
        lowest = std::min(lowest, e);
    }
    if (!std::isfinite(lowest)) {
        counts_.attach(old);
        throw NumericError("conditional energy is not finite");
    }

    // exp(-s ln2 (E_b - E_min)); the minimum maps to 1 so the sum is >= 1.
    const double scale = s_ * kLn2;
    double total = 0.0;
    for (std::size_t b = 0; b < A; ++b) {
        const double w = scale == 0.0 ? 1.0 : std::exp(-scale * (scratch_energy_[b] - lowest));
        scratch_prob_[b] = w;
        total += w;
    }
    const double u = uniform01(rng_) * total;
    Symbol pick = static_cast<Symbol>(A - 1);
    double acc = 0.0;
    for (std::size_t b = 0; b < A; ++b) {
        acc += scratch_prob_[b];
        if (u < acc) {
            pick = static_cast<Symbol>(b);
            break;
        }
    }
    while (scratch_prob_[pick] == 0.0 && pick > 0) --pick;

    if (observer) {
        for (auto& w : scratch_prob_) w /= total;
        observer(i, scratch_prob_);
    }

    counts_.attach(pick);
    cache_.commit(i, levels[pick] - old_value);
    if (++updates_since_refresh_ >= counts_.length()) {
        refresh();
    } else {
        sync_energy();
    }
    return pick;
}

void AnnealState::refresh() {
    counts_.refresh();
    cache_.refresh();
    updates_since_refresh_ = 0;
    sync_energy();
}

void AnnealState::rebind(QuantGrid grid, std::span<const Symbol> remap) {
    if (remap.size() != grid_.size()) throw std::invalid_argument("remap must cover the old grid");
    std::vector<Symbol> symbols(counts_.symbols().begin(), counts_.symbols().end());
    for (auto& s : symbols) {
        s = remap[s];
        if (s >= grid.size()) throw std::invalid_argument("remap points outside the new grid");
    }
    const std::size_t order = counts_.order();
    grid_ = std::move(grid);
    counts_ = ContextCounts(symbols, grid_.size(), order);
    cache_.reset(dequantize(symbols, grid_));
    scratch_energy_.resize(grid_.size());
    scratch_prob_.resize(grid_.size());
    updates_since_refresh_ = 0;
    sync_energy();
}

double AnnealState::cache_drift() const {
    const EnergyTerms fresh = uniest::energy(counts_.symbols(), grid_, counts_.order(), *ch_);
    return std::max(relative_gap(fresh.coding_bits, energy_.coding_bits),
                    relative_gap(fresh.likelihood_bits, energy_.likelihood_bits));
}

void gibbs_sweep(AnnealState& state, const ConditionalObserver& observer) {
    const auto order = random_permutation(state.rng(), state.symbols().size());
    for (auto i : order) state.resample(i, observer);
}

namespace {

// Tracks the lowest-energy state visited without copying the sequence on
// every improvement: between snapshots it logs the committed changes and
// replays them when a new best appears.
class BestTracker {
public:
    explicit BestTracker(const AnnealState& st)
        : best_(st.symbols().begin(), st.symbols().end()), grid_(st.grid()), energy_(st.energy()) {}

    void on_update(const AnnealState& st, std::size_t i, Symbol s) {
        if (linked_) log_.emplace_back(i, s);
        if (st.energy().total() < energy_.total()) {
            take(st);
            energy_ = st.energy();
        } else if (linked_ && log_.size() > 2 * best_.size()) {
            log_.clear();
            const auto cur = st.symbols();
            for (std::size_t k = 0; k < cur.size(); ++k) {
                if (cur[k] != best_[k]) log_.emplace_back(k, cur[k]);
            }
        }
    }

    // The current state moved to another grid without a coordinate update.
    void on_rebind(const AnnealState& st) {
        log_.clear();
        linked_ = false;
        if (st.energy().total() < energy_.total()) {
            take(st);
            energy_ = st.energy();
        }
    }

    std::vector<Symbol>& symbols() { return best_; }
    QuantGrid& grid() { return grid_; }
    EnergyTerms energy() const { return energy_; }

private:
    void take(const AnnealState& st) {
        if (linked_) {
            for (const auto& [k, s] : log_) best_[k] = s;
        } else {
            best_.assign(st.symbols().begin(), st.symbols().end());
            grid_ = st.grid();
            linked_ = true;
        }
        log_.clear();
    }

    std::vector<Symbol> best_;
    QuantGrid grid_;
    EnergyTerms energy_;
    bool linked_ = true;
    std::vector<std::pair<std::size_t, Symbol>> log_;
};

} // namespace

AnnealResult anneal(std::span<const Symbol> initial, const AnnealSchedule& schedule, const QuantGrid& grid,
                    const ChannelModel& ch, std::size_t order, Rng rng, std::size_t adapt_every) {
    schedule.validate();
    AnnealState st(ch, grid, std::vector<Symbol>(initial.begin(), initial.end()), order, rng, schedule.s0);
    BestTracker best(st);
    std::vector<TracePoint> trace;
    trace.reserve(schedule.total_sweeps);

    const bool adapt = adapt_every > 0 && grid.kind() == GridKind::Adaptive;
    double s = schedule.s0;
    std::size_t sweep = 0;
    while (sweep < schedule.total_sweeps) {
        st.set_inverse_temperature(s);
        for (std::size_t t = 0; t < schedule.sweeps_per_stage && sweep < schedule.total_sweeps; ++t) {
            const auto order_perm = random_permutation(st.rng(), st.symbols().size());
            for (auto i : order_perm) {
                const Symbol picked = st.resample(i);
                best.on_update(st, i, picked);
            }
            ++sweep;
            if (adapt && sweep % adapt_every == 0) {
                auto adapted = adapt_levels(st.symbols(), ch, st.grid());
                st.rebind(std::move(adapted.grid), adapted.remap);
                best.on_rebind(st);
            }
            trace.push_back({sweep, s, best.energy()});
        }
        s *= schedule.rho;
    }

    AnnealResult out{std::move(best.symbols()), std::move(best.grid()), {}, std::move(trace)};
    out.energy = energy(out.symbols, out.grid, order, ch);
    return out;
}

void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace) {
    out << "sweep,s,coding_bits,likelihood_bits,total_bits\n";
    char buf[160];
    for (const auto& p : trace) {
        std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g\n", p.sweep, p.inverse_temperature,
                      p.energy.coding_bits, p.energy.likelihood_bits, p.energy.total());
        out << buf;
    }
}

std::vector<double> initial_estimate(const ChannelModel& ch) {
    const auto y = ch.measurements();
    switch (ch.op().kind()) {
    case OperatorKind::Identity:
        return {y.begin(), y.end()};
    case OperatorKind::Matrix: {
        const auto& J = ch.op().matrix();
        const Eigen::VectorXd back =
            J.transpose() * Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
        std::vector<double> x(static_cast<std::size_t>(J.cols()), 0.0);
        for (Eigen::Index n = 0; n < J.cols(); ++n) {
            const double norm = J.col(n).squaredNorm();
            if (norm > 0.0) x[static_cast<std::size_t>(n)] = back(n) / norm;
        }
        return x;
    }
    case OperatorKind::Map:
        break;
    }
    return std::vector<double>(ch.input_size(), 0.0);
}

MapEstimate estimate_map(const ChannelModel& ch, const QuantGrid& grid, const SamplerConfig& cfg) {
    const std::size_t n = ch.input_size();
    if (n < 2) throw std::invalid_argument("estimate_map needs at least two coordinates");
    const std::size_t order = cfg.order.value_or(default_order(n, grid.size()));
    const auto init = quantize(initial_estimate(ch), grid);
    const std::size_t adapt_every = grid.kind() == GridKind::Adaptive ? cfg.adapt_every : 0;

    std::optional<AnnealResult> best;
    const std::size_t restarts = std::max<std::size_t>(1, cfg.restarts);
    for (std::size_t r = 0; r < restarts; ++r) {
        auto res = anneal(init, cfg.schedule, grid, ch, order, make_stream(cfg.seed, r), adapt_every);
        if (!best || res.energy.total() < best->energy.total()) best = std::move(res);
    }

    MapEstimate out{dequantize(best->symbols, best->grid),
                    best->symbols,
                    best->grid,
                    best->energy,
                    energy(init, grid, order, ch),
                    order,
                    std::move(best->trace)};
    return out;
}

MapEstimate estimate_map(const ChannelModel& ch, const SamplerConfig& cfg) {
    return estimate_map(ch, build_fixed_grid(ch.input_size()), cfg);
}

std::vector<std::vector<double>> posterior_samples(const ChannelModel& ch, const QuantGrid& grid,
                                                   const SamplerConfig& cfg) {
    const std::size_t n = ch.input_size();
    if (n < 2) throw std::invalid_argument("posterior sampling needs at least two coordinates");
    if (cfg.samples == 0) throw std::invalid_argument("posterior sampling needs samples > 0");
    const std::size_t order = cfg.order.value_or(default_order(n, grid.size()));
    AnnealState st(ch, grid, quantize(initial_estimate(ch), grid), order, make_stream(cfg.seed, 0), 1.0);
    for (std::size_t k = 0; k < cfg.burn_in; ++k) gibbs_sweep(st);
    std::vector<std::vector<double>> samples;
    samples.reserve(cfg.samples);
    for (std::size_t k = 0; k < cfg.samples; ++k) {
        gibbs_sweep(st);
        samples.push_back(dequantize(st.symbols(), grid));
    }
    return samples;
}

MmseEstimate estimate_mmse(const ChannelModel& ch, const QuantGrid& grid, const SamplerConfig& cfg) {
    const auto samples = posterior_samples(ch, grid, cfg);
    const std::size_t n = ch.input_size();
    const std::size_t count = samples.size();
    MmseEstimate out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), count};
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < n; ++i) out.x[i] += s[i];
    }
    for (auto& v : out.x) v /= static_cast<double>(count);

    // Batch means: about sqrt(count) batches, leftover samples dropped.
    const auto batches = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(count))));
    if (batches >= 2) {
        const std::size_t size = count / batches;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> means(batches, 0.0);
            for (std::size_t b = 0; b < batches; ++b) {
                for (std::size_t k = 0; k < size; ++k) means[b] += samples[b * size + k][i];
                means[b] /= static_cast<double>(size);
            }
            double mu = 0.0;
            for (double m : means) mu += m;
            mu /= static_cast<double>(batches);
            double var = 0.0;
            for (double m : means) var += (m - mu) * (m - mu);
            var /= static_cast<double>(batches - 1);
            out.std_error[i] = std::sqrt(var / static_cast<double>(batches));
        }
    }
    return out;
}

Distortion squared_error() {
    return [](std::span<const double> a, std::span<const double> b) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
        return d;
    };
}

Distortion absolute_error() {
    return [](std::span<const double> a, std::span<const double> b) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
        return d;
    };
}

Distortion hamming() {
    return [](std::span<const double> a, std::span<const double> b) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i] ? 1.0 : 0.0;
        return d;
    };
}

std::vector<double> min_distortion_candidate(std::span<const std::vector<double>> samples, const Distortion& d) {
    if (samples.empty()) throw std::invalid_argument("no samples");
    const std::size_t n = samples.front().size();
    const std::size_t count = samples.size();

    std::vector<double> mean(n, 0.0), median(n), mode(n);
    std::vector<double> column(count);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < count; ++k) {
            column[k] = samples[k][i];
            mean[i] += column[k];
        }
        mean[i] /= static_cast<double>(count);
        std::sort(column.begin(), column.end());
        median[i] = count % 2 ? column[count / 2] : 0.5 * (column[count / 2 - 1] + column[count / 2]);
        // Most frequent value; ties go to the smallest.
        std::size_t best_run = 0;
        for (std::size_t k = 0; k < count;) {
            std::size_t j = k;
            while (j < count && column[j] == column[k]) ++j;
            if (j - k > best_run) {
                best_run = j - k;
                mode[i] = column[k];
            }
            k = j;
        }
    }

    std::vector<const std::vector<double>*> candidates;
    candidates.reserve(count + 3);
    for (const auto& s : samples) candidates.push_back(&s);
    candidates.push_back(&mean);
    candidates.push_back(&median);
    candidates.push_back(&mode);

    const std::vector<double>* winner = nullptr;
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto* w : candidates) {
        double risk = 0.0;
        for (const auto& s : samples) risk += d(s, *w);
        if (risk < lowest) {
            lowest = risk;
            winner = w;
        }
    }
    return *winner;
}

std::vector<double> estimate_min_distortion(const ChannelModel& ch, const QuantGrid& grid, const Distortion& d,
                                            const SamplerConfig& cfg) {
    const auto samples = posterior_samples(ch, grid, cfg);
    return min_distortion_candidate(samples, d);
}

} // namespace uniest
