#pragma once

#include "uniest/channel.hpp"
#include "uniest/entropy.hpp"
#include "uniest/quantizer.hpp"
#include "uniest/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace uniest {

/// Energy of a candidate sequence, all in bits.
struct EnergyTerms {
    double coding_bits = 0.0;     // N * H_q
    double likelihood_bits = 0.0; // -log2 f(y | J(x))
    double total() const noexcept { return coding_bits + likelihood_bits; }
};

/// Energy recomputed from scratch.
EnergyTerms energy(std::span<const Symbol> symbols, const QuantGrid& grid, std::size_t order,
                   const ChannelModel& ch);
EnergyTerms energy(const ContextCounts& counts, const QuantGrid& grid, const ChannelModel& ch);

/// Inverse temperature starts at s0 and is multiplied by rho after every
/// `sweeps_per_stage` sweeps until `total_sweeps` have run.
struct AnnealSchedule {
    double s0 = 0.1;
    double rho = 1.15;
    std::size_t sweeps_per_stage = 2;
    std::size_t total_sweeps = 400;

    void validate() const;
};

struct SamplerConfig {
    std::optional<std::size_t> order;  // default_order(N, |grid|) when empty
    AnnealSchedule schedule;
    std::size_t restarts = 3;
    std::size_t adapt_every = 10;  // adaptive grids only
    std::size_t burn_in = 50;
    std::size_t samples = 200;
    std::uint64_t seed = 0;
};

/// Called with the normalized conditional distribution of every Gibbs update.
using ConditionalObserver = std::function<void(std::size_t position, std::span<const double> probabilities)>;

/// Markov chain state: symbols plus caches kept consistent with them.
class AnnealState {
public:
    AnnealState(const ChannelModel& ch, QuantGrid grid, std::vector<Symbol> symbols, std::size_t order,
                Rng rng, double inverse_temperature = 1.0);

    std::span<const Symbol> symbols() const noexcept { return counts_.symbols(); }
    const QuantGrid& grid() const noexcept { return grid_; }
    const ContextCounts& counts() const noexcept { return counts_; }
    const ResidualCache& residual() const noexcept { return cache_; }
    const ChannelModel& channel() const noexcept { return *ch_; }
    EnergyTerms energy() const noexcept { return energy_; }
    double inverse_temperature() const noexcept { return s_; }
    void set_inverse_temperature(double s);
    Rng& rng() noexcept { return rng_; }
    std::size_t order() const noexcept { return counts_.order(); }

    /// Draws position `i` from its conditional under exp(-s * ln2 * energy)
    /// and commits it. Returns the new symbol.
    Symbol resample(std::size_t i, const ConditionalObserver& observer = {});

    /// Rebuilds the caches from the symbols.
    void refresh();
    /// Switches to a new grid; remap[old] gives each symbol's new index.
    void rebind(QuantGrid grid, std::span<const Symbol> remap);

    /// Largest relative deviation between cached and recomputed energy terms.
    double cache_drift() const;

private:
    void sync_energy();

    const ChannelModel* ch_;
    QuantGrid grid_;
    ContextCounts counts_;
    ResidualCache cache_;
    EnergyTerms energy_;
    Rng rng_;
    double s_;
    std::size_t updates_since_refresh_ = 0;
    std::vector<double> scratch_energy_;
    std::vector<double> scratch_prob_;
};

/// One Gibbs pass over all coordinates in a random order.
void gibbs_sweep(AnnealState& state, const ConditionalObserver& observer = {});

struct TracePoint {
    std::size_t sweep;
    double inverse_temperature;
    EnergyTerms energy;  // best state so far
};

struct AnnealResult {
    std::vector<Symbol> symbols;  // best state visited
    QuantGrid grid;               // grid the best symbols index into
    EnergyTerms energy;           // recomputed for the best state
    std::vector<TracePoint> trace;
};

/// Simulated annealing from `initial`. `adapt_every` > 0 with an adaptive grid
/// re-optimizes levels every that many sweeps.
AnnealResult anneal(std::span<const Symbol> initial, const AnnealSchedule& schedule, const QuantGrid& grid,
                    const ChannelModel& ch, std::size_t order, Rng rng, std::size_t adapt_every = 0);

/// Emits sweep,s,coding_bits,likelihood_bits,total_bits.
void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace);

/// Data-aware starting point: y for identity channels, J^T y scaled by the
/// squared column norms for matrices, zero otherwise.
std::vector<double> initial_estimate(const ChannelModel& ch);

struct MapEstimate {
    std::vector<double> x;
    std::vector<Symbol> symbols;
    QuantGrid grid;
    EnergyTerms energy;
    EnergyTerms initial_energy;
    std::size_t order;
    std::vector<TracePoint> trace;  // of the winning restart
};

MapEstimate estimate_map(const ChannelModel& ch, const QuantGrid& grid, const SamplerConfig& cfg);
/// Uses build_fixed_grid(N).
MapEstimate estimate_map(const ChannelModel& ch, const SamplerConfig& cfg);

/// Posterior samples at s = 1 after burn-in, one per sweep.
std::vector<std::vector<double>> posterior_samples(const ChannelModel& ch, const QuantGrid& grid,
                                                   const SamplerConfig& cfg);

struct MmseEstimate {
    std::vector<double> x;
    std::vector<double> std_error;  // batch-means Monte-Carlo standard error per coordinate
    std::size_t samples;
};

MmseEstimate estimate_mmse(const ChannelModel& ch, const QuantGrid& grid, const SamplerConfig& cfg);

/// D(truth, estimate) >= 0 over whole sequences.
using Distortion = std::function<double(std::span<const double>, std::span<const double>)>;

Distortion squared_error();
Distortion absolute_error();
Distortion hamming();

/// Candidate minimizing the sample-average distortion; candidates are the
/// samples themselves plus their coordinate-wise mean, median and mode.
std::vector<double> estimate_min_distortion(const ChannelModel& ch, const QuantGrid& grid,
                                            const Distortion& d, const SamplerConfig& cfg);
/// Same, over a caller-supplied sample set.
std::vector<double> min_distortion_candidate(std::span<const std::vector<double>> samples, const Distortion& d);

} // namespace uniest
