#pragma once

// Brute-force references for small instances. Nothing here goes through
// ContextCounts, ResidualCache or the Gibbs machinery: entropies come from
// std::map tallies and likelihoods from per-entry densities.

#include "uniest/channel.hpp"
#include "uniest/quantizer.hpp"
#include "uniest/sampler.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace uniest::oracle {

/// N * H_q in bits with circular contexts, by direct tallying.
double coding_length_bits(std::span<const Symbol> symbols, std::size_t order);

/// log f(y | J x) in nats from the per-entry density and a naive product J x.
double log_likelihood_nats(const ChannelModel& ch, std::span<const double> x);

/// Energy in bits, coding length plus negative log-likelihood.
double energy_bits(std::span<const Symbol> symbols, const QuantGrid& grid, std::size_t order, const ChannelModel& ch);

/// Calls f(symbols) for every sequence in grid^N, lexicographic order.
template <class F>
void enumerate(std::size_t n, std::size_t alphabet, F&& f) {
    std::vector<Symbol> s(n, 0);
    while (true) {
        f(std::as_const(s));
        std::size_t k = 0;
        while (k < n && ++s[k] == alphabet) s[k++] = 0;
        if (k == n) return;
    }
}

struct Exhaustive {
    std::vector<Symbol> argmin;
    double min_energy;
};

Exhaustive exhaustive_map(const ChannelModel& ch, const QuantGrid& grid, std::size_t order);

/// Posterior mean sum x 2^-E(x) / sum 2^-E(x) over grid^N.
std::vector<double> posterior_mean(const ChannelModel& ch, const QuantGrid& grid, std::size_t order);

/// Normalized exp(-s ln2 E) over the candidates for position i, others fixed.
std::vector<double> conditional(std::span<const Symbol> symbols, std::size_t i, const QuantGrid& grid,
                                std::size_t order, const ChannelModel& ch, double s);

// Seeded small instances shared by the test suites and the CLI.

struct Instance {
    ChannelModel channel;
    QuantGrid grid;
    std::size_t order;
};

/// N = 6 symbols over {0, 1} from a sticky Markov chain, observed through the
/// identity or a 4 x 6 Gaussian matrix with AWGN.
Instance map_instance(std::uint64_t seed, bool linear);
/// N = 4 over {0, 1}; broad posterior so that Monte-Carlo error is visible.
Instance posterior_instance(std::uint64_t seed, bool linear);

struct MapTrial {
    bool match;
    double energy_gap;  // found - optimum, bits
};

MapTrial run_map_trial(const Instance& inst, const SamplerConfig& cfg);

struct MmseTrial {
    double max_z;  // max_i |estimate - exact| / std_error
    bool within;   // max_z <= 3
};

MmseTrial run_mmse_trial(const Instance& inst, const SamplerConfig& cfg);

} // namespace uniest::oracle
