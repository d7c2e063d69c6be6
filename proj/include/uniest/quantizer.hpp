#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

namespace uniest {

class ChannelModel;

/// Index into a QuantGrid.
using Symbol = std::uint32_t;

enum class GridKind {
    Fixed,    // data-independent, depends only on the sequence length
    Adaptive, // levels may be re-optimized against the data
};

/// Ordered, finite set of reproduction levels.
///
/// Levels are nonempty, finite and strictly increasing; the constructor
/// rejects anything else. Immutable once built.
class QuantGrid {
public:
    QuantGrid(std::vector<double> levels, GridKind kind);

    /// The data-independent grid {(i - g^2)/g : i = 0..2g^2}.
    static QuantGrid fixed(unsigned gamma);

    std::span<const double> levels() const noexcept { return levels_; }
    double level(Symbol s) const { return levels_.at(s); }
    std::size_t size() const noexcept { return levels_.size(); }
    GridKind kind() const noexcept { return kind_; }
    double min() const noexcept { return levels_.front(); }
    double max() const noexcept { return levels_.back(); }
    /// Resolution parameter for fixed grids, 0 for adaptive ones.
    unsigned gamma() const noexcept { return gamma_; }

    friend bool operator==(const QuantGrid&, const QuantGrid&) = default;

private:
    std::vector<double> levels_;
    GridKind kind_;
    unsigned gamma_ = 0;
};

/// ceil(log_base(n)).
unsigned fixed_grid_gamma(std::size_t n, double log_base = std::numbers::e);

/// Data-independent grid for sequences of length n (n >= 2).
QuantGrid build_fixed_grid(std::size_t n, double log_base = std::numbers::e);

/// `count` equally spaced adaptive levels on [lo, hi]; a single level sits at
/// the midpoint.
QuantGrid build_uniform_grid(double lo, double hi, std::size_t count);

/// Nearest level, ties to the lower index, out-of-range values clamp.
Symbol quantize_value(double x, const QuantGrid& grid);
std::vector<Symbol> quantize(std::span<const double> x, const QuantGrid& grid);
std::vector<double> dequantize(std::span<const Symbol> symbols, const QuantGrid& grid);

struct AdaptedGrid {
    QuantGrid grid;
    /// remap[old symbol] = symbol in `grid`; levels may have been re-sorted
    /// or merged.
    std::vector<Symbol> remap;
};

/// Re-optimizes each level value with symbol assignments held fixed.
///
/// Levels are visited in index order and each is moved to the minimizer of
/// the negative log-likelihood restricted to that level (the coding-length
/// term does not depend on level values). Gaussian noise uses the closed-form
/// centroid; other noise models use golden-section search and keep the old
/// value unless the new one is no worse. Unused levels stay put. The result
/// is re-sorted and levels closer than 1e-12 are merged.
///
/// Throws InvalidOperation for fixed grids.
AdaptedGrid adapt_levels(std::span<const Symbol> symbols, const ChannelModel& channel,
                         const QuantGrid& grid);

/// One level per line, round-trip precision.
void write_grid(std::ostream& out, const QuantGrid& grid);
QuantGrid read_grid(std::istream& in, GridKind kind);

} // namespace uniest
