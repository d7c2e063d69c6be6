#include "uniest/quantizer.hpp"

#include "uniest/channel.hpp"
#include "uniest/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace uniest {

QuantGrid::QuantGrid(std::vector<double> levels, GridKind kind) : levels_(std::move(levels)), kind_(kind) {
    if (levels_.empty()) throw std::invalid_argument("QuantGrid: no levels");
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (!std::isfinite(levels_[i])) throw std::invalid_argument("QuantGrid: non-finite level");
        if (i > 0 && !(levels_[i - 1] < levels_[i])) {
            throw std::invalid_argument("QuantGrid: levels must be strictly increasing");
        }
    }
}

QuantGrid QuantGrid::fixed(unsigned gamma) {
    if (gamma == 0) throw std::invalid_argument("QuantGrid::fixed: gamma must be positive");
    const long g = gamma;
    const long top = 2 * g * g;
    std::vector<double> levels(static_cast<std::size_t>(top + 1));
    for (long i = 0; i <= top; ++i) {
        levels[static_cast<std::size_t>(i)] = static_cast<double>(i - g * g) / static_cast<double>(g);
    }
    QuantGrid grid(std::move(levels), GridKind::Fixed);
    grid.gamma_ = gamma;
    return grid;
}

unsigned fixed_grid_gamma(std::size_t n, double log_base) {
    if (n < 2) throw std::invalid_argument("fixed grid needs n >= 2");
    if (!(log_base > 1.0) || !std::isfinite(log_base)) throw std::invalid_argument("log base must exceed 1");
    const double g = std::ceil(std::log(static_cast<double>(n)) / std::log(log_base));
    return static_cast<unsigned>(std::max(1.0, g));
}

QuantGrid build_fixed_grid(std::size_t n, double log_base) {
    return QuantGrid::fixed(fixed_grid_gamma(n, log_base));
}

QuantGrid build_uniform_grid(double lo, double hi, std::size_t count) {
    if (count == 0) throw std::invalid_argument("uniform grid needs at least one level");
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo <= hi)) {
        throw std::invalid_argument("uniform grid needs finite lo <= hi");
    }
    if (count == 1 || lo == hi) return QuantGrid({0.5 * (lo + hi)}, GridKind::Adaptive);
    std::vector<double> levels(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) levels[i] = lo + step * static_cast<double>(i);
    levels.back() = hi;
    return QuantGrid(std::move(levels), GridKind::Adaptive);
}

Symbol quantize_value(double x, const QuantGrid& grid) {
    const auto levels = grid.levels();
    if (!(x > levels.front())) return 0;  // also catches NaN
    if (x >= levels.back()) return static_cast<Symbol>(levels.size() - 1);
    const auto it = std::lower_bound(levels.begin(), levels.end(), x);
    const auto hi = static_cast<std::size_t>(it - levels.begin());
    const double d_lo = x - levels[hi - 1];
    const double d_hi = levels[hi] - x;
    return static_cast<Symbol>(d_hi < d_lo ? hi : hi - 1);
}

std::vector<Symbol> quantize(std::span<const double> x, const QuantGrid& grid) {
    std::vector<Symbol> out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [&](double v) { return quantize_value(v, grid); });
    return out;
}

std::vector<double> dequantize(std::span<const Symbol> symbols, const QuantGrid& grid) {
    std::vector<double> out(symbols.size());
    const auto levels = grid.levels();
    for (std::size_t i = 0; i < symbols.size(); ++i) out[i] = levels[symbols[i]];
    return out;
}

namespace {

// Negative log-likelihood as a function of one level's value, all other
// levels fixed. The operator is applied to x directly, so this works for
// every operator kind.
double level_nll(const ChannelModel& ch, std::vector<double>& x, std::span<const std::size_t> members,
                 double value) {
    for (auto i : members) x[i] = value;
    return -log_likelihood(ch, x);
}

double golden_section(const ChannelModel& ch, std::vector<double>& x, std::span<const std::size_t> members,
                      double lo, double hi, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = level_nll(ch, x, members, c);
    double fd = level_nll(ch, x, members, d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = level_nll(ch, x, members, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = level_nll(ch, x, members, d);
        }
    }
    return 0.5 * (a + b);
}

} // namespace

AdaptedGrid adapt_levels(std::span<const Symbol> symbols, const ChannelModel& ch, const QuantGrid& grid) {
    if (grid.kind() != GridKind::Adaptive) {
        throw InvalidOperation("adapt_levels: fixed grids are data-independent");
    }
    if (symbols.size() != ch.input_size()) throw std::invalid_argument("adapt_levels: length mismatch");

    const std::size_t A = grid.size();
    std::vector<std::vector<std::size_t>> members(A);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (symbols[i] >= A) throw std::invalid_argument("adapt_levels: symbol outside grid");
        members[symbols[i]].push_back(i);
    }

    std::vector<double> levels(grid.levels().begin(), grid.levels().end());
    std::vector<double> x = dequantize(symbols, grid);
    const auto& op = ch.op();
    const bool gaussian = ch.noise().gaussian_variance().has_value();

    if (gaussian && op.kind() != OperatorKind::Map) {
        // Closed form: with a = J * indicator(level k), moving the level by t
        // changes the residual to r - t a, minimized at t = <r, a> / <a, a>.
        std::vector<double> r = residual(ch, x);
        std::vector<double> a(r.size());
        for (std::size_t k = 0; k < A; ++k) {
            if (members[k].empty()) continue;
            if (op.kind() == OperatorKind::Identity) {
                double num = 0.0;
                for (auto i : members[k]) num += r[i];
                const double t = num / static_cast<double>(members[k].size());
                for (auto i : members[k]) r[i] -= t;
                levels[k] += t;
            } else {
                const auto& J = op.matrix();
                std::fill(a.begin(), a.end(), 0.0);
                for (auto i : members[k]) {
                    for (std::size_t m = 0; m < a.size(); ++m) a[m] += J(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(i));
                }
                const double aa = std::inner_product(a.begin(), a.end(), a.begin(), 0.0);
                if (aa <= 0.0) continue;
                const double t = std::inner_product(r.begin(), r.end(), a.begin(), 0.0) / aa;
                for (std::size_t m = 0; m < r.size(); ++m) r[m] -= t * a[m];
                levels[k] += t;
            }
        }
    } else {
        double reach = grid.max() - grid.min() + 1.0;
        for (double v : residual(ch, x)) reach = std::max(reach, std::abs(v) + 1.0);
        for (std::size_t k = 0; k < A; ++k) {
            if (members[k].empty()) continue;
            const double before = level_nll(ch, x, members[k], levels[k]);
            const double cand = golden_section(ch, x, members[k], levels[k] - reach, levels[k] + reach, 1e-9);
            const double after = level_nll(ch, x, members[k], cand);
            if (after <= before) {
                levels[k] = cand;
            }
            for (auto i : members[k]) x[i] = levels[k];
        }
    }

    // Re-sort and merge near-duplicates.
    std::vector<std::size_t> order(A);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return levels[i] < levels[j]; });
    std::vector<double> merged;
    std::vector<Symbol> remap(A);
    for (auto k : order) {
        if (!merged.empty() && levels[k] - merged.back() < 1e-12) {
            remap[k] = static_cast<Symbol>(merged.size() - 1);
            continue;
        }
        merged.push_back(levels[k]);
        remap[k] = static_cast<Symbol>(merged.size() - 1);
    }
    return {QuantGrid(std::move(merged), GridKind::Adaptive), std::move(remap)};
}

void write_grid(std::ostream& out, const QuantGrid& grid) {
    char buf[64];
    for (double v : grid.levels()) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        out << buf;
    }
}

QuantGrid read_grid(std::istream& in, GridKind kind) {
    std::vector<double> levels;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        try {
            std::size_t used = 0;
            levels.push_back(std::stod(line.substr(first), &used));
        } catch (const std::exception&) {
            throw std::invalid_argument("read_grid: bad level '" + line + "'");
        }
    }
    if (kind == GridKind::Fixed) {
        // Accept only a genuine fixed grid so gamma is recoverable.
        const auto gamma = static_cast<unsigned>(std::llround(levels.empty() ? 0.0 : levels.back()));
        if (gamma == 0) throw std::invalid_argument("read_grid: not a fixed grid");
        QuantGrid g = QuantGrid::fixed(gamma);
        if (g.levels().size() != levels.size() ||
            !std::equal(levels.begin(), levels.end(), g.levels().begin())) {
            throw std::invalid_argument("read_grid: levels do not form a fixed grid");
        }
        return g;
    }
    return QuantGrid(std::move(levels), kind);
}

} // namespace uniest
