#pragma once

#include "uniest/quantizer.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace uniest {

/// Occurrence counts of (order-q context, symbol) pairs over a sequence.
///
/// Contexts are circular: position i is conditioned on the q symbols
/// preceding it, wrapping around the end, so every position contributes
/// exactly one count. The object owns its copy of the sequence and keeps
/// running sums of n*log2(n) over joint and context cells, which makes the
/// coding length available in O(1) and single-symbol updates O(q).
///
/// Tables are dense when alphabet^order <= 4096 and hashed otherwise.
class ContextCounts {
public:
    ContextCounts(std::span<const Symbol> symbols, std::size_t alphabet, std::size_t order);

    std::size_t order() const noexcept { return order_; }
    std::size_t alphabet() const noexcept { return alphabet_; }
    std::size_t length() const noexcept { return symbols_.size(); }
    std::span<const Symbol> symbols() const noexcept { return symbols_; }
    bool dense() const noexcept { return dense_; }

    /// Context index of position i (base-alphabet digits, nearest symbol
    /// least significant).
    std::uint64_t context_of(std::size_t i) const;
    std::uint32_t joint(std::uint64_t context, Symbol a) const;
    std::uint32_t context_total(std::uint64_t context) const;

    /// N * H_q in bits from the running sums.
    double coding_length() const noexcept;

    /// Visits every nonzero joint cell as (context, symbol, count).
    template <class F>
    void for_each_cell(F&& f) const {
        if (dense_) {
            for (std::uint64_t key = 0; key < dense_joint_.size(); ++key) {
                if (dense_joint_[key] != 0) f(key / alphabet_, static_cast<Symbol>(key % alphabet_), dense_joint_[key]);
            }
        } else {
            for (const auto& [key, n] : sparse_joint_) {
                if (n != 0) f(key / alphabet_, static_cast<Symbol>(key % alphabet_), n);
            }
        }
    }

    /// Commits symbol s at position i.
    void set_symbol(std::size_t i, Symbol s);

    // Candidate scan for one position: detach(i) removes every cell that
    // depends on x[i]; probe(s) returns the coding length with x[i] = s and
    // leaves the tables unchanged; attach(s) commits s. Between detach and
    // attach only probe may be called.
    void detach(std::size_t i);
    double probe(Symbol s);
    void attach(Symbol s);

    /// Recomputes the running sums from the tables.
    void refresh();

private:
    void bump_joint(std::uint64_t key, int delta);
    void bump_context(std::uint64_t key, int delta);
    double nlogn(std::uint32_t n) const { return nlogn_[n]; }
    void add_position(std::uint64_t context, Symbol s, int delta);

    std::vector<Symbol> symbols_;
    std::size_t alphabet_;
    std::size_t order_;
    std::uint64_t num_contexts_;
    bool dense_;
    std::vector<std::uint32_t> dense_joint_;
    std::vector<std::uint32_t> dense_context_;
    std::unordered_map<std::uint64_t, std::uint32_t> sparse_joint_;
    std::unordered_map<std::uint64_t, std::uint32_t> sparse_context_;
    std::vector<double> nlogn_;  // n log2 n for n = 0..N
    long double sum_joint_ = 0;   // sum of n(u,a) log2 n(u,a)
    long double sum_context_ = 0; // sum of n(u) log2 n(u)

    // detach state
    std::size_t detached_ = SIZE_MAX;
    std::vector<std::uint64_t> base_context_;  // contexts of i..i+q with x[i] zeroed
    std::vector<std::uint64_t> digit_;         // weight of x[i] in each of those contexts
};

/// Counts for `symbols` over an alphabet of `alphabet` symbols. Throws
/// std::invalid_argument when order >= length or the context space does not
/// fit in 64 bits.
ContextCounts build_counts(std::span<const Symbol> symbols, std::size_t alphabet, std::size_t order);

/// Conditional empirical entropy in bits per symbol, recomputed from the cells.
double h_q(const ContextCounts& counts);

/// Changes position i from old_symbol to new_symbol in place and returns the
/// new H_q (bits/symbol).
double delta_h_q(ContextCounts& counts, std::size_t i, Symbol old_symbol, Symbol new_symbol);

/// max(1, ceil(0.5 * log_A(N))), clipped to N - 1.
std::size_t default_order(std::size_t length, std::size_t alphabet);

} // namespace uniest
