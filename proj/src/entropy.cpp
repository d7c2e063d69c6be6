#include "uniest/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uniest {

namespace {

constexpr std::uint64_t kDenseContextLimit = 4096;

// alphabet^power, or 0 on overflow.
std::uint64_t checked_pow(std::uint64_t base, std::size_t power) {
    std::uint64_t out = 1;
    for (std::size_t i = 0; i < power; ++i) {
        if (base != 0 && out > std::numeric_limits<std::uint64_t>::max() / base) return 0;
        out *= base;
    }
    return out;
}

} // namespace

ContextCounts::ContextCounts(std::span<const Symbol> symbols, std::size_t alphabet, std::size_t order)
    : symbols_(symbols.begin(), symbols.end()), alphabet_(alphabet), order_(order) {
    if (symbols_.empty()) throw std::invalid_argument("context counts need a nonempty sequence");
    if (alphabet == 0) throw std::invalid_argument("alphabet must be nonempty");
    if (order >= symbols_.size()) throw std::invalid_argument("order must be smaller than the sequence length");
    if (symbols_.size() > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("sequence too long");
    for (Symbol s : symbols_) {
        if (s >= alphabet) throw std::invalid_argument("symbol outside alphabet");
    }
    num_contexts_ = checked_pow(alphabet, order);
    if (num_contexts_ == 0 || checked_pow(alphabet, order + 1) == 0) {
        throw std::invalid_argument("context space does not fit in 64 bits");
    }
    dense_ = num_contexts_ <= kDenseContextLimit;
    if (dense_) {
        dense_context_.assign(num_contexts_, 0);
        dense_joint_.assign(num_contexts_ * alphabet, 0);
    }

    const std::size_t n = symbols_.size();
    nlogn_.resize(n + 1);
    nlogn_[0] = 0.0;
    for (std::size_t k = 1; k <= n; ++k) nlogn_[k] = static_cast<double>(k) * std::log2(static_cast<double>(k));

    for (std::size_t i = 0; i < n; ++i) {
        const auto u = context_of(i);
        if (dense_) {
            ++dense_joint_[u * alphabet_ + symbols_[i]];
            ++dense_context_[u];
        } else {
            ++sparse_joint_[u * alphabet_ + symbols_[i]];
            ++sparse_context_[u];
        }
    }
    refresh();

    base_context_.resize(order_ + 1);
    digit_.resize(order_ + 1);
}

std::uint64_t ContextCounts::context_of(std::size_t i) const {
    const std::size_t n = symbols_.size();
    std::uint64_t key = 0;
    // Most distant symbol is most significant.
    for (std::size_t k = order_; k >= 1; --k) {
        key = key * alphabet_ + symbols_[(i + n - k) % n];
    }
    return key;
}

std::uint32_t ContextCounts::joint(std::uint64_t context, Symbol a) const {
    const auto key = context * alphabet_ + a;
    if (dense_) return key < dense_joint_.size() ? dense_joint_[key] : 0;
    const auto it = sparse_joint_.find(key);
    return it == sparse_joint_.end() ? 0 : it->second;
}

std::uint32_t ContextCounts::context_total(std::uint64_t context) const {
    if (dense_) return context < dense_context_.size() ? dense_context_[context] : 0;
    const auto it = sparse_context_.find(context);
    return it == sparse_context_.end() ? 0 : it->second;
}

double ContextCounts::coding_length() const noexcept {
    const long double v = sum_context_ - sum_joint_;
    return v > 0 ? static_cast<double>(v) : 0.0;
}

void ContextCounts::bump_joint(std::uint64_t key, int delta) {
    std::uint32_t* cell;
    if (dense_) {
        cell = &dense_joint_[key];
    } else {
        cell = &sparse_joint_[key];
    }
    const std::uint32_t before = *cell;
    *cell = static_cast<std::uint32_t>(static_cast<int>(before) + delta);
    sum_joint_ += static_cast<long double>(nlogn_[*cell]) - static_cast<long double>(nlogn_[before]);
    if (!dense_ && *cell == 0) sparse_joint_.erase(key);
}

void ContextCounts::bump_context(std::uint64_t key, int delta) {
    std::uint32_t* cell;
    if (dense_) {
        cell = &dense_context_[key];
    } else {
        cell = &sparse_context_[key];
    }
    const std::uint32_t before = *cell;
    *cell = static_cast<std::uint32_t>(static_cast<int>(before) + delta);
    sum_context_ += static_cast<long double>(nlogn_[*cell]) - static_cast<long double>(nlogn_[before]);
    if (!dense_ && *cell == 0) sparse_context_.erase(key);
}

void ContextCounts::add_position(std::uint64_t context, Symbol s, int delta) {
    bump_joint(context * alphabet_ + s, delta);
    bump_context(context, delta);
}

void ContextCounts::detach(std::size_t i) {
    const std::size_t n = symbols_.size();
    if (i >= n) throw std::invalid_argument("position out of range");
    if (detached_ != SIZE_MAX) throw std::logic_error("detach called twice");
    detached_ = i;
    const Symbol old = symbols_[i];
    // Position i+k (k >= 1) sees x[i] as its k-th most recent symbol, which is
    // digit k-1 of its context.
    std::uint64_t weight = 1;
    for (std::size_t k = 0; k <= order_; ++k) {
        const std::size_t j = (i + k) % n;
        const auto ctx = context_of(j);
        add_position(ctx, symbols_[j], -1);
        if (k == 0) {
            base_context_[0] = ctx;
            digit_[0] = 0;
        } else {
            base_context_[k] = ctx - old * weight;
            digit_[k] = weight;
            weight *= alphabet_;
        }
    }
}

double ContextCounts::probe(Symbol s) {
    if (detached_ == SIZE_MAX) throw std::logic_error("probe without detach");
    if (s >= alphabet_) throw std::invalid_argument("symbol outside alphabet");
    const std::size_t n = symbols_.size();
    const std::size_t i = detached_;
    add_position(base_context_[0], s, +1);
    for (std::size_t k = 1; k <= order_; ++k) {
        add_position(base_context_[k] + s * digit_[k], symbols_[(i + k) % n], +1);
    }
    const double length = coding_length();
    add_position(base_context_[0], s, -1);
    for (std::size_t k = 1; k <= order_; ++k) {
        add_position(base_context_[k] + s * digit_[k], symbols_[(i + k) % n], -1);
    }
    return length;
}

void ContextCounts::attach(Symbol s) {
    if (detached_ == SIZE_MAX) throw std::logic_error("attach without detach");
    if (s >= alphabet_) throw std::invalid_argument("symbol outside alphabet");
    const std::size_t n = symbols_.size();
    const std::size_t i = detached_;
    symbols_[i] = s;
    add_position(base_context_[0], s, +1);
    for (std::size_t k = 1; k <= order_; ++k) {
        add_position(base_context_[k] + s * digit_[k], symbols_[(i + k) % n], +1);
    }
    detached_ = SIZE_MAX;
}

void ContextCounts::set_symbol(std::size_t i, Symbol s) {
    if (i >= symbols_.size()) throw std::invalid_argument("position out of range");
    if (s >= alphabet_) throw std::invalid_argument("symbol outside alphabet");
    if (symbols_[i] == s) return;
    detach(i);
    attach(s);
}

void ContextCounts::refresh() {
    long double joint = 0, context = 0;
    if (dense_) {
        for (auto c : dense_joint_) joint += nlogn_[c];
        for (auto c : dense_context_) context += nlogn_[c];
    } else {
        for (const auto& kv : sparse_joint_) joint += nlogn_[kv.second];
        for (const auto& kv : sparse_context_) context += nlogn_[kv.second];
    }
    sum_joint_ = joint;
    sum_context_ = context;
}

ContextCounts build_counts(std::span<const Symbol> symbols, std::size_t alphabet, std::size_t order) {
    return ContextCounts(symbols, alphabet, order);
}

double h_q(const ContextCounts& counts) {
    long double bits = 0;
    counts.for_each_cell([&](std::uint64_t u, Symbol, std::uint32_t n) {
        const auto total = counts.context_total(u);
        if (n != total) bits += static_cast<long double>(n) * std::log2(static_cast<long double>(total) / n);
    });
    return static_cast<double>(bits / static_cast<long double>(counts.length()));
}

double delta_h_q(ContextCounts& counts, std::size_t i, Symbol old_symbol, Symbol new_symbol) {
    if (i >= counts.length()) throw std::invalid_argument("position out of range");
    if (counts.symbols()[i] != old_symbol) throw std::invalid_argument("old symbol does not match the sequence");
    counts.set_symbol(i, new_symbol);
    return counts.coding_length() / static_cast<double>(counts.length());
}

std::size_t default_order(std::size_t length, std::size_t alphabet) {
    if (length < 2) return 0;
    std::size_t q = 1;
    if (alphabet >= 2) {
        const double v = 0.5 * std::log(static_cast<double>(length)) / std::log(static_cast<double>(alphabet));
        q = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(v - 1e-12)));
    }
    return std::min(q, length - 1);
}

} // namespace uniest
