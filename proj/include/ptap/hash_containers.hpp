#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "ptap/memory_ledger.hpp"
#include "ptap/types.hpp"

namespace ptap {

namespace detail {

inline std::size_t hash_slot(index_t key, std::size_t mask) {
    // Fibonacci hashing; the high bits of the product are the well-mixed ones.
    const auto h = static_cast<std::uint64_t>(key) * 0x9E3779B97F4A7C15ull;
    return static_cast<std::size_t>(h ^ (h >> 29)) & mask;
}

inline constexpr index_t kEmptyKey = -1;
inline constexpr std::size_t kMinCapacity = 8;

} // namespace detail

/// Open-addressing hash set of column indices (linear probing, power-of-two
/// capacity, max load 3/4). clear() keeps the slot array for the next row.
class RowSet {
public:
    RowSet() = default;
    RowSet(const RowSet& other);
    RowSet& operator=(const RowSet& other);
    RowSet(RowSet&&) noexcept = default;
    RowSet& operator=(RowSet&&) noexcept = default;

    /// Returns true if `j` was not present.
    bool insert(index_t j);
    bool contains(index_t j) const;
    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    std::size_t capacity() const { return slots_.size(); }
    void clear();

    /// Appends members to `out` in increasing order.
    void sorted_keys(std::vector<index_t>& out) const;

    template <typename F>
    void for_each(F&& f) const {
        if (size_ == 0) {
            return;
        }
        for (index_t k : slots_) {
            if (k != detail::kEmptyKey) {
                f(k);
            }
        }
    }

    std::size_t bytes() const { return slots_.capacity() * sizeof(index_t); }
    std::size_t allocation_count() const { return allocations_; }

    /// Growth of this container is charged to `ledger` under `category` from now on.
    void track(LedgerPtr ledger, MemCategory category);

private:
    void grow();

    std::vector<index_t> slots_;
    std::size_t size_ = 0;
    std::size_t allocations_ = 0;
    LedgerCharge charge_;
};

/// Open-addressing hash map column index -> value with "+=" insertion.
class RowAccumulator {
public:
    RowAccumulator() = default;
    RowAccumulator(const RowAccumulator& other);
    RowAccumulator& operator=(const RowAccumulator& other);
    RowAccumulator(RowAccumulator&&) noexcept = default;
    RowAccumulator& operator=(RowAccumulator&&) noexcept = default;

    void add(index_t j, real v);
    bool contains(index_t j) const;
    /// Value stored under `j`, 0 when absent.
    real get(index_t j) const;
    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }
    std::size_t capacity() const { return keys_.size(); }
    void clear();

    /// Appends (column, value) pairs to `out` in strictly increasing column order
    /// and clears the accumulator.
    void drain_sorted(std::vector<std::pair<index_t, real>>& out);

    std::size_t bytes() const { return keys_.capacity() * sizeof(index_t) + vals_.capacity() * sizeof(real); }
    std::size_t allocation_count() const { return allocations_; }

    void track(LedgerPtr ledger, MemCategory category);

private:
    void grow();

    std::vector<index_t> keys_;
    std::vector<real> vals_;
    std::size_t size_ = 0;
    std::size_t allocations_ = 0;
    LedgerCharge charge_;
};

} // namespace ptap
