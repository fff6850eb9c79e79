#include "ptap/hash_containers.hpp"

#include <algorithm>

namespace ptap {

using detail::hash_slot;
using detail::kEmptyKey;
using detail::kMinCapacity;

// ---------------------------------------------------------------- RowSet

RowSet::RowSet(const RowSet& other) : slots_(other.slots_), size_(other.size_) {}

RowSet& RowSet::operator=(const RowSet& other) {
    if (this != &other) {
        slots_ = other.slots_;
        size_ = other.size_;
        ++allocations_;
        charge_.set(bytes());
    }
    return *this;
}

bool RowSet::insert(index_t j) {
    if ((size_ + 1) * 4 > slots_.size() * 3) {
        grow();
    }
    const std::size_t mask = slots_.size() - 1;
    for (std::size_t s = hash_slot(j, mask);; s = (s + 1) & mask) {
        if (slots_[s] == j) {
            return false;
        }
        if (slots_[s] == kEmptyKey) {
            slots_[s] = j;
            ++size_;
            return true;
        }
    }
}

bool RowSet::contains(index_t j) const {
    if (size_ == 0) {
        return false;
    }
    const std::size_t mask = slots_.size() - 1;
    for (std::size_t s = hash_slot(j, mask);; s = (s + 1) & mask) {
        if (slots_[s] == j) {
            return true;
        }
        if (slots_[s] == kEmptyKey) {
            return false;
        }
    }
}

void RowSet::clear() {
    if (size_ != 0) {
        std::fill(slots_.begin(), slots_.end(), kEmptyKey);
        size_ = 0;
    }
}

void RowSet::sorted_keys(std::vector<index_t>& out) const {
    const auto first = out.size();
    for_each([&](index_t k) { out.push_back(k); });
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
}

void RowSet::track(LedgerPtr ledger, MemCategory category) {
    charge_ = LedgerCharge(std::move(ledger), category, bytes());
}

void RowSet::grow() {
    const std::size_t cap = std::max(kMinCapacity, slots_.size() * 2);
    std::vector<index_t> old(cap, kEmptyKey);
    old.swap(slots_);
    const std::size_t mask = cap - 1;
    for (index_t k : old) {
        if (k == kEmptyKey) {
            continue;
        }
        std::size_t s = hash_slot(k, mask);
        while (slots_[s] != kEmptyKey) {
            s = (s + 1) & mask;
        }
        slots_[s] = k;
    }
    ++allocations_;
    charge_.set(bytes());
}

// ------------------------------------------------------- RowAccumulator

RowAccumulator::RowAccumulator(const RowAccumulator& other)
    : keys_(other.keys_), vals_(other.vals_), size_(other.size_) {}

RowAccumulator& RowAccumulator::operator=(const RowAccumulator& other) {
    if (this != &other) {
        keys_ = other.keys_;
        vals_ = other.vals_;
        size_ = other.size_;
        ++allocations_;
        charge_.set(bytes());
    }
    return *this;
}

void RowAccumulator::add(index_t j, real v) {
    if ((size_ + 1) * 4 > keys_.size() * 3) {
        grow();
    }
    const std::size_t mask = keys_.size() - 1;
    for (std::size_t s = hash_slot(j, mask);; s = (s + 1) & mask) {
        if (keys_[s] == j) {
            vals_[s] += v;
            return;
        }
        if (keys_[s] == kEmptyKey) {
            keys_[s] = j;
            vals_[s] = v;
            ++size_;
            return;
        }
    }
}

bool RowAccumulator::contains(index_t j) const {
    if (size_ == 0) {
        return false;
    }
    const std::size_t mask = keys_.size() - 1;
    for (std::size_t s = hash_slot(j, mask);; s = (s + 1) & mask) {
        if (keys_[s] == j) {
            return true;
        }
        if (keys_[s] == kEmptyKey) {
            return false;
        }
    }
}

real RowAccumulator::get(index_t j) const {
    if (size_ == 0) {
        return 0.0;
    }
    const std::size_t mask = keys_.size() - 1;
    for (std::size_t s = hash_slot(j, mask);; s = (s + 1) & mask) {
        if (keys_[s] == j) {
            return vals_[s];
        }
        if (keys_[s] == kEmptyKey) {
            return 0.0;
        }
    }
}

void RowAccumulator::clear() {
    if (size_ != 0) {
        std::fill(keys_.begin(), keys_.end(), kEmptyKey);
        size_ = 0;
    }
}

void RowAccumulator::drain_sorted(std::vector<std::pair<index_t, real>>& out) {
    const auto first = out.size();
    if (size_ != 0) {
        for (std::size_t s = 0; s < keys_.size(); ++s) {
            if (keys_[s] != kEmptyKey) {
                out.emplace_back(keys_[s], vals_[s]);
                keys_[s] = kEmptyKey;
            }
        }
        size_ = 0;
    }
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
}

void RowAccumulator::track(LedgerPtr ledger, MemCategory category) {
    charge_ = LedgerCharge(std::move(ledger), category, bytes());
}

void RowAccumulator::grow() {
    const std::size_t cap = std::max(kMinCapacity, keys_.size() * 2);
    std::vector<index_t> old_keys(cap, kEmptyKey);
    std::vector<real> old_vals(cap, 0.0);
    old_keys.swap(keys_);
    old_vals.swap(vals_);
    const std::size_t mask = cap - 1;
    for (std::size_t i = 0; i < old_keys.size(); ++i) {
        if (old_keys[i] == kEmptyKey) {
            continue;
        }
        std::size_t s = hash_slot(old_keys[i], mask);
        while (keys_[s] != kEmptyKey) {
            s = (s + 1) & mask;
        }
        keys_[s] = old_keys[i];
        vals_[s] = old_vals[i];
    }
    ++allocations_;
    charge_.set(bytes());
}

} // namespace ptap
