#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string_view>

namespace ptap {

enum class MemCategory : int {
    input_matrices = 0,
    output_matrix,
    auxiliary_matrices, ///< C~ = AP, explicit P^T, stored C_s of the two-step method
    transient_hash,     ///< hash accumulators and received contribution buffers
    plan_cache,         ///< remote rows, send staging, exchange patterns
};

inline constexpr std::size_t kMemCategoryCount = 5;

std::string_view to_string(MemCategory c);

/// Byte counters per category for one rank.
///
/// Counts what the sparse containers report (index/value array capacity and
/// hash-table slots), not allocator or RSS numbers. `working` means every
/// category except the inputs; its peak is the triple-product memory.
class MemoryLedger {
public:
    void charge(MemCategory c, std::size_t bytes);
    void release(MemCategory c, std::size_t bytes);

    std::size_t current(MemCategory c) const { return current_[idx(c)]; }
    std::size_t peak(MemCategory c) const { return peak_[idx(c)]; }
    std::size_t current_working() const;
    std::size_t peak_working() const { return peak_working_; }
    std::size_t current_total() const { return current_working() + current(MemCategory::input_matrices); }

    /// Number of charge() calls with a nonzero amount. A reused container that
    /// never grows leaves this unchanged.
    std::size_t allocation_events() const { return allocation_events_; }

    /// Forget peaks (keeps current balances). Used between benchmark phases.
    void reset_peaks();

private:
    static std::size_t idx(MemCategory c) { return static_cast<std::size_t>(c); }

    std::array<std::size_t, kMemCategoryCount> current_{};
    std::array<std::size_t, kMemCategoryCount> peak_{};
    std::size_t peak_working_ = 0;
    std::size_t allocation_events_ = 0;
};

using LedgerPtr = std::shared_ptr<MemoryLedger>;

/// RAII charge against a ledger. Holding one keeps `bytes()` charged; reset or
/// destruction releases it. A default-constructed charge is inert.
class LedgerCharge {
public:
    LedgerCharge() = default;
    LedgerCharge(LedgerPtr ledger, MemCategory category, std::size_t bytes = 0);
    LedgerCharge(const LedgerCharge&) = delete;
    LedgerCharge& operator=(const LedgerCharge&) = delete;
    LedgerCharge(LedgerCharge&& other) noexcept;
    LedgerCharge& operator=(LedgerCharge&& other) noexcept;
    ~LedgerCharge();

    /// Adjust the held amount to exactly `bytes`.
    void set(std::size_t bytes);
    void reset() { set(0); }
    std::size_t bytes() const { return bytes_; }
    bool attached() const { return ledger_ != nullptr; }

private:
    LedgerPtr ledger_;
    MemCategory category_ = MemCategory::transient_hash;
    std::size_t bytes_ = 0;
};

} // namespace ptap
