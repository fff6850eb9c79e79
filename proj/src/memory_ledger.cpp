#include "ptap/memory_ledger.hpp"

#include <algorithm>
#include <utility>

#include "ptap/types.hpp"

namespace ptap {

std::string_view to_string(MemCategory c) {
    switch (c) {
    case MemCategory::input_matrices: return "input_matrices";
    case MemCategory::output_matrix: return "output_matrix";
    case MemCategory::auxiliary_matrices: return "auxiliary_matrices";
    case MemCategory::transient_hash: return "transient_hash";
    case MemCategory::plan_cache: return "plan_cache";
    }
    return "unknown";
}

void MemoryLedger::charge(MemCategory c, std::size_t bytes) {
    if (bytes == 0) {
        return;
    }
    ++allocation_events_;
    current_[idx(c)] += bytes;
    peak_[idx(c)] = std::max(peak_[idx(c)], current_[idx(c)]);
    peak_working_ = std::max(peak_working_, current_working());
}

void MemoryLedger::release(MemCategory c, std::size_t bytes) {
    if (bytes > current_[idx(c)]) {
        throw Error("memory ledger: releasing more " + std::string(to_string(c)) + " bytes than charged");
    }
    current_[idx(c)] -= bytes;
}

std::size_t MemoryLedger::current_working() const {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < kMemCategoryCount; ++i) {
        if (i != idx(MemCategory::input_matrices)) {
            sum += current_[i];
        }
    }
    return sum;
}

void MemoryLedger::reset_peaks() {
    peak_ = current_;
    peak_working_ = current_working();
}

LedgerCharge::LedgerCharge(LedgerPtr ledger, MemCategory category, std::size_t bytes)
    : ledger_(std::move(ledger)), category_(category) {
    set(bytes);
}

LedgerCharge::LedgerCharge(LedgerCharge&& other) noexcept
    : ledger_(std::move(other.ledger_)), category_(other.category_), bytes_(std::exchange(other.bytes_, 0)) {}

LedgerCharge& LedgerCharge::operator=(LedgerCharge&& other) noexcept {
    if (this != &other) {
        if (ledger_ && bytes_ > 0) {
            ledger_->release(category_, bytes_);
        }
        ledger_ = std::move(other.ledger_);
        category_ = other.category_;
        bytes_ = std::exchange(other.bytes_, 0);
    }
    return *this;
}

LedgerCharge::~LedgerCharge() {
    if (ledger_ && bytes_ > 0) {
        ledger_->release(category_, bytes_);
    }
}

void LedgerCharge::set(std::size_t bytes) {
    if (!ledger_) {
        bytes_ = bytes;
        return;
    }
    if (bytes > bytes_) {
        ledger_->charge(category_, bytes - bytes_);
    } else if (bytes < bytes_) {
        ledger_->release(category_, bytes_ - bytes);
    }
    bytes_ = bytes;
}

} // namespace ptap
