#pragma once

#include <array>
#include <cstddef>

namespace ptap {

enum class Phase { symbolic, numeric, gather, exchange, total };

inline constexpr std::size_t kPhaseCount = 5;

const char* to_string(Phase p);

/// CPU seconds consumed by the calling thread. A rank blocked in the harness
/// does not accumulate time, so per-rank figures are independent of the scheduler.
double thread_cpu_seconds();

/// Seconds accumulated per phase.
class PhaseTimer {
public:
    void add(Phase p, double seconds) { s_[static_cast<std::size_t>(p)] += seconds; }
    double seconds(Phase p) const { return s_[static_cast<std::size_t>(p)]; }
    void reset() { s_.fill(0.0); }

private:
    std::array<double, kPhaseCount> s_{};
};

/// Adds the thread CPU time of its lifetime to one phase.
class ScopedPhase {
public:
    ScopedPhase(PhaseTimer& t, Phase p) : t_(t), p_(p), start_(thread_cpu_seconds()) {}
    ~ScopedPhase() { t_.add(p_, thread_cpu_seconds() - start_); }
    ScopedPhase(const ScopedPhase&) = delete;
    ScopedPhase& operator=(const ScopedPhase&) = delete;

private:
    PhaseTimer& t_;
    Phase p_;
    double start_;
};

} // namespace ptap
