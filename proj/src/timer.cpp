#include "ptap/timer.hpp"

#include <ctime>

namespace ptap {

const char* to_string(Phase p) {
    switch (p) {
    case Phase::symbolic: return "symbolic";
    case Phase::numeric: return "numeric";
    case Phase::gather: return "gather";
    case Phase::exchange: return "exchange";
    case Phase::total: return "total";
    }
    return "unknown";
}

double thread_cpu_seconds() {
    timespec ts{};
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

} // namespace ptap
