#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

#include "ptap/memory_ledger.hpp"
#include "ptap/timer.hpp"
#include "ptap/types.hpp"

namespace ptap {

enum class Scheduler {
    sequential, ///< one rank runs at a time, hand-off in rank order when it blocks
    concurrent, ///< one OS thread per rank, free-running
};

enum class MessageKind : std::uint8_t { request, reply, contribution, user };

const char* to_string(MessageKind k);

using Bytes = std::vector<std::byte>;

/// One point-to-point message as seen by the trace. `step` is the
/// collective round the sender was in (0 before any collective).
struct MessageRecord {
    std::uint64_t step = 0;
    rank_t sender = 0;
    rank_t receiver = 0;
    std::size_t bytes = 0;
    MessageKind kind = MessageKind::user;

    friend bool operator==(const MessageRecord&, const MessageRecord&) = default;
};

/// Newline-delimited "step sender receiver bytes kind" records.
void write_trace(std::ostream& out, const std::vector<MessageRecord>& trace);

/// Per-rank instrumentation counters. Incremented by the algorithms, read by tests and reports.
struct KernelCounters {
    std::size_t symbolic_ap = 0;          ///< row-wise AP symbolic passes
    std::size_t numeric_ap = 0;           ///< row-wise AP numeric passes
    std::size_t symbolic_transpose = 0;   ///< explicit P^T builds (two-step)
    std::size_t symbolic_triple = 0;      ///< triple-product symbolic phases (any algorithm)
    std::size_t numeric_triple = 0;       ///< triple-product numeric phases
    std::size_t ap_row_symbolic = 0;      ///< per-row symbolic AP kernel invocations
    std::size_t ap_row_numeric = 0;       ///< per-row numeric AP kernel invocations
    std::size_t rows_fill_checked = 0;    ///< rows whose numeric fill was checked against capacity
    std::size_t gathers = 0;              ///< structural remote-row gathers
    std::size_t value_updates = 0;        ///< values-only remote-row refreshes
    std::size_t exchanges = 0;            ///< contribution exchanges

    friend bool operator==(const KernelCounters&, const KernelCounters&) = default;
};

namespace detail {
class World;
}

/// A rank's view of the harness: its id, its mailboxes, its ledger and counters.
///
/// Messages between a fixed (sender, receiver) pair arrive in send order. Sends
/// never block. Each message is stamped with the sender's collective round;
/// collectives call next_round() first so stray messages from a neighbour that
/// has already moved on are never consumed early.
class RankContext {
public:
    rank_t rank() const { return rank_; }
    int size() const;

    void send(rank_t dest, MessageKind kind, Bytes payload);

    /// Blocks until the next message from `source` arrives. It must be of `kind`
    /// and belong to the current round, otherwise CommError.
    Bytes recv(rank_t source, MessageKind kind);

    /// Takes every already-delivered message of `kind` for the current round,
    /// ordered by ascending source rank.
    std::vector<std::pair<rank_t, Bytes>> drain(MessageKind kind);

    void barrier();

    std::uint64_t next_round() { return ++round_; }
    std::uint64_t round() const { return round_; }

    MemoryLedger& ledger() { return *ledger_; }
    const LedgerPtr& ledger_ptr() const { return ledger_; }
    KernelCounters& counters() { return *counters_; }
    PhaseTimer& timer() { return *timer_; }

private:
    friend class detail::World;
    RankContext(detail::World& world, rank_t rank, LedgerPtr ledger, KernelCounters* counters, PhaseTimer* timer)
        : world_(&world), rank_(rank), ledger_(std::move(ledger)), counters_(counters), timer_(timer) {}

    detail::World* world_;
    rank_t rank_;
    std::uint64_t round_ = 0;
    LedgerPtr ledger_;
    KernelCounters* counters_;
    PhaseTimer* timer_;
};

struct HarnessOptions {
    Scheduler scheduler = Scheduler::sequential;
    bool record_trace = true;
};

/// Runs `np` rank programs to completion inside one process.
///
/// Ledgers and counters persist across run() calls on the same harness. If
/// every unfinished rank is blocked with nothing deliverable, each blocked
/// rank gets a DeadlockError naming who waits on whom; run() rethrows the
/// first non-deadlock rank error if there was one, else the deadlock.
class Harness {
public:
    explicit Harness(int np, HarnessOptions options = {});
    ~Harness();
    Harness(const Harness&) = delete;
    Harness& operator=(const Harness&) = delete;

    int size() const { return np_; }

    template <typename F>
    auto run(F&& program) {
        using R = std::invoke_result_t<F&, RankContext&>;
        if constexpr (std::is_void_v<R>) {
            run_erased([&](RankContext& ctx) { program(ctx); });
        } else {
            std::vector<std::optional<R>> slots(static_cast<std::size_t>(np_));
            run_erased([&](RankContext& ctx) { slots[static_cast<std::size_t>(ctx.rank())].emplace(program(ctx)); });
            std::vector<R> out;
            out.reserve(slots.size());
            for (auto& s : slots) {
                out.push_back(std::move(*s));
            }
            return out;
        }
    }

    const std::vector<MessageRecord>& trace() const { return trace_; }
    void clear_trace() { trace_.clear(); }
    const MemoryLedger& ledger(rank_t r) const { return *ledgers_[static_cast<std::size_t>(r)]; }
    const LedgerPtr& ledger_ptr(rank_t r) const { return ledgers_[static_cast<std::size_t>(r)]; }
    const KernelCounters& counters(rank_t r) const { return counters_[static_cast<std::size_t>(r)]; }
    const PhaseTimer& timer(rank_t r) const { return timers_[static_cast<std::size_t>(r)]; }

private:
    void run_erased(const std::function<void(RankContext&)>& program);

    int np_;
    HarnessOptions options_;
    std::vector<LedgerPtr> ledgers_;
    std::vector<KernelCounters> counters_;
    std::vector<PhaseTimer> timers_;
    std::vector<MessageRecord> trace_;
};

/// One-shot harness: runs `program` on `np` ranks and returns per-rank results in rank order.
template <typename F>
auto spawn_ranks(int np, F&& program, HarnessOptions options = {}) {
    Harness h(np, options);
    return h.run(std::forward<F>(program));
}

// ------------------------------------------------------------ wire helpers

/// Little-endian framing of 64-bit integers and IEEE doubles.
class WireWriter {
public:
    void put_index(index_t v);
    void put_real(real v);
    void put_indices(const index_t* data, std::size_t n);
    void put_reals(const real* data, std::size_t n);
    Bytes take() { return std::move(buf_); }
    std::size_t size() const { return buf_.size(); }

private:
    Bytes buf_;
};

class WireReader {
public:
    explicit WireReader(const Bytes& buf) : buf_(&buf) {}
    index_t get_index();
    real get_real();
    bool done() const { return pos_ == buf_->size(); }
    std::size_t remaining() const { return buf_->size() - pos_; }

private:
    const Bytes* buf_;
    std::size_t pos_ = 0;
};

} // namespace ptap
