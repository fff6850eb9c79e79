#include "ptap/comm.hpp"

#include <bit>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

namespace ptap {

const char* to_string(MessageKind k) {
    switch (k) {
    case MessageKind::request: return "request";
    case MessageKind::reply: return "reply";
    case MessageKind::contribution: return "contribution";
    case MessageKind::user: return "user";
    }
    return "unknown";
}

void write_trace(std::ostream& out, const std::vector<MessageRecord>& trace) {
    for (const auto& m : trace) {
        out << m.step << ' ' << m.sender << ' ' << m.receiver << ' ' << m.bytes << ' ' << to_string(m.kind) << '\n';
    }
}

namespace detail {

class World {
public:
    World(int np, Scheduler scheduler, bool record)
        : np_(np), scheduler_(scheduler), record_(record),
          boxes_(static_cast<std::size_t>(np), std::vector<std::deque<Message>>(static_cast<std::size_t>(np))),
          state_(static_cast<std::size_t>(np)) {}

    void run(const std::function<void(RankContext&)>& program, std::vector<LedgerPtr>& ledgers,
             std::vector<KernelCounters>& counters, std::vector<PhaseTimer>& timers) {
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(np_));
        std::vector<char> deadlock_error(static_cast<std::size_t>(np_), 0);
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(np_));
        for (rank_t r = 0; r < np_; ++r) {
            threads.emplace_back([&, r] {
                RankContext ctx(*this, r, ledgers[static_cast<std::size_t>(r)], &counters[static_cast<std::size_t>(r)],
                                &timers[static_cast<std::size_t>(r)]);
                try {
                    start(r);
                    program(ctx);
                } catch (const DeadlockError&) {
                    errors[static_cast<std::size_t>(r)] = std::current_exception();
                    deadlock_error[static_cast<std::size_t>(r)] = 1;
                } catch (...) {
                    errors[static_cast<std::size_t>(r)] = std::current_exception();
                }
                finish(r);
            });
        }
        for (auto& t : threads) {
            t.join();
        }
        for (rank_t r = 0; r < np_; ++r) {
            if (errors[r] && !deadlock_error[r]) {
                std::rethrow_exception(errors[r]);
            }
        }
        if (deadlocked_) {
            throw DeadlockError(diagnostic_);
        }
    }

    int size() const { return np_; }

    void send(rank_t src, std::uint64_t round, rank_t dest, MessageKind kind, Bytes payload) {
        if (dest < 0 || dest >= np_) {
            throw CommError("rank " + std::to_string(src) + " sent to nonexistent rank " + std::to_string(dest));
        }
        std::lock_guard lk(mu_);
        if (record_) {
            trace_.push_back({round, src, dest, payload.size(), kind});
        }
        boxes_[dest][src].push_back({round, kind, std::move(payload)});
        if (scheduler_ == Scheduler::concurrent) {
            cv_.notify_all();
        }
    }

    Bytes recv(rank_t self, std::uint64_t round, rank_t src, MessageKind kind) {
        if (src < 0 || src >= np_) {
            throw CommError("rank " + std::to_string(self) + " receives from nonexistent rank " + std::to_string(src));
        }
        std::unique_lock lk(mu_);
        auto& st = state_[self];
        st.wait = Wait::recv;
        st.peer = src;
        block(self, lk);
        auto& q = boxes_[self][src];
        Message& m = q.front();
        if (m.kind != kind || m.round != round) {
            throw CommError("rank " + std::to_string(self) + " expected " + to_string(kind) + " (round " +
                            std::to_string(round) + ") from rank " + std::to_string(src) + " but got " +
                            to_string(m.kind) + " (round " + std::to_string(m.round) + ")");
        }
        Bytes out = std::move(m.payload);
        q.pop_front();
        return out;
    }

    std::vector<std::pair<rank_t, Bytes>> drain(rank_t self, std::uint64_t round, MessageKind kind) {
        std::lock_guard lk(mu_);
        std::vector<std::pair<rank_t, Bytes>> out;
        for (rank_t src = 0; src < np_; ++src) {
            auto& q = boxes_[self][src];
            while (!q.empty() && q.front().round == round && q.front().kind == kind) {
                out.emplace_back(src, std::move(q.front().payload));
                q.pop_front();
            }
        }
        return out;
    }

    void barrier(rank_t self) {
        std::unique_lock lk(mu_);
        auto& st = state_[self];
        st.wait = Wait::barrier;
        st.barrier_gen = barrier_gen_;
        if (++barrier_arrived_ == np_) {
            barrier_arrived_ = 0;
            ++barrier_gen_;
            if (scheduler_ == Scheduler::concurrent) {
                cv_.notify_all();
            }
        }
        block(self, lk);
    }

    std::vector<MessageRecord> take_trace() { return std::move(trace_); }

private:
    struct Message {
        std::uint64_t round;
        MessageKind kind;
        Bytes payload;
    };

    enum class Wait { none, recv, barrier };

    struct RankState {
        bool started = false;
        bool done = false;
        Wait wait = Wait::none;
        rank_t peer = -1;
        std::uint64_t barrier_gen = 0;
    };

    bool satisfied(rank_t r) const {
        const auto& st = state_[r];
        if (st.done) {
            return false;
        }
        switch (st.wait) {
        case Wait::none: return true;
        case Wait::recv: return !boxes_[r][st.peer].empty();
        case Wait::barrier: return barrier_gen_ != st.barrier_gen;
        }
        return false;
    }

    void start(rank_t r) {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return deadlocked_ || scheduler_ == Scheduler::concurrent || turn_ == r; });
        state_[r].started = true;
        if (deadlocked_) {
            throw DeadlockError(diagnostic_);
        }
    }

    void finish(rank_t r) {
        std::unique_lock lk(mu_);
        state_[r].done = true;
        state_[r].wait = Wait::none;
        if (scheduler_ == Scheduler::sequential) {
            if (turn_ == r) {
                hand_off(r);
            }
        } else {
            check_deadlock();
        }
    }

    // Caller has set state_[self].wait; returns with the wait satisfied.
    void block(rank_t self, std::unique_lock<std::mutex>& lk) {
        auto& st = state_[self];
        if (deadlocked_) {
            throw DeadlockError(diagnostic_);
        }
        if (!satisfied(self)) {
            if (scheduler_ == Scheduler::sequential) {
                hand_off(self);
            } else {
                check_deadlock();
            }
            cv_.wait(lk, [&] {
                return deadlocked_ || (satisfied(self) && (scheduler_ == Scheduler::concurrent || turn_ == self));
            });
            if (deadlocked_) {
                throw DeadlockError(diagnostic_);
            }
        }
        st.wait = Wait::none;
    }

    // Sequential scheduler: give the turn to the next runnable rank after `from`.
    void hand_off(rank_t from) {
        for (int k = 1; k <= np_; ++k) {
            const rank_t r = (from + k) % np_;
            if (satisfied(r)) {
                turn_ = r;
                cv_.notify_all();
                return;
            }
        }
        declare_deadlock_if_stuck();
    }

    void check_deadlock() {
        for (rank_t r = 0; r < np_; ++r) {
            if (satisfied(r)) {
                return;
            }
        }
        declare_deadlock_if_stuck();
    }

    void declare_deadlock_if_stuck() {
        if (deadlocked_) {
            return;
        }
        bool any_live = false;
        std::ostringstream os;
        os << "deadlock:";
        for (rank_t r = 0; r < np_; ++r) {
            const auto& st = state_[r];
            if (st.done) {
                continue;
            }
            any_live = true;
            if (st.wait == Wait::recv) {
                os << " rank " << r << " waits for a message from rank " << st.peer << ';';
            } else if (st.wait == Wait::barrier) {
                os << " rank " << r << " waits at a barrier;";
            }
        }
        if (!any_live) {
            return;
        }
        diagnostic_ = os.str();
        diagnostic_.pop_back();
        deadlocked_ = true;
        cv_.notify_all();
    }

    int np_;
    Scheduler scheduler_;
    bool record_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::vector<std::vector<std::deque<Message>>> boxes_; // [receiver][sender]
    std::vector<RankState> state_;
    rank_t turn_ = 0;
    int barrier_arrived_ = 0;
    std::uint64_t barrier_gen_ = 0;
    bool deadlocked_ = false;
    std::string diagnostic_;
    std::vector<MessageRecord> trace_;
};

} // namespace detail

int RankContext::size() const { return world_->size(); }

void RankContext::send(rank_t dest, MessageKind kind, Bytes payload) {
    world_->send(rank_, round_, dest, kind, std::move(payload));
}

Bytes RankContext::recv(rank_t source, MessageKind kind) { return world_->recv(rank_, round_, source, kind); }

std::vector<std::pair<rank_t, Bytes>> RankContext::drain(MessageKind kind) {
    return world_->drain(rank_, round_, kind);
}

void RankContext::barrier() { world_->barrier(rank_); }

Harness::Harness(int np, HarnessOptions options) : np_(np), options_(options) {
    if (np < 1) {
        throw CommError("harness needs at least one rank");
    }
    for (int r = 0; r < np; ++r) {
        ledgers_.push_back(std::make_shared<MemoryLedger>());
    }
    counters_.resize(static_cast<std::size_t>(np));
    timers_.resize(static_cast<std::size_t>(np));
}

Harness::~Harness() = default;

void Harness::run_erased(const std::function<void(RankContext&)>& program) {
    detail::World world(np_, options_.scheduler, options_.record_trace);
    try {
        world.run(program, ledgers_, counters_, timers_);
    } catch (...) {
        auto t = world.take_trace();
        trace_.insert(trace_.end(), t.begin(), t.end());
        throw;
    }
    auto t = world.take_trace();
    trace_.insert(trace_.end(), t.begin(), t.end());
}

// ------------------------------------------------------------ wire helpers

namespace {

template <typename T>
void append_le(Bytes& buf, T v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
        buf.push_back(static_cast<std::byte>((bits >> (8 * b)) & 0xFFu));
    }
}

template <typename T>
T read_le(const Bytes& buf, std::size_t& pos) {
    if (buf.size() - pos < 8) {
        throw CommError("truncated message payload");
    }
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(buf[pos + b]) << (8 * b);
    }
    pos += 8;
    return std::bit_cast<T>(bits);
}

} // namespace

void WireWriter::put_index(index_t v) { append_le(buf_, v); }
void WireWriter::put_real(real v) { append_le(buf_, v); }

void WireWriter::put_indices(const index_t* data, std::size_t n) {
    buf_.reserve(buf_.size() + 8 * n);
    for (std::size_t i = 0; i < n; ++i) {
        append_le(buf_, data[i]);
    }
}

void WireWriter::put_reals(const real* data, std::size_t n) {
    buf_.reserve(buf_.size() + 8 * n);
    for (std::size_t i = 0; i < n; ++i) {
        append_le(buf_, data[i]);
    }
}

index_t WireReader::get_index() { return read_le<index_t>(*buf_, pos_); }
real WireReader::get_real() { return read_le<real>(*buf_, pos_); }

} // namespace ptap
