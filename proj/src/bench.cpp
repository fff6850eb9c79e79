#include "ptap/bench.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "ptap/matrix_market.hpp"

namespace ptap {

std::string RunConfig::input_label() const {
    std::ostringstream os;
    switch (input) {
    case InputKind::grid: os << "grid " << grid.nx << 'x' << grid.ny << 'x' << grid.nz; break;
    case InputKind::random:
        os << "random " << random.n << 'x' << random.m << " d=" << random.density << " seed=" << random.seed;
        break;
    case InputKind::files: os << "files " << load_a.string() << ' ' << load_p.string(); break;
    }
    return os.str();
}

const char* to_string(VerifyStatus v) {
    switch (v) {
    case VerifyStatus::not_run: return "not-run";
    case VerifyStatus::match: return "match";
    case VerifyStatus::mismatch: return "mismatch";
    }
    return "unknown";
}

VerifyStatus parse_verify_status(std::string_view s) {
    for (VerifyStatus v : {VerifyStatus::not_run, VerifyStatus::match, VerifyStatus::mismatch}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    throw Error("unknown verification status '" + std::string(s) + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct GlobalInputs {
    index_t n = 0;
    index_t m = 0;
    std::optional<CsrMatrix> a;
    std::optional<CsrMatrix> p;
};

GlobalInputs load_inputs(const RunConfig& cfg) {
    GlobalInputs in;
    switch (cfg.input) {
    case InputKind::grid: {
        const GridDims d = grid_dims(cfg.grid);
        in.n = d.n_fine;
        in.m = d.n_coarse;
        break;
    }
    case InputKind::random: {
        RandomInstance ri = random_instance(cfg.random.n, cfg.random.m, cfg.random.density, cfg.random.seed);
        in.a = std::move(ri.a);
        in.p = std::move(ri.p);
        break;
    }
    case InputKind::files:
        in.a = read_matrix_market(cfg.load_a);
        in.p = read_matrix_market(cfg.load_p);
        break;
    }
    if (in.a) {
        if (in.a->nrows != in.a->ncols) {
            throw Error("A must be square, got " + std::to_string(in.a->nrows) + " x " + std::to_string(in.a->ncols));
        }
        if (in.p->nrows != in.a->ncols) {
            throw Error("A has " + std::to_string(in.a->ncols) + " columns but P has " +
                        std::to_string(in.p->nrows) + " rows");
        }
        if (!in.a->has_values || !in.p->has_values) {
            throw Error("benchmark inputs need numeric values");
        }
        in.n = in.a->nrows;
        in.m = in.p->ncols;
    }
    return in;
}

MessageSummary summarize(const std::vector<MessageRecord>& trace) {
    MessageSummary s;
    for (const auto& m : trace) {
        ++s.messages;
        s.bytes += m.bytes;
        switch (m.kind) {
        case MessageKind::request: ++s.requests; break;
        case MessageKind::reply: ++s.replies; break;
        case MessageKind::contribution: ++s.contributions; break;
        case MessageKind::user: break;
        }
    }
    return s;
}

} // namespace

RunResult run_benchmark(const RunConfig& cfg) {
    if (cfg.ranks < 1) {
        throw Error("need at least one rank");
    }
    if (cfg.repeats < 1) {
        throw Error("need at least one numeric repeat");
    }
    GlobalInputs in = load_inputs(cfg);
    if (cfg.verify && (in.n > OracleMatrix::kMaxDim || in.m > OracleMatrix::kMaxDim)) {
        throw Error("verification refused: the dense oracle is capped at " + std::to_string(OracleMatrix::kMaxDim) +
                    " rows/columns and this problem is " + std::to_string(in.n) + " x " + std::to_string(in.m));
    }

    const int np = cfg.ranks;
    const RowPartition fine = make_partition(in.n, np);
    const RowPartition coarse = make_partition(in.m, np);
    Harness h(np, {cfg.scheduler, true});
    std::vector<LocalMatrix> a(static_cast<std::size_t>(np));
    std::vector<LocalMatrix> p(static_cast<std::size_t>(np));
    std::vector<LedgerCharge> input_charge(static_cast<std::size_t>(np));
    std::vector<TripleProductPlan> plans(static_cast<std::size_t>(np));

    h.run([&](RankContext& ctx) {
        const auto r = static_cast<std::size_t>(ctx.rank());
        if (cfg.input == InputKind::grid) {
            a[r] = build_model_operator(cfg.grid, ctx.rank(), fine);
            p[r] = build_interpolation(cfg.grid, ctx.rank(), fine, coarse);
        } else {
            a[r] = distribute(*in.a, ctx.rank(), fine, fine);
            p[r] = distribute(*in.p, ctx.rank(), fine, coarse);
        }
        input_charge[r] = LedgerCharge(ctx.ledger_ptr(), MemCategory::input_matrices, a[r].bytes() + p[r].bytes());
    });

    auto symbolic = [&](RankContext& ctx) {
        const auto r = static_cast<std::size_t>(ctx.rank());
        plans[r] = TripleProductPlan();
        ScopedPhase t(ctx.timer(), Phase::symbolic);
        plans[r] = triple_product_symbolic(ctx, a[r], p[r], cfg.algorithm);
    };
    auto numeric = [&](int passes, bool release) {
        return [&, passes, release](RankContext& ctx) {
            const auto r = static_cast<std::size_t>(ctx.rank());
            ScopedPhase t(ctx.timer(), Phase::numeric);
            for (int k = 0; k < passes; ++k) {
                triple_product_numeric(ctx, a[r], p[r], plans[r]);
            }
            if (release) {
                plans[r].release_intermediates();
            }
        };
    };

    RunReport rep;
    rep.np = np;
    rep.algorithm = cfg.algorithm;
    rep.input = cfg.input_label();
    rep.cache = cfg.cache;
    rep.repeats = cfg.repeats;

    const auto start = Clock::now();
    if (cfg.cache == CachePolicy::cache_intermediate) {
        auto t = Clock::now();
        h.run(symbolic);
        rep.time_sym_s = seconds_since(t);
        t = Clock::now();
        h.run(numeric(cfg.repeats, false));
        rep.time_num_s = seconds_since(t);
    } else {
        for (int k = 0; k < cfg.repeats; ++k) {
            auto t = Clock::now();
            h.run(symbolic);
            rep.time_sym_s += seconds_since(t);
            t = Clock::now();
            h.run(numeric(1, true));
            rep.time_num_s += seconds_since(t);
        }
    }
    rep.time_total_s = seconds_since(start);

    std::vector<LocalMatrix> pieces;
    for (const auto& plan : plans) {
        pieces.push_back(plan.result());
    }
    RunResult out;
    out.c = assemble_global(pieces);

    for (int r = 0; r < np; ++r) {
        const MemoryLedger& l = h.ledger(r);
        const MemoryFigures f{l.current(MemCategory::input_matrices), l.peak(MemCategory::output_matrix),
                              l.peak(MemCategory::auxiliary_matrices), l.peak(MemCategory::transient_hash),
                              l.peak(MemCategory::plan_cache),         l.peak_working()};
        auto upd = [&](std::size_t MemoryFigures::*field) {
            rep.mem.*field = std::max(rep.mem.*field, f.*field);
            rep.mem_avg.*field += f.*field;
        };
        for (auto field : {&MemoryFigures::input, &MemoryFigures::output, &MemoryFigures::aux,
                           &MemoryFigures::transient_peak, &MemoryFigures::plan, &MemoryFigures::working_peak}) {
            upd(field);
        }
        const PhaseTimer& t = h.timer(r);
        rep.cpu_sym_s = std::max(rep.cpu_sym_s, t.seconds(Phase::symbolic));
        rep.cpu_num_s = std::max(rep.cpu_num_s, t.seconds(Phase::numeric));
        rep.cpu_gather_s = std::max(rep.cpu_gather_s, t.seconds(Phase::gather));
        rep.cpu_exchange_s = std::max(rep.cpu_exchange_s, t.seconds(Phase::exchange));
    }
    for (auto field : {&MemoryFigures::input, &MemoryFigures::output, &MemoryFigures::aux,
                       &MemoryFigures::transient_peak, &MemoryFigures::plan, &MemoryFigures::working_peak}) {
        rep.mem_avg.*field /= static_cast<std::size_t>(np);
    }
    rep.symbolic_runs = h.counters(0).symbolic_triple;
    rep.numeric_runs = h.counters(0).numeric_triple;
    out.trace = h.trace();
    rep.traffic = summarize(out.trace);

    if (cfg.verify) {
        const CsrMatrix ga = in.a ? *in.a : model_operator_global(cfg.grid);
        const CsrMatrix gp = in.p ? *in.p : interpolation_global(cfg.grid);
        rep.verify_error = relative_difference(out.c, oracle_ptap(to_oracle(ga), to_oracle(gp)));
        rep.verified = rep.verify_error <= kVerifyTolerance ? VerifyStatus::match : VerifyStatus::mismatch;
    }
    out.report = rep;
    return out;
}

Comparison compare_algorithms(const RunConfig& config) {
    Comparison cmp;
    std::vector<CsrMatrix> outputs;
    for (Algorithm alg : {Algorithm::two_step, Algorithm::all_at_once, Algorithm::merged}) {
        RunConfig c = config;
        c.algorithm = alg;
        RunResult r = run_benchmark(c);
        cmp.rows.push_back(r.report);
        outputs.push_back(std::move(r.c));
    }
    cmp.structures_equal = true;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        for (std::size_t j = i + 1; j < outputs.size(); ++j) {
            const auto& x = outputs[i];
            const auto& y = outputs[j];
            cmp.structures_equal = cmp.structures_equal && x.row_offsets == y.row_offsets &&
                                   x.col_indices == y.col_indices;
            cmp.max_mutual_diff = std::max(cmp.max_mutual_diff, relative_difference(x, y));
        }
    }
    const double aao = static_cast<double>(cmp.rows[1].mem.working_peak);
    cmp.memory_ratio = aao > 0 ? static_cast<double>(cmp.rows[0].mem.working_peak) / aao : 0.0;
    return cmp;
}

} // namespace ptap
