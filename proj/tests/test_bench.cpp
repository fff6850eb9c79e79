#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ptap/bench.hpp"
#include "ptap/matrix_market.hpp"
#include "ptap/timer.hpp"
#include "support.hpp"

using namespace ptap;
using namespace ptap::test;

namespace {

RunConfig grid_config(Algorithm alg, GridSpec g, int np, int repeats = 3) {
    RunConfig c;
    c.algorithm = alg;
    c.grid = g;
    c.ranks = np;
    c.repeats = repeats;
    return c;
}

RunReport without_times(RunReport r) {
    r.time_sym_s = r.time_num_s = r.time_total_s = 0.0;
    r.cpu_sym_s = r.cpu_num_s = r.cpu_gather_s = r.cpu_exchange_s = 0.0;
    return r;
}

} // namespace

TEST_CASE("all-at-once run on the model problem stores no auxiliary matrices") {
    const RunResult r = run_benchmark(grid_config(Algorithm::all_at_once, {8, 8, 8}, 4, 11));
    CHECK(r.report.mem.aux == 0);
    CHECK(r.report.mem_avg.aux == 0);
    CHECK(r.report.symbolic_runs == 1);
    CHECK(r.report.numeric_runs == 11);
    CHECK(r.report.mem.output > 0);
    CHECK(r.report.mem.input > 0);
}

TEST_CASE("two-step run stores AP and the transpose") {
    const RunConfig cfg = grid_config(Algorithm::two_step, {8, 8, 8}, 4);
    const RunResult r = run_benchmark(cfg);
    CHECK(r.report.mem.aux >= r.report.mem.output);
    // every rank holds its rows of AP and the transpose of its rows of P: 16 bytes per entry at least
    const CsrMatrix a = model_operator_global(cfg.grid);
    const CsrMatrix p = interpolation_global(cfg.grid);
    const RowPartition fine = make_partition(a.nrows, 4);
    std::size_t bound = 0;
    for (int rank = 0; rank < 4; ++rank) {
        std::size_t entries = 0;
        for (index_t i = fine.begin(rank); i < fine.end(rank); ++i) {
            std::set<index_t> cols;
            for (index_t k : a.row_cols(i)) {
                for (index_t j : p.row_cols(k)) {
                    cols.insert(j);
                }
            }
            entries += cols.size() + static_cast<std::size_t>(p.row_length(i));
        }
        bound = std::max(bound, entries * (sizeof(index_t) + sizeof(real)));
    }
    CHECK(r.report.mem.aux >= bound);
}

TEST_CASE("verification against the dense oracle") {
    RunConfig cfg = grid_config(Algorithm::merged, {4, 4, 4}, 1, 11);
    cfg.verify = true;
    const RunResult r = run_benchmark(cfg);
    CHECK(r.report.verified == VerifyStatus::match);
    CHECK(r.report.verify_error <= kVerifyTolerance);

    RunConfig rnd;
    rnd.input = InputKind::random;
    rnd.random = {120, 50, 0.1, 4};
    rnd.ranks = 3;
    rnd.repeats = 2;
    rnd.verify = true;
    for (CachePolicy cache : {CachePolicy::cache_intermediate, CachePolicy::free_after_solve}) {
        rnd.cache = cache;
        CHECK(run_benchmark(rnd).report.verified == VerifyStatus::match);
    }
}

TEST_CASE("verification above the oracle cap is refused") {
    RunConfig cfg = grid_config(Algorithm::all_at_once, {8, 8, 8}, 2, 1);
    cfg.verify = true;
    CHECK_THROWS_WITH_AS(run_benchmark(cfg), doctest::Contains("capped"), Error);
}

TEST_CASE("free-after-solve redoes the symbolic phase per repeat") {
    RunConfig cfg = grid_config(Algorithm::two_step, {4, 4, 4}, 2, 4);
    cfg.cache = CachePolicy::free_after_solve;
    const RunResult freed = run_benchmark(cfg);
    CHECK(freed.report.symbolic_runs == 4);
    CHECK(freed.report.numeric_runs == 4);
    cfg.cache = CachePolicy::cache_intermediate;
    const RunResult kept = run_benchmark(cfg);
    CHECK(kept.report.symbolic_runs == 1);
    CHECK(freed.c == kept.c);
}

TEST_CASE("comparison: three consistent rows and a memory ratio of at least one") {
    const Comparison cmp = compare_algorithms(grid_config(Algorithm::all_at_once, {8, 8, 8}, 8, 2));
    REQUIRE(cmp.rows.size() == 3);
    CHECK(cmp.rows[0].algorithm == Algorithm::two_step);
    CHECK(cmp.rows[1].algorithm == Algorithm::all_at_once);
    CHECK(cmp.rows[2].algorithm == Algorithm::merged);
    CHECK(cmp.consistent());
    CHECK(cmp.memory_ratio >= 1.0);
}

TEST_CASE("assembled output does not depend on the rank count") {
    const CsrMatrix one = run_benchmark(grid_config(Algorithm::merged, {6, 6, 6}, 1, 1)).c;
    const CsrMatrix four = run_benchmark(grid_config(Algorithm::merged, {6, 6, 6}, 4, 1)).c;
    CHECK(same_structure(one, four));
    CHECK(relative_difference(one, four) <= 1e-13);
}

TEST_CASE("max-over-ranks memory shrinks as ranks are added") {
    for (Algorithm alg : {Algorithm::two_step, Algorithm::all_at_once, Algorithm::merged}) {
        std::size_t prev = SIZE_MAX;
        for (int np : {1, 2, 4, 8}) {
            const RunReport r = run_benchmark(grid_config(alg, {8, 8, 8}, np, 1)).report;
            CHECK(static_cast<double>(r.mem.working_peak) <= 1.1 * static_cast<double>(prev));
            prev = r.mem.working_peak;
        }
    }
}

TEST_CASE("numeric time accumulates over repeats") {
    const CsrMatrix a = model_operator_global({8, 8, 8});
    const CsrMatrix p = interpolation_global({8, 8, 8});
    const Layout lay = layout_for(a.nrows, p.ncols, 1);
    const LocalMatrix al = distribute(a, 0, lay.fine, lay.fine);
    const LocalMatrix pl = distribute(p, 0, lay.fine, lay.coarse);
    Harness h(1);
    h.run([&](RankContext& ctx) {
        TripleProductPlan plan = triple_product_symbolic(ctx, al, pl, Algorithm::all_at_once);
        triple_product_numeric(ctx, al, pl, plan);
        double single = 1e300;
        for (int k = 0; k < 5; ++k) {
            PhaseTimer t;
            {
                ScopedPhase s(t, Phase::numeric);
                triple_product_numeric(ctx, al, pl, plan);
            }
            single = std::min(single, t.seconds(Phase::numeric));
        }
        ctx.timer().reset();
        {
            ScopedPhase s(ctx.timer(), Phase::numeric);
            for (int k = 0; k < 11; ++k) {
                triple_product_numeric(ctx, al, pl, plan);
            }
        }
        CHECK(ctx.timer().seconds(Phase::numeric) >= 10.0 * single);
    });
}

TEST_CASE("CSV round trip keeps every CSV field") {
    std::vector<RunReport> rows;
    rows.push_back(run_benchmark(grid_config(Algorithm::two_step, {4, 4, 4}, 2, 2)).report);
    RunConfig cfg = grid_config(Algorithm::merged, {4, 4, 4}, 1, 2);
    cfg.verify = true;
    rows.push_back(run_benchmark(cfg).report);
    rows.back().time_sym_s = 0.1 + 0.2;

    std::stringstream ss;
    write_csv(ss, rows);
    std::string header;
    std::getline(std::istringstream(ss.str()), header);
    CHECK(header == "np,algorithm,mem_input,mem_output,mem_aux,mem_transient_peak,mem_plan,time_sym_s,time_num_s,"
                    "time_total_s,repeats,verified");
    const auto back = read_csv(ss);
    REQUIRE(back.size() == rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const RunReport& x = rows[k];
        const RunReport& y = back[k];
        CHECK(y.np == x.np);
        CHECK(y.algorithm == x.algorithm);
        CHECK(y.mem.input == x.mem.input);
        CHECK(y.mem.output == x.mem.output);
        CHECK(y.mem.aux == x.mem.aux);
        CHECK(y.mem.transient_peak == x.mem.transient_peak);
        CHECK(y.mem.plan == x.mem.plan);
        CHECK(y.time_sym_s == x.time_sym_s);
        CHECK(y.time_num_s == x.time_num_s);
        CHECK(y.time_total_s == x.time_total_s);
        CHECK(y.repeats == x.repeats);
        CHECK(y.verified == x.verified);
    }
    std::istringstream bad("np,algorithm\n1,merged\n");
    CHECK_THROWS_AS(read_csv(bad), Error);
}

TEST_CASE("JSON round trip is lossless") {
    std::vector<RunReport> rows{run_benchmark(grid_config(Algorithm::all_at_once, {4, 4, 4}, 3, 2)).report};
    rows[0].time_num_s = 1.0 / 3.0;
    const auto back = reports_from_json(to_json(rows));
    CHECK(back == rows);
    CHECK_THROWS_AS(reports_from_json("{\"reports\": [{\"np\": 1}]}"), Error);
}

TEST_CASE("sequential runs are reproducible apart from timings") {
    RunConfig cfg;
    cfg.input = InputKind::random;
    cfg.random = {150, 60, 0.05, 9};
    cfg.ranks = 5;
    cfg.repeats = 2;
    const RunResult x = run_benchmark(cfg);
    const RunResult y = run_benchmark(cfg);
    CHECK(without_times(x.report) == without_times(y.report));
    CHECK(x.c == y.c);
    CHECK(x.trace == y.trace);
}

TEST_CASE("matrix files as benchmark input") {
    const auto dir = std::filesystem::temp_directory_path() / "ptap_bench_files";
    std::filesystem::create_directories(dir);
    const RandomInstance ri = random_instance(70, 30, 0.1, 2);
    write_matrix_market(dir / "a.mtx", ri.a);
    write_matrix_market(dir / "p.mtx", ri.p);
    RunConfig cfg;
    cfg.input = InputKind::files;
    cfg.load_a = dir / "a.mtx";
    cfg.load_p = dir / "p.mtx";
    cfg.ranks = 3;
    cfg.repeats = 1;
    cfg.verify = true;
    const RunResult r = run_benchmark(cfg);
    CHECK(r.report.verified == VerifyStatus::match);
    cfg.load_p = dir / "a.mtx";
    write_matrix_market(dir / "a.mtx", from_rows({{0, 1}}, 3));
    CHECK_THROWS_AS(run_benchmark(cfg), Error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("report emission formats and unwritable paths") {
    const std::vector<RunReport> rows{run_benchmark(grid_config(Algorithm::merged, {3, 3, 3}, 2, 1)).report};
    const auto path = std::filesystem::temp_directory_path() / "ptap_report_test.csv";
    emit_report(rows, ReportFormat::csv, path.string());
    std::ifstream in(path);
    CHECK(read_csv(in).size() == 1);
    std::filesystem::remove(path);

    std::ostringstream table;
    write_table(table, rows);
    for (const char* col : {"np", "Algorithm", "Mem(MiB)", "Time_sym", "Time_num", "Time", "Aux(MiB)", "Plan(MiB)"}) {
        CHECK(table.str().find(col) != std::string::npos);
    }
    CHECK_THROWS_AS(emit_report(rows, ReportFormat::json, "/nonexistent-dir/report.json"), Error);
    CHECK(parse_report_format("table") == ReportFormat::table);
    CHECK_THROWS_AS(parse_report_format("xml"), Error);
}
