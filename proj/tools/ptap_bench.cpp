#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ptap/bench.hpp"

using namespace ptap;

namespace {

struct Options {
    std::string algorithm = "allatonce";
    std::string grid;
    std::string random;
    std::string load_a;
    std::string load_p;
    int ranks = 1;
    int repeats = 11;
    std::string cache = "keep";
    bool verify = false;
    std::string report = "-";
    std::string format = "table";
    std::string scheduler = "sequential";
    std::string trace;
};

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(s);
    while (std::getline(is, field, ',')) {
        out.push_back(field);
    }
    return out;
}

template <class T>
T number(const std::string& s, const char* what) {
    std::istringstream is(s);
    T v{};
    if (!(is >> v) || !is.eof()) {
        throw Error(std::string("bad ") + what + " '" + s + "'");
    }
    return v;
}

RunConfig make_config(const Options& o) {
    RunConfig c;
    if (o.algorithm != "compare") {
        c.algorithm = parse_algorithm(o.algorithm);
    }
    const int sources = !o.grid.empty() + !o.random.empty() + (!o.load_a.empty() || !o.load_p.empty());
    if (sources > 1) {
        throw Error("choose one of --grid, --random or --load-a/--load-p");
    }
    if (!o.random.empty()) {
        const auto f = split_commas(o.random);
        if (f.size() != 4) {
            throw Error("--random expects n,m,density,seed");
        }
        c.input = InputKind::random;
        c.random = {number<index_t>(f[0], "n"), number<index_t>(f[1], "m"), number<double>(f[2], "density"),
                    number<std::uint64_t>(f[3], "seed")};
    } else if (!o.load_a.empty() || !o.load_p.empty()) {
        if (o.load_a.empty() || o.load_p.empty()) {
            throw Error("--load-a and --load-p go together");
        }
        c.input = InputKind::files;
        c.load_a = o.load_a;
        c.load_p = o.load_p;
    } else if (!o.grid.empty()) {
        const auto f = split_commas(o.grid);
        if (f.size() != 3) {
            throw Error("--grid expects NX,NY,NZ");
        }
        c.grid = {number<index_t>(f[0], "NX"), number<index_t>(f[1], "NY"), number<index_t>(f[2], "NZ")};
        c.grid.validate();
    }
    c.ranks = o.ranks;
    c.repeats = o.repeats;
    c.cache = o.cache == "free" ? CachePolicy::free_after_solve : CachePolicy::cache_intermediate;
    c.verify = o.verify;
    c.scheduler = o.scheduler == "concurrent" ? Scheduler::concurrent : Scheduler::sequential;
    return c;
}

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--grid", o.grid, "coarse grid NX,NY,NZ (default 8,8,8)");
    cmd->add_option("--random", o.random, "random instance n,m,density,seed");
    cmd->add_option("--load-a", o.load_a, "Matrix Market file for A");
    cmd->add_option("--load-p", o.load_p, "Matrix Market file for P");
    cmd->add_option("--ranks", o.ranks, "number of ranks")->check(CLI::Range(1, 4096));
    cmd->add_option("--repeats", o.repeats, "numeric passes")->check(CLI::Range(1, 1000000));
    cmd->add_option("--cache", o.cache, "free or keep intermediate data")->check(CLI::IsMember({"free", "keep"}));
    cmd->add_flag("--verify", o.verify, "compare against the dense oracle");
    cmd->add_option("--report", o.report, "report path, - for stdout");
    cmd->add_option("--format", o.format, "csv, json or table")->check(CLI::IsMember({"csv", "json", "table"}));
    cmd->add_option("--scheduler", o.scheduler, "sequential or concurrent")
        ->check(CLI::IsMember({"sequential", "concurrent"}));
}

void write_trace_file(const std::string& path, const std::vector<MessageRecord>& trace) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write message trace to '" + path + "'");
    }
    write_trace(out, trace);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed Galerkin triple product benchmark"};
    app.require_subcommand(1);
    Options run_opts;
    Options cmp_opts;

    auto* run = app.add_subcommand("run", "run one algorithm");
    run->add_option("--algorithm", run_opts.algorithm, "two-step, allatonce or merged")
        ->check(CLI::IsMember({"two-step", "allatonce", "merged"}));
    add_common(run, run_opts);
    run->add_option("--trace-messages", run_opts.trace, "write the message trace to this file");

    auto* compare = app.add_subcommand("compare", "run all three algorithms on the same input");
    add_common(compare, cmp_opts);
    cmp_opts.algorithm = "compare";

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) {
            const RunConfig cfg = make_config(run_opts);
            const RunResult res = run_benchmark(cfg);
            if (!run_opts.trace.empty()) {
                write_trace_file(run_opts.trace, res.trace);
            }
            emit_report({res.report}, parse_report_format(run_opts.format), run_opts.report);
            if (res.report.verified == VerifyStatus::mismatch) {
                std::cerr << "verification mismatch: relative error " << res.report.verify_error << '\n';
                return 2;
            }
            return 0;
        }
        const RunConfig cfg = make_config(cmp_opts);
        const Comparison cmp = compare_algorithms(cfg);
        emit_report(cmp.rows, parse_report_format(cmp_opts.format), cmp_opts.report, cmp);
        bool mismatch = !cmp.consistent();
        for (const auto& r : cmp.rows) {
            mismatch = mismatch || r.verified == VerifyStatus::mismatch;
        }
        if (mismatch) {
            std::cerr << "verification mismatch between algorithms or against the oracle\n";
            return 2;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
