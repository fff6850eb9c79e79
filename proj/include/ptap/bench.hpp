#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ptap/comm.hpp"
#include "ptap/problems.hpp"
#include "ptap/triple_product.hpp"

namespace ptap {

enum class InputKind { grid, random, files };

struct RandomSpec {
    index_t n = 100;
    index_t m = 40;
    double density = 0.05;
    std::uint64_t seed = 1;
};

struct RunConfig {
    Algorithm algorithm = Algorithm::all_at_once;
    InputKind input = InputKind::grid;
    GridSpec grid{8, 8, 8};
    RandomSpec random;
    std::filesystem::path load_a;
    std::filesystem::path load_p;
    int ranks = 1;
    int repeats = 11;
    CachePolicy cache = CachePolicy::cache_intermediate;
    bool verify = false;
    Scheduler scheduler = Scheduler::sequential;

    /// Short human-readable description of the input ("grid 8x8x8", "random 100x40 d=0.05 seed=1", ...).
    std::string input_label() const;
};

/// Max-over-ranks bytes per ledger category (peaks except for inputs, which do not change).
struct MemoryFigures {
    std::size_t input = 0;
    std::size_t output = 0;
    std::size_t aux = 0;
    std::size_t transient_peak = 0;
    std::size_t plan = 0;
    std::size_t working_peak = 0; ///< triple-product memory: peak of everything but the inputs

    friend bool operator==(const MemoryFigures&, const MemoryFigures&) = default;
};

enum class VerifyStatus { not_run, match, mismatch };

const char* to_string(VerifyStatus v);
VerifyStatus parse_verify_status(std::string_view s);

struct MessageSummary {
    std::size_t messages = 0;
    std::size_t bytes = 0;
    std::size_t requests = 0;
    std::size_t replies = 0;
    std::size_t contributions = 0;

    friend bool operator==(const MessageSummary&, const MessageSummary&) = default;
};

struct RunReport {
    int np = 1;
    Algorithm algorithm = Algorithm::all_at_once;
    std::string input;
    CachePolicy cache = CachePolicy::cache_intermediate;
    int repeats = 0;

    MemoryFigures mem;     ///< max over ranks
    MemoryFigures mem_avg; ///< average over ranks

    // Wall-clock seconds of the harness runs.
    double time_sym_s = 0.0;
    double time_num_s = 0.0;
    double time_total_s = 0.0;
    // Max over ranks of per-rank CPU seconds.
    double cpu_sym_s = 0.0;
    double cpu_num_s = 0.0;
    double cpu_gather_s = 0.0;
    double cpu_exchange_s = 0.0;

    VerifyStatus verified = VerifyStatus::not_run;
    double verify_error = 0.0;
    std::size_t symbolic_runs = 0; ///< symbolic triple-product phases on rank 0
    std::size_t numeric_runs = 0;
    MessageSummary traffic;

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

struct RunResult {
    RunReport report;
    CsrMatrix c; ///< assembled output of the last numeric pass
    std::vector<MessageRecord> trace;
};

inline constexpr double kVerifyTolerance = 1e-12;

/// One symbolic and `repeats` numeric products (the symbolic phase is redone
/// per repeat under free_after_solve). Throws Error when verification is
/// requested above the oracle cap.
RunResult run_benchmark(const RunConfig& config);

struct Comparison {
    std::vector<RunReport> rows;  ///< two-step, allatonce, merged
    double memory_ratio = 0.0;    ///< working peak, two-step / allatonce
    double max_mutual_diff = 0.0; ///< largest relative difference between any two outputs
    bool structures_equal = false;
    bool consistent() const { return structures_equal && max_mutual_diff <= kVerifyTolerance; }
};

Comparison compare_algorithms(const RunConfig& config);

enum class ReportFormat { csv, json, table };

ReportFormat parse_report_format(std::string_view s);

void write_csv(std::ostream& out, const std::vector<RunReport>& rows);
/// Reads back the CSV columns; fields CSV does not carry stay default.
std::vector<RunReport> read_csv(std::istream& in);

std::string to_json(const std::vector<RunReport>& rows, const std::optional<Comparison>& cmp = std::nullopt);
std::vector<RunReport> reports_from_json(const std::string& text);

void write_table(std::ostream& out, const std::vector<RunReport>& rows, const std::optional<Comparison>& cmp = std::nullopt);

/// Writes to `path` ("-" = stdout). Throws Error if the file cannot be written.
void emit_report(const std::vector<RunReport>& rows, ReportFormat format, const std::string& path,
                 const std::optional<Comparison>& cmp = std::nullopt);

} // namespace ptap
