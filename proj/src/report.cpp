#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "ptap/bench.hpp"

namespace ptap {

namespace {

using nlohmann::json;

constexpr const char* kCsvHeader = "np,algorithm,mem_input,mem_output,mem_aux,mem_transient_peak,mem_plan,"
                                   "time_sym_s,time_num_s,time_total_s,repeats,verified";

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* cache_name(CachePolicy c) { return c == CachePolicy::cache_intermediate ? "keep" : "free"; }

CachePolicy parse_cache(std::string_view s) {
    if (s == "keep") {
        return CachePolicy::cache_intermediate;
    }
    if (s == "free") {
        return CachePolicy::free_after_solve;
    }
    throw Error("unknown cache policy '" + std::string(s) + "'");
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, sep)) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == sep) {
        out.emplace_back();
    }
    return out;
}

template <class T>
T parse_number(const std::string& s, const char* what) {
    std::istringstream is(s);
    T v{};
    if (!(is >> v) || !is.eof()) {
        throw Error(std::string("bad ") + what + " value '" + s + "'");
    }
    return v;
}

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw Error(std::string("bad ") + what + " value '" + s + "'");
}

json memory_json(const MemoryFigures& m) {
    return {{"input", m.input},           {"output", m.output}, {"aux", m.aux},
            {"transient_peak", m.transient_peak}, {"plan", m.plan}, {"working_peak", m.working_peak}};
}

MemoryFigures memory_from_json(const json& j) {
    MemoryFigures m;
    m.input = j.at("input").get<std::size_t>();
    m.output = j.at("output").get<std::size_t>();
    m.aux = j.at("aux").get<std::size_t>();
    m.transient_peak = j.at("transient_peak").get<std::size_t>();
    m.plan = j.at("plan").get<std::size_t>();
    m.working_peak = j.at("working_peak").get<std::size_t>();
    return m;
}

json report_json(const RunReport& r) {
    return {
        {"np", r.np},
        {"algorithm", to_string(r.algorithm)},
        {"input", r.input},
        {"cache", cache_name(r.cache)},
        {"mem_input", r.mem.input},
        {"mem_output", r.mem.output},
        {"mem_aux", r.mem.aux},
        {"mem_transient_peak", r.mem.transient_peak},
        {"mem_plan", r.mem.plan},
        {"mem_working_peak", r.mem.working_peak},
        {"mem_avg", memory_json(r.mem_avg)},
        {"time_sym_s", r.time_sym_s},
        {"time_num_s", r.time_num_s},
        {"time_total_s", r.time_total_s},
        {"cpu_sym_s", r.cpu_sym_s},
        {"cpu_num_s", r.cpu_num_s},
        {"cpu_gather_s", r.cpu_gather_s},
        {"cpu_exchange_s", r.cpu_exchange_s},
        {"repeats", r.repeats},
        {"verified", to_string(r.verified)},
        {"verify_error", r.verify_error},
        {"symbolic_runs", r.symbolic_runs},
        {"numeric_runs", r.numeric_runs},
        {"messages",
         {{"messages", r.traffic.messages},
          {"bytes", r.traffic.bytes},
          {"requests", r.traffic.requests},
          {"replies", r.traffic.replies},
          {"contributions", r.traffic.contributions}}},
    };
}

RunReport report_from_json(const json& j) {
    RunReport r;
    r.np = j.at("np").get<int>();
    r.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    r.input = j.at("input").get<std::string>();
    r.cache = parse_cache(j.at("cache").get<std::string>());
    r.mem.input = j.at("mem_input").get<std::size_t>();
    r.mem.output = j.at("mem_output").get<std::size_t>();
    r.mem.aux = j.at("mem_aux").get<std::size_t>();
    r.mem.transient_peak = j.at("mem_transient_peak").get<std::size_t>();
    r.mem.plan = j.at("mem_plan").get<std::size_t>();
    r.mem.working_peak = j.at("mem_working_peak").get<std::size_t>();
    r.mem_avg = memory_from_json(j.at("mem_avg"));
    r.time_sym_s = j.at("time_sym_s").get<double>();
    r.time_num_s = j.at("time_num_s").get<double>();
    r.time_total_s = j.at("time_total_s").get<double>();
    r.cpu_sym_s = j.at("cpu_sym_s").get<double>();
    r.cpu_num_s = j.at("cpu_num_s").get<double>();
    r.cpu_gather_s = j.at("cpu_gather_s").get<double>();
    r.cpu_exchange_s = j.at("cpu_exchange_s").get<double>();
    r.repeats = j.at("repeats").get<int>();
    r.verified = parse_verify_status(j.at("verified").get<std::string>());
    r.verify_error = j.at("verify_error").get<double>();
    r.symbolic_runs = j.at("symbolic_runs").get<std::size_t>();
    r.numeric_runs = j.at("numeric_runs").get<std::size_t>();
    const json& m = j.at("messages");
    r.traffic.messages = m.at("messages").get<std::size_t>();
    r.traffic.bytes = m.at("bytes").get<std::size_t>();
    r.traffic.requests = m.at("requests").get<std::size_t>();
    r.traffic.replies = m.at("replies").get<std::size_t>();
    r.traffic.contributions = m.at("contributions").get<std::size_t>();
    return r;
}

std::string mib(std::size_t bytes) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << static_cast<double>(bytes) / (1024.0 * 1024.0);
    return os.str();
}

std::string secs(double s) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << s;
    return os.str();
}

} // namespace

ReportFormat parse_report_format(std::string_view s) {
    if (s == "csv") {
        return ReportFormat::csv;
    }
    if (s == "json") {
        return ReportFormat::json;
    }
    if (s == "table") {
        return ReportFormat::table;
    }
    throw Error("unknown report format '" + std::string(s) + "' (expected csv, json or table)");
}

void write_csv(std::ostream& out, const std::vector<RunReport>& rows) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.np << ',' << to_string(r.algorithm) << ',' << r.mem.input << ',' << r.mem.output << ','
            << r.mem.aux << ',' << r.mem.transient_peak << ',' << r.mem.plan << ',' << exact(r.time_sym_s) << ','
            << exact(r.time_num_s) << ',' << exact(r.time_total_s) << ',' << r.repeats << ','
            << to_string(r.verified) << '\n';
    }
}

std::vector<RunReport> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw Error("CSV header does not match the report columns");
    }
    std::vector<RunReport> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split(line, ',');
        if (f.size() != 12) {
            throw Error("CSV row has " + std::to_string(f.size()) + " fields, expected 12");
        }
        RunReport r;
        r.np = parse_number<int>(f[0], "np");
        r.algorithm = parse_algorithm(f[1]);
        r.mem.input = parse_number<std::size_t>(f[2], "mem_input");
        r.mem.output = parse_number<std::size_t>(f[3], "mem_output");
        r.mem.aux = parse_number<std::size_t>(f[4], "mem_aux");
        r.mem.transient_peak = parse_number<std::size_t>(f[5], "mem_transient_peak");
        r.mem.plan = parse_number<std::size_t>(f[6], "mem_plan");
        r.time_sym_s = parse_double(f[7], "time_sym_s");
        r.time_num_s = parse_double(f[8], "time_num_s");
        r.time_total_s = parse_double(f[9], "time_total_s");
        r.repeats = parse_number<int>(f[10], "repeats");
        r.verified = parse_verify_status(f[11]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string to_json(const std::vector<RunReport>& rows, const std::optional<Comparison>& cmp) {
    json doc;
    doc["reports"] = json::array();
    for (const auto& r : rows) {
        doc["reports"].push_back(report_json(r));
    }
    if (cmp) {
        doc["comparison"] = {{"memory_ratio", cmp->memory_ratio},
                             {"max_mutual_diff", cmp->max_mutual_diff},
                             {"structures_equal", cmp->structures_equal},
                             {"consistent", cmp->consistent()}};
    }
    return doc.dump(2);
}

std::vector<RunReport> reports_from_json(const std::string& text) {
    std::vector<RunReport> rows;
    try {
        const json doc = json::parse(text);
        for (const auto& j : doc.at("reports")) {
            rows.push_back(report_from_json(j));
        }
    } catch (const json::exception& e) {
        throw Error(std::string("bad JSON report: ") + e.what());
    }
    return rows;
}

void write_table(std::ostream& out, const std::vector<RunReport>& rows, const std::optional<Comparison>& cmp) {
    const std::vector<std::string> head{"np",         "Algorithm",  "Mem(MiB)",  "Time_sym",  "Time_num",
                                        "Time",       "Input(MiB)", "Out(MiB)",  "Aux(MiB)",  "Hash(MiB)",
                                        "Plan(MiB)",  "Verified"};
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows) {
        cells.push_back({std::to_string(r.np), to_string(r.algorithm), mib(r.mem.working_peak), secs(r.time_sym_s),
                         secs(r.time_num_s), secs(r.time_total_s), mib(r.mem.input), mib(r.mem.output),
                         mib(r.mem.aux), mib(r.mem.transient_peak), mib(r.mem.plan), to_string(r.verified)});
    }
    std::vector<std::size_t> width(head.size());
    for (std::size_t c = 0; c < head.size(); ++c) {
        width[c] = head[c].size();
        for (const auto& row : cells) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    auto line = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << (c ? "  " : "") << (c < 2 ? std::left : std::right) << std::setw(static_cast<int>(width[c]))
                << row[c];
        }
        out << std::right << '\n';
    };
    if (!rows.empty()) {
        out << "input: " << rows.front().input << ", repeats: " << rows.front().repeats
            << ", cache: " << cache_name(rows.front().cache) << '\n';
    }
    line(head);
    for (const auto& row : cells) {
        line(row);
    }
    if (cmp) {
        out << "memory ratio two-step/allatonce: " << std::fixed << std::setprecision(3) << cmp->memory_ratio
            << '\n'
            << "max mutual difference: " << std::scientific << std::setprecision(3) << cmp->max_mutual_diff
            << (cmp->structures_equal ? ", structures equal" : ", structures differ") << '\n'
            << std::defaultfloat;
    }
}

void emit_report(const std::vector<RunReport>& rows, ReportFormat format, const std::string& path,
                 const std::optional<Comparison>& cmp) {
    std::ofstream file;
    if (path != "-") {
        file.open(path);
        if (!file) {
            throw Error("cannot write report to '" + path + "'");
        }
    }
    std::ostream& out = path == "-" ? std::cout : file;
    switch (format) {
    case ReportFormat::csv: write_csv(out, rows); break;
    case ReportFormat::json: out << to_json(rows, cmp) << '\n'; break;
    case ReportFormat::table: write_table(out, rows, cmp); break;
    }
    out.flush();
    if (!out) {
        throw Error("failed while writing report to '" + path + "'");
    }
}

} // namespace ptap
