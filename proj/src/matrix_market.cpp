#include "ptap/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace ptap {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool blank_or_comment(const std::string& line) {
    const auto pos = line.find_first_not_of(" \t\r");
    return pos == std::string::npos || line[pos] == '%';
}

} // namespace

CsrMatrix read_matrix_market(std::istream& in) {
    std::string line;
    long lineno = 0;
    if (!std::getline(in, line)) {
        throw ParseError("empty Matrix Market input", 1);
    }
    ++lineno;

    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket" || lower(object) != "matrix") {
        throw ParseError("missing %%MatrixMarket matrix banner", lineno);
    }
    if (lower(format) != "coordinate") {
        throw ParseError("only coordinate format is supported, got '" + format + "'", lineno);
    }
    field = lower(field);
    symmetry = lower(symmetry);
    const bool pattern = field == "pattern";
    if (!pattern && field != "real" && field != "integer" && field != "double") {
        throw ParseError("unsupported field '" + field + "'", lineno);
    }
    const bool symmetric = symmetry == "symmetric";
    if (!symmetric && symmetry != "general") {
        throw ParseError("unsupported symmetry '" + symmetry + "'", lineno);
    }

    do {
        if (!std::getline(in, line)) {
            throw ParseError("missing size line", lineno + 1);
        }
        ++lineno;
    } while (blank_or_comment(line));

    long long nrows = 0, ncols = 0, nnz = 0;
    {
        std::istringstream size_line(line);
        if (!(size_line >> nrows >> ncols >> nnz) || nrows < 0 || ncols < 0 || nnz < 0) {
            throw ParseError("malformed size line '" + line + "'", lineno);
        }
    }

    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(symmetric ? 2 * nnz : nnz));
    long long read = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank_or_comment(line)) {
            continue;
        }
        if (read == nnz) {
            throw ParseError("more entries than the " + std::to_string(nnz) + " declared", lineno);
        }
        std::istringstream entry(line);
        long long i = 0, j = 0;
        double v = 1.0;
        if (!(entry >> i >> j) || (!pattern && !(entry >> v))) {
            throw ParseError("malformed entry '" + line + "'", lineno);
        }
        if (i < 1 || i > nrows || j < 1 || j > ncols) {
            throw ParseError("entry (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range", lineno);
        }
        entries.push_back({i - 1, j - 1, v});
        if (symmetric && i != j) {
            entries.push_back({j - 1, i - 1, v});
        }
        ++read;
    }
    if (read != nnz) {
        throw ParseError("header declares " + std::to_string(nnz) + " entries but found " + std::to_string(read),
                         lineno);
    }
    return pattern ? csr_pattern_from_triplets(nrows, ncols, entries) : csr_from_triplets(nrows, ncols, entries);
}

CsrMatrix read_matrix_market(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open '" + path.string() + "' for reading");
    }
    return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const CsrMatrix& m) {
    out << "%%MatrixMarket matrix coordinate " << (m.has_values ? "real" : "pattern") << " general\n";
    out << m.nrows << ' ' << m.ncols << ' ' << m.nnz() << '\n';
    out << std::setprecision(17);
    for (index_t i = 0; i < m.nrows; ++i) {
        for (index_t k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k) {
            out << (i + 1) << ' ' << (m.col_indices[k] + 1);
            if (m.has_values) {
                out << ' ' << m.values[k];
            }
            out << '\n';
        }
    }
}

void write_matrix_market(const std::filesystem::path& path, const CsrMatrix& m) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    write_matrix_market(out, m);
    if (!out) {
        throw Error("write to '" + path.string() + "' failed");
    }
}

} // namespace ptap
