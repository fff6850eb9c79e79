#include "ptap/csr_matrix.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <string>

namespace ptap {

namespace {

std::string describe(const Triplet& t) {
    return "(" + std::to_string(t.row) + ", " + std::to_string(t.col) + ", " + std::to_string(t.val) + ")";
}

CsrMatrix assemble(index_t nrows, index_t ncols, std::span<const Triplet> entries, bool with_values) {
    if (nrows < 0 || ncols < 0) {
        throw AssemblyError("negative matrix dimension");
    }
    for (const auto& t : entries) {
        if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols) {
            throw AssemblyError("triplet " + describe(t) + " outside " + std::to_string(nrows) + "x" +
                                std::to_string(ncols) + " matrix");
        }
    }

    // Counting sort by row keeps the input order within each row, so duplicate
    // summation happens in input order.
    std::vector<index_t> counts(static_cast<std::size_t>(nrows) + 1, 0);
    for (const auto& t : entries) {
        ++counts[t.row + 1];
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    std::vector<std::size_t> order(entries.size());
    {
        std::vector<index_t> cursor(counts.begin(), counts.end() - 1);
        for (std::size_t e = 0; e < entries.size(); ++e) {
            order[cursor[entries[e].row]++] = e;
        }
    }

    CsrMatrix m(nrows, ncols, with_values);
    m.col_indices.reserve(entries.size());
    if (with_values) {
        m.values.reserve(entries.size());
    }
    for (index_t i = 0; i < nrows; ++i) {
        auto first = order.begin() + counts[i];
        auto last = order.begin() + counts[i + 1];
        std::stable_sort(first, last, [&](std::size_t a, std::size_t b) { return entries[a].col < entries[b].col; });
        for (auto it = first; it != last; ++it) {
            const auto& t = entries[*it];
            const bool dup = static_cast<index_t>(m.col_indices.size()) > m.row_offsets[i] && m.col_indices.back() == t.col;
            if (dup) {
                if (with_values) {
                    m.values.back() += t.val;
                }
            } else {
                m.col_indices.push_back(t.col);
                if (with_values) {
                    m.values.push_back(t.val);
                }
            }
        }
        m.row_offsets[i + 1] = static_cast<index_t>(m.col_indices.size());
    }
    m.col_indices.shrink_to_fit();
    m.values.shrink_to_fit();
    return m;
}

} // namespace

CsrMatrix::CsrMatrix(index_t rows, index_t cols, bool with_values)
    : nrows(rows), ncols(cols), row_offsets(static_cast<std::size_t>(rows) + 1, 0), has_values(with_values) {}

std::size_t CsrMatrix::bytes() const {
    return row_offsets.capacity() * sizeof(index_t) + col_indices.capacity() * sizeof(index_t) +
           values.capacity() * sizeof(real);
}

void CsrMatrix::validate() const {
    if (nrows < 0 || ncols < 0) {
        throw AssemblyError("negative matrix dimension");
    }
    if (row_offsets.size() != static_cast<std::size_t>(nrows) + 1 || row_offsets.front() != 0) {
        throw AssemblyError("row_offsets must have nrows+1 entries starting at 0");
    }
    for (index_t i = 0; i < nrows; ++i) {
        if (row_offsets[i + 1] < row_offsets[i]) {
            throw AssemblyError("row_offsets decreasing at row " + std::to_string(i));
        }
    }
    if (static_cast<std::size_t>(nnz()) != col_indices.size()) {
        throw AssemblyError("row_offsets[nrows] does not match column count");
    }
    if (has_values ? values.size() != col_indices.size() : !values.empty()) {
        throw AssemblyError("values length does not match nnz");
    }
    for (index_t i = 0; i < nrows; ++i) {
        index_t prev = -1;
        for (index_t c : row_cols(i)) {
            if (c <= prev || c >= ncols) {
                throw AssemblyError("row " + std::to_string(i) + " has unsorted or out-of-range column " +
                                    std::to_string(c));
            }
            prev = c;
        }
    }
}

bool operator==(const CsrMatrix& a, const CsrMatrix& b) {
    if (a.nrows != b.nrows || a.ncols != b.ncols || a.row_offsets != b.row_offsets ||
        a.col_indices != b.col_indices || a.has_values != b.has_values) {
        return false;
    }
    if (!a.has_values) {
        return true;
    }
    // Bitwise, so -0.0 != 0.0 and NaN payloads matter.
    return a.values.size() == b.values.size() &&
           std::equal(a.values.begin(), a.values.end(), b.values.begin(), [](real x, real y) {
               return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
           });
}

CsrMatrix csr_from_triplets(index_t nrows, index_t ncols, std::span<const Triplet> entries) {
    return assemble(nrows, ncols, entries, true);
}

CsrMatrix csr_pattern_from_triplets(index_t nrows, index_t ncols, std::span<const Triplet> entries) {
    return assemble(nrows, ncols, entries, false);
}

std::vector<Triplet> to_triplets(const CsrMatrix& m) {
    std::vector<Triplet> out;
    out.reserve(static_cast<std::size_t>(m.nnz()));
    for (index_t i = 0; i < m.nrows; ++i) {
        for (index_t k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k) {
            out.push_back({i, m.col_indices[k], m.has_values ? m.values[k] : 0.0});
        }
    }
    return out;
}

CsrMatrix transpose(const CsrMatrix& m) {
    CsrMatrix t(m.ncols, m.nrows, m.has_values);
    for (index_t c : m.col_indices) {
        ++t.row_offsets[c + 1];
    }
    std::partial_sum(t.row_offsets.begin(), t.row_offsets.end(), t.row_offsets.begin());
    t.col_indices.resize(static_cast<std::size_t>(m.nnz()));
    if (m.has_values) {
        t.values.resize(static_cast<std::size_t>(m.nnz()));
    }
    std::vector<index_t> cursor(t.row_offsets.begin(), t.row_offsets.end() - 1);
    for (index_t i = 0; i < m.nrows; ++i) {
        for (index_t k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k) {
            const index_t pos = cursor[m.col_indices[k]]++;
            t.col_indices[pos] = i;
            if (m.has_values) {
                t.values[pos] = m.values[k];
            }
        }
    }
    return t;
}

void transpose_values_into(const CsrMatrix& m, CsrMatrix& mt) {
    if (mt.nrows != m.ncols || mt.ncols != m.nrows || mt.nnz() != m.nnz() || !m.has_values) {
        throw StructureDriftError("numeric transpose: target structure does not match source");
    }
    mt.has_values = true;
    mt.values.resize(mt.col_indices.size());
    std::vector<index_t> cursor(mt.row_offsets.begin(), mt.row_offsets.end() - 1);
    for (index_t i = 0; i < m.nrows; ++i) {
        for (index_t k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k) {
            const index_t j = m.col_indices[k];
            const index_t pos = cursor[j]++;
            if (pos >= mt.row_offsets[j + 1] || mt.col_indices[pos] != i) {
                throw StructureDriftError("numeric transpose: entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                          ") not in symbolic transpose");
            }
            mt.values[pos] = m.values[k];
        }
    }
}

CsrMatrix identity(index_t n) {
    CsrMatrix m(n, n, true);
    m.col_indices.resize(static_cast<std::size_t>(n));
    m.values.assign(static_cast<std::size_t>(n), 1.0);
    for (index_t i = 0; i < n; ++i) {
        m.col_indices[i] = i;
        m.row_offsets[i + 1] = i + 1;
    }
    return m;
}

CsrMatrix pattern_of(const CsrMatrix& m) {
    CsrMatrix p = m;
    p.values.clear();
    p.values.shrink_to_fit();
    p.has_values = false;
    return p;
}

} // namespace ptap
