#include "ptap/partition.hpp"

#include <algorithm>
#include <string>

namespace ptap {

RowPartition make_partition(index_t nglobal, int np) {
    if (np < 1) {
        throw PartitionError("partition needs at least one rank, got " + std::to_string(np));
    }
    if (nglobal < 0) {
        throw PartitionError("negative partition extent");
    }
    RowPartition p;
    p.nglobal = nglobal;
    p.offsets.assign(static_cast<std::size_t>(np) + 1, 0);
    const index_t base = nglobal / np;
    const index_t extra = nglobal % np;
    for (int r = 0; r < np; ++r) {
        p.offsets[r + 1] = p.offsets[r] + base + (r < extra ? 1 : 0);
    }
    return p;
}

rank_t owner(const RowPartition& part, index_t i) {
    if (i < 0 || i >= part.nglobal) {
        throw PartitionError("index " + std::to_string(i) + " outside partition of " + std::to_string(part.nglobal));
    }
    // Last offset <= i; empty ranks share an offset with their successor, so take the last one.
    auto it = std::upper_bound(part.offsets.begin(), part.offsets.end(), i);
    return static_cast<rank_t>(it - part.offsets.begin()) - 1;
}

void LocalMatrix::global_row(index_t i, std::vector<index_t>& cols, std::vector<real>* vals) const {
    // Off-diagonal columns below the owned range, then the owned range, then the rest.
    const auto ocols = offdiag.row_cols(i);
    const auto dcols = diag.row_cols(i);
    const auto split = std::lower_bound(ocols.begin(), ocols.end(), col_begin(),
                                        [&](index_t c, index_t g) { return col_map[c] < g; }) -
                       ocols.begin();
    const bool v = vals != nullptr && has_values();
    for (std::ptrdiff_t k = 0; k < split; ++k) {
        cols.push_back(col_map[ocols[k]]);
        if (v) {
            vals->push_back(offdiag.row_vals(i)[k]);
        }
    }
    for (std::size_t k = 0; k < dcols.size(); ++k) {
        cols.push_back(dcols[k] + col_begin());
        if (v) {
            vals->push_back(diag.row_vals(i)[k]);
        }
    }
    for (auto k = static_cast<std::size_t>(split); k < ocols.size(); ++k) {
        cols.push_back(col_map[ocols[k]]);
        if (v) {
            vals->push_back(offdiag.row_vals(i)[k]);
        }
    }
}

std::uint64_t structure_fingerprint(const LocalMatrix& m) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const std::vector<index_t>& v) {
        for (index_t x : v) {
            h = (h ^ static_cast<std::uint64_t>(x)) * 0x100000001b3ull;
        }
        h = (h ^ v.size()) * 0x100000001b3ull;
    };
    mix(m.diag.row_offsets);
    mix(m.diag.col_indices);
    mix(m.offdiag.row_offsets);
    mix(m.offdiag.col_indices);
    mix(m.col_map);
    mix(m.row_part.offsets);
    mix(m.col_part.offsets);
    return h;
}

std::size_t LocalMatrix::bytes() const {
    return diag.bytes() + offdiag.bytes() + col_map.capacity() * sizeof(index_t);
}

void LocalMatrix::validate() const {
    try {
        diag.validate();
        offdiag.validate();
    } catch (const AssemblyError& e) {
        throw PartitionError(std::string("local block invalid: ") + e.what());
    }
    if (diag.nrows != nrows() || offdiag.nrows != nrows()) {
        throw PartitionError("local block row counts do not match the owned row range");
    }
    if (diag.ncols != ncols_owned() || offdiag.ncols != static_cast<index_t>(col_map.size())) {
        throw PartitionError("local block column counts do not match the column layout");
    }
    for (std::size_t c = 0; c < col_map.size(); ++c) {
        if ((c > 0 && col_map[c] <= col_map[c - 1]) || owns_col(col_map[c]) || col_map[c] < 0 ||
            col_map[c] >= global_cols()) {
            throw PartitionError("col_map must be increasing global columns outside the owned range");
        }
    }
    std::vector<bool> used(col_map.size(), false);
    for (index_t c : offdiag.col_indices) {
        used[c] = true;
    }
    if (std::find(used.begin(), used.end(), false) != used.end()) {
        throw PartitionError("col_map lists a column with no off-diagonal entry");
    }
}

CsrMatrix row_slice(const CsrMatrix& m, index_t begin, index_t end) {
    if (begin < 0 || end < begin || end > m.nrows) {
        throw PartitionError("row slice out of range");
    }
    CsrMatrix s(end - begin, m.ncols, m.has_values);
    const index_t base = m.row_offsets[begin];
    for (index_t i = begin; i < end; ++i) {
        s.row_offsets[i - begin + 1] = m.row_offsets[i + 1] - base;
    }
    s.col_indices.assign(m.col_indices.begin() + base, m.col_indices.begin() + m.row_offsets[end]);
    if (m.has_values) {
        s.values.assign(m.values.begin() + base, m.values.begin() + m.row_offsets[end]);
    }
    return s;
}

LocalMatrix split_local(rank_t rank, const CsrMatrix& rows, const RowPartition& row_part,
                        const RowPartition& col_part) {
    if (rank < 0 || rank >= row_part.np() || row_part.np() != col_part.np()) {
        throw PartitionError("rank " + std::to_string(rank) + " not in partition");
    }
    if (rows.nrows != row_part.size(rank)) {
        throw PartitionError("rank " + std::to_string(rank) + " owns " + std::to_string(row_part.size(rank)) +
                             " rows but was given " + std::to_string(rows.nrows));
    }
    if (rows.ncols != col_part.nglobal) {
        throw PartitionError("row slice column count does not match the column partition");
    }

    LocalMatrix m;
    m.rank = rank;
    m.row_part = row_part;
    m.col_part = col_part;

    const bool vals = rows.has_values;
    for (index_t c : rows.col_indices) {
        if (!m.owns_col(c)) {
            m.col_map.push_back(c);
        }
    }
    std::sort(m.col_map.begin(), m.col_map.end());
    m.col_map.erase(std::unique(m.col_map.begin(), m.col_map.end()), m.col_map.end());
    m.col_map.shrink_to_fit();

    m.diag = CsrMatrix(rows.nrows, m.ncols_owned(), vals);
    m.offdiag = CsrMatrix(rows.nrows, static_cast<index_t>(m.col_map.size()), vals);
    for (index_t i = 0; i < rows.nrows; ++i) {
        for (index_t k = rows.row_offsets[i]; k < rows.row_offsets[i + 1]; ++k) {
            const index_t c = rows.col_indices[k];
            CsrMatrix& block = m.owns_col(c) ? m.diag : m.offdiag;
            const index_t local = m.owns_col(c)
                                      ? c - m.col_begin()
                                      : std::lower_bound(m.col_map.begin(), m.col_map.end(), c) - m.col_map.begin();
            block.col_indices.push_back(local);
            if (vals) {
                block.values.push_back(rows.values[k]);
            }
        }
        m.diag.row_offsets[i + 1] = static_cast<index_t>(m.diag.col_indices.size());
        m.offdiag.row_offsets[i + 1] = static_cast<index_t>(m.offdiag.col_indices.size());
    }
    for (CsrMatrix* b : {&m.diag, &m.offdiag}) {
        b->col_indices.shrink_to_fit();
        b->values.shrink_to_fit();
    }
    return m;
}

LocalMatrix split_local(rank_t rank, std::span<const Triplet> entries, const RowPartition& row_part,
                        const RowPartition& col_part, bool with_values) {
    if (rank < 0 || rank >= row_part.np()) {
        throw PartitionError("rank " + std::to_string(rank) + " not in partition");
    }
    const index_t begin = row_part.begin(rank);
    std::vector<Triplet> shifted;
    shifted.reserve(entries.size());
    for (const auto& t : entries) {
        if (!row_part.owns(rank, t.row)) {
            throw PartitionError("entry in row " + std::to_string(t.row) + " is not owned by rank " +
                                 std::to_string(rank));
        }
        shifted.push_back({t.row - begin, t.col, t.val});
    }
    const CsrMatrix rows = with_values ? csr_from_triplets(row_part.size(rank), col_part.nglobal, shifted)
                                       : csr_pattern_from_triplets(row_part.size(rank), col_part.nglobal, shifted);
    return split_local(rank, rows, row_part, col_part);
}

LocalMatrix distribute(const CsrMatrix& global, rank_t rank, const RowPartition& row_part,
                       const RowPartition& col_part) {
    if (global.nrows != row_part.nglobal || global.ncols != col_part.nglobal) {
        throw PartitionError("matrix dimensions do not match the partitions");
    }
    return split_local(rank, row_slice(global, row_part.begin(rank), row_part.end(rank)), row_part, col_part);
}

CsrMatrix merge_back(const LocalMatrix& m) {
    CsrMatrix out(m.nrows(), m.global_cols(), m.has_values());
    out.col_indices.reserve(static_cast<std::size_t>(m.diag.nnz() + m.offdiag.nnz()));
    if (m.has_values()) {
        out.values.reserve(out.col_indices.capacity());
    }
    for (index_t i = 0; i < m.nrows(); ++i) {
        m.global_row(i, out.col_indices, m.has_values() ? &out.values : nullptr);
        out.row_offsets[i + 1] = static_cast<index_t>(out.col_indices.size());
    }
    return out;
}

CsrMatrix assemble_global(std::span<const LocalMatrix> pieces) {
    if (pieces.empty()) {
        return {};
    }
    const bool vals = pieces.front().has_values();
    CsrMatrix out(pieces.front().global_rows(), pieces.front().global_cols(), vals);
    index_t expect = 0;
    for (const auto& p : pieces) {
        if (p.row_begin() != expect || p.global_cols() != out.ncols) {
            throw PartitionError("pieces are not contiguous rank-ordered rows of one matrix");
        }
        for (index_t i = 0; i < p.nrows(); ++i) {
            p.global_row(i, out.col_indices, vals ? &out.values : nullptr);
            out.row_offsets[p.row_begin() + i + 1] = static_cast<index_t>(out.col_indices.size());
        }
        expect = p.row_end();
    }
    if (expect != out.nrows) {
        throw PartitionError("pieces do not cover every row");
    }
    return out;
}

NeighborList build_neighbor_list(const LocalMatrix& m, const RowPartition& col_part) {
    NeighborList nl;
    for (index_t g : m.col_map) {
        const rank_t r = owner(col_part, g);
        if (nl.ranks.empty() || nl.ranks.back() != r) {
            nl.ranks.push_back(r);
            nl.columns.emplace_back();
        }
        nl.columns.back().push_back(g);
    }
    return nl;
}

} // namespace ptap
