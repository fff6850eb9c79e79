#include "ptap/spgemm.hpp"

#include <algorithm>
#include <string>

namespace ptap {

namespace {

std::string row_desc(const LocalMatrix& m, index_t i) {
    return "row " + std::to_string(m.row_begin() + i) + " on rank " + std::to_string(m.rank);
}

// Sorted insert of `key` into slots [first, first + fill); returns slot index.
index_t locate_or_insert(std::vector<index_t>& cols, std::vector<real>& vals, index_t first, index_t& fill,
                         index_t cap, index_t key) {
    auto begin = cols.begin() + first;
    auto end = begin + fill;
    auto it = std::lower_bound(begin, end, key);
    const index_t pos = first + (it - begin);
    if (it != end && *it == key) {
        return pos;
    }
    if (fill == cap) {
        return -1;
    }
    std::move_backward(it, end, end + 1);
    std::move_backward(vals.begin() + pos, vals.begin() + first + fill, vals.begin() + first + fill + 1);
    *it = key;
    vals[pos] = 0.0;
    ++fill;
    return pos;
}

} // namespace

AllocatedMatrix::AllocatedMatrix(rank_t rank, const RowPartition& row_part, const RowPartition& col_part,
                                 std::span<const index_t> nzd, std::span<const index_t> nzo) {
    m_.rank = rank;
    m_.row_part = row_part;
    m_.col_part = col_part;
    const index_t n = m_.nrows();
    if (static_cast<index_t>(nzd.size()) != n || static_cast<index_t>(nzo.size()) != n) {
        throw PartitionError("row counts do not match the " + std::to_string(n) + " owned rows");
    }
    m_.diag = CsrMatrix(n, m_.ncols_owned(), true);
    m_.offdiag = CsrMatrix(n, m_.global_cols(), true);
    m_.diag.row_offsets.resize(static_cast<std::size_t>(n) + 1);
    m_.offdiag.row_offsets.resize(static_cast<std::size_t>(n) + 1);
    for (index_t i = 0; i < n; ++i) {
        m_.diag.row_offsets[i + 1] = m_.diag.row_offsets[i] + nzd[i];
        m_.offdiag.row_offsets[i + 1] = m_.offdiag.row_offsets[i] + nzo[i];
    }
    m_.diag.col_indices.assign(static_cast<std::size_t>(m_.diag.nnz()), -1);
    m_.diag.values.assign(static_cast<std::size_t>(m_.diag.nnz()), 0.0);
    m_.offdiag.col_indices.assign(static_cast<std::size_t>(m_.offdiag.nnz()), -1);
    m_.offdiag.values.assign(static_cast<std::size_t>(m_.offdiag.nnz()), 0.0);
    diag_fill_.assign(static_cast<std::size_t>(n), 0);
    off_fill_.assign(static_cast<std::size_t>(n), 0);
}

AllocatedMatrix::AllocatedMatrix(rank_t rank, const RowPartition& row_part, const RowPartition& col_part,
                                 CsrMatrix diag, CsrMatrix offdiag_global) {
    m_.rank = rank;
    m_.row_part = row_part;
    m_.col_part = col_part;
    const index_t n = m_.nrows();
    if (diag.nrows != n || offdiag_global.nrows != n) {
        throw PartitionError("structure rows do not match the " + std::to_string(n) + " owned rows");
    }
    m_.diag = std::move(diag);
    m_.diag.ncols = m_.ncols_owned();
    m_.diag.has_values = true;
    m_.diag.values.assign(m_.diag.col_indices.size(), 0.0);
    m_.col_map = offdiag_global.col_indices;
    std::sort(m_.col_map.begin(), m_.col_map.end());
    m_.col_map.erase(std::unique(m_.col_map.begin(), m_.col_map.end()), m_.col_map.end());
    m_.col_map.shrink_to_fit();
    m_.offdiag = std::move(offdiag_global);
    for (auto& c : m_.offdiag.col_indices) {
        c = std::lower_bound(m_.col_map.begin(), m_.col_map.end(), c) - m_.col_map.begin();
    }
    m_.offdiag.ncols = static_cast<index_t>(m_.col_map.size());
    m_.offdiag.has_values = true;
    m_.offdiag.values.assign(m_.offdiag.col_indices.size(), 0.0);
    diag_fill_.assign(static_cast<std::size_t>(n), 0);
    off_fill_.assign(static_cast<std::size_t>(n), 0);
    structured_ = true;
}

void AllocatedMatrix::begin_fill() {
    std::fill(m_.diag.values.begin(), m_.diag.values.end(), 0.0);
    std::fill(m_.offdiag.values.begin(), m_.offdiag.values.end(), 0.0);
    std::fill(diag_fill_.begin(), diag_fill_.end(), 0);
    std::fill(off_fill_.begin(), off_fill_.end(), 0);
    if (structured_) {
        diag_touched_.assign(m_.diag.col_indices.size(), 0);
        off_touched_.assign(m_.offdiag.col_indices.size(), 0);
    }
    filling_ = true;
}

void AllocatedMatrix::add_diag(index_t i, index_t c, real v) {
    const index_t first = m_.diag.row_offsets[i];
    const index_t cap = m_.diag.row_length(i);
    if (!structured_) {
        const index_t pos = locate_or_insert(m_.diag.col_indices, m_.diag.values, first, diag_fill_[i], cap, c);
        if (pos < 0) {
            throw StructureDriftError(row_desc(m_, i) + ": diagonal-block fill exceeds its symbolic capacity " +
                                      std::to_string(cap));
        }
        m_.diag.values[pos] += v;
        return;
    }
    const auto cols = m_.diag.row_cols(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c) {
        throw StructureDriftError(row_desc(m_, i) + ": column " + std::to_string(c + m_.col_begin()) +
                                  " is not in the symbolic structure");
    }
    const auto pos = static_cast<std::size_t>(first + (it - cols.begin()));
    if (!diag_touched_[pos]) {
        diag_touched_[pos] = 1;
        ++diag_fill_[i];
    }
    m_.diag.values[pos] += v;
}

void AllocatedMatrix::add_offdiag(index_t i, index_t g, real v) {
    const index_t first = m_.offdiag.row_offsets[i];
    const index_t cap = m_.offdiag.row_length(i);
    if (!structured_) {
        const index_t pos =
            locate_or_insert(m_.offdiag.col_indices, m_.offdiag.values, first, off_fill_[i], cap, g);
        if (pos < 0) {
            throw StructureDriftError(row_desc(m_, i) + ": off-diagonal fill exceeds its symbolic capacity " +
                                      std::to_string(cap));
        }
        m_.offdiag.values[pos] += v;
        return;
    }
    auto mit = std::lower_bound(m_.col_map.begin(), m_.col_map.end(), g);
    const auto cols = m_.offdiag.row_cols(i);
    auto it = cols.end();
    if (mit != m_.col_map.end() && *mit == g) {
        it = std::lower_bound(cols.begin(), cols.end(), mit - m_.col_map.begin());
    }
    if (it == cols.end() || m_.col_map[*it] != g) {
        throw StructureDriftError(row_desc(m_, i) + ": column " + std::to_string(g) +
                                  " is not in the symbolic structure");
    }
    const auto pos = static_cast<std::size_t>(first + (it - cols.begin()));
    if (!off_touched_[pos]) {
        off_touched_[pos] = 1;
        ++off_fill_[i];
    }
    m_.offdiag.values[pos] += v;
}

void AllocatedMatrix::add(index_t local_row, index_t global_col, real v) {
    if (!filling_) {
        throw StructureDriftError("add() outside begin_fill()/finalize()");
    }
    if (local_row < 0 || local_row >= m_.nrows()) {
        throw PartitionError("local row " + std::to_string(local_row) + " out of range");
    }
    if (global_col < 0 || global_col >= m_.global_cols()) {
        throw PartitionError("column " + std::to_string(global_col) + " out of range");
    }
    if (m_.owns_col(global_col)) {
        add_diag(local_row, global_col - m_.col_begin(), v);
    } else {
        add_offdiag(local_row, global_col, v);
    }
}

void AllocatedMatrix::add_row(index_t local_row, std::span<const std::pair<index_t, real>> entries, real scale) {
    for (const auto& [g, v] : entries) {
        add(local_row, g, scale * v);
    }
}

void AllocatedMatrix::add_row(index_t local_row, std::span<const index_t> cols, std::span<const real> vals) {
    for (std::size_t e = 0; e < cols.size(); ++e) {
        add(local_row, cols[e], vals[e]);
    }
}

StructureBuilder::StructureBuilder(rank_t rank, const RowPartition& row_part, const RowPartition& col_part)
    : rank_(rank), row_part_(row_part), col_part_(col_part), diag_(0, col_part.size(rank), false),
      offdiag_(0, col_part.nglobal, false) {}

void StructureBuilder::append(const RowStructure& row) {
    const index_t cb = col_part_.begin(rank_);
    scratch_.clear();
    row.diag.sorted_keys(scratch_);
    for (index_t g : scratch_) {
        diag_.col_indices.push_back(g - cb);
    }
    diag_.row_offsets.push_back(static_cast<index_t>(diag_.col_indices.size()));
    ++diag_.nrows;
    scratch_.clear();
    row.offdiag.sorted_keys(scratch_);
    offdiag_.col_indices.insert(offdiag_.col_indices.end(), scratch_.begin(), scratch_.end());
    offdiag_.row_offsets.push_back(static_cast<index_t>(offdiag_.col_indices.size()));
    ++offdiag_.nrows;
}

AllocatedMatrix StructureBuilder::finish() && {
    diag_.col_indices.shrink_to_fit();
    offdiag_.col_indices.shrink_to_fit();
    diag_.row_offsets.shrink_to_fit();
    offdiag_.row_offsets.shrink_to_fit();
    return AllocatedMatrix(rank_, row_part_, col_part_, std::move(diag_), std::move(offdiag_));
}

void AllocatedMatrix::finalize(KernelCounters* counters) {
    if (!filling_) {
        throw StructureDriftError("finalize() without begin_fill()");
    }
    for (index_t i = 0; i < m_.nrows(); ++i) {
        if (diag_fill_[i] != m_.diag.row_length(i) || off_fill_[i] != m_.offdiag.row_length(i)) {
            throw StructureDriftError(row_desc(m_, i) + ": numeric fill " +
                                      std::to_string(diag_fill_[i] + off_fill_[i]) + " differs from capacity " +
                                      std::to_string(m_.diag.row_length(i) + m_.offdiag.row_length(i)));
        }
        if (counters != nullptr) {
            ++counters->rows_fill_checked;
        }
    }
    filling_ = false;
    if (structured_) {
        return;
    }
    // First fill: compact the off-diagonal columns.
    m_.col_map = m_.offdiag.col_indices;
    std::sort(m_.col_map.begin(), m_.col_map.end());
    m_.col_map.erase(std::unique(m_.col_map.begin(), m_.col_map.end()), m_.col_map.end());
    m_.col_map.shrink_to_fit();
    for (auto& c : m_.offdiag.col_indices) {
        c = std::lower_bound(m_.col_map.begin(), m_.col_map.end(), c) - m_.col_map.begin();
    }
    m_.offdiag.ncols = static_cast<index_t>(m_.col_map.size());
    structured_ = true;
}

std::size_t AllocatedMatrix::bytes() const {
    return m_.bytes() + (diag_fill_.capacity() + off_fill_.capacity()) * sizeof(index_t) + diag_touched_.capacity() +
           off_touched_.capacity();
}

void check_conforming(const LocalMatrix& a, const LocalMatrix& p) {
    if (a.global_cols() != p.global_rows()) {
        throw PartitionError("A has " + std::to_string(a.global_cols()) + " columns but P has " +
                             std::to_string(p.global_rows()) + " rows");
    }
    if (a.col_part != p.row_part) {
        throw PartitionError("A's column partition differs from P's row partition");
    }
    if (a.rank != p.rank) {
        throw PartitionError("A and P belong to different ranks");
    }
}

void symbolic_row_product(std::span<const index_t> local_cols, std::span<const index_t> remote_cols,
                          const LocalMatrix& right, const CsrMatrix* remote, RowStructure& out) {
    const index_t cb = right.col_begin();
    for (index_t k : local_cols) {
        for (index_t c : right.diag.row_cols(k)) {
            out.diag.insert(c + cb);
        }
        for (index_t c : right.offdiag.row_cols(k)) {
            out.offdiag.insert(right.col_map[c]);
        }
    }
    for (index_t k : remote_cols) {
        for (index_t g : remote->row_cols(k)) {
            if (right.owns_col(g)) {
                out.diag.insert(g);
            } else {
                out.offdiag.insert(g);
            }
        }
    }
}

void numeric_row_product(std::span<const index_t> local_cols, std::span<const real> local_vals,
                         std::span<const index_t> remote_cols, std::span<const real> remote_vals,
                         const LocalMatrix& right, const CsrMatrix* remote, RowAccumulator& out) {
    const index_t cb = right.col_begin();
    for (std::size_t e = 0; e < local_cols.size(); ++e) {
        const index_t k = local_cols[e];
        const real a = local_vals[e];
        const auto dc = right.diag.row_cols(k);
        const auto dv = right.diag.row_vals(k);
        for (std::size_t q = 0; q < dc.size(); ++q) {
            out.add(dc[q] + cb, a * dv[q]);
        }
        const auto oc = right.offdiag.row_cols(k);
        const auto ov = right.offdiag.row_vals(k);
        for (std::size_t q = 0; q < oc.size(); ++q) {
            out.add(right.col_map[oc[q]], a * ov[q]);
        }
    }
    for (std::size_t e = 0; e < remote_cols.size(); ++e) {
        const index_t k = remote_cols[e];
        const real a = remote_vals[e];
        const auto rc = remote->row_cols(k);
        const auto rv = remote->row_vals(k);
        for (std::size_t q = 0; q < rc.size(); ++q) {
            out.add(rc[q], a * rv[q]);
        }
    }
}

namespace {

// A's off-diagonal columns index remote rows directly when the remote set was
// gathered from A's own col_map (source_cols == col_map).
void check_remote_matches(const LocalMatrix& a, const RemoteRows& pr) {
    if (pr.source_cols != a.col_map) {
        throw PartitionError("remote rows of P do not match A's off-diagonal columns");
    }
}

} // namespace

void symbolic_row_ap(index_t i, const LocalMatrix& a, const LocalMatrix& p, const RemoteRows& pr, RowStructure& out) {
    symbolic_row_product(a.diag.row_cols(i), a.offdiag.row_cols(i), p, &pr.rows, out);
}

void numeric_row_ap(index_t i, const LocalMatrix& a, const LocalMatrix& p, const RemoteRows& pr, RowAccumulator& out) {
    numeric_row_product(a.diag.row_cols(i), a.diag.row_vals(i), a.offdiag.row_cols(i), a.offdiag.row_vals(i), p,
                        &pr.rows, out);
}

SymbolicAp symbolic_ap(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p) {
    check_conforming(a, p);
    ++ctx.counters().symbolic_ap;
    SymbolicAp out;
    const NeighborList neighbors = build_neighbor_list(a, a.col_part);
    if (ctx.size() > 1) {
        out.remote = gather_remote_rows(ctx, neighbors, p);
    } else {
        out.remote.rows = CsrMatrix(0, p.global_cols(), p.has_values());
    }
    check_remote_matches(a, out.remote);

    const index_t n = a.nrows();
    StructureBuilder builder(a.rank, a.row_part, p.col_part);
    RowStructure rs;
    rs.diag.track(ctx.ledger_ptr(), MemCategory::transient_hash);
    rs.offdiag.track(ctx.ledger_ptr(), MemCategory::transient_hash);
    for (index_t i = 0; i < n; ++i) {
        rs.clear();
        symbolic_row_ap(i, a, p, out.remote, rs);
        builder.append(rs);
        ++ctx.counters().ap_row_symbolic;
    }
    out.product = std::move(builder).finish();
    return out;
}

const LocalMatrix& numeric_ap(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p, AllocatedMatrix& alloc,
                              RemoteRows& rr, bool refresh_remote) {
    check_conforming(a, p);
    if (!a.has_values() || !p.has_values()) {
        throw StructureDriftError("numeric product needs numeric A and P");
    }
    if (alloc.matrix().nrows() != a.nrows() || alloc.matrix().col_part != p.col_part) {
        throw StructureDriftError("allocated product does not match A and P");
    }
    ++ctx.counters().numeric_ap;
    if (refresh_remote && ctx.size() > 1) {
        update_remote_rows_numeric(ctx, rr, p);
    }
    check_remote_matches(a, rr);

    RowAccumulator acc;
    acc.track(ctx.ledger_ptr(), MemCategory::transient_hash);
    std::vector<std::pair<index_t, real>> row;
    alloc.begin_fill();
    for (index_t i = 0; i < a.nrows(); ++i) {
        numeric_row_ap(i, a, p, rr, acc);
        row.clear();
        acc.drain_sorted(row);
        alloc.add_row(i, row);
        ++ctx.counters().ap_row_numeric;
    }
    alloc.finalize(&ctx.counters());
    return alloc.matrix();
}

} // namespace ptap
