#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ptap/comm.hpp"
#include "ptap/exchange.hpp"
#include "ptap/hash_containers.hpp"
#include "ptap/partition.hpp"

namespace ptap {

/// Column structure of one output row, split by ownership. Both sets hold
/// global column indices; `diag` has the ones inside the rank's owned range.
struct RowStructure {
    RowSet diag;
    RowSet offdiag;

    void clear() {
        diag.clear();
        offdiag.clear();
    }
    std::size_t size() const { return diag.size() + offdiag.size(); }
};

/// A LocalMatrix whose per-row capacities were fixed by a symbolic phase.
///
/// Column indices are written by the first numeric fill (sorted insertion
/// into the row's slots); from then on the structure is frozen and later
/// fills only locate existing entries. finalize() requires every row to be
/// filled exactly to capacity.
class AllocatedMatrix {
public:
    AllocatedMatrix() = default;
    AllocatedMatrix(rank_t rank, const RowPartition& row_part, const RowPartition& col_part,
                    std::span<const index_t> nzd, std::span<const index_t> nzo);
    /// Structure known up front: `diag` has local columns, `offdiag_global` global ones.
    AllocatedMatrix(rank_t rank, const RowPartition& row_part, const RowPartition& col_part, CsrMatrix diag,
                    CsrMatrix offdiag_global);

    /// Zeroes values and opens the matrix for add().
    void begin_fill();
    void add(index_t local_row, index_t global_col, real v);
    /// Adds a row given in strictly increasing global column order.
    void add_row(index_t local_row, std::span<const std::pair<index_t, real>> entries, real scale = 1.0);
    void add_row(index_t local_row, std::span<const index_t> cols, std::span<const real> vals);
    /// Checks fill == capacity on every row and freezes the structure.
    void finalize(KernelCounters* counters = nullptr);

    const LocalMatrix& matrix() const { return m_; }
    bool structured() const { return structured_; }
    index_t diag_capacity(index_t i) const { return m_.diag.row_length(i); }
    index_t offdiag_capacity(index_t i) const { return m_.offdiag.row_length(i); }
    std::size_t bytes() const;

private:
    void add_diag(index_t i, index_t local_col, real v);
    void add_offdiag(index_t i, index_t global_col, real v);

    LocalMatrix m_;
    std::vector<index_t> diag_fill_;
    std::vector<index_t> off_fill_;
    std::vector<std::uint8_t> diag_touched_;
    std::vector<std::uint8_t> off_touched_;
    bool structured_ = false;
    bool filling_ = false;
};

/// Builds a row structure one row at a time, in row order.
class StructureBuilder {
public:
    StructureBuilder(rank_t rank, const RowPartition& row_part, const RowPartition& col_part);
    void append(const RowStructure& row);
    index_t rows() const { return diag_.nrows; }
    std::size_t bytes() const { return diag_.bytes() + offdiag_.bytes(); }
    AllocatedMatrix finish() &&;

private:
    rank_t rank_;
    RowPartition row_part_;
    RowPartition col_part_;
    CsrMatrix diag_;
    CsrMatrix offdiag_;
    std::vector<index_t> scratch_;
};

/// Throws PartitionError unless A's columns are laid out like P's rows on this rank.
void check_conforming(const LocalMatrix& a, const LocalMatrix& p);

/// Structure of (left row) x right, where `local_cols` index right's rows and
/// `remote_cols` index `remote`'s rows (global columns). Adds into `out`.
void symbolic_row_product(std::span<const index_t> local_cols, std::span<const index_t> remote_cols,
                          const LocalMatrix& right, const CsrMatrix* remote, RowStructure& out);

/// Numeric counterpart; accumulates global column -> value into `out`.
void numeric_row_product(std::span<const index_t> local_cols, std::span<const real> local_vals,
                         std::span<const index_t> remote_cols, std::span<const real> remote_vals,
                         const LocalMatrix& right, const CsrMatrix* remote, RowAccumulator& out);

/// Structure of row i (local) of A*P, classified against P's owned column range.
void symbolic_row_ap(index_t i, const LocalMatrix& a, const LocalMatrix& p, const RemoteRows& pr, RowStructure& out);

/// Row i of A*P: out(j) += A(i,k) * P(k,j) over diag and remote rows.
void numeric_row_ap(index_t i, const LocalMatrix& a, const LocalMatrix& p, const RemoteRows& pr, RowAccumulator& out);

struct SymbolicAp {
    AllocatedMatrix product;
    RemoteRows remote;
};

/// Gathers remote rows of P and builds the structure of A*P row by row. Collective.
SymbolicAp symbolic_ap(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p);

/// Fills `alloc` with A*P. With `refresh_remote` the remote rows' values are
/// first updated from their owners (collective). Returns the filled matrix.
const LocalMatrix& numeric_ap(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p, AllocatedMatrix& alloc,
                              RemoteRows& rr, bool refresh_remote = true);

} // namespace ptap
