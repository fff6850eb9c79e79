#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ptap/csr_matrix.hpp"
#include "ptap/types.hpp"

namespace ptap {

/// Contiguous block-row ownership of `nglobal` indices over `np` ranks.
struct RowPartition {
    index_t nglobal = 0;
    std::vector<index_t> offsets{0}; ///< length np+1

    int np() const { return static_cast<int>(offsets.size()) - 1; }
    index_t begin(rank_t r) const { return offsets[r]; }
    index_t end(rank_t r) const { return offsets[r + 1]; }
    index_t size(rank_t r) const { return offsets[r + 1] - offsets[r]; }
    bool owns(rank_t r, index_t i) const { return offsets[r] <= i && i < offsets[r + 1]; }

    friend bool operator==(const RowPartition&, const RowPartition&) = default;
};

/// Sizes differ by at most one; the first nglobal % np ranks get the extra row.
RowPartition make_partition(index_t nglobal, int np);

/// Rank owning global index `i`.
rank_t owner(const RowPartition& part, index_t i);

/// One rank's rows of a distributed matrix.
///
/// `diag` holds the columns the rank owns, indexed locally from `col_begin`.
/// `offdiag` holds every other column, compacted: local column c stands for
/// global column `col_map[c]`, and `col_map` is strictly increasing.
struct LocalMatrix {
    rank_t rank = 0;
    RowPartition row_part;
    RowPartition col_part;
    CsrMatrix diag;
    CsrMatrix offdiag;
    std::vector<index_t> col_map;

    index_t row_begin() const { return row_part.begin(rank); }
    index_t row_end() const { return row_part.end(rank); }
    index_t col_begin() const { return col_part.begin(rank); }
    index_t col_end() const { return col_part.end(rank); }
    index_t global_rows() const { return row_part.nglobal; }
    index_t global_cols() const { return col_part.nglobal; }
    index_t nrows() const { return row_part.size(rank); }
    index_t ncols_owned() const { return col_part.size(rank); }
    bool has_values() const { return diag.has_values; }
    bool owns_col(index_t g) const { return col_part.owns(rank, g); }

    /// Appends row `i` (local) with global, increasing columns.
    void global_row(index_t i, std::vector<index_t>& cols, std::vector<real>* vals = nullptr) const;

    std::size_t bytes() const;

    /// Throws PartitionError when a layout invariant does not hold.
    void validate() const;

    friend bool operator==(const LocalMatrix&, const LocalMatrix&) = default;
};

/// Hash of the block structure (offsets, columns, col_map), not the values.
std::uint64_t structure_fingerprint(const LocalMatrix& m);

/// Rows [begin, end) of `m` as a standalone matrix (columns unchanged).
CsrMatrix row_slice(const CsrMatrix& m, index_t begin, index_t end);

/// Splits the rank's rows (global columns, one CSR row per owned row) into diag/offdiag blocks.
LocalMatrix split_local(rank_t rank, const CsrMatrix& rows, const RowPartition& row_part,
                        const RowPartition& col_part);

/// Same, from global-index triplets. Entries in rows the rank does not own are rejected.
LocalMatrix split_local(rank_t rank, std::span<const Triplet> entries, const RowPartition& row_part,
                        const RowPartition& col_part, bool with_values = true);

/// Convenience: the rank's piece of a globally assembled matrix.
LocalMatrix distribute(const CsrMatrix& global, rank_t rank, const RowPartition& row_part,
                       const RowPartition& col_part);

/// Inverse of split_local: the rank's rows with global column indices.
CsrMatrix merge_back(const LocalMatrix& m);

/// Stacks every rank's rows into one global matrix. `pieces` must be in rank order.
CsrMatrix assemble_global(std::span<const LocalMatrix> pieces);

/// Off-diagonal columns grouped by the rank that owns them.
struct NeighborList {
    std::vector<rank_t> ranks;                 ///< ascending, never the calling rank
    std::vector<std::vector<index_t>> columns; ///< columns[k] are owned by ranks[k], ascending

    std::size_t size() const { return ranks.size(); }
    bool empty() const { return ranks.empty(); }
};

NeighborList build_neighbor_list(const LocalMatrix& m, const RowPartition& col_part);

} // namespace ptap
