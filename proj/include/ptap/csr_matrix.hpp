#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ptap/types.hpp"

namespace ptap {

struct Triplet {
    index_t row = 0;
    index_t col = 0;
    real val = 0.0;

    friend bool operator==(const Triplet&, const Triplet&) = default;
};

/// Sequential compressed-sparse-row matrix.
///
/// Rows are column-sorted with no duplicates. A symbolic-only matrix has
/// `has_values == false` and an empty `values` array. Stored zeros are kept.
struct CsrMatrix {
    index_t nrows = 0;
    index_t ncols = 0;
    std::vector<index_t> row_offsets{0};
    std::vector<index_t> col_indices;
    std::vector<real> values;
    bool has_values = true;

    CsrMatrix() = default;
    CsrMatrix(index_t rows, index_t cols, bool with_values = true);

    index_t nnz() const { return row_offsets.empty() ? 0 : row_offsets.back(); }
    index_t row_length(index_t i) const { return row_offsets[i + 1] - row_offsets[i]; }
    bool row_empty(index_t i) const { return row_offsets[i + 1] == row_offsets[i]; }

    std::span<const index_t> row_cols(index_t i) const {
        return {col_indices.data() + row_offsets[i], static_cast<std::size_t>(row_length(i))};
    }
    std::span<index_t> row_cols(index_t i) {
        return {col_indices.data() + row_offsets[i], static_cast<std::size_t>(row_length(i))};
    }
    std::span<const real> row_vals(index_t i) const {
        return {values.data() + row_offsets[i], static_cast<std::size_t>(row_length(i))};
    }
    std::span<real> row_vals(index_t i) {
        return {values.data() + row_offsets[i], static_cast<std::size_t>(row_length(i))};
    }

    /// Storage held by the index and value arrays (capacity, not size).
    std::size_t bytes() const;

    /// Throws AssemblyError when a structural invariant is broken.
    void validate() const;

    /// Same structure, same values (bitwise); symbolic-only matrices compare structure only.
    friend bool operator==(const CsrMatrix& a, const CsrMatrix& b);
};

/// Duplicates are summed, rows come out column-sorted.
CsrMatrix csr_from_triplets(index_t nrows, index_t ncols, std::span<const Triplet> entries);

/// Structure-only assembly from (row, col) pairs; duplicates collapse.
CsrMatrix csr_pattern_from_triplets(index_t nrows, index_t ncols, std::span<const Triplet> entries);

std::vector<Triplet> to_triplets(const CsrMatrix& m);

CsrMatrix transpose(const CsrMatrix& m);

/// Numeric transpose into an existing structure produced by `transpose(m)` on
/// the same pattern. Throws StructureDriftError if the pattern changed.
void transpose_values_into(const CsrMatrix& m, CsrMatrix& mt);

CsrMatrix identity(index_t n);

/// Drops values, keeping the pattern.
CsrMatrix pattern_of(const CsrMatrix& m);

} // namespace ptap
