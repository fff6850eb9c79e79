#pragma once

#include <cstdint>
#include <vector>

#include "ptap/csr_matrix.hpp"
#include "ptap/partition.hpp"

namespace ptap {

/// Coarse grid points per dimension. The fine grid refines it uniformly,
/// keeping the coarse points: 2n-1 points per dimension.
struct GridSpec {
    index_t nx = 2;
    index_t ny = 2;
    index_t nz = 2;

    void validate() const;
    index_t fine_x() const { return 2 * nx - 1; }
    index_t fine_y() const { return 2 * ny - 1; }
    index_t fine_z() const { return 2 * nz - 1; }
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct GridDims {
    std::int64_t n_fine = 0;
    std::int64_t n_coarse = 0;
};

GridDims grid_dims(const GridSpec& g);

/// 27-point graph Laplacian on the fine grid, x fastest: -1 to every lattice
/// neighbour, the neighbour count on the diagonal. Only the rank's rows are built.
LocalMatrix build_model_operator(const GridSpec& g, rank_t rank, const RowPartition& part);

/// Trilinear interpolation from the coarse to the fine grid (n_fine x n_coarse).
LocalMatrix build_interpolation(const GridSpec& g, rank_t rank, const RowPartition& fine_part,
                                const RowPartition& coarse_part);

/// Whole-matrix versions for single-context use.
CsrMatrix model_operator_global(const GridSpec& g);
CsrMatrix interpolation_global(const GridSpec& g);

struct RandomInstance {
    CsrMatrix a; ///< n x n, nonzero diagonal
    CsrMatrix p; ///< n x m
};

/// Entries present independently with probability `density`, values uniform in [-1, 1].
/// A's diagonal is always present. `symmetric` mirrors A's strict lower triangle.
RandomInstance random_instance(index_t n, index_t m, double density, std::uint64_t seed, bool symmetric = false);

/// Dense row-major matrix for the brute-force oracle.
struct OracleMatrix {
    static constexpr index_t kMaxDim = 2000;

    index_t nrows = 0;
    index_t ncols = 0;
    std::vector<double> data;

    OracleMatrix() = default;
    OracleMatrix(index_t rows, index_t cols);
    double& operator()(index_t i, index_t j) { return data[static_cast<std::size_t>(i * ncols + j)]; }
    double operator()(index_t i, index_t j) const { return data[static_cast<std::size_t>(i * ncols + j)]; }
};

/// Throws Error when either dimension exceeds OracleMatrix::kMaxDim.
OracleMatrix to_oracle(const CsrMatrix& m);

/// C(i,j) = sum_I P(I,i) sum_J A(I,J) P(J,j), full dense arithmetic.
OracleMatrix oracle_ptap(const OracleMatrix& a, const OracleMatrix& p);

/// Structural P^T A P: true where some path i <- I -> J -> j exists in the patterns.
std::vector<bool> oracle_ptap_pattern(const CsrMatrix& a, const CsrMatrix& p);

/// max |x - y| over all entries, divided by the larger max-abs entry of the two (0 when both vanish).
double relative_difference(const CsrMatrix& x, const OracleMatrix& y);
double relative_difference(const CsrMatrix& x, const CsrMatrix& y);

} // namespace ptap
