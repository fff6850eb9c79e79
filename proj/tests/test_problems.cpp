#include <doctest.h>

#include <cstdlib>

#include "ptap/problems.hpp"
#include "support.hpp"

using namespace ptap;
using namespace ptap::test;

namespace {

// Reference 27-point Laplacian built directly from lattice coordinates.
CsrMatrix reference_operator(index_t fx, index_t fy, index_t fz) {
    std::vector<Triplet> t;
    for (index_t k = 0; k < fz; ++k) {
        for (index_t j = 0; j < fy; ++j) {
            for (index_t i = 0; i < fx; ++i) {
                const index_t row = i + fx * (j + fy * k);
                index_t count = 0;
                for (index_t dk = -1; dk <= 1; ++dk) {
                    for (index_t dj = -1; dj <= 1; ++dj) {
                        for (index_t di = -1; di <= 1; ++di) {
                            const index_t x = i + di, y = j + dj, z = k + dk;
                            if ((di | dj | dk) == 0 || x < 0 || y < 0 || z < 0 || x >= fx || y >= fy || z >= fz) {
                                continue;
                            }
                            t.push_back({row, x + fx * (y + fy * z), -1.0});
                            ++count;
                        }
                    }
                }
                t.push_back({row, row, static_cast<real>(count)});
            }
        }
    }
    return csr_from_triplets(fx * fy * fz, fx * fy * fz, t);
}

real weight(index_t fine, index_t coarse) {
    const index_t d = std::llabs(fine - 2 * coarse);
    return d == 0 ? 1.0 : d == 1 ? 0.5 : 0.0;
}

// Reference trilinear interpolation: product of per-dimension hat weights.
CsrMatrix reference_interpolation(const GridSpec& g) {
    const index_t fx = g.fine_x(), fy = g.fine_y(), fz = g.fine_z();
    std::vector<Triplet> t;
    for (index_t k = 0; k < fz; ++k) {
        for (index_t j = 0; j < fy; ++j) {
            for (index_t i = 0; i < fx; ++i) {
                for (index_t c = 0; c < g.nz; ++c) {
                    for (index_t b = 0; b < g.ny; ++b) {
                        for (index_t a = 0; a < g.nx; ++a) {
                            const real w = weight(i, a) * weight(j, b) * weight(k, c);
                            if (w != 0.0) {
                                t.push_back({i + fx * (j + fy * k), a + g.nx * (b + g.ny * c), w});
                            }
                        }
                    }
                }
            }
        }
    }
    return csr_from_triplets(fx * fy * fz, g.nx * g.ny * g.nz, t);
}

} // namespace

TEST_CASE("grid dimension identities") {
    const GridDims a = grid_dims({1000, 1000, 1000});
    CHECK(a.n_fine == 7988005999);
    CHECK(a.n_coarse == 1000000000);
    const GridDims b = grid_dims({1500, 1500, 1500});
    CHECK(b.n_fine == 26973008999);
    CHECK(b.n_coarse == 3375000000);
    const GridDims c = grid_dims({8, 8, 8});
    CHECK(c.n_fine == 3375);
    CHECK(c.n_coarse == 512);
    CHECK(grid_dims({2, 3, 4}).n_fine == 3 * 5 * 7);
}

TEST_CASE("degenerate grids are rejected") {
    CHECK_THROWS_AS(GridSpec({1, 4, 4}).validate(), Error);
    CHECK_THROWS_AS(grid_dims({4, 0, 4}), Error);
}

TEST_CASE("model operator matches the lattice definition") {
    for (GridSpec g : {GridSpec{2, 2, 2}, GridSpec{3, 2, 4}, GridSpec{4, 4, 4}}) {
        const CsrMatrix a = model_operator_global(g);
        CHECK(a == reference_operator(g.fine_x(), g.fine_y(), g.fine_z()));
    }
}

TEST_CASE("model operator stencil counts and row sums") {
    const GridSpec g{4, 4, 4};
    const CsrMatrix a = model_operator_global(g);
    const index_t f = g.fine_x();
    const auto diag_of = [&](index_t row) {
        for (index_t e = a.row_offsets[row]; e < a.row_offsets[row + 1]; ++e) {
            if (a.col_indices[e] == row) {
                return a.values[e];
            }
        }
        return -1.0;
    };
    CHECK(diag_of(0) == 7.0);
    CHECK(a.row_length(0) == 8);
    const index_t interior = 1 + f * (1 + f * 1);
    CHECK(diag_of(interior) == 26.0);
    CHECK(a.row_length(interior) == 27);
    for (index_t i = 0; i < a.nrows; ++i) {
        real s = 0.0;
        for (real v : a.row_vals(i)) {
            s += v;
        }
        CHECK(s == 0.0);
    }
    CHECK(transpose(a) == a);
}

TEST_CASE("interpolation matches the trilinear definition") {
    for (GridSpec g : {GridSpec{2, 2, 2}, GridSpec{3, 4, 2}, GridSpec{4, 4, 4}}) {
        CHECK(interpolation_global(g) == reference_interpolation(g));
    }
}

TEST_CASE("interpolation rows form a partition of unity with at most eight entries") {
    const CsrMatrix p = interpolation_global({5, 4, 3});
    index_t longest = 0;
    for (index_t i = 0; i < p.nrows; ++i) {
        real s = 0.0;
        for (real v : p.row_vals(i)) {
            s += v;
        }
        CHECK(s == 1.0);
        longest = std::max(longest, p.row_length(i));
    }
    CHECK(longest == 8);
}

TEST_CASE("distributed generators agree with the global ones") {
    const GridSpec g{4, 3, 3};
    const GridDims d = grid_dims(g);
    for (int np : {1, 3, 7}) {
        const RowPartition fine = make_partition(d.n_fine, np);
        const RowPartition coarse = make_partition(d.n_coarse, np);
        std::vector<LocalMatrix> a, p;
        for (int r = 0; r < np; ++r) {
            a.push_back(build_model_operator(g, r, fine));
            p.push_back(build_interpolation(g, r, fine, coarse));
            a.back().validate();
            p.back().validate();
        }
        CHECK(assemble_global(a) == model_operator_global(g));
        CHECK(assemble_global(p) == interpolation_global(g));
    }
}

TEST_CASE("random instances are reproducible and well formed") {
    const RandomInstance x = random_instance(50, 20, 0.2, 42);
    const RandomInstance y = random_instance(50, 20, 0.2, 42);
    const RandomInstance z = random_instance(50, 20, 0.2, 43);
    CHECK(x.a == y.a);
    CHECK(x.p == y.p);
    CHECK_FALSE(x.a == z.a);
    for (index_t i = 0; i < x.a.nrows; ++i) {
        bool diag = false;
        for (index_t e = x.a.row_offsets[i]; e < x.a.row_offsets[i + 1]; ++e) {
            diag = diag || (x.a.col_indices[e] == i && x.a.values[e] != 0.0);
        }
        CHECK(diag);
    }
    for (real v : x.p.values) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
    }
    const RandomInstance s = random_instance(40, 10, 0.3, 5, true);
    CHECK(transpose(s.a) == s.a);
}

TEST_CASE("dense oracle: hand-computed product and pattern") {
    // A = [2 -1; -1 2], P = [1; 1] gives C = [2].
    const CsrMatrix a = tridiag(2, -1.0, 2.0);
    const CsrMatrix p = from_rows({{0}, {0}}, 1);
    const OracleMatrix c = oracle_ptap(to_oracle(a), to_oracle(p));
    CHECK(c(0, 0) == 2.0);
    // Rows of P^T pick AP rows {0}, {1,4}, {2,3,5}, {0,2,4}.
    const CsrMatrix want = from_rows({{0, 1, 3}, {1, 2, 3}, {0, 1, 2, 3}, {0, 1, 2, 3}}, 4);
    CHECK(oracle_ptap_pattern(toy_a(), toy_p()) == mask_of(want));
}

TEST_CASE("dense oracle refuses matrices above its cap") {
    CHECK_THROWS_AS(to_oracle(CsrMatrix(OracleMatrix::kMaxDim + 1, 1)), Error);
    CHECK_NOTHROW(to_oracle(CsrMatrix(OracleMatrix::kMaxDim, 1)));
}

TEST_CASE("relative difference scales by the largest entry") {
    const CsrMatrix x = from_rows({{0, 1}}, 2, 4.0);
    CsrMatrix y = x;
    y.values[1] = 3.0;
    CHECK(relative_difference(x, y) == 0.25);
    CHECK(relative_difference(x, x) == 0.0);
    CHECK(relative_difference(CsrMatrix(2, 2), CsrMatrix(2, 2)) == 0.0);
}

TEST_CASE("random instance density") {
    const RandomInstance full = random_instance(12, 7, 1.0, 3);
    CHECK(full.a.nnz() == 12 * 12);
    CHECK(full.p.nnz() == 12 * 7);
    const RandomInstance r = random_instance(50, 20, 0.2, 7);
    CHECK(r.p.nnz() >= 100);
    CHECK(r.p.nnz() <= 300);
}
