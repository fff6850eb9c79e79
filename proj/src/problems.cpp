#include "ptap/problems.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

namespace ptap {

void GridSpec::validate() const {
    if (nx < 2 || ny < 2 || nz < 2) {
        throw Error("grid needs at least 2 coarse points per dimension, got " + std::to_string(nx) + "," +
                    std::to_string(ny) + "," + std::to_string(nz));
    }
}

GridDims grid_dims(const GridSpec& g) {
    g.validate();
    return {g.fine_x() * g.fine_y() * g.fine_z(), g.nx * g.ny * g.nz};
}

namespace {

void check_part(const RowPartition& part, index_t n, const char* what) {
    if (part.nglobal != n) {
        throw PartitionError(std::string(what) + " partition covers " + std::to_string(part.nglobal) +
                             " indices, grid has " + std::to_string(n));
    }
}

CsrMatrix operator_rows(const GridSpec& g, index_t begin, index_t end) {
    const index_t fx = g.fine_x(), fy = g.fine_y(), fz = g.fine_z();
    CsrMatrix rows(0, fx * fy * fz, true);
    for (index_t r = begin; r < end; ++r) {
        const index_t x = r % fx, y = (r / fx) % fy, z = r / (fx * fy);
        index_t neighbours = 0;
        std::size_t diag_pos = 0;
        for (index_t dz = -1; dz <= 1; ++dz) {
            for (index_t dy = -1; dy <= 1; ++dy) {
                for (index_t dx = -1; dx <= 1; ++dx) {
                    const index_t X = x + dx, Y = y + dy, Z = z + dz;
                    if (X < 0 || X >= fx || Y < 0 || Y >= fy || Z < 0 || Z >= fz) {
                        continue;
                    }
                    if (dx == 0 && dy == 0 && dz == 0) {
                        diag_pos = rows.col_indices.size();
                        rows.col_indices.push_back(r);
                        rows.values.push_back(0.0);
                        continue;
                    }
                    rows.col_indices.push_back(X + fx * (Y + fy * Z));
                    rows.values.push_back(-1.0);
                    ++neighbours;
                }
            }
        }
        rows.values[diag_pos] = static_cast<real>(neighbours);
        rows.row_offsets.push_back(static_cast<index_t>(rows.col_indices.size()));
        ++rows.nrows;
    }
    return rows;
}

struct Weights {
    index_t idx[2];
    real w[2];
    int n;
};

Weights weights_1d(index_t i) {
    if (i % 2 == 0) {
        return {{i / 2, 0}, {1.0, 0.0}, 1};
    }
    return {{(i - 1) / 2, (i + 1) / 2}, {0.5, 0.5}, 2};
}

CsrMatrix interpolation_rows(const GridSpec& g, index_t begin, index_t end) {
    const index_t fx = g.fine_x(), fy = g.fine_y();
    CsrMatrix rows(0, g.nx * g.ny * g.nz, true);
    for (index_t r = begin; r < end; ++r) {
        const Weights wx = weights_1d(r % fx), wy = weights_1d((r / fx) % fy), wz = weights_1d(r / (fx * fy));
        for (int c = 0; c < wz.n; ++c) {
            for (int b = 0; b < wy.n; ++b) {
                for (int a = 0; a < wx.n; ++a) {
                    rows.col_indices.push_back(wx.idx[a] + g.nx * (wy.idx[b] + g.ny * wz.idx[c]));
                    rows.values.push_back(wx.w[a] * wy.w[b] * wz.w[c]);
                }
            }
        }
        rows.row_offsets.push_back(static_cast<index_t>(rows.col_indices.size()));
        ++rows.nrows;
    }
    return rows;
}

} // namespace

LocalMatrix build_model_operator(const GridSpec& g, rank_t rank, const RowPartition& part) {
    const auto dims = grid_dims(g);
    check_part(part, dims.n_fine, "operator");
    return split_local(rank, operator_rows(g, part.begin(rank), part.end(rank)), part, part);
}

LocalMatrix build_interpolation(const GridSpec& g, rank_t rank, const RowPartition& fine_part,
                                const RowPartition& coarse_part) {
    const auto dims = grid_dims(g);
    check_part(fine_part, dims.n_fine, "fine");
    check_part(coarse_part, dims.n_coarse, "coarse");
    if (fine_part.np() != coarse_part.np()) {
        throw PartitionError("fine and coarse partitions have different rank counts");
    }
    return split_local(rank, interpolation_rows(g, fine_part.begin(rank), fine_part.end(rank)), fine_part,
                       coarse_part);
}

CsrMatrix model_operator_global(const GridSpec& g) { return operator_rows(g, 0, grid_dims(g).n_fine); }

CsrMatrix interpolation_global(const GridSpec& g) { return interpolation_rows(g, 0, grid_dims(g).n_fine); }

RandomInstance random_instance(index_t n, index_t m, double density, std::uint64_t seed, bool symmetric) {
    if (n < 1 || m < 1) {
        throw Error("random instance needs positive dimensions");
    }
    if (!(density > 0.0 && density <= 1.0)) {
        throw Error("density must lie in (0, 1]");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    auto draw_value = [&] {
        const double v = value(rng);
        return v == 0.0 ? 1.0 : v;
    };

    std::vector<Triplet> at;
    for (index_t i = 0; i < n; ++i) {
        for (index_t j = 0; j < (symmetric ? i + 1 : n); ++j) {
            if (i == j || coin(rng) < density) {
                const double v = draw_value();
                at.push_back({i, j, v});
                if (symmetric && i != j) {
                    at.push_back({j, i, v});
                }
            }
        }
    }
    std::vector<Triplet> pt;
    for (index_t i = 0; i < n; ++i) {
        for (index_t j = 0; j < m; ++j) {
            if (coin(rng) < density) {
                pt.push_back({i, j, draw_value()});
            }
        }
    }
    return {csr_from_triplets(n, n, at), csr_from_triplets(n, m, pt)};
}

OracleMatrix::OracleMatrix(index_t rows, index_t cols) : nrows(rows), ncols(cols) {
    if (rows > kMaxDim || cols > kMaxDim) {
        throw Error("oracle refuses " + std::to_string(rows) + " x " + std::to_string(cols) +
                    ": dense verification is capped at " + std::to_string(kMaxDim) + " per dimension");
    }
    data.assign(static_cast<std::size_t>(rows * cols), 0.0);
}

OracleMatrix to_oracle(const CsrMatrix& m) {
    OracleMatrix d(m.nrows, m.ncols);
    for (index_t i = 0; i < m.nrows; ++i) {
        for (index_t k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k) {
            d(i, m.col_indices[k]) += m.has_values ? m.values[k] : 1.0;
        }
    }
    return d;
}

OracleMatrix oracle_ptap(const OracleMatrix& a, const OracleMatrix& p) {
    if (a.nrows != a.ncols || a.ncols != p.nrows) {
        throw Error("oracle: A must be n x n and P n x m");
    }
    const index_t n = a.nrows, m = p.ncols;
    OracleMatrix ap(n, m);
    for (index_t I = 0; I < n; ++I) {
        for (index_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (index_t J = 0; J < n; ++J) {
                s += a(I, J) * p(J, j);
            }
            ap(I, j) = s;
        }
    }
    OracleMatrix c(m, m);
    for (index_t i = 0; i < m; ++i) {
        for (index_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (index_t I = 0; I < n; ++I) {
                s += p(I, i) * ap(I, j);
            }
            c(i, j) = s;
        }
    }
    return c;
}

std::vector<bool> oracle_ptap_pattern(const CsrMatrix& a, const CsrMatrix& p) {
    const OracleMatrix da = to_oracle(pattern_of(a));
    const OracleMatrix dp = to_oracle(pattern_of(p));
    const index_t n = da.nrows, m = dp.ncols;
    if (da.ncols != n || dp.nrows != n) {
        throw Error("oracle: A must be n x n and P n x m");
    }
    std::vector<bool> ap(static_cast<std::size_t>(n * m), false);
    for (index_t I = 0; I < n; ++I) {
        for (index_t J = 0; J < n; ++J) {
            if (da(I, J) == 0.0) {
                continue;
            }
            for (index_t j = 0; j < m; ++j) {
                if (dp(J, j) != 0.0) {
                    ap[static_cast<std::size_t>(I * m + j)] = true;
                }
            }
        }
    }
    std::vector<bool> c(static_cast<std::size_t>(m * m), false);
    for (index_t I = 0; I < n; ++I) {
        for (index_t i = 0; i < m; ++i) {
            if (dp(I, i) == 0.0) {
                continue;
            }
            for (index_t j = 0; j < m; ++j) {
                if (ap[static_cast<std::size_t>(I * m + j)]) {
                    c[static_cast<std::size_t>(i * m + j)] = true;
                }
            }
        }
    }
    return c;
}

double relative_difference(const CsrMatrix& x, const OracleMatrix& y) {
    if (x.nrows != y.nrows || x.ncols != y.ncols) {
        throw Error("relative_difference: dimension mismatch");
    }
    const OracleMatrix dx = to_oracle(x);
    double diff = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < dx.data.size(); ++k) {
        diff = std::max(diff, std::abs(dx.data[k] - y.data[k]));
        scale = std::max({scale, std::abs(dx.data[k]), std::abs(y.data[k])});
    }
    return scale == 0.0 ? diff : diff / scale;
}

double relative_difference(const CsrMatrix& x, const CsrMatrix& y) {
    if (x.nrows != y.nrows || x.ncols != y.ncols) {
        throw Error("relative_difference: dimension mismatch");
    }
    double diff = 0.0, scale = 0.0;
    auto val = [](const CsrMatrix& m, index_t k) { return m.has_values ? m.values[k] : 1.0; };
    for (index_t i = 0; i < x.nrows; ++i) {
        index_t p = x.row_offsets[i], q = y.row_offsets[i];
        const index_t pe = x.row_offsets[i + 1], qe = y.row_offsets[i + 1];
        while (p < pe || q < qe) {
            double a = 0.0, b = 0.0;
            if (q == qe || (p < pe && x.col_indices[p] < y.col_indices[q])) {
                a = val(x, p++);
            } else if (p == pe || y.col_indices[q] < x.col_indices[p]) {
                b = val(y, q++);
            } else {
                a = val(x, p++);
                b = val(y, q++);
            }
            diff = std::max(diff, std::abs(a - b));
            scale = std::max({scale, std::abs(a), std::abs(b)});
        }
    }
    return scale == 0.0 ? diff : diff / scale;
}

} // namespace ptap
