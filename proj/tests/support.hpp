#pragma once

#include <vector>

#include "ptap/comm.hpp"
#include "ptap/csr_matrix.hpp"
#include "ptap/partition.hpp"
#include "ptap/problems.hpp"
#include "ptap/triple_product.hpp"

namespace ptap::test {

// The 6x6 A and 6x4 P patterns of the three-rank toy example, 0-based.
inline std::vector<std::vector<index_t>> toy_a_rows() {
    return {{0, 1, 4}, {1, 2, 4}, {0, 3, 4}, {1, 3}, {3, 4}, {1, 4, 5}};
}
inline std::vector<std::vector<index_t>> toy_p_rows() { return {{0, 3}, {1}, {2, 3}, {2}, {1, 3}, {2}}; }
inline std::vector<std::vector<index_t>> toy_ap_rows() {
    return {{0, 1, 3}, {1, 2, 3}, {0, 1, 2, 3}, {1, 2}, {1, 2, 3}, {1, 2, 3}};
}

inline CsrMatrix from_rows(const std::vector<std::vector<index_t>>& rows, index_t ncols, double v = 1.0) {
    std::vector<Triplet> t;
    for (index_t i = 0; i < static_cast<index_t>(rows.size()); ++i) {
        for (index_t j : rows[i]) {
            t.push_back({i, j, v});
        }
    }
    return csr_from_triplets(static_cast<index_t>(rows.size()), ncols, t);
}

inline CsrMatrix toy_a() { return from_rows(toy_a_rows(), 6); }
inline CsrMatrix toy_p() { return from_rows(toy_p_rows(), 4); }

inline std::vector<std::vector<index_t>> rows_of(const CsrMatrix& m) {
    std::vector<std::vector<index_t>> out;
    for (index_t i = 0; i < m.nrows; ++i) {
        auto c = m.row_cols(i);
        out.emplace_back(c.begin(), c.end());
    }
    return out;
}

inline CsrMatrix tridiag(index_t n, double off, double diag) {
    std::vector<Triplet> t;
    for (index_t i = 0; i < n; ++i) {
        if (i > 0) {
            t.push_back({i, i - 1, off});
        }
        t.push_back({i, i, diag});
        if (i + 1 < n) {
            t.push_back({i, i + 1, off});
        }
    }
    return csr_from_triplets(n, n, t);
}

struct Layout {
    RowPartition fine;
    RowPartition coarse;
};

inline Layout layout_for(index_t n, index_t m, int np) { return {make_partition(n, np), make_partition(m, np)}; }

struct PtapRun {
    CsrMatrix c;
    std::vector<KernelCounters> counters;
    std::vector<std::size_t> aux_peak;
    std::vector<std::size_t> working_peak;
    std::vector<MessageRecord> trace;
};

// Distributes global A and P over np ranks, runs one symbolic and `repeats`
// numeric passes and assembles C.
inline PtapRun run_ptap(const CsrMatrix& a, const CsrMatrix& p, int np, Algorithm alg, int repeats = 1,
                        HarnessOptions opts = {}) {
    const Layout lay = layout_for(a.nrows, p.ncols, np);
    Harness h(np, opts);
    auto pieces = h.run([&](RankContext& ctx) {
        const LocalMatrix al = distribute(a, ctx.rank(), lay.fine, lay.fine);
        const LocalMatrix pl = distribute(p, ctx.rank(), lay.fine, lay.coarse);
        TripleProductPlan plan = triple_product_symbolic(ctx, al, pl, alg);
        for (int r = 0; r < repeats; ++r) {
            triple_product_numeric(ctx, al, pl, plan);
        }
        return plan.result();
    });
    PtapRun out;
    out.c = assemble_global(pieces);
    for (int r = 0; r < np; ++r) {
        out.counters.push_back(h.counters(r));
        out.aux_peak.push_back(h.ledger(r).peak(MemCategory::auxiliary_matrices));
        out.working_peak.push_back(h.ledger(r).peak_working());
    }
    out.trace = h.trace();
    return out;
}

inline bool same_structure(const CsrMatrix& x, const CsrMatrix& y) {
    return x.nrows == y.nrows && x.ncols == y.ncols && x.row_offsets == y.row_offsets &&
           x.col_indices == y.col_indices;
}

inline std::vector<bool> mask_of(const CsrMatrix& m) {
    std::vector<bool> mask(static_cast<std::size_t>(m.nrows * m.ncols), false);
    for (index_t i = 0; i < m.nrows; ++i) {
        for (index_t j : m.row_cols(i)) {
            mask[static_cast<std::size_t>(i * m.ncols + j)] = true;
        }
    }
    return mask;
}

} // namespace ptap::test
