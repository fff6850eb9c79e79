#include "ptap/triple_product.hpp"

#include <algorithm>
#include <string>
#include <tuple>

namespace ptap {

const char* to_string(Algorithm a) {
    switch (a) {
    case Algorithm::two_step: return "two-step";
    case Algorithm::all_at_once: return "allatonce";
    case Algorithm::merged: return "merged";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
    for (Algorithm a : {Algorithm::two_step, Algorithm::all_at_once, Algorithm::merged}) {
        if (name == to_string(a)) {
            return a;
        }
    }
    throw Error("unknown algorithm '" + std::string(name) + "' (expected two-step, allatonce or merged)");
}

// ------------------------------------------------------------- HashRowMatrix

HashRowMatrix::HashRowMatrix(index_t nrows, bool split, const LedgerPtr& ledger)
    : rows_(static_cast<std::size_t>(nrows)), split_(split) {
    if (ledger) {
        for (auto& r : rows_) {
            r.diag.track(ledger, MemCategory::transient_hash);
            r.offdiag.track(ledger, MemCategory::transient_hash);
        }
    }
}

void HashRowMatrix::insert(index_t r, std::span<const index_t> diag_keys, std::span<const index_t> off_keys) {
    auto& row = rows_[static_cast<std::size_t>(r)];
    for (index_t k : diag_keys) {
        row.diag.insert(k);
    }
    auto& off = split_ ? row.offdiag : row.diag;
    for (index_t k : off_keys) {
        off.insert(k);
    }
}

std::size_t HashRowMatrix::bytes() const {
    std::size_t b = rows_.capacity() * sizeof(RowStructure);
    for (const auto& r : rows_) {
        b += r.diag.bytes() + r.offdiag.bytes();
    }
    return b;
}

void HashRowMatrix::free() {
    std::vector<RowStructure>().swap(rows_);
}

// ------------------------------------------------------------------ the plan

std::size_t TripleProductPlan::auxiliary_bytes() const {
    // Empty stand-ins (a lone row_offsets{0}) are not stored matrices.
    if (algorithm != Algorithm::two_step || released) {
        return 0;
    }
    return ap.bytes() + pt_diag.bytes() + pt_offdiag.bytes() + cs.bytes();
}

std::size_t TripleProductPlan::cache_bytes() const {
    if (released) {
        return 0;
    }
    return remote.bytes() + staging.bytes() + send_rows.capacity() * sizeof(index_t) +
           sends.capacity() * sizeof(SendRange);
}

void TripleProductPlan::update_charges() {
    output_charge.set(c.bytes());
    aux_charge.set(auxiliary_bytes());
    plan_charge.set(cache_bytes());
}

void TripleProductPlan::release_intermediates() {
    ap = AllocatedMatrix();
    remote = RemoteRows();
    pt_diag = CsrMatrix();
    pt_offdiag = CsrMatrix();
    cs = CsrMatrix();
    staging = CsrMatrix();
    std::vector<index_t>().swap(send_rows);
    std::vector<SendRange>().swap(sends);
    released = true;
    update_charges();
}

void check_ptap_inputs(const LocalMatrix& a, const LocalMatrix& p) {
    if (a.global_rows() != a.global_cols()) {
        throw PartitionError("A must be square, got " + std::to_string(a.global_rows()) + " x " +
                             std::to_string(a.global_cols()));
    }
    check_conforming(a, p);
    if (a.row_part != p.row_part) {
        throw PartitionError("A's row partition differs from P's row partition");
    }
}

namespace {

TripleProductPlan new_plan(RankContext& ctx, Algorithm alg, const LocalMatrix& a, const LocalMatrix& p) {
    TripleProductPlan plan;
    plan.algorithm = alg;
    plan.output_charge = LedgerCharge(ctx.ledger_ptr(), MemCategory::output_matrix);
    plan.aux_charge = LedgerCharge(ctx.ledger_ptr(), MemCategory::auxiliary_matrices);
    plan.plan_charge = LedgerCharge(ctx.ledger_ptr(), MemCategory::plan_cache);
    plan.send_rows = p.col_map;
    plan.a_fingerprint = structure_fingerprint(a);
    plan.p_fingerprint = structure_fingerprint(p);
    for (std::size_t k = 0; k < p.col_map.size();) {
        const rank_t dest = owner(p.col_part, p.col_map[k]);
        std::size_t end = k;
        while (end < p.col_map.size() && p.col_part.owns(dest, p.col_map[end])) {
            ++end;
        }
        plan.sends.push_back({dest, static_cast<index_t>(k), static_cast<index_t>(end)});
        k = end;
    }
    return plan;
}

void check_plan(const TripleProductPlan& plan, Algorithm expected, const LocalMatrix& a, const LocalMatrix& p) {
    if (plan.released) {
        throw StructureDriftError("plan intermediates were released; run the symbolic phase again");
    }
    if (plan.algorithm != expected) {
        throw Error(std::string("plan was built for ") + to_string(plan.algorithm) + ", not " + to_string(expected));
    }
    check_ptap_inputs(a, p);
    if (!a.has_values() || !p.has_values()) {
        throw StructureDriftError("numeric triple product needs numeric A and P");
    }
    if (structure_fingerprint(a) != plan.a_fingerprint) {
        throw StructureDriftError("A's structure changed since the symbolic phase");
    }
    if (structure_fingerprint(p) != plan.p_fingerprint) {
        throw StructureDriftError("P's structure changed since the symbolic phase");
    }
}

// Sorted union of a row structure as global columns, appended as the next row of `m`.
void append_union(CsrMatrix& m, const RowStructure& rs, std::vector<index_t>& scratch) {
    scratch.clear();
    rs.diag.for_each([&](index_t k) { scratch.push_back(k); });
    rs.offdiag.for_each([&](index_t k) { scratch.push_back(k); });
    std::sort(scratch.begin(), scratch.end());
    m.col_indices.insert(m.col_indices.end(), scratch.begin(), scratch.end());
    m.row_offsets.push_back(static_cast<index_t>(m.col_indices.size()));
    ++m.nrows;
}

CsrMatrix csr_from_hash_rows(const HashRowMatrix& h, index_t ncols) {
    CsrMatrix m(0, ncols, true);
    std::vector<index_t> scratch;
    std::size_t total = 0;
    for (index_t r = 0; r < h.nrows(); ++r) {
        total += h.row(r).size();
    }
    m.col_indices.reserve(total);
    m.row_offsets.reserve(static_cast<std::size_t>(h.nrows()) + 1);
    for (index_t r = 0; r < h.nrows(); ++r) {
        append_union(m, h.row(r), scratch);
    }
    m.values.assign(m.col_indices.size(), 0.0);
    return m;
}

// Writes a sorted row into row k of `m`, whose structure must match exactly.
void write_row_exact(CsrMatrix& m, index_t k, const std::vector<std::pair<index_t, real>>& row) {
    const auto cols = m.row_cols(k);
    if (cols.size() != row.size()) {
        throw StructureDriftError("send-side row " + std::to_string(k) + ": numeric fill " +
                                  std::to_string(row.size()) + " differs from capacity " + std::to_string(cols.size()));
    }
    auto vals = m.row_vals(k);
    for (std::size_t e = 0; e < row.size(); ++e) {
        if (cols[e] != row[e].first) {
            throw StructureDriftError("send-side row " + std::to_string(k) + ": column " +
                                      std::to_string(row[e].first) + " is not in the symbolic structure");
        }
        vals[e] = row[e].second;
    }
}

// staging(k,:) += scale * row, where row's columns are a subset of the staged ones.
void scatter_scaled(CsrMatrix& staging, index_t k, const std::vector<std::pair<index_t, real>>& row, real scale) {
    const auto cols = staging.row_cols(k);
    auto vals = staging.row_vals(k);
    std::size_t q = 0;
    for (const auto& [g, v] : row) {
        while (q < cols.size() && cols[q] < g) {
            ++q;
        }
        if (q == cols.size() || cols[q] != g) {
            throw StructureDriftError("staging row " + std::to_string(k) + ": column " + std::to_string(g) +
                                      " is not in the symbolic structure");
        }
        vals[q] += scale * v;
    }
}

std::vector<ContributionBatch> make_batches(const CsrMatrix& m, const TripleProductPlan& plan, bool with_values) {
    std::vector<ContributionBatch> out;
    out.reserve(plan.sends.size());
    for (const auto& s : plan.sends) {
        ContributionBatch b;
        b.destination = s.dest;
        b.has_values = with_values;
        for (index_t k = s.first; k < s.last; ++k) {
            b.add_row(plan.send_rows[k], m.row_cols(k),
                      with_values ? m.row_vals(k) : std::span<const real>{});
        }
        out.push_back(std::move(b));
    }
    return out;
}

std::size_t batch_bytes(const std::vector<ContributionBatch>& bs) {
    std::size_t b = bs.capacity() * sizeof(ContributionBatch);
    for (const auto& x : bs) {
        b += x.bytes();
    }
    return b;
}

// Adds received rows into C in ascending source order (finish_exchange already sorts them).
void merge_received(AllocatedMatrix& c, const std::vector<ContributionBatch>& recv) {
    const index_t rb = c.matrix().row_begin();
    for (const auto& b : recv) {
        for (std::size_t k = 0; k < b.nrows(); ++k) {
            c.add_row(b.rows[k] - rb, b.row_cols(k), b.row_vals(k));
        }
    }
}

void zero_values(CsrMatrix& m) { std::fill(m.values.begin(), m.values.end(), 0.0); }

} // namespace

// ------------------------------------------------------------------ two-step

TripleProductPlan two_step_symbolic(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p) {
    check_ptap_inputs(a, p);
    ++ctx.counters().symbolic_triple;
    TripleProductPlan plan = new_plan(ctx, Algorithm::two_step, a, p);

    auto sap = symbolic_ap(ctx, a, p);
    plan.ap = std::move(sap.product);
    plan.remote = std::move(sap.remote);
    plan.pt_diag = transpose(p.diag);
    plan.pt_offdiag = transpose(p.offdiag);
    ++ctx.counters().symbolic_transpose;
    plan.update_charges();
    const LocalMatrix& apm = plan.ap.matrix();

    RowStructure rs;
    rs.diag.track(ctx.ledger_ptr(), MemCategory::transient_hash);
    rs.offdiag.track(ctx.ledger_ptr(), MemCategory::transient_hash);
    std::vector<index_t> scratch;

    // C_s = P_o^T * AP, rows destined for other ranks.
    plan.cs = CsrMatrix(0, p.global_cols(), true);
    for (index_t k = 0; k < plan.pt_offdiag.nrows; ++k) {
        rs.clear();
        symbolic_row_product(plan.pt_offdiag.row_cols(k), {}, apm, nullptr, rs);
        append_union(plan.cs, rs, scratch);
    }
    plan.cs.values.assign(plan.cs.col_indices.size(), 0.0);
    plan.update_charges();

    std::vector<ContributionBatch> recv;
    {
        const auto out = make_batches(plan.cs, plan, false);
        LedgerCharge tx(ctx.ledger_ptr(), MemCategory::transient_hash, batch_bytes(out));
        recv = exchange_contributions(ctx, out, p.col_part, false);
    }
    LedgerCharge rx(ctx.ledger_ptr(), MemCategory::transient_hash, batch_bytes(recv));

    // Received rows grouped by local C row.
    const index_t cb = p.col_begin();
    std::vector<std::tuple<index_t, std::size_t, std::size_t>> incoming;
    for (std::size_t b = 0; b < recv.size(); ++b) {
        for (std::size_t k = 0; k < recv[b].nrows(); ++k) {
            incoming.emplace_back(recv[b].rows[k] - cb, b, k);
        }
    }
    std::sort(incoming.begin(), incoming.end());
    LedgerCharge ix(ctx.ledger_ptr(), MemCategory::transient_hash,
                    incoming.capacity() * sizeof(incoming[0]));

    // C_l = P_d^T * AP plus everything received.
    StructureBuilder builder(ctx.rank(), p.col_part, p.col_part);
    std::size_t q = 0;
    for (index_t c = 0; c < p.ncols_owned(); ++c) {
        rs.clear();
        symbolic_row_product(plan.pt_diag.row_cols(c), {}, apm, nullptr, rs);
        for (; q < incoming.size() && std::get<0>(incoming[q]) == c; ++q) {
            const auto& [row, b, k] = incoming[q];
            for (index_t g : recv[b].row_cols(k)) {
                if (p.owns_col(g)) {
                    rs.diag.insert(g);
                } else {
                    rs.offdiag.insert(g);
                }
            }
        }
        builder.append(rs);
    }
    if (q != incoming.size()) {
        throw CommError("received contribution for a row this rank does not own");
    }
    plan.c = std::move(builder).finish();
    plan.update_charges();
    return plan;
}

const LocalMatrix& two_step_numeric(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p,
                                    TripleProductPlan& plan) {
    check_plan(plan, Algorithm::two_step, a, p);
    ++ctx.counters().numeric_triple;

    numeric_ap(ctx, a, p, plan.ap, plan.remote, true);
    transpose_values_into(p.diag, plan.pt_diag);
    transpose_values_into(p.offdiag, plan.pt_offdiag);
    const LocalMatrix& apm = plan.ap.matrix();

    RowAccumulator acc;
    acc.track(ctx.ledger_ptr(), MemCategory::transient_hash);
    std::vector<std::pair<index_t, real>> row;
    for (index_t k = 0; k < plan.pt_offdiag.nrows; ++k) {
        numeric_row_product(plan.pt_offdiag.row_cols(k), plan.pt_offdiag.row_vals(k), {}, {}, apm, nullptr, acc);
        row.clear();
        acc.drain_sorted(row);
        write_row_exact(plan.cs, k, row);
    }

    PendingExchange pending;
    {
        const auto out = make_batches(plan.cs, plan, true);
        LedgerCharge tx(ctx.ledger_ptr(), MemCategory::transient_hash, batch_bytes(out));
        pending = begin_exchange(ctx, out, p.col_part, true);
    }

    plan.c.begin_fill();
    for (index_t c = 0; c < plan.pt_diag.nrows; ++c) {
        numeric_row_product(plan.pt_diag.row_cols(c), plan.pt_diag.row_vals(c), {}, {}, apm, nullptr, acc);
        row.clear();
        acc.drain_sorted(row);
        plan.c.add_row(c, row);
    }
    const auto recv = finish_exchange(ctx, pending);
    LedgerCharge rx(ctx.ledger_ptr(), MemCategory::transient_hash, batch_bytes(recv));
    merge_received(plan.c, recv);
    plan.c.finalize(&ctx.counters());
    ++plan.numeric_runs;
    plan.update_charges();
    return plan.c.matrix();
}

// ------------------------------------------------- all-at-once and merged

namespace {

struct ApRowStructure {
    RowStructure rs;
    std::vector<index_t> diag;
    std::vector<index_t> offdiag;

    explicit ApRowStructure(const LedgerPtr& ledger) {
        rs.diag.track(ledger, MemCategory::transient_hash);
        rs.offdiag.track(ledger, MemCategory::transient_hash);
    }

    void compute(RankContext& ctx, index_t i, const LocalMatrix& a, const LocalMatrix& p, const RemoteRows& rr) {
        rs.clear();
        symbolic_row_ap(i, a, p, rr, rs);
        ++ctx.counters().ap_row_symbolic;
        diag.clear();
        offdiag.clear();
        rs.diag.for_each([&](index_t k) { diag.push_back(k); });
        rs.offdiag.for_each([&](index_t k) { offdiag.push_back(k); });
    }
};

struct ApRowNumeric {
    RowAccumulator acc;
    std::vector<std::pair<index_t, real>> row;

    explicit ApRowNumeric(const LedgerPtr& ledger) { acc.track(ledger, MemCategory::transient_hash); }

    void compute(RankContext& ctx, index_t i, const LocalMatrix& a, const LocalMatrix& p, const RemoteRows& rr) {
        numeric_row_ap(i, a, p, rr, acc);
        ++ctx.counters().ap_row_numeric;
        row.clear();
        acc.drain_sorted(row);
    }
};

TripleProductPlan outer_symbolic(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p, Algorithm alg) {
    check_ptap_inputs(a, p);
    ++ctx.counters().symbolic_triple;
    TripleProductPlan plan = new_plan(ctx, alg, a, p);
    const NeighborList neighbors = build_neighbor_list(a, a.col_part);
    if (ctx.size() > 1) {
        plan.remote = gather_remote_rows(ctx, neighbors, p);
    } else {
        plan.remote.rows = CsrMatrix(0, p.global_cols(), p.has_values());
    }
    plan.update_charges();

    const LedgerPtr& ledger = ctx.ledger_ptr();
    HashRowMatrix cs_h(static_cast<index_t>(p.col_map.size()), false, ledger);
    HashRowMatrix cl_h(p.ncols_owned(), true, ledger);
    ApRowStructure r(ledger);

    auto scatter_send = [&](index_t i) {
        for (index_t k : p.offdiag.row_cols(i)) {
            cs_h.insert(k, r.diag, r.offdiag);
        }
    };
    auto scatter_local = [&](index_t i) {
        for (index_t c : p.diag.row_cols(i)) {
            cl_h.insert(c, r.diag, r.offdiag);
        }
    };
    auto stage_and_send = [&] {
        plan.staging = csr_from_hash_rows(cs_h, p.global_cols());
        cs_h.free();
        plan.update_charges();
        const auto out = make_batches(plan.staging, plan, false);
        LedgerCharge tx(ledger, MemCategory::transient_hash, batch_bytes(out));
        return begin_exchange(ctx, out, p.col_part, false);
    };

    PendingExchange pending;
    if (alg == Algorithm::all_at_once) {
        for (index_t i = 0; i < a.nrows(); ++i) {
            if (!p.offdiag.row_empty(i)) {
                r.compute(ctx, i, a, p, plan.remote);
                scatter_send(i);
            }
        }
        pending = stage_and_send();
        for (index_t i = 0; i < a.nrows(); ++i) {
            if (!p.diag.row_empty(i)) {
                r.compute(ctx, i, a, p, plan.remote);
                scatter_local(i);
            }
        }
    } else {
        for (index_t i = 0; i < a.nrows(); ++i) {
            if (p.offdiag.row_empty(i) && p.diag.row_empty(i)) {
                continue;
            }
            r.compute(ctx, i, a, p, plan.remote);
            scatter_send(i);
            scatter_local(i);
        }
        pending = stage_and_send();
    }

    const auto recv = finish_exchange(ctx, pending);
    {
        LedgerCharge rx(ledger, MemCategory::transient_hash, batch_bytes(recv));
        const index_t cb = p.col_begin();
        std::vector<index_t> d;
        std::vector<index_t> o;
        for (const auto& b : recv) {
            for (std::size_t k = 0; k < b.nrows(); ++k) {
                d.clear();
                o.clear();
                for (index_t g : b.row_cols(k)) {
                    (p.owns_col(g) ? d : o).push_back(g);
                }
                cl_h.insert(b.rows[k] - cb, d, o);
            }
        }
    }

    std::vector<index_t> nzd(static_cast<std::size_t>(cl_h.nrows()));
    std::vector<index_t> nzo(static_cast<std::size_t>(cl_h.nrows()));
    for (index_t c = 0; c < cl_h.nrows(); ++c) {
        nzd[c] = static_cast<index_t>(cl_h.row(c).diag.size());
        nzo[c] = static_cast<index_t>(cl_h.row(c).offdiag.size());
    }
    cl_h.free();
    plan.c = AllocatedMatrix(ctx.rank(), p.col_part, p.col_part, nzd, nzo);
    plan.update_charges();
    return plan;
}

const LocalMatrix& outer_numeric(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p,
                                 TripleProductPlan& plan, Algorithm alg) {
    check_plan(plan, alg, a, p);
    ++ctx.counters().numeric_triple;
    if (ctx.size() > 1) {
        update_remote_rows_numeric(ctx, plan.remote, p);
    }

    ApRowNumeric r(ctx.ledger_ptr());
    auto scatter_send = [&](index_t i) {
        const auto cols = p.offdiag.row_cols(i);
        const auto vals = p.offdiag.row_vals(i);
        for (std::size_t e = 0; e < cols.size(); ++e) {
            scatter_scaled(plan.staging, cols[e], r.row, vals[e]);
        }
    };
    auto scatter_local = [&](index_t i) {
        const auto cols = p.diag.row_cols(i);
        const auto vals = p.diag.row_vals(i);
        for (std::size_t e = 0; e < cols.size(); ++e) {
            plan.c.add_row(cols[e], r.row, vals[e]);
        }
    };
    auto send = [&] {
        const auto out = make_batches(plan.staging, plan, true);
        LedgerCharge tx(ctx.ledger_ptr(), MemCategory::transient_hash, batch_bytes(out));
        return begin_exchange(ctx, out, p.col_part, true);
    };

    zero_values(plan.staging);
    PendingExchange pending;
    if (alg == Algorithm::all_at_once) {
        for (index_t i = 0; i < a.nrows(); ++i) {
            if (!p.offdiag.row_empty(i)) {
                r.compute(ctx, i, a, p, plan.remote);
                scatter_send(i);
            }
        }
        pending = send();
        plan.c.begin_fill();
        for (index_t i = 0; i < a.nrows(); ++i) {
            if (!p.diag.row_empty(i)) {
                r.compute(ctx, i, a, p, plan.remote);
                scatter_local(i);
            }
        }
    } else {
        plan.c.begin_fill();
        for (index_t i = 0; i < a.nrows(); ++i) {
            if (p.offdiag.row_empty(i) && p.diag.row_empty(i)) {
                continue;
            }
            r.compute(ctx, i, a, p, plan.remote);
            scatter_send(i);
            scatter_local(i);
        }
        pending = send();
    }

    const auto recv = finish_exchange(ctx, pending);
    LedgerCharge rx(ctx.ledger_ptr(), MemCategory::transient_hash, batch_bytes(recv));
    merge_received(plan.c, recv);
    plan.c.finalize(&ctx.counters());
    ++plan.numeric_runs;
    plan.update_charges();
    return plan.c.matrix();
}

} // namespace

TripleProductPlan aao_symbolic(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p) {
    return outer_symbolic(ctx, a, p, Algorithm::all_at_once);
}

const LocalMatrix& aao_numeric(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p, TripleProductPlan& plan) {
    return outer_numeric(ctx, a, p, plan, Algorithm::all_at_once);
}

TripleProductPlan merged_symbolic(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p) {
    return outer_symbolic(ctx, a, p, Algorithm::merged);
}

const LocalMatrix& merged_numeric(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p,
                                  TripleProductPlan& plan) {
    return outer_numeric(ctx, a, p, plan, Algorithm::merged);
}

TripleProductPlan triple_product_symbolic(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p,
                                          Algorithm alg) {
    switch (alg) {
    case Algorithm::two_step: return two_step_symbolic(ctx, a, p);
    case Algorithm::all_at_once: return aao_symbolic(ctx, a, p);
    case Algorithm::merged: return merged_symbolic(ctx, a, p);
    }
    throw Error("unknown algorithm");
}

const LocalMatrix& triple_product_numeric(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p,
                                          TripleProductPlan& plan) {
    switch (plan.algorithm) {
    case Algorithm::two_step: return two_step_numeric(ctx, a, p, plan);
    case Algorithm::all_at_once: return aao_numeric(ctx, a, p, plan);
    case Algorithm::merged: return merged_numeric(ctx, a, p, plan);
    }
    throw Error("unknown algorithm");
}

TripleProductPlan ptap(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p, Algorithm alg,
                       CachePolicy cache) {
    TripleProductPlan plan = triple_product_symbolic(ctx, a, p, alg);
    triple_product_numeric(ctx, a, p, plan);
    if (cache == CachePolicy::free_after_solve) {
        plan.release_intermediates();
    }
    return plan;
}

} // namespace ptap
