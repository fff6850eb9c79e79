#include "ptap/exchange.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace ptap {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

void fnv_mix(std::uint64_t& h, index_t v) {
    auto u = static_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
        h ^= (u >> (8 * b)) & 0xFFu;
        h *= kFnvPrime;
    }
}

std::uint64_t served_fingerprint(const LocalMatrix& p, const std::vector<index_t>& local_rows,
                                 std::vector<index_t>& scratch) {
    std::uint64_t h = kFnvOffset;
    for (index_t i : local_rows) {
        scratch.clear();
        p.global_row(i, scratch);
        fnv_mix(h, i);
        fnv_mix(h, static_cast<index_t>(scratch.size()));
        for (index_t c : scratch) {
            fnv_mix(h, c);
        }
    }
    return h;
}

} // namespace

std::size_t RemoteRows::bytes() const {
    std::size_t b = source_cols.capacity() * sizeof(index_t) + rows.bytes() + suppliers.capacity() * sizeof(rank_t) +
                    supplier_offsets.capacity() * sizeof(index_t);
    for (const auto& s : served) {
        b += s.local_rows.capacity() * sizeof(index_t) + sizeof(Served);
    }
    return b;
}

RemoteRows gather_remote_rows(RankContext& ctx, const NeighborList& neighbors, const LocalMatrix& p_local) {
    ++ctx.counters().gathers;
    ScopedPhase timing(ctx.timer(), Phase::gather);
    const bool with_values = p_local.has_values();
    RemoteRows rr;
    rr.rows = CsrMatrix(0, p_local.global_cols(), with_values);

    for (std::size_t k = 0; k < neighbors.size(); ++k) {
        for (index_t g : neighbors.columns[k]) {
            if (g < 0 || g >= p_local.global_rows()) {
                throw PartitionError("remote row " + std::to_string(g) + " outside P's " +
                                     std::to_string(p_local.global_rows()) + " rows");
            }
            if (!p_local.row_part.owns(neighbors.ranks[k], g)) {
                throw PartitionError("neighbour list says rank " + std::to_string(neighbors.ranks[k]) +
                                     " owns row " + std::to_string(g) + " but P's partition disagrees");
            }
        }
    }
    if (ctx.size() == 1) {
        if (!neighbors.empty()) {
            throw PartitionError("single rank cannot have remote rows");
        }
        return rr;
    }

    ctx.next_round();
    for (std::size_t k = 0; k < neighbors.size(); ++k) {
        WireWriter w;
        w.put_index(static_cast<index_t>(neighbors.columns[k].size()));
        w.put_indices(neighbors.columns[k].data(), neighbors.columns[k].size());
        ctx.send(neighbors.ranks[k], MessageKind::request, w.take());
    }
    ctx.barrier();

    // Serve every request addressed to this rank.
    std::vector<index_t> cols;
    std::vector<real> vals;
    for (auto& [src, payload] : ctx.drain(MessageKind::request)) {
        WireReader r(payload);
        const index_t count = r.get_index();
        RemoteRows::Served s;
        s.requester = src;
        s.local_rows.reserve(static_cast<std::size_t>(count));
        ContributionBatch reply;
        reply.has_values = with_values;
        for (index_t n = 0; n < count; ++n) {
            const index_t g = r.get_index();
            if (!p_local.row_part.owns(ctx.rank(), g)) {
                throw CommError("rank " + std::to_string(src) + " requested row " + std::to_string(g) + " from rank " +
                                std::to_string(ctx.rank()) + ", which does not own it");
            }
            const index_t local = g - p_local.row_begin();
            s.local_rows.push_back(local);
            cols.clear();
            vals.clear();
            p_local.global_row(local, cols, with_values ? &vals : nullptr);
            reply.add_row(g, cols, vals);
        }
        s.nvalues = reply.cols.size();
        s.fingerprint = served_fingerprint(p_local, s.local_rows, cols);
        rr.served.push_back(std::move(s));
        ctx.send(src, MessageKind::reply, encode_batch(reply));
    }

    // Collect replies in neighbour (= ascending column) order.
    for (std::size_t k = 0; k < neighbors.size(); ++k) {
        const ContributionBatch b = decode_batch(ctx.recv(neighbors.ranks[k], MessageKind::reply), with_values);
        if (b.rows != neighbors.columns[k]) {
            throw CommError("reply from rank " + std::to_string(neighbors.ranks[k]) + " does not match the request");
        }
        for (std::size_t i = 0; i < b.nrows(); ++i) {
            rr.source_cols.push_back(b.rows[i]);
            const auto c = b.row_cols(i);
            rr.rows.col_indices.insert(rr.rows.col_indices.end(), c.begin(), c.end());
            if (with_values) {
                const auto v = b.row_vals(i);
                rr.rows.values.insert(rr.rows.values.end(), v.begin(), v.end());
            }
            rr.rows.row_offsets.push_back(static_cast<index_t>(rr.rows.col_indices.size()));
        }
        rr.suppliers.push_back(neighbors.ranks[k]);
        rr.supplier_offsets.push_back(static_cast<index_t>(rr.source_cols.size()));
    }
    rr.rows.nrows = static_cast<index_t>(rr.source_cols.size());
    rr.source_cols.shrink_to_fit();
    rr.rows.row_offsets.shrink_to_fit();
    rr.rows.col_indices.shrink_to_fit();
    rr.rows.values.shrink_to_fit();
    rr.suppliers.shrink_to_fit();
    rr.supplier_offsets.shrink_to_fit();
    rr.served.shrink_to_fit();
    return rr;
}

void update_remote_rows_numeric(RankContext& ctx, RemoteRows& rr, const LocalMatrix& p_local) {
    ++ctx.counters().value_updates;
    ScopedPhase timing(ctx.timer(), Phase::gather);
    if (!p_local.has_values()) {
        throw StructureDriftError("values-only update needs a numeric P");
    }
    if (ctx.size() == 1) {
        return;
    }
    ctx.next_round();

    std::vector<index_t> scratch;
    std::vector<real> vals;
    for (const auto& s : rr.served) {
        if (served_fingerprint(p_local, s.local_rows, scratch) != s.fingerprint) {
            throw StructureDriftError("rows of P served to rank " + std::to_string(s.requester) +
                                      " changed structure since the symbolic gather");
        }
        vals.clear();
        for (index_t i : s.local_rows) {
            scratch.clear();
            p_local.global_row(i, scratch, &vals);
        }
        WireWriter w;
        w.put_index(static_cast<index_t>(vals.size()));
        w.put_reals(vals.data(), vals.size());
        ctx.send(s.requester, MessageKind::reply, w.take());
    }

    rr.rows.has_values = true;
    rr.rows.values.resize(rr.rows.col_indices.size());
    for (std::size_t k = 0; k < rr.suppliers.size(); ++k) {
        const Bytes payload = ctx.recv(rr.suppliers[k], MessageKind::reply);
        WireReader r(payload);
        const index_t first = rr.rows.row_offsets[rr.supplier_offsets[k]];
        const index_t last = rr.rows.row_offsets[rr.supplier_offsets[k + 1]];
        if (r.get_index() != last - first || r.remaining() != static_cast<std::size_t>(last - first) * 8) {
            throw StructureDriftError("value refresh from rank " + std::to_string(rr.suppliers[k]) +
                                      " has a different entry count than the symbolic gather");
        }
        for (index_t e = first; e < last; ++e) {
            rr.rows.values[e] = r.get_real();
        }
    }
}

// ------------------------------------------------------- contribution batches

void ContributionBatch::add_row(index_t row, std::span<const index_t> c, std::span<const real> v) {
    rows.push_back(row);
    cols.insert(cols.end(), c.begin(), c.end());
    if (has_values) {
        vals.insert(vals.end(), v.begin(), v.end());
    }
    offsets.push_back(static_cast<index_t>(cols.size()));
}

std::size_t ContributionBatch::bytes() const {
    return (rows.capacity() + offsets.capacity() + cols.capacity()) * sizeof(index_t) + vals.capacity() * sizeof(real);
}

Bytes encode_batch(const ContributionBatch& b) {
    WireWriter w;
    w.put_index(static_cast<index_t>(b.nrows()));
    for (std::size_t k = 0; k < b.nrows(); ++k) {
        const auto c = b.row_cols(k);
        w.put_index(b.rows[k]);
        w.put_index(static_cast<index_t>(c.size()));
        w.put_indices(c.data(), c.size());
        if (b.has_values) {
            w.put_reals(b.vals.data() + b.offsets[k], c.size());
        }
    }
    return w.take();
}

ContributionBatch decode_batch(const Bytes& payload, bool with_values) {
    ContributionBatch b;
    b.has_values = with_values;
    WireReader r(payload);
    const index_t n = r.get_index();
    for (index_t k = 0; k < n; ++k) {
        b.rows.push_back(r.get_index());
        const index_t len = r.get_index();
        if (len < 0 || static_cast<std::size_t>(len) * 8 * (with_values ? 2 : 1) > r.remaining()) {
            throw CommError("malformed contribution payload");
        }
        for (index_t e = 0; e < len; ++e) {
            b.cols.push_back(r.get_index());
        }
        if (with_values) {
            for (index_t e = 0; e < len; ++e) {
                b.vals.push_back(r.get_real());
            }
        }
        b.offsets.push_back(static_cast<index_t>(b.cols.size()));
    }
    if (!r.done()) {
        throw CommError("trailing bytes in contribution payload");
    }
    return b;
}

PendingExchange begin_exchange(RankContext& ctx, std::span<const ContributionBatch> outgoing,
                               const RowPartition& row_owner, bool with_values) {
    ++ctx.counters().exchanges;
    ScopedPhase timing(ctx.timer(), Phase::exchange);
    for (const auto& b : outgoing) {
        if (b.destination < 0 || b.destination >= ctx.size()) {
            throw CommError("contribution batch addressed to nonexistent rank " + std::to_string(b.destination));
        }
        if (b.has_values != with_values) {
            throw CommError("contribution batch value mode does not match the exchange");
        }
        for (index_t g : b.rows) {
            if (g < 0 || g >= row_owner.nglobal || !row_owner.owns(b.destination, g)) {
                throw CommError("contribution row " + std::to_string(g) + " is not owned by destination rank " +
                                std::to_string(b.destination));
            }
        }
    }

    PendingExchange pending{ctx.next_round(), with_values, true};

    // One message per destination; several batches for one rank are concatenated.
    std::vector<std::size_t> order(outgoing.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return outgoing[a].destination < outgoing[b].destination; });
    for (std::size_t k = 0; k < order.size();) {
        const rank_t dest = outgoing[order[k]].destination;
        std::size_t end = k;
        while (end < order.size() && outgoing[order[end]].destination == dest) {
            ++end;
        }
        if (end - k == 1) {
            ctx.send(dest, MessageKind::contribution, encode_batch(outgoing[order[k]]));
        } else {
            ContributionBatch merged;
            merged.destination = dest;
            merged.has_values = with_values;
            for (std::size_t j = k; j < end; ++j) {
                const auto& b = outgoing[order[j]];
                for (std::size_t i = 0; i < b.nrows(); ++i) {
                    merged.add_row(b.rows[i], b.row_cols(i), with_values ? b.row_vals(i) : std::span<const real>{});
                }
            }
            ctx.send(dest, MessageKind::contribution, encode_batch(merged));
        }
        k = end;
    }
    return pending;
}

std::vector<ContributionBatch> finish_exchange(RankContext& ctx, PendingExchange& pending) {
    if (!pending.active) {
        throw CommError("finish_exchange without a pending exchange");
    }
    if (pending.round != ctx.round()) {
        throw CommError("another collective ran between begin_exchange and finish_exchange");
    }
    pending.active = false;
    ScopedPhase timing(ctx.timer(), Phase::exchange);
    ctx.barrier();
    std::vector<ContributionBatch> received;
    for (auto& [src, payload] : ctx.drain(MessageKind::contribution)) {
        received.push_back(decode_batch(payload, pending.with_values));
        received.back().source = src;
        received.back().destination = ctx.rank();
    }
    return received;
}

std::vector<ContributionBatch> exchange_contributions(RankContext& ctx, std::span<const ContributionBatch> outgoing,
                                                      const RowPartition& row_owner, bool with_values) {
    auto pending = begin_exchange(ctx, outgoing, row_owner, with_values);
    return finish_exchange(ctx, pending);
}

} // namespace ptap
