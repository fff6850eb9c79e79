#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ptap/comm.hpp"
#include "ptap/csr_matrix.hpp"
#include "ptap/partition.hpp"

namespace ptap {

/// Rows of P owned elsewhere but referenced by the local off-diagonal block of A.
///
/// Row k of `rows` is P(source_cols[k], :) with global column indices. The
/// serving side of the same gather is kept in `served` so later values-only
/// refreshes need no request round.
struct RemoteRows {
    std::vector<index_t> source_cols;
    CsrMatrix rows;

    /// Rows [supplier_offsets[k], supplier_offsets[k+1]) came from suppliers[k].
    std::vector<rank_t> suppliers;
    std::vector<index_t> supplier_offsets{0};

    struct Served {
        rank_t requester = 0;
        std::vector<index_t> local_rows; ///< local row indices of P sent to `requester`
        std::size_t nvalues = 0;
        std::uint64_t fingerprint = 0; ///< hash of the served structure at gather time
    };
    std::vector<Served> served;

    std::size_t bytes() const;
};

/// Structure and current values of every remote row named by `neighbors`.
///
/// Collective: every rank calls it, including ranks that need nothing, since
/// they may still have to serve. One request and one reply per neighbour pair.
RemoteRows gather_remote_rows(RankContext& ctx, const NeighborList& neighbors, const LocalMatrix& p_local);

/// Values-only refresh of a previous gather. Owners push values for the rows
/// they served; no request round. Throws StructureDriftError if P's structure
/// changed since the gather.
void update_remote_rows_numeric(RankContext& ctx, RemoteRows& rr, const LocalMatrix& p_local);

/// Rows of C produced on one rank and owned by another, flattened CSR-style.
/// Symbolic batches carry no values.
struct ContributionBatch {
    rank_t destination = 0;
    rank_t source = 0;
    bool has_values = true;
    std::vector<index_t> rows;          ///< global row of C per batch row
    std::vector<index_t> offsets{0};    ///< entries of batch row k are [offsets[k], offsets[k+1])
    std::vector<index_t> cols;          ///< global columns
    std::vector<real> vals;

    std::size_t nrows() const { return rows.size(); }
    std::span<const index_t> row_cols(std::size_t k) const {
        return {cols.data() + offsets[k], static_cast<std::size_t>(offsets[k + 1] - offsets[k])};
    }
    std::span<const real> row_vals(std::size_t k) const {
        return {vals.data() + offsets[k], static_cast<std::size_t>(offsets[k + 1] - offsets[k])};
    }
    void add_row(index_t row, std::span<const index_t> c, std::span<const real> v = {});
    std::size_t bytes() const;
};

/// Wire framing: row count, then per row: global row, entry count, columns, values (if any).
Bytes encode_batch(const ContributionBatch& b);
ContributionBatch decode_batch(const Bytes& payload, bool with_values);

/// Handle for an exchange whose sends have been issued but not yet completed.
struct PendingExchange {
    std::uint64_t round = 0;
    bool with_values = true;
    bool active = false;
};

/// Starts an exchange: validates destinations against `row_owner` and sends
/// one message per destination rank immediately. Collective.
PendingExchange begin_exchange(RankContext& ctx, std::span<const ContributionBatch> outgoing,
                               const RowPartition& row_owner, bool with_values);

/// Completes it: returns the received batches in ascending source order.
std::vector<ContributionBatch> finish_exchange(RankContext& ctx, PendingExchange& pending);

/// begin_exchange followed immediately by finish_exchange.
std::vector<ContributionBatch> exchange_contributions(RankContext& ctx, std::span<const ContributionBatch> outgoing,
                                                      const RowPartition& row_owner, bool with_values);

} // namespace ptap
