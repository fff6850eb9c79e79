#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ptap/comm.hpp"
#include "ptap/exchange.hpp"
#include "ptap/hash_containers.hpp"
#include "ptap/memory_ledger.hpp"
#include "ptap/partition.hpp"
#include "ptap/spgemm.hpp"

namespace ptap {

enum class Algorithm { two_step, all_at_once, merged };

/// "two-step", "allatonce", "merged".
const char* to_string(Algorithm a);
/// Inverse of to_string; throws Error on an unknown name.
Algorithm parse_algorithm(std::string_view name);

enum class CachePolicy { free_after_solve, cache_intermediate };

/// One hash container pair per row. Unsplit matrices keep every key in `diag`.
class HashRowMatrix {
public:
    HashRowMatrix() = default;
    HashRowMatrix(index_t nrows, bool split, const LedgerPtr& ledger);

    /// Unions `diag_keys` and `off_keys` into row r.
    void insert(index_t r, std::span<const index_t> diag_keys, std::span<const index_t> off_keys);
    const RowStructure& row(index_t r) const { return rows_[static_cast<std::size_t>(r)]; }
    RowStructure& row(index_t r) { return rows_[static_cast<std::size_t>(r)]; }
    index_t nrows() const { return static_cast<index_t>(rows_.size()); }
    bool split() const { return split_; }
    std::size_t bytes() const;
    /// Releases every container.
    void free();

private:
    std::vector<RowStructure> rows_;
    bool split_ = true;
};

/// Contiguous run of send-side rows [first, last) owned by rank `dest`.
struct SendRange {
    rank_t dest = 0;
    index_t first = 0;
    index_t last = 0;
};

/// Everything a numeric triple product needs besides A and P.
///
/// C's rows and columns both follow P's column partition. Send-side rows
/// (C_s for the two-step method, the staging buffer otherwise) are indexed
/// like P's off-diagonal col_map; `send_rows` holds their global C rows.
struct TripleProductPlan {
    Algorithm algorithm = Algorithm::all_at_once;
    bool released = false;
    std::size_t numeric_runs = 0;
    std::uint64_t a_fingerprint = 0; ///< structure of the local A and P at symbolic time
    std::uint64_t p_fingerprint = 0;

    AllocatedMatrix c;
    RemoteRows remote;
    std::vector<index_t> send_rows;
    std::vector<SendRange> sends;

    // two-step
    AllocatedMatrix ap;
    CsrMatrix pt_diag;
    CsrMatrix pt_offdiag;
    CsrMatrix cs;

    // all-at-once and merged
    CsrMatrix staging;

    LedgerCharge output_charge;
    LedgerCharge aux_charge;
    LedgerCharge plan_charge;

    const LocalMatrix& result() const { return c.matrix(); }
    std::size_t auxiliary_bytes() const;
    std::size_t cache_bytes() const;
    /// Re-reads every held container size into the ledger.
    void update_charges();
    /// Drops everything but C; numeric calls on the plan then throw.
    void release_intermediates();
};

/// Throws PartitionError/Error unless A is square, A's rows and columns follow P's row partition.
void check_ptap_inputs(const LocalMatrix& a, const LocalMatrix& p);

TripleProductPlan two_step_symbolic(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p);
const LocalMatrix& two_step_numeric(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p,
                                    TripleProductPlan& plan);

TripleProductPlan aao_symbolic(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p);
const LocalMatrix& aao_numeric(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p, TripleProductPlan& plan);

TripleProductPlan merged_symbolic(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p);
const LocalMatrix& merged_numeric(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p,
                                  TripleProductPlan& plan);

/// Dispatch on the algorithm. All are collective.
TripleProductPlan triple_product_symbolic(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p,
                                          Algorithm alg);
const LocalMatrix& triple_product_numeric(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p,
                                          TripleProductPlan& plan);

/// C = P^T A P: symbolic, one numeric pass, then the cache policy. C is plan.result().
TripleProductPlan ptap(RankContext& ctx, const LocalMatrix& a, const LocalMatrix& p, Algorithm alg,
                       CachePolicy cache = CachePolicy::cache_intermediate);

} // namespace ptap
