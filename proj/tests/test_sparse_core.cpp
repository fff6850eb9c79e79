#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ptap/csr_matrix.hpp"
#include "ptap/hash_containers.hpp"
#include "ptap/matrix_market.hpp"
#include "ptap/memory_ledger.hpp"
#include "support.hpp"

using namespace ptap;
using namespace ptap::test;

TEST_CASE("triplet assembly sums duplicates and sorts rows") {
    const std::vector<Triplet> t{{1, 2, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {1, 2, 4.0}, {0, 1, -2.0}};
    const CsrMatrix m = csr_from_triplets(2, 3, t);
    CHECK(m.row_offsets == std::vector<index_t>{0, 1, 3});
    CHECK(m.col_indices == std::vector<index_t>{1, 0, 2});
    CHECK(m.values == std::vector<real>{0.0, 3.0, 5.0});
    m.validate();
}

TEST_CASE("pattern assembly collapses duplicates and keeps no values") {
    const std::vector<Triplet> t{{0, 2, 1.0}, {0, 2, 7.0}, {1, 1, 1.0}};
    const CsrMatrix m = csr_pattern_from_triplets(2, 3, t);
    CHECK_FALSE(m.has_values);
    CHECK(m.values.empty());
    CHECK(m.nnz() == 2);
}

TEST_CASE("out-of-range triplets and broken offsets are rejected") {
    const std::vector<Triplet> bad{{0, 3, 1.0}};
    CHECK_THROWS_AS(csr_from_triplets(2, 3, bad), AssemblyError);
    CsrMatrix m = tridiag(4, -1.0, 2.0);
    m.col_indices[1] = 0;
    CHECK_THROWS_AS(m.validate(), AssemblyError);
}

TEST_CASE("transpose is an involution and matches the definition") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<index_t> row(0, 29), col(0, 17);
    std::uniform_real_distribution<real> val(-1.0, 1.0);
    std::vector<Triplet> t;
    for (int k = 0; k < 120; ++k) {
        t.push_back({row(rng), col(rng), val(rng)});
    }
    const CsrMatrix m = csr_from_triplets(30, 18, t);
    const CsrMatrix mt = transpose(m);
    CHECK(mt.nrows == 18);
    CHECK(mt.ncols == 30);
    mt.validate();
    CHECK(transpose(mt) == m);
    std::map<std::pair<index_t, index_t>, real> a, b;
    for (const auto& e : to_triplets(m)) {
        a[{e.row, e.col}] = e.val;
    }
    for (const auto& e : to_triplets(mt)) {
        b[{e.col, e.row}] = e.val;
    }
    CHECK(a == b);
}

TEST_CASE("numeric transpose refills the symbolic transpose") {
    CsrMatrix m = tridiag(6, -1.0, 2.0);
    CsrMatrix mt = transpose(m);
    for (auto& v : m.values) {
        v *= 3.0;
    }
    transpose_values_into(m, mt);
    CHECK(mt == transpose(m));
    const CsrMatrix other = identity(6);
    CHECK_THROWS_AS(transpose_values_into(other, mt), StructureDriftError);
}

TEST_CASE("row set keeps unique keys and reuses its slots") {
    RowSet s;
    CHECK(s.capacity() == 0);
    for (index_t k : {5, 9, 5, 1000000007, 0, 9}) {
        s.insert(k);
    }
    CHECK(s.size() == 4);
    CHECK(s.contains(1000000007));
    CHECK_FALSE(s.contains(6));
    std::vector<index_t> keys;
    s.sorted_keys(keys);
    CHECK(keys == std::vector<index_t>{0, 5, 9, 1000000007});
    const std::size_t cap = s.capacity();
    const std::size_t allocs = s.allocation_count();
    s.clear();
    CHECK(s.empty());
    CHECK(s.capacity() == cap);
    for (index_t k : {1, 2, 3}) {
        s.insert(k);
    }
    CHECK(s.allocation_count() == allocs);
}

TEST_CASE("row set load factor stays at or below three quarters") {
    RowSet s;
    std::mt19937_64 rng(3);
    std::set<index_t> ref;
    for (int k = 0; k < 5000; ++k) {
        const auto key = static_cast<index_t>(rng() % 100000);
        CHECK(s.insert(key) == ref.insert(key).second);
        CHECK(4 * s.size() <= 3 * s.capacity());
        CHECK((s.capacity() & (s.capacity() - 1)) == 0);
    }
    std::vector<index_t> keys;
    s.sorted_keys(keys);
    CHECK(keys == std::vector<index_t>(ref.begin(), ref.end()));
}

TEST_CASE("accumulator sums per key and drains sorted") {
    RowAccumulator acc;
    acc.add(3, 1.5);
    acc.add(1, 2.0);
    acc.add(3, -0.5);
    acc.add(7, 0.0);
    CHECK(acc.size() == 3);
    CHECK(acc.get(3) == 1.0);
    CHECK(acc.get(4) == 0.0);
    std::vector<std::pair<index_t, real>> out;
    acc.drain_sorted(out);
    CHECK(out == std::vector<std::pair<index_t, real>>{{1, 2.0}, {3, 1.0}, {7, 0.0}});
    CHECK(acc.empty());
    CHECK(acc.capacity() > 0);
}

TEST_CASE("accumulator agrees with a map on random input") {
    RowAccumulator acc;
    std::map<index_t, real> ref;
    std::mt19937_64 rng(11);
    for (int k = 0; k < 3000; ++k) {
        const auto key = static_cast<index_t>(rng() % 700);
        const real v = static_cast<real>(rng() % 17) - 8.0;
        acc.add(key, v);
        ref[key] += v;
    }
    std::vector<std::pair<index_t, real>> out;
    acc.drain_sorted(out);
    CHECK(out == std::vector<std::pair<index_t, real>>(ref.begin(), ref.end()));
}

TEST_CASE("tracked containers charge their growth to the ledger") {
    auto ledger = std::make_shared<MemoryLedger>();
    {
        RowSet s;
        s.track(ledger, MemCategory::transient_hash);
        for (index_t k = 0; k < 100; ++k) {
            s.insert(k);
        }
        CHECK(ledger->current(MemCategory::transient_hash) == s.bytes());
        RowAccumulator acc;
        acc.track(ledger, MemCategory::transient_hash);
        acc.add(1, 1.0);
        CHECK(ledger->current(MemCategory::transient_hash) == s.bytes() + acc.bytes());
    }
    CHECK(ledger->current(MemCategory::transient_hash) == 0);
    CHECK(ledger->peak(MemCategory::transient_hash) > 0);
}

TEST_CASE("ledger tracks peaks per category and overall working memory") {
    MemoryLedger l;
    l.charge(MemCategory::input_matrices, 1000);
    l.charge(MemCategory::output_matrix, 10);
    l.charge(MemCategory::transient_hash, 30);
    l.release(MemCategory::transient_hash, 30);
    l.charge(MemCategory::plan_cache, 5);
    CHECK(l.current_working() == 15);
    CHECK(l.peak_working() == 40);
    CHECK(l.peak(MemCategory::transient_hash) == 30);
    CHECK(l.current_total() == 1015);
    CHECK_THROWS_AS(l.release(MemCategory::auxiliary_matrices, 1), Error);
}

TEST_CASE("ledger charges follow set, move and destruction") {
    auto ledger = std::make_shared<MemoryLedger>();
    LedgerCharge a(ledger, MemCategory::plan_cache, 64);
    a.set(16);
    CHECK(ledger->current(MemCategory::plan_cache) == 16);
    LedgerCharge b = std::move(a);
    CHECK(ledger->current(MemCategory::plan_cache) == 16);
    b = LedgerCharge(ledger, MemCategory::plan_cache, 8);
    CHECK(ledger->current(MemCategory::plan_cache) == 8);
    b.reset();
    CHECK(ledger->current(MemCategory::plan_cache) == 0);
    CHECK(ledger->peak(MemCategory::plan_cache) == 64);
    ledger->reset_peaks();
    CHECK(ledger->peak(MemCategory::plan_cache) == 0);
}

TEST_CASE("matrix market round trip is exact") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<real> val(-1e3, 1e3);
    std::vector<Triplet> t;
    for (index_t i = 0; i < 40; ++i) {
        t.push_back({i, (i * 7) % 25, val(rng)});
        t.push_back({i, (i * 3 + 1) % 25, 1.0 / 3.0});
    }
    const CsrMatrix m = csr_from_triplets(40, 25, t);
    std::stringstream ss;
    write_matrix_market(ss, m);
    CHECK(read_matrix_market(ss) == m);
}

TEST_CASE("matrix market reads symmetric and pattern files") {
    std::istringstream sym("%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 3\n1 1 2\n2 1 -1\n3 2 -1\n");
    const CsrMatrix s = read_matrix_market(sym);
    CHECK(s.nnz() == 5);
    CHECK(transpose(s) == s);
    std::istringstream pat("%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 2\n2 1\n");
    const CsrMatrix p = read_matrix_market(pat);
    CHECK_FALSE(p.has_values);
    CHECK(p.col_indices == std::vector<index_t>{1, 0});
    std::stringstream ss;
    write_matrix_market(ss, p);
    CHECK(read_matrix_market(ss) == p);
}

TEST_CASE("malformed matrix market input reports the line") {
    std::istringstream banner("%%MatrixMarket matrix array real general\n2 2\n");
    CHECK_THROWS_AS(read_matrix_market(banner), ParseError);
    std::istringstream range("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
    try {
        read_matrix_market(range);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    std::istringstream count("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n");
    CHECK_THROWS_AS(read_matrix_market(count), ParseError);
}

TEST_CASE("toy interpolation offsets and the empty matrix") {
    const CsrMatrix p = toy_p();
    CHECK(p.row_offsets == std::vector<index_t>{0, 2, 3, 5, 6, 8, 9});
    CHECK(p.nnz() == 9);
    const CsrMatrix e = csr_from_triplets(3, 3, {});
    CHECK(e.row_offsets == std::vector<index_t>{0, 0, 0, 0});
    e.validate();
}
