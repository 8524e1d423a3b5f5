#include <doctest.h>

#include <random>
#include <set>

#include "pbnc/codec.hpp"
#include "pbnc/protograph.hpp"

using namespace pbnc;

namespace {

Protomatrix small_proto() {
  Protomatrix p;
  p.n_v = 4;
  p.b1 = {{1, 1, 1, 0}, {0, 1, 1, 1}};
  p.b2 = {{1, 1, 1, 1}, {2, 1, 0, 1}, {1, 0, 1, 2}};
  return p;
}

LiftedCode small_code(std::uint64_t seed, int batch_size = 4) {
  std::mt19937_64 rng(seed);
  return make_lifted_code(small_proto(), PuncturingVector::zeros(3), 2, 3, batch_size,
                          FieldSpec{8}, rng);
}

PacketBlock random_inputs(const GfContext& ctx, int T, int count, std::mt19937_64& rng) {
  PacketBlock b(T, count);
  std::uniform_int_distribution<int> sym(0, ctx.spec().q() - 1);
  for (auto& v : b.data) v = static_cast<Symbol>(sym(rng));
  return b;
}

// Build batch equations as if every surviving column arrived intact.
std::vector<BatchEquation> to_equations(const std::vector<EncodedBatch>& enc) {
  std::vector<BatchEquation> out;
  for (const auto& e : enc) out.push_back({e.idx, e.gen, e.x});
  return out;
}

// Independent dense ground truth: stack every batch column and every parity
// check into one big system and solve it outright.
bool dense_solvable(const GfContext& ctx, const std::vector<BatchEquation>& batches,
                    const std::vector<LabeledEdge>& t1, int n_vn) {
  int n_lcn = 0;
  for (const auto& e : t1) n_lcn = std::max(n_lcn, e.check + 1);
  int rows = n_lcn;
  for (const auto& b : batches) rows += b.coeff.cols();
  GfMatrix a(rows, n_vn);
  int r = 0;
  for (const auto& b : batches)
    for (int c = 0; c < b.coeff.cols(); ++c, ++r)
      for (std::size_t k = 0; k < b.idx.size(); ++k)
        a.at(r, b.idx[k]) = b.coeff.at(static_cast<int>(k), c);
  for (const auto& e : t1) a.at(r + e.check, e.vn) = ctx.add(a.at(r + e.check, e.vn), e.label);
  return rank(ctx, a) == n_vn;
}

}  // namespace

TEST_CASE("systematic precode satisfies every parity check") {
  const auto code = small_code(31);
  const GfContext ctx(code.spec);
  const PrecodeEncoder enc(ctx, code.t1, code.n_vn, code.n_lcn);
  CHECK(enc.input_count() + enc.rank() == code.n_vn);
  std::mt19937_64 rng(32);
  const auto in = random_inputs(ctx, 3, enc.input_count(), rng);
  const auto v = enc.encode(in);
  REQUIRE(v.count == code.n_vn);
  // data symbols pass through unchanged
  for (int k = 0; k < enc.input_count(); ++k)
    for (int t = 0; t < in.T; ++t)
      CHECK(v.at(t, enc.data_positions()[static_cast<std::size_t>(k)]) == in.at(t, k));
  // every L-CN sums to zero with its labels
  std::vector<std::vector<Symbol>> sums(static_cast<std::size_t>(code.n_lcn),
                                        std::vector<Symbol>(3, 0));
  for (const auto& e : code.t1)
    for (int t = 0; t < 3; ++t)
      sums[static_cast<std::size_t>(e.check)][static_cast<std::size_t>(t)] ^=
          ctx.mul(e.label, v.at(t, e.vn));
  for (const auto& s : sums)
    for (Symbol x : s) CHECK(x == 0);
}

TEST_CASE("batch encoding multiplies the right packets by the generator") {
  const auto code = small_code(41);
  const GfContext ctx(code.spec);
  std::mt19937_64 rng(42);
  PacketBlock v = random_inputs(ctx, 2, code.n_vn, rng);
  std::mt19937_64 grng(43);
  const auto enc = outer_encode(ctx, code.t2_rows, v, code.batch_size, grng);
  REQUIRE(enc.size() == code.t2_rows.size());
  for (const auto& b : enc) {
    for (int c = 0; c < code.batch_size; ++c)
      for (int t = 0; t < 2; ++t) {
        Symbol want = 0;
        for (std::size_t k = 0; k < b.idx.size(); ++k)
          want ^= ctx.mul(b.gen.at(static_cast<int>(k), c), v.at(t, b.idx[k]));
        CHECK(b.x.at(t, c) == want);
      }
  }
}

TEST_CASE("lossless reception decodes exactly by plain peeling") {
  for (std::uint64_t seed : {7ull, 8ull, 9ull}) {
    const auto code = small_code(seed);
    const GfContext ctx(code.spec);
    const PrecodeEncoder pre(ctx, code.t1, code.n_vn, code.n_lcn);
    std::mt19937_64 rng(seed + 100);
    const auto in = random_inputs(ctx, 2, pre.input_count(), rng);
    const auto v = pre.encode(in);
    const auto enc = outer_encode(ctx, code.t2_rows, v, code.batch_size, rng);
    const auto res = bp_decode(ctx, to_equations(enc), code.t1, code.n_vn, 2);
    REQUIRE(res.success);
    for (int p = 0; p < code.n_vn; ++p)
      for (int t = 0; t < 2; ++t) CHECK(res.packets.at(t, p) == v.at(t, p));
  }
}

TEST_CASE("inactivation success coincides with dense solvability") {
  std::mt19937_64 rng(1234);
  int successes = 0, failures = 0;
  for (int it = 0; it < 150; ++it) {
    const GfContext ctx(FieldSpec{1});  // binary keeps the oracle cheap
    const int n_vn = 10;
    // random sparse parity checks
    std::vector<LabeledEdge> t1;
    const int n_lcn = 3;
    std::uniform_int_distribution<int> pick(0, n_vn - 1);
    for (int c = 0; c < n_lcn; ++c) {
      std::set<int> vs;
      while (static_cast<int>(vs.size()) < 3) vs.insert(pick(rng));
      for (int v : vs) t1.push_back({c, v, 1});
    }
    // random batches over random supports with random binary coefficients
    std::vector<BatchEquation> batches;
    const int n_b = std::uniform_int_distribution<int>(3, 7)(rng);
    PacketBlock truth(1, n_vn);
    std::uniform_int_distribution<int> bit(0, 1);
    // ground truth consistent with the checks: solve for a codeword
    GfMatrix chk(n_lcn, n_vn);
    for (const auto& e : t1) chk.at(e.check, e.vn) = ctx.add(chk.at(e.check, e.vn), 1);
    const auto rr = rref_with_pivots(ctx, chk, GfMatrix(n_lcn, 1));
    std::vector<char> is_pivot(n_vn, 0);
    for (int p : rr.pivots) is_pivot[static_cast<std::size_t>(p)] = 1;
    for (int vcol = 0; vcol < n_vn; ++vcol)
      if (!is_pivot[static_cast<std::size_t>(vcol)])
        truth.at(0, vcol) = static_cast<Symbol>(bit(rng));
    for (std::size_t p = 0; p < rr.pivots.size(); ++p) {
      Symbol s = 0;
      for (int vcol = 0; vcol < n_vn; ++vcol)
        if (!is_pivot[static_cast<std::size_t>(vcol)] && rr.a.at(static_cast<int>(p), vcol))
          s ^= truth.at(0, vcol);
      truth.at(0, rr.pivots[p]) = s;
    }
    for (int b = 0; b < n_b; ++b) {
      BatchEquation eq;
      std::set<int> vs;
      const int deg = std::uniform_int_distribution<int>(2, 5)(rng);
      while (static_cast<int>(vs.size()) < deg) vs.insert(pick(rng));
      eq.idx.assign(vs.begin(), vs.end());
      const int w = std::uniform_int_distribution<int>(1, 3)(rng);
      eq.coeff = GfMatrix(deg, w);
      for (int r2 = 0; r2 < deg; ++r2)
        for (int c = 0; c < w; ++c) eq.coeff.at(r2, c) = static_cast<Symbol>(bit(rng));
      eq.y = GfMatrix(1, w);
      for (int c = 0; c < w; ++c) {
        Symbol s = 0;
        for (int r2 = 0; r2 < deg; ++r2)
          if (eq.coeff.at(r2, c)) s ^= truth.at(0, eq.idx[static_cast<std::size_t>(r2)]);
        eq.y.at(0, c) = s;
      }
      batches.push_back(std::move(eq));
    }
    const bool oracle = dense_solvable(ctx, batches, t1, n_vn);
    CHECK(oracle == ml_feasible(ctx, batches, t1, n_vn));
    const auto ml = inactivation_decode(ctx, batches, t1, n_vn, 1, n_vn);
    CHECK(ml.success == oracle);
    const auto bp = bp_decode(ctx, batches, t1, n_vn, 1);
    if (bp.success) CHECK(ml.success);  // peeling success implies ML success
    if (ml.success) {
      ++successes;
      for (int p = 0; p < n_vn; ++p) CHECK(ml.packets.at(0, p) == truth.at(0, p));
    } else {
      ++failures;
    }
    if (bp.success)
      for (int p = 0; p < n_vn; ++p) CHECK(bp.packets.at(0, p) == truth.at(0, p));
  }
  // the instance generator must exercise both outcomes
  CHECK(successes > 10);
  CHECK(failures > 10);
}

TEST_CASE("a full-rank batch resolves both its unknowns") {
  const GfContext ctx(FieldSpec{8});
  std::vector<LabeledEdge> t1;
  std::vector<BatchEquation> batches;
  BatchEquation eq;
  eq.idx = {0, 1};
  eq.coeff = GfMatrix(2, 2);
  eq.coeff.at(0, 0) = 1;
  eq.coeff.at(1, 0) = 2;
  eq.coeff.at(0, 1) = 3;
  eq.coeff.at(1, 1) = 7;
  eq.y = GfMatrix(1, 2);
  eq.y.at(0, 0) = ctx.add(ctx.mul(1, 5), ctx.mul(2, 9));
  eq.y.at(0, 1) = ctx.add(ctx.mul(3, 5), ctx.mul(7, 9));
  batches.push_back(eq);
  const auto full = inactivation_decode(ctx, batches, t1, 2, 1, 2);
  REQUIRE(full.success);
  CHECK(full.packets.at(0, 0) == 5);
  CHECK(full.packets.at(0, 1) == 9);
}
