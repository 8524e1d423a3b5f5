#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "pbnc/protograph.hpp"

using namespace pbnc;

namespace {

Protomatrix small_proto() {
  Protomatrix p;
  p.n_v = 4;
  p.b1 = {{1, 2, 1, 0}, {0, 1, 1, 1}};
  p.b2 = {{1, 1, 0, 1}, {2, 0, 1, 1}};
  return p;
}

}  // namespace

TEST_CASE("protomatrix validation") {
  auto p = small_proto();
  CHECK_NOTHROW(p.validate());
  CHECK_NOTHROW(p.validate(8));

  auto bad = p;
  bad.b1[0].pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  auto neg = p;
  neg.b2[1][0] = -1;
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);

  auto heavy = p;
  heavy.b2 = {{3, 3, 3, 3}};  // no row light enough to seed peeling at M=4
  CHECK_THROWS_AS(heavy.validate(4), std::invalid_argument);
}

TEST_CASE("puncturing vector validation") {
  PuncturingVector d;
  d.delta = {0.5, 0.0};
  CHECK_NOTHROW(d.validate(2));
  d.delta = {1.2, 0.0};
  CHECK_THROWS_AS(d.validate(2), std::invalid_argument);
}

TEST_CASE("precode lifting preserves edge counts and kills parallel edges") {
  const auto p = small_proto();
  std::mt19937_64 rng(5);
  const int z1 = 4, z2 = 3, z = z1 * z2;
  const auto t1 = peg_lift_precode(p.b1, z1, z2, FieldSpec{8}, rng);

  // edge count: every protograph entry b expands to b * Z1 * Z2 edges
  int proto_edges = 0;
  for (const auto& row : p.b1)
    for (int v : row) proto_edges += v;
  CHECK(static_cast<int>(t1.size()) == proto_edges * z);

  // no two edges connect the same (check, vn) pair
  std::set<std::pair<int, int>> seen;
  for (const auto& e : t1) {
    CHECK(e.label != 0);
    CHECK(e.check >= 0);
    CHECK(e.check < p.n_c1() * z);
    CHECK(e.vn >= 0);
    CHECK(e.vn < p.n_v * z);
    CHECK(seen.emplace(e.check, e.vn).second);
  }

  // block structure: an edge between check block i and vn block j exists
  // only where B1[i][j] > 0, and each such pair carries exactly b*z edges
  std::map<std::pair<int, int>, int> block_edges;
  for (const auto& e : t1) ++block_edges[{e.check / z, e.vn / z}];
  for (int i = 0; i < p.n_c1(); ++i)
    for (int j = 0; j < p.n_v; ++j) {
      auto it = block_edges.find({i, j});
      const int got = it == block_edges.end() ? 0 : it->second;
      CHECK(got == p.b1[i][j] * z);
    }
}

TEST_CASE("batch lifting honors puncturing and quasi-cyclic degrees") {
  const auto p = small_proto();
  PuncturingVector punct;
  punct.delta = {0.25, 0.5};
  std::mt19937_64 rng(9);
  const int z1 = 4, z2 = 5, z = z1 * z2;
  std::vector<std::vector<int>> rows;
  std::vector<int> types;
  random_lift_batches(p.b2, punct, z1, z2, rng, rows, types);

  std::vector<int> per_type(p.n_c2(), 0);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int ty = types[r];
    ++per_type[ty];
    // each surviving row has exactly row_weight2 distinct VNs in range
    CHECK(static_cast<int>(rows[r].size()) == p.row_weight2(ty));
    CHECK(std::set<int>(rows[r].begin(), rows[r].end()).size() == rows[r].size());
    for (int v : rows[r]) {
      CHECK(v >= 0);
      CHECK(v < p.n_v * z);
    }
  }
  for (int i = 0; i < p.n_c2(); ++i)
    CHECK(per_type[i] == static_cast<int>(std::ceil((1.0 - punct.delta[i]) * z)));
}

TEST_CASE("lifting is deterministic given the seed") {
  const auto p = small_proto();
  PuncturingVector punct;
  punct.delta = {0.2, 0.2};
  std::mt19937_64 r1(42), r2(42), r3(43);
  const auto a = make_lifted_code(p, punct, 3, 4, 8, FieldSpec{8}, r1);
  const auto b = make_lifted_code(p, punct, 3, 4, 8, FieldSpec{8}, r2);
  const auto c = make_lifted_code(p, punct, 3, 4, 8, FieldSpec{8}, r3);
  CHECK(a.t2_rows == b.t2_rows);
  REQUIRE(a.t1.size() == b.t1.size());
  bool same = true;
  for (std::size_t i = 0; i < a.t1.size(); ++i)
    same = same && a.t1[i].check == b.t1[i].check && a.t1[i].vn == b.t1[i].vn &&
           a.t1[i].label == b.t1[i].label;
  CHECK(same);
  CHECK(a.t2_rows != c.t2_rows);  // different seed, different lifting
}

TEST_CASE("peelability check on known graphs") {
  // one check covering v0,v1; batch rows cover v1 only -> v0 recoverable
  std::vector<LabeledEdge> t1{{0, 0, 1}, {0, 1, 1}};
  std::vector<std::vector<int>> rows{{1}};
  CHECK(bp_decodable(t1, rows, 2));

  // both v0 and v1 uncovered: the single check cannot recover two unknowns
  CHECK_FALSE(bp_decodable(t1, {}, 2));

  // chain: c0={v0,v1}, c1={v1,v2}; only v2 covered -> peel v1 then v0
  std::vector<LabeledEdge> chain{{0, 0, 1}, {0, 1, 1}, {1, 1, 1}, {1, 2, 1}};
  CHECK(bp_decodable(chain, {{2}}, 3));
  CHECK_FALSE(bp_decodable(chain, {}, 3));
}

TEST_CASE("lifting rejects undersized first factor") {
  const auto p = small_proto();
  PuncturingVector punct;
  punct.delta = {0.0, 0.0};
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(make_lifted_code(p, punct, 1, 4, 8, FieldSpec{8}, rng),
                  std::invalid_argument);
}

TEST_CASE("design rate accounting") {
  auto p = small_proto();
  PuncturingVector none, half;
  none.delta = {0.0, 0.0};
  half.delta = {0.5, 0.5};
  // fewer surviving batches -> higher rate
  CHECK(design_rate(p, half) > design_rate(p, none));
}
