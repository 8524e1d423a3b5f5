#pragma once

// Protomatrix representation for protograph-based batched network codes:
// the LDPC precode part B1 stacked over the batch part B2, puncturing
// fractions per batch row, preset constructions, and two-step lifting into
// concrete Tanner graphs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "pbnc/gf_linalg.hpp"

namespace pbnc {

using IntMatrix = std::vector<std::vector<int>>;

struct Protomatrix {
  int n_v = 0;
  IntMatrix b1;  // n_c1 x n_v, LDPC check types
  IntMatrix b2;  // n_c2 x n_v, batch types

  [[nodiscard]] int n_c1() const { return static_cast<int>(b1.size()); }
  [[nodiscard]] int n_c2() const { return static_cast<int>(b2.size()); }
  [[nodiscard]] int n_c() const { return n_c1() + n_c2(); }

  [[nodiscard]] int row_weight1(int i) const { return std::accumulate(b1[i].begin(), b1[i].end(), 0); }
  [[nodiscard]] int row_weight2(int i) const { return std::accumulate(b2[i].begin(), b2[i].end(), 0); }

  [[nodiscard]] int max_entry() const {
    int m = 0;
    for (const auto& r : b1) for (int v : r) m = std::max(m, v);
    for (const auto& r : b2) for (int v : r) m = std::max(m, v);
    return m;
  }

  void validate(int batch_size_m = -1) const {
    for (const auto& r : b1)
      if (static_cast<int>(r.size()) != n_v) throw std::invalid_argument("B1 row width mismatch");
    for (const auto& r : b2)
      if (static_cast<int>(r.size()) != n_v) throw std::invalid_argument("B2 row width mismatch");
    for (const auto& r : b1) for (int v : r) if (v < 0) throw std::invalid_argument("negative B1 entry");
    for (const auto& r : b2) for (int v : r) if (v < 0) throw std::invalid_argument("negative B2 entry");
    if (batch_size_m > 0 && n_c2() > 0) {
      bool start = false;
      for (int i = 0; i < n_c2() && !start; ++i) start = row_weight2(i) <= batch_size_m;
      if (!start) throw std::invalid_argument("no batch row with weight <= M; BP cannot start");
    }
  }
};

struct PuncturingVector {
  std::vector<double> delta;

  [[nodiscard]] double sum() const { return std::accumulate(delta.begin(), delta.end(), 0.0); }

  void validate(int n_c2) const {
    if (static_cast<int>(delta.size()) != n_c2) throw std::invalid_argument("puncturing vector length mismatch");
    for (double d : delta)
      if (d < 0.0 || d >= 1.0) throw std::invalid_argument("puncturing fraction outside [0,1)");
    if (static_cast<double>(n_c2) - sum() <= 0.0) throw std::invalid_argument("puncturing removes all batches");
  }

  static PuncturingVector zeros(int n) { return {std::vector<double>(n, 0.0)}; }
};

// (n_v - n_c1) / (n_c2 - sum(delta))
inline double design_rate(const Protomatrix& b, const PuncturingVector& punct) {
  const double denom = b.n_c2() - punct.sum();
  if (denom == 0.0) throw std::domain_error("design rate undefined: puncturing cancels all batch rows");
  return (b.n_v - b.n_c1()) / denom;
}

// Rate with puncturing resolved to integer surviving-row counts at lifting
// factor z = Z1*Z2: (n_v - n_c1) * z / (number of surviving rows).
inline double lifted_rate(const Protomatrix& b, const PuncturingVector& punct, int z) {
  long long surviving = 0;
  for (int i = 0; i < b.n_c2(); ++i)
    surviving += static_cast<long long>(std::ceil((1.0 - punct.delta[i]) * z));
  if (surviving == 0) throw std::domain_error("puncturing removes all lifted rows");
  return static_cast<double>(b.n_v - b.n_c1()) * z / static_cast<double>(surviving);
}

// ---------------------------------------------------------------------------
// Preset constructions

// B2 block-diagonal of 1xL all-one blocks; disjoint chunks of size L.
inline Protomatrix preset_l_chunked(const IntMatrix& b1, int L) {
  if (b1.empty()) throw std::invalid_argument("precode part required");
  const int n_v = static_cast<int>(b1[0].size());
  if (L <= 0 || n_v % L != 0) throw std::invalid_argument("chunk size must divide n_v");
  Protomatrix p;
  p.n_v = n_v;
  p.b1 = b1;
  const int chunks = n_v / L;
  p.b2.assign(chunks, std::vector<int>(n_v, 0));
  for (int i = 0; i < chunks; ++i)
    for (int j = 0; j < L; ++j) p.b2[i][i * L + j] = 1;
  return p;
}

// Repetition precode coupling consecutive chunks in an end-around fashion:
// B1 is the block circulant [R1 R2 0 ...; 0 R1 R2 ...; ...; R2 0 ... R1]
// with R1, R2 the n_o x L shift blocks; every row has weight 2.
inline Protomatrix preset_overlapped(int n_v, int L, int n_o) {
  if (L <= 0 || n_v % L != 0) throw std::invalid_argument("chunk size must divide n_v");
  if (n_o <= 0 || n_o >= L) throw std::invalid_argument("overlap must be in 1..L-1");
  const int chunks = n_v / L;
  IntMatrix b1(static_cast<std::size_t>(chunks) * n_o, std::vector<int>(n_v, 0));
  for (int c = 0; c < chunks; ++c)
    for (int i = 0; i < n_o; ++i) {
      const int row = c * n_o + i;
      b1[row][c * L + (L - n_o + i)] = 1;              // R1 in block column c
      b1[row][((c + 1) % chunks) * L + i] += 1;        // R2 in the next block column
    }
  Protomatrix p = preset_l_chunked(b1, L);
  return p;
}

// Fixed-rate LT-style precode: B1 = [coefficients | identity], only the
// identity VNs are chunked, so B2 = [0 | block diagonal of 1xL blocks].
inline Protomatrix preset_gamma(const IntMatrix& b1_info, int L) {
  if (b1_info.empty()) throw std::invalid_argument("information part required");
  const int n_c1 = static_cast<int>(b1_info.size());
  if (L <= 0 || n_c1 % L != 0) throw std::invalid_argument("chunk size must divide n_c1");
  const int n_info = static_cast<int>(b1_info[0].size());
  const int n_v = n_info + n_c1;
  Protomatrix p;
  p.n_v = n_v;
  p.b1.assign(n_c1, std::vector<int>(n_v, 0));
  for (int i = 0; i < n_c1; ++i) {
    for (int j = 0; j < n_info; ++j) p.b1[i][j] = b1_info[i][j];
    p.b1[i][n_info + i] = 1;
  }
  const int n_c2 = n_c1 / L;
  p.b2.assign(n_c2, std::vector<int>(n_v, 0));
  for (int i = 0; i < n_c2; ++i)
    for (int j = 0; j < L; ++j) p.b2[i][n_info + i * L + j] = 1;
  return p;
}

// ---------------------------------------------------------------------------
// Lifting

struct LabeledEdge {
  int check = 0;  // lifted check index
  int vn = 0;     // lifted VN index
  Symbol label = 1;
};

struct LiftedCode {
  FieldSpec spec{8};
  int batch_size = 8;
  int z1 = 1, z2 = 1;
  int n_vn = 0;                           // Z1*Z2*n_v
  int n_lcn = 0;                          // Z1*Z2*n_c1
  std::vector<LabeledEdge> t1;            // labeled precode Tanner graph
  std::vector<std::vector<int>> t2_rows;  // per surviving batch: sorted VN set
  std::vector<int> t2_row_type;           // protograph B2 row of each batch

  [[nodiscard]] int n_batches() const { return static_cast<int>(t2_rows.size()); }
};

namespace detail {

// First lifting step: decompose entry b into b distinct cyclic shifts inside
// the Z1 block, eliminating parallel edges deterministically (PEG path) or
// with random distinct shifts (random path).
inline std::vector<int> first_step_shifts(int b, int z1, std::mt19937_64* rng) {
  if (b > z1) throw std::invalid_argument("Z1 smaller than max protograph entry");
  std::vector<int> shifts(z1);
  std::iota(shifts.begin(), shifts.end(), 0);
  if (rng) std::shuffle(shifts.begin(), shifts.end(), *rng);
  shifts.resize(b);
  return shifts;
}

struct QcEdge {
  int check_block = 0;  // row of the Z1-expanded matrix
  int vn_block = 0;     // column of the Z1-expanded matrix
  int shift = 0;        // Z2 circulant shift
};

// BFS distance from a VN copy to a check copy in the partially built lifted
// graph; used to score candidate circulant shifts.
class LiftGraph {
 public:
  LiftGraph(int checks, int vns) : check_adj_(checks), vn_adj_(vns) {}

  void add(int check, int vn) {
    check_adj_[check].push_back(vn);
    vn_adj_[vn].push_back(check);
  }

  [[nodiscard]] int check_degree(int check) const { return static_cast<int>(check_adj_[check].size()); }

  // length of the shortest path vn -> check, or -1 if unreachable
  [[nodiscard]] int distance(int vn, int check, int cap) const {
    if (vn_adj_[vn].empty()) return -1;
    std::vector<int> vd(vn_adj_.size(), -1), cd(check_adj_.size(), -1);
    std::queue<int> frontier;  // encode: vn as 2*v, check as 2*c+1
    vd[vn] = 0;
    frontier.push(2 * vn);
    while (!frontier.empty()) {
      const int cur = frontier.front();
      frontier.pop();
      if (cur & 1) {
        const int c = cur >> 1;
        if (cd[c] >= cap) continue;
        for (int v : check_adj_[c])
          if (vd[v] < 0) {
            vd[v] = cd[c] + 1;
            frontier.push(2 * v);
          }
      } else {
        const int v = cur >> 1;
        if (vd[v] >= cap) continue;
        for (int c : vn_adj_[v]) {
          if (c == check && !(v == vn && vd[v] == 0)) return vd[v] + 1;
          if (cd[c] < 0) {
            cd[c] = vd[v] + 1;
            frontier.push(2 * c + 1);
          }
        }
      }
    }
    return -1;
  }

 private:
  std::vector<std::vector<int>> check_adj_;
  std::vector<std::vector<int>> vn_adj_;
};

}  // namespace detail

// Two-step lifting of the precode part. Step one decomposes parallel edges
// into distinct cyclic shifts inside the Z1 block; step two assigns a Z2
// circulant shift to every unit entry, chosen PEG-style to maximize the
// shortest cycle closed by the new edges (ties: smallest resulting check
// degree, then lowest shift). Edge labels are uniform nonzero field elements.
inline std::vector<LabeledEdge> peg_lift_precode(const IntMatrix& b1, int z1, int z2,
                                                 FieldSpec spec, std::mt19937_64& rng) {
  const int n_c1 = static_cast<int>(b1.size());
  const int n_v = n_c1 ? static_cast<int>(b1[0].size()) : 0;
  const int z = z1 * z2;
  detail::LiftGraph g(n_c1 * z, n_v * z);
  std::vector<detail::QcEdge> placed;
  for (int i = 0; i < n_c1; ++i)
    for (int j = 0; j < n_v; ++j) {
      if (b1[i][j] == 0) continue;
      for (int s1 : detail::first_step_shifts(b1[i][j], z1, nullptr)) {
        // block edge between expanded row (i*z1 + (k+s1) mod z1) and column
        // (j*z1 + k); score every candidate Z2 shift per unit entry
        for (int k = 0; k < z1; ++k) {
          const int rb = i * z1 + (k + s1) % z1;
          const int cb = j * z1 + k;
          int best_shift = 0;
          long best_score = -1;
          for (int cand = 0; cand < z2; ++cand) {
            const int check = rb * z2 + cand;
            const int vn = cb * z2 + 0;
            int dist = g.distance(vn, check, 64);
            long score = dist < 0 ? 1L << 40 : static_cast<long>(dist) << 20;
            score -= g.check_degree(check);  // prefer lighter checks on ties
            if (score > best_score) {
              best_score = score;
              best_shift = cand;
            }
          }
          for (int t = 0; t < z2; ++t)
            g.add(rb * z2 + (t + best_shift) % z2, cb * z2 + t);
          placed.push_back({rb, cb, best_shift});
        }
      }
    }
  std::vector<LabeledEdge> edges;
  std::uniform_int_distribution<int> nz(1, spec.q() - 1);
  for (const auto& e : placed)
    for (int t = 0; t < z2; ++t)
      edges.push_back({e.check_block * z2 + (t + e.shift) % z2,
                       e.vn_block * z2 + t, static_cast<Symbol>(nz(rng))});
  std::sort(edges.begin(), edges.end(), [](const LabeledEdge& a, const LabeledEdge& b) {
    return std::tie(a.check, a.vn) < std::tie(b.check, b.vn);
  });
  return edges;
}

// Two-step random lifting of the batch part with the quasi-cyclic constraint,
// followed by per-type uniform selection of ceil((1-delta_i) * Z1 * Z2)
// surviving rows.
inline void random_lift_batches(const IntMatrix& b2, const PuncturingVector& punct,
                                int z1, int z2, std::mt19937_64& rng,
                                std::vector<std::vector<int>>& rows_out,
                                std::vector<int>& type_out) {
  const int n_c2 = static_cast<int>(b2.size());
  punct.validate(n_c2);
  const int z = z1 * z2;
  rows_out.clear();
  type_out.clear();
  std::uniform_int_distribution<int> shift2(0, z2 - 1);
  for (int i = 0; i < n_c2; ++i) {
    // build all z lifted rows of type i
    std::vector<std::vector<int>> rows(z);
    for (int j = 0; j < static_cast<int>(b2[i].size()); ++j) {
      if (b2[i][j] == 0) continue;
      for (int s1 : detail::first_step_shifts(b2[i][j], z1, &rng)) {
        for (int k = 0; k < z1; ++k) {
          // each unit entry of the Z1-expanded matrix gets its own circulant
          const int s2 = shift2(rng);
          const int rb = (k + s1) % z1;
          for (int t = 0; t < z2; ++t)
            rows[rb * z2 + (t + s2) % z2].push_back((j * z1 + k) * z2 + t);
        }
      }
    }
    const int keep = static_cast<int>(std::ceil((1.0 - punct.delta[i]) * z));
    std::vector<int> order(z);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(keep);
    std::sort(order.begin(), order.end());
    for (int r : order) {
      std::sort(rows[r].begin(), rows[r].end());
      rows_out.push_back(std::move(rows[r]));
      type_out.push_back(i);
    }
  }
}

// Peeling check: VNs with no surviving batch edge start erased; an L-CN
// recovers its single erased neighbor. True iff everything gets recovered.
inline bool bp_decodable(const std::vector<LabeledEdge>& t1,
                         const std::vector<std::vector<int>>& t2_rows, int n_vn) {
  std::vector<char> erased(n_vn, 1);
  for (const auto& row : t2_rows)
    for (int v : row) erased[v] = 0;
  int n_lcn = 0;
  for (const auto& e : t1) n_lcn = std::max(n_lcn, e.check + 1);
  std::vector<std::vector<int>> check_vns(n_lcn);
  std::vector<std::vector<int>> vn_checks(n_vn);
  for (const auto& e : t1) {
    check_vns[e.check].push_back(e.vn);
    vn_checks[e.vn].push_back(e.check);
  }
  std::vector<int> missing(n_lcn, 0);
  std::deque<int> ready;
  for (int c = 0; c < n_lcn; ++c) {
    for (int v : check_vns[c]) missing[c] += erased[v];
    if (missing[c] == 1) ready.push_back(c);
  }
  std::size_t left = std::count(erased.begin(), erased.end(), char(1));
  while (!ready.empty()) {
    const int c = ready.front();
    ready.pop_front();
    if (missing[c] != 1) continue;
    for (int v : check_vns[c]) {
      if (!erased[v]) continue;
      erased[v] = 0;
      --left;
      for (int c2 : vn_checks[v])
        if (--missing[c2] == 1) ready.push_back(c2);
      break;
    }
  }
  return left == 0;
}

inline LiftedCode make_lifted_code(const Protomatrix& proto, const PuncturingVector& punct,
                                   int z1, int z2, int batch_size, FieldSpec spec,
                                   std::mt19937_64& rng) {
  if (z1 < proto.max_entry()) throw std::invalid_argument("Z1 smaller than max protograph entry");
  LiftedCode code;
  code.spec = spec;
  code.batch_size = batch_size;
  code.z1 = z1;
  code.z2 = z2;
  code.n_vn = z1 * z2 * proto.n_v;
  code.n_lcn = z1 * z2 * proto.n_c1();
  code.t1 = peg_lift_precode(proto.b1, z1, z2, spec, rng);
  random_lift_batches(proto.b2, punct, z1, z2, rng, code.t2_rows, code.t2_row_type);
  return code;
}

}  // namespace pbnc
