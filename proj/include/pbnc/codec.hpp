#pragma once

// Packet-level encoder and decoders for a lifted code: sparse precode
// encoding, batch (outer) encoding, joint BP over parity checks and batch
// equations, and inactivation (ML) decoding with a symbolic back-end.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "pbnc/gf_linalg.hpp"
#include "pbnc/protograph.hpp"

namespace pbnc {

// T x count block of field symbols; one column per packet.
struct PacketBlock {
  int T = 0;
  int count = 0;
  std::vector<Symbol> data;  // row-major, data[t*count + k]

  PacketBlock() = default;
  PacketBlock(int t, int n) : T(t), count(n), data(static_cast<std::size_t>(t) * n, 0) {}

  Symbol& at(int t, int k) { return data[static_cast<std::size_t>(t) * count + k]; }
  [[nodiscard]] Symbol at(int t, int k) const { return data[static_cast<std::size_t>(t) * count + k]; }
};

// One received batch, already reduced to the packets it touches:
// Y = V[idx] * coeff, where coeff = G~ * H.
struct BatchEquation {
  std::vector<int> idx;  // distinct VN indices, ascending
  GfMatrix coeff;        // |idx| x w
  GfMatrix y;            // T x w
};

struct DecodeResult {
  std::vector<char> recovered;  // per VN
  PacketBlock packets;          // recovered payloads (columns for unrecovered VNs are zero)
  bool success = false;
  int inactivated_count = 0;
};

// Systematic encoder for the sparse precode. Gaussian elimination on the
// parity-check matrix picks the parity positions once; encode() then fills
// data positions and solves for the parity packets.
class PrecodeEncoder {
 public:
  PrecodeEncoder(const GfContext& ctx, const std::vector<LabeledEdge>& t1, int n_vn,
                 int n_lcn)
      : ctx_(ctx), n_vn_(n_vn), n_lcn_(n_lcn) {
    GfMatrix hmat(n_lcn, n_vn);
    for (const auto& e : t1) hmat.at(e.check, e.vn) ^= e.label;
    auto res = rref_with_pivots(ctx, hmat, GfMatrix(n_lcn, 0));
    rank_ = static_cast<int>(res.pivots.size());
    pivots_ = res.pivots;
    reduced_ = std::move(res.a);
    std::vector<char> is_pivot(static_cast<std::size_t>(n_vn), 0);
    for (int c : pivots_) is_pivot[static_cast<std::size_t>(c)] = 1;
    for (int j = 0; j < n_vn; ++j)
      if (!is_pivot[static_cast<std::size_t>(j)]) data_cols_.push_back(j);
  }

  [[nodiscard]] int rank() const { return rank_; }
  [[nodiscard]] bool full_rank() const { return rank_ == n_lcn_; }
  [[nodiscard]] int input_count() const { return static_cast<int>(data_cols_.size()); }
  [[nodiscard]] const std::vector<int>& data_positions() const { return data_cols_; }

  // inputs: T x input_count; returns T x n_vn intermediate block with all
  // parity checks satisfied.
  [[nodiscard]] PacketBlock encode(const PacketBlock& inputs) const {
    if (inputs.count != input_count()) throw std::invalid_argument("input packet count");
    PacketBlock v(inputs.T, n_vn_);
    for (int k = 0; k < inputs.count; ++k)
      for (int t = 0; t < inputs.T; ++t) v.at(t, data_cols_[static_cast<std::size_t>(k)]) = inputs.at(t, k);
    // row r of the reduced system: v[pivot_r] = sum over data cols of the
    // reduced coefficients times data packets (char 2, so minus is plus)
    for (int r = 0; r < rank_; ++r) {
      const int p = pivots_[static_cast<std::size_t>(r)];
      for (int t = 0; t < inputs.T; ++t) {
        Symbol acc = 0;
        for (int j : data_cols_) {
          const Symbol c = reduced_.at(r, j);
          if (c) acc ^= ctx_.mul(c, v.at(t, j));
        }
        v.at(t, p) = acc;
      }
    }
    return v;
  }

 private:
  const GfContext& ctx_;
  int n_vn_;
  int n_lcn_;
  int rank_ = 0;
  std::vector<int> pivots_;
  std::vector<int> data_cols_;
  GfMatrix reduced_;
};

// Batch encoding: X_i = V[idx_i] * G~_i with a fresh totally random
// generator per batch.
struct EncodedBatch {
  std::vector<int> idx;
  GfMatrix gen;  // |idx| x M
  GfMatrix x;    // T x M
};

inline std::vector<EncodedBatch> outer_encode(const GfContext& ctx,
                                              const std::vector<std::vector<int>>& t2_rows,
                                              const PacketBlock& v, int batch_size,
                                              std::mt19937_64& rng) {
  std::vector<EncodedBatch> out;
  out.reserve(t2_rows.size());
  for (const auto& row : t2_rows) {
    if (row.empty()) throw std::invalid_argument("empty batch row");
    EncodedBatch b;
    b.idx = row;
    std::sort(b.idx.begin(), b.idx.end());
    b.idx.erase(std::unique(b.idx.begin(), b.idx.end()), b.idx.end());
    b.gen = random_matrix(ctx, static_cast<int>(b.idx.size()), batch_size, rng);
    b.x = GfMatrix(v.T, batch_size);
    for (int r = 0; r < static_cast<int>(b.idx.size()); ++r) {
      const int vn = b.idx[static_cast<std::size_t>(r)];
      for (int c = 0; c < batch_size; ++c) {
        const Symbol g = b.gen.at(r, c);
        if (!g) continue;
        for (int t = 0; t < v.T; ++t) b.x.at(t, c) ^= ctx.mul(g, v.at(t, vn));
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

namespace detail {

// Affine packet value: cst + sum_l coef[l] * inactive_l. coef is as long as
// the number of inactive unknowns existing when last touched.
struct Expr {
  std::vector<Symbol> cst;   // length T
  std::vector<Symbol> coef;  // indexed by inactive slot

  void axpy(const GfContext& ctx, Symbol a, const Expr& o) {
    if (!a) return;
    for (std::size_t t = 0; t < cst.size(); ++t) cst[t] ^= ctx.mul(a, o.cst[t]);
    if (coef.size() < o.coef.size()) coef.resize(o.coef.size(), 0);
    for (std::size_t l = 0; l < o.coef.size(); ++l) coef[l] ^= ctx.mul(a, o.coef[l]);
  }
};

struct SymbolicState {
  std::vector<std::optional<Expr>> val;
  int n_inactive = 0;
};

}  // namespace detail

// Internal solver shared by bp_decode and inactivation_decode: max_inactive=0
// gives plain BP.
inline DecodeResult solve_erasures(const GfContext& ctx, const std::vector<BatchEquation>& batches,
                                   const std::vector<LabeledEdge>& t1, int n_vn, int T,
                                   int max_inactive, int max_rounds = 1 << 20) {
  detail::SymbolicState st;
  st.val.assign(static_cast<std::size_t>(n_vn), std::nullopt);

  int n_lcn = 0;
  for (const auto& e : t1) n_lcn = std::max(n_lcn, e.check + 1);
  std::vector<std::vector<std::pair<int, Symbol>>> lcn(static_cast<std::size_t>(n_lcn));
  for (const auto& e : t1) lcn[static_cast<std::size_t>(e.check)].emplace_back(e.vn, e.label);

  std::vector<char> batch_dirty(batches.size(), 1);
  std::vector<char> lcn_dirty(static_cast<std::size_t>(n_lcn), 1);
  std::vector<std::vector<int>> vn_batches(static_cast<std::size_t>(n_vn));
  std::vector<std::vector<int>> vn_lcns(static_cast<std::size_t>(n_vn));
  for (std::size_t b = 0; b < batches.size(); ++b)
    for (int v : batches[b].idx) vn_batches[static_cast<std::size_t>(v)].push_back(static_cast<int>(b));
  for (int c = 0; c < n_lcn; ++c)
    for (auto& [v, s] : lcn[static_cast<std::size_t>(c)]) vn_lcns[static_cast<std::size_t>(v)].push_back(c);

  const auto mark_known = [&](int v, detail::Expr e) {
    st.val[static_cast<std::size_t>(v)] = std::move(e);
    for (int b : vn_batches[static_cast<std::size_t>(v)]) batch_dirty[static_cast<std::size_t>(b)] = 1;
    for (int c : vn_lcns[static_cast<std::size_t>(v)]) lcn_dirty[static_cast<std::size_t>(c)] = 1;
  };

  // Solve one batch's residual system if it pins down all its unknowns.
  const auto try_batch = [&](const BatchEquation& bq) -> bool {
    std::vector<int> unk;
    for (std::size_t r = 0; r < bq.idx.size(); ++r)
      if (!st.val[static_cast<std::size_t>(bq.idx[r])]) unk.push_back(static_cast<int>(r));
    if (unk.empty()) return false;
    const int w = bq.coeff.cols();
    const int nI = st.n_inactive;
    // a: w x |unk| system in the unknown packets; rhs columns carry the
    // constant payload (T) then the inactive coefficients (nI)
    GfMatrix a(w, static_cast<int>(unk.size()));
    GfMatrix rhs(w, T + nI);
    for (int c = 0; c < w; ++c) {
      for (std::size_t u = 0; u < unk.size(); ++u)
        a.at(c, static_cast<int>(u)) = bq.coeff.at(unk[u], c);
      for (int t = 0; t < T; ++t) rhs.at(c, t) = bq.y.at(t, c);
      for (std::size_t r = 0; r < bq.idx.size(); ++r) {
        const auto& ov = st.val[static_cast<std::size_t>(bq.idx[r])];
        if (!ov) continue;
        const Symbol g = bq.coeff.at(static_cast<int>(r), c);
        if (!g) continue;
        for (int t = 0; t < T; ++t) rhs.at(c, t) ^= ctx.mul(g, ov->cst[static_cast<std::size_t>(t)]);
        for (std::size_t l = 0; l < ov->coef.size(); ++l)
          rhs.at(c, T + static_cast<int>(l)) ^= ctx.mul(g, ov->coef[l]);
      }
    }
    auto res = rref_with_pivots(ctx, std::move(a), std::move(rhs));
    if (static_cast<int>(res.pivots.size()) != static_cast<int>(unk.size())) return false;
    for (std::size_t r = 0; r < res.pivots.size(); ++r) {
      const int u = res.pivots[r];
      detail::Expr e;
      e.cst.resize(static_cast<std::size_t>(T));
      e.coef.resize(static_cast<std::size_t>(nI));
      for (int t = 0; t < T; ++t) e.cst[static_cast<std::size_t>(t)] = res.rhs.at(static_cast<int>(r), t);
      for (int l = 0; l < nI; ++l) e.coef[static_cast<std::size_t>(l)] = res.rhs.at(static_cast<int>(r), T + l);
      mark_known(bq.idx[static_cast<std::size_t>(unk[static_cast<std::size_t>(u)])], std::move(e));
    }
    return true;
  };

  // Peel one parity check with a single unknown neighbor.
  const auto try_lcn = [&](int c) -> bool {
    int miss = -1;
    Symbol miss_label = 0;
    for (auto& [v, s] : lcn[static_cast<std::size_t>(c)]) {
      if (st.val[static_cast<std::size_t>(v)]) continue;
      if (miss >= 0) return false;
      miss = v;
      miss_label = s;
    }
    if (miss < 0 || miss_label == 0) return false;
    detail::Expr e;
    e.cst.assign(static_cast<std::size_t>(T), 0);
    for (auto& [v, s] : lcn[static_cast<std::size_t>(c)]) {
      if (v == miss) continue;
      e.axpy(ctx, s, *st.val[static_cast<std::size_t>(v)]);
    }
    const Symbol f = ctx.inv(miss_label);
    for (auto& x : e.cst) x = ctx.mul(f, x);
    for (auto& x : e.coef) x = ctx.mul(f, x);
    mark_known(miss, std::move(e));
    return true;
  };

  int rounds = 0;
  while (rounds++ < max_rounds) {
    bool progress = false;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      if (!batch_dirty[b]) continue;
      batch_dirty[b] = 0;
      progress |= try_batch(batches[b]);
    }
    for (int c = 0; c < n_lcn; ++c) {
      if (!lcn_dirty[static_cast<std::size_t>(c)]) continue;
      lcn_dirty[static_cast<std::size_t>(c)] = 0;
      progress |= try_lcn(c);
    }
    if (progress) continue;

    const bool all_known = std::all_of(st.val.begin(), st.val.end(),
                                       [](const auto& o) { return o.has_value(); });
    if (all_known || st.n_inactive >= max_inactive) break;

    // Stalled: inactivate the unresolved VN touching the most batches that
    // are exactly one unknown short of solvable; ties go to the lowest index.
    std::vector<int> score(static_cast<std::size_t>(n_vn), 0);
    for (const auto& bq : batches) {
      std::vector<int> unk;
      for (std::size_t r = 0; r < bq.idx.size(); ++r)
        if (!st.val[static_cast<std::size_t>(bq.idx[r])]) unk.push_back(bq.idx[r]);
      if (unk.empty()) continue;
      GfMatrix sub(static_cast<int>(unk.size()), bq.coeff.cols());
      int rr = 0;
      for (std::size_t r = 0; r < bq.idx.size(); ++r)
        if (!st.val[static_cast<std::size_t>(bq.idx[r])]) {
          for (int c = 0; c < bq.coeff.cols(); ++c) sub.at(rr, c) = bq.coeff.at(static_cast<int>(r), c);
          ++rr;
        }
      if (static_cast<int>(unk.size()) - rank(ctx, sub) == 1)
        for (int v : unk) ++score[static_cast<std::size_t>(v)];
    }
    int pick = -1;
    for (int v = 0; v < n_vn; ++v) {
      if (st.val[static_cast<std::size_t>(v)]) continue;
      if (pick < 0 || score[static_cast<std::size_t>(v)] > score[static_cast<std::size_t>(pick)]) pick = v;
    }
    if (pick < 0) break;
    detail::Expr e;
    e.cst.assign(static_cast<std::size_t>(T), 0);
    e.coef.assign(static_cast<std::size_t>(st.n_inactive) + 1, 0);
    e.coef.back() = 1;
    ++st.n_inactive;
    mark_known(pick, std::move(e));
  }

  DecodeResult out;
  out.recovered.assign(static_cast<std::size_t>(n_vn), 0);
  out.packets = PacketBlock(T, n_vn);
  out.inactivated_count = st.n_inactive;

  const bool all_known = std::all_of(st.val.begin(), st.val.end(),
                                     [](const auto& o) { return o.has_value(); });
  if (!all_known) {
    // Report whatever is concrete; without inactive unknowns every resolved
    // expression is already a plain payload.
    if (st.n_inactive == 0) {
      for (int v = 0; v < n_vn; ++v) {
        if (!st.val[static_cast<std::size_t>(v)]) continue;
        for (int t = 0; t < T; ++t)
          out.packets.at(t, v) = st.val[static_cast<std::size_t>(v)]->cst[static_cast<std::size_t>(t)];
        out.recovered[static_cast<std::size_t>(v)] = 1;
      }
    }
    return out;
  }

  std::vector<Symbol> inact_val;  // nI x T, row-major
  if (st.n_inactive > 0) {
    // Re-substitute every original equation and solve the dense system in
    // the inactive unknowns.
    const int nI = st.n_inactive;
    std::vector<Symbol> arows;  // rows x nI
    std::vector<Symbol> rrows;  // rows x T
    const auto add_eq = [&](const detail::Expr& resid) {
      // resid must equal zero: coef * inactives = cst
      arows.insert(arows.end(), resid.coef.begin(), resid.coef.end());
      arows.resize(arows.size() + static_cast<std::size_t>(nI) - resid.coef.size(), 0);
      rrows.insert(rrows.end(), resid.cst.begin(), resid.cst.end());
    };
    for (const auto& bq : batches) {
      for (int c = 0; c < bq.coeff.cols(); ++c) {
        detail::Expr resid;
        resid.cst.resize(static_cast<std::size_t>(T));
        for (int t = 0; t < T; ++t) resid.cst[static_cast<std::size_t>(t)] = bq.y.at(t, c);
        for (std::size_t r = 0; r < bq.idx.size(); ++r)
          resid.axpy(ctx, bq.coeff.at(static_cast<int>(r), c), *st.val[static_cast<std::size_t>(bq.idx[r])]);
        add_eq(resid);
      }
    }
    for (int c = 0; c < n_lcn; ++c) {
      detail::Expr resid;
      resid.cst.assign(static_cast<std::size_t>(T), 0);
      for (auto& [v, s] : lcn[static_cast<std::size_t>(c)]) resid.axpy(ctx, s, *st.val[static_cast<std::size_t>(v)]);
      add_eq(resid);
    }
    const int n_eq = static_cast<int>(arows.size()) / nI;
    GfMatrix a(n_eq, nI), rhs(n_eq, T);
    std::copy(arows.begin(), arows.end(), a.data().begin());
    std::copy(rrows.begin(), rrows.end(), rhs.data().begin());
    auto res = rref_with_pivots(ctx, std::move(a), std::move(rhs));
    if (static_cast<int>(res.pivots.size()) != nI || !res.solvable) return out;  // rank deficient
    inact_val.assign(static_cast<std::size_t>(nI) * T, 0);
    for (std::size_t r = 0; r < res.pivots.size(); ++r)
      for (int t = 0; t < T; ++t)
        inact_val[static_cast<std::size_t>(res.pivots[r]) * T + t] = res.rhs.at(static_cast<int>(r), t);
  }

  for (int v = 0; v < n_vn; ++v) {
    const auto& e = *st.val[static_cast<std::size_t>(v)];
    for (int t = 0; t < T; ++t) {
      Symbol x = e.cst[static_cast<std::size_t>(t)];
      for (std::size_t l = 0; l < e.coef.size(); ++l)
        if (e.coef[l]) x ^= ctx.mul(e.coef[l], inact_val[l * static_cast<std::size_t>(T) + t]);
      out.packets.at(t, v) = x;
    }
    out.recovered[static_cast<std::size_t>(v)] = 1;
  }
  out.success = true;
  return out;
}

inline DecodeResult bp_decode(const GfContext& ctx, const std::vector<BatchEquation>& batches,
                              const std::vector<LabeledEdge>& t1, int n_vn, int T,
                              int max_rounds = 1 << 20) {
  return solve_erasures(ctx, batches, t1, n_vn, T, 0, max_rounds);
}

inline DecodeResult inactivation_decode(const GfContext& ctx,
                                        const std::vector<BatchEquation>& batches,
                                        const std::vector<LabeledEdge>& t1, int n_vn, int T,
                                        int max_inactive) {
  return solve_erasures(ctx, batches, t1, n_vn, T, max_inactive);
}

// Decoder-independent solvability oracle: full stacked system (all batch
// equation columns plus all parity checks) has rank n_vn.
inline bool ml_feasible(const GfContext& ctx, const std::vector<BatchEquation>& batches,
                        const std::vector<LabeledEdge>& t1, int n_vn) {
  int n_lcn = 0;
  for (const auto& e : t1) n_lcn = std::max(n_lcn, e.check + 1);
  int n_rows = n_lcn;
  for (const auto& b : batches) n_rows += b.coeff.cols();
  if (n_rows < n_vn) return false;
  GfMatrix a(n_rows, n_vn);
  int r = 0;
  for (const auto& b : batches)
    for (int c = 0; c < b.coeff.cols(); ++c, ++r)
      for (std::size_t k = 0; k < b.idx.size(); ++k)
        a.at(r, b.idx[k]) = b.coeff.at(static_cast<int>(k), c);
  for (const auto& e : t1) a.at(r + e.check, e.vn) ^= e.label;
  return rank(ctx, std::move(a)) == n_vn;
}

}  // namespace pbnc
