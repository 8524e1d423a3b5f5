#pragma once

// Randomized protograph search: alternating core optimization, row-by-row
// extension optimization, and lifting with a decodability retry loop.

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbnc/gf_linalg.hpp"
#include "pbnc/protograph.hpp"

namespace pbnc {

struct OptConfig {
  int i_star = 100;
  int ir_star = 1000;
  int ic_star = 1000;
  int ip_star = 1000;
  int ir_star_ext = 10000;
  int b_max = 3;
  int b_max_prime = 3;
  int batch_size = 16;  // BP-start guard for the column phase
  std::vector<int> d_init;
  std::vector<double> delta_init;
  std::uint64_t seed = 1;
};

// Random m x n matrix with entries in {0..s} and exact row degrees d. Degree
// mass is spread by repeated uniform column increments; increments that would
// push an entry past the cap are redrawn.
inline IntMatrix rand_matrix(int m, int n, const std::vector<int>& d, int s,
                             std::mt19937_64& rng) {
  if (static_cast<int>(d.size()) != m) throw std::invalid_argument("degree vector length");
  IntMatrix b(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(n), 0));
  std::uniform_int_distribution<int> col(0, n - 1);
  for (int i = 0; i < m; ++i) {
    if (d[static_cast<std::size_t>(i)] < 0 || d[static_cast<std::size_t>(i)] > n * s)
      throw std::invalid_argument("infeasible row degree");
    int left = d[static_cast<std::size_t>(i)];
    while (left > 0) {
      const int j = col(rng);
      if (b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] >= s) continue;
      ++b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      --left;
    }
  }
  return b;
}

// Random row with entries in {0..s} and total weight at most D (the weight
// itself is drawn uniformly from {1..min(D, n*s)} when that set is nonempty).
inline std::vector<int> rand_row(int n, int s, int D, std::mt19937_64& rng) {
  const int cap = std::min(D, n * s);
  int deg = 0;
  if (cap >= 1) deg = std::uniform_int_distribution<int>(1, cap)(rng);
  return rand_matrix(1, n, {deg}, s, rng)[0];
}

// Random puncturing vector with the same total mass as the reference,
// produced by pairwise mass transfers; every entry stays in [0,1).
inline PuncturingVector rand_punc_vec(const PuncturingVector& ref, std::mt19937_64& rng) {
  const int n = static_cast<int>(ref.delta.size());
  if (n == 0) return ref;
  if (ref.sum() >= static_cast<double>(n))
    throw std::invalid_argument("puncture mass not representable with entries < 1");
  if (n == 1) return ref;
  constexpr double kCeil = 1.0 - 1e-9;
  PuncturingVector out = ref;
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int transfers = 4 * n;
  for (int t = 0; t < transfers; ++t) {
    int i = pick(rng), j = pick(rng);
    if (i == j) continue;
    const double room = kCeil - out.delta[static_cast<std::size_t>(j)];
    const double amt = u(rng) * std::min(out.delta[static_cast<std::size_t>(i)], std::max(room, 0.0));
    out.delta[static_cast<std::size_t>(i)] -= amt;
    out.delta[static_cast<std::size_t>(j)] += amt;
  }
  // Pin the total back onto one entry with room; transfers only accumulate
  // rounding noise, so the correction is tiny.
  const double drift = ref.sum() - out.sum();
  for (auto& dl : out.delta) {
    if (dl + drift >= 0.0 && dl + drift < 1.0) {
      dl += drift;
      break;
    }
  }
  return out;
}

// The search only needs "threshold of [B1; candidate B2] under delta"; tests
// and the CLI supply it, so the algorithms stay independent of the DE engine.
using ThresholdFn = std::function<double(const IntMatrix& b2, const PuncturingVector& punct)>;

struct OptTraceEntry {
  std::string phase;
  int candidate = 0;
  double threshold = 0.0;
  bool accepted = false;
};

struct CoreResult {
  IntMatrix b2;
  PuncturingVector delta;
  double c_min = std::numeric_limits<double>::infinity();
  std::vector<OptTraceEntry> trace;
};

namespace detail {

inline IntMatrix transpose(const IntMatrix& a) {
  if (a.empty()) return {};
  IntMatrix t(a[0].size(), std::vector<int>(a.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
  return t;
}

inline bool has_bp_start(const IntMatrix& b2, int M) {
  for (const auto& row : b2) {
    int w = 0;
    for (int v : row) w += v;
    if (w <= M) return true;
  }
  return false;
}

}  // namespace detail

// Alternating optimization of the core batch protomatrix and its puncturing
// vector; candidates are accepted only on strict threshold improvement.
inline CoreResult optimize_core(int n_v, const OptConfig& cfg, const ThresholdFn& eval) {
  const int mc = static_cast<int>(cfg.d_init.size());
  std::mt19937_64 rng(cfg.seed);
  CoreResult res;
  res.delta.delta = cfg.delta_init;
  res.b2 = rand_matrix(mc, n_v, cfg.d_init, cfg.b_max, rng);
  res.c_min = eval(res.b2, res.delta);
  res.trace.push_back({"init", 0, res.c_min, true});

  const auto consider = [&](const char* phase, int idx, const IntMatrix& b2,
                            const PuncturingVector& punct) {
    const double c = eval(b2, punct);
    const bool accept = c < res.c_min - 1e-9;
    res.trace.push_back({phase, idx, c, accept});
    if (accept) {
      res.b2 = b2;
      res.delta = punct;
      res.c_min = c;
    }
  };

  for (int i = 0; i < cfg.i_star; ++i) {
    std::vector<int> d(static_cast<std::size_t>(mc), 0);
    for (int r = 0; r < mc; ++r)
      for (int v : res.b2[static_cast<std::size_t>(r)]) d[static_cast<std::size_t>(r)] += v;
    for (int ir = 0; ir < cfg.ir_star; ++ir)
      consider("row", ir, rand_matrix(mc, n_v, d, cfg.b_max, rng), res.delta);

    std::vector<int> dc(static_cast<std::size_t>(n_v), 0);
    for (int r = 0; r < mc; ++r)
      for (int j = 0; j < n_v; ++j) dc[static_cast<std::size_t>(j)] += res.b2[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)];
    for (int ic = 0; ic < cfg.ic_star; ++ic) {
      const auto cand = detail::transpose(rand_matrix(n_v, mc, dc, cfg.b_max, rng));
      if (!detail::has_bp_start(cand, cfg.batch_size)) continue;
      consider("col", ic, cand, res.delta);
    }

    for (int ip = 0; ip < cfg.ip_star; ++ip)
      consider("punct", ip, res.b2, rand_punc_vec(res.delta, rng));
  }
  return res;
}

struct ExtensionResult {
  IntMatrix b2_ext;
  std::vector<double> row_thresholds;  // incumbent after finishing each row
  std::vector<OptTraceEntry> trace;
};

// Row-by-row extension search: each appended row is the best of ir_star_ext
// random candidates with weight at most the batch size.
inline ExtensionResult optimize_extension(int n_v, int m_ext, const OptConfig& cfg,
                                          const ThresholdFn& eval_with_ext) {
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  ExtensionResult res;
  double c_min = std::numeric_limits<double>::infinity();
  for (int s = 0; s < m_ext; ++s) {
    IntMatrix best;
    double stage_best = std::numeric_limits<double>::infinity();
    bool improved = false;
    for (int ir = 0; ir < cfg.ir_star_ext; ++ir) {
      IntMatrix cand = res.b2_ext;
      cand.push_back(rand_row(n_v, cfg.b_max_prime, cfg.batch_size, rng));
      PuncturingVector unused;  // eval closes over the full fixed delta
      const double c = eval_with_ext(cand, unused);
      const bool accept = c < c_min - 1e-9;
      res.trace.push_back({"ext" + std::to_string(s), ir, c, accept});
      if (accept) {
        best = cand;
        c_min = c;
        improved = true;
      } else if (!improved && c < stage_best) {
        // fallback if nothing beats the previous stage: keep the best row
        // seen here so the matrix still grows by one row
        stage_best = c;
        best = cand;
      }
    }
    if (!improved) c_min = stage_best;
    res.b2_ext = best;
    res.row_thresholds.push_back(c_min);
  }
  return res;
}

// Lift precode + core + extension; the core lift is retried until the
// highest-rate (core-only) code can bootstrap BP on the precode.
inline LiftedCode lift_with_retry(const IntMatrix& b1, const IntMatrix& b2_core,
                                  const IntMatrix& b2_ext, const PuncturingVector& punct,
                                  int z1, int z2, int batch_size, FieldSpec spec,
                                  std::mt19937_64& rng, int retry_cap = 100) {
  Protomatrix proto;
  proto.b1 = b1;
  proto.b2 = b2_core;
  for (const auto& r : b2_ext) proto.b2.push_back(r);
  proto.n_v = b1.empty() ? (b2_core.empty() ? 0 : static_cast<int>(b2_core[0].size()))
                         : static_cast<int>(b1[0].size());
  proto.validate(batch_size);
  punct.validate(proto.n_c2());
  if (z1 < proto.max_entry()) throw std::invalid_argument("Z1 smaller than max protograph entry");

  const int mc = static_cast<int>(b2_core.size());
  PuncturingVector punct_core, punct_ext;
  punct_core.delta.assign(punct.delta.begin(), punct.delta.begin() + mc);
  punct_ext.delta.assign(punct.delta.begin() + mc, punct.delta.end());

  LiftedCode code;
  code.spec = spec;
  code.batch_size = batch_size;
  code.z1 = z1;
  code.z2 = z2;
  code.n_vn = z1 * z2 * proto.n_v;
  code.n_lcn = z1 * z2 * proto.n_c1();
  code.t1 = peg_lift_precode(b1, z1, z2, spec, rng);

  std::vector<std::vector<int>> core_rows;
  std::vector<int> core_type;
  bool ok = false;
  for (int attempt = 0; attempt < retry_cap; ++attempt) {
    core_rows.clear();
    core_type.clear();
    random_lift_batches(b2_core, punct_core, z1, z2, rng, core_rows, core_type);
    if (bp_decodable(code.t1, core_rows, code.n_vn)) {
      ok = true;
      break;
    }
  }
  if (!ok) throw std::runtime_error("lifting retry cap exceeded: no decodable core puncturing found");

  std::vector<std::vector<int>> ext_rows;
  std::vector<int> ext_type;
  if (!b2_ext.empty())
    random_lift_batches(b2_ext, punct_ext, z1, z2, rng, ext_rows, ext_type);

  code.t2_rows = std::move(core_rows);
  code.t2_row_type = std::move(core_type);
  for (std::size_t k = 0; k < ext_rows.size(); ++k) {
    code.t2_rows.push_back(std::move(ext_rows[k]));
    code.t2_row_type.push_back(ext_type[k] + mc);
  }
  return code;
}

}  // namespace pbnc
