#pragma once

// Protograph density evolution for batched codes over erasure networks and
// the decoding-threshold searches built on top of it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pbnc/gf_linalg.hpp"
#include "pbnc/network.hpp"
#include "pbnc/protograph.hpp"
#include "pbnc/util.hpp"

namespace pbnc {

enum class OmegaMode { exact, binomial };
enum class BcnForm { direct, beta };

struct DEConfig {
  int l_max = 1000;
  double z_target = 1e-6;
  double stall_eps = 1e-10;
  OmegaMode omega_mode = OmegaMode::binomial;
  BcnForm bcn_form = BcnForm::beta;
};

struct DEState {
  // x, y indexed [check][vn] over the combined check set (local then batch);
  // entries on absent edges (b=0) stay pinned at 1.
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> y;
  std::vector<double> z;
};

struct DEResult {
  std::vector<double> z;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

// Pascal-triangle table of C(n,k) in doubles, grown on demand.
class BinomTable {
 public:
  double operator()(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    grow(n);
    return rows_[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
  }

 private:
  void grow(int n) {
    while (static_cast<int>(rows_.size()) <= n) {
      const std::size_t r = rows_.size();
      std::vector<double> row(r + 1, 1.0);
      for (std::size_t k = 1; k < r; ++k)
        row[k] = rows_[r - 1][k - 1] + rows_[r - 1][k];
      rows_.push_back(std::move(row));
    }
  }
  std::vector<std::vector<double>> rows_{{1.0}};
};

inline BinomTable& binom_table() {
  thread_local BinomTable t;
  return t;
}

// pmf of Binomial(n, p) as a length-(n+1) vector.
inline std::vector<double> binom_row(int n, double p) {
  auto& C = binom_table();
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  for (int s = 0; s <= n; ++s)
    pmf[static_cast<std::size_t>(s)] =
        C(n, s) * std::pow(p, s) * std::pow(1.0 - p, n - s);
  return pmf;
}

}  // namespace detail

// Local-check update: output erased unless all other inputs are known.
inline double lcn_update(const IntMatrix& b1, const std::vector<std::vector<double>>& x,
                         int i, int j) {
  double prod = 1.0;
  const auto& row = b1[static_cast<std::size_t>(i)];
  for (std::size_t jp = 0; jp < row.size(); ++jp) {
    int e = row[jp];
    if (static_cast<int>(jp) == j) --e;
    for (int t = 0; t < e; ++t) prod *= 1.0 - x[static_cast<std::size_t>(i)][jp];
  }
  return 1.0 - prod;
}

// Distribution of the number of erased messages among the d-1 inputs of a
// batch check, with edge (i,j) excluded once. Exact multi-binomial by
// polynomial convolution.
inline std::vector<double> omega_exact_row(const std::vector<int>& brow,
                                           const std::vector<double>& xrow, int j) {
  int d = 0;
  for (int e : brow) d += e;
  std::vector<double> dist(1, 1.0);
  dist.reserve(static_cast<std::size_t>(d));
  for (std::size_t jp = 0; jp < brow.size(); ++jp) {
    int e = brow[jp];
    if (static_cast<int>(jp) == j) --e;
    const double p = xrow[jp];
    for (int t = 0; t < e; ++t) {
      std::vector<double> next(dist.size() + 1, 0.0);
      for (std::size_t s = 0; s < dist.size(); ++s) {
        next[s] += dist[s] * (1.0 - p);
        next[s + 1] += dist[s] * p;
      }
      dist = std::move(next);
    }
  }
  dist.resize(static_cast<std::size_t>(std::max(d, 1)), 0.0);
  return dist;
}

inline double omega_exact(const std::vector<int>& brow, const std::vector<double>& xrow,
                          int j, int s) {
  const auto dist = omega_exact_row(brow, xrow, j);
  if (s < 0 || s >= static_cast<int>(dist.size())) return 0.0;
  return dist[static_cast<std::size_t>(s)];
}

// Edge-weighted mean erasure probability seen by edge (i,j); the degree-1
// convention returns 1 so that the lone message counts as unknown a priori.
inline double omega_mean(const std::vector<int>& brow, const std::vector<double>& xrow,
                         int j) {
  int d = 0;
  double sum = 0.0;
  for (std::size_t jp = 0; jp < brow.size(); ++jp) {
    d += brow[jp];
    sum += brow[jp] * xrow[jp];
  }
  if (d <= 1) return 1.0;
  double xb = (sum - xrow[static_cast<std::size_t>(j)]) / (d - 1);
  return std::clamp(xb, 0.0, 1.0);
}

inline double omega_binomial(const std::vector<int>& brow,
                             const std::vector<double>& xrow, int j, int s) {
  int d = 0;
  for (int e : brow) d += e;
  if (d <= 1) return s == 0 ? 1.0 : 0.0;
  const double xb = omega_mean(brow, xrow, j);
  return detail::binom_table()(d - 1, s) * std::pow(xb, s) *
         std::pow(1.0 - xb, d - 1 - s);
}

// I_x(d-r, r): upper tail of Binomial(d-1, x) from s = d-r.
inline double reg_inc_beta(double x, int d, int r) {
  if (r >= d) return 1.0;
  auto& C = detail::binom_table();
  double acc = 0.0;
  for (int s = d - r; s <= d - 1; ++s)
    acc += C(d - 1, s) * std::pow(x, s) * std::pow(1.0 - x, d - 1 - s);
  return std::min(acc, 1.0);
}

namespace detail {

// w_r = sum_{k>=r} (zeta_r^k / q^{k-r}) h_k; the per-rank weights of the
// beta-function form of the batch-check update.
inline std::vector<double> rank_weights(const RankDistribution& h, FieldSpec spec) {
  const int M = h.M;
  std::vector<double> w(static_cast<std::size_t>(M) + 1, 0.0);
  const double q = static_cast<double>(spec.q());
  for (int r = 1; r <= M; ++r) {
    double acc = 0.0;
    double qpow = 1.0;
    for (int k = r; k <= M; ++k) {
      acc += zeta(r, k, spec) / qpow * h.h[static_cast<std::size_t>(k)];
      qpow *= q;
    }
    w[static_cast<std::size_t>(r)] = acc;
  }
  return w;
}

// Core batch-check recovery mass given the erased-count distribution:
// sum_r h_r sum_{s<=min(d-1,r-1)} Omega(s) zeta_{s+1}^r.
inline double bcn_mass_direct(const std::vector<double>& omega,
                              const RankDistribution& h, FieldSpec spec) {
  const int d = static_cast<int>(omega.size());
  double mass = 0.0;
  for (int r = 1; r <= h.M; ++r) {
    if (h.h[static_cast<std::size_t>(r)] == 0.0) continue;
    double inner = 0.0;
    const int smax = std::min(d - 1, r - 1);
    for (int s = 0; s <= smax; ++s)
      inner += omega[static_cast<std::size_t>(s)] * zeta(s + 1, r, spec);
    mass += h.h[static_cast<std::size_t>(r)] * inner;
  }
  return mass;
}

// Equivalent recovery mass in beta form (valid for the binomial Omega):
// sum_r I_{1-xbar}(d-r, r) w_r.
inline double bcn_mass_beta(double xbar, int d, const std::vector<double>& w) {
  const int M = static_cast<int>(w.size()) - 1;
  // Suffix sums of Binomial(d-1, 1-xbar) give the regularized beta values.
  const auto pmf = binom_row(d - 1, 1.0 - xbar);
  double mass = 0.0;
  // suffix[s] = sum_{t>=s} pmf[t]
  std::vector<double> suffix(pmf.size() + 1, 0.0);
  for (int s = static_cast<int>(pmf.size()) - 1; s >= 0; --s)
    suffix[static_cast<std::size_t>(s)] =
        suffix[static_cast<std::size_t>(s) + 1] + pmf[static_cast<std::size_t>(s)];
  for (int r = 1; r <= M; ++r) {
    const double I = r >= d ? 1.0 : std::min(suffix[static_cast<std::size_t>(d - r)], 1.0);
    mass += I * w[static_cast<std::size_t>(r)];
  }
  return mass;
}

}  // namespace detail

// Check-to-variable update on a batch check: delta' is the chance the whole
// batch type instance was punctured away.
inline double bcn_update(const IntMatrix& b2, const PuncturingVector& punct,
                         const RankDistribution& h, FieldSpec spec, int i2, int j,
                         const std::vector<std::vector<double>>& x2,
                         const DEConfig& cfg) {
  const auto& brow = b2[static_cast<std::size_t>(i2)];
  const auto& xrow = x2[static_cast<std::size_t>(i2)];
  const double dp = punct.delta[static_cast<std::size_t>(i2)];
  if (dp >= 1.0) return 1.0;
  double mass;
  if (cfg.bcn_form == BcnForm::beta && cfg.omega_mode == OmegaMode::binomial) {
    int d = 0;
    for (int e : brow) d += e;
    const double xbar = omega_mean(brow, xrow, j);
    mass = detail::bcn_mass_beta(xbar, d, detail::rank_weights(h, spec));
  } else {
    std::vector<double> omega;
    if (cfg.omega_mode == OmegaMode::exact) {
      omega = omega_exact_row(brow, xrow, j);
    } else {
      int d = 0;
      for (int e : brow) d += e;
      const double xbar = omega_mean(brow, xrow, j);
      omega = detail::binom_row(std::max(d - 1, 0), xbar);
    }
    mass = detail::bcn_mass_direct(omega, h, spec);
  }
  return dp + (1.0 - dp) * (1.0 - std::clamp(mass, 0.0, 1.0));
}

inline double vcn_update(const Protomatrix& proto,
                         const std::vector<std::vector<double>>& y, int i, int j) {
  double prod = 1.0;
  const int nc = proto.n_c();
  for (int ip = 0; ip < nc; ++ip) {
    int e = ip < proto.n_c1() ? proto.b1[static_cast<std::size_t>(ip)][static_cast<std::size_t>(j)]
                              : proto.b2[static_cast<std::size_t>(ip - proto.n_c1())][static_cast<std::size_t>(j)];
    if (ip == i) --e;
    for (int t = 0; t < e; ++t) prod *= y[static_cast<std::size_t>(ip)][static_cast<std::size_t>(j)];
  }
  return prod;
}

inline double app_update(const Protomatrix& proto,
                         const std::vector<std::vector<double>>& y, int j) {
  double prod = 1.0;
  const int nc = proto.n_c();
  for (int ip = 0; ip < nc; ++ip) {
    const int e = ip < proto.n_c1()
                      ? proto.b1[static_cast<std::size_t>(ip)][static_cast<std::size_t>(j)]
                      : proto.b2[static_cast<std::size_t>(ip - proto.n_c1())][static_cast<std::size_t>(j)];
    for (int t = 0; t < e; ++t) prod *= y[static_cast<std::size_t>(ip)][static_cast<std::size_t>(j)];
  }
  return prod;
}

// Full flooding-schedule density evolution. All y's are refreshed from the
// previous x's, then all x's from the new y's.
inline DEResult run_de(const Protomatrix& proto, const PuncturingVector& punct,
                       const RankDistribution& h, FieldSpec spec,
                       const DEConfig& cfg) {
  const int nc1 = proto.n_c1();
  const int nc2 = proto.n_c2();
  const int nc = nc1 + nc2;
  const int nv = proto.n_v;
  const auto entry = [&](int i, int j) {
    return i < nc1 ? proto.b1[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                   : proto.b2[static_cast<std::size_t>(i - nc1)][static_cast<std::size_t>(j)];
  };

  std::vector<std::vector<double>> x(static_cast<std::size_t>(nc),
                                     std::vector<double>(static_cast<std::size_t>(nv), 1.0));
  std::vector<std::vector<double>> y = x;

  // Precompute per batch row: degree and the rank weights shared by all rows.
  const auto w = detail::rank_weights(h, spec);
  std::vector<int> d2(static_cast<std::size_t>(nc2), 0);
  for (int i = 0; i < nc2; ++i)
    for (int j = 0; j < nv; ++j) d2[static_cast<std::size_t>(i)] += proto.b2[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

  const bool fast_beta =
      cfg.bcn_form == BcnForm::beta && cfg.omega_mode == OmegaMode::binomial;

  std::vector<std::vector<double>> x2_view(static_cast<std::size_t>(nc2));
  DEResult res;
  res.z.assign(static_cast<std::size_t>(nv), 1.0);

  for (int l = 1; l <= cfg.l_max; ++l) {
    double max_change = 0.0;
    // Local checks.
    for (int i = 0; i < nc1; ++i) {
      // product over the whole row once, then divide out per edge — avoid
      // division by zero by recomputing when a factor vanishes.
      const auto& row = proto.b1[static_cast<std::size_t>(i)];
      for (int j = 0; j < nv; ++j) {
        if (row[static_cast<std::size_t>(j)] == 0) continue;
        y[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            lcn_update(proto.b1, x, i, j);
      }
    }
    // Batch checks.
    for (int i2 = 0; i2 < nc2; ++i2) {
      const int i = nc1 + i2;
      const auto& brow = proto.b2[static_cast<std::size_t>(i2)];
      const double dp = punct.delta[static_cast<std::size_t>(i2)];
      const int d = d2[static_cast<std::size_t>(i2)];
      if (fast_beta && d >= 1) {
        double S = 0.0;
        for (int j = 0; j < nv; ++j)
          S += brow[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        for (int j = 0; j < nv; ++j) {
          if (brow[static_cast<std::size_t>(j)] == 0) continue;
          double xbar =
              d <= 1 ? 1.0
                     : std::clamp((S - x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) / (d - 1), 0.0, 1.0);
          const double mass = detail::bcn_mass_beta(xbar, d, w);
          y[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
              dp >= 1.0 ? 1.0 : dp + (1.0 - dp) * (1.0 - std::clamp(mass, 0.0, 1.0));
        }
      } else {
        for (int j = 0; j < nv; ++j) {
          if (brow[static_cast<std::size_t>(j)] == 0) continue;
          std::vector<std::vector<double>> x2(static_cast<std::size_t>(nc2));
          for (int k = 0; k < nc2; ++k) x2[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(nc1 + k)];
          y[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
              bcn_update(proto.b2, punct, h, spec, i2, j, x2, cfg);
        }
      }
    }
    // Variable nodes.
    for (int j = 0; j < nv; ++j) {
      for (int i = 0; i < nc; ++i) {
        if (entry(i, j) == 0) continue;
        const double nx = vcn_update(proto, y, i, j);
        max_change = std::max(max_change,
                              std::abs(nx - x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
        x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = nx;
      }
    }
    res.iterations = l;
    if (max_change < cfg.stall_eps) break;
  }

  for (int j = 0; j < nv; ++j) res.z[static_cast<std::size_t>(j)] = app_update(proto, y, j);
  double zmax = 0.0;
  for (double zj : res.z) zmax = std::max(zmax, zj);
  res.converged = zmax < cfg.z_target;
  return res;
}

struct ThresholdResult {
  double c_star = 0.0;
  bool found = false;
  long evaluated = 0;  // number of run_de calls
};

namespace detail {

inline bool bucket_converges(const Protomatrix& proto, const PuncturingVector& punct,
                             const std::vector<FamilyEntry>& bucket, FieldSpec spec,
                             const DEConfig& cfg, int threads, long& evaluated) {
  evaluated += static_cast<long>(bucket.size());
  if (threads <= 1 || bucket.size() < 8) {
    for (const auto& e : bucket)
      if (!run_de(proto, punct, e.h, spec, cfg).converged) return false;
    return true;
  }
  std::vector<char> ok(bucket.size(), 1);
  parallel_for(bucket.size(),
               [&](std::size_t k) {
                 ok[k] = run_de(proto, punct, bucket[k].h, spec, cfg).converged ? 1 : 0;
               },
               threads);
  return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
}

}  // namespace detail

// Decoding threshold over a bucketed family of rank distributions: the
// smallest capacity such that density evolution succeeds for every member at
// that capacity or above. Bisection over bucket keys plus a full verification
// sweep of everything above the candidate.
inline ThresholdResult threshold(const Protomatrix& proto, const PuncturingVector& punct,
                                 const DistFamily& family, const DEConfig& cfg,
                                 int threads = 1) {
  ThresholdResult out;
  if (family.buckets.empty()) return out;
  std::vector<int> keys;
  keys.reserve(family.buckets.size());
  for (const auto& [k, v] : family.buckets) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  const int n = static_cast<int>(keys.size());

  std::vector<signed char> ok(static_cast<std::size_t>(n), -1);  // -1 unknown
  const auto check = [&](int idx) {
    auto& o = ok[static_cast<std::size_t>(idx)];
    if (o < 0)
      o = detail::bucket_converges(proto, punct, family.buckets.at(keys[static_cast<std::size_t>(idx)]),
                                   family.spec, cfg, threads, out.evaluated)
              ? 1
              : 0;
    return o == 1;
  };

  // Bisect for the smallest converging bucket.
  int lo = 0, hi = n - 1, cand = -1;
  while (lo <= hi) {
    const int mid = lo + (hi - lo) / 2;
    if (check(mid)) {
      cand = mid;
      hi = mid - 1;
    } else {
      lo = mid + 1;
    }
  }
  if (cand < 0) return out;

  // Sweep from the top down to the candidate; the answer sits just above the
  // highest failing bucket.
  int answer = cand;
  for (int idx = n - 1; idx >= cand; --idx) {
    if (!check(idx)) {
      if (idx == n - 1) return out;  // even the best bucket fails
      answer = idx + 1;
      break;
    }
  }

  double cmin = std::numeric_limits<double>::infinity();
  for (int idx = answer; idx < n; ++idx)
    for (const auto& e : family.buckets.at(keys[static_cast<std::size_t>(idx)]))
      cmin = std::min(cmin, e.cap);
  out.c_star = cmin;
  out.found = true;
  return out;
}

struct HomogeneousResult {
  double eps_star = 0.0;
  double c_star = 0.0;
  bool found = false;
};

// Largest single erasure probability (applied on every hop of a line network)
// for which density evolution still succeeds, found by bisection.
inline HomogeneousResult threshold_homogeneous(const Protomatrix& proto,
                                               const PuncturingVector& punct,
                                               int hops, int M, FieldSpec spec,
                                               const DEConfig& cfg,
                                               double resolution = 1e-4) {
  const auto trial = [&](double eps) {
    const LineNetworkSpec net{std::vector<double>(static_cast<std::size_t>(hops), eps), M, spec};
    const auto h = line_network_dist(net);
    return run_de(proto, punct, h, spec, cfg).converged;
  };
  HomogeneousResult out;
  if (!trial(0.0)) return out;
  double lo = 0.0, hi = 1.0;
  if (trial(1.0 - resolution)) {
    lo = 1.0 - resolution;
  } else {
    hi = 1.0 - resolution;
    while (hi - lo > resolution) {
      const double mid = 0.5 * (lo + hi);
      if (trial(mid))
        lo = mid;
      else
        hi = mid;
    }
  }
  out.eps_star = lo;
  const LineNetworkSpec net{std::vector<double>(static_cast<std::size_t>(hops), lo), M, spec};
  out.c_star = capacity(line_network_dist(net));
  out.found = true;
  return out;
}

}  // namespace pbnc
