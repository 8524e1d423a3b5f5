#pragma once

// Rank-distribution algebra for batched network codes over erasure networks:
// analytic distributions for line networks with RLNC recoding, capacity,
// dominance ordering, capacity-bucketed families, and the ML lower bound.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pbnc/gf_linalg.hpp"
#include "pbnc/util.hpp"

namespace pbnc {

struct RankDistribution {
  int M = 0;
  std::vector<double> h;  // h[0..M]

  [[nodiscard]] bool valid(double tol = 1e-9) const {
    if (static_cast<int>(h.size()) != M + 1) return false;
    double s = 0.0;
    for (double v : h) {
      if (v < -tol || v > 1.0 + tol) return false;
      s += v;
    }
    return std::abs(s - 1.0) <= tol;
  }
};

struct LineNetworkSpec {
  std::vector<double> eps;  // per-hop erasure probabilities
  int M = 8;
  FieldSpec spec{8};
  [[nodiscard]] int hops() const { return static_cast<int>(eps.size()); }
};

inline double binom_pmf(int n, int k, double p) {
  if (k < 0 || k > n) return 0.0;
  double c = 1.0;
  for (int i = 0; i < k; ++i) c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
  return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

inline RankDistribution single_hop_dist(double eps, int M) {
  RankDistribution d{M, std::vector<double>(M + 1, 0.0)};
  for (int r = 0; r <= M; ++r) d.h[r] = binom_pmf(M, r, 1.0 - eps);
  return d;
}

// One recoding hop of the line-network recursion:
//   h_r = sum_{s>=r} sum_{j>=r} h_s C(M,j)(1-eps)^j eps^(M-j)
//         * zeta_r^s zeta_r^j / (zeta_r^r q^{(s-r)(j-r)}).
inline RankDistribution line_step(const RankDistribution& prev, double eps_i, int M,
                                  FieldSpec spec) {
  RankDistribution out{M, std::vector<double>(M + 1, 0.0)};
  std::vector<double> ek(M + 1);
  for (int j = 0; j <= M; ++j) ek[j] = binom_pmf(M, j, 1.0 - eps_i);
  const double q = static_cast<double>(spec.q());
  // zeta table and powers of 1/q
  std::vector<std::vector<double>> z(M + 1, std::vector<double>(M + 1));
  for (int r = 0; r <= M; ++r)
    for (int m = 0; m <= M; ++m) z[r][m] = zeta(r, m, spec);
  std::vector<double> qinv(M * M + 1);
  qinv[0] = 1.0;
  for (std::size_t i = 1; i < qinv.size(); ++i) qinv[i] = qinv[i - 1] / q;
  double total = 0.0;
  for (int r = 0; r <= M; ++r) {
    double acc = 0.0;
    for (int s = r; s <= M; ++s) {
      if (prev.h[s] == 0.0) continue;
      double inner = 0.0;
      for (int j = r; j <= M; ++j)
        inner += ek[j] * z[r][j] * qinv[(s - r) * (j - r)];
      acc += prev.h[s] * z[r][s] * inner;
    }
    out.h[r] = acc / z[r][r];
    total += out.h[r];
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::runtime_error("line_step lost probability mass");
  for (double& v : out.h) v /= total;
  return out;
}

inline RankDistribution line_network_dist(const LineNetworkSpec& net) {
  if (net.hops() < 1) throw std::invalid_argument("line network needs at least one hop");
  RankDistribution d = single_hop_dist(net.eps[0], net.M);
  for (int i = 1; i < net.hops(); ++i) d = line_step(d, net.eps[i], net.M, net.spec);
  return d;
}

inline double capacity(const RankDistribution& d) {
  double c = 0.0;
  for (int r = 1; r <= d.M; ++r) c += r * d.h[r];
  return c;
}

// h_a "worse than" h_b: every tail of h_a is dominated (h_a <= h_b tail-wise).
inline bool dominates(const RankDistribution& a, const RankDistribution& b) {
  if (a.M != b.M) throw std::invalid_argument("mismatched batch sizes");
  double ta = 0.0, tb = 0.0;
  for (int k = a.M; k >= 0; --k) {
    ta += a.h[k];
    tb += b.h[k];
    if (ta > tb + 1e-12) return false;
  }
  return true;
}

// Pr{sum of N i.i.d. ranks < A} by N-fold convolution; support is truncated
// at A (everything >= A is lumped) so large N stays cheap.
inline double ml_lower_bound(const RankDistribution& h, int N, int A) {
  if (A <= 0) return 0.0;
  if (N < 1) throw std::invalid_argument("need at least one batch");
  if (static_cast<long long>(N) * h.M < A) return 1.0;
  std::vector<double> pmf(A, 0.0);  // pmf[s] = Pr{sum == s}, s < A
  double lump = 0.0;                // Pr{sum >= A}
  pmf[0] = 1.0;
  for (int i = 0; i < N; ++i) {
    std::vector<double> next(A, 0.0);
    double next_lump = lump;  // once >= A, stays >= A
    for (int s = A - 1; s >= 0; --s) {
      const double p = pmf[s];
      if (p == 0.0) continue;
      for (int r = 0; r <= h.M; ++r) {
        const double w = p * h.h[r];
        if (s + r < A)
          next[s + r] += w;
        else
          next_lump += w;
      }
    }
    pmf.swap(next);
    lump = next_lump;
  }
  double below = 0.0, comp = 0.0;  // Kahan
  for (double v : pmf) {
    double y = v - comp;
    double t = below + y;
    comp = (t - below) - y;
    below = t;
  }
  return below;
}

struct FamilyEntry {
  RankDistribution h;
  std::vector<double> eps;  // representative erasure vector
  double cap = 0.0;
};

// Rank distributions enumerated on an erasure-probability grid and bucketed
// by capacity. Bucket key k covers capacities round(c / delta2) == k, round
// to nearest with exact edges going down.
struct DistFamily {
  int M = 0;
  FieldSpec spec{8};
  int hops = 0;
  double delta1 = 0.01;
  double delta2 = 0.08;
  std::map<int, std::vector<FamilyEntry>> buckets;

  [[nodiscard]] int bucket_key(double cap) const {
    const double t = cap / delta2 + 0.5;
    int k = static_cast<int>(std::floor(t));
    // a capacity landing exactly on a bucket edge goes to the lower bucket
    if (t == std::floor(t) && k > 0) --k;
    return k;
  }

  [[nodiscard]] std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& [k, v] : buckets) n += v.size();
    return n;
  }
};

namespace detail {
inline std::string dist_key(const RankDistribution& d) {
  std::string key;
  key.reserve((d.M + 1) * sizeof(double));
  for (double v : d.h) {
    // quantize to kill grid-symmetry duplicates that differ only in rounding
    const double r = std::round(v * 1e12);
    key.append(reinterpret_cast<const char*>(&r), sizeof(double));
  }
  return key;
}
}  // namespace detail

// Enumerate all grid erasure vectors of a line network (or the homogeneous
// diagonal only) and bucket the resulting rank distributions by capacity.
// Identical distributions are stored once.
inline DistFamily enumerate_family(int hops, int M, FieldSpec spec, double delta1,
                                   double delta2, bool homogeneous = false,
                                   std::size_t grid_guard = 10'000'000) {
  if (delta1 <= 0.0 || delta2 <= 0.0) throw std::invalid_argument("grid steps must be positive");
  if (hops < 1) throw std::invalid_argument("need at least one hop");
  const int steps = static_cast<int>(std::floor(1.0 / delta1)) + 1;
  double points = homogeneous ? steps : std::pow(static_cast<double>(steps), hops);
  if (points > static_cast<double>(grid_guard))
    throw std::runtime_error("erasure-probability grid too large");

  DistFamily fam;
  fam.M = M;
  fam.spec = spec;
  fam.hops = hops;
  fam.delta1 = delta1;
  fam.delta2 = delta2;

  std::unordered_map<std::string, bool> seen;
  auto emit = [&](const RankDistribution& d, const std::vector<double>& eps) {
    auto [it, inserted] = seen.emplace(detail::dist_key(d), true);
    if (!inserted) return;
    FamilyEntry e{d, eps, capacity(d)};
    fam.buckets[fam.bucket_key(e.cap)].push_back(std::move(e));
  };

  std::vector<double> grid(steps);
  for (int i = 0; i < steps; ++i) grid[i] = std::min(1.0, i * delta1);

  if (homogeneous) {
    for (double e : grid) {
      LineNetworkSpec net{std::vector<double>(hops, e), M, spec};
      emit(line_network_dist(net), net.eps);
    }
    return fam;
  }

  // depth-first fold so each prefix distribution is computed once
  std::vector<double> eps(hops);
  std::function<void(int, const RankDistribution&)> rec =
      [&](int depth, const RankDistribution& cur) {
        if (depth == hops) {
          emit(cur, eps);
          return;
        }
        for (double e : grid) {
          eps[depth] = e;
          rec(depth + 1, depth == 0 ? single_hop_dist(e, M)
                                    : line_step(cur, e, M, spec));
        }
      };
  rec(0, RankDistribution{});
  return fam;
}

}  // namespace pbnc
