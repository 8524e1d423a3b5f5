#include <doctest.h>

#include <random>

#include "pbnc/network.hpp"
#include "pbnc/sim.hpp"

using namespace pbnc;

namespace {

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

std::vector<double> mc_rank_hist(const LineNetworkSpec& net, int trials,
                                 std::mt19937_64& rng) {
  const GfContext ctx(net.spec);
  std::vector<double> hist(static_cast<std::size_t>(net.M) + 1, 0.0);
  for (int t = 0; t < trials; ++t)
    hist[static_cast<std::size_t>(rank(ctx, realize_transfer(ctx, net, rng)))] += 1.0;
  for (auto& v : hist) v /= trials;
  return hist;
}

}  // namespace

TEST_CASE("analytic rank distribution matches Monte Carlo") {
  std::mt19937_64 rng(101);
  const struct { std::vector<double> eps; int M; int m; } cases[] = {
      {{0.2}, 8, 4},
      {{0.1, 0.3}, 8, 8},
      {{0.25, 0.25, 0.25}, 8, 8},
      {{0.4, 0.1}, 16, 4},
  };
  for (const auto& c : cases) {
    LineNetworkSpec net{c.eps, c.M, FieldSpec{c.m}};
    const auto h = line_network_dist(net);
    const auto mc = mc_rank_hist(net, 20000, rng);
    CHECK(tv_distance(h.h, mc) < 0.015);
  }
}

TEST_CASE("rank distribution basics") {
  LineNetworkSpec net{{0.0}, 8, FieldSpec{8}};
  const auto h = line_network_dist(net);
  CHECK(h.h.back() == doctest::Approx(1.0));  // lossless single hop keeps full rank
  CHECK(capacity(h) == doctest::Approx(8.0));

  LineNetworkSpec dead{{1.0}, 8, FieldSpec{8}};
  CHECK(capacity(line_network_dist(dead)) == doctest::Approx(0.0));
}

TEST_CASE("probabilities sum to one and capacity decreases with loss") {
  double prev_cap = 9.0;
  for (double eps : {0.0, 0.1, 0.2, 0.5, 0.9}) {
    LineNetworkSpec net{{eps, eps}, 8, FieldSpec{8}};
    const auto h = line_network_dist(net);
    double s = 0;
    for (double v : h.h) s += v;
    CHECK(s == doctest::Approx(1.0));
    const double cap = capacity(h);
    CHECK(cap < prev_cap);
    prev_cap = cap;
  }
}

TEST_CASE("worse channels are dominated") {
  LineNetworkSpec good{{0.1, 0.1}, 8, FieldSpec{8}};
  LineNetworkSpec bad{{0.3, 0.1}, 8, FieldSpec{8}};
  const auto hg = line_network_dist(good);
  const auto hb = line_network_dist(bad);
  // dominates(a, b) reads "a is tail-wise below b", i.e. a is the worse channel
  CHECK(dominates(hb, hg));
  CHECK_FALSE(dominates(hg, hb));
  CHECK(dominates(hg, hg));
}

TEST_CASE("ML lower bound matches Monte-Carlo rank-sum tail") {
  std::mt19937_64 rng(55);
  LineNetworkSpec net{{0.2, 0.2}, 8, FieldSpec{8}};
  const auto h = line_network_dist(net);
  std::discrete_distribution<int> draw(h.h.begin(), h.h.end());
  for (int N : {8, 12, 16}) {
    const int A = 60;
    const int trials = 100000;
    int below = 0;
    for (int t = 0; t < trials; ++t) {
      int s = 0;
      for (int i = 0; i < N; ++i) s += draw(rng);
      if (s < A) ++below;
    }
    const double p = ml_lower_bound(h, N, A);
    const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / trials);
    CHECK(std::abs(static_cast<double>(below) / trials - p) < 4 * sigma + 1e-4);
  }
}

TEST_CASE("family enumeration respects grid and buckets") {
  const double d1 = 0.1, d2 = 0.05;
  const auto fam = enumerate_family(2, 8, FieldSpec{8}, d1, d2, false);
  CHECK(fam.total_size() > 0);
  for (const auto& [key, entries] : fam.buckets) {
    for (const auto& e : entries) {
      CHECK(fam.bucket_key(e.cap) == key);
      CHECK(std::abs(e.cap - capacity(e.h)) < 1e-12);
      for (double eps : e.eps) {
        // every probability sits on the delta1 grid
        const double steps = eps / d1;
        CHECK(std::abs(steps - std::round(steps)) < 1e-9);
      }
    }
  }
}

TEST_CASE("bucket key halves ties downward") {
  DistFamily fam;
  fam.delta2 = 0.05;
  CHECK(fam.bucket_key(0.1) == 2);
  CHECK(fam.bucket_key(0.12) == 2);
  CHECK(fam.bucket_key(0.125) == 2);  // exact edge stays in the lower bucket
  CHECK(fam.bucket_key(0.1251) == 3);
}
