#pragma once

// Monte-Carlo frame-error-rate simulation over line networks with random
// linear recoding at every intermediate hop.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pbnc/codec.hpp"
#include "pbnc/gf_linalg.hpp"
#include "pbnc/network.hpp"
#include "pbnc/protograph.hpp"
#include "pbnc/util.hpp"

namespace pbnc {

// End-to-end transfer matrix of one batch: the first hop only erases, every
// later hop recodes with a fresh random square matrix before erasing.
inline GfMatrix realize_transfer(const GfContext& ctx, const LineNetworkSpec& net,
                                 std::mt19937_64& rng) {
  if (net.eps.empty()) throw std::invalid_argument("empty network");
  const int M = net.M;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  GfMatrix h = gf_identity(M);
  for (int c = 0; c < M; ++c)
    if (u(rng) < net.eps[0]) h.at(c, c) = 0;
  for (std::size_t i = 1; i < net.eps.size(); ++i) {
    GfMatrix t = random_matrix(ctx, M, M, rng);
    h = gf_mul(ctx, h, t);
    for (int c = 0; c < M; ++c)
      if (u(rng) < net.eps[i])
        for (int r = 0; r < M; ++r) h.at(r, c) = 0;
  }
  return h;
}

enum class DecoderKind { bp, inactivation };

struct TrialPlan {
  LineNetworkSpec net;
  const LiftedCode* code = nullptr;
  std::vector<int> n_range;
  int trials = 1000;
  DecoderKind decoder = DecoderKind::bp;
  int max_inactive = -1;      // <0: 2*sqrt(A) default; used by inactivation only
  int payload_len = 1;        // symbols per packet
  std::uint64_t seed = 1;
  int threads = 1;
  int early_stop_failures = 0;  // 0 disables early stopping
};

struct FerPoint {
  int N = 0;
  long trials = 0;
  long failures = 0;
  double fer = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 1.0;
  double ml_bound = 0.0;
};

inline std::vector<double> ml_bound_curve(const LineNetworkSpec& net, int A,
                                          const std::vector<int>& n_range) {
  const auto h = line_network_dist(net);
  std::vector<double> out;
  out.reserve(n_range.size());
  for (int n : n_range) out.push_back(ml_lower_bound(h, n, A));
  return out;
}

namespace detail {

// One simulated transmission: fresh generators and transfer matrices, decode
// with the first n batches, fail iff some input packet stays unrecovered.
inline bool fer_trial(const GfContext& ctx, const TrialPlan& plan, const PrecodeEncoder& enc,
                      int n, std::uint64_t trial_seed) {
  const LiftedCode& code = *plan.code;
  std::mt19937_64 rng(trial_seed);
  const int T = plan.payload_len;
  const int M = code.batch_size;

  PacketBlock inputs(T, enc.input_count());
  std::uniform_int_distribution<int> sym(0, ctx.q() - 1);
  for (auto& s : inputs.data) s = static_cast<Symbol>(sym(rng));
  const PacketBlock v = enc.encode(inputs);

  std::vector<std::vector<int>> rows(code.t2_rows.begin(),
                                     code.t2_rows.begin() + std::min<std::size_t>(
                                                                static_cast<std::size_t>(n), code.t2_rows.size()));
  const auto encoded = outer_encode(ctx, rows, v, M, rng);

  std::vector<BatchEquation> batches;
  batches.reserve(encoded.size());
  for (const auto& eb : encoded) {
    const GfMatrix h = realize_transfer(ctx, plan.net, rng);
    BatchEquation bq;
    bq.idx = eb.idx;
    bq.coeff = gf_mul(ctx, eb.gen, h);
    bq.y = gf_mul(ctx, eb.x, h);
    batches.push_back(std::move(bq));
  }

  DecodeResult dec;
  if (plan.decoder == DecoderKind::bp) {
    dec = bp_decode(ctx, batches, code.t1, code.n_vn, T);
  } else {
    int cap = plan.max_inactive;
    if (cap < 0) cap = static_cast<int>(2.0 * std::sqrt(static_cast<double>(enc.input_count())));
    dec = inactivation_decode(ctx, batches, code.t1, code.n_vn, T, cap);
  }
  for (int p : enc.data_positions())
    if (!dec.recovered[static_cast<std::size_t>(p)]) return true;  // frame failure
  return false;
}

}  // namespace detail

inline std::vector<FerPoint> run_fer(const TrialPlan& plan) {
  const GfContext ctx(plan.code->spec);
  const PrecodeEncoder enc(ctx, plan.code->t1, plan.code->n_vn, plan.code->n_lcn);
  const auto bounds = ml_bound_curve(plan.net, enc.input_count(), plan.n_range);

  std::vector<FerPoint> out;
  for (std::size_t pi = 0; pi < plan.n_range.size(); ++pi) {
    const int n = plan.n_range[pi];
    FerPoint pt;
    pt.N = n;
    pt.ml_bound = bounds[pi];
    long done = 0;
    long failures = 0;
    const int block = std::max(plan.threads, 1) * 32;
    while (done < plan.trials) {
      const long take = std::min<long>(block, plan.trials - done);
      std::vector<char> fail(static_cast<std::size_t>(take), 0);
      parallel_for(static_cast<std::size_t>(take),
                   [&](std::size_t k) {
                     const std::uint64_t s = derive_seed(
                         plan.seed, static_cast<std::uint64_t>(n),
                         static_cast<std::uint64_t>(done + static_cast<long>(k)));
                     fail[k] = detail::fer_trial(ctx, plan, enc, n, s) ? 1 : 0;
                   },
                   plan.threads);
      for (char f : fail) failures += f;
      done += take;
      if (plan.early_stop_failures > 0 && failures >= plan.early_stop_failures) break;
    }
    pt.trials = done;
    pt.failures = failures;
    pt.fer = done > 0 ? static_cast<double>(failures) / static_cast<double>(done) : 0.0;
    const auto w = wilson95(failures, done);
    pt.wilson_lo = w.lo;
    pt.wilson_hi = w.hi;
    out.push_back(pt);
  }
  return out;
}

}  // namespace pbnc
