// Command-line front end: threshold analysis, protograph optimization,
// lifting, FER simulation, ML bounds, and packet encode/decode round trips.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pbnc/codec.hpp"
#include "pbnc/density_evolution.hpp"
#include "pbnc/io.hpp"
#include "pbnc/network.hpp"
#include "pbnc/optimizer.hpp"
#include "pbnc/sim.hpp"

namespace {

using namespace pbnc;

struct CommonOpts {
  std::uint64_t seed = 1;
  int threads = 1;
  double delta1 = 0.01;
  double delta2 = 0.05;
  int lmax = 1000;
  double ztarget = 1e-6;
  std::string omega = "binomial";
  std::string bcn_form = "beta";
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "master RNG seed");
  cmd->add_option("--threads", o.threads, "worker thread count");
  cmd->add_option("--delta1", o.delta1, "erasure-probability grid step");
  cmd->add_option("--delta2", o.delta2, "capacity bucket width");
  cmd->add_option("--lmax", o.lmax, "max DE iterations");
  cmd->add_option("--ztarget", o.ztarget, "DE convergence target on posteriors");
  cmd->add_option("--omega", o.omega, "erased-count model")->check(CLI::IsMember({"exact", "binomial"}));
  cmd->add_option("--bcn-form", o.bcn_form, "batch-check update form")->check(CLI::IsMember({"direct", "beta"}));
  cmd->add_option("--format", o.format, "output format")->check(CLI::IsMember({"csv", "json"}));
}

DEConfig de_config(const CommonOpts& o) {
  DEConfig cfg;
  cfg.l_max = o.lmax;
  cfg.z_target = o.ztarget;
  cfg.omega_mode = o.omega == "exact" ? OmegaMode::exact : OmegaMode::binomial;
  cfg.bcn_form = o.bcn_form == "direct" ? BcnForm::direct : BcnForm::beta;
  return cfg;
}

json resolved_config(const std::string& cmd, const CommonOpts& o) {
  return json{{"command", cmd},    {"seed", o.seed},       {"threads", o.threads},
              {"delta1", o.delta1}, {"delta2", o.delta2},  {"lmax", o.lmax},
              {"ztarget", o.ztarget}, {"omega", o.omega},  {"bcn_form", o.bcn_form},
              {"format", o.format}};
}

Protomatrix sub_proto(const CodeSpecFile& f, int rows2) {
  Protomatrix p;
  p.n_v = f.proto.n_v;
  p.b1 = f.proto.b1;
  p.b2.assign(f.proto.b2.begin(), f.proto.b2.begin() + rows2);
  return p;
}

PuncturingVector sub_delta(const CodeSpecFile& f, int rows2, double slack) {
  PuncturingVector d;
  for (int i = 0; i < rows2; ++i)
    d.delta.push_back(std::max(0.0, f.delta.delta[static_cast<std::size_t>(i)] - slack));
  return d;
}

std::vector<int> parse_n_range(const std::string& s) {
  // "a:b:step" or comma list
  std::vector<int> out;
  if (s.find(':') != std::string::npos) {
    int a = 0, b = 0, st = 1;
    if (std::sscanf(s.c_str(), "%d:%d:%d", &a, &b, &st) < 2 || st <= 0)
      throw std::invalid_argument("bad N range: " + s);
    for (int n = a; n <= b; n += st) out.push_back(n);
  } else {
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw std::invalid_argument("empty N range");
  return out;
}

int cmd_threshold(const std::string& proto_path, const CommonOpts& o, bool homogeneous,
                  int hops, bool per_row, double delta_slack) {
  const auto f = codespec_from_json(load_json_file(proto_path));
  const FieldSpec spec{f.m};
  const auto cfg = de_config(o);
  std::cerr << resolved_config("threshold", o).dump() << "\n";

  std::vector<int> row_counts;
  if (per_row && f.m_core >= 0)
    for (int r = f.m_core; r <= f.proto.n_c2(); ++r) row_counts.push_back(r);
  else
    row_counts.push_back(f.proto.n_c2());

  json rows = json::array();
  std::optional<DistFamily> fam;
  if (!homogeneous)
    fam = enumerate_family(hops, f.M, spec, o.delta1, o.delta2, false);

  if (o.format == "csv") std::cout << "rows2,eps_star,c_star,found\n";
  for (int rc : row_counts) {
    const auto p = sub_proto(f, rc);
    const auto d = sub_delta(f, rc, delta_slack);
    double eps_star = -1.0, c_star = 0.0;
    bool found = false;
    if (homogeneous) {
      const auto r = threshold_homogeneous(p, d, hops, f.M, spec, cfg);
      eps_star = r.eps_star;
      c_star = r.c_star;
      found = r.found;
    } else {
      const auto r = threshold(p, d, *fam, cfg, o.threads);
      c_star = r.c_star;
      found = r.found;
    }
    if (o.format == "csv") {
      std::cout << rc << ',' << eps_star << ',' << c_star << ',' << (found ? 1 : 0) << '\n';
    } else {
      rows.push_back({{"rows2", rc}, {"eps_star", eps_star}, {"c_star", c_star}, {"found", found}});
    }
    if (!found && row_counts.size() == 1) std::cerr << "no threshold (no bucket converges)\n";
  }
  if (o.format == "json") std::cout << json{{"rows", rows}}.dump(2) << '\n';
  return 0;
}

int cmd_optimize(const std::string& config_path, const CommonOpts& o, const std::string& out_path) {
  const json j = load_json_file(config_path);
  std::cerr << resolved_config("optimize", o).dump() << "\n";
  const int m = j.value("m", 8);
  const int M = j.at("M").get<int>();
  const auto b1 = j.at("B1").get<IntMatrix>();
  const int n_v = static_cast<int>(b1.at(0).size());
  const int hops = j.value("hops", 2);
  const bool homogeneous = j.value("homogeneous", true);
  const FieldSpec spec{m};
  const auto cfg = de_config(o);

  OptConfig oc;
  oc.i_star = j.value("i_star", 2);
  oc.ir_star = j.value("ir_star", 20);
  oc.ic_star = j.value("ic_star", 20);
  oc.ip_star = j.value("ip_star", 20);
  oc.ir_star_ext = j.value("ir_star_ext", 50);
  oc.b_max = j.value("b_max", 4);
  oc.b_max_prime = j.value("b_max_prime", 3);
  oc.batch_size = M;
  oc.d_init = j.at("d_init").get<std::vector<int>>();
  oc.delta_init = j.at("delta_init").get<std::vector<double>>();
  oc.seed = o.seed;

  std::optional<DistFamily> fam;
  if (!homogeneous) fam = enumerate_family(hops, M, spec, o.delta1, o.delta2, false);

  long n_eval = 0;
  const auto eval = [&](const IntMatrix& b2, const PuncturingVector& punct) {
    Protomatrix p;
    p.n_v = n_v;
    p.b1 = b1;
    p.b2 = b2;
    ++n_eval;
    if (homogeneous) {
      const auto r = threshold_homogeneous(p, punct, hops, M, spec, cfg, 1e-3);
      return r.found ? r.c_star : static_cast<double>(M) + 1.0;
    }
    const auto r = threshold(p, punct, *fam, cfg, o.threads);
    return r.found ? r.c_star : static_cast<double>(M) + 1.0;
  };

  auto core = optimize_core(n_v, oc, eval);
  for (const auto& t : core.trace)
    if (t.accepted)
      std::cerr << "accept " << t.phase << " #" << t.candidate << " C*=" << t.threshold << "\n";

  const int m_ext = j.value("m_ext", 0);
  ExtensionResult ext;
  std::vector<double> delta_ext = j.value("delta_ext", std::vector<double>{});
  if (m_ext > 0) {
    if (static_cast<int>(delta_ext.size()) != m_ext)
      throw std::invalid_argument("delta_ext length must equal m_ext");
    const auto eval_ext = [&](const IntMatrix& b2e, const PuncturingVector&) {
      IntMatrix b2 = core.b2;
      PuncturingVector d = core.delta;
      for (std::size_t r = 0; r < b2e.size(); ++r) {
        b2.push_back(b2e[r]);
        d.delta.push_back(delta_ext[r]);
      }
      return eval(b2, d);
    };
    ext = optimize_extension(n_v, m_ext, oc, eval_ext);
    for (std::size_t s = 0; s < ext.row_thresholds.size(); ++s)
      std::cerr << "ext row " << s + 1 << " C*=" << ext.row_thresholds[s] << "\n";
  }

  CodeSpecFile out;
  out.m = m;
  out.M = M;
  out.proto.n_v = n_v;
  out.proto.b1 = b1;
  out.proto.b2 = core.b2;
  out.delta = core.delta;
  for (int s = 0; s < m_ext; ++s) {
    out.proto.b2.push_back(ext.b2_ext[static_cast<std::size_t>(s)]);
    out.delta.delta.push_back(delta_ext[static_cast<std::size_t>(s)]);
  }
  out.m_core = static_cast<int>(core.b2.size());
  out.z1 = j.value("Z1", 1);
  out.z2 = j.value("Z2", 1);
  save_json_file(out_path, to_json(out));
  std::cerr << "core C*=" << core.c_min << ", " << n_eval << " threshold evaluations\n";
  return 0;
}

int cmd_lift(const std::string& proto_path, const CommonOpts& o, int z1, int z2,
             const std::string& out_path) {
  auto f = codespec_from_json(load_json_file(proto_path));
  std::cerr << resolved_config("lift", o).dump() << "\n";
  if (z1 > 0) f.z1 = z1;
  if (z2 > 0) f.z2 = z2;
  const int mc = f.m_core >= 0 ? f.m_core : f.proto.n_c2();
  IntMatrix core(f.proto.b2.begin(), f.proto.b2.begin() + mc);
  IntMatrix ext(f.proto.b2.begin() + mc, f.proto.b2.end());
  std::mt19937_64 rng(o.seed);
  const auto code = lift_with_retry(f.proto.b1, core, ext, f.delta, f.z1, f.z2, f.M,
                                    FieldSpec{f.m}, rng);
  save_json_file(out_path, to_json(f, code));
  const GfContext ctx(code.spec);
  const PrecodeEncoder enc(ctx, code.t1, code.n_vn, code.n_lcn);
  std::cout << "K=" << code.n_vn << " A=" << enc.input_count()
            << " batches=" << code.t2_rows.size() << " precode_rank=" << enc.rank() << '\n';
  return 0;
}

int cmd_simulate(const std::string& code_path, const CommonOpts& o, const std::string& eps_csv,
                 const std::string& n_range, long trials, const std::string& decoder,
                 int max_inactive, int early_stop, const std::string& out_path) {
  const auto code = lifted_from_json(load_json_file(code_path));
  std::cerr << resolved_config("simulate", o).dump() << "\n";
  TrialPlan plan;
  std::stringstream ss(eps_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) plan.net.eps.push_back(std::stod(tok));
  plan.net.M = code.batch_size;
  plan.net.spec = code.spec;
  plan.code = &code;
  plan.n_range = parse_n_range(n_range);
  plan.trials = static_cast<int>(trials);
  plan.decoder = decoder == "inactivation" ? DecoderKind::inactivation : DecoderKind::bp;
  plan.max_inactive = max_inactive;
  plan.seed = o.seed;
  plan.threads = o.threads;
  plan.early_stop_failures = early_stop;
  const auto pts = run_fer(plan);
  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write " + out_path);
    out = &file;
  }
  if (o.format == "json")
    *out << fer_to_json(pts).dump(2) << '\n';
  else
    write_fer_csv(*out, pts);
  return 0;
}

int cmd_mlbound(const CommonOpts& o, const std::string& eps_csv, int M, int A,
                const std::string& n_range) {
  std::cerr << resolved_config("mlbound", o).dump() << "\n";
  LineNetworkSpec net;
  std::stringstream ss(eps_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) net.eps.push_back(std::stod(tok));
  net.M = M;
  net.spec = FieldSpec{8};
  const auto ns = parse_n_range(n_range);
  const auto bound = ml_bound_curve(net, A, ns);
  if (o.format == "json") {
    json arr = json::array();
    for (std::size_t i = 0; i < ns.size(); ++i)
      arr.push_back({{"N", ns[i]}, {"ml_bound", bound[i]}});
    std::cout << arr.dump(2) << '\n';
  } else {
    std::cout << "N,ml_bound\n";
    for (std::size_t i = 0; i < ns.size(); ++i) std::cout << ns[i] << ',' << bound[i] << '\n';
  }
  return 0;
}

int cmd_encode(const std::string& code_path, const CommonOpts& o, const std::string& in_path,
               const std::string& out_path, int n_batches) {
  const auto code = lifted_from_json(load_json_file(code_path));
  std::cerr << resolved_config("encode", o).dump() << "\n";
  const GfContext ctx(code.spec);
  const PrecodeEncoder enc(ctx, code.t1, code.n_vn, code.n_lcn);
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + in_path);
  int m = 0;
  const auto inputs = read_packets(in, &m);
  if (m != code.spec.m) throw std::runtime_error("field mismatch between code and packets");
  const auto v = enc.encode(inputs);
  std::mt19937_64 rng(o.seed);
  std::vector<std::vector<int>> rows(code.t2_rows.begin(),
                                     code.t2_rows.begin() +
                                         std::min<std::size_t>(static_cast<std::size_t>(n_batches),
                                                               code.t2_rows.size()));
  const auto batches = outer_encode(ctx, rows, v, code.batch_size, rng);
  PacketBlock out(inputs.T, static_cast<int>(batches.size()) * code.batch_size);
  for (std::size_t b = 0; b < batches.size(); ++b)
    for (int c = 0; c < code.batch_size; ++c)
      for (int t = 0; t < inputs.T; ++t)
        out.at(t, static_cast<int>(b) * code.batch_size + c) = batches[b].x.at(t, c);
  std::ofstream of(out_path, std::ios::binary);
  if (!of) throw std::runtime_error("cannot write " + out_path);
  write_packets(of, out, code.spec.m);
  std::cout << "encoded " << batches.size() << " batches (" << out.count << " packets)\n";
  return 0;
}

int cmd_decode(const std::string& code_path, const CommonOpts& o, const std::string& in_path,
               const std::string& out_path, double erase_eps, const std::string& decoder,
               int max_inactive) {
  const auto code = lifted_from_json(load_json_file(code_path));
  std::cerr << resolved_config("decode", o).dump() << "\n";
  const GfContext ctx(code.spec);
  const PrecodeEncoder enc(ctx, code.t1, code.n_vn, code.n_lcn);
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + in_path);
  int m = 0;
  const auto received = read_packets(in, &m);
  if (m != code.spec.m) throw std::runtime_error("field mismatch between code and packets");
  const int M = code.batch_size;
  if (received.count % M != 0) throw std::runtime_error("packet count is not a whole number of batches");
  const int n = received.count / M;

  // Re-derive the per-batch generators from the shared seed, then drop
  // columns independently with the given erasure probability.
  std::mt19937_64 rng(o.seed);
  PacketBlock v_dummy(received.T, code.n_vn);
  std::vector<std::vector<int>> rows(code.t2_rows.begin(), code.t2_rows.begin() + n);
  auto skeleton = outer_encode(ctx, rows, v_dummy, M, rng);
  std::mt19937_64 erng(derive_seed(o.seed, 0xe5a5eULL));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<BatchEquation> batches;
  for (int b = 0; b < n; ++b) {
    BatchEquation bq;
    bq.idx = skeleton[static_cast<std::size_t>(b)].idx;
    GfMatrix keep = gf_identity(M);
    for (int c = 0; c < M; ++c)
      if (u(erng) < erase_eps) keep.at(c, c) = 0;
    bq.coeff = gf_mul(ctx, skeleton[static_cast<std::size_t>(b)].gen, keep);
    bq.y = GfMatrix(received.T, M);
    for (int c = 0; c < M; ++c)
      if (keep.at(c, c))
        for (int t = 0; t < received.T; ++t) bq.y.at(t, c) = received.at(t, b * M + c);
    batches.push_back(std::move(bq));
  }
  DecodeResult dec;
  if (decoder == "inactivation") {
    int cap = max_inactive >= 0 ? max_inactive : static_cast<int>(2.0 * std::sqrt(static_cast<double>(enc.input_count())));
    dec = inactivation_decode(ctx, batches, code.t1, code.n_vn, received.T, cap);
  } else {
    dec = bp_decode(ctx, batches, code.t1, code.n_vn, received.T);
  }
  PacketBlock data(received.T, enc.input_count());
  int got = 0;
  for (int k = 0; k < enc.input_count(); ++k) {
    const int p = enc.data_positions()[static_cast<std::size_t>(k)];
    if (dec.recovered[static_cast<std::size_t>(p)]) {
      ++got;
      for (int t = 0; t < received.T; ++t) data.at(t, k) = dec.packets.at(t, p);
    }
  }
  std::ofstream of(out_path, std::ios::binary);
  if (!of) throw std::runtime_error("cannot write " + out_path);
  write_packets(of, data, code.spec.m);
  std::cout << "recovered " << got << "/" << enc.input_count() << " input packets"
            << (dec.inactivated_count > 0 ? " (" + std::to_string(dec.inactivated_count) + " inactivated)" : "")
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"protograph-based batched network code toolkit"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string proto_path, code_path, out_path = "out.json", in_path, eps_csv = "0.2,0.2";
  std::string n_range = "1:40:1", decoder = "bp";
  bool homogeneous = false, per_row = false;
  int hops = 2, z1 = 0, z2 = 0, M = 16, A = 1600, max_inactive = -1, early_stop = 0, n_batches = 1 << 20;
  long trials = 1000;
  double delta_slack = 0.0, erase_eps = 0.0;

  auto* th = app.add_subcommand("threshold", "decoding threshold of a protomatrix");
  th->add_option("proto", proto_path, "protomatrix JSON file")->required();
  th->add_flag("--homogeneous", homogeneous, "bisect a single erasure probability");
  th->add_option("--hops", hops, "line-network length");
  th->add_flag("--per-row", per_row, "sweep extension rows (needs m_core in the file)");
  th->add_option("--delta-slack", delta_slack, "subtract from every delta entry (printed-precision slack)");
  add_common(th, o);

  auto* op = app.add_subcommand("optimize", "randomized protograph search");
  op->add_option("config", proto_path, "optimizer config JSON")->required();
  op->add_option("--out", out_path, "output protomatrix file");
  add_common(op, o);

  auto* li = app.add_subcommand("lift", "two-step lifting of a protomatrix");
  li->add_option("proto", proto_path, "protomatrix JSON file")->required();
  li->add_option("--z1", z1, "override Z1");
  li->add_option("--z2", z2, "override Z2");
  li->add_option("--out", out_path, "output lifted-code file");
  add_common(li, o);

  auto* si = app.add_subcommand("simulate", "Monte-Carlo FER over a line network");
  si->add_option("code", code_path, "lifted-code JSON file")->required();
  si->add_option("--eps", eps_csv, "per-hop erasure probabilities, comma separated");
  si->add_option("--n", n_range, "batch counts: a:b:step or comma list");
  si->add_option("--trials", trials, "trials per point");
  si->add_option("--decoder", decoder)->check(CLI::IsMember({"bp", "inactivation"}));
  si->add_option("--max-inactive", max_inactive, "inactivation cap (-1: 2*sqrt(A))");
  si->add_option("--early-stop", early_stop, "stop a point after this many failures (0: off)");
  si->add_option("--out", out_path, "output file (default stdout)")->default_val("");
  add_common(si, o);

  auto* ml = app.add_subcommand("mlbound", "ML lower bound curve");
  ml->add_option("--eps", eps_csv, "per-hop erasure probabilities");
  ml->add_option("-M,--batch-size", M);
  ml->add_option("-A,--inputs", A, "number of input packets");
  ml->add_option("--n", n_range, "batch counts");
  add_common(ml, o);

  auto* en = app.add_subcommand("encode", "encode a packet file into batches");
  en->add_option("code", code_path, "lifted-code JSON file")->required();
  en->add_option("--in", in_path, "input packet file")->required();
  en->add_option("--out", out_path, "output packet file")->required();
  en->add_option("--batches", n_batches, "number of batches to emit");
  add_common(en, o);

  auto* de = app.add_subcommand("decode", "decode a batch packet file");
  de->add_option("code", code_path, "lifted-code JSON file")->required();
  de->add_option("--in", in_path, "received packet file")->required();
  de->add_option("--out", out_path, "recovered packet file")->required();
  de->add_option("--erase-eps", erase_eps, "per-packet erasure probability applied on read");
  de->add_option("--decoder", decoder)->check(CLI::IsMember({"bp", "inactivation"}));
  de->add_option("--max-inactive", max_inactive);
  add_common(de, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (th->parsed()) return cmd_threshold(proto_path, o, homogeneous, hops, per_row, delta_slack);
    if (op->parsed()) return cmd_optimize(proto_path, o, out_path);
    if (li->parsed()) return cmd_lift(proto_path, o, z1, z2, out_path);
    if (si->parsed())
      return cmd_simulate(code_path, o, eps_csv, n_range, trials, decoder, max_inactive,
                          early_stop, out_path);
    if (ml->parsed()) return cmd_mlbound(o, eps_csv, M, A, n_range);
    if (en->parsed()) return cmd_encode(code_path, o, in_path, out_path, n_batches);
    if (de->parsed()) return cmd_decode(code_path, o, in_path, out_path, erase_eps, decoder, max_inactive);
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    const bool guard = what.find("grid too large") != std::string::npos ||
                       what.find("retry cap") != std::string::npos;
    std::cerr << (guard ? "compute guard: " : "input error: ") << what << '\n';
    return guard ? 3 : 2;
  }
  return 1;
}
