#pragma once

// File formats: protomatrix / lifted-code JSON, rank-distribution family
// files, raw packet blocks, and FER result tables.

#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pbnc/codec.hpp"
#include "pbnc/network.hpp"
#include "pbnc/protograph.hpp"
#include "pbnc/sim.hpp"

namespace pbnc {

using json = nlohmann::json;

// A protomatrix file bundles everything needed to lift and analyze a design.
struct CodeSpecFile {
  int m = 8;         // field degree
  int M = 16;        // batch size
  Protomatrix proto;
  PuncturingVector delta;
  int z1 = 1;
  int z2 = 1;
  int m_core = -1;   // core/extension split of B2; <0 means unmarked
};

inline json to_json(const CodeSpecFile& f) {
  json j;
  j["m"] = f.m;
  j["M"] = f.M;
  j["n_v"] = f.proto.n_v;
  j["n_c1"] = f.proto.n_c1();
  j["n_c2"] = f.proto.n_c2();
  j["B1"] = f.proto.b1;
  j["B2"] = f.proto.b2;
  j["delta"] = f.delta.delta;
  j["Z1"] = f.z1;
  j["Z2"] = f.z2;
  if (f.m_core >= 0) j["m_core"] = f.m_core;
  return j;
}

inline CodeSpecFile codespec_from_json(const json& j) {
  CodeSpecFile f;
  f.m = j.at("m").get<int>();
  f.M = j.at("M").get<int>();
  f.proto.n_v = j.at("n_v").get<int>();
  f.proto.b1 = j.at("B1").get<IntMatrix>();
  f.proto.b2 = j.at("B2").get<IntMatrix>();
  f.delta.delta = j.at("delta").get<std::vector<double>>();
  f.z1 = j.at("Z1").get<int>();
  f.z2 = j.at("Z2").get<int>();
  f.m_core = j.value("m_core", -1);
  if (static_cast<int>(f.proto.b1.size()) != j.at("n_c1").get<int>())
    throw std::invalid_argument("n_c1 does not match B1 row count");
  if (static_cast<int>(f.proto.b2.size()) != j.at("n_c2").get<int>())
    throw std::invalid_argument("n_c2 does not match B2 row count");
  f.proto.validate();
  f.delta.validate(f.proto.n_c2());
  return f;
}

inline json to_json(const CodeSpecFile& f, const LiftedCode& code) {
  json j = to_json(f);
  json t1 = json::array();
  for (const auto& e : code.t1) t1.push_back({e.check, e.vn, static_cast<int>(e.label)});
  j["T1"] = std::move(t1);
  j["T2"] = code.t2_rows;
  j["T2_type"] = code.t2_row_type;
  j["n_vn"] = code.n_vn;
  j["n_lcn"] = code.n_lcn;
  return j;
}

inline LiftedCode lifted_from_json(const json& j) {
  LiftedCode code;
  code.spec = FieldSpec{j.at("m").get<int>()};
  code.batch_size = j.at("M").get<int>();
  code.z1 = j.at("Z1").get<int>();
  code.z2 = j.at("Z2").get<int>();
  code.n_vn = j.at("n_vn").get<int>();
  code.n_lcn = j.at("n_lcn").get<int>();
  for (const auto& t : j.at("T1")) {
    LabeledEdge e;
    e.check = t.at(0).get<int>();
    e.vn = t.at(1).get<int>();
    e.label = static_cast<Symbol>(t.at(2).get<int>());
    code.t1.push_back(e);
  }
  code.t2_rows = j.at("T2").get<std::vector<std::vector<int>>>();
  if (j.contains("T2_type"))
    code.t2_row_type = j.at("T2_type").get<std::vector<int>>();
  else
    code.t2_row_type.assign(code.t2_rows.size(), 0);
  return code;
}

inline json family_to_json(const DistFamily& fam) {
  json j;
  j["M"] = fam.M;
  j["q"] = fam.spec.q();
  j["E"] = fam.hops;
  j["delta1"] = fam.delta1;
  j["delta2"] = fam.delta2;
  json rows = json::array();
  for (const auto& [key, bucket] : fam.buckets)
    for (const auto& e : bucket)
      rows.push_back({{"eps", e.eps}, {"h", e.h.h}, {"cap", e.cap}});
  j["rows"] = std::move(rows);
  return j;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return j;
}

inline void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

// Raw packet block: three little-endian uint32 (T, count, m), then the
// symbols row-major, one byte each.
inline void write_packets(std::ostream& out, const PacketBlock& b, int m) {
  const auto w32 = [&](std::uint32_t v) {
    char buf[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                   static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(buf, 4);
  };
  w32(static_cast<std::uint32_t>(b.T));
  w32(static_cast<std::uint32_t>(b.count));
  w32(static_cast<std::uint32_t>(m));
  out.write(reinterpret_cast<const char*>(b.data.data()),
            static_cast<std::streamsize>(b.data.size()));
}

inline PacketBlock read_packets(std::istream& in, int* m_out = nullptr) {
  const auto r32 = [&]() {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw std::runtime_error("truncated packet file header");
    return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
           (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
  };
  const int T = static_cast<int>(r32());
  const int count = static_cast<int>(r32());
  const int m = static_cast<int>(r32());
  if (m < 1 || m > 8) throw std::runtime_error("unsupported field degree in packet file");
  PacketBlock b(T, count);
  in.read(reinterpret_cast<char*>(b.data.data()), static_cast<std::streamsize>(b.data.size()));
  if (!in) throw std::runtime_error("truncated packet payload");
  const int q = 1 << m;
  for (Symbol s : b.data)
    if (s >= q) throw std::runtime_error("symbol out of field range");
  if (m_out) *m_out = m;
  return b;
}

inline void write_fer_csv(std::ostream& out, const std::vector<FerPoint>& pts) {
  out << "N,trials,failures,fer,wilson_lo,wilson_hi,ml_bound\n";
  for (const auto& p : pts)
    out << p.N << ',' << p.trials << ',' << p.failures << ',' << p.fer << ','
        << p.wilson_lo << ',' << p.wilson_hi << ',' << p.ml_bound << '\n';
}

inline json fer_to_json(const std::vector<FerPoint>& pts) {
  json arr = json::array();
  for (const auto& p : pts)
    arr.push_back({{"N", p.N},
                   {"trials", p.trials},
                   {"failures", p.failures},
                   {"fer", p.fer},
                   {"wilson_lo", p.wilson_lo},
                   {"wilson_hi", p.wilson_hi},
                   {"ml_bound", p.ml_bound}});
  return arr;
}

}  // namespace pbnc
