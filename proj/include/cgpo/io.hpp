// Copyright 2026 The cgpo-kit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>

#include "json.hpp"

#include "cgpo/feasibility.hpp"

// JSON forms:
//   matrix / state: {"dim": d, "re": [[...]], "im": [[...]]}  ("im" optional)
//   hamiltonian:    {"delta": x, "levels": [n...], "beta": b}
//   channel:        {"dim_in", "dim_out", "choi": {"re", "im"}, "levels_in", "levels_out", "delta"}
//   report:         {"pass", "violation", "witness"}

namespace cgpo::io {

using json = nlohmann::json;

inline void schema_error(const std::string& msg) { throw Error("schema_violation", msg); }

/// Rejects keys outside `allowed`.
inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) schema_error(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) schema_error(where + ": unknown key '" + k + "'");
  }
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) schema_error(where + ": missing key '" + key + "'");
  return j.at(key);
}

template <class T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    schema_error(where + ": wrong type");
  }
  return T{};
}

inline json real_rows(const Matrix& m, bool imag) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(imag ? m(r, c).imag() : m(r, c).real());
    rows.push_back(row);
  }
  return rows;
}

inline json matrix_to_json(const Matrix& m) {
  return {{"dim", m.rows()}, {"re", real_rows(m, false)}, {"im", real_rows(m, true)}};
}

inline Matrix parse_square(const json& re, const json* im, Index dim, const std::string& where) {
  Matrix m = Matrix::Zero(dim, dim);
  auto fill = [&](const json& rows, bool imag) {
    if (!rows.is_array() || Index(rows.size()) != dim) schema_error(where + ": matrix has wrong row count");
    for (Index r = 0; r < dim; ++r) {
      const json& row = rows[std::size_t(r)];
      if (!row.is_array() || Index(row.size()) != dim) schema_error(where + ": matrix has wrong column count");
      for (Index c = 0; c < dim; ++c) {
        const double v = get_as<double>(row[std::size_t(c)], where);
        if (imag) m(r, c) += Complex(0.0, v);
        else m(r, c) += v;
      }
    }
  };
  fill(re, false);
  if (im) fill(*im, true);
  return m;
}

inline Matrix matrix_from_json(const json& j, const std::string& where = "matrix") {
  check_keys(j, {"dim", "re", "im"}, where);
  const auto dim = get_as<long>(require(j, "dim", where), where);
  if (dim < 1) schema_error(where + ": dim must be positive");
  return parse_square(require(j, "re", where), j.contains("im") ? &j.at("im") : nullptr, Index(dim), where);
}

// ---------------------------------------------------------------------------
// Presets

inline HarmonicHamiltonian paper_qubit_hamiltonian() { return HarmonicHamiltonian(std::log(3.0), {0, 1}, 1.0); }
inline DensityMatrix paper_qubit_rho() { return DensityMatrix::diagonal({3.0 / 200.0, 197.0 / 200.0}); }

inline json hamiltonian_to_json(const HarmonicHamiltonian& h) {
  json j = {{"delta", h.delta()}, {"levels", h.levels()}};
  if (h.beta()) j["beta"] = *h.beta();
  return j;
}

inline HarmonicHamiltonian hamiltonian_from_json(const json& j, const std::string& where = "system") {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "paper-qubit") return paper_qubit_hamiltonian();
    schema_error(where + ": unknown system preset '" + name + "'");
  }
  check_keys(j, {"delta", "levels", "beta"}, where);
  const double delta = get_as<double>(require(j, "delta", where), where);
  const auto levels = get_as<std::vector<int>>(require(j, "levels", where), where);
  std::optional<double> beta;
  if (j.contains("beta")) beta = get_as<double>(j.at("beta"), where);
  return HarmonicHamiltonian(delta, levels, beta);
}

/// Named presets: "paper-qubit-rho", "plus-state", "gibbs", "maximally-mixed".
inline DensityMatrix state_from_json(const json& j, const HarmonicHamiltonian& h, double beta,
                                     const std::string& where = "state") {
  DensityMatrix out;
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "paper-qubit-rho") out = paper_qubit_rho();
    else if (name == "plus-state") out = plus_state();
    else if (name == "gibbs") out = gibbs_state(h, beta);
    else if (name == "maximally-mixed") out = DensityMatrix::maximally_mixed(h.dim());
    else schema_error(where + ": unknown state preset '" + name + "'");
  } else if (j.is_array()) {
    out = DensityMatrix::diagonal(get_as<std::vector<double>>(j, where));
  } else {
    out = DensityMatrix(matrix_from_json(j, where));
  }
  if (out.dim() != h.dim()) schema_error(where + ": state dimension does not match the system");
  return out;
}

inline json state_to_json(const DensityMatrix& rho) { return matrix_to_json(rho.matrix()); }

// ---------------------------------------------------------------------------
// Channels and reports

inline json channel_to_json(const QuantumChannel& ch) {
  return {{"dim_in", ch.dim_in()},
          {"dim_out", ch.dim_out()},
          {"choi", {{"re", real_rows(ch.choi(), false)}, {"im", real_rows(ch.choi(), true)}}},
          {"levels_in", ch.h_in().levels()},
          {"levels_out", ch.h_out().levels()},
          {"delta", ch.h_in().is_trivial() ? ch.h_out().delta() : ch.h_in().delta()}};
}

inline QuantumChannel channel_from_json(const json& j, const std::string& where = "channel") {
  check_keys(j, {"dim_in", "dim_out", "choi", "levels_in", "levels_out", "delta"}, where);
  const auto din = get_as<long>(require(j, "dim_in", where), where);
  const auto dout = get_as<long>(require(j, "dim_out", where), where);
  const double delta = get_as<double>(require(j, "delta", where), where);
  const auto li = get_as<std::vector<int>>(require(j, "levels_in", where), where);
  const auto lo = get_as<std::vector<int>>(require(j, "levels_out", where), where);
  if (long(li.size()) != din || long(lo.size()) != dout) schema_error(where + ": level lists do not match dims");
  const json& choi = require(j, "choi", where);
  check_keys(choi, {"re", "im"}, where + ".choi");
  const Matrix m = parse_square(require(choi, "re", where), choi.contains("im") ? &choi.at("im") : nullptr,
                                Index(din * dout), where + ".choi");
  return QuantumChannel(m, HarmonicHamiltonian(delta, li), HarmonicHamiltonian(delta, lo));
}

inline json report_to_json(const ChannelReport& r) {
  json w = r.witness.empty() ? json(nullptr) : json(r.witness);
  return {{"pass", r.pass}, {"violation", r.violation}, {"witness", w}};
}

inline json outcome_to_json(const FeasibilityOutcome& o, bool include_channel = false) {
  json j = {{"status", o.found() ? "found" : "not_found"}, {"iterations", o.iterations}, {"residuals", o.residuals}};
  j["oracle"] = o.oracle ? json(*o.oracle) : json(nullptr);
  if (include_channel && o.channel) j["channel"] = channel_to_json(*o.channel);
  return j;
}

/// FNV-1a over the compact dump.
inline std::string config_hash(const json& j) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace cgpo::io
