#pragma once

// Flat-file output: trajectory CSVs and the JSON run manifest.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nkhitchin/background.hpp"
#include "nkhitchin/errors.hpp"
#include "nkhitchin/hitchin.hpp"

namespace nkh {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

inline const char* kBackgroundCsvHeader = "t,lambda,u0,u1,u2,v0,v1,v2,mu,w0,w1,w2,I1,I2,I3,I4";
inline const char* kEigenCsvHeader = "t,xi,chi,h1,f2,Re,Rf";

/// 17 significant digits; enough to round-trip any double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_background_csv(std::ostream& os, const Trajectory<7>& tr) {
  os << kBackgroundCsvHeader << '\n';
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto s = BackgroundState::from_vector(tr.times()[k], tr.states()[k]);
    const auto f = derived_frame(s);
    const auto c = conserved(s);
    const double row[] = {s.t,    s.lambda, s.u.a0, s.u.a1, s.u.a2, s.v.a0, s.v.a1, s.v.a2,
                          f.mu,   f.w.a0,   f.w.a1, f.w.a2, c.I1,   c.I2,   c.I3,   c.I4};
    for (std::size_t i = 0; i < std::size(row); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

inline void write_eigen_csv(std::ostream& os, const std::vector<EigenSample>& samples) {
  os << kEigenCsvHeader << '\n';
  for (const auto& s : samples) {
    const double row[] = {s.t, s.H.xi, s.H.chi, s.H.h1, s.H.f2, s.Re, s.Rf};
    for (std::size_t i = 0; i < std::size(row); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

/// The single machine-readable record of one command run.
struct RunManifest {
  std::string command;
  json params = json::object();
  json results = json::object();
  json diagnostics = json::object();
  std::string version = kVersion;
  double seconds = 0.0;

  json to_json() const {
    return {{"command", command},         {"params", params}, {"results", results},
            {"diagnostics", diagnostics}, {"version", version}, {"seconds", seconds}};
  }

  static RunManifest from_json(const json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.params = j.at("params");
    m.results = j.at("results");
    m.diagnostics = j.at("diagnostics");
    m.version = j.at("version").get<std::string>();
    m.seconds = j.at("seconds").get<double>();
    return m;
  }

  std::string dump() const { return to_json().dump(2); }
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return RunManifest::from_json(json::parse(in));
}

// ---------------------------------------------------------------------------
// JSON views of library results

inline json error_json(const NumericError& e) {
  return {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
}

inline json certificate_json(const std::optional<LaunchCertificate>& c) {
  if (!c) return nullptr;
  return {{"eps", c->eps},
          {"t_check", c->t_check},
          {"discrepancy_coarse", c->discrepancy_coarse},
          {"discrepancy_fine", c->discrepancy_fine},
          {"factor", c->factor},
          {"passed", c->passed}};
}

inline json family_json(const HalfFamily& f) { return {{"family", f.variant == Variant::A ? "a" : "b"}, {"param", f.param}}; }

inline json shoot_json(const ShootReport& r) {
  return {{"Lambda", r.Lambda},
          {"t_star", r.t_star},
          {"xi_star", r.xi_star},
          {"chi_star", r.chi_star},
          {"h1_star", r.h1_star},
          {"f2_star", r.f2_star},
          {"norm_star", r.norm_star},
          {"dh1_star", r.dh1_star},
          {"w1_star", r.w1_star},
          {"w2_star", r.w2_star},
          {"max_constraint_residual", r.max_constraint_residual},
          {"launch_constraint_residual", r.launch_constraint_residual},
          {"classification", to_string(r.classification)},
          {"steps", r.steps}};
}

inline json portrait_json(const PortraitRow& p) {
  return {{"Lambda", p.Lambda},
          {"xi", p.xi},
          {"chi", p.chi},
          {"h1", p.h1},
          {"f2", p.f2},
          {"norm", p.norm},
          {"relation_xi_h1", p.relation_xi_h1},
          {"relation_f2", p.relation_f2},
          {"opposite_ok", p.opposite_ok},
          {"relation_xi_h1_ok", p.relation_xi_h1_ok},
          {"relation_f2_ok", p.relation_f2_ok},
          {"xi_positive_ok", p.xi_positive_ok}};
}

inline json pairs_json(const std::vector<std::pair<double, double>>& v) {
  json a = json::array();
  for (const auto& [x, y] : v) a.push_back({x, y});
  return a;
}

}  // namespace nkh
