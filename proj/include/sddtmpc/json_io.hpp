#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sddtmpc/ctrl_linear.hpp"
#include "sddtmpc/fis.hpp"
#include "sddtmpc/scenario.hpp"

namespace sddtmpc {

using nlohmann::json;

inline json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j) {
  const auto rows = j.size();
  const auto cols = rows ? j[0].size() : 0;
  Matrix m(rows, cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  return m;
}

inline json to_json(const TemplatePolytope& p) {
  json v = to_json(Vector(p.offsets).transpose());
  return {{"normals", to_json(p.normals)}, {"offsets", v[0]}};
}

inline TemplatePolytope polytope_from_json(const json& j) {
  const Matrix n = matrix_from_json(j.at("normals"));
  const auto& off = j.at("offsets");
  Vector b(off.size());
  for (size_t i = 0; i < off.size(); ++i) b(i) = off[i].get<double>();
  return TemplatePolytope(n, b);
}

inline json to_json(const FisModel& m) {
  json rules = json::array();
  for (const auto& r : m.rules) {
    json coeffs = json::array();
    for (int i = 0; i < 6; ++i) coeffs.push_back(r.coeffs(i));
    rules.push_back({{"centers", {r.speed_mf.center, r.beta_mf.center}},
                     {"half_widths", {r.speed_mf.half_width, r.beta_mf.half_width}},
                     {"coeffs", coeffs}});
  }
  return {{"grid", 5},
          {"output_label", m.output_label},
          {"wmax_radius", m.wmax_radius},
          {"safety_margin", m.safety_margin},
          {"rules", rules}};
}

inline FisModel fis_from_json(const json& j) {
  FisModel m = FisModel::grid5(j.at("output_label").get<std::string>(),
                               j.at("wmax_radius").get<double>());
  m.safety_margin = j.value("safety_margin", 0.0);
  const auto& rules = j.at("rules");
  if (rules.size() != m.rules.size())
    throw std::runtime_error("fis_from_json: unexpected rule count");
  for (size_t r = 0; r < m.rules.size(); ++r) {
    m.rules[r].speed_mf = {rules[r]["centers"][0].get<double>(),
                           rules[r]["half_widths"][0].get<double>()};
    m.rules[r].beta_mf = {rules[r]["centers"][1].get<double>(),
                          rules[r]["half_widths"][1].get<double>()};
    for (int i = 0; i < 6; ++i) m.rules[r].coeffs(i) = rules[r]["coeffs"][i].get<double>();
  }
  return m;
}

inline json to_json(const SynthesisResult& s) {
  return {{"K", to_json(s.K)},
          {"kappa", to_json(s.kappa_gain)},
          {"F", to_json(s.F)},
          {"Emax", to_json(s.Emax)},
          {"Zf", to_json(s.Zf)},
          {"Zf_tight", to_json(s.Zf_tight)}};
}

inline SynthesisResult synthesis_from_json(const json& j) {
  SynthesisResult s;
  s.K = matrix_from_json(j.at("K"));
  s.kappa_gain = matrix_from_json(j.at("kappa"));
  s.F = matrix_from_json(j.at("F"));
  s.Emax = polytope_from_json(j.at("Emax"));
  s.Zf = polytope_from_json(j.at("Zf"));
  s.Zf_tight = polytope_from_json(j.at("Zf_tight"));
  return s;
}

inline json to_json(const RunSummary& s) {
  json j;
  j["mission_time"] = s.mission_time;
  j["total_realized_cost"] = s.total_realized_cost;
  j["decision_cost"] = s.decision_cost;
  j["min_wall_distance"] = s.min_wall_distance;
  j["farthest_px"] = s.farthest_px;
  j["crashed"] = s.crashed;
  j["infeasible_at_start"] = s.infeasible_at_start;
  j["infeasible_steps"] = s.infeasible_steps;
  j["final_error"] = s.final_error;
  return j;
}

/// Cache key for the offline synthesis of one design parameterization.
inline std::string design_hash(const HolonomicDesign& d) {
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h = (h ^ bits) * 1099511628211ull;
  };
  mix(d.sys.Ts);
  mix(d.vel_bound);
  mix(d.acc_bound);
  mix(d.pos_bound);
  mix(d.tube_design_radius);
  mix(d.input_tighten_frac);
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

// ---------------------------------------------------------------------------
// Deterministic text output

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_trajectory_csv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream f(path);
  f << "k,t,x1,x2,x3,x4,z1,z2,z3,z4,u1,u2,v1,v2,w1,w2,beta,cost,feasible\n";
  for (const auto& r : log.rows) {
    f << r.k << ',' << format_double(r.t);
    for (int i = 0; i < 4; ++i) f << ',' << format_double(r.x(i));
    for (int i = 0; i < 4; ++i) f << ',' << format_double(r.z(i));
    f << ',' << format_double(r.u(0)) << ',' << format_double(r.u(1));
    f << ',' << format_double(r.v(0)) << ',' << format_double(r.v(1));
    f << ',' << format_double(r.w(0)) << ',' << format_double(r.w(1));
    f << ',' << format_double(r.beta) << ',' << format_double(r.cost) << ','
      << (r.feasible ? 1 : 0) << '\n';
  }
}

/// Per-step controller diagnostics (one JSON object per line).
inline void append_diagnostics(std::ostream& os, int k, const Eigen::Vector4d& z,
                               const Matrix& v_seq, const std::vector<TubeSection>& tube,
                               double cost, bool feasible, int solver_iters) {
  json j;
  j["k"] = k;
  j["z"] = {z(0), z(1), z(2), z(3)};
  json vs = json::array();
  for (Eigen::Index i = 0; i < v_seq.cols(); ++i) vs.push_back({v_seq(0, i), v_seq(1, i)});
  j["v_seq"] = vs;
  json offs = json::array();
  for (const auto& s : tube) {
    json o = json::array();
    for (Eigen::Index i = 0; i < s.E.offsets.size(); ++i) o.push_back(s.E.offsets(i));
    offs.push_back(o);
  }
  j["tube_offsets"] = offs;
  j["cost"] = cost;
  j["feasible"] = feasible;
  j["solver_iters"] = solver_iters;
  os << j.dump() << '\n';
}

}  // namespace sddtmpc
