#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sddtmpc/json_io.hpp"
#include "sddtmpc/scenario.hpp"

namespace sddtmpc {

struct RunRecord {
  std::string scenario;
  std::string controller;
  std::string disturbance_case;
  std::uint64_t seed = 0;
  RunSummary summary;
};

/// Mission-time matrix (scenario-1 style): rows are disturbance cases, columns
/// controllers.
inline void write_mission_table(const std::vector<RunRecord>& runs, const std::string& path) {
  std::ofstream f(path);
  f << "case,mpc,tmpc,sddtmpc\n";
  std::vector<std::string> cases;
  for (const auto& r : runs)
    if (std::find(cases.begin(), cases.end(), r.disturbance_case) == cases.end())
      cases.push_back(r.disturbance_case);
  for (const auto& c : cases) {
    f << c;
    for (const std::string ctrl : {"mpc", "tmpc", "sddtmpc"}) {
      double t = std::numeric_limits<double>::quiet_NaN();
      for (const auto& r : runs)
        if (r.disturbance_case == c && r.controller == ctrl) t = r.summary.mission_time;
      f << ',' << format_double(t);
    }
    f << '\n';
  }
}

/// Convergence table (Table-3 style): nominal costs of the quadratic solves
/// and the swarm cost at increasing iteration budgets.
struct ConvergenceTable {
  double mpc = 0.0, tmpc = 0.0;
  std::vector<std::pair<int, double>> ps;  // (iterations, cost)
};

inline void write_convergence_table(const ConvergenceTable& t, const std::string& path) {
  std::ofstream f(path);
  f << "solver,iterations,cost\n";
  f << "mpc,," << format_double(t.mpc) << '\n';
  f << "tmpc,," << format_double(t.tmpc) << '\n';
  for (const auto& [it, c] : t.ps) f << "ps," << it << ',' << format_double(c) << '\n';
}

/// Unicycle rise/steady-state metrics across paired runs.
inline void write_unicycle_table(const std::vector<std::pair<std::string, UnicycleRunResult>>& runs,
                                 const std::string& path) {
  std::ofstream f(path);
  f << "controller,rise_time,final_error,nominal_outside_v_steps,inputs_admissible,"
       "max_heading_error,containment_violations\n";
  for (const auto& [name, r] : runs) {
    f << name << ',' << format_double(r.rise_time) << ',' << format_double(r.summary.final_error)
      << ',' << r.steps_nominal_outside_v << ',' << (r.inputs_admissible ? 1 : 0) << ','
      << format_double(r.max_heading_error) << ',' << r.containment_violations << '\n';
  }
}

}  // namespace sddtmpc
