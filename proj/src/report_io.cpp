// SPDX-License-Identifier: Apache-2.0
#include "shk/report_io.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace shk {

void BenchReport::add_solver_run(const std::string& solver,
                                 const SolveReport& rep) {
  for (size_t i = 0; i < rep.shifts.size(); ++i) {
    const ShiftReport& s = rep.shifts[i];
    BenchRow row;
    row.solver = solver;
    row.shift_index = static_cast<int>(i);
    row.shift_re = s.sigma.real();
    row.shift_im = s.sigma.imag();
    row.iterations = s.iterations;
    row.precond_solves = rep.precond_solves;
    row.residual = s.final_residual;
    row.converged = s.converged;
    row.wall_ms = rep.wall_ms;
    rows.push_back(std::move(row));
  }
}

bool BenchReport::all_converged() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const BenchRow& r) { return r.converged; });
}

void write_csv(const BenchReport& report, std::ostream& out) {
  out << "solver,shift_index,shift_re,shift_im,iterations,precond_solves,"
         "residual,converged,wall_ms\n";
  char buf[256];
  for (const BenchRow& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%d,%ld,%.17g,%s,%.6g\n",
                  r.solver.c_str(), r.shift_index, r.shift_re, r.shift_im,
                  r.iterations, r.precond_solves, r.residual,
                  r.converged ? "true" : "false", r.wall_ms);
    out << buf;
  }
}

void write_csv(const BenchReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_csv(report, out);
}

namespace {

nlohmann::json row_to_json(const BenchRow& r) {
  return nlohmann::json{{"solver", r.solver},
                        {"shift_index", r.shift_index},
                        {"shift_re", r.shift_re},
                        {"shift_im", r.shift_im},
                        {"iterations", r.iterations},
                        {"precond_solves", r.precond_solves},
                        {"residual", r.residual},
                        {"converged", r.converged},
                        {"wall_ms", r.wall_ms}};
}

}  // namespace

void write_json(const BenchReport& report, const std::string& path) {
  nlohmann::json j;
  j["metadata"] = nlohmann::json::object();
  for (const auto& [k, v] : report.metadata) j["metadata"][k] = v;
  j["rows"] = nlohmann::json::array();
  for (const BenchRow& r : report.rows) j["rows"].push_back(row_to_json(r));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

BenchReport read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  BenchReport rep;
  for (auto it = j["metadata"].begin(); it != j["metadata"].end(); ++it)
    rep.metadata.emplace_back(it.key(), it.value().get<std::string>());
  for (const auto& rj : j["rows"]) {
    BenchRow r;
    r.solver = rj["solver"].get<std::string>();
    r.shift_index = rj["shift_index"].get<int>();
    r.shift_re = rj["shift_re"].get<double>();
    r.shift_im = rj["shift_im"].get<double>();
    r.iterations = rj["iterations"].get<int>();
    r.precond_solves = rj["precond_solves"].get<long>();
    r.residual = rj["residual"].get<double>();
    r.converged = rj["converged"].get<bool>();
    r.wall_ms = rj["wall_ms"].get<double>();
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

}  // namespace shk
