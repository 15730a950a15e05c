// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "shk/solvers.hpp"

namespace shk {

struct BenchRow {
  std::string solver;
  int shift_index = 0;
  double shift_re = 0.0, shift_im = 0.0;
  int iterations = 0;
  long precond_solves = 0;  ///< run total, repeated on each row of the solver
  double residual = 0.0;
  bool converged = false;
  double wall_ms = 0.0;

  bool operator==(const BenchRow&) const = default;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<std::pair<std::string, std::string>> metadata;

  void add_solver_run(const std::string& solver, const SolveReport& rep);
  bool all_converged() const;
};

void write_csv(const BenchReport& report, std::ostream& out);
void write_csv(const BenchReport& report, const std::string& path);
void write_json(const BenchReport& report, const std::string& path);
BenchReport read_json(const std::string& path);

}  // namespace shk
