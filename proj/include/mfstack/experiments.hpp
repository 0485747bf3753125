/*
 Copyright 2026 The mfstack Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

// Subcommand drivers behind the command-line tool. Each writes its CSV
// artifacts into an output directory and returns the process exit code.

#include <mfstack/config.hpp>
#include <mfstack/optimizer.hpp>

#include <filesystem>
#include <initializer_list>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

namespace mfstack {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config_error = 1;
inline constexpr int line_search_failed = 2;
inline constexpr int solver_error = 3;
}  // namespace exit_code

int exit_code_for(OptimizeStatus status);

/// Writes one CSV file: fixed header, LF terminators, 17 significant digits.
/// Integral values (ids, indices) print without a fraction under %.17g.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<const char*> header);

  void row(std::initializer_list<double> values);

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
};

std::string format_number(double x);

/// Writes the long-format (t, xi, value) table of a trajectory.
void write_field_csv(const std::filesystem::path& path, const Trajectory* field);

/// Evenly spaced interior probe indices on an n_t grid.
std::vector<Index> probe_indices(Index n_t, int count);

struct GradcheckRow {
  Index t_index;
  double adjoint_d;
  double fd_d;
  double rel_err;
};

/// Descent direction vs -(central difference of the reduced objective)/dt at each probe.
std::vector<GradcheckRow> gradient_check(const ProblemSpec& spec, const Series& v, const std::vector<Index>& probes,
                                         double h, int jobs = 1);

double median_rel_err(const std::vector<GradcheckRow>& rows);
double cosine_similarity(const std::vector<GradcheckRow>& rows);

struct RunOptions {
  std::filesystem::path out_dir{"."};
  int jobs{1};
  std::ostream* log{nullptr};
};

int cmd_solve(const ExperimentConfig& cfg, const RunOptions& opt);
int cmd_particles(const ExperimentConfig& cfg, const RunOptions& opt);
int cmd_gradcheck(const ExperimentConfig& cfg, const RunOptions& opt);
int cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opt);

/// CSV schemas and exit codes, as printed by --help.
std::string artifact_documentation();

}  // namespace mfstack
