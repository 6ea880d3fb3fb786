#pragma once

#include <functional>
#include <string>
#include <vector>

namespace shaken {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string measured;  ///< the numbers the verdict was based on
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::vector<int> only;  ///< criterion ids to run; empty runs all twelve
  int workers = 1;
  double dt = 2.5e-3;
  int grid_n = 128;     ///< single-well runs of criteria 5, 6, 10
  int sweep_n = 64;     ///< depth and detuning sweeps (criteria 7, 8)
  int multi_well_n = 256;
  /// Called as each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

/// Runs the acceptance criteria in order. Exceptions inside a criterion are
/// reported as a failure of that criterion.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

/// "PASS  C5 grid fidelity, short time: ... (12.3 s)".
std::string format_result(const CriterionResult& result);

}  // namespace shaken
