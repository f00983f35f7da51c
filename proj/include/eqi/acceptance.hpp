#pragma once
// Acceptance suite: every criterion is a self-contained computation with a
// pinned tolerance, reporting one pass/fail line with the measured numbers.

#include <string>
#include <vector>

namespace eqi {

struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct CriterionOptions {
  // Sensitivity fixture: repeats the first pole's normal-frame orientation at
  // the second pole of the rotation strata. The Clifford symbol of the
  // normal rotation picks up the wrong sign there, so the two-pole
  // cancellation and the kernel-character comparison must both fail.
  bool flip_clifford_sign = false;
};

std::vector<std::string> criterion_names();
CriterionResult run_criterion(const std::string& name, const CriterionOptions& opt = {});
// every criterion whose name contains `filter` (empty = all), in fixed order
std::vector<CriterionResult> run_criteria(const std::string& filter = "",
                                          const CriterionOptions& opt = {});

}  // namespace eqi
