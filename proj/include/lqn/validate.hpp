#pragma once

#include <string>
#include <vector>

namespace lqn {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

// Runs one validation criterion (1-based id). Throws std::invalid_argument
// for an unknown id.
CriterionResult run_criterion(int id);

// Runs the full battery in order.
std::vector<CriterionResult> run_all_criteria();

inline constexpr int kCriterionCount = 11;

// One line per criterion: "criterion <id> PASS|FAIL <name>: <detail>".
std::string format_criterion_line(const CriterionResult& r);

}  // namespace lqn
