// Acceptance battery runner: prints one "criterion <id> PASS|FAIL <name>:
// <detail>" line per criterion and exits nonzero if any executed criterion
// fails. `--criterion N` restricts the run to a single criterion so a test
// harness can surface each as its own case.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "lqn/validate.hpp"

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      try {
        only = std::stoi(argv[++i]);
      } catch (const std::exception&) {
        std::cerr << "usage: acceptance_tests [--criterion N]\n";
        return 2;
      }
      if (only < 1 || only > lqn::kCriterionCount) {
        std::cerr << "criterion id must be in 1.." << lqn::kCriterionCount
                  << "\n";
        return 2;
      }
    } else {
      std::cerr << "usage: acceptance_tests [--criterion N]\n";
      return 2;
    }
  }

  std::vector<lqn::CriterionResult> results;
  if (only == 0) {
    results = lqn::run_all_criteria();
  } else {
    results.push_back(lqn::run_criterion(only));
  }

  bool all_pass = true;
  for (const auto& r : results) {
    std::cout << lqn::format_criterion_line(r) << "\n";
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}
