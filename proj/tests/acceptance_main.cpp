// Runs acceptance criteria 1-12 and prints one PASS/FAIL line per criterion.
// Usage: acceptance_tests [id ...]

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "shaken/acceptance.hpp"

int main(int argc, char** argv) {
  shaken::AcceptanceOptions options;
  for (int i = 1; i < argc; ++i) options.only.push_back(std::atoi(argv[i]));
  options.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  options.on_result = [](const shaken::CriterionResult& r) {
    std::cout << shaken::format_result(r) << std::endl;
  };
  int failed = 0;
  const auto results = shaken::run_acceptance(options);
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
