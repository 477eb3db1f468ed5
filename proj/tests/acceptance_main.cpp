#include <fstream>
#include <iostream>
#include <string>

#include "levypide/app.hpp"

// Usage: acceptance [filter] [json-out]
int main(int argc, char** argv) {
  const std::string filter = argc > 1 ? argv[1] : "";
  const auto results = levypide::app::run_acceptance(filter, std::cout);
  if (argc > 2) std::ofstream(argv[2]) << levypide::app::acceptance_json(results) << '\n';
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
  return results.empty() || failed ? 1 : 0;
}
