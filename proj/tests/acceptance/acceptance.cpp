#include <cstdio>
#include <exception>

#include "merged/verify.hpp"

int main() {
  using namespace merged::verify;
  VerifyOptions opt;
  int failed = 0;
  try {
    for (const auto& r : run_all(opt)) {
      std::printf("%s criterion %d: %s (%.1f s)\n", r.passed() ? "PASS" : "FAIL", r.id, r.title.c_str(),
                  r.seconds);
      for (const auto& c : r.checks) {
        if (c.passed) continue;
        std::printf("    %s = %.6g, needs %s %.6g %s\n", c.name.c_str(), c.value,
                    std::string(to_string(c.comparison)).c_str(), c.threshold, c.detail.c_str());
      }
      if (!r.passed()) ++failed;
    }
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
