// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <cstdio>
#include <string>

#include "property_suite.hpp"

int main(int argc, char** argv) {
  suite::Scale scale;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quick") scale.quick = true;
    else if (arg == "--out" && i + 1 < argc) scale.out_dir = argv[++i];
  }
  int failures = 0;
  suite::run_all(scale, [&](const suite::Outcome& o) {
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", o.id, o.name.c_str(),
                o.detail.c_str(), o.seconds);
    std::fflush(stdout);
  });
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
