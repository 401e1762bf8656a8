#pragma once

#include <ostream>
#include <string>

namespace xfer {

struct SelftestOptions {
  /// Name of a fixture whose embedded data is deliberately corrupted before
  /// checking; exercises the failure path.
  std::string corrupt_fixture;
};

/// Runs the embedded fixture suite, printing one PASS/FAIL line per fixture.
/// Returns true when every fixture passes.
bool run_selftest(std::ostream& out, const SelftestOptions& options = {});

}  // namespace xfer
