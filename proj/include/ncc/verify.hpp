#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ncc/operators.hpp"

namespace ncc {

struct IdentityCheck {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct VerifyOptions {
  int directions = 20;
  std::uint64_t seed = 1;
  SchemeOptions scheme;
  Exec exec = Exec::parallel;
};

struct VerifyReport {
  std::vector<IdentityCheck> checks;
  double information_quadrature = 0.0;
  double information_closed_form = 0.0;

  [[nodiscard]] bool all_passed() const;
};

/// Runs the operator identity suite on a null configuration with every
/// group size >= 3. Residuals are maxima over the random directions.
VerifyReport run_identity_suite(const ModelConfig& config, const VerifyOptions& options = {});

void write_verify_csv(std::ostream& out, const VerifyReport& report);
void write_verify_text(std::ostream& out, const VerifyReport& report);

}  // namespace ncc
