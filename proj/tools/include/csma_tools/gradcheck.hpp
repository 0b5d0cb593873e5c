#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace csma::tools {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t input_dim = 8;
  std::size_t hidden_dim = 6;
  std::size_t rows_per_class = 4;
  double step = 1e-6;
  double tolerance = 1e-5;
  // Adds a small offset to one analytic entry; the check must then fail.
  bool corrupt_gradient = false;
};

struct GradcheckCase {
  std::string name;
  std::size_t parameters = 0;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Entries whose gradients are both below this magnitude are compared
/// absolutely; central differences cannot resolve them relatively.
inline constexpr double kGradcheckFloor = 1e-3;

double relative_error(double analytic, double numeric) noexcept;

/// Central differences against the analytic gradients of the plain
/// autoencoder loss, the CSMA loss at lambda 0, 0.1 and 1, and the
/// classifier loss, on random weights and inputs drawn from `seed`.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace csma::tools
