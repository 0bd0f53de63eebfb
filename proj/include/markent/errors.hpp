#pragma once

#include <stdexcept>
#include <string>

namespace markent {

// Error taxonomy, mapped to process exit codes by the CLI:
//   input_error, geometry_domain_error, degenerate_error -> 2
//   accuracy_error, resource_error, internal_error       -> 3
// Experiment assertion failures are recorded in results and exit 1,
// they are not exceptions.

struct input_error : std::invalid_argument {
  explicit input_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Geodesic operation requested outside its validity region (injectivity radius).
struct geometry_domain_error : std::domain_error {
  explicit geometry_domain_error(const std::string& msg) : std::domain_error(msg) {}
};

// A formula hit a degenerate parameter combination (e.g. zero curvature /
// zero Fisher information in a bandwidth rule). The message names the
// documented fallback.
struct degenerate_error : std::domain_error {
  explicit degenerate_error(const std::string& msg) : std::domain_error(msg) {}
};

// Quadrature refinement failed to agree within the requested tolerance.
struct accuracy_error : std::runtime_error {
  explicit accuracy_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct resource_error : std::runtime_error {
  explicit resource_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct internal_error : std::logic_error {
  explicit internal_error(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace markent
