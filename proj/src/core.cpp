#include <cmath>

#include "ringsim/core/constants.hpp"
#include "ringsim/core/error.hpp"

namespace ringsim {

std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_input: return "invalid_input";
    case ErrorCategory::geometry: return "geometry";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::singularity: return "singularity";
    case ErrorCategory::accuracy: return "accuracy";
    case ErrorCategory::statistics: return "statistics";
    case ErrorCategory::schedule: return "schedule";
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::io: return "io";
  }
  return "unknown";
}

PhysicalConstants PhysicalConstants::rubidium87() {
  return PhysicalConstants(codata::mass_rb87, -0.5, -1.0);
}

PhysicalConstants::PhysicalConstants(double mass, double gF, double mF, double g_grav)
    : mass_(mass), gF_(gF), mF_(mF), g_grav_(g_grav), mu_m_(std::abs(gF * mF) * codata::muB) {
  require(mass > 0.0 && std::isfinite(mass), ErrorCategory::invalid_input, "mass must be positive");
  require(g_grav >= 0.0 && std::isfinite(g_grav), ErrorCategory::invalid_input,
          "gravitational acceleration must be non-negative");
  require(mu_m_ > 0.0, ErrorCategory::invalid_input, "|gF mF| must be non-zero");
}

PhysicalConstants PhysicalConstants::with_moment(double mu_m) const {
  require(mu_m > 0.0 && std::isfinite(mu_m), ErrorCategory::invalid_input,
          "magnetic moment must be positive");
  PhysicalConstants c = *this;
  c.mu_m_ = mu_m;
  return c;
}

PhysicalConstants PhysicalConstants::with_gravity(double g_grav) const {
  require(g_grav >= 0.0 && std::isfinite(g_grav), ErrorCategory::invalid_input,
          "gravitational acceleration must be non-negative");
  PhysicalConstants c = *this;
  c.g_grav_ = g_grav;
  return c;
}

}  // namespace ringsim
