#include "ringsim/ensemble/shaping.hpp"

#include <algorithm>
#include <cmath>

#include "ringsim/core/error.hpp"

namespace ringsim {

namespace {

// Linear interpolation between order statistics (type 7).
double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

std::vector<double> sorted(std::span<const double> x) {
  require(x.size() >= 2, ErrorCategory::invalid_input, "at least two samples required");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

double median(std::span<const double> x) { return quantile_sorted(sorted(x), 0.5); }

double robust_sigma(std::span<const double> x) {
  const auto s = sorted(x);
  return (quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25)) / 1.3489795003921634;
}

ShapingOutcome shape_velocity(std::span<const double> coordinate, double fraction, ShapeMode mode) {
  require(fraction > 0.0 && std::isfinite(fraction), ErrorCategory::invalid_input, "window fraction must be positive");
  ShapingOutcome out;
  out.center = median(coordinate);
  out.fwhm = 2.3548200450309493 * robust_sigma(coordinate);
  out.half_window = 0.5 * fraction * out.fwhm;
  out.survives.resize(coordinate.size());
  for (std::size_t i = 0; i < coordinate.size(); ++i) {
    const bool inside = std::abs(coordinate[i] - out.center) <= out.half_window;
    out.survives[i] = (mode == ShapeMode::keep) == inside;
    if (!out.survives[i]) ++out.removed;
  }
  return out;
}

}  // namespace ringsim
