#pragma once

#include <span>
#include <vector>

namespace ringsim {

enum class ShapeMode { keep, remove };

struct ShapingOutcome {
  double center = 0.0;       // median of the input coordinates
  double fwhm = 0.0;         // 2.3548 x robust sigma
  double half_window = 0.0;
  std::vector<char> survives;
  std::size_t removed = 0;
};

/// Robust sigma from the interquartile range (IQR / 1.34898).
double robust_sigma(std::span<const double> x);
double median(std::span<const double> x);

/// Window of `fraction` x FWHM centered on the median of `coordinate`. keep:
/// atoms inside survive; remove: atoms inside are removed.
ShapingOutcome shape_velocity(std::span<const double> coordinate, double fraction, ShapeMode mode);

}  // namespace ringsim
