#include "ringsim/analysis/stats.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ringsim/core/error.hpp"
#include "ringsim/ensemble/shaping.hpp"

namespace ringsim {

DistributionStats distribution_stats(std::span<const double> samples, double v_bar, const PhysicalConstants& constants,
                                     SpreadEstimator estimator) {
  require(samples.size() >= 2, ErrorCategory::invalid_input, "distribution_stats needs at least 2 samples");
  require(std::isfinite(v_bar), ErrorCategory::invalid_input, "v_bar must be finite");
  DistributionStats s;
  double sum = 0.0;
  for (double x : samples) {
    require(std::isfinite(x), ErrorCategory::invalid_input, "samples must be finite");
    sum += x;
  }
  s.mean = sum / static_cast<double>(samples.size());
  if (estimator == SpreadEstimator::robust) {
    s.sigma_v = robust_sigma(samples);
  } else {
    double ss = 0.0;
    for (double x : samples) ss += (x - s.mean) * (x - s.mean);
    s.sigma_v = std::sqrt(ss / static_cast<double>(samples.size() - 1));
  }
  s.temperature = constants.mass() * s.sigma_v * s.sigma_v / constants.kB();
  s.fwhm = 2.3548200450309493 * s.sigma_v;
  s.speed_ratio = s.sigma_v > 0.0 ? v_bar / s.sigma_v : std::numeric_limits<double>::infinity();
  return s;
}

double compression_temperature(double T_in, double grad_in, double grad_out, double exponent) {
  require(grad_in > 0.0 && grad_out > 0.0, ErrorCategory::invalid_input, "gradients must be positive");
  require(T_in >= 0.0 && std::isfinite(T_in) && std::isfinite(exponent), ErrorCategory::invalid_input,
          "T_in must be >= 0 and the exponent finite");
  return T_in * std::pow(grad_out / grad_in, exponent);
}

InterferometerMetrics interferometer_metrics(double n_rev, double radius, AreaConvention convention) {
  require(n_rev >= 0.0 && std::isfinite(n_rev), ErrorCategory::invalid_input, "n_rev must be >= 0");
  require(radius >= 0.0 && std::isfinite(radius), ErrorCategory::invalid_input, "radius must be >= 0");
  InterferometerMetrics m;
  m.path = n_rev * 2.0 * std::numbers::pi * radius;
  m.area = n_rev * std::numbers::pi * radius * radius;
  if (convention == AreaConvention::sagnac_pair) m.area *= 2.0;
  return m;
}

}  // namespace ringsim
