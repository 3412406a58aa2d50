#pragma once

#include <span>

#include "ringsim/core/constants.hpp"

namespace ringsim {

enum class SpreadEstimator { robust, rms };

struct DistributionStats {
  double mean = 0.0;
  double sigma_v = 0.0;
  double temperature = 0.0;   // K, m sigma_v^2 / kB
  double fwhm = 0.0;          // 2.3548 sigma_v
  double speed_ratio = 0.0;   // v_bar / sigma_v; +infinity when sigma_v == 0
};

/// Robust spread is IQR / 1.34898 (Gaussian-consistent); rms is the sample
/// standard deviation.
DistributionStats distribution_stats(std::span<const double> samples, double v_bar, const PhysicalConstants& constants,
                                     SpreadEstimator estimator = SpreadEstimator::robust);

/// T_out = T_in (grad_out / grad_in)^exponent.
double compression_temperature(double T_in, double grad_in, double grad_out, double exponent = 2.0 / 3.0);

enum class AreaConvention { single_path, sagnac_pair };

struct InterferometerMetrics {
  double area = 0.0;   // m^2
  double path = 0.0;   // m
};

InterferometerMetrics interferometer_metrics(double n_rev, double radius, AreaConvention convention = AreaConvention::sagnac_pair);

}  // namespace ringsim
