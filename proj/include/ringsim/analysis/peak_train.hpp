#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ringsim/ensemble/probe.hpp"

namespace ringsim {

struct PeakTrainParams {
  double N0 = 1.0;
  double T_orb = 0.081;        // s
  double sigma0 = 0.0;         // m
  double sigma_v = 0.0;        // m/s
  double v_bar = 0.85;         // m/s
  double tau = std::numeric_limits<double>::infinity();  // s
  double beta = 0.0;           // background amplitude fraction
  double tau_fill = 0.1;       // s
  double probe_width = 0.0;    // s, rms of the probe convolution

  void validate() const;

  /// Width of peak n in time.
  double sigma_n(int n) const;

  friend bool operator==(const PeakTrainParams&, const PeakTrainParams&) = default;
};

/// S(t) = e^{-t/tau} sum_{n>=1} N0/(sqrt(2 pi) s_n) exp(-(t - n T)^2 / (2 s_n^2))
///        + N0 beta (1 - e^{-t/tau_fill}) e^{-t/tau},
/// s_n^2 = (sigma0^2 + sigma_v^2 (n T)^2) / v_bar^2 + probe_width^2.
double peak_train_model(const PeakTrainParams& p, double t);

enum class Param { N0, T_orb, sigma0, sigma_v, v_bar, tau, beta, tau_fill, probe_width };
inline constexpr int param_count = 9;

/// Partial derivatives of the model with respect to every parameter, in Param order.
std::array<double, param_count> peak_train_gradient(const PeakTrainParams& p, double t);

struct DetectedPeak {
  int n = 0;             // revolution index
  double t = 0.0;        // s, centroid
  double height = 0.0;   // above the local floor
  double area = 0.0;     // signal x s
  double sigma = 0.0;    // s, rms width
};

struct PeakAnalysis {
  double period = 0.0;           // s, from the autocorrelation, refined by peak positions
  std::vector<DetectedPeak> peaks;
  double floor = 0.0;            // late-time signal floor
  /// sigma_t^2 = a + b (n T)^2 regression over the detected peaks.
  double width_intercept = 0.0;
  double width_slope = 0.0;
  double width_r2 = 0.0;
  /// log(area) = c - t / tau regression.
  double area_log_intercept = 0.0;
  double area_tau = std::numeric_limits<double>::infinity();
};

/// Finds revolution peaks (revolution index n at delay ~ n T). Throws a
/// statistics error when fewer than `min_peaks` peaks stand out.
PeakAnalysis analyze_peaks(const ProbeTrace& trace, int min_peaks = 3, double probe_width = 0.0);

enum class Weighting { uniform, poisson };

struct FitOptions {
  /// Ties v_bar = circumference / T_orb when set; otherwise v_bar stays fixed.
  std::optional<double> circumference;
  bool fit_background = true;
  bool fit_sigma0 = true;
  Weighting weighting = Weighting::uniform;
  int max_iterations = 200;
  double tolerance = 1e-10;      // relative cost change and scaled step size
};

struct FitResult {
  PeakTrainParams params;
  std::vector<std::string> names;             // free parameters, in covariance order
  std::vector<std::vector<double>> covariance;
  std::vector<double> sigma;                  // sqrt of the covariance diagonal
  double residual_norm = 0.0;
  double initial_residual_norm = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
  std::vector<double> cost_history;           // accepted steps
};

/// Levenberg-Marquardt on sum (S_model - S_data)^2 (optionally Poisson
/// weighted). Without `init`, starting values come from analyze_peaks.
FitResult fit_peak_train(const ProbeTrace& trace, const std::optional<PeakTrainParams>& init = {},
                         const FitOptions& opts = {}, const PeakTrainParams& fixed = {});

/// Azimuthal temperature m sigma_v^2 / kB.
double azimuthal_temperature(double sigma_v, double mass);

void write_fit_json(std::ostream& os, const FitResult& fit, const std::string& trace_hash, double mass);

}  // namespace ringsim
