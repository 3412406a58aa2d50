#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "ringsim/analysis/peak_train.hpp"
#include "ringsim/analysis/stats.hpp"
#include "ringsim/core/error.hpp"
#include "ringsim/core/rng.hpp"
#include "ringsim/dynamics/propagator.hpp"

using namespace ringsim;

namespace {

const PhysicalConstants kRb = PhysicalConstants::rubidium87();

PeakTrainParams paper_like() {
  PeakTrainParams p;
  p.N0 = 1000.0;
  p.T_orb = 0.081;
  p.sigma0 = 1e-3;
  p.sigma_v = 0.018;
  p.v_bar = 0.85;
  p.tau = 0.18;
  p.probe_width = 3e-4;
  return p;
}

ProbeTrace synthesize(const PeakTrainParams& p, double noise, std::uint64_t seed, double t0 = 0.04,
                      double t1 = 0.6, double step = 5e-4) {
  ProbeTrace tr;
  auto rng = substream(seed, 0);
  const double scale = peak_train_model(p, p.T_orb);
  const int n = static_cast<int>(std::round((t1 - t0) / step));
  for (int i = 0; i <= n; ++i) {
    const double t = t0 + i * step;
    tr.delay.push_back(t);
    tr.signal.push_back(peak_train_model(p, t) + noise * scale * normal(rng));
  }
  return tr;
}

double simpson(const PeakTrainParams& p, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = peak_train_model(p, a) + peak_train_model(p, b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * peak_train_model(p, a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("no decay and no expansion gives identical peaks at n T") {
  PeakTrainParams p;
  p.T_orb = 0.07;
  p.sigma0 = 1e-3;
  p.v_bar = 0.9;
  const double h1 = peak_train_model(p, p.T_orb);
  for (int n = 2; n <= 8; ++n) CHECK(peak_train_model(p, n * p.T_orb) == doctest::Approx(h1).epsilon(1e-12));
  CHECK(peak_train_model(p, 1.5 * p.T_orb) < 1e-12 * h1);
  CHECK(h1 == doctest::Approx(1.0 / (std::sqrt(2.0 * std::numbers::pi) * p.sigma_n(1))));
}

TEST_CASE("envelope falls to 1/e at t = tau") {
  PeakTrainParams p = paper_like();
  PeakTrainParams still = p;
  still.tau = std::numeric_limits<double>::infinity();
  for (double t : {0.081, 0.162, 0.18, 0.3}) {
    CHECK(peak_train_model(p, t) / peak_train_model(still, t) == doctest::Approx(std::exp(-t / 0.18)).epsilon(1e-12));
  }
  CHECK(peak_train_model(p, 0.18) / peak_train_model(still, 0.18) == doctest::Approx(1.0 / std::numbers::e));
}

TEST_CASE("fifth peak width at 3.4 uK") {
  PeakTrainParams p;
  p.sigma_v = 0.018;
  p.T_orb = 0.081;
  p.v_bar = 0.85;
  CHECK(p.sigma_n(5) == doctest::Approx(0.018 * 5 * 0.081 / 0.85).epsilon(1e-12));
  CHECK(p.sigma_n(5) == doctest::Approx(8.6e-3).epsilon(0.01));
}

TEST_CASE("peak areas scale as exp(-n T / tau)") {
  PeakTrainParams p = paper_like();
  p.sigma_v = 0.0;
  p.sigma0 = 0.2e-3;
  p.probe_width = 0.0;
  const double T = p.T_orb;
  double prev = simpson(p, 0.5 * T, 1.5 * T, 4000);
  for (int n = 2; n <= 6; ++n) {
    const double a = simpson(p, (n - 0.5) * T, (n + 0.5) * T, 4000);
    CHECK(std::abs(a / prev - std::exp(-T / p.tau)) < 1e-6);
    prev = a;
  }
  const double s = p.sigma_n(3);
  CHECK(simpson(p, 2.5 * T, 3.5 * T, 4000) ==
        doctest::Approx(p.N0 * std::exp(-3 * T / p.tau + s * s / (2 * p.tau * p.tau))).epsilon(1e-9));
}

TEST_CASE("model is non-negative and validates parameters") {
  auto rng = substream(11, 0);
  for (int k = 0; k < 50; ++k) {
    PeakTrainParams p;
    p.N0 = 10.0 * uniform(rng);
    p.T_orb = 0.05 + 0.05 * uniform(rng);
    p.sigma0 = 2e-3 * uniform(rng);
    p.sigma_v = 0.03 * uniform(rng);
    p.v_bar = 0.7 + 0.3 * uniform(rng);
    p.tau = 0.05 + uniform(rng);
    p.beta = uniform(rng);
    p.tau_fill = 0.01 + 0.2 * uniform(rng);
    for (int i = 0; i < 40; ++i) CHECK(peak_train_model(p, 0.015 * i) >= 0.0);
  }
  PeakTrainParams bad;
  bad.T_orb = std::nan("");
  CHECK_THROWS_AS(peak_train_model(bad, 0.1), Error);
  bad = {};
  bad.sigma_v = -1.0;
  CHECK_THROWS_AS(peak_train_model(bad, 0.1), Error);
  bad = {};
  bad.tau = 0.0;
  CHECK_THROWS_AS(peak_train_model(bad, 0.1), Error);
}

TEST_CASE("analytic gradient matches central differences") {
  auto rng = substream(12, 0);
  int checked = 0;
  for (int k = 0; k < 20; ++k) {
    PeakTrainParams p;
    p.N0 = 1.0 + 10.0 * uniform(rng);
    p.T_orb = 0.06 + 0.03 * uniform(rng);
    p.sigma0 = 0.5e-3 + 1.5e-3 * uniform(rng);
    p.sigma_v = 0.005 + 0.03 * uniform(rng);
    p.v_bar = 0.7 + 0.3 * uniform(rng);
    p.tau = 0.1 + 0.5 * uniform(rng);
    p.beta = 0.01 + 0.5 * uniform(rng);
    p.tau_fill = 0.02 + 0.2 * uniform(rng);
    p.probe_width = 1e-4 + 5e-4 * uniform(rng);
    const int n = 1 + static_cast<int>(6 * uniform(rng));
    const double t = n * p.T_orb + (2.0 * uniform(rng) - 1.0) * p.sigma_n(n);
    const auto g = peak_train_gradient(p, t);
    const double s = peak_train_model(p, t);
    double* fields[] = {&p.N0, &p.T_orb, &p.sigma0, &p.sigma_v, &p.v_bar, &p.tau, &p.beta, &p.tau_fill, &p.probe_width};
    for (int j = 0; j < param_count; ++j) {
      double& x = *fields[j];
      const double x0 = x;
      const double h = 1e-6 * x0;
      x = x0 + h;
      const double up = peak_train_model(p, t);
      x = x0 - h;
      const double dn = peak_train_model(p, t);
      x = x0;
      const double fd = (up - dn) / (2.0 * h);
      // Relative to the larger of the derivative and the signal's own scale on this parameter.
      const double scale = std::max(std::abs(fd), s / x0);
      CHECK(std::abs(g[j] - fd) <= 1e-5 * scale);
      ++checked;
    }
  }
  CHECK(checked == 20 * param_count);
}

TEST_CASE("peak analysis on a clean trace") {
  const PeakTrainParams p = paper_like();
  const ProbeTrace tr = synthesize(p, 0.0, 1);
  const PeakAnalysis pa = analyze_peaks(tr, 3, p.probe_width);
  CHECK(pa.peaks.size() >= 6);
  CHECK(pa.period == doctest::Approx(p.T_orb).epsilon(2e-3));
  CHECK(pa.width_r2 > 0.99);
  CHECK(std::sqrt(pa.width_slope) * p.v_bar == doctest::Approx(p.sigma_v).epsilon(0.05));
  CHECK(pa.area_tau == doctest::Approx(p.tau).epsilon(0.05));
}

TEST_CASE("fit round trip with 1% noise") {
  const PeakTrainParams truth = paper_like();
  const ProbeTrace tr = synthesize(truth, 0.01, 2);
  PeakTrainParams fixed;
  fixed.v_bar = truth.v_bar;
  fixed.probe_width = truth.probe_width;
  const FitResult f = fit_peak_train(tr, {}, {}, fixed);
  CHECK(f.converged);
  CHECK(f.params.tau == doctest::Approx(truth.tau).epsilon(0.05));
  CHECK(f.params.T_orb == doctest::Approx(truth.T_orb).epsilon(0.05));
  CHECK(f.params.sigma_v == doctest::Approx(truth.sigma_v).epsilon(0.10));
  CHECK(f.residual_norm < f.initial_residual_norm);
  for (std::size_t i = 1; i < f.cost_history.size(); ++i) CHECK(f.cost_history[i] <= f.cost_history[i - 1]);

  const std::size_t np = f.names.size();
  REQUIRE(f.covariance.size() == np);
  for (std::size_t a = 0; a < np; ++a) {
    CHECK(f.covariance[a][a] >= 0.0);
    for (std::size_t b = 0; b < np; ++b) CHECK(f.covariance[a][b] == f.covariance[b][a]);
  }
  // sigma_tau should cover the actual error at a few sigma
  const auto it = std::find(f.names.begin(), f.names.end(), "tau");
  REQUIRE(it != f.names.end());
  CHECK(std::abs(f.params.tau - truth.tau) < 5.0 * f.sigma[it - f.names.begin()]);
}

TEST_CASE("fit with tied speed, background term and Poisson weights") {
  PeakTrainParams truth = paper_like();
  truth.N0 = 20.0;  // about 4000 counts at the first peak
  truth.beta = 30.0;
  truth.tau_fill = 0.1;
  truth.v_bar = 0.44 / truth.T_orb;
  ProbeTrace tr = synthesize(truth, 0.0, 3);
  auto rng = substream(3, 1);
  for (double& y : tr.signal) y = std::max(0.0, std::round(y + std::sqrt(y) * normal(rng)));
  FitOptions o;
  o.circumference = 0.44;
  o.weighting = Weighting::poisson;
  PeakTrainParams fixed;
  fixed.probe_width = truth.probe_width;
  const FitResult f = fit_peak_train(tr, {}, o, fixed);
  CHECK(f.converged);
  CHECK(f.params.v_bar == doctest::Approx(0.44 / f.params.T_orb).epsilon(1e-12));
  CHECK(f.params.T_orb == doctest::Approx(truth.T_orb).epsilon(0.01));
  CHECK(f.params.tau == doctest::Approx(truth.tau).epsilon(0.05));
  CHECK(f.params.sigma_v == doctest::Approx(truth.sigma_v).epsilon(0.10));
  // beta and tau_fill trade off; the late-time floor they produce is what the data pin down
  auto floor_at = [](const PeakTrainParams& q, double t) {
    return q.N0 * q.beta * -std::expm1(-t / q.tau_fill) * std::exp(-t / q.tau);
  };
  CHECK(floor_at(f.params, 0.4) == doctest::Approx(floor_at(truth, 0.4)).epsilon(0.15));
}

TEST_CASE("refitting a converged solution does not increase the residual") {
  const PeakTrainParams truth = paper_like();
  const ProbeTrace tr = synthesize(truth, 0.01, 4);
  PeakTrainParams fixed;
  fixed.v_bar = truth.v_bar;
  fixed.probe_width = truth.probe_width;
  const FitResult a = fit_peak_train(tr, {}, {}, fixed);
  const FitResult b = fit_peak_train(tr, a.params, {}, fixed);
  CHECK(b.residual_norm <= a.residual_norm * (1.0 + 1e-12));
  CHECK(b.converged);
  CHECK(b.gradient_norm < 1e-4);
}

TEST_CASE("degenerate traces are initialization errors") {
  ProbeTrace zero;
  for (int i = 0; i < 400; ++i) {
    zero.delay.push_back(0.04 + 1e-3 * i);
    zero.signal.push_back(0.0);
  }
  try {
    fit_peak_train(zero);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::statistics);
  }
  ProbeTrace tiny;
  tiny.delay = {0.1, 0.2};
  tiny.signal = {1.0, 2.0};
  CHECK_THROWS_AS(analyze_peaks(tiny), Error);
}

TEST_CASE("fit export carries parameters, uncertainties and the trace hash") {
  const PeakTrainParams truth = paper_like();
  PeakTrainParams fixed;
  fixed.v_bar = truth.v_bar;
  fixed.probe_width = truth.probe_width;
  const FitResult f = fit_peak_train(synthesize(truth, 0.01, 5), {}, {}, fixed);
  std::ostringstream os;
  write_fit_json(os, f, "abc123", kRb.mass());
  const auto j = nlohmann::json::parse(os.str());
  CHECK(j["trace_hash"] == "abc123");
  CHECK(j["params"]["tau_s"].get<double>() == f.params.tau);
  CHECK(j["uncertainty"].contains("tau"));
  CHECK(j["converged"].get<bool>() == f.converged);
  CHECK(j["azimuthal_temperature_K"].get<double>() == doctest::Approx(azimuthal_temperature(f.params.sigma_v, kRb.mass())));
}

TEST_CASE("azimuthal temperature examples") {
  CHECK(azimuthal_temperature(0.0180, kRb.mass()) == doctest::Approx(3.4e-6).epsilon(0.01));
  CHECK(azimuthal_temperature(0.0739, kRb.mass()) == doctest::Approx(57e-6).epsilon(0.01));
}

TEST_CASE("distribution statistics") {
  const double v_bar = 0.85;
  SUBCASE("identical samples") {
    const std::vector<double> v(10, 0.85);
    const auto s = distribution_stats(v, v_bar, kRb);
    CHECK(s.sigma_v == 0.0);
    CHECK(s.temperature == 0.0);
    CHECK(std::isinf(s.speed_ratio));
  }
  SUBCASE("single sample is invalid") {
    const std::vector<double> v{0.85};
    try {
      distribution_stats(v, v_bar, kRb);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.category() == ErrorCategory::invalid_input);
    }
  }
  SUBCASE("exact formulas with the rms estimator") {
    const std::vector<double> v{0.85 - 0.018 / std::sqrt(2.0), 0.85 + 0.018 / std::sqrt(2.0)};
    const auto s = distribution_stats(v, v_bar, kRb, SpreadEstimator::rms);
    CHECK(s.sigma_v == doctest::Approx(0.018).epsilon(1e-12));
    CHECK(s.temperature == doctest::Approx(kRb.mass() * 0.018 * 0.018 / kRb.kB()).epsilon(1e-12));
    CHECK(s.fwhm == doctest::Approx(2.3548 * 0.018).epsilon(1e-4));
    CHECK(s.speed_ratio == doctest::Approx(0.85 / 0.018).epsilon(1e-12));
  }
  SUBCASE("temperature round-trips sampling") {
    const double T = 3.4e-6;
    const double sv = std::sqrt(kRb.kB() * T / kRb.mass());
    const int n = 100000;
    auto rng = substream(21, 0);
    std::vector<double> v(n);
    for (double& x : v) x = v_bar + sv * normal(rng);
    const double tol = 3.0 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(distribution_stats(v, v_bar, kRb, SpreadEstimator::rms).temperature / T - 1.0) < tol);
    CHECK(std::abs(distribution_stats(v, v_bar, kRb).temperature / T - 1.0) < 2.0 * tol);
  }
}

TEST_CASE("compression temperature") {
  CHECK(compression_temperature(57e-6, 18.0, 18.0) == 57e-6);
  const double ratio = std::pow(4e-3 / 840e-6, 2.0);
  CHECK(ratio == doctest::Approx(22.7).epsilon(2e-3));
  const double t = compression_temperature(57e-6, 1.0, 22.7);
  CHECK(t == doctest::Approx(57e-6 * std::pow(22.7, 2.0 / 3.0)).epsilon(1e-14));
  CHECK(std::abs(t - 458e-6) < 2e-6);  // 457.0 uK; 458 is the rounded reference
  CHECK(compression_temperature(1e-6, 1.0, 8.0, 1.0) == doctest::Approx(8e-6));
  CHECK_THROWS_AS(compression_temperature(1e-6, 0.0, 1.0), Error);
}

TEST_CASE("interferometer metrics") {
  const auto m = interferometer_metrics(7, 0.01);
  CHECK(m.path == doctest::Approx(7 * 2 * std::numbers::pi * 0.01).epsilon(1e-15));
  CHECK(std::abs(m.path - 0.440) < 5e-4);
  CHECK(m.area * 1e6 == doctest::Approx(4398.0).epsilon(1e-3));
  const auto single = interferometer_metrics(7, 0.01, AreaConvention::single_path);
  CHECK(m.area == 2.0 * single.area);
  CHECK(m.path == single.path);
  const auto zero = interferometer_metrics(0, 0.01);
  CHECK(zero.area == 0.0);
  CHECK(zero.path == 0.0);
  CHECK_THROWS_AS(interferometer_metrics(-1, 0.01), Error);
}

namespace {

// Linear 2D quadrupole B = G(t) (y, x, 0) with G ramped exponentially.
class RampedQuadrupole final : public FieldSource {
 public:
  RampedQuadrupole(double g0, double g1, double t_ramp) : g0_(g0), rate_(std::log(g1 / g0) / t_ramp), t_ramp_(t_ramp) {}
  double gradient(double t) const { return g0_ * std::exp(rate_ * std::min(std::max(t, 0.0), t_ramp_)); }
  FieldSample sample(const Vec3& p, double t) const override {
    const double g = gradient(t);
    FieldSample s;
    s.B = Vec3{g * p.y, g * p.x, 0.0};
    s.J = Mat3::zero();
    s.J(0, 1) = g;
    s.J(1, 0) = g;
    return s;
  }

 private:
  double g0_, rate_, t_ramp_;
};

}  // namespace

TEST_CASE("slow compression of a linear trap heats with exponent 2/3") {
  const double g0 = 1.0, g1 = 8.0, t_ramp = 0.1;
  const RampedQuadrupole field(g0, g1, t_ramp);
  GravityFrame grav;
  grav.enabled = false;
  IntegratorConfig cfg;
  cfg.dt = 5e-6;
  cfg.refine_eta = 0.2;
  const int atoms = 60;
  const int marks = 5;
  std::vector<double> mean_energy(marks + 1, 0.0);
  auto rng = substream(31, 0);
  for (int a = 0; a < atoms; ++a) {
    AtomState s;
    s.position = Vec3{150e-6 * normal(rng), 150e-6 * normal(rng), 0.0};
    s.velocity = Vec3{0.05 * normal(rng), 0.05 * normal(rng), 0.0};
    Propagator prop(field, kRb, grav, cfg);
    prop.prime(s);
    mean_energy[0] += prop.energy(s) / atoms;
    for (int k = 1; k <= marks; ++k) {
      REQUIRE(prop.run_until(s, t_ramp * k / marks, [](const AtomState&, AtomState&, const FieldSample&) { return true; }));
      mean_energy[k] += prop.energy(s) / atoms;
    }
  }
  // regress log E on log G
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k <= marks; ++k) {
    const double x = std::log(field.gradient(t_ramp * k / marks));
    const double y = std::log(mean_energy[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = marks + 1;
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(2.0 / 3.0).epsilon(0.03));
  CHECK(compression_temperature(1.0, g0, g1, slope) == doctest::Approx(mean_energy[marks] / mean_energy[0]).epsilon(0.05));
}
