#include "ringsim/dynamics/majorana.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ringsim/core/error.hpp"
#include "ringsim/core/rng.hpp"
#include "ringsim/dynamics/spin.hpp"
#include "ringsim/magnetics/field.hpp"

namespace ringsim {

std::pair<double, double> fit_survival_lifetime(const std::vector<double>& t, const std::vector<double>& survival,
                                                std::size_t at_risk, std::size_t events, double min_survival) {
  double sw = 0, st = 0, sy = 0, stt = 0, sty = 0;
  int used = 0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double S = survival[k];
    if (t[k] <= 0.0 || S < min_survival || S >= 1.0) continue;
    // variance of ln S for a binomial survival fraction
    const double var = (1.0 - S) / (static_cast<double>(at_risk) * S);
    const double w = 1.0 / var;
    const double y = std::log(S);
    sw += w;
    st += w * t[k];
    sy += w * y;
    stt += w * t[k] * t[k];
    sty += w * t[k] * y;
    ++used;
  }
  require(used >= 2, ErrorCategory::statistics, "too few survival points to fit a lifetime");
  const double det = sw * stt - st * st;
  const double slope = (sw * sty - st * sy) / det;
  const double slope_var = sw / det;
  require(slope < 0.0, ErrorCategory::statistics, "survival curve does not decay");
  const double tau = -1.0 / slope;
  const double sigma_fit = tau * tau * std::sqrt(slope_var);
  const double sigma_count = events > 0 ? tau / std::sqrt(static_cast<double>(events)) : tau;
  return {tau, std::max(sigma_fit, sigma_count)};
}

double allowed_area(const GuideGeometry& guide, const PhysicalConstants& constants, double energy) {
  const GuideField field(guide);
  const Vec3 ex = guide.bisector_axis();
  const Vec3 ey = guide.separation_axis;
  auto U = [&](const Vec3& p) { return constants.mu_m() * norm(field.field(p, 0.0)); };
  const double step = 0.01 * guide.separation;
  const int n = 128;
  double area = 0.0;
  for (int k = 0; k < n; ++k) {
    const double th = 2.0 * codata::pi * k / n;
    const Vec3 dir = ex * std::cos(th) + ey * std::sin(th);
    double lo = 0.0, hi = step;
    while (U(guide.origin + dir * hi) < energy) {
      lo = hi;
      hi += step;
      require(hi < guide.separation, ErrorCategory::invalid_input, "energy above the trap depth");
    }
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (U(guide.origin + dir * mid) < energy ? lo : hi) = mid;
    }
    const double r = 0.5 * (lo + hi);
    area += 0.5 * r * r * (2.0 * codata::pi / n);
  }
  return area;
}

double flip_cross_section(const PhysicalConstants& constants, int phases, int points, std::uint64_t seed) {
  require(phases >= 1 && points >= 2, ErrorCategory::invalid_input, "spin oracle needs samples");
  // dimensionless setup: any (v, B') pair gives the same curve in units of b_v
  GuideGeometry g;
  const QuadrupoleField quad(g);
  const double v = 0.07;
  const double b_v = std::sqrt(constants.hbar() * v / (constants.mu_m() * quadrupole_gradient(g)));
  const Vec3 ex = g.bisector_axis();
  const Vec3 ey = g.separation_axis;
  const double half = 150.0 * b_v;
  SpinOptions so;
  so.adiabatic_cutoff = 1e-3;
  std::vector<double> beta, prob;
  const double beta_max = 3.0;
  for (int j = 0; j < points; ++j) {
    const double bj = beta_max * j / (points - 1);
    std::vector<AtomState> path(201);
    for (int k = 0; k <= 200; ++k) {
      auto& s = path[static_cast<std::size_t>(k)];
      s.t = (2.0 * half / v) * k / 200.0;
      s.position = ex * (-half + v * s.t) + ey * (bj * b_v);
      s.velocity = ex * v;
    }
    int flips = 0;
    for (int i = 0; i < phases; ++i) {
      auto rng = substream(seed, static_cast<std::uint64_t>(j) * 100003u + static_cast<std::uint64_t>(i), 11);
      path.front().spin =
          trapped_spin(quad.field(path.front().position, 0.0), 0.1, 2.0 * codata::pi * uniform(rng));
      const auto h = precess_spin(path, quad, constants, so);
      if (!h.flips.empty() && h.flips.back().to_untrapped) ++flips;
    }
    beta.push_back(bj);
    prob.push_back(static_cast<double>(flips) / phases);
  }
  double integral = 0.0;
  for (std::size_t j = 1; j < beta.size(); ++j) integral += 0.5 * (prob[j] + prob[j - 1]) * (beta[j] - beta[j - 1]);
  return integral;
}

LifetimeEstimate majorana_lifetime_estimate(const TransverseCloud& cloud, const GuideGeometry& guide,
                                            const TrapCharacterization& tc, const PhysicalConstants& constants,
                                            const MajoranaOptions& opts) {
  guide.validate();
  require(cloud.temperature >= 0.0 && cloud.position_sigma >= 0.0, ErrorCategory::invalid_input,
          "cloud temperature and size must be non-negative");
  require(opts.t_max > 0.0 && opts.curve_points >= 2, ErrorCategory::invalid_input,
          "invalid lifetime-estimate options");
  require(tc.loss_radius >= 0.0 && std::isfinite(tc.loss_radius), ErrorCategory::invalid_input,
          "loss radius must be finite and non-negative");
  require(cloud.atoms >= 100, ErrorCategory::statistics,
          "at least 100 atoms are needed for a lifetime estimate (got " + std::to_string(cloud.atoms) + ")");

  LifetimeEstimate out;
  const GuideField field(guide);
  const double depth = constants.mu_m() * tc.saddle_field;
  const double sv = std::sqrt(constants.kB() * cloud.temperature / constants.mass());
  const double gradient = tc.gradient_center;
  const Vec3 ex = guide.bisector_axis();
  const Vec3 ey = guide.separation_axis;

  double oracle = 0.0;
  if (opts.method == MajoranaMethod::spin_oracle) {
    oracle = flip_cross_section(constants, opts.oracle_phases, opts.oracle_points, opts.seed);
    out.effective_radius_ratio = oracle;
  }

  // per-atom loss times; +infinity when the atom never crosses inside the radius
  std::vector<double> loss_times;
  for (std::size_t i = 0; i < cloud.atoms; ++i) {
    auto rng = substream(opts.seed, i, 7);
    const Vec3 p = guide.origin + ex * (cloud.position_sigma * normal(rng)) + ey * (cloud.position_sigma * normal(rng));
    const Vec3 v = ex * (sv * normal(rng)) + ey * (sv * normal(rng));
    const double draw = exponential(rng, 1.0);
    const double energy = 0.5 * constants.mass() * norm2(v) + constants.mu_m() * norm(field.field(p, 0.0));
    if (!(energy < depth) || norm(p - guide.origin) >= 0.5 * guide.separation) {
      ++out.censored;
      continue;
    }
    const double v0 = std::sqrt(2.0 * energy / constants.mass());
    const double b = opts.method == MajoranaMethod::loss_disk
                         ? tc.loss_radius
                         : oracle * std::sqrt(constants.hbar() * v0 / (constants.mu_m() * gradient));
    const double rate = 2.0 * b * v0 / allowed_area(guide, constants, energy);
    loss_times.push_back(rate > 0.0 ? draw / rate : std::numeric_limits<double>::infinity());
  }
  const std::size_t at_risk = loss_times.size();
  require(at_risk >= 100, ErrorCategory::statistics,
          "fewer than 100 atoms below the barrier (" + std::to_string(at_risk) + ")");
  std::sort(loss_times.begin(), loss_times.end());
  out.atoms = at_risk;
  out.lost = static_cast<std::size_t>(std::upper_bound(loss_times.begin(), loss_times.end(), opts.t_max) -
                                      loss_times.begin());
  for (int k = 0; k <= opts.curve_points; ++k) {
    const double t = opts.t_max * k / opts.curve_points;
    const auto lost = static_cast<double>(std::upper_bound(loss_times.begin(), loss_times.end(), t) -
                                          loss_times.begin());
    out.t.push_back(t);
    out.survival.push_back(1.0 - lost / static_cast<double>(at_risk));
  }
  if (out.lost == 0) {
    out.tau = std::numeric_limits<double>::infinity();
    out.sigma = std::numeric_limits<double>::infinity();
    return out;
  }
  const auto [tau, sigma] = fit_survival_lifetime(out.t, out.survival, at_risk, out.lost, opts.min_survival);
  out.tau = tau;
  out.sigma = sigma;
  return out;
}

}  // namespace ringsim
