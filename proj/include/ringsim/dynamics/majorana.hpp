#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ringsim/core/constants.hpp"
#include "ringsim/magnetics/geometry.hpp"
#include "ringsim/magnetics/trap.hpp"

namespace ringsim {

enum class MajoranaMethod { loss_disk, spin_oracle };

/// Transverse phase-space distribution of atoms in a straight guide section.
struct TransverseCloud {
  std::size_t atoms = 2000;
  double temperature = 57e-6;     // K, per transverse velocity axis
  double position_sigma = 100e-6; // m, per transverse axis
};

struct MajoranaOptions {
  MajoranaMethod method = MajoranaMethod::loss_disk;
  std::uint64_t seed = 1;
  double t_max = 2.0;             // s, span of the survival curve
  int curve_points = 80;
  double min_survival = 0.05;     // survival points below this are not fitted
  int oracle_phases = 100;        // spin-oracle samples per impact parameter
  int oracle_points = 31;         // impact parameters in [0, 3] b_v
};

struct LifetimeEstimate {
  double tau = 0.0;          // s; +infinity when no losses are possible
  double sigma = 0.0;        // s
  double effective_radius_ratio = 0.0;  // spin oracle: b_eff / sqrt(hbar v / (mu_m B'))
  std::size_t atoms = 0;     // atoms in the risk set at t = 0
  std::size_t lost = 0;      // Majorana losses before t_max
  std::size_t censored = 0;  // atoms above the barrier, excluded from the risk set
  std::vector<double> t;
  std::vector<double> survival;  // surviving fraction of the risk set at t
};

/// Majorana lifetime of a transverse cloud in the exact two-wire field.
///
/// Transverse motion is taken as ergodic on each energy shell: an atom of
/// energy E crosses the zero line at impact parameter below b at the rate
/// 2 b v0 / A(E), with v0 its speed at the zero and A(E) the area of the
/// shell's allowed region. loss_disk uses b = tc.loss_radius; spin_oracle
/// replaces the disk by the flip probability of straight passes obtained from
/// classical precession. Per-atom loss times are drawn from the resulting
/// rates and the survival curve is fitted with an exponential.
LifetimeEstimate majorana_lifetime_estimate(const TransverseCloud& cloud, const GuideGeometry& guide,
                                            const TrapCharacterization& tc, const PhysicalConstants& constants,
                                            const MajoranaOptions& opts = {});

/// Area of {mu_m |B| < energy} in the guide cross-section at the origin.
double allowed_area(const GuideGeometry& guide, const PhysicalConstants& constants, double energy);

/// Integral over impact parameter (in units of sqrt(hbar v / (mu_m B'))) of the
/// flip probability of a straight pass through an ideal quadrupole.
double flip_cross_section(const PhysicalConstants& constants, int phases, int points, std::uint64_t seed);

/// Weighted log-linear fit of an exponential to a survival curve.
/// `at_risk` is the initial risk-set size. Returns {tau, sigma}.
std::pair<double, double> fit_survival_lifetime(const std::vector<double>& t, const std::vector<double>& survival,
                                                std::size_t at_risk, std::size_t events, double min_survival);

}  // namespace ringsim
