#pragma once

#include "ringsim/core/constants.hpp"
#include "ringsim/magnetics/field.hpp"
#include "ringsim/magnetics/geometry.hpp"

namespace ringsim {

/// U = mu_m |B| + m g h. The field is evaluated at time t.
double total_potential(const Vec3& p, const FieldSource& source, const PhysicalConstants& constants,
                       const GravityFrame& gravity, double t = 0.0);

struct TrapCharacterization {
  double gradient_center = 0.0;       // T/m at the field zero
  Vec3 field_zero;                    // m
  Vec3 saddle_point;                  // m
  double saddle_field = 0.0;          // T
  double ideal_saddle_field = 0.0;    // mu0 I/(pi d) for the ideal two-wire guide
  double depth = 0.0;                 // J, = mu_m * saddle_field
  double depth_kelvin = 0.0;          // K
  double effective_frequency = 0.0;   // Hz, 1-D linear-well oscillation at the thermal energy
  double loss_radius = 0.0;           // m
  double mu_m = 0.0;                  // moment used for depth and loss radius
};

struct TrapOptions {
  double thermal_energy = codata::kB * 57e-6;  // J
  double kappa = 1.0;                          // loss-radius model constant
  double fd_step = 1e-7;                       // m
};

/// Static trap properties of a two-wire guide cross-section at the guide origin.
TrapCharacterization characterize_trap(const GuideGeometry& guide, const PhysicalConstants& constants,
                                       const TrapOptions& opts = {});

/// Same for the ring cross-section at azimuth 0 (closed-form loops, no junction).
TrapCharacterization characterize_trap(const RingGeometry& ring, const PhysicalConstants& constants,
                                       const TrapOptions& opts = {});

/// Loss radius b0 = sqrt(kappa hbar v / (mu_m B')).
double loss_radius(double gradient, double transverse_speed, const PhysicalConstants& constants, double kappa);

/// f = mu_m B' / (4 sqrt(2 m E)): oscillation frequency at energy E in U = mu_m B' |x|.
double linear_well_frequency(double gradient, double energy, const PhysicalConstants& constants);

}  // namespace ringsim
