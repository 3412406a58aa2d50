#pragma once

#include <cstdint>
#include <vector>

#include "ringsim/core/constants.hpp"
#include "ringsim/dynamics/atom.hpp"
#include "ringsim/magnetics/field.hpp"

namespace ringsim {

enum class CloudPlacement { guide, ring };

/// Thermal cloud. "Longitudinal" is the guide axis (downward) for guide
/// placement and the ring tangent (increasing azimuth) for ring placement.
struct CloudSpec {
  std::size_t atoms = 1000;
  CloudPlacement placement = CloudPlacement::guide;
  double height = 0.04;          // m above the guide/ring tangent point (guide placement)
  double azimuth = 0.0;          // rad, center (ring placement)
  double sigma_long = 0.5e-3;    // m
  double sigma_trans = 0.3e-3;   // m, each transverse axis
  double T_long = 3e-6;          // K
  double T_trans = 57e-6;        // K
  double mean_speed = 0.0;       // m/s along the longitudinal direction

  void validate() const;

  friend bool operator==(const CloudSpec&, const CloudSpec&) = default;
};

/// Local frame of a straight cloud: center plus orthonormal longitudinal and
/// transverse axes.
struct CloudFrame {
  Vec3 center;
  Vec3 e_long{0, 0, -1};
  Vec3 e_t1{1, 0, 0};
  Vec3 e_t2{0, 1, 0};
};

/// Gaussian positions and Maxwell-Boltzmann velocities about `frame`; spins
/// anti-aligned with `field` (if given) at time t0. Atom i draws from
/// substream(seed, i, stream).
std::vector<AtomState> sample_cloud(const CloudSpec& spec, const CloudFrame& frame, const PhysicalConstants& constants,
                                    std::uint64_t seed, std::uint64_t stream = 0, const FieldSource* field = nullptr,
                                    double t0 = 0.0);

/// Cloud laid along a circle of radius `radius` about `ring`'s center, in the ring plane:
/// longitudinal offsets follow the arc, transverse ones are radial and axial.
/// With `gravity`, the drawn longitudinal speed is the speed at height zero and
/// each atom's local speed follows from energy conservation.
std::vector<AtomState> sample_ring_cloud(const CloudSpec& spec, const RingGeometry& ring, double radius,
                                         const PhysicalConstants& constants, std::uint64_t seed,
                                         std::uint64_t stream = 0, const FieldSource* field = nullptr, double t0 = 0.0,
                                         const GravityFrame* gravity = nullptr);

}  // namespace ringsim
