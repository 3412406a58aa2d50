#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "ringsim/dynamics/propagator.hpp"

namespace ringsim {

struct Trajectory {
  std::vector<AtomState> samples;  // includes the initial state
  AtomState final_state;
};

/// Returns true when the atom has left the trapping region.
using EscapePredicate = std::function<bool(const AtomState&)>;

/// Integrates one atom from s0 to t_end, sampling every cfg.sample_stride
/// steps. An atom for which `escaped` fires is marked lost(over_barrier) and
/// integration stops there.
Trajectory integrate_trajectory(const AtomState& s0, const FieldSource& field, const PhysicalConstants& constants,
                                const GravityFrame& gravity, const IntegratorConfig& cfg, double t_end,
                                const EscapePredicate& escaped = {});

/// CSV `t_s,x_m,y_m,z_m,vx,vy,vz,Sx,Sy,Sz,status`.
void write_trajectory_csv(std::ostream& os, const std::vector<AtomState>& samples,
                          const std::vector<std::string>& comment = {});

}  // namespace ringsim
