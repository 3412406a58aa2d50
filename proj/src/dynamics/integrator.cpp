#include "ringsim/dynamics/integrator.hpp"

#include <cstdio>
#include <ostream>

namespace ringsim {

Trajectory integrate_trajectory(const AtomState& s0, const FieldSource& field, const PhysicalConstants& constants,
                                const GravityFrame& gravity, const IntegratorConfig& cfg, double t_end,
                                const EscapePredicate& escaped) {
  require(s0.alive(), ErrorCategory::invalid_input, "initial state must be alive");
  require(t_end > s0.t, ErrorCategory::invalid_input, "t_end must exceed the initial time");
  require(is_finite(s0.position) && is_finite(s0.velocity), ErrorCategory::invalid_input,
          "initial state must be finite");
  Propagator prop(field, constants, gravity, cfg);
  AtomState s = s0;
  prop.prime(s);

  Trajectory traj;
  traj.samples.push_back(s);
  long main_steps = 0;
  auto obs = [&](const AtomState&, AtomState& after, const FieldSample&) {
    if (escaped && escaped(after)) {
      after.mark_lost(LossCause::over_barrier);
      return false;
    }
    return true;
  };
  while (s.t < t_end) {
    const double remaining = t_end - s.t;
    const double h = remaining < 1.5 * cfg.dt ? remaining : cfg.dt;
    require(++main_steps <= cfg.max_steps, ErrorCategory::numeric, "integration step count exceeded max_steps");
    if (!prop.advance(s, h, obs)) break;
    if (main_steps % cfg.sample_stride == 0 || s.t >= t_end) traj.samples.push_back(s);
  }
  if (!s.alive()) traj.samples.push_back(s);
  traj.final_state = s;
  return traj;
}

void write_trajectory_csv(std::ostream& os, const std::vector<AtomState>& samples,
                          const std::vector<std::string>& comment) {
  for (const auto& c : comment) os << "# " << c << '\n';
  os << "t_s,x_m,y_m,z_m,vx,vy,vz,Sx,Sy,Sz,status\n";
  char buf[512];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,", s.t,
                  s.position.x, s.position.y, s.position.z, s.velocity.x, s.velocity.y, s.velocity.z, s.spin.x,
                  s.spin.y, s.spin.z);
    os << buf << to_string(s.cause) << '\n';
  }
}

}  // namespace ringsim
