#pragma once

namespace ringsim {

namespace codata {
inline constexpr double mu0 = 1.25663706212e-6;        // T m / A
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double kB = 1.380649e-23;             // J / K
inline constexpr double muB = 9.274e-24;               // J / T
inline constexpr double g_standard = 9.80665;          // m / s^2
inline constexpr double mass_rb87 = 1.44316e-25;       // kg
inline constexpr double pi = 3.14159265358979323846;
}  // namespace codata

/// Physical constants for one atomic species and magnetic sublevel.
/// `mu_m` is the trapping moment magnitude; U = +mu_m |B| for the weak-field
/// seeker. By default mu_m = |gF mF| muB.
class PhysicalConstants {
 public:
  /// 87Rb, F=1, mF=-1 (gF = -1/2), i.e. mu_m = muB/2.
  static PhysicalConstants rubidium87();

  PhysicalConstants(double mass, double gF, double mF, double g_grav = codata::g_standard);

  /// Copy with the moment magnitude overridden (e.g. muB for the full Bohr magneton).
  PhysicalConstants with_moment(double mu_m) const;
  PhysicalConstants with_gravity(double g_grav) const;

  double mu0() const { return codata::mu0; }
  double hbar() const { return codata::hbar; }
  double kB() const { return codata::kB; }
  double muB() const { return codata::muB; }
  double g_grav() const { return g_grav_; }
  double mass() const { return mass_; }
  double gF() const { return gF_; }
  double mF() const { return mF_; }
  double mu_m() const { return mu_m_; }

  friend bool operator==(const PhysicalConstants&, const PhysicalConstants&) = default;

 private:
  double mass_;
  double gF_;
  double mF_;
  double g_grav_;
  double mu_m_;
};

}  // namespace ringsim
