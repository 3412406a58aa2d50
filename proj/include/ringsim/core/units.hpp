#pragma once

// Conversions used at reporting boundaries only; everything internal is SI.
namespace ringsim::units {

inline constexpr double gauss = 1e-4;              // T per G
inline constexpr double gauss_per_cm = 1e-2;       // (T/m) per (G/cm)
inline constexpr double mm = 1e-3;
inline constexpr double um = 1e-6;
inline constexpr double ms = 1e-3;
inline constexpr double uK = 1e-6;
inline constexpr double mK = 1e-3;

constexpr double to_gauss_per_cm(double tesla_per_m) { return tesla_per_m / gauss_per_cm; }
constexpr double to_gauss(double tesla) { return tesla / gauss; }

}  // namespace ringsim::units
