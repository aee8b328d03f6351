/**
 * @file constants.hpp
 * @brief Physical constants (km, s, rad).
 */
#pragma once

#include <numbers>

namespace robod::astro {

inline constexpr double kMuEarth = 398600.4418;          // km^3/s^2
inline constexpr double kEarthRadius = 6378.137;         // km, WGS84 equatorial
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kEarthRotation = 7.292115146706979e-5;  // rad/s
inline constexpr double kJ2 = 1.08263e-3;
inline constexpr double kJ3 = -2.532e-6;
inline constexpr double kJ4 = -1.62e-6;
inline constexpr double kMuSun = 1.32712440018e11;
inline constexpr double kMuMoon = 4902.800066;
inline constexpr double kAU = 149597870.7;               // km
inline constexpr double kSolarPressure = 4.56e-6;        // N/m^2 at 1 AU
inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kDeg = std::numbers::pi / 180.0;
inline constexpr double kArcsec = kDeg / 3600.0;

}  // namespace robod::astro
