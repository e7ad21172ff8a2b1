#pragma once

#include <cmath>
#include <numbers>

namespace twpa {

inline constexpr double kSpeedOfLight = 299'792'458.0;   // m/s
inline constexpr double kPlanck = 6.626'070'15e-34;      // J s
inline constexpr double kBoltzmann = 1.380'649e-23;      // J/K
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline double db_to_ratio(double db) { return std::pow(10.0, db / 10.0); }
inline double ratio_to_db(double ratio) { return 10.0 * std::log10(ratio); }

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

/// Power attenuation coefficient (1/m) for a total insertion loss given in dB.
inline double db_loss_to_power_coefficient(double loss_db, double length_m) {
    return loss_db * std::log(10.0) / 10.0 / length_m;
}

}  // namespace twpa
