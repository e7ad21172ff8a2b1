#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "twpa/device_model.hpp"
#include "twpa/dispersion.hpp"

namespace twpa {

struct OperatingPoint {
    double i_dc_a = 0.0;
    double f_pump_hz = 0.0;
    double i_pump_a = 0.0;  // pump current amplitude at the device input
    double f_signal_hz = 0.0;
    double signal_power_w = 0.0;
    double phase_signal_rad = 0.0;  // relative to the pump
};

/// Coefficients of the three-wave-mixing coupled-mode equations
///
///   da_p/dz = i b_p [ k a_s a_i e^{+i db z} + s (|a_p|^2 + 2|a_s|^2 + 2|a_i|^2) a_p ] - (al_p/2) a_p
///   da_s/dz = i b_s [ k a_p a_i* e^{-i db z} + s (|a_s|^2 + 2|a_p|^2 + 2|a_i|^2) a_s ] - (al_s/2) a_s
///   da_i/dz = i b_i [ k a_p a_s* e^{-i db z} + s (|a_i|^2 + 2|a_p|^2 + 2|a_s|^2) a_i ] - (al_i/2) a_i
///
/// with k = I_DC / (2 I*^2) and s = 1 / (8 I*^2).
struct CoupledModeSystem {
    double beta_p = 0.0, beta_s = 0.0, beta_i = 0.0;  // rad/m
    double kappa = 0.0;                               // 1/A
    double sigma = 0.0;                               // 1/A^2
    double delta_beta = 0.0;                          // static mismatch, rad/m
    double alpha_p = 0.0, alpha_s = 0.0, alpha_i = 0.0;  // power attenuation, 1/m
    double omega_p = 0.0, omega_s = 0.0, omega_i = 0.0;  // rad/s
    double inductance_per_m = 0.0;                       // sets the mode impedance L*omega/beta

    [[nodiscard]] std::array<Complex, 3> derivative(double z, const std::array<Complex, 3>& a) const;
    [[nodiscard]] double mode_impedance(double omega, double beta) const;
};

struct SolverOptions {
    double rtol = 1e-9;
    std::size_t output_points = 1001;
    bool include_loss = true;
    bool include_kerr = true;
};

/// Complex current amplitudes (A) along the line.
struct ModeAmplitudes {
    std::vector<double> z_m;
    std::vector<Complex> a_p, a_s, a_i;
};

CoupledModeSystem make_system(const OperatingPoint& op, const DispersionCurve& curve,
                              const DeviceGeometry& geometry, const SolverOptions& options = {});

/// Throws SuperconductivityBroken or DomainError when the operating point is unusable.
void validate(const OperatingPoint& op, const DispersionCurve& curve,
              const DeviceGeometry& geometry);

ModeAmplitudes integrate_modes(const CoupledModeSystem& system, const std::array<Complex, 3>& initial,
                               double length_m, const SolverOptions& options = {});

/// Signal current amplitude delivering `power_w` into the mode impedance.
double signal_amplitude(const CoupledModeSystem& system, double power_w);
double pump_power(const CoupledModeSystem& system, double i_pump_a);

ModeAmplitudes propagate_3wm(const OperatingPoint& op, const DispersionCurve& curve,
                             const DeviceGeometry& geometry, const SolverOptions& options = {});

/// Largest relative photon-flux imbalance along z, for both the pump+signal and
/// the pump+idler Manley-Rowe sums. Flux per mode is |a|^2 / beta (common factors dropped).
double manley_rowe_violation(const ModeAmplitudes& modes, const CoupledModeSystem& system);

/// Undepleted, lossless closed form |cosh(gL) + (i db / 2 gamma) sinh(gL)|^2,
/// gamma = sqrt(g^2 - (db/2)^2).
double analytic_undepleted_gain(double g_per_m, double delta_beta, double length_m);

struct GainSpectrum {
    std::vector<double> freq_hz;
    std::vector<double> gain;  // power ratio relative to pump-off transmission

    [[nodiscard]] double gain_at(double freq_hz) const;  // linear interpolation in dB
    [[nodiscard]] double peak_db() const;
    /// Width of the longest contiguous interval with gain above `threshold_db`,
    /// crossings interpolated linearly in dB.
    [[nodiscard]] double longest_band_above_db(double threshold_db) const;
};

/// Small-signal gain per signal frequency. The pump and DC settings come from
/// `op`; `op.f_signal_hz` and `op.signal_power_w` are ignored.
GainSpectrum gain_spectrum(const OperatingPoint& op, const DispersionCurve& curve,
                           const DeviceGeometry& geometry, std::span<const double> freq_grid,
                           const SolverOptions& options = {});

struct QuadratureGains {
    double g_amplified = 1.0;
    double g_squeezed = 1.0;
    double phase_amplified_rad = 0.0;  // seed phase giving g_amplified
    double phase_squeezed_rad = 0.0;   // phase_amplified + pi/2
};

/// Phase-sensitive gains at f_s = f_p/2, from the linear response
/// a(L) = mu a(0) + nu a(0)*, i.e. G(phi) = |mu + nu e^{-2 i phi}|^2.
/// Gains are raw device transmission (loss is not divided out).
QuadratureGains degenerate_quadrature_gains(const OperatingPoint& op, const DispersionCurve& curve,
                                            const DeviceGeometry& geometry,
                                            const SolverOptions& options = {});

/// Direct phase sweep of the degenerate gain, one solver run per phase.
std::vector<double> degenerate_gain_sweep(const OperatingPoint& op, const DispersionCurve& curve,
                                          const DeviceGeometry& geometry,
                                          std::span<const double> phases_rad,
                                          const SolverOptions& options = {});

struct CompressionCurve {
    std::vector<double> input_power_dbm;
    std::vector<double> gain_db;
    double small_signal_gain_db = 0.0;
    double p1db_dbm = 0.0;
};

CompressionCurve compression_curve(const OperatingPoint& op, const DispersionCurve& curve,
                                   const DeviceGeometry& geometry,
                                   std::span<const double> input_power_dbm,
                                   const SolverOptions& options = {});

struct OscillationVerdict {
    bool oscillating = false;
    double margin_db = 0.0;  // round-trip loss minus gain
};

OscillationVerdict oscillation_check(double gain_db, double reflect_in_db, double reflect_out_db);

/// Pump current giving the requested peak small-signal gain over `freq_grid`.
double calibrate_pump_current(const OperatingPoint& op, const DispersionCurve& curve,
                              const DeviceGeometry& geometry, std::span<const double> freq_grid,
                              double target_peak_db, const SolverOptions& options = {});

/// Pump current giving the requested amplified-quadrature gain at f_p/2.
double calibrate_degenerate_pump(const OperatingPoint& op, const DispersionCurve& curve,
                                 const DeviceGeometry& geometry, double target_gain_db,
                                 const SolverOptions& options = {});

}  // namespace twpa
