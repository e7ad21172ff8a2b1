#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "twpa/noise_chain.hpp"

namespace twpa {

enum class TraceConfig { hot, cold, twpa_on, twpa_off };

std::string_view to_string(TraceConfig config);
TraceConfig trace_config_from_string(std::string_view text);

/// Spectrum-analyser power trace as linear power spectral density.
struct NoiseTrace {
    std::vector<double> freq_hz;
    std::vector<double> power_w_per_hz;
    TraceConfig config = TraceConfig::cold;
    double t_min = 0.0;  // minutes since session start
    double rbw_hz = 1e6;
    std::int64_t n_avg = 1;
};

/// Room-temperature readout and switch systematics of the y-factor setup.
struct ReadoutChain {
    double t_hot_k = 3.38;
    double t_cold_k = 0.020;
    double t_input_k = 0.020;  // bath at the TWPA input
    double readout_noise_quanta = 70.0;  // post-amplifier noise referred to the switch plane
    double post_gain = 1e9;              // switch plane to analyser, power ratio
    double ripple_amplitude = 0.0;       // fractional
    double ripple_period_hz = 8e6;       // at zero DC bias
    double drift_db_per_100min = 0.01;
    double rbw_hz = 1e6;
    std::int64_t n_avg = 100'000'000;
    bool radiometer_noise = true;
};

void validate(const ReadoutChain& chain);

/// What the device contributes to a trace on the trace's frequency grid.
struct DeviceResponse {
    std::vector<double> gain;   // TWPA on/off gain per grid point (TWPA_ON only)
    double f_pump_hz = 0.0;     // idler frequency is f_pump - f
    double ripple_period_scale = 1.0;  // v_ph(I_DC) / v_ph(0); applies to TWPA_ON/OFF
    double excess_quanta = 0.0;        // input-referred excess (e.g. pump heating)
};

/// Relative radiometer fluctuation 1/sqrt(rbw * tau) with tau = n_avg / rbw.
double radiometer_sigma(const ReadoutChain& chain);

/// Noise occupation at the switch plane for a configuration, before the readout.
double source_quanta(TraceConfig config, double freq_hz, const ReadoutChain& chain,
                     const DeviceResponse& device, std::size_t index);

NoiseTrace synthesize_trace(TraceConfig config, std::span<const double> freq_grid,
                            const ReadoutChain& chain, const DeviceResponse& device, double t_min,
                            std::uint64_t seed);

enum class CalibrationScale {
    quanta,       // occupations quanta(f, T) as the abscissa
    temperature,  // kelvin, converted with k / h f afterwards
};

struct CalibrationConstants {
    std::vector<double> freq_hz;
    std::vector<double> slope;      // W/Hz per quantum (or per kelvin)
    std::vector<double> intercept;  // W/Hz
    std::vector<double> reference_abscissa;  // cold-reference occupation (or temperature)
    CalibrationScale scale = CalibrationScale::quanta;
};

CalibrationConstants calibrate(const NoiseTrace& hot, const NoiseTrace& cold, double t_hot_k,
                               double t_cold_k, CalibrationScale scale = CalibrationScale::quanta);

/// Re-anchors the intercept on a TWPA-off trace taken as the cold reference.
CalibrationConstants rereference(const CalibrationConstants& cal, const NoiseTrace& reference);

/// Noise at the calibration plane in quanta, (P - y0)/m (times k/hf in temperature mode).
std::vector<double> trace_quanta(const NoiseTrace& trace, const CalibrationConstants& cal);

/// Temperature of a trace on the calibrated scale.
std::vector<double> trace_temperature(const NoiseTrace& trace, const CalibrationConstants& cal);

/// A(f) = N_on / G - N_off.
std::vector<double> added_noise(const NoiseTrace& on, const NoiseTrace& off,
                                const CalibrationConstants& cal, std::span<const double> gain);

struct NoiseFitPoint {
    double g_amplified;
    double n_sys;
};

struct NoiseFit {
    double n_hemt = 0.0;   // input-referred
    double n_added = 0.0;
    double residual_rms = 0.0;
    // (X^T X)^-1 for X = [1, 1/G]; multiply by the noise variance for parameter covariances.
    double unit_var_n_added = 0.0;
    double unit_var_n_hemt = 0.0;
};

/// Least-squares fit of N_sys = N_a + N_HEMT / G_a.
NoiseFit fit_noise_model(std::span<const NoiseFitPoint> points);

struct QuadratureNoise {
    double n_i = 0.0;
    double n_q = 0.0;
};

/// Readout noise in the I and Q channels with the LO at `lo_phase_rad` from the
/// amplified axis. Quadrature theta sees gain G_a cos^2 + G_sq sin^2 and added noise
/// N_a G_a cos^2 + N_pa sin^2 before the attenuation and HEMT.
QuadratureNoise iq_quadrature_noise(const AmpChainParams& params, double lo_phase_rad);

struct SqueezeMeasurement {
    double pump_attenuation_db = 0.0;
    double g_amplified = 1.0;  // test-tone gains
    double g_squeezed = 1.0;
    double n_amplified_on = 0.0;  // readout noise, LO on the amplified axis
    double n_squeezed_on = 0.0;   // readout noise, LO on the squeezed axis
    double n_off = 0.0;
};

struct SqueezeResult {
    double pump_attenuation_db = 0.0;
    double g_amplified_db = 0.0;
    double g_squeezed_db = 0.0;
    double squeezing_db = 0.0;
    double n_sys = 0.0;
    double n_hemt_fit = 0.0;
    double n_added_fit = 0.0;
    double residual = 0.0;
};

/// Per-point system noise and extracted squeezing, with a noise-model fit across points.
/// `chain` supplies A_att, the readout N_HEMT, N_mK and the assumed N_pa.
std::vector<SqueezeResult> squeezing_analysis(std::span<const SqueezeMeasurement> points,
                                              const AmpChainParams& chain,
                                              SqueezeOrientation orientation =
                                                  SqueezeOrientation::multiply);

enum class PowerUnit { w_per_hz, dbm };

void write_trace(std::ostream& out, const NoiseTrace& trace, PowerUnit unit = PowerUnit::w_per_hz);
NoiseTrace read_trace(std::istream& in, const std::string& source_name);
NoiseTrace ingest_trace(const std::filesystem::path& path);

/// Gain CSV: header `f_Hz,gain_dB`.
void write_gain_csv(std::ostream& out, std::span<const double> freq_hz, std::span<const double> gain);
std::pair<std::vector<double>, std::vector<double>> read_gain_csv(const std::filesystem::path& path);

/// Throws DomainError naming both traces when grids differ.
void require_same_grid(const NoiseTrace& a, const NoiseTrace& b, std::string_view name_a = "a",
                       std::string_view name_b = "b");

}  // namespace twpa
