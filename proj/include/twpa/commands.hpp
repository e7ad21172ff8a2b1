#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "twpa/config.hpp"

namespace twpa {

/// Files written by a command and a JSON summary (also written to disk).
struct CommandReport {
    std::vector<std::filesystem::path> files;
    std::string summary_json;
    std::vector<std::string> messages;  // human-readable lines for the terminal
};

/// Added-noise analysis of one HOT/COLD/ON/OFF trace set.
struct NoiseAnalysis {
    std::vector<double> freq_hz;
    std::vector<double> gain;
    std::vector<double> added_cold_reference;  // calibrated on HOT/COLD
    std::vector<double> added_off_reference;   // intercept re-anchored on TWPA_OFF
    std::vector<double> quantum_limit;
    double band_threshold_db = 10.0;
    std::size_t band_points = 0;
    double band_mean_added = 0.0;          // cold reference
    double band_mean_abs_deviation = 0.0;  // |A - quantum limit|, cold reference
    double band_max_abs_deviation = 0.0;
    double offset_estimate = 0.0;          // mean of (cold-ref A - off-ref A) over the band
};

NoiseAnalysis analyse_noise(const NoiseTrace& hot, const NoiseTrace& cold, const NoiseTrace& on,
                            const NoiseTrace& off, std::span<const double> gain, double t_hot_k,
                            double t_cold_k, CalibrationScale scale);

void write_added_noise_csv(std::ostream& out, const NoiseAnalysis& analysis);

/// Bloch dispersion and band gaps of the configured device.
CommandReport cmd_dispersion(const ExperimentConfig& config);
/// Small-signal gain spectrum at the configured operating point.
CommandReport cmd_gain(const ExperimentConfig& config);
/// Gain against signal power and the 1 dB compression point.
CommandReport cmd_compression(const ExperimentConfig& config);
/// Synthetic y-factor run: traces, gain and the extracted added noise.
CommandReport cmd_noise(const ExperimentConfig& config);
/// Degenerate pump-attenuation sweep with quadrature noise and squeezing extraction.
CommandReport cmd_squeeze(const ExperimentConfig& config);

struct CalibrateInputs {
    std::filesystem::path hot, cold, on, off, gain;
    double t_hot_k = 3.38;
    double t_cold_k = 0.020;
    CalibrationScale scale = CalibrationScale::quanta;
    std::filesystem::path output_dir = "twpa-out";
};

/// Added noise from ingested trace files.
CommandReport cmd_calibrate(const CalibrateInputs& inputs);

/// Pump current after optional calibration to `target_peak_gain_db`.
double resolved_pump_current(const ExperimentConfig& config, const DispersionCurve& curve);

}  // namespace twpa
