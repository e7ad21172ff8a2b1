#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twpa/cme_solver.hpp"
#include "twpa/device_model.hpp"
#include "twpa/dispersion.hpp"
#include "twpa/measurement.hpp"
#include "twpa/noise_chain.hpp"

namespace twpa {

struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    std::size_t points = 0;

    [[nodiscard]] std::vector<double> values() const;
};

struct NoiseRunSettings {
    GridSpec grid{5e8, 10.5e9, 500};
    ReadoutChain readout;
    double t_hot_min = 0.0;
    double t_cold_min = 0.0;
    double t_on_min = 0.0;
    double t_off_min = 0.0;
    CalibrationScale scale = CalibrationScale::quanta;
    bool pump_heating = false;
    double pump_line_attenuation_db = 15.6;  // generator to device input
};

struct SqueezeSettings {
    double f_pump_hz = 11.313e9;
    double max_gain_db = 23.0;     // amplified-quadrature gain at 0 dB pump attenuation
    double n_pa_max = 0.0;         // squeezed-path added noise at full pump, scales with pump power
    double assumed_n_pa = 0.0;     // value the analysis assumes
    bool lossless = true;
    SqueezeOrientation orientation = SqueezeOrientation::multiply;
    std::vector<double> attenuation_db;
};

struct ExperimentConfig {
    DeviceGeometry device;
    double line_impedance_ohm = 50.0;
    double line_phase_velocity_c = 0.0078;

    DispersionOptions dispersion;
    GridSpec dispersion_grid{1e8, 25e9, 24901};

    OperatingPoint operating_point;
    // When set, the pump current is calibrated to this peak gain instead of taken as given.
    std::optional<double> target_peak_gain_db;
    SolverOptions solver;

    GridSpec gain_grid{5e8, 10.5e9, 500};
    double reflection_in_db = -20.0;
    double reflection_out_db = -20.0;

    double compression_f_signal_hz = 6e9;
    GridSpec compression_power_dbm{-90.0, -40.0, 51};

    NoiseRunSettings noise;

    // Input-referred HEMT noise; `chain_params()` refers it to the HEMT input through A_att.
    double n_hemt_input_referred = 30.81;
    double n_added = 0.27;
    double a_att_db = 4.0;
    double n_mk = 0.5;

    SqueezeSettings squeeze;

    std::optional<std::uint64_t> seed;
    std::filesystem::path output_dir = "twpa-out";

    // Messages about defaults filled in while parsing.
    std::vector<std::string> notices;

    [[nodiscard]] AmpChainParams chain_params() const;
};

/// Parses a JSON document with unit-suffixed keys. Missing keys keep their
/// defaults; unknown keys and invalid values raise ConfigError naming the field path.
ExperimentConfig parse_config(std::string_view json_text);

/// Applies `overlay` on top of `base` (RFC 7386 merge) and parses the result.
ExperimentConfig parse_config(std::string_view base_json, std::string_view overlay_json);

ExperimentConfig load_config(const std::filesystem::path& path);

/// The bundled preset, or ConfigError for an unknown name.
std::string_view preset_json(std::string_view name);

void validate(const ExperimentConfig& config);

/// Requires a seed and returns it.
std::uint64_t require_seed(const ExperimentConfig& config);

}  // namespace twpa
