#include "twpa/device_model.hpp"

#include <cmath>
#include <string>

#include "twpa/constants.hpp"
#include "twpa/errors.hpp"

namespace twpa {

double LineConstants::impedance() const {
    return std::sqrt(inductance_per_m / capacitance_per_m);
}

double LineConstants::phase_velocity() const {
    return 1.0 / std::sqrt(inductance_per_m * capacitance_per_m);
}

namespace {

void require_positive(double value, const char* field) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw ConfigError(std::string("device.") + field + " must be positive and finite");
    }
}

}  // namespace

void validate(const DeviceGeometry& g) {
    require_positive(g.line_length_m, "line_length_m");
    require_positive(g.conductor_width_m, "conductor_width_m");
    require_positive(g.conductor_thickness_m, "conductor_thickness_m");
    require_positive(g.dielectric_thickness_m, "dielectric_thickness_m");
    require_positive(g.stub_length_avg_m, "stub_length_avg_m");
    require_positive(g.stub_width_m, "stub_width_m");
    require_positive(g.stub_pitch_m, "stub_pitch_m");
    require_positive(g.stub_modulation_wavelength_m, "stub_modulation_wavelength_m");
    require_positive(g.stub_phase_velocity_c, "stub_phase_velocity_c");
    require_positive(g.loaded.inductance_per_m, "inductance_per_m");
    require_positive(g.loaded.capacitance_per_m, "capacitance_per_m");
    require_positive(g.i_star_a, "i_star_a");
    require_positive(g.i_critical_a, "i_critical_a");
    if (g.stub_modulation_amplitude_m < 0.0) {
        throw ConfigError("device.stub_modulation_amplitude_m must be non-negative");
    }
    if (g.stub_modulation_amplitude_m >= g.stub_length_avg_m) {
        throw ConfigError("device.stub_modulation_amplitude_m must be below stub_length_avg_m");
    }
    if (g.stub_pitch_m >= g.stub_modulation_wavelength_m) {
        throw ConfigError("device.stub_pitch_m must be below stub_modulation_wavelength_m");
    }
    if (g.stub_phase_velocity_c >= 1.0) {
        throw ConfigError("device.stub_phase_velocity_c must be below 1");
    }
    if (g.loss_db_per_ghz < 0.0) {
        throw ConfigError("device.loss_db_per_ghz must be non-negative");
    }
    if (centre_line_constants(g, 0.0).capacitance_per_m <= 0.0) {
        throw ConfigError(
            "device: stub capacitance exceeds the loaded-line capacitance; "
            "raise stub_phase_velocity_c or shorten the stubs");
    }
}

LineConstants line_constants_from_targets(double impedance_ohm, double phase_velocity_m_s) {
    if (!(impedance_ohm > 0.0)) {
        throw DomainError("line_constants_from_targets: impedance must be positive");
    }
    if (!(phase_velocity_m_s > 0.0) || phase_velocity_m_s > kSpeedOfLight) {
        throw DomainError("line_constants_from_targets: phase velocity must be in (0, c]");
    }
    return {impedance_ohm / phase_velocity_m_s, 1.0 / (impedance_ohm * phase_velocity_m_s)};
}

double kinetic_inductance(double current_a, double l0_h_per_m, double i_star_a,
                          double i_critical_a) {
    if (!(i_star_a > 0.0)) {
        throw DomainError("kinetic_inductance: I* must be positive");
    }
    if (std::abs(current_a) >= i_critical_a) {
        throw SuperconductivityBroken("superconductivity broken: |I| = " +
                                      std::to_string(std::abs(current_a)) +
                                      " A reaches I_c = " + std::to_string(i_critical_a) + " A");
    }
    const double x = current_a / i_star_a;
    return l0_h_per_m * (1.0 + x * x);
}

LineConstants dc_retuning(const DeviceGeometry& g, double i_dc_a) {
    return {kinetic_inductance(i_dc_a, g.loaded.inductance_per_m, g.i_star_a, g.i_critical_a),
            g.loaded.capacitance_per_m};
}

std::int64_t stub_count(const DeviceGeometry& g) {
    return static_cast<std::int64_t>(std::floor(g.line_length_m / g.stub_pitch_m)) * 2;
}

LineConstants stub_line_constants(const DeviceGeometry& g) {
    const double v = g.stub_phase_velocity_c * kSpeedOfLight;
    const double l = g.loaded.inductance_per_m;
    return {l, 1.0 / (l * v * v)};
}

LineConstants centre_line_constants(const DeviceGeometry& g, double i_dc_a) {
    const LineConstants stub = stub_line_constants(g);
    // Two stubs per pitch, each a capacitance C_stub * length at low frequency.
    const double stub_c = 2.0 * stub.capacitance_per_m * g.stub_length_avg_m / g.stub_pitch_m;
    const LineConstants biased = dc_retuning(g, i_dc_a);
    return {biased.inductance_per_m, g.loaded.capacitance_per_m - stub_c};
}

double power_attenuation(const DeviceGeometry& g, double freq_hz) {
    return db_loss_to_power_coefficient(g.loss_db_per_ghz * freq_hz * 1e-9, g.line_length_m);
}

}  // namespace twpa
