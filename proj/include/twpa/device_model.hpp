#pragma once

#include <cstdint>

namespace twpa {

/// Per-unit-length electrical constants of a TEM transmission line.
struct LineConstants {
    double inductance_per_m = 0.0;   // H/m
    double capacitance_per_m = 0.0;  // F/m

    [[nodiscard]] double impedance() const;
    [[nodiscard]] double phase_velocity() const;
};

/// Physical description of the stub-loaded, length-modulated microstrip.
///
/// `loaded` holds the zero-current constants of the finished line including
/// the stub capacitance. Stubs share the centre conductor's film, so their
/// per-unit-length inductance is `loaded.inductance_per_m`; their
/// capacitance follows from `stub_phase_velocity_c`.
struct DeviceGeometry {
    double line_length_m = 86e-3;
    double conductor_width_m = 250e-9;
    double conductor_thickness_m = 35e-9;
    double dielectric_thickness_m = 190e-9;
    double stub_length_avg_m = 26e-6;
    double stub_width_m = 250e-9;
    double stub_pitch_m = 2e-6;  // per side
    double stub_modulation_amplitude_m = 2e-6;
    double stub_modulation_wavelength_m = 110e-6;
    double stub_phase_velocity_c = 0.052;  // unloaded stub line, fraction of c
    double loss_db_per_ghz = 0.038;        // total insertion loss of the line per GHz
    LineConstants loaded{};
    double i_star_a = 0.0;
    double i_critical_a = 0.0;
};

/// Throws ConfigError naming the first violated invariant.
void validate(const DeviceGeometry& geometry);

/// Inverts Z0 = sqrt(L/C), v = 1/sqrt(LC).
LineConstants line_constants_from_targets(double impedance_ohm, double phase_velocity_m_s);

/// L(I) = L0 (1 + (I/I*)^2). Throws SuperconductivityBroken for |I| >= I_c.
double kinetic_inductance(double current_a, double l0_h_per_m, double i_star_a,
                          double i_critical_a);

/// Loaded-line constants under DC bias: inductance retuned, capacitance fixed.
LineConstants dc_retuning(const DeviceGeometry& geometry, double i_dc_a);

/// Open stubs on both sides of the centre conductor.
std::int64_t stub_count(const DeviceGeometry& geometry);

/// Constants of a stub viewed as its own transmission line (no DC flows in an open stub).
LineConstants stub_line_constants(const DeviceGeometry& geometry);

/// Centre conductor alone: loaded constants minus the average stub capacitance,
/// with the inductance retuned by the DC bias.
LineConstants centre_line_constants(const DeviceGeometry& geometry, double i_dc_a);

/// Power attenuation coefficient (1/m) at frequency f from the loss slope.
double power_attenuation(const DeviceGeometry& geometry, double freq_hz);

}  // namespace twpa
