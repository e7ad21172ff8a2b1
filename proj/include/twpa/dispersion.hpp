#pragma once

#include <complex>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "twpa/device_model.hpp"

namespace twpa {

using Complex = std::complex<double>;

/// Two-port transmission (ABCD) matrix: [V1; I1] = M [V2; I2].
struct Abcd {
    Complex a{1.0}, b{0.0}, c{0.0}, d{1.0};

    [[nodiscard]] Complex determinant() const { return a * d - b * c; }
    [[nodiscard]] double half_trace() const { return 0.5 * (a + d).real(); }
};

Abcd operator*(const Abcd& lhs, const Abcd& rhs);

/// Lossless line section of electrical length beta * length.
Abcd line_segment(double beta_rad_per_m, double length_m, double impedance_ohm);
Abcd shunt_admittance(Complex admittance_s);

struct StubImpedance {
    Complex impedance;
    bool antiresonance = false;  // stub is a multiple of half a wavelength; Z_in diverges
};

/// Input impedance of an ideal lossless open-circuited stub, -i Z0 cot(beta l).
StubImpedance stub_input_impedance(double freq_hz, double stub_length_m,
                                   const LineConstants& stub_line);

enum class StubModel {
    distributed,  // open transmission-line stub
    lumped,       // stub replaced by its static capacitance (no stub dispersion)
};

struct UnitCell {
    double series_segment_length_m = 0.0;
    LineConstants line_constants{};
    double stub_length_m = 0.0;  // per side, after modulation
    LineConstants stub_line_constants{};
    int stubs = 2;
    int segments = 1;  // sub-divisions of each half series segment
    StubModel stub_model = StubModel::distributed;
};

/// Half series segment, the two shunt stubs, half series segment.
Abcd unit_cell_abcd(double freq_hz, const UnitCell& cell);

struct DispersionOptions {
    StubModel stub_model = StubModel::distributed;
    int segments_per_cell = 1;
    double gap_threshold = 1e-9;  // stopband where |(A+D)/2| > 1 + threshold
    bool include_loss = true;
};

struct Bandgap {
    double f_low_hz = 0.0;
    double f_high_hz = 0.0;

    [[nodiscard]] double centre() const { return 0.5 * (f_low_hz + f_high_hz); }
    [[nodiscard]] double width() const { return f_high_hz - f_low_hz; }
};

struct DispersionCurve {
    std::vector<double> freq_hz;
    std::vector<Complex> beta;            // Bloch wavenumber, rad/m (extended zone)
    std::vector<Complex> bloch_impedance; // ohm
    std::vector<double> half_trace;       // (A+D)/2 of the supercell
    std::vector<Bandgap> gaps;
    double period_m = 0.0;
    double gap_threshold = 1e-9;

    [[nodiscard]] bool in_gap(std::size_t i) const;
    /// Linear interpolation of beta; throws DomainError outside the grid.
    [[nodiscard]] Complex beta_at(double freq_hz) const;
    [[nodiscard]] double impedance_at(double freq_hz) const;
};

/// Number of stubs per side in one modulation period. Throws ConfigError when
/// the modulation wavelength is not an integer multiple of the stub pitch.
int cells_per_supercell(const DeviceGeometry& geometry);

/// Supercell (one modulation period) cells with sinusoidally modulated stub lengths.
std::vector<UnitCell> build_supercell(const DeviceGeometry& geometry, double i_dc_a,
                                      const DispersionOptions& options = {});

/// Uniform grid [start, stop] with the given spacing (inclusive of both ends when commensurate).
std::vector<double> linear_grid(double start, double stop, std::size_t points);

DispersionCurve bloch_dispersion(std::span<const double> freq_grid, const DeviceGeometry& geometry,
                                 double i_dc_a, const DispersionOptions& options = {});

/// Bloch dispersion of an arbitrary cell sequence treated as one period.
DispersionCurve bloch_dispersion(std::span<const double> freq_grid,
                                 std::span<const UnitCell> supercell, double gap_threshold = 1e-9);

std::vector<Bandgap> find_bandgaps(const DispersionCurve& curve);

/// Re beta(f_p) - Re beta(f_s) - Re beta(f_p - f_s), rad/m.
double phase_mismatch(double f_signal_hz, double f_pump_hz, const DispersionCurve& curve);

/// Quarter-wave resonance of the average stub.
double stub_resonance_frequency(const DeviceGeometry& geometry);

/// CSV columns f_Hz, Re_beta, Im_beta, Re_Zbloch, in_gap.
void write_dispersion_csv(std::ostream& out, const DispersionCurve& curve);

}  // namespace twpa
