#include "twpa/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "twpa/constants.hpp"
#include "twpa/errors.hpp"

namespace twpa {

namespace {

constexpr Complex kI{0.0, 1.0};

// Smallest extended-zone phase 2 k pi + theta (theta in [0, 2 pi)) not behind the previous one.
double unwrap_phase(double theta, double previous) {
    double k = std::floor(previous / kTwoPi) - 1.0;
    while (kTwoPi * k + theta < previous - 1e-12) k += 1.0;
    return kTwoPi * k + theta;
}

struct BlochRoot {
    Complex lambda;     // V1 = lambda V2 for the forward Bloch wave
    Complex impedance;  // V / I of that wave
};

// Of the two eigenvalues of M, the forward wave is the one carrying power in +z (Re Z > 0).
BlochRoot forward_root(const Abcd& m) {
    const Complex x = 0.5 * (m.a + m.d);
    const Complex root = std::sqrt((x - 1.0) * (x + 1.0));
    BlochRoot best{Complex{1.0}, Complex{std::numeric_limits<double>::quiet_NaN(), 0.0}};
    for (Complex lambda : {x + root, x - root}) {
        const Complex denom = lambda - m.a;
        if (std::abs(denom) == 0.0) {
            continue;
        }
        const Complex z = m.b / denom;
        if (std::isnan(best.impedance.real()) || z.real() > best.impedance.real()) {
            best = {lambda, z};
        }
    }
    return best;
}

double interpolate_crossing(double f0, double x0, double f1, double x1, double level) {
    if (x1 == x0) {
        return 0.5 * (f0 + f1);
    }
    return f0 + (level - x0) * (f1 - f0) / (x1 - x0);
}

std::size_t bracket(const std::vector<double>& grid, double f) {
    if (grid.size() < 2 || f < grid.front() || f > grid.back()) {
        throw DomainError(fmt::format("frequency {:.6g} Hz outside the dispersion grid", f));
    }
    auto it = std::upper_bound(grid.begin(), grid.end(), f);
    std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    hi = std::clamp<std::size_t>(hi, 1, grid.size() - 1);
    return hi - 1;
}

}  // namespace

Abcd operator*(const Abcd& l, const Abcd& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c,
            l.c * r.b + l.d * r.d};
}

Abcd line_segment(double beta, double length, double z0) {
    const double theta = beta * length;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {Complex{c}, kI * z0 * s, kI * s / z0, Complex{c}};
}

Abcd shunt_admittance(Complex y) { return {Complex{1.0}, Complex{0.0}, y, Complex{1.0}}; }

StubImpedance stub_input_impedance(double f, double length, const LineConstants& stub) {
    if (!(f > 0.0)) {
        throw DomainError("stub_input_impedance: frequency must be positive");
    }
    const double theta = kTwoPi * f / stub.phase_velocity() * length;
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    StubImpedance out;
    constexpr double kTiny = 1e-12;
    if (std::abs(s) < kTiny) {
        out.antiresonance = true;
        out.impedance = -kI * stub.impedance() * c / std::copysign(kTiny, s == 0.0 ? 1.0 : s);
    } else {
        out.impedance = -kI * stub.impedance() * c / s;
    }
    return out;
}

Abcd unit_cell_abcd(double f, const UnitCell& cell) {
    const double omega = kTwoPi * f;
    const double beta = omega / cell.line_constants.phase_velocity();
    const double z0 = cell.line_constants.impedance();
    const int segments = std::max(cell.segments, 1);
    const double piece = 0.5 * cell.series_segment_length_m / segments;

    Complex y_stub{0.0};
    if (cell.stub_length_m > 0.0 && cell.stubs > 0) {
        const LineConstants& s = cell.stub_line_constants;
        if (cell.stub_model == StubModel::lumped) {
            y_stub = kI * omega * s.capacitance_per_m * cell.stub_length_m;
        } else {
            // Open stub admittance i tan(beta l)/Z0 written without the tan singularity.
            const double theta = omega / s.phase_velocity() * cell.stub_length_m;
            y_stub = kI * std::sin(theta) / (std::cos(theta) * s.impedance());
        }
        y_stub *= static_cast<double>(cell.stubs);
    }

    Abcd m;
    if (piece > 0.0) {
        const Abcd seg = line_segment(beta, piece, z0);
        for (int i = 0; i < segments; ++i) m = m * seg;
        m = m * shunt_admittance(y_stub);
        for (int i = 0; i < segments; ++i) m = m * seg;
    } else {
        m = shunt_admittance(y_stub);
    }
    return m;
}

bool DispersionCurve::in_gap(std::size_t i) const {
    return std::abs(half_trace.at(i)) > 1.0 + gap_threshold;
}

Complex DispersionCurve::beta_at(double f) const {
    const std::size_t i = bracket(freq_hz, f);
    const double t = (f - freq_hz[i]) / (freq_hz[i + 1] - freq_hz[i]);
    return beta[i] + t * (beta[i + 1] - beta[i]);
}

double DispersionCurve::impedance_at(double f) const {
    const std::size_t i = bracket(freq_hz, f);
    const double t = (f - freq_hz[i]) / (freq_hz[i + 1] - freq_hz[i]);
    return bloch_impedance[i].real() +
           t * (bloch_impedance[i + 1].real() - bloch_impedance[i].real());
}

int cells_per_supercell(const DeviceGeometry& g) {
    const double ratio = g.stub_modulation_wavelength_m / g.stub_pitch_m;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * ratio) {
        throw ConfigError(fmt::format(
            "device.stub_modulation_wavelength_m ({:.6g}) must be an integer multiple of "
            "device.stub_pitch_m ({:.6g})",
            g.stub_modulation_wavelength_m, g.stub_pitch_m));
    }
    return static_cast<int>(n);
}

std::vector<UnitCell> build_supercell(const DeviceGeometry& g, double i_dc,
                                      const DispersionOptions& options) {
    const int n = cells_per_supercell(g);
    const LineConstants centre = centre_line_constants(g, i_dc);
    const LineConstants stub = stub_line_constants(g);
    std::vector<UnitCell> cells(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        UnitCell& cell = cells[static_cast<std::size_t>(k)];
        cell.series_segment_length_m = g.stub_pitch_m;
        cell.line_constants = centre;
        cell.stub_line_constants = stub;
        cell.stub_model = options.stub_model;
        cell.segments = options.segments_per_cell;
        const double phase = kTwoPi * (k + 0.5) / n;
        cell.stub_length_m = g.stub_length_avg_m + g.stub_modulation_amplitude_m * std::sin(phase);
    }
    return cells;
}

std::vector<double> linear_grid(double start, double stop, std::size_t points) {
    if (points < 2) {
        throw DomainError("linear_grid: need at least two points");
    }
    std::vector<double> grid(points);
    const double step = (stop - start) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
        grid[i] = start + step * static_cast<double>(i);
    }
    grid.back() = stop;
    return grid;
}

DispersionCurve bloch_dispersion(std::span<const double> freq_grid,
                                 std::span<const UnitCell> supercell, double gap_threshold) {
    if (freq_grid.empty()) {
        throw DomainError("bloch_dispersion: empty frequency grid");
    }
    if (!std::is_sorted(freq_grid.begin(), freq_grid.end()) ||
        std::adjacent_find(freq_grid.begin(), freq_grid.end()) != freq_grid.end()) {
        throw DomainError("bloch_dispersion: frequency grid must be strictly ascending");
    }
    double period = 0.0;
    for (const UnitCell& cell : supercell) period += cell.series_segment_length_m;
    if (!(period > 0.0)) {
        throw DomainError("bloch_dispersion: supercell has zero length");
    }

    DispersionCurve curve;
    curve.period_m = period;
    curve.gap_threshold = gap_threshold;
    const std::size_t n = freq_grid.size();
    curve.freq_hz.assign(freq_grid.begin(), freq_grid.end());
    curve.beta.resize(n);
    curve.bloch_impedance.resize(n);
    curve.half_trace.resize(n);

    double previous_phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        Abcd m;
        for (const UnitCell& cell : supercell) m = m * unit_cell_abcd(freq_grid[i], cell);
        const double x = m.half_trace();
        const BlochRoot root = forward_root(m);
        double theta = std::arg(root.lambda);
        if (theta < 0.0) theta += kTwoPi;
        if (std::abs(x) > 1.0) theta = x > 0.0 ? 0.0 : kPi;
        const double phase = unwrap_phase(theta, previous_phase);
        previous_phase = phase;
        double attenuation = 0.0;
        if (std::abs(x) > 1.0 + gap_threshold) {
            attenuation = std::acosh(std::abs(x)) / period;
        }
        curve.beta[i] = Complex{phase / period, attenuation};
        curve.half_trace[i] = x;
        curve.bloch_impedance[i] = root.impedance;
    }
    curve.gaps = find_bandgaps(curve);
    return curve;
}

DispersionCurve bloch_dispersion(std::span<const double> freq_grid, const DeviceGeometry& g,
                                 double i_dc, const DispersionOptions& options) {
    const std::vector<UnitCell> cells = build_supercell(g, i_dc, options);
    DispersionCurve curve = bloch_dispersion(freq_grid, cells, options.gap_threshold);
    if (options.include_loss) {
        for (std::size_t i = 0; i < curve.freq_hz.size(); ++i) {
            curve.beta[i] += Complex{0.0, 0.5 * power_attenuation(g, curve.freq_hz[i])};
        }
    }
    return curve;
}

std::vector<Bandgap> find_bandgaps(const DispersionCurve& curve) {
    const std::size_t n = curve.freq_hz.size();
    if (n == 0) {
        throw DomainError("find_bandgaps: empty dispersion curve");
    }
    const auto& f = curve.freq_hz;
    const auto& x = curve.half_trace;
    std::vector<Bandgap> gaps;
    std::size_t i = 0;
    while (i < n) {
        if (!curve.in_gap(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && curve.in_gap(j + 1)) ++j;
        const double sign = x[i] > 0.0 ? 1.0 : -1.0;
        Bandgap gap;
        gap.f_low_hz = i == 0 ? f[0] : interpolate_crossing(f[i - 1], x[i - 1], f[i], x[i], sign);
        gap.f_high_hz =
            j + 1 == n ? f[j] : interpolate_crossing(f[j], x[j], f[j + 1], x[j + 1], sign);
        gaps.push_back(gap);
        i = j + 1;
    }
    return gaps;
}

double phase_mismatch(double f_signal, double f_pump, const DispersionCurve& curve) {
    if (!(f_signal > 0.0) || !(f_signal < f_pump)) {
        throw DomainError("phase_mismatch: require 0 < f_signal < f_pump");
    }
    return curve.beta_at(f_pump).real() - curve.beta_at(f_signal).real() -
           curve.beta_at(f_pump - f_signal).real();
}

double stub_resonance_frequency(const DeviceGeometry& g) {
    return g.stub_phase_velocity_c * kSpeedOfLight / (4.0 * g.stub_length_avg_m);
}

void write_dispersion_csv(std::ostream& out, const DispersionCurve& curve) {
    out << "f_Hz,Re_beta,Im_beta,Re_Zbloch,in_gap\n";
    for (std::size_t i = 0; i < curve.freq_hz.size(); ++i) {
        fmt::print(out, "{:.17g},{:.17g},{:.17g},{:.17g},{}\n", curve.freq_hz[i],
                   curve.beta[i].real(), curve.beta[i].imag(), curve.bloch_impedance[i].real(),
                   curve.in_gap(i) ? 1 : 0);
    }
}

}  // namespace twpa
