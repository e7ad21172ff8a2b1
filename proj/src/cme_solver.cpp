#include "twpa/cme_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "twpa/constants.hpp"
#include "twpa/errors.hpp"
#include "twpa/ode.hpp"

namespace twpa {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kSeedBelowPumpDb = 120.0;

std::array<Complex, 3> endpoint(const CoupledModeSystem& system, const std::array<Complex, 3>& a0,
                                double length, const SolverOptions& options) {
    SolverOptions ends = options;
    ends.output_points = 2;
    const ModeAmplitudes m = integrate_modes(system, a0, length, ends);
    return {m.a_p.back(), m.a_s.back(), m.a_i.back()};
}

// Bisection in log(I) for a monotone-ish gain response crossing `target_db`.
double solve_pump(const std::function<double(double)>& gain_db, double i_max, double target_db,
                  const char* what) {
    double hi = i_max;
    double lo = i_max * 1e-4;
    if (gain_db(hi) < target_db) {
        throw NumericalError(fmt::format(
            "{}: {:.3f} dB gain is unreachable below the critical current", what, target_db));
    }
    if (gain_db(lo) > target_db) {
        throw NumericalError(fmt::format("{}: gain exceeds target even at minimal pump", what));
    }
    while (hi / lo - 1.0 > 1e-11) {
        const double mid = std::sqrt(lo * hi);
        if (gain_db(mid) < target_db) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

double pump_headroom(const OperatingPoint& op, const DeviceGeometry& g) {
    return (g.i_critical_a - std::abs(op.i_dc_a)) * (1.0 - 1e-9);
}

}  // namespace

std::array<Complex, 3> CoupledModeSystem::derivative(double z,
                                                     const std::array<Complex, 3>& a) const {
    const Complex& ap = a[0];
    const Complex& as = a[1];
    const Complex& ai = a[2];
    const double np = std::norm(ap);
    const double ns = std::norm(as);
    const double ni = std::norm(ai);
    const Complex rot = std::polar(1.0, delta_beta * z);
    const Complex rot_conj = std::conj(rot);
    return {
        kI * beta_p * (kappa * as * ai * rot + sigma * (np + 2.0 * ns + 2.0 * ni) * ap) -
            0.5 * alpha_p * ap,
        kI * beta_s * (kappa * ap * std::conj(ai) * rot_conj + sigma * (ns + 2.0 * np + 2.0 * ni) * as) -
            0.5 * alpha_s * as,
        kI * beta_i * (kappa * ap * std::conj(as) * rot_conj + sigma * (ni + 2.0 * np + 2.0 * ns) * ai) -
            0.5 * alpha_i * ai,
    };
}

double CoupledModeSystem::mode_impedance(double omega, double beta) const {
    return inductance_per_m * omega / beta;
}

void validate(const OperatingPoint& op, const DispersionCurve& curve, const DeviceGeometry& g) {
    if (std::abs(op.i_dc_a) + std::abs(op.i_pump_a) >= g.i_critical_a) {
        throw SuperconductivityBroken(fmt::format(
            "superconductivity broken: |I_DC| + |I_pump| = {:.6g} A reaches I_c = {:.6g} A",
            std::abs(op.i_dc_a) + std::abs(op.i_pump_a), g.i_critical_a));
    }
    if (!(op.f_pump_hz > 0.0)) {
        throw DomainError("operating point: pump frequency must be positive");
    }
    for (const Bandgap& gap : curve.gaps) {
        if (op.f_pump_hz >= gap.f_low_hz && op.f_pump_hz <= gap.f_high_hz) {
            throw DomainError(fmt::format("pump {:.6g} Hz lies inside the stopband [{:.6g}, {:.6g}] Hz",
                                          op.f_pump_hz, gap.f_low_hz, gap.f_high_hz));
        }
    }
}

CoupledModeSystem make_system(const OperatingPoint& op, const DispersionCurve& curve,
                              const DeviceGeometry& g, const SolverOptions& options) {
    const double fp = op.f_pump_hz;
    const double fs = op.f_signal_hz;
    const double fi = fp - fs;
    CoupledModeSystem s;
    s.beta_p = curve.beta_at(fp).real();
    s.beta_s = curve.beta_at(fs).real();
    s.beta_i = curve.beta_at(fi).real();
    s.delta_beta = phase_mismatch(fs, fp, curve);
    const double istar2 = g.i_star_a * g.i_star_a;
    s.kappa = op.i_dc_a / (2.0 * istar2);
    s.sigma = options.include_kerr ? 1.0 / (8.0 * istar2) : 0.0;
    if (options.include_loss) {
        s.alpha_p = power_attenuation(g, fp);
        s.alpha_s = power_attenuation(g, fs);
        s.alpha_i = power_attenuation(g, fi);
    }
    s.omega_p = kTwoPi * fp;
    s.omega_s = kTwoPi * fs;
    s.omega_i = kTwoPi * fi;
    s.inductance_per_m = dc_retuning(g, op.i_dc_a).inductance_per_m;
    return s;
}

ModeAmplitudes integrate_modes(const CoupledModeSystem& system, const std::array<Complex, 3>& initial,
                               double length, const SolverOptions& options) {
    if (!(length > 0.0)) {
        throw DomainError("integrate_modes: length must be positive");
    }
    const std::vector<double> z = linear_grid(0.0, length, std::max<std::size_t>(options.output_points, 2));
    IntegratorOptions io;
    io.rtol = options.rtol;
    double scale = 0.0;
    for (const Complex& v : initial) scale = std::max(scale, std::abs(v));
    io.overflow_limit = scale > 0.0 ? 1e6 * scale : 1.0;
    io.atol = scale > 0.0 ? scale * 1e-30 : 1e-300;

    const auto states = integrate_dopri5<3>(
        [&system](double zz, const std::array<Complex, 3>& a) { return system.derivative(zz, a); },
        initial, z, io);

    ModeAmplitudes out;
    out.z_m = z;
    out.a_p.reserve(z.size());
    out.a_s.reserve(z.size());
    out.a_i.reserve(z.size());
    for (const auto& st : states) {
        out.a_p.push_back(st[0]);
        out.a_s.push_back(st[1]);
        out.a_i.push_back(st[2]);
    }
    return out;
}

double signal_amplitude(const CoupledModeSystem& system, double power_w) {
    return std::sqrt(2.0 * power_w / system.mode_impedance(system.omega_s, system.beta_s));
}

double pump_power(const CoupledModeSystem& system, double i_pump_a) {
    return 0.5 * i_pump_a * i_pump_a * system.mode_impedance(system.omega_p, system.beta_p);
}

ModeAmplitudes propagate_3wm(const OperatingPoint& op, const DispersionCurve& curve,
                             const DeviceGeometry& g, const SolverOptions& options) {
    validate(op, curve, g);
    const CoupledModeSystem system = make_system(op, curve, g, options);
    const Complex a_s = std::polar(signal_amplitude(system, op.signal_power_w), op.phase_signal_rad);
    return integrate_modes(system, {Complex{op.i_pump_a}, a_s, Complex{0.0}}, g.line_length_m,
                           options);
}

double manley_rowe_violation(const ModeAmplitudes& m, const CoupledModeSystem& s) {
    auto flux = [](const Complex& a, double beta) { return std::norm(a) / beta; };
    const double np0 = flux(m.a_p.front(), s.beta_p);
    const double ps0 = np0 + flux(m.a_s.front(), s.beta_s);
    const double pi0 = np0 + flux(m.a_i.front(), s.beta_i);
    double worst = 0.0;
    for (std::size_t k = 0; k < m.z_m.size(); ++k) {
        const double np = flux(m.a_p[k], s.beta_p);
        worst = std::max(worst, std::abs(np + flux(m.a_s[k], s.beta_s) - ps0) / np0);
        worst = std::max(worst, std::abs(np + flux(m.a_i[k], s.beta_i) - pi0) / np0);
    }
    return worst;
}

double analytic_undepleted_gain(double g, double delta_beta, double length) {
    const Complex gamma = std::sqrt(Complex{g * g - 0.25 * delta_beta * delta_beta});
    const Complex x = gamma * length;
    // sinh(x)/x is entire and even in x, so the branch of gamma does not matter.
    Complex sinhc;
    if (std::abs(x) < 1e-4) {
        const Complex x2 = x * x;
        sinhc = 1.0 + x2 / 6.0 + x2 * x2 / 120.0;
    } else {
        sinhc = std::sinh(x) / x;
    }
    const Complex amplitude = std::cosh(x) + kI * (0.5 * delta_beta * length) * sinhc;
    return std::norm(amplitude);
}

double GainSpectrum::gain_at(double f) const {
    if (freq_hz.size() < 2 || f < freq_hz.front() || f > freq_hz.back()) {
        throw DomainError(fmt::format("gain_at: {:.6g} Hz outside the gain spectrum", f));
    }
    auto it = std::upper_bound(freq_hz.begin(), freq_hz.end(), f);
    std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - freq_hz.begin()), 1,
                                             freq_hz.size() - 1);
    const std::size_t lo = hi - 1;
    const double t = (f - freq_hz[lo]) / (freq_hz[hi] - freq_hz[lo]);
    const double db = ratio_to_db(gain[lo]) + t * (ratio_to_db(gain[hi]) - ratio_to_db(gain[lo]));
    return db_to_ratio(db);
}

double GainSpectrum::peak_db() const {
    if (gain.empty()) {
        throw DomainError("peak_db: empty spectrum");
    }
    return ratio_to_db(*std::max_element(gain.begin(), gain.end()));
}

double GainSpectrum::longest_band_above_db(double threshold_db) const {
    const std::size_t n = gain.size();
    double best = 0.0;
    std::size_t i = 0;
    auto crossing = [&](std::size_t a, std::size_t b) {
        const double da = ratio_to_db(gain[a]) - threshold_db;
        const double db = ratio_to_db(gain[b]) - threshold_db;
        return freq_hz[a] + (freq_hz[b] - freq_hz[a]) * da / (da - db);
    };
    while (i < n) {
        if (!(ratio_to_db(gain[i]) > threshold_db)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && ratio_to_db(gain[j + 1]) > threshold_db) ++j;
        const double lo = i == 0 ? freq_hz[0] : crossing(i - 1, i);
        const double hi = j + 1 == n ? freq_hz[j] : crossing(j, j + 1);
        best = std::max(best, hi - lo);
        i = j + 1;
    }
    return best;
}

GainSpectrum gain_spectrum(const OperatingPoint& op, const DispersionCurve& curve,
                           const DeviceGeometry& g, std::span<const double> freq_grid,
                           const SolverOptions& options) {
    GainSpectrum out;
    out.freq_hz.assign(freq_grid.begin(), freq_grid.end());
    out.gain.reserve(freq_grid.size());
    for (double fs : freq_grid) {
        OperatingPoint point = op;
        point.f_signal_hz = fs;
        point.phase_signal_rad = 0.0;
        validate(point, curve, g);
        const CoupledModeSystem system = make_system(point, curve, g, options);
        const double seed_power = pump_power(system, op.i_pump_a) / db_to_ratio(kSeedBelowPumpDb);
        const double a0 = signal_amplitude(system, seed_power);
        const auto end = endpoint(system, {Complex{op.i_pump_a}, Complex{a0}, Complex{0.0}},
                                  g.line_length_m, options);
        out.gain.push_back(std::norm(end[1]) / (a0 * a0) *
                           std::exp(system.alpha_s * g.line_length_m));
    }
    return out;
}

namespace {

struct LinearResponse {
    Complex mu, nu;
};

LinearResponse degenerate_response(const OperatingPoint& op, const DispersionCurve& curve,
                                   const DeviceGeometry& g, const SolverOptions& options) {
    OperatingPoint point = op;
    point.f_signal_hz = 0.5 * op.f_pump_hz;
    validate(point, curve, g);
    const CoupledModeSystem system = make_system(point, curve, g, options);
    const double seed = signal_amplitude(
        system, std::max(pump_power(system, op.i_pump_a), 1e-30) / db_to_ratio(kSeedBelowPumpDb));
    auto run = [&](Complex a0) {
        return endpoint(system, {Complex{op.i_pump_a}, a0, a0}, g.line_length_m, options)[1];
    };
    const Complex out0 = run(Complex{seed});
    const Complex out1 = run(Complex{0.0, seed});
    return {(out0 - kI * out1) / (2.0 * seed), (out0 + kI * out1) / (2.0 * seed)};
}

}  // namespace

QuadratureGains degenerate_quadrature_gains(const OperatingPoint& op, const DispersionCurve& curve,
                                            const DeviceGeometry& g, const SolverOptions& options) {
    const LinearResponse r = degenerate_response(op, curve, g, options);
    const double mu = std::abs(r.mu);
    const double nu = std::abs(r.nu);
    QuadratureGains out;
    out.g_amplified = (mu + nu) * (mu + nu);
    out.g_squeezed = (mu - nu) * (mu - nu);
    double phase = nu > 0.0 ? 0.5 * (std::arg(r.nu) - std::arg(r.mu)) : 0.0;
    phase = std::fmod(phase + kTwoPi, kPi);
    out.phase_amplified_rad = phase;
    out.phase_squeezed_rad = phase + 0.5 * kPi;
    return out;
}

std::vector<double> degenerate_gain_sweep(const OperatingPoint& op, const DispersionCurve& curve,
                                          const DeviceGeometry& g, std::span<const double> phases,
                                          const SolverOptions& options) {
    OperatingPoint point = op;
    point.f_signal_hz = 0.5 * op.f_pump_hz;
    validate(point, curve, g);
    const CoupledModeSystem system = make_system(point, curve, g, options);
    const double seed = signal_amplitude(
        system, std::max(pump_power(system, op.i_pump_a), 1e-30) / db_to_ratio(kSeedBelowPumpDb));
    std::vector<double> gains;
    gains.reserve(phases.size());
    for (double phi : phases) {
        const Complex a0 = std::polar(seed, phi);
        const auto end = endpoint(system, {Complex{op.i_pump_a}, a0, a0}, g.line_length_m, options);
        gains.push_back(std::norm(end[1]) / (seed * seed));
    }
    return gains;
}

CompressionCurve compression_curve(const OperatingPoint& op, const DispersionCurve& curve,
                                   const DeviceGeometry& g, std::span<const double> powers_dbm,
                                   const SolverOptions& options) {
    if (powers_dbm.empty() || !std::is_sorted(powers_dbm.begin(), powers_dbm.end())) {
        throw DomainError("compression_curve: power grid must be non-empty and ascending");
    }
    validate(op, curve, g);
    const CoupledModeSystem system = make_system(op, curve, g, options);
    const double length = g.line_length_m;
    auto gain_db_at = [&](double power_w) {
        const double a0 = signal_amplitude(system, power_w);
        const auto end = endpoint(system, {Complex{op.i_pump_a}, Complex{a0}, Complex{0.0}},
                                  length, options);
        return ratio_to_db(std::norm(end[1]) / (a0 * a0) * std::exp(system.alpha_s * length));
    };

    CompressionCurve out;
    out.small_signal_gain_db =
        gain_db_at(pump_power(system, op.i_pump_a) / db_to_ratio(kSeedBelowPumpDb));
    out.input_power_dbm.assign(powers_dbm.begin(), powers_dbm.end());
    for (double p : powers_dbm) out.gain_db.push_back(gain_db_at(dbm_to_watts(p)));

    const double level = out.small_signal_gain_db - 1.0;
    for (std::size_t k = 0; k < out.gain_db.size(); ++k) {
        if (out.gain_db[k] <= level) {
            if (k == 0) {
                throw NumericalError("P_1dB not bracketed: compressed at the lowest grid power");
            }
            const double p0 = out.input_power_dbm[k - 1], p1 = out.input_power_dbm[k];
            const double g0 = out.gain_db[k - 1], g1 = out.gain_db[k];
            out.p1db_dbm = p0 + (level - g0) * (p1 - p0) / (g1 - g0);
            return out;
        }
    }
    throw NumericalError("P_1dB not bracketed: no 1 dB compression within the power grid");
}

OscillationVerdict oscillation_check(double gain_db, double reflect_in_db, double reflect_out_db) {
    if (reflect_in_db > 0.0 || reflect_out_db > 0.0) {
        throw DomainError("oscillation_check: reflection magnitudes must be <= 0 dB");
    }
    const double round_trip_loss = std::abs(reflect_in_db) + std::abs(reflect_out_db);
    return {gain_db > round_trip_loss, round_trip_loss - gain_db};
}

double calibrate_pump_current(const OperatingPoint& op, const DispersionCurve& curve,
                              const DeviceGeometry& g, std::span<const double> freq_grid,
                              double target_peak_db, const SolverOptions& options) {
    auto peak = [&](double i_pump) {
        OperatingPoint point = op;
        point.i_pump_a = i_pump;
        return gain_spectrum(point, curve, g, freq_grid, options).peak_db();
    };
    return solve_pump(peak, pump_headroom(op, g), target_peak_db, "calibrate_pump_current");
}

double calibrate_degenerate_pump(const OperatingPoint& op, const DispersionCurve& curve,
                                 const DeviceGeometry& g, double target_gain_db,
                                 const SolverOptions& options) {
    auto gain = [&](double i_pump) {
        OperatingPoint point = op;
        point.i_pump_a = i_pump;
        return ratio_to_db(degenerate_quadrature_gains(point, curve, g, options).g_amplified);
    };
    return solve_pump(gain, pump_headroom(op, g), target_gain_db, "calibrate_degenerate_pump");
}

}  // namespace twpa
