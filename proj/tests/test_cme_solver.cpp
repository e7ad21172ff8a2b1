#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "twpa/cme_solver.hpp"
#include "twpa/constants.hpp"
#include "twpa/errors.hpp"

using namespace twpa;

namespace {

constexpr double kPresetBias = 5.79e-4;
constexpr double kPresetPump = 11.297e9;
constexpr double kPresetPumpCurrent = 1.7079961329098163e-4;

DeviceGeometry reference_geometry() {
    DeviceGeometry g;
    g.loaded = line_constants_from_targets(50.0, 0.0078 * kSpeedOfLight);
    g.i_star_a = 4.6e-3;
    g.i_critical_a = 1.2e-3;
    return g;
}

const DispersionCurve& preset_curve() {
    static const DispersionCurve curve =
        bloch_dispersion(linear_grid(0.1e9, 25e9, 24901), reference_geometry(), kPresetBias);
    return curve;
}

OperatingPoint preset_point() {
    OperatingPoint op;
    op.i_dc_a = kPresetBias;
    op.f_pump_hz = kPresetPump;
    op.i_pump_a = kPresetPumpCurrent;
    return op;
}

// Symmetric, lossless, Kerr-free system with a prescribed coupling g and mismatch.
CoupledModeSystem oracle_system(double g, double delta_beta, double pump) {
    CoupledModeSystem s;
    s.beta_s = s.beta_i = 2.0e4;
    s.beta_p = 2.0 * s.beta_s + delta_beta;
    s.delta_beta = delta_beta;
    s.kappa = g / (s.beta_s * pump);
    s.omega_p = 2.0;
    s.omega_s = s.omega_i = 1.0;
    s.inductance_per_m = 1.0;
    return s;
}

// Straight-line curve beta = 2 pi f / v on the given grid.
DispersionCurve dispersionless_curve(double v) {
    UnitCell cell;
    cell.series_segment_length_m = 2e-6;
    cell.line_constants = line_constants_from_targets(50.0, v);
    cell.stubs = 0;
    const std::vector<UnitCell> cells{cell};
    return bloch_dispersion(linear_grid(0.1e9, 25e9, 2491), cells);
}

}  // namespace

TEST(AnalyticGain, ClosedFormExamples) {
    EXPECT_DOUBLE_EQ(analytic_undepleted_gain(0.0, 0.0, 0.1), 1.0);
    EXPECT_NEAR(analytic_undepleted_gain(30.0, 0.0, 0.1), std::pow(std::cosh(3.0), 2), 1e-9);
    EXPECT_NEAR(10.0 * std::log10(analytic_undepleted_gain(30.0, 0.0, 0.1)), 20.06, 0.01);
}

TEST(AnalyticGain, OscillatoryRegimeBounded) {
    // Delta beta = 2 g puts gamma at zero; beyond it gamma is imaginary and G oscillates.
    const double g = 30.0, length = 0.1;
    for (double db = 2.05 * g; db < 20.0 * g; db += 0.37 * g) {
        // gamma = i q: G = 1 + (g/q)^2 sin^2(q L) <= 1 + (g/q)^2.
        const double q = std::sqrt(0.25 * db * db - g * g);
        const double G = analytic_undepleted_gain(g, db, length);
        EXPECT_GE(G, 1.0 - 1e-12);
        EXPECT_LE(G, 1.0 + (g / q) * (g / q) + 1e-12);
        EXPECT_NEAR(G, 1.0 + std::pow(g / q * std::sin(q * length), 2), 1e-9);
    }
}

TEST(AnalyticGain, ContinuousAcrossGammaZero) {
    const double g = 25.0, length = 0.086;
    const double at = analytic_undepleted_gain(g, 2.0 * g, length);
    // At gamma = 0: |1 + i g L|^2.
    EXPECT_NEAR(at, 1.0 + g * g * length * length, 1e-9 * at);
    for (double eps : {1e-3, 1e-6, 1e-9}) {
        EXPECT_NEAR(analytic_undepleted_gain(g, 2.0 * g * (1.0 + eps), length), at, 10.0 * eps * at);
        EXPECT_NEAR(analytic_undepleted_gain(g, 2.0 * g * (1.0 - eps), length), at, 10.0 * eps * at);
    }
}

TEST(Solver, MatchesUndepletedOracle) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double pump = 1e-4;
    for (int trial = 0; trial < 40; ++trial) {
        const double length = 0.02 + 0.1 * u(rng);
        const double gl = 4.0 * u(rng);
        const double g = gl / length;
        const double db = (u(rng) - 0.5) * 4.0 * g;
        const CoupledModeSystem s = oracle_system(g, db, pump);
        SolverOptions o;
        o.output_points = 2;
        const ModeAmplitudes m = integrate_modes(s, {Complex{pump}, Complex{pump * 1e-6}, Complex{0.0}}, length, o);
        const double G = std::norm(m.a_s.back()) / std::norm(m.a_s.front());
        const double expected = analytic_undepleted_gain(g, db, length);
        EXPECT_NEAR(G / expected, 1.0, 1e-6) << "g=" << g << " db=" << db << " L=" << length;
    }
}

TEST(Solver, ManleyRoweInLosslessRun) {
    const CoupledModeSystem s = oracle_system(40.0, 10.0, 1e-4);
    const ModeAmplitudes m = integrate_modes(s, {Complex{1e-4}, Complex{1e-7}, Complex{0.0}}, 0.086);
    EXPECT_LT(manley_rowe_violation(m, s), 1e-6);
    // Strongly depleted run: signal seeded at the pump level.
    const ModeAmplitudes d = integrate_modes(s, {Complex{1e-4}, Complex{3e-5}, Complex{0.0}}, 0.086);
    EXPECT_LT(manley_rowe_violation(d, s), 1e-6);
    EXPECT_LT(std::norm(d.a_p.back()), 0.9 * std::norm(d.a_p.front()));
}

TEST(Solver, NoPumpMeansLossOnly) {
    const DeviceGeometry g = reference_geometry();
    OperatingPoint op = preset_point();
    op.i_pump_a = 0.0;
    op.f_signal_hz = 6e9;
    op.signal_power_w = 1e-12;
    const ModeAmplitudes m = propagate_3wm(op, preset_curve(), g);
    const double alpha = power_attenuation(g, 6e9);
    EXPECT_NEAR(std::norm(m.a_s.back()) / std::norm(m.a_s.front()), std::exp(-alpha * g.line_length_m), 1e-9);
}

TEST(Solver, ZeroBiasOnlyRotatesPhases) {
    DeviceGeometry g = reference_geometry();
    const DispersionCurve curve = bloch_dispersion(linear_grid(0.1e9, 25e9, 24901), g, 0.0);
    OperatingPoint op = preset_point();
    op.i_dc_a = 0.0;
    op.f_signal_hz = 5e9;
    op.signal_power_w = 1e-9;
    SolverOptions o;
    o.include_loss = false;
    const ModeAmplitudes m = propagate_3wm(op, curve, g, o);
    for (std::size_t k = 0; k < m.z_m.size(); k += 100) {
        EXPECT_NEAR(std::abs(m.a_p[k]) / std::abs(m.a_p.front()), 1.0, 1e-9);
        EXPECT_NEAR(std::abs(m.a_s[k]) / std::abs(m.a_s.front()), 1.0, 1e-9);
        EXPECT_EQ(std::abs(m.a_i[k]), 0.0);
    }
    EXPECT_GT(std::abs(std::arg(m.a_p.back() / m.a_p.front())), 1e-3);
}

TEST(Solver, DenseOutputGrid) {
    OperatingPoint op = preset_point();
    op.f_signal_hz = 6e9;
    op.signal_power_w = 1e-15;
    const ModeAmplitudes m = propagate_3wm(op, preset_curve(), reference_geometry());
    ASSERT_EQ(m.z_m.size(), 1001u);
    EXPECT_DOUBLE_EQ(m.z_m.front(), 0.0);
    EXPECT_DOUBLE_EQ(m.z_m.back(), 0.086);
}

TEST(Solver, TighterToleranceConverges) {
    OperatingPoint op = preset_point();
    const std::vector<double> f{3e9, 5.6e9, 8e9};
    SolverOptions loose;
    loose.output_points = 2;
    SolverOptions tight = loose;
    tight.rtol = 1e-10;
    const GainSpectrum a = gain_spectrum(op, preset_curve(), reference_geometry(), f, loose);
    const GainSpectrum b = gain_spectrum(op, preset_curve(), reference_geometry(), f, tight);
    for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_NEAR(b.gain[i] / a.gain[i], 1.0, 1e-7);
    }
}

TEST(Solver, IdlerPhotonsMatchSignalGainMinusOne) {
    const CoupledModeSystem s = oracle_system(35.0, 0.0, 1e-4);
    const ModeAmplitudes m = integrate_modes(s, {Complex{1e-4}, Complex{1e-10}, Complex{0.0}}, 0.086);
    const double G = std::norm(m.a_s.back()) / std::norm(m.a_s.front());
    const double idler_flux = std::norm(m.a_i.back()) / s.beta_i;
    const double signal_in = std::norm(m.a_s.front()) / s.beta_s;
    EXPECT_NEAR(idler_flux / signal_in, G - 1.0, 1e-6 * G);
}

TEST(Solver, OverflowAndStiffnessAreReported) {
    CoupledModeSystem s = oracle_system(10.0, 0.0, 1e-4);
    s.alpha_s = -2000.0;  // runaway growth
    EXPECT_THROW(integrate_modes(s, {Complex{1e-4}, Complex{1e-7}, Complex{0.0}}, 0.086), OscillationError);

    const CoupledModeSystem t = oracle_system(10.0, 0.0, 1e-4);
    SolverOptions impossible;
    impossible.rtol = 1e-300;
    EXPECT_THROW(integrate_modes(t, {Complex{1e-4}, Complex{1e-7}, Complex{0.0}}, 0.086, impossible),
                 StiffSystemError);
}

TEST(OperatingPointValidation, CriticalCurrentAndGap) {
    const DeviceGeometry g = reference_geometry();
    OperatingPoint op = preset_point();
    op.f_signal_hz = 5e9;
    op.i_pump_a = 0.7e-3;
    EXPECT_THROW(propagate_3wm(op, preset_curve(), g), SuperconductivityBroken);
    op.i_pump_a = 1e-4;
    op.f_pump_hz = preset_curve().gaps.front().centre();
    EXPECT_THROW(propagate_3wm(op, preset_curve(), g), DomainError);
}

TEST(GainSpectrum, PresetOperatingPoint) {
    const GainSpectrum s =
        gain_spectrum(preset_point(), preset_curve(), reference_geometry(), linear_grid(0.5e9, 10.5e9, 201));
    EXPECT_NEAR(s.peak_db(), 20.0, 3.0);
    EXPECT_GE(s.longest_band_above_db(17.0), 2e9);
    for (double g : s.gain) EXPECT_GT(g, 0.0);
}

TEST(GainSpectrum, UnityNearBandEdges) {
    // Coupling scales with sqrt(f_s f_i), so G - 1 shrinks linearly toward either edge.
    const DispersionCurve curve =
        bloch_dispersion(linear_grid(1e6, 25e9, 24901), reference_geometry(), kPresetBias);
    double previous_low = 1e9, previous_high = 1e9;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const std::vector<double> f{eps * kPresetPump, (1.0 - eps) * kPresetPump};
        const GainSpectrum s = gain_spectrum(preset_point(), curve, reference_geometry(), f);
        const double low = std::abs(10.0 * std::log10(s.gain[0]));
        const double high = std::abs(10.0 * std::log10(s.gain[1]));
        EXPECT_LT(low, previous_low);
        EXPECT_LT(high, previous_high);
        previous_low = low;
        previous_high = high;
    }
    EXPECT_LT(previous_low, 0.05);
    EXPECT_LT(previous_high, 0.05);
}

TEST(GainSpectrum, SymmetricAboutHalfPumpWhenDispersionless) {
    DeviceGeometry g = reference_geometry();
    const DispersionCurve curve = dispersionless_curve(g.loaded.phase_velocity());
    OperatingPoint op = preset_point();
    op.i_pump_a = 1.2e-4;
    SolverOptions o;
    o.include_loss = false;
    std::vector<double> f;
    for (double fs = 1e9; fs < 5.6e9; fs += 0.5e9) f.push_back(fs);
    std::vector<double> mirror;
    for (double fs : f) mirror.push_back(kPresetPump - fs);
    const GainSpectrum a = gain_spectrum(op, curve, g, f, o);
    const GainSpectrum b = gain_spectrum(op, curve, g, mirror, o);
    for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_NEAR(a.gain[i] / b.gain[i], 1.0, 1e-6) << f[i];
    }
}

TEST(GainSpectrum, BandWidthHelper) {
    GainSpectrum s;
    s.freq_hz = {1.0, 2.0, 3.0, 4.0, 5.0};
    for (double db : {0.0, 20.0, 20.0, 0.0, 20.0}) s.gain.push_back(std::pow(10.0, db / 10.0));
    // Crossings at 1.5 and 3.5 for the first run; the second run starts at 4.5.
    EXPECT_NEAR(s.longest_band_above_db(10.0), 2.0, 1e-12);
    EXPECT_EQ(s.longest_band_above_db(30.0), 0.0);
    EXPECT_NEAR(s.gain_at(1.5), std::pow(10.0, 1.0), 1e-9);
    EXPECT_THROW((void)s.gain_at(6.0), DomainError);
}

TEST(Degenerate, LosslessProductIsUnity) {
    SolverOptions o;
    o.include_loss = false;
    OperatingPoint op = preset_point();
    op.f_pump_hz = 11.313e9;
    for (double ip : {2e-5, 6e-5, 1.2e-4, 1.8e-4}) {
        op.i_pump_a = ip;
        const QuadratureGains q = degenerate_quadrature_gains(op, preset_curve(), reference_geometry(), o);
        EXPECT_NEAR(q.g_amplified * q.g_squeezed, 1.0, 1e-6);
        EXPECT_NEAR(std::remainder(q.phase_squeezed_rad - q.phase_amplified_rad, kPi), 0.5 * kPi, 1e-9);
    }
}

TEST(Degenerate, PhaseSweepAgreesWithLinearResponse) {
    OperatingPoint op = preset_point();
    op.f_pump_hz = 11.313e9;
    const QuadratureGains q = degenerate_quadrature_gains(op, preset_curve(), reference_geometry());
    std::vector<double> phases;
    for (int k = 0; k < 64; ++k) phases.push_back(kTwoPi * k / 64.0);
    phases.push_back(q.phase_amplified_rad);
    phases.push_back(q.phase_squeezed_rad);
    const std::vector<double> g = degenerate_gain_sweep(op, preset_curve(), reference_geometry(), phases);
    const double max = *std::max_element(g.begin(), g.end() - 2);
    const double min = *std::min_element(g.begin(), g.end() - 2);
    EXPECT_LE(max, q.g_amplified * (1.0 + 1e-6));
    EXPECT_GE(min, q.g_squeezed * (1.0 - 1e-6));
    EXPECT_NEAR(g[64] / q.g_amplified, 1.0, 1e-6);
    EXPECT_NEAR(g[65] / q.g_squeezed, 1.0, 1e-5);
}

TEST(Degenerate, PumpOffIsPhaseIndependent) {
    OperatingPoint op = preset_point();
    op.f_pump_hz = 11.313e9;
    op.i_pump_a = 0.0;
    SolverOptions o;
    o.include_loss = false;
    const std::vector<double> phases{0.0, 0.7, 1.9, 3.3, 5.0};
    for (double g : degenerate_gain_sweep(op, preset_curve(), reference_geometry(), phases, o)) {
        EXPECT_NEAR(g, 1.0, 1e-12);
    }
}

TEST(Degenerate, LossBreaksTheProductLaw) {
    OperatingPoint op = preset_point();
    op.f_pump_hz = 11.313e9;
    const QuadratureGains q = degenerate_quadrature_gains(op, preset_curve(), reference_geometry());
    EXPECT_LT(q.g_amplified * q.g_squeezed, 1.0 - 1e-3);
}

TEST(Compression, PresetPointAndMonotonicity) {
    OperatingPoint op = preset_point();
    op.f_signal_hz = 6e9;
    std::vector<double> p;
    for (double dbm = -90.0; dbm <= -40.0; dbm += 2.0) p.push_back(dbm);
    const CompressionCurve c = compression_curve(op, preset_curve(), reference_geometry(), p);
    EXPECT_NEAR(c.p1db_dbm, -57.0, 3.0);
    for (std::size_t i = 1; i < c.gain_db.size(); ++i) EXPECT_LE(c.gain_db[i], c.gain_db[i - 1] + 1e-9);
    // Output-referred compression point at +1 dB pump.
    op.i_pump_a *= std::pow(10.0, 1.0 / 20.0);
    const CompressionCurve stronger = compression_curve(op, preset_curve(), reference_geometry(), p);
    EXPECT_GT(stronger.small_signal_gain_db, c.small_signal_gain_db + 1.0);
    EXPECT_GT(stronger.p1db_dbm + stronger.small_signal_gain_db - 1.0, c.p1db_dbm + c.small_signal_gain_db - 1.0);
}

TEST(Compression, NotBracketed) {
    OperatingPoint op = preset_point();
    op.f_signal_hz = 6e9;
    const std::vector<double> p{-120.0, -110.0, -100.0};
    EXPECT_THROW(compression_curve(op, preset_curve(), reference_geometry(), p), NumericalError);
}

TEST(Oscillation, Criterion) {
    const OscillationVerdict stable = oscillation_check(20.0, -15.0, -15.0);
    EXPECT_FALSE(stable.oscillating);
    EXPECT_DOUBLE_EQ(stable.margin_db, 10.0);
    EXPECT_TRUE(oscillation_check(25.0, -10.0, -10.0).oscillating);
    // Improving each reflection by 5 dB raises the largest stable gain by 10 dB.
    const double before = oscillation_check(0.0, -15.0, -15.0).margin_db;
    const double after = oscillation_check(0.0, -20.0, -20.0).margin_db;
    EXPECT_DOUBLE_EQ(after - before, 10.0);
    EXPECT_THROW(oscillation_check(10.0, 1.0, -10.0), DomainError);
}

TEST(Calibration, PumpCurrentHitsTarget) {
    const std::vector<double> f = linear_grid(0.5e9, 10.5e9, 101);
    OperatingPoint op = preset_point();
    const double ip = calibrate_pump_current(op, preset_curve(), reference_geometry(), f, 15.0);
    op.i_pump_a = ip;
    EXPECT_NEAR(gain_spectrum(op, preset_curve(), reference_geometry(), f).peak_db(), 15.0, 1e-6);
    EXPECT_THROW(calibrate_pump_current(op, preset_curve(), reference_geometry(), f, 200.0), NumericalError);
}
