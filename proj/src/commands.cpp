#include "twpa/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "twpa/constants.hpp"
#include "twpa/errors.hpp"

namespace twpa {

using nlohmann::ordered_json;

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
    return out;
}

void prepare_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError(fmt::format("output_dir: cannot create {}: {}", dir.string(), ec.message()));
}

// Writes the summary next to the CSVs and stores it in the report.
void finish_report(CommandReport& report, const std::filesystem::path& dir, const std::string& name,
                   const ordered_json& summary) {
    report.summary_json = summary.dump(2);
    const auto path = dir / name;
    auto out = open_output(path);
    out << report.summary_json << '\n';
    report.files.push_back(path);
}

// Non-finite numbers are not valid JSON; they become null.
ordered_json number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

DispersionCurve device_curve(const ExperimentConfig& c) {
    return bloch_dispersion(c.dispersion_grid.values(), c.device, c.operating_point.i_dc_a,
                            c.dispersion);
}

double pump_dbm(const ExperimentConfig& c, const OperatingPoint& op, const DispersionCurve& curve,
                const SolverOptions& options) {
    OperatingPoint probe = op;
    probe.f_signal_hz = 0.5 * op.f_pump_hz;
    const CoupledModeSystem system = make_system(probe, curve, c.device, options);
    return watts_to_dbm(pump_power(system, op.i_pump_a));
}

OperatingPoint pumped_point(const ExperimentConfig& c, const DispersionCurve& curve) {
    OperatingPoint op = c.operating_point;
    op.i_pump_a = resolved_pump_current(c, curve);
    if (!(op.i_pump_a > 0.0)) {
        throw ConfigError("operating_point.i_pump_a: must be positive (or set target_peak_gain_db)");
    }
    return op;
}

}  // namespace

double resolved_pump_current(const ExperimentConfig& c, const DispersionCurve& curve) {
    if (!c.target_peak_gain_db) return c.operating_point.i_pump_a;
    return calibrate_pump_current(c.operating_point, curve, c.device, c.gain_grid.values(),
                                  *c.target_peak_gain_db, c.solver);
}

CommandReport cmd_dispersion(const ExperimentConfig& c) {
    prepare_dir(c.output_dir);
    CommandReport report;
    const DispersionCurve curve = device_curve(c);

    const auto curve_path = c.output_dir / "dispersion.csv";
    {
        auto out = open_output(curve_path);
        write_dispersion_csv(out, curve);
    }
    report.files.push_back(curve_path);

    const auto gaps_path = c.output_dir / "bandgaps.csv";
    {
        auto out = open_output(gaps_path);
        out << "f_low_Hz,f_high_Hz,centre_Hz,width_Hz\n";
        for (const Bandgap& g : curve.gaps) {
            fmt::print(out, "{:.17g},{:.17g},{:.17g},{:.17g}\n", g.f_low_hz, g.f_high_hz, g.centre(),
                       g.width());
        }
    }
    report.files.push_back(gaps_path);

    const double f_stub = stub_resonance_frequency(c.device);
    ordered_json summary;
    summary["period_m"] = curve.period_m;
    summary["stub_resonance_hz"] = f_stub;
    ordered_json gaps = ordered_json::array();
    std::size_t below_20ghz = 0;
    for (const Bandgap& g : curve.gaps) {
        gaps.push_back({{"f_low_hz", g.f_low_hz}, {"f_high_hz", g.f_high_hz}, {"centre_hz", g.centre()}});
        if (g.centre() < 20e9) ++below_20ghz;
    }
    summary["gaps"] = gaps;
    summary["gaps_below_20ghz"] = below_20ghz;
    finish_report(report, c.output_dir, "dispersion_summary.json", summary);

    if (curve.gaps.empty()) {
        report.messages.push_back("no gaps");
    }
    for (const Bandgap& g : curve.gaps) {
        report.messages.push_back(fmt::format("gap {:.4f} - {:.4f} GHz (centre {:.4f} GHz)",
                                              g.f_low_hz / 1e9, g.f_high_hz / 1e9, g.centre() / 1e9));
    }
    report.messages.push_back(fmt::format("stub resonance {:.3f} GHz", f_stub / 1e9));
    return report;
}

CommandReport cmd_gain(const ExperimentConfig& c) {
    prepare_dir(c.output_dir);
    CommandReport report;
    const DispersionCurve curve = device_curve(c);
    const OperatingPoint op = pumped_point(c, curve);
    const GainSpectrum spectrum = gain_spectrum(op, curve, c.device, c.gain_grid.values(), c.solver);

    const auto path = c.output_dir / "gain.csv";
    {
        auto out = open_output(path);
        write_gain_csv(out, spectrum.freq_hz, spectrum.gain);
    }
    report.files.push_back(path);

    const auto peak = std::max_element(spectrum.gain.begin(), spectrum.gain.end());
    const double peak_db = ratio_to_db(*peak);
    const double peak_f = spectrum.freq_hz[static_cast<std::size_t>(peak - spectrum.gain.begin())];
    const OscillationVerdict verdict = oscillation_check(peak_db, c.reflection_in_db, c.reflection_out_db);

    ordered_json summary;
    summary["i_pump_a"] = op.i_pump_a;
    summary["pump_power_dbm"] = pump_dbm(c, op, curve, c.solver);
    summary["peak_gain_db"] = peak_db;
    summary["peak_freq_hz"] = peak_f;
    summary["band_above_17db_hz"] = spectrum.longest_band_above_db(17.0);
    summary["band_above_12db_hz"] = spectrum.longest_band_above_db(12.0);
    summary["oscillating"] = verdict.oscillating;
    summary["stability_margin_db"] = verdict.margin_db;
    finish_report(report, c.output_dir, "gain_summary.json", summary);

    report.messages.push_back(fmt::format("peak gain {:.2f} dB at {:.3f} GHz (I_pump {:.6g} A)", peak_db,
                                          peak_f / 1e9, op.i_pump_a));
    if (verdict.oscillating) {
        report.messages.push_back(fmt::format(
            "warning: gain exceeds the round-trip reflection loss by {:.2f} dB", -verdict.margin_db));
    }
    return report;
}

CommandReport cmd_compression(const ExperimentConfig& c) {
    prepare_dir(c.output_dir);
    CommandReport report;
    const DispersionCurve curve = device_curve(c);
    OperatingPoint op = pumped_point(c, curve);
    op.f_signal_hz = c.compression_f_signal_hz;
    const std::vector<double> powers = c.compression_power_dbm.values();
    const CompressionCurve cc = compression_curve(op, curve, c.device, powers, c.solver);

    const auto path = c.output_dir / "compression.csv";
    {
        auto out = open_output(path);
        out << "P_dBm,gain_dB\n";
        for (std::size_t i = 0; i < cc.input_power_dbm.size(); ++i) {
            fmt::print(out, "{:.17g},{:.17g}\n", cc.input_power_dbm[i], cc.gain_db[i]);
        }
    }
    report.files.push_back(path);

    ordered_json summary;
    summary["f_signal_hz"] = op.f_signal_hz;
    summary["small_signal_gain_db"] = cc.small_signal_gain_db;
    summary["p1db_dbm"] = cc.p1db_dbm;
    finish_report(report, c.output_dir, "compression_summary.json", summary);
    report.messages.push_back(fmt::format("P1dB {:.2f} dBm (small-signal gain {:.2f} dB)", cc.p1db_dbm,
                                          cc.small_signal_gain_db));
    return report;
}

NoiseAnalysis analyse_noise(const NoiseTrace& hot, const NoiseTrace& cold, const NoiseTrace& on,
                            const NoiseTrace& off, std::span<const double> gain, double t_hot,
                            double t_cold, CalibrationScale scale) {
    require_same_grid(hot, cold, "HOT", "COLD");
    require_same_grid(hot, on, "HOT", "TWPA_ON");
    require_same_grid(hot, off, "HOT", "TWPA_OFF");
    const CalibrationConstants cal = calibrate(hot, cold, t_hot, t_cold, scale);
    const CalibrationConstants cal_off = rereference(cal, off);

    NoiseAnalysis a;
    a.freq_hz = hot.freq_hz;
    a.gain.assign(gain.begin(), gain.end());
    a.added_cold_reference = added_noise(on, off, cal, gain);
    a.added_off_reference = added_noise(on, off, cal_off, gain);
    a.quantum_limit.resize(gain.size());
    double sum = 0.0, sum_dev = 0.0, max_dev = 0.0, sum_offset = 0.0;
    for (std::size_t i = 0; i < gain.size(); ++i) {
        a.quantum_limit[i] = gain[i] >= 1.0 ? quantum_limit(gain[i]) : 0.0;
        if (ratio_to_db(gain[i]) < a.band_threshold_db) continue;
        ++a.band_points;
        const double dev = std::abs(a.added_cold_reference[i] - a.quantum_limit[i]);
        sum += a.added_cold_reference[i];
        sum_dev += dev;
        max_dev = std::max(max_dev, dev);
        sum_offset += a.added_cold_reference[i] - a.added_off_reference[i];
    }
    if (a.band_points > 0) {
        const double n = static_cast<double>(a.band_points);
        a.band_mean_added = sum / n;
        a.band_mean_abs_deviation = sum_dev / n;
        a.band_max_abs_deviation = max_dev;
        a.offset_estimate = sum_offset / n;
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        a.band_mean_added = a.band_mean_abs_deviation = a.band_max_abs_deviation = a.offset_estimate = nan;
    }
    return a;
}

void write_added_noise_csv(std::ostream& out, const NoiseAnalysis& a) {
    out << "f_Hz,gain_dB,A_quanta,A_offref_quanta,quantum_limit\n";
    for (std::size_t i = 0; i < a.freq_hz.size(); ++i) {
        fmt::print(out, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", a.freq_hz[i], ratio_to_db(a.gain[i]),
                   a.added_cold_reference[i], a.added_off_reference[i], a.quantum_limit[i]);
    }
}

namespace {

ordered_json noise_summary(const NoiseAnalysis& a) {
    ordered_json s;
    s["band_threshold_db"] = a.band_threshold_db;
    s["band_points"] = a.band_points;
    s["mean_added_noise_quanta"] = number(a.band_mean_added);
    s["mean_abs_deviation_from_limit"] = number(a.band_mean_abs_deviation);
    s["max_abs_deviation_from_limit"] = number(a.band_max_abs_deviation);
    s["offset_estimate_quanta"] = number(a.offset_estimate);
    return s;
}

void add_noise_messages(CommandReport& report, const NoiseAnalysis& a) {
    if (a.band_points == 0) {
        report.messages.push_back(
            fmt::format("no points with gain above {:.0f} dB; band statistics undefined", a.band_threshold_db));
        return;
    }
    report.messages.push_back(fmt::format(
        "band (G >= {:.0f} dB, {} points): mean A {:.4f} quanta, mean |A - limit| {:.4f}, max {:.4f}",
        a.band_threshold_db, a.band_points, a.band_mean_added, a.band_mean_abs_deviation,
        a.band_max_abs_deviation));
    report.messages.push_back(
        fmt::format("offset between cold and off references {:.4f} quanta", a.offset_estimate));
}

}  // namespace

CommandReport cmd_noise(const ExperimentConfig& c) {
    const std::uint64_t seed = require_seed(c);
    prepare_dir(c.output_dir);
    CommandReport report;
    const NoiseRunSettings& n = c.noise;
    const std::vector<double> grid = n.grid.values();

    const DispersionCurve curve = device_curve(c);
    const OperatingPoint op = pumped_point(c, curve);
    const GainSpectrum spectrum = gain_spectrum(op, curve, c.device, grid, c.solver);

    DeviceResponse device;
    device.gain = spectrum.gain;
    device.f_pump_hz = op.f_pump_hz;
    device.ripple_period_scale = centre_line_constants(c.device, op.i_dc_a).phase_velocity() /
                                 centre_line_constants(c.device, 0.0).phase_velocity();
    double pump_generator_dbm = -std::numeric_limits<double>::infinity();
    if (n.pump_heating) {
        pump_generator_dbm = pump_dbm(c, op, curve, c.solver) + n.pump_line_attenuation_db;
        device.excess_quanta = pump_heating_excess(pump_generator_dbm);
    }

    const NoiseTrace hot = synthesize_trace(TraceConfig::hot, grid, n.readout, device, n.t_hot_min, seed);
    const NoiseTrace cold = synthesize_trace(TraceConfig::cold, grid, n.readout, device, n.t_cold_min, seed);
    const NoiseTrace on = synthesize_trace(TraceConfig::twpa_on, grid, n.readout, device, n.t_on_min, seed);
    const NoiseTrace off = synthesize_trace(TraceConfig::twpa_off, grid, n.readout, device, n.t_off_min, seed);

    const std::pair<const char*, const NoiseTrace*> traces[] = {
        {"trace_hot.csv", &hot}, {"trace_cold.csv", &cold}, {"trace_on.csv", &on}, {"trace_off.csv", &off}};
    for (const auto& [name, trace] : traces) {
        const auto path = c.output_dir / name;
        auto out = open_output(path);
        write_trace(out, *trace);
        report.files.push_back(path);
    }
    const auto gain_path = c.output_dir / "gain.csv";
    {
        auto out = open_output(gain_path);
        write_gain_csv(out, spectrum.freq_hz, spectrum.gain);
    }
    report.files.push_back(gain_path);

    const NoiseAnalysis a = analyse_noise(hot, cold, on, off, spectrum.gain, n.readout.t_hot_k,
                                          n.readout.t_cold_k, n.scale);
    const auto added_path = c.output_dir / "added_noise.csv";
    {
        auto out = open_output(added_path);
        write_added_noise_csv(out, a);
    }
    report.files.push_back(added_path);

    ordered_json summary = noise_summary(a);
    summary["seed"] = seed;
    summary["pump_heating_quanta"] = device.excess_quanta;
    summary["radiometer_sigma"] = n.readout.radiometer_noise ? radiometer_sigma(n.readout) : 0.0;
    finish_report(report, c.output_dir, "noise_summary.json", summary);
    add_noise_messages(report, a);
    return report;
}

CommandReport cmd_calibrate(const CalibrateInputs& in) {
    const NoiseTrace hot = ingest_trace(in.hot);
    const NoiseTrace cold = ingest_trace(in.cold);
    const NoiseTrace on = ingest_trace(in.on);
    const NoiseTrace off = ingest_trace(in.off);
    const std::pair<const NoiseTrace*, TraceConfig> expected[] = {
        {&hot, TraceConfig::hot}, {&cold, TraceConfig::cold}, {&on, TraceConfig::twpa_on}, {&off, TraceConfig::twpa_off}};
    const std::filesystem::path* paths[] = {&in.hot, &in.cold, &in.on, &in.off};
    for (std::size_t i = 0; i < 4; ++i) {
        if (expected[i].first->config != expected[i].second) {
            throw FormatError(fmt::format("{}: header says config={}, expected {}", paths[i]->string(),
                                          to_string(expected[i].first->config), to_string(expected[i].second)));
        }
    }
    const NoiseTrace* traces[] = {&cold, &on, &off};
    for (std::size_t i = 0; i < 3; ++i) {
        if (traces[i]->freq_hz != hot.freq_hz) {
            throw FormatError(fmt::format("frequency grids differ between {} and {}", in.hot.string(),
                                          paths[i + 1]->string()));
        }
    }
    const auto [gain_f, gain] = read_gain_csv(in.gain);
    if (gain_f != hot.freq_hz) {
        throw FormatError(
            fmt::format("frequency grids differ between {} and {}", in.hot.string(), in.gain.string()));
    }

    prepare_dir(in.output_dir);
    CommandReport report;
    const NoiseAnalysis a = analyse_noise(hot, cold, on, off, gain, in.t_hot_k, in.t_cold_k, in.scale);
    const auto path = in.output_dir / "added_noise.csv";
    {
        auto out = open_output(path);
        write_added_noise_csv(out, a);
    }
    report.files.push_back(path);
    finish_report(report, in.output_dir, "calibrate_summary.json", noise_summary(a));
    add_noise_messages(report, a);
    return report;
}

CommandReport cmd_squeeze(const ExperimentConfig& c) {
    prepare_dir(c.output_dir);
    CommandReport report;
    const SqueezeSettings& q = c.squeeze;
    if (q.attenuation_db.empty()) {
        throw ConfigError("squeeze.attenuation_db: need at least one attenuation");
    }
    SolverOptions options = c.solver;
    if (q.lossless) options.include_loss = false;

    const DispersionCurve curve = device_curve(c);
    OperatingPoint op = c.operating_point;
    op.f_pump_hz = q.f_pump_hz;
    const double i_max = calibrate_degenerate_pump(op, curve, c.device, q.max_gain_db, options);

    const AmpChainParams chain = c.chain_params();
    AmpChainParams off_params = chain;
    off_params.g_amplified = 1.0;
    off_params.g_squeezed = 1.0;
    off_params.n_added = 0.0;
    off_params.n_added_squeezed = 0.0;
    const double n_off = iq_quadrature_noise(off_params, 0.0).n_i;

    std::vector<SqueezeMeasurement> points;
    for (const double att : q.attenuation_db) {
        op.i_pump_a = i_max * db_to_ratio(-att / 2.0);
        const QuadratureGains g = degenerate_quadrature_gains(op, curve, c.device, options);
        AmpChainParams truth = chain;
        truth.g_amplified = g.g_amplified;
        truth.g_squeezed = g.g_squeezed;
        truth.n_added_squeezed = q.n_pa_max * db_to_ratio(-att);
        const QuadratureNoise iq = iq_quadrature_noise(truth, 0.0);
        points.push_back({att, g.g_amplified, g.g_squeezed, iq.n_i, iq.n_q, n_off});
    }

    AmpChainParams assumed = chain;
    assumed.n_added_squeezed = q.assumed_n_pa;
    const std::vector<SqueezeResult> rows = squeezing_analysis(points, assumed, q.orientation);

    const auto path = c.output_dir / "squeeze.csv";
    {
        auto out = open_output(path);
        out << "pump_attenuation_dB,G_a_dB,G_sq_dB,N_amplified,N_squeezed,N_off,N_sys,squeezing_dB,"
               "deviation_dB\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const SqueezeResult& r = rows[i];
            fmt::print(out, "{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                       r.pump_attenuation_db, r.g_amplified_db, r.g_squeezed_db, points[i].n_amplified_on,
                       points[i].n_squeezed_on, points[i].n_off, r.n_sys, r.squeezing_db,
                       r.g_amplified_db - r.squeezing_db);
        }
    }
    report.files.push_back(path);

    const auto best = std::max_element(rows.begin(), rows.end(), [](const SqueezeResult& a, const SqueezeResult& b) {
        return a.squeezing_db < b.squeezing_db;
    });
    ordered_json summary;
    summary["i_pump_max_a"] = i_max;
    summary["pump_power_max_dbm"] = pump_dbm(c, {op.i_dc_a, q.f_pump_hz, i_max, 0.0, 0.0, 0.0}, curve, options);
    summary["max_squeezing_db"] = best->squeezing_db;
    summary["g_a_at_max_squeezing_db"] = best->g_amplified_db;
    summary["fit_n_hemt"] = number(rows.front().n_hemt_fit);
    summary["fit_n_added"] = number(rows.front().n_added_fit);
    summary["fit_residual_rms"] = number(rows.front().residual);
    finish_report(report, c.output_dir, "squeeze_summary.json", summary);

    report.messages.push_back(fmt::format("max squeezing {:.2f} dB at G_a {:.2f} dB", best->squeezing_db,
                                          best->g_amplified_db));
    report.messages.push_back(fmt::format("noise fit: N_HEMT {:.4f}, N_a {:.4f} quanta", rows.front().n_hemt_fit,
                                          rows.front().n_added_fit));
    return report;
}

}  // namespace twpa
