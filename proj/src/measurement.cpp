#include "twpa/measurement.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "twpa/constants.hpp"
#include "twpa/errors.hpp"

namespace twpa {

namespace {

std::vector<double> occupations(std::span<const double> freq, double t_k, CalibrationScale scale) {
    std::vector<double> out(freq.size());
    for (std::size_t i = 0; i < freq.size(); ++i) {
        out[i] = scale == CalibrationScale::quanta ? quanta(freq[i], t_k) : t_k;
    }
    return out;
}

double parse_double(std::string_view text, const std::string& where) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || first == last) {
        throw FormatError(fmt::format("{}: cannot parse number '{}'", where, text));
    }
    return value;
}

std::int64_t parse_int(std::string_view text, const std::string& where) {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw FormatError(fmt::format("{}: cannot parse integer '{}'", where, text));
    }
    return value;
}

}  // namespace

std::string_view to_string(TraceConfig config) {
    switch (config) {
        case TraceConfig::hot: return "HOT";
        case TraceConfig::cold: return "COLD";
        case TraceConfig::twpa_on: return "TWPA_ON";
        case TraceConfig::twpa_off: return "TWPA_OFF";
    }
    return "?";
}

TraceConfig trace_config_from_string(std::string_view text) {
    if (text == "HOT") return TraceConfig::hot;
    if (text == "COLD") return TraceConfig::cold;
    if (text == "TWPA_ON") return TraceConfig::twpa_on;
    if (text == "TWPA_OFF") return TraceConfig::twpa_off;
    throw FormatError(fmt::format("unknown trace config '{}'", text));
}

void validate(const ReadoutChain& c) {
    if (!(c.t_hot_k > c.t_cold_k) || c.t_cold_k < 0.0 || c.t_input_k < 0.0) {
        throw ConfigError("chain: require t_hot_k > t_cold_k >= 0 and t_input_k >= 0");
    }
    if (c.readout_noise_quanta < 0.0 || !(c.post_gain > 0.0)) {
        throw ConfigError("chain: readout_noise_quanta must be >= 0 and post_gain > 0");
    }
    if (std::abs(c.ripple_amplitude) >= 1.0 || !(c.ripple_period_hz > 0.0)) {
        throw ConfigError("chain: ripple amplitude must be below 1 and period positive");
    }
    if (!(c.rbw_hz > 0.0) || c.n_avg < 1) {
        throw ConfigError("chain: rbw_hz must be positive and n_avg >= 1");
    }
}

double radiometer_sigma(const ReadoutChain& c) {
    const double tau = static_cast<double>(c.n_avg) / c.rbw_hz;
    return 1.0 / std::sqrt(c.rbw_hz * tau);
}

double source_quanta(TraceConfig config, double f, const ReadoutChain& chain,
                     const DeviceResponse& device, std::size_t index) {
    switch (config) {
        case TraceConfig::hot: return quanta(f, chain.t_hot_k);
        case TraceConfig::cold: return quanta(f, chain.t_cold_k);
        case TraceConfig::twpa_off: return quanta(f, chain.t_input_k);
        case TraceConfig::twpa_on: {
            if (index >= device.gain.size()) {
                throw ConfigError("synthesize_trace: TWPA_ON needs a gain value per grid point");
            }
            const double g = device.gain[index];
            const double f_idler = device.f_pump_hz - f;
            const double n_idler = f_idler > 0.0 ? quanta(f_idler, chain.t_input_k) : 0.0;
            // Signal-port input plus the idler-port input converted with gain G - 1.
            return g * (quanta(f, chain.t_input_k) + device.excess_quanta) + (g - 1.0) * n_idler;
        }
    }
    return 0.0;
}

NoiseTrace synthesize_trace(TraceConfig config, std::span<const double> freq_grid,
                            const ReadoutChain& chain, const DeviceResponse& device, double t_min,
                            std::uint64_t seed) {
    validate(chain);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(config) + 1u};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
    std::normal_distribution<double> normal(0.0, 1.0);

    // The switch state decides the standing-wave pattern: new phase per configuration.
    const double ripple_phase = uniform(rng);
    const bool biased = config == TraceConfig::twpa_on || config == TraceConfig::twpa_off;
    const double period = chain.ripple_period_hz * (biased ? device.ripple_period_scale : 1.0);
    const double drift = db_to_ratio(chain.drift_db_per_100min * t_min / 100.0);
    const double sigma = chain.radiometer_noise ? radiometer_sigma(chain) : 0.0;

    NoiseTrace trace;
    trace.config = config;
    trace.t_min = t_min;
    trace.rbw_hz = chain.rbw_hz;
    trace.n_avg = chain.n_avg;
    trace.freq_hz.assign(freq_grid.begin(), freq_grid.end());
    trace.power_w_per_hz.resize(freq_grid.size());
    for (std::size_t i = 0; i < freq_grid.size(); ++i) {
        const double f = freq_grid[i];
        const double n = source_quanta(config, f, chain, device, i) + chain.readout_noise_quanta;
        const double ripple = 1.0 + chain.ripple_amplitude * std::sin(kTwoPi * f / period + ripple_phase);
        double p = n * kPlanck * f * chain.post_gain * ripple * drift;
        if (sigma > 0.0) {
            p *= 1.0 + sigma * normal(rng);
        }
        trace.power_w_per_hz[i] = p;
    }
    return trace;
}

void require_same_grid(const NoiseTrace& a, const NoiseTrace& b, std::string_view name_a,
                       std::string_view name_b) {
    if (a.freq_hz != b.freq_hz) {
        throw DomainError(fmt::format("frequency grids differ between {} and {}", name_a, name_b));
    }
}

CalibrationConstants calibrate(const NoiseTrace& hot, const NoiseTrace& cold, double t_hot,
                               double t_cold, CalibrationScale scale) {
    require_same_grid(hot, cold, "HOT", "COLD");
    if (!(t_hot > t_cold)) {
        throw DomainError("calibrate: require T_H > T_C");
    }
    const std::vector<double> x_hot = occupations(hot.freq_hz, t_hot, scale);
    const std::vector<double> x_cold = occupations(hot.freq_hz, t_cold, scale);
    CalibrationConstants cal;
    cal.scale = scale;
    cal.freq_hz = hot.freq_hz;
    cal.reference_abscissa = x_cold;
    const std::size_t n = hot.freq_hz.size();
    cal.slope.resize(n);
    cal.intercept.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        cal.slope[i] = (hot.power_w_per_hz[i] - cold.power_w_per_hz[i]) / (x_hot[i] - x_cold[i]);
        cal.intercept[i] = cold.power_w_per_hz[i] - cal.slope[i] * x_cold[i];
    }
    return cal;
}

CalibrationConstants rereference(const CalibrationConstants& cal, const NoiseTrace& reference) {
    if (reference.freq_hz != cal.freq_hz) {
        throw DomainError("rereference: reference trace grid differs from the calibration grid");
    }
    CalibrationConstants out = cal;
    for (std::size_t i = 0; i < out.freq_hz.size(); ++i) {
        out.intercept[i] = reference.power_w_per_hz[i] - out.slope[i] * out.reference_abscissa[i];
    }
    return out;
}

std::vector<double> trace_quanta(const NoiseTrace& trace, const CalibrationConstants& cal) {
    if (trace.freq_hz != cal.freq_hz) {
        throw DomainError("trace grid differs from the calibration grid");
    }
    std::vector<double> out(trace.freq_hz.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = (trace.power_w_per_hz[i] - cal.intercept[i]) / cal.slope[i];
        out[i] = cal.scale == CalibrationScale::quanta
                     ? x
                     : x * kBoltzmann / (kPlanck * trace.freq_hz[i]);
    }
    return out;
}

std::vector<double> trace_temperature(const NoiseTrace& trace, const CalibrationConstants& cal) {
    if (trace.freq_hz != cal.freq_hz) {
        throw DomainError("trace grid differs from the calibration grid");
    }
    std::vector<double> out(trace.freq_hz.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = (trace.power_w_per_hz[i] - cal.intercept[i]) / cal.slope[i];
        out[i] = cal.scale == CalibrationScale::quanta
                     ? temperature_from_quanta(trace.freq_hz[i], x)
                     : x;
    }
    return out;
}

std::vector<double> added_noise(const NoiseTrace& on, const NoiseTrace& off,
                                const CalibrationConstants& cal, std::span<const double> gain) {
    require_same_grid(on, off, "TWPA_ON", "TWPA_OFF");
    if (gain.size() != on.freq_hz.size()) {
        throw DomainError("added_noise: gain spectrum length differs from the trace grid");
    }
    const std::vector<double> n_on = trace_quanta(on, cal);
    const std::vector<double> n_off = trace_quanta(off, cal);
    std::vector<double> a(n_on.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(gain[i] > 0.0)) {
            throw DomainError(fmt::format("added_noise: non-positive gain at {:.6g} Hz", on.freq_hz[i]));
        }
        a[i] = n_on[i] / gain[i] - n_off[i];
    }
    return a;
}

NoiseFit fit_noise_model(std::span<const NoiseFitPoint> points) {
    // Centred normal equations for y = a + b x, x = 1/G.
    const double n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& p : points) {
        if (!(p.g_amplified > 0.0)) {
            throw DomainError("fit_noise_model: gains must be positive");
        }
        sx += 1.0 / p.g_amplified;
        sy += p.n_sys;
    }
    if (points.size() < 2) {
        throw NumericalError("fit_noise_model: degenerate design matrix (fewer than two points)");
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : points) {
        const double dx = 1.0 / p.g_amplified - mx;
        sxx += dx * dx;
        sxy += dx * (p.n_sys - my);
    }
    if (!(sxx > 1e-300) || sxx <= 1e-14 * (mx * mx + 1.0) * n) {
        throw NumericalError("fit_noise_model: degenerate design matrix (need two distinct gains)");
    }
    NoiseFit fit;
    fit.n_hemt = sxy / sxx;
    fit.n_added = my - fit.n_hemt * mx;
    double rss = 0.0;
    for (const auto& p : points) {
        const double r = p.n_sys - (fit.n_added + fit.n_hemt / p.g_amplified);
        rss += r * r;
    }
    fit.residual_rms = std::sqrt(rss / n);
    fit.unit_var_n_hemt = 1.0 / sxx;
    fit.unit_var_n_added = 1.0 / n + mx * mx / sxx;
    return fit;
}

QuadratureNoise iq_quadrature_noise(const AmpChainParams& p, double lo_phase) {
    auto readout = [&p](double theta) {
        const double c2 = std::cos(theta) * std::cos(theta);
        const double s2 = 1.0 - c2;
        const double gain = p.g_amplified * c2 + p.g_squeezed * s2;
        const double added = p.n_added * p.g_amplified * c2 + p.n_added_squeezed * s2;
        return p.a_att * (p.n_mk * gain + added) + p.n_mk * (1.0 - p.a_att) + p.n_hemt;
    };
    return {readout(lo_phase), readout(lo_phase + 0.5 * kPi)};
}

std::vector<SqueezeResult> squeezing_analysis(std::span<const SqueezeMeasurement> points,
                                              const AmpChainParams& chain,
                                              SqueezeOrientation orientation) {
    validate(chain);
    std::vector<SqueezeResult> rows;
    std::vector<NoiseFitPoint> fit_points;
    rows.reserve(points.size());
    for (const SqueezeMeasurement& m : points) {
        SqueezeResult r;
        r.pump_attenuation_db = m.pump_attenuation_db;
        r.g_amplified_db = ratio_to_db(m.g_amplified);
        r.g_squeezed_db = ratio_to_db(m.g_squeezed);
        // Invert the amplified-quadrature readout back to the TWPA input.
        r.n_sys = (m.n_amplified_on - chain.n_mk * (1.0 - chain.a_att)) /
                      (chain.a_att * m.g_amplified) -
                  chain.n_mk;
        // The off trace defines the vacuum-plus-readout level; only the ratio is used.
        r.squeezing_db =
            extract_squeezing(m.n_squeezed_on / m.n_off, chain, orientation).squeezing_db;
        rows.push_back(r);
        fit_points.push_back({m.g_amplified, r.n_sys});
    }

    bool distinct = false;
    for (const auto& p : fit_points) {
        if (std::abs(p.g_amplified - fit_points.front().g_amplified) > 1e-9 * p.g_amplified) {
            distinct = true;
        }
    }
    if (distinct) {
        const NoiseFit fit = fit_noise_model(fit_points);
        for (SqueezeResult& r : rows) {
            r.n_hemt_fit = fit.n_hemt;
            r.n_added_fit = fit.n_added;
            r.residual = fit.residual_rms;
        }
    } else {
        for (SqueezeResult& r : rows) {
            r.n_hemt_fit = std::nan("");
            r.n_added_fit = std::nan("");
            r.residual = std::nan("");
        }
    }
    return rows;
}

void write_trace(std::ostream& out, const NoiseTrace& t, PowerUnit unit) {
    fmt::print(out, "# twpa-trace v1, config={}, unit={}, rbw_hz={:.17g}, t_min={:.17g}, n_avg={}\n",
               to_string(t.config), unit == PowerUnit::dbm ? "dBm" : "W_per_Hz", t.rbw_hz, t.t_min,
               t.n_avg);
    for (std::size_t i = 0; i < t.freq_hz.size(); ++i) {
        const double p = unit == PowerUnit::dbm ? watts_to_dbm(t.power_w_per_hz[i] * t.rbw_hz)
                                                : t.power_w_per_hz[i];
        fmt::print(out, "{:.17g},{:.17g}\n", t.freq_hz[i], p);
    }
}

NoiseTrace read_trace(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError(fmt::format("{}: empty file", name));
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string magic = "# twpa-trace v1";
    if (line.rfind(magic, 0) != 0) {
        throw FormatError(fmt::format("{}: missing '# twpa-trace v1' header", name));
    }
    std::optional<std::string> config, unit;
    std::optional<double> rbw, t_min;
    std::optional<std::int64_t> n_avg;
    std::stringstream fields(line.substr(magic.size()));
    std::string field;
    while (std::getline(fields, field, ',')) {
        const auto start = field.find_first_not_of(' ');
        if (start == std::string::npos) continue;
        field = field.substr(start);
        const auto eq = field.find('=');
        if (eq == std::string::npos) {
            throw FormatError(fmt::format("{}: malformed header field '{}'", name, field));
        }
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        const std::string where = name + " header " + key;
        if (key == "config") config = value;
        else if (key == "unit") unit = value;
        else if (key == "rbw_hz") rbw = parse_double(value, where);
        else if (key == "t_min") t_min = parse_double(value, where);
        else if (key == "n_avg") n_avg = parse_int(value, where);
        else throw FormatError(fmt::format("{}: unknown header field '{}'", name, key));
    }
    if (!unit) throw FormatError(fmt::format("{}: unit tag missing from header", name));
    if (!config) throw FormatError(fmt::format("{}: config tag missing from header", name));
    if (!rbw || !t_min || !n_avg) {
        throw FormatError(fmt::format("{}: header needs rbw_hz, t_min and n_avg", name));
    }
    PowerUnit power_unit;
    if (*unit == "W_per_Hz") power_unit = PowerUnit::w_per_hz;
    else if (*unit == "dBm") power_unit = PowerUnit::dbm;
    else throw FormatError(fmt::format("{}: unknown unit '{}'", name, *unit));
    if (!(*rbw > 0.0)) throw FormatError(fmt::format("{}: rbw_hz must be positive", name));

    NoiseTrace t;
    t.config = trace_config_from_string(*config);
    t.rbw_hz = *rbw;
    t.t_min = *t_min;
    t.n_avg = *n_avg;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            throw FormatError(fmt::format("{}: row {}: expected 'freq_hz,power'", name, row));
        }
        const std::string where = fmt::format("{}: row {}", name, row);
        const double f = parse_double(std::string_view(line).substr(0, comma), where);
        const double p = parse_double(std::string_view(line).substr(comma + 1), where);
        if (!std::isfinite(f) || !std::isfinite(p)) {
            throw FormatError(fmt::format("{}: non-finite value", where));
        }
        if (!t.freq_hz.empty() && !(f > t.freq_hz.back())) {
            throw FormatError(fmt::format("{}: frequency grid not strictly ascending", where));
        }
        const double psd = power_unit == PowerUnit::dbm ? dbm_to_watts(p) / t.rbw_hz : p;
        if (!(psd > 0.0)) {
            throw FormatError(fmt::format("{}: power must be positive", where));
        }
        t.freq_hz.push_back(f);
        t.power_w_per_hz.push_back(psd);
    }
    if (t.freq_hz.empty()) {
        throw FormatError(fmt::format("{}: no data rows", name));
    }
    return t;
}

NoiseTrace ingest_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError(fmt::format("cannot open trace file {}", path.string()));
    }
    return read_trace(in, path.string());
}

void write_gain_csv(std::ostream& out, std::span<const double> f, std::span<const double> gain) {
    out << "f_Hz,gain_dB\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        fmt::print(out, "{:.17g},{:.17g}\n", f[i], ratio_to_db(gain[i]));
    }
}

std::pair<std::vector<double>, std::vector<double>> read_gain_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError(fmt::format("cannot open gain file {}", path.string()));
    }
    std::string line;
    std::getline(in, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "f_Hz,gain_dB") {
        throw FormatError(fmt::format("{}: expected header 'f_Hz,gain_dB'", path.string()));
    }
    std::vector<double> f, g;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        const std::string where = fmt::format("{}: row {}", path.string(), row);
        if (comma == std::string::npos) throw FormatError(where + ": expected two columns");
        f.push_back(parse_double(std::string_view(line).substr(0, comma), where));
        g.push_back(db_to_ratio(parse_double(std::string_view(line).substr(comma + 1), where)));
    }
    return {f, g};
}

}  // namespace twpa
