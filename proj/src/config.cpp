#include "twpa/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "preset_paper_device.hpp"
#include "twpa/constants.hpp"
#include "twpa/errors.hpp"

namespace twpa {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) {
            throw ConfigError(fmt::format("{}: expected an object", path_));
        }
    }

    [[nodiscard]] bool has(const std::string& key) const { return node_.contains(key); }

    [[nodiscard]] std::string field(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = take(key)) {
            if (!v->is_number()) throw ConfigError(fmt::format("{}: expected a number", field(key)));
            out = v->get<double>();
            if (!std::isfinite(out)) throw ConfigError(fmt::format("{}: must be finite", field(key)));
        }
    }

    template <typename Int>
    void integer(const std::string& key, Int& out) {
        if (const json* v = take(key)) {
            if (v->is_number_integer() || v->is_number_unsigned()) {
                if (v->is_number_integer() && v->get<std::int64_t>() < 0) {
                    throw ConfigError(fmt::format("{}: must be non-negative", field(key)));
                }
                out = static_cast<Int>(v->get<std::uint64_t>());
                return;
            }
            if (v->is_number_float()) {
                const double d = v->get<double>();
                if (d >= 0.0 && d == std::floor(d) && d < 9.0e18) {
                    out = static_cast<Int>(d);
                    return;
                }
            }
            throw ConfigError(fmt::format("{}: expected a non-negative integer", field(key)));
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = take(key)) {
            if (!v->is_boolean()) throw ConfigError(fmt::format("{}: expected true or false", field(key)));
            out = v->get<bool>();
        }
    }

    std::optional<std::string> string(const std::string& key) {
        if (const json* v = take(key)) {
            if (!v->is_string()) throw ConfigError(fmt::format("{}: expected a string", field(key)));
            return v->get<std::string>();
        }
        return std::nullopt;
    }

    const json* take(const std::string& key) {
        used_.insert(key);
        const auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    void grid(GridSpec& g, const std::string& start, const std::string& stop) {
        number(start, g.start);
        number(stop, g.stop);
        integer("points", g.points);
    }

    void finish() const {
        for (const auto& [key, value] : node_.items()) {
            if (!used_.contains(key)) {
                throw ConfigError(fmt::format("{}: unknown key", field(key)));
            }
        }
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> used_;
};

void check_grid(const GridSpec& g, const std::string& path, bool positive) {
    if (g.points < 2) throw ConfigError(path + ".points: need at least 2 points");
    if (!(g.stop > g.start)) throw ConfigError(path + ": stop must exceed start");
    if (positive && !(g.start > 0.0)) throw ConfigError(path + ".start_hz: must be positive");
}

void read_device(Section s, ExperimentConfig& c) {
    DeviceGeometry& d = c.device;
    s.number("line_length_m", d.line_length_m);
    s.number("conductor_width_m", d.conductor_width_m);
    s.number("conductor_thickness_m", d.conductor_thickness_m);
    s.number("dielectric_thickness_m", d.dielectric_thickness_m);
    s.number("stub_length_avg_m", d.stub_length_avg_m);
    s.number("stub_width_m", d.stub_width_m);
    s.number("stub_pitch_m", d.stub_pitch_m);
    s.number("stub_modulation_amplitude_m", d.stub_modulation_amplitude_m);
    s.number("stub_modulation_wavelength_m", d.stub_modulation_wavelength_m);
    if (s.has("stub_phase_velocity_c")) {
        s.number("stub_phase_velocity_c", d.stub_phase_velocity_c);
    } else {
        d.stub_phase_velocity_c = 0.052;
        c.notices.push_back(
            "device.stub_phase_velocity_c not given; using 0.052 (fraction of c)");
    }
    s.number("loss_db_per_ghz", d.loss_db_per_ghz);
    s.number("impedance_ohm", c.line_impedance_ohm);
    s.number("phase_velocity_c", c.line_phase_velocity_c);
    s.number("i_star_a", d.i_star_a);
    s.number("i_critical_a", d.i_critical_a);
    s.finish();
}

void read_dispersion(Section s, ExperimentConfig& c) {
    if (auto model = s.string("stub_model")) {
        if (*model == "distributed") c.dispersion.stub_model = StubModel::distributed;
        else if (*model == "lumped") c.dispersion.stub_model = StubModel::lumped;
        else throw ConfigError(s.field("stub_model") + ": expected 'distributed' or 'lumped'");
    }
    int segments = c.dispersion.segments_per_cell;
    s.integer("segments_per_cell", segments);
    c.dispersion.segments_per_cell = segments;
    s.number("gap_threshold", c.dispersion.gap_threshold);
    s.boolean("include_loss", c.dispersion.include_loss);
    s.grid(c.dispersion_grid, "start_hz", "stop_hz");
    s.finish();
}

void read_operating_point(Section s, ExperimentConfig& c) {
    s.number("i_dc_a", c.operating_point.i_dc_a);
    s.number("f_pump_hz", c.operating_point.f_pump_hz);
    s.number("i_pump_a", c.operating_point.i_pump_a);
    if (s.has("target_peak_gain_db")) {
        double target = 0.0;
        s.number("target_peak_gain_db", target);
        c.target_peak_gain_db = target;
    } else {
        s.take("target_peak_gain_db");
    }
    s.finish();
}

void read_solver(Section s, ExperimentConfig& c) {
    s.number("rtol", c.solver.rtol);
    s.integer("output_points", c.solver.output_points);
    s.boolean("include_loss", c.solver.include_loss);
    s.boolean("include_kerr", c.solver.include_kerr);
    s.finish();
}

void read_gain(Section s, ExperimentConfig& c) {
    s.grid(c.gain_grid, "start_hz", "stop_hz");
    s.number("reflection_in_db", c.reflection_in_db);
    s.number("reflection_out_db", c.reflection_out_db);
    s.finish();
}

void read_compression(Section s, ExperimentConfig& c) {
    s.number("f_signal_hz", c.compression_f_signal_hz);
    s.grid(c.compression_power_dbm, "start_dbm", "stop_dbm");
    s.finish();
}

void read_noise(Section s, ExperimentConfig& c) {
    NoiseRunSettings& n = c.noise;
    s.grid(n.grid, "start_hz", "stop_hz");
    s.number("t_hot_k", n.readout.t_hot_k);
    s.number("t_cold_k", n.readout.t_cold_k);
    s.number("t_input_k", n.readout.t_input_k);
    s.number("readout_noise_quanta", n.readout.readout_noise_quanta);
    s.number("post_gain", n.readout.post_gain);
    s.number("ripple_amplitude", n.readout.ripple_amplitude);
    s.number("ripple_period_hz", n.readout.ripple_period_hz);
    s.number("drift_db_per_100min", n.readout.drift_db_per_100min);
    s.number("rbw_hz", n.readout.rbw_hz);
    s.integer("n_avg", n.readout.n_avg);
    s.boolean("radiometer_noise", n.readout.radiometer_noise);
    s.number("t_hot_min", n.t_hot_min);
    s.number("t_cold_min", n.t_cold_min);
    s.number("t_on_min", n.t_on_min);
    s.number("t_off_min", n.t_off_min);
    if (auto scale = s.string("calibration_scale")) {
        if (*scale == "quanta") n.scale = CalibrationScale::quanta;
        else if (*scale == "temperature") n.scale = CalibrationScale::temperature;
        else throw ConfigError(s.field("calibration_scale") + ": expected 'quanta' or 'temperature'");
    }
    s.boolean("pump_heating", n.pump_heating);
    s.number("pump_line_attenuation_db", n.pump_line_attenuation_db);
    s.finish();
}

void read_chain(Section s, ExperimentConfig& c) {
    s.number("n_added", c.n_added);
    s.number("n_hemt", c.n_hemt_input_referred);
    s.number("a_att_db", c.a_att_db);
    s.number("n_mk", c.n_mk);
    s.finish();
}

void read_squeeze(Section s, ExperimentConfig& c) {
    SqueezeSettings& q = c.squeeze;
    s.number("f_pump_hz", q.f_pump_hz);
    s.number("max_gain_db", q.max_gain_db);
    s.number("n_pa_max", q.n_pa_max);
    s.number("assumed_n_pa", q.assumed_n_pa);
    s.boolean("lossless", q.lossless);
    if (auto o = s.string("orientation")) {
        if (*o == "multiply") q.orientation = SqueezeOrientation::multiply;
        else if (*o == "literal") q.orientation = SqueezeOrientation::literal;
        else throw ConfigError(s.field("orientation") + ": expected 'multiply' or 'literal'");
    }
    if (const json* list = s.take("attenuation_db")) {
        if (!list->is_array()) throw ConfigError(s.field("attenuation_db") + ": expected an array");
        q.attenuation_db.clear();
        for (std::size_t i = 0; i < list->size(); ++i) {
            const json& v = (*list)[i];
            if (!v.is_number()) {
                throw ConfigError(fmt::format("{}[{}]: expected a number", s.field("attenuation_db"), i));
            }
            q.attenuation_db.push_back(v.get<double>());
        }
    }
    s.finish();
}

ExperimentConfig from_json(const json& root) {
    ExperimentConfig c;
    Section top(root, "");
    using Reader = void (*)(Section, ExperimentConfig&);
    const std::pair<const char*, Reader> sections[] = {
        {"device", read_device},       {"dispersion", read_dispersion},
        {"operating_point", read_operating_point}, {"solver", read_solver},
        {"gain", read_gain},           {"compression", read_compression},
        {"noise", read_noise},         {"chain", read_chain},
        {"squeeze", read_squeeze},
    };
    for (const auto& [name, reader] : sections) {
        if (const json* node = top.take(name)) {
            reader(Section(*node, name), c);
        } else if (std::string_view(name) == "device") {
            c.notices.push_back("device.stub_phase_velocity_c not given; using 0.052 (fraction of c)");
        }
    }
    if (const json* seed = top.take("seed")) {
        if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0)) {
            throw ConfigError("seed: expected a non-negative integer");
        }
        c.seed = seed->get<std::uint64_t>();
    }
    if (auto out = top.string("output_dir")) c.output_dir = *out;
    top.finish();

    if (!(c.line_impedance_ohm > 0.0)) throw ConfigError("device.impedance_ohm: must be positive");
    if (!(c.line_phase_velocity_c > 0.0 && c.line_phase_velocity_c <= 1.0)) {
        throw ConfigError("device.phase_velocity_c: must lie in (0, 1]");
    }
    c.device.loaded =
        line_constants_from_targets(c.line_impedance_ohm, c.line_phase_velocity_c * kSpeedOfLight);
    validate(c);
    return c;
}

json parse_json(std::string_view text, std::string_view what) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: invalid JSON ({})", what, e.what()));
    }
}

}  // namespace

std::vector<double> GridSpec::values() const { return linear_grid(start, stop, points); }

AmpChainParams ExperimentConfig::chain_params() const {
    AmpChainParams p;
    p.a_att = db_to_ratio(-a_att_db);
    p.n_hemt = n_hemt_input_referred * p.a_att;
    p.n_added = n_added;
    p.n_mk = n_mk;
    return p;
}

ExperimentConfig parse_config(std::string_view text) { return from_json(parse_json(text, "config")); }

ExperimentConfig parse_config(std::string_view base, std::string_view overlay) {
    json merged = parse_json(base, "base config");
    merged.merge_patch(parse_json(overlay, "config"));
    return from_json(merged);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string_view preset_json(std::string_view name) {
    if (name == "paper-device") return generated::kPaperDevicePreset;
    throw ConfigError(fmt::format("unknown preset '{}' (available: paper-device)", name));
}

void validate(const ExperimentConfig& c) {
    validate(c.device);
    if (!(c.line_impedance_ohm > 0.0)) throw ConfigError("device.impedance_ohm: must be positive");
    if (!(c.line_phase_velocity_c > 0.0) || c.line_phase_velocity_c > 1.0) {
        throw ConfigError("device.phase_velocity_c: must lie in (0, 1]");
    }
    if (c.dispersion.segments_per_cell < 1) {
        throw ConfigError("dispersion.segments_per_cell: must be at least 1");
    }
    if (!(c.dispersion.gap_threshold >= 0.0)) {
        throw ConfigError("dispersion.gap_threshold: must be non-negative");
    }
    check_grid(c.dispersion_grid, "dispersion", true);
    check_grid(c.gain_grid, "gain", true);
    check_grid(c.noise.grid, "noise", true);
    check_grid(c.compression_power_dbm, "compression", false);
    if (std::abs(c.operating_point.i_dc_a) >= c.device.i_critical_a) {
        throw ConfigError("operating_point.i_dc_a: must be below device.i_critical_a");
    }
    if (!(c.operating_point.f_pump_hz > 0.0)) {
        throw ConfigError("operating_point.f_pump_hz: must be positive");
    }
    if (c.target_peak_gain_db && !(*c.target_peak_gain_db > 0.0)) {
        throw ConfigError("operating_point.target_peak_gain_db: must be positive");
    }
    if (c.operating_point.i_pump_a < 0.0) {
        throw ConfigError("operating_point.i_pump_a: must be non-negative");
    }
    if (!(c.solver.rtol > 0.0) || c.solver.rtol >= 1e-2) {
        throw ConfigError("solver.rtol: must lie in (0, 1e-2)");
    }
    if (c.solver.output_points < 2) throw ConfigError("solver.output_points: need at least 2");
    if (!(c.compression_f_signal_hz > 0.0) ||
        !(c.compression_f_signal_hz < c.operating_point.f_pump_hz)) {
        throw ConfigError("compression.f_signal_hz: must lie between 0 and the pump frequency");
    }
    if (c.reflection_in_db > 0.0 || c.reflection_out_db > 0.0) {
        throw ConfigError("gain.reflection_in_db/reflection_out_db: must be <= 0 dB");
    }
    try {
        validate(c.noise.readout);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("noise: {}", e.what()));
    }
    if (c.a_att_db < 0.0) throw ConfigError("chain.a_att_db: must be >= 0");
    if (c.n_added < 0.0) throw ConfigError("chain.n_added: must be >= 0");
    if (c.n_hemt_input_referred < 0.0) throw ConfigError("chain.n_hemt: must be >= 0");
    if (c.n_mk < 0.0) throw ConfigError("chain.n_mk: must be >= 0");
    if (!(c.squeeze.f_pump_hz > 0.0)) throw ConfigError("squeeze.f_pump_hz: must be positive");
    if (!(c.squeeze.max_gain_db > 0.0)) throw ConfigError("squeeze.max_gain_db: must be positive");
    if (c.squeeze.n_pa_max < 0.0 || c.squeeze.assumed_n_pa < 0.0) {
        throw ConfigError("squeeze.n_pa_max/assumed_n_pa: must be >= 0");
    }
    for (std::size_t i = 0; i < c.squeeze.attenuation_db.size(); ++i) {
        if (c.squeeze.attenuation_db[i] < 0.0) {
            throw ConfigError(fmt::format("squeeze.attenuation_db[{}]: must be >= 0", i));
        }
    }
}

std::uint64_t require_seed(const ExperimentConfig& c) {
    if (!c.seed) throw ConfigError("seed: required for stochastic runs (set 'seed' or pass --seed)");
    return *c.seed;
}

}  // namespace twpa
