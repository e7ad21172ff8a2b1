#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "twpa/commands.hpp"
#include "twpa/errors.hpp"

namespace {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kConfig = 2,
    kNumerical = 3,
    kDomain = 4,
};

struct CommonFlags {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON experiment config");
    cmd->add_option("--preset", flags.preset, "bundled config (paper-device); --config overrides it");
    cmd->add_option("--seed", flags.seed, "random seed for stochastic runs");
    cmd->add_option("--out", flags.out_dir, "output directory");
}

twpa::ExperimentConfig resolve(const CommonFlags& flags) {
    std::string overlay;
    if (!flags.config_path.empty()) {
        std::ifstream in(flags.config_path);
        if (!in) throw twpa::ConfigError(fmt::format("cannot open config file {}", flags.config_path));
        std::stringstream buffer;
        buffer << in.rdbuf();
        overlay = buffer.str();
    }
    twpa::ExperimentConfig config;
    if (!flags.preset.empty()) {
        const std::string_view base = twpa::preset_json(flags.preset);
        config = overlay.empty() ? twpa::parse_config(base) : twpa::parse_config(base, overlay);
    } else if (!overlay.empty()) {
        config = twpa::parse_config(overlay);
    } else {
        throw CLI::RequiredError("--config or --preset");
    }
    if (flags.seed) config.seed = flags.seed;
    if (!flags.out_dir.empty()) config.output_dir = flags.out_dir;
    return config;
}

void print(const twpa::CommandReport& report) {
    for (const std::string& line : report.messages) fmt::print("{}\n", line);
    for (const auto& file : report.files) fmt::print("wrote {}\n", file.string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kinetic-inductance travelling-wave amplifier modelling and noise calibration"};
    app.require_subcommand(1);

    CommonFlags flags;
    using Runner = twpa::CommandReport (*)(const twpa::ExperimentConfig&);
    const std::pair<const char*, Runner> simple[] = {
        {"dispersion", twpa::cmd_dispersion},
        {"gain", twpa::cmd_gain},
        {"compression", twpa::cmd_compression},
        {"noise", twpa::cmd_noise},
        {"squeeze", twpa::cmd_squeeze},
    };
    const std::pair<const char*, const char*> descriptions[] = {
        {"dispersion", "Bloch dispersion and band gaps"},
        {"gain", "small-signal gain spectrum"},
        {"compression", "gain against signal power and P1dB"},
        {"noise", "synthetic y-factor run and added noise"},
        {"squeeze", "degenerate pump sweep and squeezing extraction"},
    };
    std::vector<std::pair<CLI::App*, Runner>> subcommands;
    for (std::size_t i = 0; i < std::size(simple); ++i) {
        CLI::App* cmd = app.add_subcommand(simple[i].first, descriptions[i].second);
        add_common(cmd, flags);
        subcommands.emplace_back(cmd, simple[i].second);
    }

    twpa::CalibrateInputs cal;
    std::string scale = "quanta";
    std::string cal_out;
    CLI::App* calibrate = app.add_subcommand("calibrate", "added noise from HOT/COLD/ON/OFF trace files");
    calibrate->add_option("--hot", cal.hot, "HOT trace")->required();
    calibrate->add_option("--cold", cal.cold, "COLD trace")->required();
    calibrate->add_option("--on", cal.on, "TWPA_ON trace")->required();
    calibrate->add_option("--off", cal.off, "TWPA_OFF trace")->required();
    calibrate->add_option("--gain", cal.gain, "gain CSV (f_Hz,gain_dB)")->required();
    calibrate->add_option("--t-hot", cal.t_hot_k, "hot load temperature, K");
    calibrate->add_option("--t-cold", cal.t_cold_k, "cold load temperature, K");
    calibrate->add_option("--scale", scale, "calibration abscissa")->check(CLI::IsMember({"quanta", "temperature"}));
    calibrate->add_option("--out", cal_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (calibrate->parsed()) {
            cal.scale = scale == "temperature" ? twpa::CalibrationScale::temperature
                                               : twpa::CalibrationScale::quanta;
            if (!cal_out.empty()) cal.output_dir = cal_out;
            print(twpa::cmd_calibrate(cal));
            return kOk;
        }
        for (const auto& [cmd, run] : subcommands) {
            if (cmd->parsed()) {
                const twpa::ExperimentConfig config = resolve(flags);
                for (const std::string& notice : config.notices) fmt::print(stderr, "notice: {}\n", notice);
                print(run(config));
                return kOk;
            }
        }
    } catch (const CLI::ParseError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kUsage;
    } catch (const twpa::ConfigError& e) {
        fmt::print(stderr, "config error: {}\n", e.what());
        return kConfig;
    } catch (const twpa::FormatError& e) {
        fmt::print(stderr, "input error: {}\n", e.what());
        return kConfig;
    } catch (const twpa::NumericalError& e) {
        fmt::print(stderr, "numerical failure: {}\n", e.what());
        return kNumerical;
    } catch (const twpa::DomainError& e) {
        fmt::print(stderr, "invalid operating point: {}\n", e.what());
        return kDomain;
    }
    return kUsage;
}
