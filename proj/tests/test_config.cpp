#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "twpa/config.hpp"
#include "twpa/constants.hpp"
#include "twpa/errors.hpp"

using namespace twpa;

namespace {

std::string preset() { return std::string(preset_json("paper-device")); }

void expect_config_error(const std::string& overlay, const std::string& fragment) {
    try {
        parse_config(preset(), overlay);
        ADD_FAILURE() << "accepted overlay " << overlay;
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
}

}  // namespace

TEST(Config, PresetParses) {
    const ExperimentConfig c = parse_config(preset());
    EXPECT_DOUBLE_EQ(c.device.line_length_m, 86e-3);
    EXPECT_DOUBLE_EQ(c.device.stub_modulation_wavelength_m, 110e-6);
    EXPECT_DOUBLE_EQ(c.device.i_star_a, 4.6e-3);
    EXPECT_DOUBLE_EQ(c.operating_point.f_pump_hz, 11.297e9);
    EXPECT_DOUBLE_EQ(c.operating_point.i_dc_a, 5.79e-4);
    EXPECT_EQ(c.gain_grid.points, 500u);
    EXPECT_EQ(c.compression_power_dbm.points, 51u);
    EXPECT_EQ(c.seed, std::optional<std::uint64_t>(1));
    EXPECT_TRUE(c.notices.empty());
    EXPECT_NEAR(c.device.loaded.impedance(), 50.0, 1e-9);
    EXPECT_NEAR(c.device.loaded.phase_velocity(), 0.0078 * kSpeedOfLight, 1e-6);
}

TEST(Config, ChainParamsReferHemtThroughAttenuation) {
    const ExperimentConfig c = parse_config(preset());
    const AmpChainParams p = c.chain_params();
    EXPECT_NEAR(p.a_att, std::pow(10.0, -0.4), 1e-15);
    EXPECT_NEAR(p.n_hemt / p.a_att, 30.81, 1e-12);
    EXPECT_DOUBLE_EQ(p.n_added, 0.27);
}

TEST(Config, GridValues) {
    const GridSpec g{1.0, 2.0, 5};
    const auto v = g.values();
    ASSERT_EQ(v.size(), 5u);
    EXPECT_DOUBLE_EQ(v.front(), 1.0);
    EXPECT_DOUBLE_EQ(v[2], 1.5);
    EXPECT_DOUBLE_EQ(v.back(), 2.0);
}

TEST(Config, OverlayReplacesOnlyNamedKeys) {
    const ExperimentConfig c = parse_config(preset(), R"({"gain": {"points": 11}, "seed": 99})");
    EXPECT_EQ(c.gain_grid.points, 11u);
    EXPECT_DOUBLE_EQ(c.gain_grid.start, 0.5e9);
    EXPECT_EQ(c.seed, std::optional<std::uint64_t>(99));
}

TEST(Config, NullOverlayRemovesKey) {
    const ExperimentConfig c = parse_config(preset(), R"({"seed": null})");
    EXPECT_FALSE(c.seed.has_value());
    EXPECT_THROW(require_seed(c), ConfigError);
    EXPECT_EQ(require_seed(parse_config(preset())), 1u);
}

TEST(Config, UnknownKeysNameTheirPath) {
    expect_config_error(R"({"device": {"stub_lenght_m": 1}})", "device.stub_lenght_m: unknown key");
    expect_config_error(R"({"bogus": 1})", "bogus: unknown key");
}

TEST(Config, InvalidValuesNameTheirPath) {
    expect_config_error(R"({"solver": {"rtol": "tight"}})", "solver.rtol: expected a number");
    expect_config_error(R"({"solver": {"rtol": 0.5}})", "solver.rtol");
    expect_config_error(R"({"gain": {"points": 1}})", "gain.points");
    expect_config_error(R"({"gain": {"start_hz": 2e10}})", "gain");
    expect_config_error(R"({"dispersion": {"stub_model": "fancy"}})", "dispersion.stub_model");
    expect_config_error(R"({"noise": {"calibration_scale": "dB"}})", "noise.calibration_scale");
    expect_config_error(R"({"squeeze": {"orientation": "sideways"}})", "squeeze.orientation");
    expect_config_error(R"({"squeeze": {"attenuation_db": [1, "x"]}})", "squeeze.attenuation_db[1]");
    expect_config_error(R"({"operating_point": {"i_dc_a": 2e-3}})", "operating_point.i_dc_a");
    expect_config_error(R"({"chain": {"n_hemt": -1}})", "chain.n_hemt");
    expect_config_error(R"({"seed": -4})", "seed");
    expect_config_error(R"({"device": {"phase_velocity_c": 1.5}})", "phase_velocity_c");
}

TEST(Config, InvalidJsonIsConfigError) {
    EXPECT_THROW(parse_config("{not json"), ConfigError);
    EXPECT_THROW(parse_config(preset(), "[1, 2"), ConfigError);
    EXPECT_THROW(preset_json("other-device"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/twpa.json"), ConfigError);
}

TEST(Config, MissingStubVelocityUsesDefaultWithNotice) {
    const ExperimentConfig c = parse_config(preset(), R"({"device": {"stub_phase_velocity_c": null}})");
    EXPECT_DOUBLE_EQ(c.device.stub_phase_velocity_c, 0.052);
    ASSERT_EQ(c.notices.size(), 1u);
    EXPECT_NE(c.notices.front().find("stub_phase_velocity_c"), std::string::npos);
}

TEST(Config, TargetGainIsOptional) {
    EXPECT_FALSE(parse_config(preset()).target_peak_gain_db.has_value());
    const ExperimentConfig c = parse_config(preset(), R"({"operating_point": {"target_peak_gain_db": 15}})");
    ASSERT_TRUE(c.target_peak_gain_db.has_value());
    EXPECT_DOUBLE_EQ(*c.target_peak_gain_db, 15.0);
}
