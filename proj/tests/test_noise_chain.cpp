#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "twpa/constants.hpp"
#include "twpa/errors.hpp"
#include "twpa/noise_chain.hpp"

using namespace twpa;

namespace {

// coth(x)/2 straight from the exponential definition, for moderate x.
double coth_half(double f, double t) {
    const double x = kPlanck * f / (2.0 * kBoltzmann * t);
    return 0.5 * (std::exp(x) + std::exp(-x)) / (std::exp(x) - std::exp(-x));
}

}  // namespace

TEST(Quanta, ColdLoadIsVacuum) {
    const double n = quanta(5.6565e9, 0.020);
    EXPECT_NEAR(n, 0.5, 1e-5);
    EXPECT_GT(n, 0.5);
}

TEST(Quanta, HotLoad) {
    EXPECT_NEAR(quanta(5.65e9, 3.38), 12.47, 0.01);
    EXPECT_NEAR(quanta(5.65e9, 3.38), coth_half(5.65e9, 3.38), 1e-12);
}

TEST(Quanta, ClassicalLimit) {
    const double f = 1e9, t = 300.0;
    EXPECT_NEAR(quanta(f, t) / (kBoltzmann * t / (kPlanck * f)), 1.0, 1e-3);
}

TEST(Quanta, ZeroTemperatureAndErrors) {
    EXPECT_EQ(quanta(5e9, 0.0), 0.5);
    EXPECT_EQ(quanta(5e9, 1e-6), 0.5);  // e^{-240000} underflows cleanly
    EXPECT_THROW(quanta(0.0, 1.0), DomainError);
    EXPECT_THROW(quanta(-1e9, 1.0), DomainError);
    EXPECT_THROW(quanta(1e9, -1.0), DomainError);
}

TEST(Quanta, MonotoneWithVacuumFloor) {
    for (double f = 1e9; f <= 12e9; f += 1e9) {
        double previous = 0.5;
        for (double t = 0.01; t < 10.0; t *= 1.3) {
            const double n = quanta(f, t);
            EXPECT_GE(n, previous);
            EXPECT_GE(n, 0.5);
            previous = n;
        }
        EXPECT_GT(quanta(f, 1.0), quanta(f + 1e9, 1.0));
    }
}

TEST(Quanta, TemperatureInverse) {
    for (double t : {0.05, 0.3, 1.0, 3.38, 50.0}) {
        EXPECT_NEAR(temperature_from_quanta(6e9, quanta(6e9, t)) / t, 1.0, 1e-10);
    }
    EXPECT_EQ(temperature_from_quanta(6e9, 0.5), 0.0);
    EXPECT_THROW(temperature_from_quanta(6e9, 0.4), DomainError);
}

TEST(QuantumLimit, Values) {
    EXPECT_EQ(quantum_limit(1.0), 0.0);
    EXPECT_NEAR(quantum_limit(100.0), 0.495, 1e-15);
    EXPECT_NEAR(quantum_limit(1e12), 0.5, 1e-12);
    EXPECT_THROW(quantum_limit(0.5), DomainError);
    double previous = -1.0;
    for (double g = 1.0; g < 1e6; g *= 1.7) {
        const double a = quantum_limit(g);
        EXPECT_GT(a, previous);
        EXPECT_LT(a, 0.5);
        previous = a;
    }
}

TEST(SystemNoise, FittedChainValues) {
    AmpChainParams p;
    p.g_amplified = 100.0;
    p.n_hemt = 30.81;
    p.n_added = 0.27;
    EXPECT_NEAR(system_noise(p), 0.5781, 1e-12);
    p.g_amplified = 1.0;
    EXPECT_NEAR(system_noise(p), 31.08, 1e-12);
    p.g_amplified = 1e15;
    EXPECT_NEAR(system_noise(p), 0.27, 1e-12);
}

TEST(SystemNoise, HemtReferredThroughAttenuation) {
    AmpChainParams p;
    p.g_amplified = 10.0;
    p.a_att = db_to_ratio(-4.0);
    p.n_hemt = 30.81 * p.a_att;  // at the HEMT input
    EXPECT_NEAR(system_noise(p), 3.081, 1e-12);
}

TEST(SystemNoise, DecreasingInGainLinearInHemt) {
    AmpChainParams p;
    p.n_added = 0.2;
    p.n_hemt = 20.0;
    double previous = std::numeric_limits<double>::infinity();
    for (double g = 1.0; g < 1e4; g *= 2.0) {
        p.g_amplified = g;
        EXPECT_LT(system_noise(p), previous);
        previous = system_noise(p);
    }
    p.g_amplified = 7.0;
    const double base = system_noise(p);
    p.n_hemt = 40.0;
    EXPECT_NEAR(system_noise(p) - 0.2, 2.0 * (base - 0.2), 1e-12);
}

TEST(SqueezedOutput, TransparentChain) {
    AmpChainParams p;
    p.n_hemt = 12.3;
    p.a_att = 0.4;
    EXPECT_NEAR(squeezed_output_noise(p), 0.5 + 12.3, 1e-12);
    EXPECT_NEAR(squeezed_output_noise(p, SqueezeOrientation::literal), 0.5 + 12.3, 1e-12);
}

TEST(SqueezedOutput, EightDecibels) {
    AmpChainParams p;
    p.g_squeezed = db_to_ratio(-8.0);
    EXPECT_NEAR(squeezed_output_noise(p), 0.5 * std::pow(10.0, -0.8), 1e-15);
    EXPECT_NEAR(squeezed_output_noise(p), 0.0792, 1e-4);

    AmpChainParams q = p;
    q.a_att = db_to_ratio(-4.0);
    q.n_hemt = 30.81;
    AmpChainParams off = q;
    off.g_squeezed = 1.0;
    const double contrast = squeezed_output_noise(off) - squeezed_output_noise(q);
    EXPECT_NEAR(contrast, (0.5 - 0.5 * std::pow(10.0, -0.8)) * std::pow(10.0, -0.4), 1e-12);
    EXPECT_NEAR(contrast, 0.167, 1e-3);
    EXPECT_NEAR(squeezed_output_noise(off), 31.31, 1e-9);
}

TEST(SqueezedOutput, LiteralOrientationDivides) {
    AmpChainParams p;
    p.g_squeezed = 4.0;
    EXPECT_NEAR(squeezed_output_noise(p, SqueezeOrientation::literal), 0.125, 1e-15);
    p.g_squeezed = 0.0;
    EXPECT_THROW(squeezed_output_noise(p), DomainError);
}

TEST(ExtractSqueezing, UnityRatio) {
    AmpChainParams p;
    p.n_hemt = 12.0;
    p.a_att = 0.4;
    const SqueezeExtraction e = extract_squeezing(1.0, p);
    EXPECT_NEAR(e.g_squeezed, 1.0, 1e-12);
    EXPECT_NEAR(e.squeezing_db, 0.0, 1e-10);
}

TEST(ExtractSqueezing, RoundTripOverRange) {
    for (auto orientation : {SqueezeOrientation::multiply, SqueezeOrientation::literal}) {
        for (double a_att : {1.0, db_to_ratio(-4.0)}) {
            for (double db = 0.0; db <= 15.0; db += 0.25) {
                AmpChainParams p;
                p.a_att = a_att;
                p.n_hemt = 30.81 * a_att;
                p.n_added_squeezed = 0.03;
                const double gsq = db_to_ratio(-db);
                p.g_squeezed = orientation == SqueezeOrientation::multiply ? gsq : 1.0 / gsq;
                AmpChainParams off = p;
                off.g_squeezed = 1.0;
                off.n_added_squeezed = 0.0;
                const double ratio = squeezed_output_noise(p, orientation) / squeezed_output_noise(off, orientation);
                const SqueezeExtraction e = extract_squeezing(ratio, p, orientation);
                EXPECT_NEAR(e.g_squeezed / p.g_squeezed, 1.0, 1e-9);
                if (db > 0.0) {
                    EXPECT_NEAR(e.squeezing_db / db, 1.0, 1e-9);
                }
            }
        }
    }
}

TEST(ExtractSqueezing, UnmodelledAddedNoiseBiasesLow) {
    AmpChainParams truth;
    truth.a_att = db_to_ratio(-4.0);
    truth.n_hemt = 30.81 * truth.a_att;
    truth.g_squeezed = db_to_ratio(-12.0);
    truth.n_added_squeezed = 0.16;
    AmpChainParams off = truth;
    off.g_squeezed = 1.0;
    off.n_added_squeezed = 0.0;
    const double ratio = squeezed_output_noise(truth) / squeezed_output_noise(off);
    AmpChainParams assumed = truth;
    assumed.n_added_squeezed = 0.0;
    const double extracted = extract_squeezing(ratio, assumed).squeezing_db;
    // The extraction sees vacuum 0.5 G_sq + 0.16 instead of 0.5 G_sq.
    const double expected = -10.0 * std::log10((0.5 * truth.g_squeezed + 0.16) / 0.5);
    EXPECT_NEAR(extracted, expected, 1e-9);
    EXPECT_LT(extracted, 12.0 - 5.0);
}

TEST(ExtractSqueezing, UnphysicalRatio) {
    AmpChainParams p;
    p.a_att = db_to_ratio(-4.0);
    p.n_hemt = 12.0;
    EXPECT_THROW(extract_squeezing(0.5, p), DomainError);
    EXPECT_THROW(extract_squeezing(-1.0, p), DomainError);
    try {
        extract_squeezing(0.5, p);
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("unphysical ratio"), std::string::npos);
    }
}

TEST(ExtractSqueezing, IdealLineWhenProductIsUnity) {
    for (double ga_db = 1.0; ga_db <= 23.0; ga_db += 1.0) {
        AmpChainParams p;
        p.a_att = db_to_ratio(-4.0);
        p.n_hemt = 12.0;
        p.g_amplified = db_to_ratio(ga_db);
        p.g_squeezed = 1.0 / p.g_amplified;
        AmpChainParams off = p;
        off.g_squeezed = 1.0;
        const double ratio = squeezed_output_noise(p) / squeezed_output_noise(off);
        EXPECT_NEAR(extract_squeezing(ratio, p).squeezing_db, ga_db, 1e-9);
    }
}

TEST(PumpHeating, LinearInPower) {
    EXPECT_NEAR(pump_heating_excess(-15.7), 0.077, 1e-15);
    EXPECT_EQ(pump_heating_excess(-std::numeric_limits<double>::infinity()), 0.0);
    EXPECT_NEAR(pump_heating_excess(-18.7), 0.0386, 1e-4);
    EXPECT_NEAR(pump_heating_excess(-15.7 - 10.0 * std::log10(2.0)), 0.0385, 1e-12);
    EXPECT_THROW(pump_heating_excess(std::nan("")), DomainError);
}

TEST(ChainParams, Validation) {
    AmpChainParams p;
    EXPECT_NO_THROW(validate(p));
    p.a_att = 1.5;
    EXPECT_THROW(validate(p), ConfigError);
    p.a_att = 0.5;
    p.n_hemt = -1.0;
    EXPECT_THROW(validate(p), ConfigError);
}
