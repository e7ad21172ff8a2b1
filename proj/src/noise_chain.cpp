#include "twpa/noise_chain.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "twpa/constants.hpp"
#include "twpa/errors.hpp"

namespace twpa {

namespace {

constexpr double kHeatingReferenceQuanta = 0.077;
constexpr double kHeatingReferenceDbm = -15.7;

}  // namespace

void validate(const AmpChainParams& p) {
    if (!(p.g_amplified > 0.0) || !(p.g_squeezed > 0.0)) {
        throw ConfigError("chain: gains must be positive");
    }
    if (p.n_added < 0.0 || p.n_added_squeezed < 0.0 || p.n_hemt < 0.0 || p.n_mk < 0.0) {
        throw ConfigError("chain: noise quanta must be non-negative");
    }
    if (!(p.a_att > 0.0) || p.a_att > 1.0) {
        throw ConfigError("chain.a_att must lie in (0, 1]");
    }
}

double quanta(double f, double t) {
    if (!(f > 0.0)) {
        throw DomainError("quanta: frequency must be positive");
    }
    if (t < 0.0) {
        throw DomainError("quanta: temperature must be non-negative");
    }
    if (t == 0.0) return 0.5;
    const double x = kPlanck * f / (kBoltzmann * t);  // = 2 * (h f / 2 k T)
    // coth(x/2)/2 = 1/2 + 1/(e^x - 1)
    return 0.5 + 1.0 / std::expm1(x);
}

double temperature_from_quanta(double f, double n) {
    if (!(f > 0.0)) {
        throw DomainError("temperature_from_quanta: frequency must be positive");
    }
    if (n < 0.5) {
        throw DomainError(fmt::format("temperature_from_quanta: occupation {} below the vacuum floor", n));
    }
    if (n == 0.5) return 0.0;
    // n - 1/2 = 1/(e^x - 1)  =>  x = log1p(1/(n - 1/2))
    const double x = std::log1p(1.0 / (n - 0.5));
    return kPlanck * f / (kBoltzmann * x);
}

double quantum_limit(double gain) {
    if (!(gain >= 1.0)) {
        throw DomainError("quantum_limit: gain must be >= 1");
    }
    return 0.5 * (1.0 - 1.0 / gain);
}

double system_noise(const AmpChainParams& p) {
    if (!(p.g_amplified > 0.0)) {
        throw DomainError("system_noise: G_a must be positive");
    }
    return p.n_added + p.n_hemt / p.a_att / p.g_amplified;
}

double squeezed_output_noise(const AmpChainParams& p, SqueezeOrientation orientation) {
    if (!(p.g_squeezed > 0.0)) {
        throw DomainError("squeezed_output_noise: G_sq must be positive");
    }
    const double vacuum = orientation == SqueezeOrientation::multiply ? p.n_mk * p.g_squeezed
                                                                      : p.n_mk / p.g_squeezed;
    return (vacuum + p.n_added_squeezed) * p.a_att + p.n_mk * (1.0 - p.a_att) + p.n_hemt;
}

SqueezeExtraction extract_squeezing(double ratio, const AmpChainParams& p,
                                    SqueezeOrientation orientation) {
    if (!(ratio > 0.0) || !std::isfinite(ratio)) {
        throw DomainError("extract_squeezing: ratio must be positive");
    }
    const double n_off = p.n_mk + p.n_hemt;
    const double n_on = ratio * n_off;
    const double vacuum =
        (n_on - p.n_hemt - p.n_mk * (1.0 - p.a_att)) / p.a_att - p.n_added_squeezed;
    if (!(vacuum > 0.0)) {
        throw DomainError(fmt::format(
            "unphysical ratio {:.9g}: implies non-positive squeezed vacuum noise", ratio));
    }
    SqueezeExtraction out;
    if (orientation == SqueezeOrientation::multiply) {
        out.g_squeezed = vacuum / p.n_mk;
        out.squeezing_db = -ratio_to_db(out.g_squeezed);
    } else {
        out.g_squeezed = p.n_mk / vacuum;
        out.squeezing_db = ratio_to_db(out.g_squeezed);
    }
    return out;
}

double pump_heating_excess(double pump_dbm) {
    if (std::isnan(pump_dbm)) {
        throw DomainError("pump_heating_excess: NaN pump power");
    }
    if (pump_dbm == -std::numeric_limits<double>::infinity()) return 0.0;
    return std::max(0.0, kHeatingReferenceQuanta * db_to_ratio(pump_dbm - kHeatingReferenceDbm));
}

}  // namespace twpa
