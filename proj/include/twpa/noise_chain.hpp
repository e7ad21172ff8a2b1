#pragma once

namespace twpa {

/// Phase-sensitive readout chain, all noise in quanta.
///
/// `n_hemt` is the readout noise at the HEMT input, after the TWPA-to-HEMT
/// attenuation `a_att`; referred back to the TWPA it reads n_hemt / a_att.
struct AmpChainParams {
    double g_amplified = 1.0;  // G_a
    double g_squeezed = 1.0;   // G_sq, <= 1 in the default orientation
    double n_added = 0.0;      // N_a, amplified path, input-referred
    double n_added_squeezed = 0.0;  // N_pa, squeezed path, at the TWPA output
    double n_hemt = 0.0;
    double a_att = 1.0;        // power ratio in (0, 1]
    double n_mk = 0.5;         // input bath
};

/// How the squeezing factor enters the squeezed-quadrature noise.
enum class SqueezeOrientation {
    multiply,  // squeezed vacuum = N_mK * G_sq, G_sq <= 1
    literal,   // squeezed vacuum = N_mK / G_sq, G_sq >= 1 (formula as usually printed)
};

void validate(const AmpChainParams& params);

/// n = coth(h f / 2 k T) / 2. T = 0 gives exactly 0.5.
double quanta(double freq_hz, double temperature_k);

/// Inverse of `quanta`: temperature whose occupation at f is n (n > 0.5; n = 0.5 gives 0).
double temperature_from_quanta(double freq_hz, double n);

/// Phase-insensitive quantum limit (1 - 1/G) / 2.
double quantum_limit(double gain);

/// N_sys = N_a + N_HEMT' / G_a with N_HEMT' = n_hemt / a_att, the HEMT noise
/// referred back to the TWPA through the attenuation.
double system_noise(const AmpChainParams& params);

/// (N_mK G_sq + N_pa) A + N_mK (1 - A) + N_HEMT, or N_mK / G_sq for the literal orientation.
double squeezed_output_noise(const AmpChainParams& params,
                             SqueezeOrientation orientation = SqueezeOrientation::multiply);

struct SqueezeExtraction {
    double g_squeezed = 1.0;     // in the requested orientation
    double squeezing_db = 0.0;   // positive when the vacuum is squeezed
};

/// Solves squeezed_output_noise(params with G_sq) / (N_mK + N_HEMT) = ratio for G_sq.
/// The off state is the transparent chain (G_sq = 1, N_pa = 0).
SqueezeExtraction extract_squeezing(double ratio_on_off, const AmpChainParams& params,
                                    SqueezeOrientation orientation = SqueezeOrientation::multiply);

/// Frequency-independent pump-heating excess, 0.077 quanta at -15.7 dBm,
/// scaled linearly in pump power.
double pump_heating_excess(double pump_dbm_at_generator);

}  // namespace twpa
