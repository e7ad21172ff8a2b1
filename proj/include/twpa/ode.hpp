#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "twpa/errors.hpp"

namespace twpa {

struct IntegratorOptions {
    double rtol = 1e-9;
    double atol = 1e-300;  // absolute floor; components are controlled relatively
    double initial_step = 0.0;  // 0 => automatic
    double min_step = 0.0;      // 0 => interval * 1e-14
    double overflow_limit = 1e6;
    std::size_t max_steps = 50'000'000;
};

/// Embedded Dormand-Prince 5(4) integration of y' = f(z, y) for a fixed-size
/// complex state. The solution is recorded exactly at each `output` abscissa
/// (steps are clipped so they never cross an output point).
template <std::size_t N, class Rhs>
std::vector<std::array<std::complex<double>, N>> integrate_dopri5(
    Rhs&& rhs, std::array<std::complex<double>, N> y, std::span<const double> output,
    const IntegratorOptions& opt = {}) {
    using State = std::array<std::complex<double>, N>;

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    std::vector<State> result;
    result.reserve(output.size());
    if (output.empty()) return result;

    double z = output.front();
    const double span = output.back() - output.front();
    result.push_back(y);
    if (output.size() == 1 || span == 0.0) {
        result.resize(output.size(), y);
        return result;
    }

    const double min_step = opt.min_step > 0.0 ? opt.min_step : std::abs(span) * 1e-14;
    double h = opt.initial_step > 0.0 ? opt.initial_step : span / 1000.0;
    h = std::min(h, output[1] - output[0]);

    auto axpy = [](const State& base, double scale,
                   std::initializer_list<std::pair<double, const State*>> terms) {
        State out = base;
        for (std::size_t i = 0; i < N; ++i) {
            std::complex<double> acc{0.0};
            for (const auto& [coef, k] : terms) acc += coef * (*k)[i];
            out[i] += scale * acc;
        }
        return out;
    };

    State k1 = rhs(z, y);
    std::size_t steps = 0;
    for (std::size_t next = 1; next < output.size(); ++next) {
        const double target = output[next];
        while (z < target) {
            if (++steps > opt.max_steps) {
                throw StiffSystemError("stiff system: step budget exhausted");
            }
            bool clipped = false;
            double step = h;
            if (z + step >= target) {
                step = target - z;
                clipped = true;
            }
            const State k2 = rhs(z + c2 * step, axpy(y, step, {{a21, &k1}}));
            const State k3 = rhs(z + c3 * step, axpy(y, step, {{a31, &k1}, {a32, &k2}}));
            const State k4 =
                rhs(z + c4 * step, axpy(y, step, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
            const State k5 = rhs(z + c5 * step,
                                 axpy(y, step, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
            const State k6 = rhs(z + step, axpy(y, step,
                                                {{a61, &k1},
                                                 {a62, &k2},
                                                 {a63, &k3},
                                                 {a64, &k4},
                                                 {a65, &k5}}));
            const State y_new =
                axpy(y, step, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
            const State k7 = rhs(z + step, y_new);

            double err = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const std::complex<double> e = step * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] +
                                                       e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                const double scale =
                    opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
                err = std::max(err, std::abs(e) / scale);
            }
            if (!std::isfinite(err)) {
                throw OscillationError("oscillation/overflow: non-finite state during integration");
            }

            if (err <= 1.0) {
                z = clipped ? target : z + step;
                y = y_new;
                k1 = k7;
                for (const auto& v : y) {
                    if (!(std::abs(v) < opt.overflow_limit)) {
                        throw OscillationError("oscillation/overflow: amplitude limit exceeded");
                    }
                }
            }
            const double factor =
                err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            const double proposed = step * factor;
            if (err <= 1.0) {
                // A clipped step says nothing about the natural step length.
                h = clipped ? std::max(h, proposed) : proposed;
            } else {
                h = proposed;
                if (h < min_step) {
                    throw StiffSystemError("stiff system: step size underflow");
                }
            }
        }
        result.push_back(y);
    }
    return result;
}

}  // namespace twpa
