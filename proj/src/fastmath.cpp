#include "sdflow/fastmath.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace sdflow {

namespace {

constexpr double kTwoOverPi = 6.36619772367581343076e-01;
// pi/2 split for two-step Cody-Waite reduction (fdlibm constants)
constexpr double kPio2Hi = 1.57079632673412561417e+00;
constexpr double kPio2Lo = 6.07710050650619224932e-11;
constexpr double kPio2Lo2 = 2.02226624879595063154e-21;

// minimax coefficients for sin(r) = r + r^3 P(r^2), r in [-pi/4, pi/4]
constexpr double kS1 = -1.66666666666666307295e-01;
constexpr double kS2 = 8.33333333332211858878e-03;
constexpr double kS3 = -1.98412698295895385996e-04;
constexpr double kS4 = 2.75573136213857245213e-06;
constexpr double kS5 = -2.50507477628578072866e-08;
constexpr double kS6 = 1.58962301576546568060e-10;

// cos(r) = 1 - r^2/2 + r^4 Q(r^2)
constexpr double kC1 = 4.16666666666665929218e-02;
constexpr double kC2 = -1.38888888888730564116e-03;
constexpr double kC3 = 2.48015872888517179954e-05;
constexpr double kC4 = -2.75573141792967388112e-07;
constexpr double kC5 = 2.08757008419747316778e-09;
constexpr double kC6 = -1.13585365213876817300e-11;

}  // namespace

void sincos_array(const double* x, double* sin_out, double* cos_out, std::size_t n) {
    double max_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_abs = std::max(max_abs, std::abs(x[i]));
    if (!(max_abs < 1.0e6)) {  // huge or NaN arguments: libm for the whole call
        for (std::size_t i = 0; i < n; ++i) {
            sin_out[i] = std::sin(x[i]);
            cos_out[i] = std::cos(x[i]);
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i];
        const double fn = std::nearbyint(v * kTwoOverPi);
        const std::int64_t q = static_cast<std::int64_t>(fn);
        const double r = ((v - fn * kPio2Hi) - fn * kPio2Lo) - fn * kPio2Lo2;
        const double z = r * r;

        double sp = kS6;
        sp = sp * z + kS5;
        sp = sp * z + kS4;
        sp = sp * z + kS3;
        sp = sp * z + kS2;
        sp = sp * z + kS1;
        const double s = r + r * z * sp;

        double cp = kC6;
        cp = cp * z + kC5;
        cp = cp * z + kC4;
        cp = cp * z + kC3;
        cp = cp * z + kC2;
        cp = cp * z + kC1;
        const double c = 1.0 - 0.5 * z + z * z * cp;

        const bool swap = (q & 1) != 0;
        const double s_base = swap ? c : s;
        const double c_base = swap ? s : c;
        sin_out[i] = (q & 2) ? -s_base : s_base;
        cos_out[i] = ((q + 1) & 2) ? -c_base : c_base;
    }
}

}  // namespace sdflow
