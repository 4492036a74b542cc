// numeric.hpp - small scalar helpers used across the library.

#ifndef GJN_DETAIL_NUMERIC_HPP
#define GJN_DETAIL_NUMERIC_HPP

#include <cmath>
#include <limits>

namespace gjn::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

// (e^x - 1) / x, continuous at 0.
inline double phi1(double x) {
    if (std::abs(x) < 1e-5) return 1.0 + x / 2.0 + x * x / 6.0;
    return std::expm1(x) / x;
}

// integral_0^1 u e^{xu} du = (e^x (x - 1) + 1) / x^2, continuous at 0.
inline double phi2(double x) {
    if (std::abs(x) < 0.5) {
        // sum_{n>=0} x^n / (n! (n + 2))
        double term = 1.0;
        double sum = 0.5;
        for (int n = 1; n < 30; ++n) {
            term *= x / n;
            sum += term / (n + 2);
        }
        return sum;
    }
    return (std::exp(x) * (x - 1.0) + 1.0) / (x * x);
}

// integral_a^b e^{s t} dt
inline double exp_integral(double a, double b, double s) {
    const double w = b - a;
    return std::exp(s * a) * w * phi1(s * w);
}

// integral_a^b t e^{s t} dt
inline double texp_integral(double a, double b, double s) {
    const double w = b - a;
    return a * exp_integral(a, b, s) + std::exp(s * a) * w * w * phi2(s * w);
}

}  // namespace gjn::detail

#endif  // GJN_DETAIL_NUMERIC_HPP
