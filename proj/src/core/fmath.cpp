// Copyright 2026 ThinkRouter Authors
// SPDX-License-Identifier: Apache-2.0
#include "core/fmath.hpp"

#include <cmath>
#include <limits>

namespace tr::fmath {

namespace {

// ln2 split hi/lo so k*ln2 stays accurate for large k
constexpr double kLog2E = 1.44269504088896340736;
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;

} // namespace

double exp(double x) {
    if (std::isnan(x)) return x;
    if (x > 709.782712893384) return std::numeric_limits<double>::infinity();
    if (x < -745.133219101941) return 0.0;

    // reduce x = k*ln2 + r with |r| <= ln2/2
    const double kd = std::floor(x * kLog2E + 0.5);
    const int k = static_cast<int>(kd);
    const double r = (x - kd * kLn2Hi) - kd * kLn2Lo;

    // e^r by the factorial series in Horner form; r^18/18! < 1e-24 at |r|<=0.347
    double s = 1.0;
    for (int i = 17; i >= 1; --i) {
        s = 1.0 + s * (r / i);
    }
    return std::ldexp(s, k);
}

double log(double x) {
    if (std::isnan(x) || x < 0.0) return std::numeric_limits<double>::quiet_NaN();
    if (x == 0.0) return -std::numeric_limits<double>::infinity();
    if (std::isinf(x)) return x;

    // reduce x = m * 2^e with m in [sqrt(1/2), sqrt(2))
    int e = 0;
    double m = std::frexp(x, &e); // m in [0.5, 1)
    if (m < 0.70710678118654752440) {
        m *= 2.0;
        e -= 1;
    }

    // ln m = 2 atanh(s), s = (m-1)/(m+1), |s| <= 0.1716; odd series to s^19
    const double s = (m - 1.0) / (m + 1.0);
    const double s2 = s * s;
    double p = 1.0 / 19.0;
    for (int i = 17; i >= 3; i -= 2) {
        p = p * s2 + 1.0 / i;
    }
    const double lnm = 2.0 * (s + s * s2 * p);
    const double ed = static_cast<double>(e);
    return ed * kLn2Hi + (lnm + ed * kLn2Lo);
}

double tanh(double x) {
    if (std::isnan(x)) return x;
    // e^{2x} saturates both tails well before |x|=20
    if (x > 20.0) return 1.0;
    if (x < -20.0) return -1.0;
    const double e2x = exp(2.0 * x);
    return (e2x - 1.0) / (e2x + 1.0);
}

} // namespace tr::fmath
