#pragma once

#include <array>
#include <cmath>
#include <limits>

namespace batsim {

namespace detail {

// 15-point Kronrod nodes with the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct KronrodResult {
    double value;
    double error;
};

template <class F>
KronrodResult kronrod15(F&& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kKronrodNodes[i];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += kKronrodWeights[i] * sum;
        if (i % 2 == 1) {
            gauss += kGaussWeights[i / 2] * sum;
        }
    }
    return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

template <class F>
double adaptive(F& f, double a, double b, double whole, double err, double tol,
                int depth) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    // The estimate cannot drop below rounding noise in `whole`.
    if (err <= tol || err <= 50.0 * eps * std::abs(whole) || depth <= 0 ||
        b - a <= 64.0 * eps * std::abs(b)) {
        return whole;
    }
    const double mid = 0.5 * (a + b);
    const auto left = kronrod15(f, a, mid);
    const auto right = kronrod15(f, mid, b);
    return adaptive(f, a, mid, left.value, left.error, 0.5 * tol, depth - 1) +
           adaptive(f, mid, b, right.value, right.error, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (7/15) integral of f over [a, b] to absolute
/// tolerance `tol`.
template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-13) {
    if (a == b) {
        return 0.0;
    }
    const auto first = detail::kronrod15(f, a, b);
    return detail::adaptive(f, a, b, first.value, first.error, tol, 48);
}

}  // namespace batsim
