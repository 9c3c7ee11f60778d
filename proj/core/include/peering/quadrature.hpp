#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace peering::quadrature {

/// Adaptive Gauss-Kronrod (G7/K15) integration of a vector-valued integrand.
///
/// The integrand returns std::array<double, K>; every component is integrated
/// over the same subdivision, and an interval is accepted once the largest
/// component-wise |K15 - G7| difference is below the tolerance allotted to it.
/// Subdivision is plain bisection with the tolerance halved per level, so the
/// result depends only on (f, a, b, options) and not on evaluation order.
struct Options {
    double abs_tolerance = 1e-10;
    unsigned max_depth = 30;
};

namespace detail {

inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};

inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t K, class F>
std::array<double, K> recurse(const F& f, double a, double b, double tol, unsigned depth,
                              unsigned max_depth) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    std::array<double, K> kron{};
    std::array<double, K> gauss{};

    const auto centre = f(mid);
    for (std::size_t c = 0; c < K; ++c) {
        kron[c] = kronrod_weights[7] * centre[c];
        gauss[c] = gauss_weights[3] * centre[c];
    }
    for (std::size_t i = 0; i < 7; ++i) {
        const double dx = half * kronrod_nodes[i];
        const auto lo = f(mid - dx);
        const auto hi = f(mid + dx);
        for (std::size_t c = 0; c < K; ++c) {
            const double s = lo[c] + hi[c];
            kron[c] += kronrod_weights[i] * s;
            if (i % 2 == 1) gauss[c] += gauss_weights[i / 2] * s;
        }
    }
    double err = 0.0;
    for (std::size_t c = 0; c < K; ++c) {
        kron[c] *= half;
        gauss[c] *= half;
        err = std::max(err, std::abs(kron[c] - gauss[c]));
    }
    if (err <= tol || depth >= max_depth) return kron;

    auto left = recurse<K>(f, a, mid, 0.5 * tol, depth + 1, max_depth);
    const auto right = recurse<K>(f, mid, b, 0.5 * tol, depth + 1, max_depth);
    for (std::size_t c = 0; c < K; ++c) left[c] += right[c];
    return left;
}

}  // namespace detail

template <std::size_t K, class F>
std::array<double, K> integrate(const F& f, double a, double b, const Options& opts = {}) {
    if (!(b > a)) return {};
    return detail::recurse<K>(f, a, b, opts.abs_tolerance, 0, opts.max_depth);
}

template <class F>
double integrate_scalar(const F& f, double a, double b, const Options& opts = {}) {
    auto wrapped = [&f](double x) { return std::array<double, 1>{f(x)}; };
    return integrate<1>(wrapped, a, b, opts)[0];
}

}  // namespace peering::quadrature
