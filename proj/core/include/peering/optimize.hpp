#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

namespace peering::optimize {

template <std::size_t N>
using Point = std::array<double, N>;

template <std::size_t N>
struct MaximizeResult {
    Point<N> x{};
    double value = -std::numeric_limits<double>::infinity();
    int evaluations = 0;
    bool converged = false;
};

struct SimplexOptions {
    double initial_step = 1.0;
    double xtol = 0.005;  // simplex diameter (max-norm) at convergence
    int max_evaluations = 4000;
};

/// Nelder-Mead maximization with the standard reflection/expansion/contraction/shrink coefficients.
template <std::size_t N, class F>
MaximizeResult<N> nelder_mead_maximize(const F& f, const Point<N>& x0, const SimplexOptions& opt = {}) {
    std::array<Point<N>, N + 1> pts{};
    std::array<double, N + 1> val{};
    int evals = 0;
    auto eval = [&](const Point<N>& x) {
        ++evals;
        return f(x);
    };

    pts[0] = x0;
    val[0] = eval(x0);
    for (std::size_t i = 0; i < N; ++i) {
        pts[i + 1] = x0;
        pts[i + 1][i] += opt.initial_step;
        val[i + 1] = eval(pts[i + 1]);
    }

    std::array<std::size_t, N + 1> order{};
    bool converged = false;
    while (evals < opt.max_evaluations) {
        for (std::size_t i = 0; i <= N; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return val[a] > val[b]; });

        const Point<N>& best = pts[order[0]];
        double diameter = 0.0;
        for (std::size_t i = 1; i <= N; ++i)
            for (std::size_t d = 0; d < N; ++d) diameter = std::max(diameter, std::abs(pts[order[i]][d] - best[d]));
        if (diameter <= opt.xtol) {
            converged = true;
            break;
        }

        const std::size_t worst = order[N];
        Point<N> centroid{};
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t d = 0; d < N; ++d) centroid[d] += pts[order[i]][d] / static_cast<double>(N);

        auto along = [&](double t) {
            Point<N> x{};
            for (std::size_t d = 0; d < N; ++d) x[d] = centroid[d] + t * (pts[worst][d] - centroid[d]);
            return x;
        };

        const Point<N> reflected = along(-1.0);
        const double f_reflected = eval(reflected);
        if (f_reflected > val[order[0]]) {
            const Point<N> expanded = along(-2.0);
            const double f_expanded = eval(expanded);
            if (f_expanded > f_reflected) {
                pts[worst] = expanded;
                val[worst] = f_expanded;
            } else {
                pts[worst] = reflected;
                val[worst] = f_reflected;
            }
            continue;
        }
        if (f_reflected > val[order[N - 1]]) {
            pts[worst] = reflected;
            val[worst] = f_reflected;
            continue;
        }
        const bool outside = f_reflected > val[worst];
        const Point<N> contracted = along(outside ? -0.5 : 0.5);
        const double f_contracted = eval(contracted);
        if (f_contracted > (outside ? f_reflected : val[worst])) {
            pts[worst] = contracted;
            val[worst] = f_contracted;
            continue;
        }
        for (std::size_t i = 1; i <= N; ++i) {
            const std::size_t k = order[i];
            for (std::size_t d = 0; d < N; ++d) pts[k][d] = best[d] + 0.5 * (pts[k][d] - best[d]);
            val[k] = eval(pts[k]);
        }
    }

    const std::size_t b = static_cast<std::size_t>(std::max_element(val.begin(), val.end()) - val.begin());
    return {pts[b], val[b], evals, converged};
}

struct NewtonOptions {
    double step = 5e-3;   // finite-difference step
    double xtol = 1e-7;   // max-norm of the Newton step at convergence
    double max_move = 1.0;
    int max_iterations = 40;
};

template <std::size_t N>
struct Derivatives {
    double value = 0.0;
    Point<N> gradient{};
    std::array<Point<N>, N> hessian{};
};

/// Central finite-difference gradient and Hessian.
template <std::size_t N, class F>
Derivatives<N> finite_differences(const F& f, const Point<N>& x, double h) {
    Derivatives<N> d;
    d.value = f(x);
    auto shifted = [&](std::size_t i, double di, std::size_t j, double dj) {
        Point<N> y = x;
        y[i] += di;
        y[j] += dj;
        return f(y);
    };
    std::array<double, N> plus{}, minus{};
    for (std::size_t i = 0; i < N; ++i) {
        plus[i] = shifted(i, h, i, 0.0);
        minus[i] = shifted(i, -h, i, 0.0);
        d.gradient[i] = (plus[i] - minus[i]) / (2 * h);
        d.hessian[i][i] = (plus[i] - 2 * d.value + minus[i]) / (h * h);
    }
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j) {
            const double v = (shifted(i, h, j, h) - shifted(i, h, j, -h) - shifted(i, -h, j, h) +
                              shifted(i, -h, j, -h)) /
                             (4 * h * h);
            d.hessian[i][j] = d.hessian[j][i] = v;
        }
    return d;
}

/// Solves (-H) s = g by Cholesky. Returns false unless -H is positive definite.
template <std::size_t N>
bool ascent_direction(const std::array<Point<N>, N>& hessian, const Point<N>& gradient, Point<N>& step) {
    std::array<Point<N>, N> l{};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double s = -hessian[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (!(s > 0)) return false;
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    Point<N> y{};
    for (std::size_t i = 0; i < N; ++i) {
        double s = gradient[i];
        for (std::size_t k = 0; k < i; ++k) s -= l[i][k] * y[k];
        y[i] = s / l[i][i];
    }
    for (std::size_t ii = N; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < N; ++k) s -= l[k][ii] * step[k];
        step[ii] = s / l[ii][ii];
    }
    return true;
}

/// Newton iterations on finite-difference derivatives, started near a maximum.
/// Stops (unconverged) if the Hessian is not negative definite.
template <std::size_t N, class F>
MaximizeResult<N> newton_polish(const F& f, const Point<N>& x0, const NewtonOptions& opt = {}) {
    MaximizeResult<N> r;
    r.x = x0;
    int evals = 0;
    auto counted = [&](const Point<N>& x) {
        ++evals;
        return f(x);
    };
    r.value = counted(x0);
    for (int it = 0; it < opt.max_iterations; ++it) {
        const auto d = finite_differences<N>(counted, r.x, opt.step);
        Point<N> step{};
        if (!ascent_direction<N>(d.hessian, d.gradient, step)) break;
        double norm = 0.0;
        for (double s : step) norm = std::max(norm, std::abs(s));
        if (norm > opt.max_move)
            for (double& s : step) s *= opt.max_move / norm;

        double t = 1.0;
        bool accepted = false;
        for (int k = 0; k < 12; ++k, t *= 0.5) {
            Point<N> y = r.x;
            for (std::size_t i = 0; i < N; ++i) y[i] += t * step[i];
            const double fy = counted(y);
            if (fy >= r.value - 1e-14 * std::abs(r.value)) {
                r.x = y;
                r.value = fy;
                accepted = true;
                break;
            }
        }
        if (!accepted || t * norm <= opt.xtol) {
            r.converged = accepted || norm <= opt.xtol;
            break;
        }
    }
    r.evaluations = evals;
    return r;
}

}  // namespace peering::optimize
