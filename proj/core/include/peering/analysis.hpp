#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace peering::analysis {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares of y on x. r_squared is 1 when y is constant.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return {};
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

/// First x where the piecewise-linear interpolant of y crosses zero (upward or downward).
inline std::optional<double> zero_crossing(const std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t i = 0; i + 1 < std::min(x.size(), y.size()); ++i) {
        if (y[i] == 0.0) return x[i];
        if ((y[i] < 0) != (y[i + 1] < 0) && y[i + 1] != y[i])
            return x[i] + (x[i + 1] - x[i]) * (-y[i]) / (y[i + 1] - y[i]);
    }
    if (!y.empty() && y.back() == 0.0) return x.back();
    return std::nullopt;
}

/// For cost(N, x) = x * cold(N) + (1 - x) * hot(N), the least-squares slope in N is
/// linear in x; this is the x where it changes sign, if it does within [0, 1].
inline std::optional<double> slope_flip_fraction(const std::vector<double>& n, const std::vector<double>& hot,
                                                 const std::vector<double>& cold) {
    const double s_hot = linear_fit(n, hot).slope;
    const double s_cold = linear_fit(n, cold).slope;
    if (s_hot == s_cold) return std::nullopt;
    const double x = s_hot / (s_hot - s_cold);
    if (x < 0.0 || x > 1.0) return std::nullopt;
    return x;
}

}  // namespace peering::analysis
