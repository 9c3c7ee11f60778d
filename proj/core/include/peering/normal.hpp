#pragma once

#include <cmath>
#include <numbers>

namespace peering::normal {

inline double pdf(double z) noexcept {
    return std::exp(-0.5 * z * z) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

inline double cdf(double z) noexcept { return 0.5 * std::erfc(-z * (0.5 * std::numbers::sqrt2)); }

/// Density of N(mu, sigma^2) at x.
inline double pdf(double x, double mu, double sigma) noexcept { return pdf((x - mu) / sigma) / sigma; }

inline double cdf(double x, double mu, double sigma) noexcept { return cdf((x - mu) / sigma); }

/// P(X > c) for X ~ N(mu, sigma^2).
inline double upper_tail(double c, double mu, double sigma) noexcept { return cdf((mu - c) / sigma); }

/// E[(X - c)^+] for X ~ N(mu, sigma^2).
inline double excess_mean(double c, double mu, double sigma) noexcept {
    const double z = (mu - c) / sigma;
    return (mu - c) * cdf(z) + sigma * pdf(z);
}

}  // namespace peering::normal
