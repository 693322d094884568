#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "core.hpp"

namespace defeat {

/// Barycentric quadrature point on the reference triangle. Weights sum to
/// one and are multiplied by the element area at use.
struct TriPoint {
    std::array<double, 3> bary;
    double weight;
};

/// Symmetric 6-point rule, exact for polynomials of degree 4.
inline const std::vector<TriPoint> &triangle_rule_deg4()
{
    static const std::vector<TriPoint> rule = [] {
        const double a1 = 0.445948490915965, w1 = 0.223381589678011;
        const double a2 = 0.091576213509771, w2 = 0.109951743655322;
        const double b1 = 1.0 - 2.0 * a1, b2 = 1.0 - 2.0 * a2;
        return std::vector<TriPoint>{{{a1, a1, b1}, w1}, {{a1, b1, a1}, w1}, {{b1, a1, a1}, w1},
                                     {{a2, a2, b2}, w2}, {{a2, b2, a2}, w2}, {{b2, a2, a2}, w2}};
    }();
    return rule;
}

/// n-point Gauss-Legendre rule on [0,1].
inline std::vector<std::array<double, 2>> gauss_legendre(int n)
{
    if (n == 1)
        return {{0.5, 1.0}};
    std::vector<std::array<double, 2>> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        out[static_cast<std::size_t>(i)] = {0.5 * (1.0 - x), 1.0 / ((1.0 - x * x) * dp * dp)};
    }
    return out;
}

/// Collapsed Gauss rule on the triangle with n^2 points, exact for degree
/// 2n-2 polynomials; used for errors against non-polynomial references.
inline std::vector<TriPoint> triangle_rule_collapsed(int n)
{
    const auto g = gauss_legendre(n);
    std::vector<TriPoint> rule;
    for (const auto &[u, wu] : g)
        for (const auto &[v, wv] : g) {
            const double l1 = u, l2 = (1.0 - u) * v;
            rule.push_back({{1.0 - l1 - l2, l1, l2}, 2.0 * wu * wv * (1.0 - u)});
        }
    return rule;
}

/// 3-point Gauss rule on an edge parametrized by s in [0,1].
inline const std::array<std::array<double, 2>, 3> &edge_rule()
{
    static const std::array<std::array<double, 2>, 3> rule = {{
        {0.5 - 0.5 * std::sqrt(0.6), 5.0 / 18.0},
        {0.5, 8.0 / 18.0},
        {0.5 + 0.5 * std::sqrt(0.6), 5.0 / 18.0},
    }};
    return rule;
}

} // namespace defeat
