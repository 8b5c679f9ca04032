#pragma once

#include <cmath>
#include <vector>

#include "jostscat/error.hpp"
#include "jostscat/specfun.hpp"

namespace jostscat {

struct GaussRule {
    std::vector<double> nodes;    // ascending, in (-1, 1)
    std::vector<double> weights;
};

// n-point Gauss-Legendre rule by Newton iteration on P_n from Chebyshev guesses.
inline GaussRule gauss_legendre(int n) {
    if (n < 1) throw validation_error("Gauss-Legendre rule needs at least one node");
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                double const p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double const dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute the derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= n; ++j) {
            double const p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double const w = 2.0 / ((1.0 - x * x) * dp * dp);
        auto const lo = static_cast<std::size_t>(i), hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = rule.weights[hi] = w;
    }
    if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
    return rule;
}

struct ContourNode {
    cplx point;
    cplx weight;  // includes dz/dt, so sum_k weight_k f(point_k) ~ integral of f dz
};

// Gauss-Legendre nodes on the straight segment a -> b.
inline std::vector<ContourNode> segment_nodes(cplx a, cplx b, GaussRule const& rule) {
    std::vector<ContourNode> out;
    out.reserve(rule.nodes.size());
    cplx const half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) out.push_back({mid + half * rule.nodes[i], half * rule.weights[i]});
    return out;
}

} // namespace jostscat
