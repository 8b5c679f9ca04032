#pragma once

// Adaptive Runge-Kutta-Fehlberg 4(5) integration of complex matrix-valued
// first-order systems dY/dr = f(r, Y) along piecewise-linear paths in the
// complex r-plane. Each segment r(t) = r_a + t (r_b - r_a), t in [0, 1], is
// integrated in the real parameter t.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jostscat/error.hpp"
#include "jostscat/specfun.hpp"

namespace jostscat {

struct ComplexPath {
    std::vector<cplx> vertices;
    double rotation_angle = 0.0;

    // r_min -> b along the real axis, then b -> b + (R - b) e^{i theta}
    static ComplexPath two_segment(double r_min, double b, double R, double theta) {
        return {{cplx{r_min}, cplx{b}, b + (R - b) * std::polar(1.0, theta)}, theta};
    }

    void validate() const {
        if (vertices.size() < 2) throw validation_error("path needs at least two vertices");
        for (std::size_t i = 1; i < vertices.size(); ++i)
            if (vertices[i] == vertices[i - 1]) throw validation_error("path has repeated consecutive vertices");
        if (!(std::abs(rotation_angle) < 0.5 * pi)) throw validation_error("rotation angle must satisfy |theta| < pi/2");
    }
};

struct IntegratorConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    double initial_step = 1e-2;  // in units of |r|
    long max_steps = 2'000'000;

    void validate() const {
        if (!(abs_tol > 0.0 && rel_tol > 0.0 && initial_step > 0.0 && max_steps > 0))
            throw validation_error("integrator tolerances, step and step budget must be positive");
    }
};

struct IntegrationResult {
    Eigen::MatrixXcd state;
    long steps = 0;
    long rejected = 0;
    double max_local_error = 0.0;
};

using OdeRhs = std::function<Eigen::MatrixXcd(cplx, Eigen::MatrixXcd const&)>;
// called at every path vertex (including the first) with the state there
using VertexObserver = std::function<void(std::size_t, cplx, Eigen::MatrixXcd const&)>;

namespace detail {

struct Fehlberg {
    static constexpr double c2 = 1.0 / 4, c3 = 3.0 / 8, c4 = 12.0 / 13, c5 = 1.0, c6 = 1.0 / 2;
    static constexpr double a21 = 1.0 / 4;
    static constexpr double a31 = 3.0 / 32, a32 = 9.0 / 32;
    static constexpr double a41 = 1932.0 / 2197, a42 = -7200.0 / 2197, a43 = 7296.0 / 2197;
    static constexpr double a51 = 439.0 / 216, a52 = -8.0, a53 = 3680.0 / 513, a54 = -845.0 / 4104;
    static constexpr double a61 = -8.0 / 27, a62 = 2.0, a63 = -3544.0 / 2565, a64 = 1859.0 / 4104,
                            a65 = -11.0 / 40;
    // fifth-order weights (used to advance) and the 5th minus 4th difference
    static constexpr double b1 = 16.0 / 135, b3 = 6656.0 / 12825, b4 = 28561.0 / 56430, b5 = -9.0 / 50,
                            b6 = 2.0 / 55;
    static constexpr double e1 = 1.0 / 360, e3 = -128.0 / 4275, e4 = -2197.0 / 75240, e5 = 1.0 / 50,
                            e6 = 2.0 / 55;
};

inline bool all_finite(Eigen::MatrixXcd const& m) {
    return m.real().allFinite() && m.imag().allFinite();
}

} // namespace detail

inline IntegrationResult integrate(OdeRhs const& rhs, ComplexPath const& path, Eigen::MatrixXcd initial_state,
                                   IntegratorConfig const& config, VertexObserver const& observer = nullptr) {
    path.validate();
    config.validate();
    using F = detail::Fehlberg;

    IntegrationResult result;
    Eigen::MatrixXcd y = std::move(initial_state);
    if (observer) observer(0, path.vertices.front(), y);

    double h_len = config.initial_step;  // carried over between segments in |r| units
    for (std::size_t seg = 0; seg + 1 < path.vertices.size(); ++seg) {
        cplx const ra = path.vertices[seg];
        cplx const dr = path.vertices[seg + 1] - ra;
        double const length = std::abs(dr);
        auto f = [&](double t, Eigen::MatrixXcd const& state) -> Eigen::MatrixXcd {
            return dr * rhs(ra + t * dr, state);
        };

        double t = 0.0;
        double h = std::min(1.0, h_len / length);
        Eigen::MatrixXcd k1 = f(t, y);
        while (t < 1.0) {
            if (result.steps + result.rejected >= config.max_steps)
                throw convergence_error("integrator exceeded " + std::to_string(config.max_steps) + " steps");
            bool const last = t + h >= 1.0;
            if (last) h = 1.0 - t;

            Eigen::MatrixXcd const k2 = f(t + F::c2 * h, y + h * (F::a21 * k1));
            Eigen::MatrixXcd const k3 = f(t + F::c3 * h, y + h * (F::a31 * k1 + F::a32 * k2));
            Eigen::MatrixXcd const k4 = f(t + F::c4 * h, y + h * (F::a41 * k1 + F::a42 * k2 + F::a43 * k3));
            Eigen::MatrixXcd const k5 =
                f(t + F::c5 * h, y + h * (F::a51 * k1 + F::a52 * k2 + F::a53 * k3 + F::a54 * k4));
            Eigen::MatrixXcd const k6 = f(
                t + F::c6 * h, y + h * (F::a61 * k1 + F::a62 * k2 + F::a63 * k3 + F::a64 * k4 + F::a65 * k5));

            Eigen::MatrixXcd const y_new = y + h * (F::b1 * k1 + F::b3 * k3 + F::b4 * k4 + F::b5 * k5 + F::b6 * k6);
            Eigen::MatrixXcd const err = h * (F::e1 * k1 + F::e3 * k3 + F::e4 * k4 + F::e5 * k5 + F::e6 * k6);

            double ratio = 0.0;
            bool finite = detail::all_finite(y_new) && detail::all_finite(err);
            if (finite) {
                for (Eigen::Index i = 0; i < y.size(); ++i) {
                    double const scale =
                        config.abs_tol + config.rel_tol * std::max(std::abs(y(i)), std::abs(y_new(i)));
                    ratio = std::max(ratio, std::abs(err(i)) / scale);
                }
            }

            if (finite && ratio <= 1.0) {
                t = last ? 1.0 : t + h;
                y = y_new;
                ++result.steps;
                result.max_local_error = std::max(result.max_local_error, err.cwiseAbs().maxCoeff());
                if (t < 1.0) k1 = f(t, y);
                double const grow = ratio > 0.0 ? std::min(5.0, 0.9 * std::pow(ratio, -0.2)) : 5.0;
                if (!last) h *= grow;
                h_len = h * length;
                if (last) h_len = std::max(h_len, h * grow * length);
            } else {
                ++result.rejected;
                double const shrink = finite ? std::max(0.1, 0.9 * std::pow(ratio, -0.25)) : 0.25;
                h *= shrink;
                if (h * length < 1e-14 * std::max(1.0, std::abs(ra + t * dr)) || h < 1e-15)
                    throw step_underflow_error("step size underflow near r = " + std::to_string((ra + t * dr).real()) +
                                               (std::signbit((ra + t * dr).imag()) ? "" : "+") +
                                               std::to_string((ra + t * dr).imag()) + "i");
            }
        }
        if (observer) observer(seg + 1, path.vertices[seg + 1], y);
    }
    result.state = std::move(y);
    return result;
}

} // namespace jostscat
