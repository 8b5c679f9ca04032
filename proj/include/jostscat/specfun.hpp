#pragma once

// Riccati-Bessel j_l, Riccati-Neumann n_l and Riccati-Hankel h_l^(+/-) of
// integer order for complex argument, with their first derivatives.
//
// Conventions:  j_0 = sin z,  n_0 = -cos z,  h^(+/-) = j +/- i n,
// so that h_0^(+) = -i e^{iz} and h_0^(-) = i e^{-iz}.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "jostscat/error.hpp"

namespace jostscat {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I{0.0, 1.0};

// Orbital angular momentum quantum number.
class RiccatiOrder {
  public:
    constexpr RiccatiOrder() = default;
    explicit RiccatiOrder(int ell) : ell_(ell) {
        if (ell < 0) throw domain_error("angular momentum must be non-negative, got " + std::to_string(ell));
    }
    constexpr int value() const { return ell_; }
    friend constexpr bool operator==(RiccatiOrder, RiccatiOrder) = default;

  private:
    int ell_ = 0;
};

enum class HankelSign { plus, minus };

namespace detail {

// z^{l+1} sum_k (-z^2/2)^k / (k! (2l+2k+1)!!); used for |z| <= 1.
inline cplx riccati_j_series(int ell, cplx z) {
    double dfact = 1.0;  // (2l+1)!!
    for (int m = 3; m <= 2 * ell + 1; m += 2) dfact *= m;
    cplx const w = -0.5 * z * z;
    cplx term = 1.0 / dfact;
    cplx sum = term;
    for (int k = 1; k < 200; ++k) {
        term *= w / (double(k) * double(2 * ell + 2 * k + 1));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return std::pow(z, ell + 1) * sum;
}

// Miller's backward recurrence f_{l-1} = (2l+1)/z f_l - f_{l+1}, normalized
// against whichever of the closed forms j_0, j_1 is larger in magnitude.
inline cplx riccati_j_miller(int ell, cplx z) {
    int const start = ell + static_cast<int>(std::abs(z)) + 40;
    cplx f_next = 0.0, f = 1e-30, wanted = 0.0, f0 = 0.0, f1 = 0.0;
    for (int m = start; m >= 1; --m) {
        cplx const f_prev = double(2 * m + 1) / z * f - f_next;
        f_next = f;
        f = f_prev;
        if (m - 1 == ell) wanted = f;
        if (m == 1) {
            f1 = f_next;
            f0 = f;
        }
        if (std::abs(f) > 1e200) {  // rescale to stay finite
            f *= 1e-200;
            f_next *= 1e-200;
            wanted *= 1e-200;
        }
    }
    if (ell == 0) wanted = f0;
    cplx const j0 = std::sin(z);
    cplx const j1 = std::sin(z) / z - std::cos(z);
    cplx const scale = std::abs(j0) >= std::abs(j1) ? j0 / f0 : j1 / f1;
    return wanted * scale;
}

// exp(s i z) * (s -i)^{l+1} * sum_k (l+k)!/(k!(l-k)!) (s i / 2z)^k, s = +/-1.
inline cplx riccati_h_explicit(int ell, cplx z, double s) {
    cplx const x = s * I / (2.0 * z);
    cplx sum = 1.0, term = 1.0;
    for (int k = 1; k <= ell; ++k) {
        term *= x * double(ell + k) * double(ell - k + 1) / double(k);
        sum += term;
    }
    cplx phase = 1.0;
    for (int k = 0; k <= ell; ++k) phase *= -s * I;
    // log form keeps the exponential from overflowing before the product
    cplx const log_value = s * I * z + std::log(sum) + std::log(phase);
    cplx const value = std::exp(log_value);
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
        throw domain_error("riccati_h: value exceeds the representable range");
    return value;
}

} // namespace detail

inline cplx riccati_j(RiccatiOrder order, cplx z) {
    int const ell = order.value();
    if (z == cplx{0.0}) return 0.0;
    if (std::abs(z) <= 1.0) return detail::riccati_j_series(ell, z);
    if (ell == 0) return std::sin(z);
    if (ell == 1) return std::sin(z) / z - std::cos(z);
    return detail::riccati_j_miller(ell, z);
}

inline cplx riccati_n(RiccatiOrder order, cplx z) {
    if (z == cplx{0.0}) throw domain_error("riccati_n is singular at z = 0");
    int const ell = order.value();
    cplx n_prev = -std::cos(z);
    if (ell == 0) return n_prev;
    cplx n = -std::cos(z) / z - std::sin(z);
    for (int m = 1; m < ell; ++m) {
        cplx const n_next = double(2 * m + 1) / z * n - n_prev;
        n_prev = n;
        n = n_next;
    }
    return n;
}

inline cplx riccati_h(HankelSign sign, RiccatiOrder order, cplx z) {
    if (z == cplx{0.0}) throw domain_error("riccati_h is singular at z = 0");
    return detail::riccati_h_explicit(order.value(), z, sign == HankelSign::plus ? 1.0 : -1.0);
}

// d/dz f_l = f_{l-1} - (l/z) f_l, with f_{-1} = cos z, sin z, e^{+/-iz}.
inline cplx riccati_j_prime(RiccatiOrder order, cplx z) {
    int const ell = order.value();
    if (ell == 0) return std::cos(z);
    if (z == cplx{0.0}) return 0.0;
    RiccatiOrder const lower{ell - 1};
    return riccati_j(lower, z) - double(ell) / z * riccati_j(order, z);
}

inline cplx riccati_n_prime(RiccatiOrder order, cplx z) {
    int const ell = order.value();
    if (ell == 0) return std::sin(z);
    if (z == cplx{0.0}) throw domain_error("riccati_n is singular at z = 0");
    RiccatiOrder const lower{ell - 1};
    return riccati_n(lower, z) - double(ell) / z * riccati_n(order, z);
}

inline cplx riccati_h_prime(HankelSign sign, RiccatiOrder order, cplx z) {
    int const ell = order.value();
    if (z == cplx{0.0}) throw domain_error("riccati_h is singular at z = 0");
    double const s = sign == HankelSign::plus ? 1.0 : -1.0;
    if (ell == 0) return std::exp(s * I * z);
    RiccatiOrder const lower{ell - 1};
    return riccati_h(sign, lower, z) - double(ell) / z * riccati_h(sign, order, z);
}

} // namespace jostscat
