#pragma once

// Jost matrices f^in(E), f^out(E) from the first-order variation-of-parameters
// system. Near the origin the regular solution is propagated in the (A, B)
// representation, phi = J A - N B, which has no singular cancellations; at the
// matching point b it is converted to (F_in, F_out), phi = W_in F_in + W_out F_out,
// and continued along the rotated ray b -> b + (R - b) e^{i theta}.

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jostscat/error.hpp"
#include "jostscat/model.hpp"
#include "jostscat/odeint.hpp"
#include "jostscat/specfun.hpp"

namespace jostscat {

struct JostGeometry {
    double r_min = 1e-4;
    double b = 1.0;
    double R = 30.0;

    void validate() const {
        if (!(r_min > 0.0 && b > r_min && R > b))
            throw validation_error("geometry must satisfy 0 < r_min < b < R");
    }
};

struct JostOptions {
    JostGeometry geometry;
    IntegratorConfig integrator;
    // accepted change of the sought Jost matrix over a 10% ray extension,
    // relative to max(1, max |f|)
    double tail_tol = 1e-9;
    // the ray is extended in 10% steps until the tail test passes, up to this multiple of R
    double max_length_factor = 5.0;
    // Re-orthonormalize the solution columns after every unit of path length.
    // Keeps f_out f_in^{-1} accurate when the columns grow nearly parallel, but
    // replaces the normalization fixed at r_min, so det f_in is no longer analytic in E.
    bool stabilize_columns = false;
};

// Tighter settings for quantities built from finite differences of det f_in
// (residues), where default-tolerance noise is amplified by 1/epsilon.
inline JostOptions tightened(JostOptions o) {
    o.integrator.abs_tol = std::min(o.integrator.abs_tol, 1e-12);
    o.integrator.rel_tol = std::min(o.integrator.rel_tol, 1e-12);
    o.tail_tol = std::min(o.tail_tol, 1e-11);
    return o;
}

inline JostOptions precise_options() { return tightened(JostOptions{}); }

enum class JostTarget { in, out, both };

struct JostMatrices {
    CMatrix f_in;
    CMatrix f_out;
    EnergyPoint point;
    double theta = 0.0;
    double R = 0.0;        // ray length actually used
    bool in_reliable = true;
    bool out_reliable = true;
    long steps = 0;
};

struct ABState {
    CMatrix A;
    CMatrix B;
    cplx r;
};

struct FState {
    CMatrix F_in;
    CMatrix F_out;
    cplx r;
};

struct SMatrix {
    CMatrix s;
    EnergyPoint point;
};

namespace detail {

struct FreeWaves {
    CVector j, n, h_plus, h_minus;
};

inline FreeWaves free_waves(RiccatiOrder ell, CVector const& k, cplx r, bool want_jn, bool want_h) {
    FreeWaves w;
    Eigen::Index const n = k.size();
    if (want_jn) {
        w.j.resize(n);
        w.n.resize(n);
    }
    if (want_h) {
        w.h_plus.resize(n);
        w.h_minus.resize(n);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        cplx const z = k[i] * r;
        if (ell.value() == 0) {
            // closed forms, shared exponentials
            if (want_jn) {
                w.j[i] = std::sin(z);
                w.n[i] = -std::cos(z);
            }
            if (want_h) {
                w.h_plus[i] = -I * std::exp(I * z);
                w.h_minus[i] = I * std::exp(-I * z);
            }
        } else {
            if (want_jn) {
                w.j[i] = riccati_j(ell, z);
                w.n[i] = riccati_n(ell, z);
            }
            if (want_h) {
                w.h_plus[i] = riccati_h(HankelSign::plus, ell, z);
                w.h_minus[i] = riccati_h(HankelSign::minus, ell, z);
            }
        }
    }
    return w;
}

inline void check_momenta(CVector const& k) {
    for (Eigen::Index i = 0; i < k.size(); ++i)
        if (k[i] == cplx{0.0}) throw branch_point_error("zero channel momentum");
}

// Im(k_n e^{i theta}) >= 0 for every channel (tolerance relative to |k_n|)
inline bool in_reachable(CVector const& k, double theta) {
    for (Eigen::Index i = 0; i < k.size(); ++i)
        if ((k[i] * std::polar(1.0, theta)).imag() < -1e-12 * std::abs(k[i])) return false;
    return true;
}

inline bool out_reachable(CVector const& k, double theta) {
    for (Eigen::Index i = 0; i < k.size(); ++i)
        if ((k[i] * std::polar(1.0, theta)).imag() > 1e-12 * std::abs(k[i])) return false;
    return true;
}

} // namespace detail

// State layout for both systems: N x 2N matrix [A | B] or [F_in | F_out].
class ABSystem {
  public:
    ABSystem(ChannelModel const& model, CVector k) : model_(&model), k_(std::move(k)) { detail::check_momenta(k_); }

    CMatrix operator()(cplx r, CMatrix const& state) const {
        Eigen::Index const n = k_.size();
        if (r == cplx{0.0}) throw domain_error("A/B system is singular at r = 0");
        auto const w = detail::free_waves(model_->ell(), k_, r, true, false);
        CMatrix const phi = w.j.asDiagonal() * state.leftCols(n) - w.n.asDiagonal() * state.rightCols(n);
        CMatrix const m = potential_matrix(*model_, r) * phi;
        CMatrix d(n, 2 * n);
        CVector const kinv = k_.cwiseInverse();
        d.leftCols(n) = (-kinv.cwiseProduct(w.n)).asDiagonal() * m;
        d.rightCols(n) = (-kinv.cwiseProduct(w.j)).asDiagonal() * m;
        return d;
    }

    CVector const& momenta() const { return k_; }

  private:
    ChannelModel const* model_;
    CVector k_;
};

class FSystem {
  public:
    FSystem(ChannelModel const& model, CVector k) : model_(&model), k_(std::move(k)) { detail::check_momenta(k_); }

    CMatrix operator()(cplx r, CMatrix const& state) const {
        Eigen::Index const n = k_.size();
        if (r == cplx{0.0}) throw domain_error("F system is singular at r = 0");
        auto const w = detail::free_waves(model_->ell(), k_, r, false, true);
        CMatrix const phi = w.h_minus.asDiagonal() * state.leftCols(n) + w.h_plus.asDiagonal() * state.rightCols(n);
        CMatrix const m = potential_matrix(*model_, r) * phi;
        CMatrix d(n, 2 * n);
        CVector const kinv = k_.cwiseInverse();
        // -1/(2i) = i/2
        d.leftCols(n) = (0.5 * I) * (kinv.cwiseProduct(w.h_plus)).asDiagonal() * m;
        d.rightCols(n) = (-0.5 * I) * (kinv.cwiseProduct(w.h_minus)).asDiagonal() * m;
        return d;
    }

    CVector const& momenta() const { return k_; }

  private:
    ChannelModel const* model_;
    CVector k_;
};

inline ABState rhs_ab(ChannelModel const& model, EnergyPoint const& point, ABState const& state) {
    ABSystem const sys(model, channel_momenta(model, point));
    Eigen::Index const n = model.n_channels();
    CMatrix x(n, 2 * n);
    x << state.A, state.B;
    CMatrix const d = sys(state.r, x);
    return {d.leftCols(n), d.rightCols(n), state.r};
}

inline FState rhs_f(ChannelModel const& model, EnergyPoint const& point, FState const& state) {
    FSystem const sys(model, channel_momenta(model, point));
    Eigen::Index const n = model.n_channels();
    CMatrix x(n, 2 * n);
    x << state.F_in, state.F_out;
    CMatrix const d = sys(state.r, x);
    return {d.leftCols(n), d.rightCols(n), state.r};
}

// F_in = (A - iB)/2, F_out = (A + iB)/2
inline FState ab_to_f(ABState const& s) {
    return {0.5 * (s.A - I * s.B), 0.5 * (s.A + I * s.B), s.r};
}

// A = F_in + F_out, B = i (F_in - F_out)
inline ABState f_to_ab(FState const& s) {
    return {s.F_in + s.F_out, I * (s.F_in - s.F_out), s.r};
}

namespace detail {

inline CMatrix ab_block_to_f(CMatrix const& ab) {
    Eigen::Index const n = ab.rows();
    CMatrix f(n, 2 * n);
    f.leftCols(n) = 0.5 * (ab.leftCols(n) - I * ab.rightCols(n));
    f.rightCols(n) = 0.5 * (ab.leftCols(n) + I * ab.rightCols(n));
    return f;
}

inline double max_abs(CMatrix const& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

} // namespace detail

// Regular solution phi(r) = W_in F_in + W_out F_out (columns are independent solutions).
inline CMatrix regular_solution(ChannelModel const& model, CVector const& k, FState const& s) {
    auto const w = detail::free_waves(model.ell(), k, s.r, false, true);
    return w.h_minus.asDiagonal() * s.F_in + w.h_plus.asDiagonal() * s.F_out;
}

inline CMatrix regular_solution(ChannelModel const& model, CVector const& k, ABState const& s) {
    auto const w = detail::free_waves(model.ell(), k, s.r, true, false);
    return w.j.asDiagonal() * s.A - w.n.asDiagonal() * s.B;
}

inline CMatrix jost_in(CMatrix const& state) { return state.leftCols(state.rows()); }
inline CMatrix jost_out(CMatrix const& state) { return state.rightCols(state.rows()); }

namespace detail {

struct RayRun {
    CMatrix state;      // [F_in | F_out] at the end of the ray
    double length = 0;  // |r_end - b| + b, i.e. the effective R
    long steps = 0;
};

// Right-multiplies [L | R] by the inverse triangular factor of the stacked [L; R].
inline void orthonormalize_columns(CMatrix& state) {
    Eigen::Index const n = state.rows();
    CMatrix z(2 * n, n);
    z << state.leftCols(n), state.rightCols(n);
    Eigen::HouseholderQR<CMatrix> const qr(z);
    CMatrix const r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    CMatrix const r_inv = r.triangularView<Eigen::Upper>().solve(CMatrix::Identity(n, n));
    state.leftCols(n) = state.leftCols(n) * r_inv;
    state.rightCols(n) = state.rightCols(n) * r_inv;
}

// integrate() over each segment in pieces of unit length, orthonormalizing in between
inline IntegrationResult integrate_stabilized(OdeRhs const& rhs, ComplexPath const& path, CMatrix state,
                                              IntegratorConfig const& config) {
    IntegrationResult total;
    for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
        cplx const a = path.vertices[i], d = path.vertices[i + 1] - a;
        int const pieces = std::max(1, static_cast<int>(std::ceil(std::abs(d))));
        for (int p = 0; p < pieces; ++p) {
            cplx const from = a + d * (double(p) / pieces);
            cplx const to = p + 1 == pieces ? path.vertices[i + 1] : a + d * (double(p + 1) / pieces);
            auto res = integrate(rhs, ComplexPath{{from, to}, path.rotation_angle}, std::move(state), config);
            state = std::move(res.state);
            orthonormalize_columns(state);
            total.steps += res.steps;
            total.rejected += res.rejected;
            total.max_local_error = std::max(total.max_local_error, res.max_local_error);
        }
    }
    total.state = std::move(state);
    return total;
}

// A/B on [r_min, b], conversion, F along the ray with the tail test.
// `extra_vertices` are distances s along the path where the observer is invoked.
inline RayRun run_path(ChannelModel const& model, CVector const& k, double theta, JostOptions const& opt,
                       JostTarget target, std::vector<double> const& record_at = {},
                       std::function<void(double, CMatrix const&, bool ab)> const& record = nullptr) {
    auto const& g = opt.geometry;
    g.validate();
    Eigen::Index const n = model.n_channels();
    CMatrix ab(n, 2 * n);
    ab << 2.0 * CMatrix::Identity(n, n), CMatrix::Zero(n, n);

    std::vector<double> inner, outer;
    for (double s : record_at) {
        if (s < g.r_min) throw validation_error("wavefunction grid point below r_min");
        (s <= g.b ? inner : outer).push_back(s);
    }
    std::sort(inner.begin(), inner.end());
    std::sort(outer.begin(), outer.end());

    RayRun run;
    // inner segment on the real axis
    {
        ComplexPath path;
        path.vertices.push_back(g.r_min);
        for (double s : inner)
            if (cplx{s} != path.vertices.back()) path.vertices.push_back(s);
        if (path.vertices.back() != cplx{g.b}) path.vertices.push_back(g.b);
        std::vector<double> pos;
        for (auto v : path.vertices) pos.push_back(v.real());
        ABSystem const sys(model, k);
        auto obs = [&](std::size_t i, cplx, CMatrix const& y) {
            if (record) record(pos[i], y, true);
        };
        auto res = opt.stabilize_columns && !record
                        ? integrate_stabilized(std::cref(sys), path, ab, opt.integrator)
                        : integrate(std::cref(sys), path, ab, opt.integrator, record ? VertexObserver(obs) : nullptr);
        ab = res.state;
        run.steps += res.steps;
    }

    CMatrix f = ab_block_to_f(ab);
    FSystem const sys(model, k);
    cplx const dir = std::polar(1.0, theta);
    auto at = [&](double s) { return g.b + (s - g.b) * dir; };

    // main ray, with grid points inserted as vertices
    {
        ComplexPath path;
        path.rotation_angle = theta;
        path.vertices.push_back(g.b);
        std::vector<double> pos{g.b};
        for (double s : outer)
            if (s > pos.back() && s < g.R) {
                path.vertices.push_back(at(s));
                pos.push_back(s);
            }
        path.vertices.push_back(at(g.R));
        pos.push_back(g.R);
        auto obs = [&](std::size_t i, cplx, CMatrix const& y) {
            if (record && i > 0) record(pos[i], y, false);
        };
        auto res = opt.stabilize_columns && !record
                        ? integrate_stabilized(std::cref(sys), path, f, opt.integrator)
                        : integrate(std::cref(sys), path, f, opt.integrator, record ? VertexObserver(obs) : nullptr);
        f = res.state;
        run.steps += res.steps;
    }

    // tail test: extend by 10% of the ray until the sought matrix stops changing
    double const step = 0.1 * (g.R - g.b);
    double reach = g.R;
    double const limit = g.b + opt.max_length_factor * (g.R - g.b);
    for (;;) {
        ComplexPath ext{{at(reach), at(reach + step)}, theta};
        auto res = integrate(std::cref(sys), ext, f, opt.integrator);
        run.steps += res.steps;
        double change = 0.0, scale = 1.0;
        if (target != JostTarget::out) {
            change = std::max(change, max_abs(jost_in(res.state) - jost_in(f)));
            scale = std::max(scale, max_abs(jost_in(res.state)));
        }
        if (target != JostTarget::in) {
            change = std::max(change, max_abs(jost_out(res.state) - jost_out(f)));
            scale = std::max(scale, max_abs(jost_out(res.state)));
        }
        f = res.state;
        reach += step;
        if (!all_finite(f)) throw convergence_error("Jost matrix integration overflowed on the ray");
        if (change < opt.tail_tol * scale) break;
        if (reach + step > limit + 1e-12)
            throw convergence_error("Jost matrices did not converge by |r| = " + std::to_string(reach) +
                                    " (last change " + std::to_string(change / scale) + ")");
    }
    run.state = f;
    run.length = reach;
    return run;
}

} // namespace detail

inline JostMatrices jost_matrices(ChannelModel const& model, EnergyPoint const& point, double theta,
                                  JostOptions const& opt = {}, JostTarget target = JostTarget::in) {
    if (!(std::abs(theta) < 0.5 * pi)) throw validation_error("rotation angle must satisfy |theta| < pi/2");
    CVector const k = channel_momenta(model, point);
    bool const in_ok = detail::in_reachable(k, theta);
    bool const out_ok = detail::out_reachable(k, theta);
    bool const real_axis = point.energy.imag() == 0.0 && theta == 0.0;
    if (target != JostTarget::out && !in_ok)
        throw unreachable_error("f_in unreachable at E = " + std::to_string(point.energy.real()) + std::to_string(point.energy.imag()) +
                                "i with theta = " + std::to_string(theta));
    // on the real axis closed channels leave f_out within the convergence band of
    // short-range potentials; the tail test decides
    if (target != JostTarget::in && !out_ok && !real_axis)
        throw unreachable_error("f_out unreachable at E = " + std::to_string(point.energy.real()) + std::to_string(point.energy.imag()) +
                                "i with theta = " + std::to_string(theta));

    auto const run = detail::run_path(model, k, theta, opt, target);
    JostMatrices jm;
    jm.f_in = jost_in(run.state);
    jm.f_out = jost_out(run.state);
    jm.point = point;
    jm.theta = theta;
    jm.R = run.length;
    jm.in_reliable = in_ok;
    jm.out_reliable = out_ok || (real_axis && target != JostTarget::in);
    jm.steps = run.steps;
    return jm;
}

// Default rotation-angle schedule: 0, 0.05 pi, ... up to 0.4 pi.
inline std::vector<double> theta_schedule() {
    std::vector<double> s;
    for (int i = 0; i <= 8; ++i) s.push_back(0.05 * pi * i);
    return s;
}

namespace detail {

// smallest Im(sign * k_n e^{i theta}) / |k_n| over the channels
inline double rotation_margin(CVector const& k, double theta, double sign) {
    double m = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k.size(); ++i) m = std::min(m, sign * (k[i] * std::polar(1.0, theta)).imag() / std::abs(k[i]));
    return m;
}

// Schedule angle of smallest |theta| whose margin reaches `wanted` (theta = 0
// only needs a non-negative margin: the unrotated path has no grazing problem
// on the real axis). Falls back to the smallest admissible angle.
inline std::optional<double> pick_theta(CVector const& k, double sign, double first_sign, double wanted) {
    std::vector<double> order;
    for (double t : theta_schedule()) {
        order.push_back(first_sign * t);
        if (t != 0.0) order.push_back(-first_sign * t);
    }
    for (double t : order) {
        double const m = rotation_margin(k, t, sign);
        if (t == 0.0 ? m >= -1e-12 : m >= wanted) return t;
    }
    for (double t : order)
        if (rotation_margin(k, t, sign) >= -1e-12) return t;
    return std::nullopt;
}

} // namespace detail

// Smallest |theta| in the schedule (positive first) with Im(k_n e^{i theta}) >= 0
// in every channel, preferring angles that clear the boundary by 0.1 |k_n|.
// Near-grazing rays converge slowly and cost accuracy in det f_in.
inline double theta_for_in(ChannelModel const& model, EnergyPoint const& point) {
    CVector const k = channel_momenta(model, point);
    if (auto t = detail::pick_theta(k, 1.0, 1.0, 0.1)) return *t;
    throw unreachable_error("no rotation angle within 0.4 pi exposes f_in at E = " +
                            std::to_string(point.energy.real()) + std::to_string(point.energy.imag()) + "i");
}

// Same for f_out: Im(k_n e^{i theta}) <= 0, negative angles first.
inline double theta_for_out(ChannelModel const& model, EnergyPoint const& point) {
    CVector const k = channel_momenta(model, point);
    if (auto t = detail::pick_theta(k, -1.0, -1.0, 0.1)) return *t;
    throw unreachable_error("no rotation angle within 0.4 pi exposes f_out at E = " +
                            std::to_string(point.energy.real()) + std::to_string(point.energy.imag()) + "i");
}

// f_in and f_out at an arbitrary complex energy, each from its own rotated ray.
// Both share the normalization fixed at r_min, so they combine consistently.
inline JostMatrices jost_pair(ChannelModel const& model, EnergyPoint const& point, JostOptions const& opt = {}) {
    if (point.energy.imag() == 0.0) return jost_matrices(model, point, 0.0, opt, JostTarget::both);
    double const t_in = theta_for_in(model, point);
    double const t_out = theta_for_out(model, point);
    if (t_in == t_out) return jost_matrices(model, point, t_in, opt, JostTarget::both);
    JostMatrices jm = jost_matrices(model, point, t_in, opt, JostTarget::in);
    JostMatrices const jo = jost_matrices(model, point, t_out, opt, JostTarget::out);
    jm.f_out = jo.f_out;
    jm.out_reliable = true;
    jm.steps += jo.steps;
    return jm;
}

inline CMatrix s_from_jost(JostMatrices const& jm) {
    if (std::abs(jm.f_in.determinant()) < 1e-13)
        throw convergence_error("f_in is singular at E = " + std::to_string(jm.point.energy.real()) +
                                (jm.point.energy.imag() < 0 ? "" : "+") + std::to_string(jm.point.energy.imag()) +
                                "i (spectral point)");
    return jm.f_out * Eigen::PartialPivLU<CMatrix>(jm.f_in).inverse();
}

// Physical S-matrix at a real energy above the lowest threshold (theta = 0).
inline SMatrix s_matrix(ChannelModel const& model, double energy, JostOptions const& opt = {}) {
    if (!(energy > model.thresholds().front()))
        throw validation_error("S-matrix requires an energy above the lowest threshold");
    EnergyPoint const p{cplx{energy, 0.0}, SheetSelector::physical(model.n_channels())};
    JostOptions o = opt;
    o.stabilize_columns = true;
    auto const jm = jost_matrices(model, p, 0.0, o, JostTarget::both);
    return {s_from_jost(jm), p};
}

// S-matrix continued to a complex energy on the sheet given by its half-plane.
inline SMatrix s_matrix_complex(ChannelModel const& model, cplx energy, JostOptions const& opt = {}) {
    if (energy.imag() == 0.0) return s_matrix(model, energy.real(), opt);
    EnergyPoint const p{energy, SheetSelector::by_half_plane(model.n_channels(), energy)};
    return {s_from_jost(jost_pair(model, p, opt)), p};
}

// S on an explicitly chosen sheet, e.g. the unphysical sheet continued above the axis.
inline SMatrix s_matrix_on(ChannelModel const& model, EnergyPoint const& point, JostOptions const& opt = {}) {
    return {s_from_jost(jost_pair(model, point, opt)), point};
}

// D = diag(k_n / mu_n); returns D^{1/2} S D^{-1/2}
inline CMatrix flux_normalized(ChannelModel const& model, SMatrix const& s) {
    CVector const k = channel_momenta(model, s.point);
    Eigen::Index const n = k.size();
    CVector d(n);
    for (Eigen::Index i = 0; i < n; ++i) d[i] = std::sqrt(k[i] / model.reduced_masses()[static_cast<std::size_t>(i)]);
    return d.asDiagonal() * s.s * d.cwiseInverse().asDiagonal();
}

struct CrossSectionOptions {
    // sigma = pi / k_n^power |delta - S|^2; the printed formula has power 1
    int momentum_power = 1;
};

inline double cross_section_from(ChannelModel const& model, SMatrix const& s, int from, int to,
                                 CrossSectionOptions const& cs = {}) {
    int const n = model.n_channels();
    if (from < 0 || from >= n || to < 0 || to >= n) throw validation_error("channel index out of range");
    if (!(s.point.energy.real() > model.thresholds()[static_cast<std::size_t>(from)]))
        throw validation_error("entrance channel " + std::to_string(from + 1) + " is closed");
    double const k = channel_momenta(model, s.point)[from].real();
    cplx const amp = (from == to ? 1.0 : 0.0) - s.s(to, from);
    return pi / std::pow(k, cs.momentum_power) * std::norm(amp);
}

// sigma(from -> to) at a real energy; channels are zero-based.
inline double cross_section(ChannelModel const& model, double energy, int from, int to, JostOptions const& opt = {},
                            CrossSectionOptions const& cs = {}) {
    if (from < 0 || from >= model.n_channels()) throw validation_error("channel index out of range");
    if (!(energy > model.thresholds()[static_cast<std::size_t>(from)]))
        throw validation_error("entrance channel " + std::to_string(from + 1) + " is closed");
    return cross_section_from(model, s_matrix(model, energy, opt), from, to, cs);
}

// u(r) = phi(r) c on a grid of path distances s (s <= b on the real axis,
// s > b at b + (s - b) e^{i theta}). Row i holds the channel values at grid[i].
inline CMatrix wavefunction(ChannelModel const& model, EnergyPoint const& point, CVector const& c,
                            std::vector<double> const& grid, double theta = 0.0, JostOptions const& opt = {}) {
    Eigen::Index const n = model.n_channels();
    if (c.size() != n) throw validation_error("coefficient vector length does not match the channel count");
    CVector const k = channel_momenta(model, point);
    auto const& g = opt.geometry;
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());
    for (double s : sorted)
        if (s > g.R) throw validation_error("wavefunction grid extends beyond R");

    cplx const dir = std::polar(1.0, theta);
    std::vector<std::pair<double, CVector>> values;
    auto record = [&](double s, CMatrix const& y, bool ab) {
        CMatrix phi;
        if (ab) {
            phi = regular_solution(model, k, ABState{y.leftCols(n), y.rightCols(n), cplx{s}});
        } else {
            phi = regular_solution(model, k, FState{y.leftCols(n), y.rightCols(n), g.b + (s - g.b) * dir});
        }
        values.emplace_back(s, phi * c);
    };
    JostOptions o = opt;
    o.max_length_factor = std::max(o.max_length_factor, 1.1);
    // the tail test is irrelevant here; keep it permissive
    o.tail_tol = 1e300;
    detail::run_path(model, k, theta, o, JostTarget::both, sorted, record);

    CMatrix out(static_cast<Eigen::Index>(grid.size()), n);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto it = std::find_if(values.begin(), values.end(), [&](auto const& v) { return v.first == grid[i]; });
        if (it == values.end()) {
            // grid point equal to R or b: recorded under the vertex position
            it = std::min_element(values.begin(), values.end(), [&](auto const& a, auto const& b2) {
                return std::abs(a.first - grid[i]) < std::abs(b2.first - grid[i]);
            });
        }
        out.row(static_cast<Eigen::Index>(i)) = it->second.transpose();
    }
    return out;
}

} // namespace jostscat
