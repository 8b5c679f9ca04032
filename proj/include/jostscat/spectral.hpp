#pragma once

// Spectral points as zeros of det f_in(E): grid scan for candidates, Newton
// refinement with a central-difference derivative, and partial widths from
// the residue structure of S = f_out adj(f_in) / det f_in.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "jostscat/error.hpp"
#include "jostscat/jost.hpp"
#include "jostscat/model.hpp"
#include "jostscat/parallel.hpp"

namespace jostscat {

enum class SpectralKind { bound, resonance, virtual_state, other };

inline char const* to_string(SpectralKind k) {
    switch (k) {
        case SpectralKind::bound: return "bound";
        case SpectralKind::resonance: return "resonance";
        case SpectralKind::virtual_state: return "virtual";
        default: return "other";
    }
}

struct SpectralPoint {
    cplx energy;
    SpectralKind kind = SpectralKind::other;
    SheetSelector sheet;
    double det_residual = 0.0;
    cplx det_derivative;
    int iterations = 0;
};

struct ResonancePole {
    double E_r = 0.0;
    double Gamma = 0.0;
    std::vector<double> partial_widths;
    SheetSelector sheet;

    cplx energy() const { return {E_r, -0.5 * Gamma}; }
};

struct EnergyRegion {
    double re_min = 0.0, re_max = 0.0, im_min = 0.0, im_max = 0.0;

    void validate() const {
        if (!(re_max > re_min) || !(im_max >= im_min))
            throw validation_error("energy region must have re_max > re_min and im_max >= im_min");
    }
    bool contains(cplx e, double margin_re = 0.0, double margin_im = 0.0) const {
        return e.real() >= re_min - margin_re && e.real() <= re_max + margin_re && e.imag() >= im_min - margin_im &&
               e.imag() <= im_max + margin_im;
    }
};

struct ScanGrid {
    int n_re = 2, n_im = 1;
};

struct ScanResult {
    std::vector<cplx> candidates;
    std::vector<std::string> failures;  // per-point errors, not fatal
};

struct RefineOptions {
    double tol = 1e-10;
    double epsilon = 1e-6;  // central-difference step for d det / dE
    int max_iterations = 50;
    double min_derivative = 1e-12;
    int max_halvings = 10;  // backtracking on steps that do not reduce |det|
};

// Rotation angle to use for f_in at a point: fixed if given, else the schedule.
inline double resolve_theta_in(ChannelModel const& model, EnergyPoint const& p, std::optional<double> theta) {
    return theta ? *theta : theta_for_in(model, p);
}

inline cplx det_jost(ChannelModel const& model, EnergyPoint const& point, std::optional<double> theta = 0.0,
                     JostOptions const& opt = {}) {
    return jost_matrices(model, point, resolve_theta_in(model, point, theta), opt, JostTarget::in).f_in.determinant();
}

inline SpectralKind classify(ChannelModel const& model, cplx energy, SheetSelector const& sheet) {
    bool const all_physical =
        std::all_of(sheet.signs.begin(), sheet.signs.end(), [](Sheet s) { return s == Sheet::physical; });
    double const scale = std::max(1.0, std::abs(energy));
    bool const real = std::abs(energy.imag()) <= 1e-8 * scale;
    if (all_physical && real && energy.real() < model.thresholds().front()) return SpectralKind::bound;
    if (!all_physical && energy.imag() < 0.0 && !real) return SpectralKind::resonance;
    if (!all_physical && real) return SpectralKind::virtual_state;
    return SpectralKind::other;
}

// raw: |det f_in|. normalized: the Hadamard ratio, which suits the physical
// sheet below threshold but flattens narrow resonances and is constant for one
// channel. combined: union of the minima of both.
enum class ScanMeasure { raw, normalized, combined };

namespace detail {

inline double hadamard_ratio(CMatrix const& f) {
    double norm = 1.0;
    for (Eigen::Index c = 0; c < f.cols(); ++c) norm *= f.col(c).norm();
    return norm > 0.0 ? std::abs(f.determinant()) / norm : 0.0;
}

// grid indices (a, b) whose value is a strict minimum among finite neighbours
inline std::vector<std::size_t> grid_minima(std::vector<double> const& value, std::size_t nr, std::size_t ni) {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < nr; ++a) {
        for (std::size_t b = 0; b < ni; ++b) {
            double const v = value[a * ni + b];
            if (!std::isfinite(v)) continue;
            bool minimum = true;
            int neighbours = 0;
            for (int da = -1; da <= 1 && minimum; ++da) {
                for (int db = -1; db <= 1; ++db) {
                    if (!da && !db) continue;
                    long const aa = long(a) + da, bb = long(b) + db;
                    if (aa < 0 || bb < 0 || aa >= long(nr) || bb >= long(ni)) continue;
                    double const w = value[std::size_t(aa) * ni + std::size_t(bb)];
                    if (!std::isfinite(w)) continue;
                    ++neighbours;
                    if (!(v < w)) {
                        minimum = false;
                        break;
                    }
                }
            }
            if (minimum && neighbours > 0) out.push_back(a * ni + b);
        }
    }
    return out;
}

} // namespace detail

// |det f_in| divided by the product of its column norms (Hadamard ratio, in [0, 1]).
// Removes the exponential growth of f_in near thresholds so minima stay local.
inline double normalized_det_jost(ChannelModel const& model, EnergyPoint const& point,
                                  std::optional<double> theta = 0.0, JostOptions const& opt = {}) {
    return detail::hadamard_ratio(
        jost_matrices(model, point, resolve_theta_in(model, point, theta), opt, JostTarget::in).f_in);
}

// Grid points of the scan measure that are strict minima among their (up to 8) neighbours.
inline ScanResult scan_minima(ChannelModel const& model, EnergyRegion const& region, ScanGrid const& grid,
                              SheetSelector const& sheet, std::optional<double> theta = std::nullopt,
                              JostOptions const& opt = {}, int jobs = 1, ScanMeasure measure = ScanMeasure::raw) {
    region.validate();
    if (grid.n_re < 2 || grid.n_im < 1) throw validation_error("scan grid needs n_re >= 2 and n_im >= 1");
    std::size_t const nr = static_cast<std::size_t>(grid.n_re), ni = static_cast<std::size_t>(grid.n_im);
    auto energy_at = [&](std::size_t a, std::size_t b) {
        double const re = region.re_min + (region.re_max - region.re_min) * double(a) / double(nr - 1);
        double const im = ni == 1 ? region.im_min
                                  : region.im_min + (region.im_max - region.im_min) * double(b) / double(ni - 1);
        return cplx{re, im};
    };

    double const nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> raw(nr * ni, nan), normalized(nr * ni, nan);
    std::vector<std::string> errors(nr * ni);
    parallel_for(nr * ni, jobs, [&](std::size_t idx) {
        EnergyPoint const p{energy_at(idx / ni, idx % ni), sheet};
        try {
            CMatrix const f =
                jost_matrices(model, p, resolve_theta_in(model, p, theta), opt, JostTarget::in).f_in;
            raw[idx] = std::abs(f.determinant());
            normalized[idx] = detail::hadamard_ratio(f);
        } catch (branch_point_error const&) {
            // a grid point on a threshold carries no information
        } catch (error const& e) {
            errors[idx] = e.what();
        }
    });

    ScanResult out;
    for (auto& e : errors)
        if (!e.empty()) out.failures.push_back(std::move(e));
    std::vector<std::size_t> picked;
    if (measure != ScanMeasure::normalized) picked = detail::grid_minima(raw, nr, ni);
    if (measure != ScanMeasure::raw)
        for (std::size_t idx : detail::grid_minima(normalized, nr, ni))
            if (std::find(picked.begin(), picked.end(), idx) == picked.end()) picked.push_back(idx);
    std::sort(picked.begin(), picked.end());
    for (std::size_t idx : picked) out.candidates.push_back(energy_at(idx / ni, idx % ni));
    return out;
}

// Newton iteration E <- E - det/det' with det' = [det(E+eps) - det(E-eps)] / (2 eps).
// Long steps that do not reduce |det| are halved.
inline SpectralPoint refine_zero(ChannelModel const& model, cplx seed, SheetSelector const& sheet,
                                 std::optional<double> theta = std::nullopt, RefineOptions const& ro = {},
                                 JostOptions const& opt = {}) {
    cplx e = seed;
    // keep one rotation for the whole iteration so det stays a single analytic function
    double t = resolve_theta_in(model, {e, sheet}, theta);
    auto det_at = [&](cplx z) { return det_jost(model, {z, sheet}, t, opt); };
    cplx d;
    try {
        d = det_at(e);
    } catch (unreachable_error const&) {
        if (theta) throw;
        t = theta_for_in(model, {e, sheet});
        d = det_at(e);
    }
    double previous = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= ro.max_iterations; ++it) {
        cplx dp;
        try {
            dp = (det_at(e + ro.epsilon) - det_at(e - ro.epsilon)) / (2.0 * ro.epsilon);
        } catch (unreachable_error const&) {
            if (theta) throw;
            t = theta_for_in(model, {e, sheet});
            d = det_at(e);
            dp = (det_at(e + ro.epsilon) - det_at(e - ro.epsilon)) / (2.0 * ro.epsilon);
        }
        if (!(std::abs(dp) > ro.min_derivative))
            throw convergence_error("vanishing determinant derivative near E = " + std::to_string(e.real()) +
                                    std::to_string(e.imag()) + "i (multiple zero or bad seed)");
        cplx const step = d / dp;
        double const scale = std::max(1.0, std::abs(e));
        bool const long_step = std::abs(step) > std::sqrt(ro.tol) * scale;
        cplx e_new = e - step, d_new;
        for (int k = 0;; ++k) {
            bool ok = std::isfinite(e_new.real()) && std::isfinite(e_new.imag());
            if (ok) {
                try {
                    d_new = det_at(e_new);
                } catch (error const&) {
                    if (k == ro.max_halvings || !long_step) throw;
                    ok = false;
                }
            }
            if (ok && (!long_step || std::abs(d_new) < std::abs(d) || k == ro.max_halvings)) break;
            if (k == ro.max_halvings) throw convergence_error("Newton iteration diverged");
            e_new = e - std::ldexp(1.0, -(k + 1)) * step;
        }
        double const size = std::abs(e_new - e);
        e = e_new;
        d = d_new;
        // below sqrt(tol) a step that no longer halves means the integration noise floor is reached
        bool const converged =
            size < ro.tol * scale || (size < std::sqrt(ro.tol) * scale && size > 0.5 * previous);
        previous = size;
        if (converged) {
            SpectralPoint sp;
            sp.energy = e;
            sp.sheet = sheet;
            sp.iterations = it;
            sp.det_derivative = dp;
            sp.det_residual = std::abs(d);
            sp.kind = classify(model, e, sheet);
            if (sp.kind == SpectralKind::bound) sp.energy = {e.real(), 0.0};
            return sp;
        }
    }
    throw convergence_error("Newton iteration did not converge in " + std::to_string(ro.max_iterations) +
                            " iterations from seed " + std::to_string(seed.real()) + std::to_string(seed.imag()) + "i");
}

// Adjugate via cofactors: adj(M)_{ij} = (-1)^{i+j} det(M without row j, column i).
inline CMatrix adjugate(CMatrix const& m) {
    Eigen::Index const n = m.rows();
    if (n == 1) return CMatrix::Ones(1, 1);
    CMatrix adj(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            CMatrix minor(n - 1, n - 1);
            for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
                if (r == j) continue;
                for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
                    if (c == i) continue;
                    minor(rr, cc++) = m(r, c);
                }
                ++rr;
            }
            adj(i, j) = ((i + j) % 2 ? -1.0 : 1.0) * minor.determinant();
        }
    }
    return adj;
}

// Gamma = -2 Im E_res; Gamma_n proportional to |[f_out adj(f_in)]_nn|, which for
// two channels is the ratio
//   Gamma_1/Gamma_2 = |f^out_11 f^in_22 - f^out_12 f^in_21| / |f^out_22 f^in_11 - f^out_21 f^in_12|.
inline ResonancePole partial_widths(ChannelModel const& model, cplx pole_energy, SheetSelector const& sheet,
                                    JostOptions const& opt = {}) {
    if (!(pole_energy.imag() < 0.0)) throw validation_error("partial widths need a pole with Im E < 0");
    auto const jm = jost_pair(model, {pole_energy, sheet}, opt);
    CMatrix const r = jm.f_out * adjugate(jm.f_in);
    ResonancePole pole;
    pole.E_r = pole_energy.real();
    pole.Gamma = -2.0 * pole_energy.imag();
    pole.sheet = sheet;
    double total = 0.0;
    for (Eigen::Index i = 0; i < r.rows(); ++i) total += std::abs(r(i, i));
    if (!(total > 0.0) || !std::isfinite(total)) throw convergence_error("partial-width ratio is undefined at this pole");
    double assigned = 0.0;
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        double const g = i + 1 < r.rows() ? pole.Gamma * std::abs(r(i, i)) / total : pole.Gamma - assigned;
        pole.partial_widths.push_back(g);
        assigned += g;
    }
    return pole;
}

struct SpectrumSearch {
    std::optional<EnergyRegion> bound_region = EnergyRegion{-3.0, 0.0, -1e-6, 1e-6};
    ScanGrid bound_grid{60, 3};
    ScanMeasure bound_measure = ScanMeasure::combined;
    std::optional<EnergyRegion> resonance_region = EnergyRegion{0.5, 9.0, -25.0, -1e-4};
    ScanGrid resonance_grid{35, 51};
    ScanMeasure resonance_measure = ScanMeasure::raw;
    // fixed f_in rotation for the resonance scan; default is the per-point schedule
    std::optional<double> resonance_theta;
    RefineOptions refine;
    double dedup_radius = 1e-6;
    int jobs = 1;
};

struct ResonanceEntry {
    SpectralPoint point;
    ResonancePole pole;
};

struct SpectrumReport {
    std::vector<SpectralPoint> bound;
    std::vector<ResonanceEntry> resonances;
    std::vector<std::string> failures;
};

namespace detail {

inline void dedup_append(std::vector<SpectralPoint>& into, SpectralPoint const& sp, double radius) {
    for (auto const& q : into)
        if (std::abs(q.energy - sp.energy) < radius) return;
    into.push_back(sp);
}

} // namespace detail

// scan -> refine -> deduplicate -> widths; results sorted by Re E.
inline SpectrumReport find_spectrum(ChannelModel const& model, SpectrumSearch const& cfg = {},
                                    JostOptions const& opt = {}) {
    SpectrumReport report;
    int const n = model.n_channels();
    if (cfg.resonance_region && !(cfg.resonance_region->im_max < 0.0))
        throw validation_error("resonance region must lie below the real axis (im_max < 0)");

    auto run = [&](EnergyRegion const& region, ScanGrid const& grid, SheetSelector const& sheet,
                   std::optional<double> theta, ScanMeasure measure, std::vector<SpectralPoint>& found) {
        auto scan = scan_minima(model, region, grid, sheet, theta, opt, cfg.jobs, measure);
        for (auto& f : scan.failures) report.failures.push_back("scan: " + f);
        std::vector<std::optional<SpectralPoint>> refined(scan.candidates.size());
        std::vector<std::string> errs(scan.candidates.size());
        parallel_for(scan.candidates.size(), cfg.jobs, [&](std::size_t i) {
            try {
                refined[i] = refine_zero(model, scan.candidates[i], sheet, theta, cfg.refine, opt);
            } catch (error const& e) {
                errs[i] = e.what();
            }
        });
        for (std::size_t i = 0; i < refined.size(); ++i) {
            if (!errs[i].empty()) {
                report.failures.push_back("refine: " + errs[i]);
                continue;
            }
            if (!refined[i] || !region.contains(refined[i]->energy, 1e-9, 1e-9))
                continue;
            detail::dedup_append(found, *refined[i], cfg.dedup_radius);
        }
    };

    if (!model.is_free()) {
        if (cfg.bound_region) {
            std::vector<SpectralPoint> found;
            run(*cfg.bound_region, cfg.bound_grid, SheetSelector::physical(n), 0.0, cfg.bound_measure, found);
            for (auto const& sp : found)
                if (sp.kind == SpectralKind::bound) report.bound.push_back(sp);
        }
        if (cfg.resonance_region) {
            std::vector<SpectralPoint> found;
            run(*cfg.resonance_region, cfg.resonance_grid, SheetSelector::unphysical(n), cfg.resonance_theta,
                cfg.resonance_measure, found);
            for (auto const& sp : found) {
                if (sp.kind != SpectralKind::resonance) continue;
                try {
                    report.resonances.push_back({sp, partial_widths(model, sp.energy, sp.sheet, opt)});
                } catch (error const& e) {
                    report.failures.push_back(std::string("widths: ") + e.what());
                }
            }
        }
    }
    std::sort(report.bound.begin(), report.bound.end(),
              [](auto const& a, auto const& b) { return a.energy.real() < b.energy.real(); });
    std::sort(report.resonances.begin(), report.resonances.end(),
              [](auto const& a, auto const& b) { return a.point.energy.real() < b.point.energy.real(); });
    return report;
}

} // namespace jostscat
