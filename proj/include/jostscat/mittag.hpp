#pragma once

// Pole residues of S, the Cauchy background over a polygonal contour and the
// Mittag-Leffler reconstruction
//   S(E) = sum_j Res S(E_j) / (E - E_j) + (1 / 2 pi i) sum_k w_k S(z_k) / (z_k - E),
// plus Argand trajectories and detection of their clockwise/anticlockwise arcs.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "jostscat/error.hpp"
#include "jostscat/io.hpp"
#include "jostscat/jost.hpp"
#include "jostscat/parallel.hpp"
#include "jostscat/quadrature.hpp"
#include "jostscat/spectral.hpp"

namespace jostscat {

// Closed polygon (last vertex joins the first). Nodes below the real axis are
// evaluated on the unphysical sheet, nodes on or above it on the physical one.
struct Contour {
    std::vector<cplx> vertices;
    int nodes_per_segment = 175;

    static Contour triangle() { return {{cplx{0.5, 0.5}, cplx{0.5, -30.0}, cplx{20.1, 0.5}}, 175}; }

    std::size_t segments() const { return vertices.size(); }

    // shoelace formula; positive for counter-clockwise
    double signed_area() const {
        double a = 0.0;
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            cplx const p = vertices[i], q = vertices[(i + 1) % vertices.size()];
            a += p.real() * q.imag() - q.real() * p.imag();
        }
        return 0.5 * a;
    }

    // even-odd rule; points on an edge count as outside
    bool contains(cplx z) const {
        if (on_edge(z)) return false;
        bool inside = false;
        for (std::size_t i = 0, j = vertices.size() - 1; i < vertices.size(); j = i++) {
            cplx const a = vertices[i], b = vertices[j];
            if ((a.imag() > z.imag()) != (b.imag() > z.imag()) &&
                z.real() < (b.real() - a.real()) * (z.imag() - a.imag()) / (b.imag() - a.imag()) + a.real())
                inside = !inside;
        }
        return inside;
    }

    void validate(ChannelModel const& model) const {
        if (vertices.size() < 3) throw validation_error("contour needs at least three vertices");
        if (nodes_per_segment < 1) throw validation_error("contour needs at least one node per segment");
        for (std::size_t i = 0; i < vertices.size(); ++i)
            if (vertices[i] == vertices[(i + 1) % vertices.size()])
                throw validation_error("contour has a zero-length edge");
        if (!(signed_area() > 0.0)) throw validation_error("contour must be counter-clockwise with non-zero area");
        double const top = model.thresholds().back();
        for (double t : model.thresholds())
            if (contains(cplx{t}) || on_edge(cplx{t})) throw validation_error("contour encloses or touches a threshold");
        // crossing the real axis left of the highest threshold would jump between
        // sheets where S is discontinuous
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            cplx const a = vertices[i], b = vertices[(i + 1) % vertices.size()];
            if ((a.imag() < 0.0) == (b.imag() < 0.0)) continue;
            double const x = a.imag() == b.imag() ? std::min(a.real(), b.real())
                                                  : a.real() + (b.real() - a.real()) * (0.0 - a.imag()) / (b.imag() - a.imag());
            if (!(x > top)) throw validation_error("contour edge crosses the real axis below the highest threshold");
        }
    }

    bool on_edge(cplx z) const {
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            cplx const a = vertices[i], ab = vertices[(i + 1) % vertices.size()] - a, az = z - a;
            double const cross = ab.real() * az.imag() - ab.imag() * az.real();
            double const dot = ab.real() * az.real() + ab.imag() * az.imag();
            if (std::abs(cross) <= 1e-14 * std::abs(ab) * std::max(1.0, std::abs(az)) && dot >= 0.0 && dot <= std::norm(ab))
                return true;
        }
        return false;
    }

    std::vector<ContourNode> nodes() const {
        GaussRule const rule = gauss_legendre(nodes_per_segment);
        std::vector<ContourNode> out;
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            auto seg = segment_nodes(vertices[i], vertices[(i + 1) % vertices.size()], rule);
            out.insert(out.end(), seg.begin(), seg.end());
        }
        return out;
    }
};

struct ResidueMatrix {
    cplx pole;
    CMatrix res;
};

struct ResidueOptions {
    double epsilon = 1e-6;          // central-difference step for d det f_in / dE
    double min_derivative = 1e-10;  // below this the zero is not simple
};

// Res S(E_j) = f_out adj(f_in) / (d/dE det f_in) at a simple zero of det f_in.
inline ResidueMatrix residue(ChannelModel const& model, cplx pole, SheetSelector const& sheet,
                             ResidueOptions const& ro = {}, JostOptions const& opt = precise_options()) {
    EnergyPoint const p{pole, sheet};
    JostMatrices const jm = jost_pair(model, p, opt);
    double const t = jm.theta;
    cplx const dp = (det_jost(model, {pole + ro.epsilon, sheet}, t, opt) - det_jost(model, {pole - ro.epsilon, sheet}, t, opt)) /
                    (2.0 * ro.epsilon);
    if (!(std::abs(dp) >= ro.min_derivative))
        throw convergence_error("determinant derivative too small at the pole (zero is not simple)");
    return {pole, jm.f_out * adjugate(jm.f_in) / dp};
}

struct BackgroundCache {
    std::vector<ContourNode> nodes;
    std::vector<CMatrix> values;  // S at each node
};

inline EnergyPoint contour_point(int n_channels, cplx z) {
    return {z, SheetSelector::by_half_plane(n_channels, z)};
}

inline BackgroundCache background_cache(ChannelModel const& model, Contour const& contour, JostOptions const& opt = {},
                                        int jobs = 1) {
    contour.validate(model);
    BackgroundCache cache;
    cache.nodes = contour.nodes();
    cache.values.resize(cache.nodes.size());
    std::vector<std::string> errs(cache.nodes.size());
    int const n = model.n_channels();
    parallel_for(cache.nodes.size(), jobs, [&](std::size_t i) {
        cplx const z = cache.nodes[i].point;
        try {
            cache.values[i] = s_matrix_on(model, contour_point(n, z), opt).s;
        } catch (error const& e) {
            errs[i] = "contour node " + std::to_string(i) + " at E = " + std::to_string(z.real()) +
                      (z.imag() < 0 ? "" : "+") + std::to_string(z.imag()) + "i: " + e.what();
        }
    });
    for (auto const& e : errs)
        if (!e.empty()) throw convergence_error(e);
    return cache;
}

struct MLExpansion {
    int n_channels = 0;
    std::vector<ResidueMatrix> poles;
    Contour contour;
    std::vector<bool> included;  // one flag per pole
    BackgroundCache background;

    void validate() const {
        if (included.size() != poles.size()) throw validation_error("pole mask length differs from the pole count");
        if (background.nodes.size() != background.values.size() ||
            background.nodes.size() != contour.segments() * static_cast<std::size_t>(contour.nodes_per_segment))
            throw validation_error("background cache does not match the contour");
        for (auto const& p : poles) {
            if (!contour.contains(p.pole)) throw validation_error("pole lies outside the contour");
            if (p.res.rows() != n_channels || p.res.cols() != n_channels)
                throw validation_error("residue matrix has the wrong shape");
        }
        for (auto const& v : background.values)
            if (v.rows() != n_channels || v.cols() != n_channels) throw validation_error("cached S has the wrong shape");
    }

    // one-based pole numbers, as in the order of `poles`
    MLExpansion with_excluded(std::vector<int> const& excluded) const {
        MLExpansion e = *this;
        for (int k : excluded) {
            if (k < 1 || k > static_cast<int>(poles.size()))
                throw validation_error("pole number " + std::to_string(k) + " out of range");
            e.included[static_cast<std::size_t>(k - 1)] = false;
        }
        return e;
    }

    MLExpansion with_all_excluded() const {
        MLExpansion e = *this;
        std::fill(e.included.begin(), e.included.end(), false);
        return e;
    }
};

inline MLExpansion build_expansion(ChannelModel const& model, std::vector<ResidueMatrix> poles, Contour const& contour,
                                   JostOptions const& opt = {}, int jobs = 1) {
    MLExpansion e;
    e.n_channels = model.n_channels();
    e.poles = std::move(poles);
    e.contour = contour;
    e.included.assign(e.poles.size(), true);
    contour.validate(model);
    for (auto const& p : e.poles)
        if (!contour.contains(p.pole)) throw validation_error("pole lies outside the contour");
    e.background = background_cache(model, contour, opt, jobs);
    return e;
}

// Residues at every resonance of `spectrum` enclosed by the contour, sorted by width.
inline std::vector<ResidueMatrix> enclosed_residues(ChannelModel const& model, SpectrumReport const& spectrum,
                                                    Contour const& contour, ResidueOptions const& ro = {},
                                                    JostOptions const& opt = precise_options(), int jobs = 1) {
    std::vector<ResonanceEntry> inside;
    for (auto const& r : spectrum.resonances)
        if (contour.contains(r.point.energy)) inside.push_back(r);
    std::sort(inside.begin(), inside.end(), [](auto const& a, auto const& b) { return a.pole.Gamma < b.pole.Gamma; });
    std::vector<ResidueMatrix> out(inside.size());
    parallel_for(inside.size(), jobs,
                 [&](std::size_t i) { out[i] = residue(model, inside[i].point.energy, inside[i].point.sheet, ro, opt); });
    return out;
}

inline SMatrix ml_s_matrix(MLExpansion const& e, double energy) {
    cplx const E{energy, 0.0};
    if (!e.contour.contains(E)) throw validation_error("energy " + std::to_string(energy) + " is not inside the contour");
    CMatrix s = CMatrix::Zero(e.n_channels, e.n_channels);
    for (std::size_t j = 0; j < e.poles.size(); ++j)
        if (e.included[j]) s += e.poles[j].res / (E - e.poles[j].pole);
    CMatrix bg = CMatrix::Zero(e.n_channels, e.n_channels);
    for (std::size_t k = 0; k < e.background.nodes.size(); ++k) {
        auto const& node = e.background.nodes[k];
        bg += e.background.values[k] * (node.weight / (node.point - E));
    }
    s += bg / (2.0 * pi * I);
    return {s, EnergyPoint{E, SheetSelector::physical(e.n_channels)}};
}

// ---- Argand trajectories ----

inline std::vector<cplx> argand_direct(ChannelModel const& model, int row, int col, std::vector<double> const& grid,
                                       JostOptions const& opt = {}, int jobs = 1) {
    int const n = model.n_channels();
    if (row < 0 || row >= n || col < 0 || col >= n) throw validation_error("S-matrix element out of range");
    std::vector<cplx> out(grid.size());
    parallel_for(grid.size(), jobs, [&](std::size_t i) { out[i] = s_matrix(model, grid[i], opt).s(row, col); });
    return out;
}

inline std::vector<cplx> argand_expansion(MLExpansion const& e, int row, int col, std::vector<double> const& grid) {
    if (row < 0 || row >= e.n_channels || col < 0 || col >= e.n_channels)
        throw validation_error("S-matrix element out of range");
    std::vector<cplx> out;
    out.reserve(grid.size());
    for (double E : grid) out.push_back(ml_s_matrix(e, E).s(row, col));
    return out;
}

enum class Turn { cw, ccw };

inline char const* to_string(Turn t) { return t == Turn::ccw ? "ccw" : "cw"; }

struct Arc {
    double e_start;
    double e_end;
    Turn orientation;
};

struct ArcOptions {
    int min_run = 3;
    bool merge_single_flips = true;
};

struct ArcReport {
    std::vector<Arc> arcs;
    std::vector<std::string> warnings;
};

// Turning direction at each interior point: left turn of (P_i - P_{i-1}) -> (P_{i+1} - P_i)
// is counter-clockwise. Runs of at least min_run equal turns become arcs.
inline ArcReport detect_arcs(std::vector<cplx> const& traj, std::vector<double> const& grid, ArcOptions const& ao = {}) {
    if (traj.size() != grid.size()) throw validation_error("trajectory and energy grid differ in length");
    if (traj.size() < 3) throw validation_error("arc detection needs at least three points");
    ArcReport report;
    std::size_t const m = traj.size();
    std::vector<int> turn(m, 0);  // +1 ccw, -1 cw, 0 undefined
    for (std::size_t i = 1; i + 1 < m; ++i) {
        cplx const d1 = traj[i] - traj[i - 1], d2 = traj[i + 1] - traj[i];
        if (d1 == cplx{0.0} || d2 == cplx{0.0}) {
            report.warnings.push_back("repeated trajectory point near E = " + std::to_string(grid[i]));
            continue;
        }
        double const cross = d1.real() * d2.imag() - d1.imag() * d2.real();
        turn[i] = cross > 0.0 ? 1 : cross < 0.0 ? -1 : 0;
    }
    // undefined points inherit the previous direction
    for (std::size_t i = 2; i + 1 < m; ++i)
        if (turn[i] == 0) turn[i] = turn[i - 1];
    if (ao.merge_single_flips)
        for (std::size_t i = 2; i + 2 < m; ++i)
            if (turn[i - 1] != 0 && turn[i - 1] == turn[i + 1] && turn[i] != turn[i - 1]) turn[i] = turn[i - 1];

    std::size_t i = 1;
    while (i + 1 < m) {
        if (turn[i] == 0) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 2 < m && turn[j + 1] == turn[i]) ++j;
        if (static_cast<int>(j - i + 1) >= ao.min_run)
            report.arcs.push_back({grid[i], grid[j], turn[i] > 0 ? Turn::ccw : Turn::cw});
        i = j + 1;
    }
    return report;
}

// ---- cache serialization ----

inline constexpr int ml_cache_version = 1;

namespace detail {

inline json cplx_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx cplx_from_json(json const& j) {
    if (!j.is_array() || j.size() != 2) throw validation_error("cache: complex number must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json matrix_to_json(CMatrix const& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(cplx_to_json(m(r, c)));
        rows.push_back(row);
    }
    return rows;
}

inline CMatrix matrix_from_json(json const& j, int n) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(n)) throw validation_error("cache: matrix has wrong shape");
    CMatrix m(n, n);
    for (int r = 0; r < n; ++r) {
        auto const& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || row.size() != static_cast<std::size_t>(n))
            throw validation_error("cache: matrix has wrong shape");
        for (int c = 0; c < n; ++c) m(r, c) = cplx_from_json(row[static_cast<std::size_t>(c)]);
    }
    return m;
}

} // namespace detail

inline json expansion_to_json(MLExpansion const& e, std::optional<ChannelModel> const& model = std::nullopt) {
    json j;
    j["format"] = "jostscat-ml-cache";
    j["version"] = ml_cache_version;
    j["n_channels"] = e.n_channels;
    if (model) j["model"] = model_to_json(*model);
    json verts = json::array();
    for (auto v : e.contour.vertices) verts.push_back(detail::cplx_to_json(v));
    j["contour"] = {{"vertices", verts}, {"nodes_per_segment", e.contour.nodes_per_segment}};
    json poles = json::array();
    for (std::size_t i = 0; i < e.poles.size(); ++i)
        poles.push_back({{"energy", detail::cplx_to_json(e.poles[i].pole)},
                         {"residue", detail::matrix_to_json(e.poles[i].res)},
                         {"included", static_cast<bool>(e.included[i])}});
    j["poles"] = poles;
    json nodes = json::array();
    for (std::size_t k = 0; k < e.background.nodes.size(); ++k)
        nodes.push_back({{"z", detail::cplx_to_json(e.background.nodes[k].point)},
                         {"w", detail::cplx_to_json(e.background.nodes[k].weight)},
                         {"s", detail::matrix_to_json(e.background.values[k])}});
    j["nodes"] = nodes;
    return j;
}

inline MLExpansion expansion_from_json(json const& j) {
    try {
        if (j.value("format", std::string{}) != "jostscat-ml-cache") throw validation_error("not an expansion cache");
        int const version = j.at("version").get<int>();
        if (version != ml_cache_version)
            throw validation_error("cache version " + std::to_string(version) + " is not supported (expected " +
                                   std::to_string(ml_cache_version) + ")");
        MLExpansion e;
        e.n_channels = j.at("n_channels").get<int>();
        if (e.n_channels < 1) throw validation_error("cache: n_channels must be positive");
        for (auto const& v : j.at("contour").at("vertices")) e.contour.vertices.push_back(detail::cplx_from_json(v));
        e.contour.nodes_per_segment = j.at("contour").at("nodes_per_segment").get<int>();
        for (auto const& p : j.at("poles")) {
            e.poles.push_back({detail::cplx_from_json(p.at("energy")), detail::matrix_from_json(p.at("residue"), e.n_channels)});
            e.included.push_back(p.value("included", true));
        }
        for (auto const& node : j.at("nodes")) {
            e.background.nodes.push_back({detail::cplx_from_json(node.at("z")), detail::cplx_from_json(node.at("w"))});
            e.background.values.push_back(detail::matrix_from_json(node.at("s"), e.n_channels));
        }
        e.validate();
        return e;
    } catch (json::exception const& ex) {
        throw validation_error(std::string("cache: ") + ex.what());
    }
}

} // namespace jostscat
