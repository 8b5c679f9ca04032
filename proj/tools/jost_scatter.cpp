// jost-scatter: spectrum search, cross sections, residues, Argand analysis and
// Mittag-Leffler caches for multichannel short-range potentials.
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or validation error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "jostscat/jostscat.hpp"

using namespace jostscat;

namespace {

struct Options {
    std::string model = "noro-taylor";
    std::string builtin;
    std::optional<double> theta;
    double r_min = 1e-4, b = 1.0, R = 30.0;
    double tol = 1e-10;
    std::string grid;
    std::string contour;
    int nodes = 175;
    std::vector<int> exclude;
    bool exclude_all = false;
    std::string cache;
    std::string format = "csv";
    std::string out;
    int jobs = 1;
    double epsilon = 1e-6;
    std::vector<int> pole;
    bool ml = false;
    std::string element = "1,1";
    std::string transitions;
    int momentum_power = 1;
    int min_run = 3;
    std::optional<double> re_min, re_max, im_min, im_max;
};

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

ChannelModel make_model(Options const& o) {
    std::string const name = o.builtin.empty() ? o.model : o.builtin;
    if (name == "noro-taylor" && (!o.builtin.empty() || !std::filesystem::exists(name))) return noro_taylor();
    if (!o.builtin.empty()) throw validation_error("unknown builtin model '" + o.builtin + "' (available: noro-taylor)");
    return load_model(name);
}

JostOptions jost_options(Options const& o) {
    JostOptions j;
    j.geometry = {o.r_min, o.b, o.R};
    j.geometry.validate();
    j.integrator.abs_tol = j.integrator.rel_tol = o.tol;
    j.integrator.validate();
    return j;
}

// "A:B:STEP", inclusive of B up to rounding
std::vector<double> parse_grid(std::string const& spec) {
    std::vector<double> v;
    std::stringstream ss(spec);
    std::string part;
    while (std::getline(ss, part, ':')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (std::exception const&) {
            throw validation_error("grid '" + spec + "' must be A:B:STEP");
        }
    }
    if (v.size() != 3 || !(v[2] > 0.0) || !(v[1] >= v[0]))
        throw validation_error("grid '" + spec + "' must be A:B:STEP with B >= A and STEP > 0");
    std::vector<double> g;
    auto const count = static_cast<long>(std::floor((v[1] - v[0]) / v[2] + 1e-9));
    for (long i = 0; i <= count; ++i) g.push_back(v[0] + static_cast<double>(i) * v[2]);
    return g;
}

// "a+bi" / "a-bi" / "a" / "bi"
cplx parse_complex(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
    if (s.empty()) throw validation_error("empty complex number");
    try {
        if (s.back() != 'i') {
            std::size_t used = 0;
            double const re = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return {re, 0.0};
        }
        std::string body = s.substr(0, s.size() - 1);
        std::size_t split = std::string::npos;
        for (std::size_t i = 1; i < body.size(); ++i)
            if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') split = i;
        if (split == std::string::npos) {
            if (body.empty() || body == "+" || body == "-") body += "1";
            std::size_t used = 0;
            double const im = std::stod(body, &used);
            if (used != body.size()) throw std::invalid_argument(s);
            return {0.0, im};
        }
        std::string re_part = body.substr(0, split), im_part = body.substr(split);
        if (im_part == "+" || im_part == "-") im_part += "1";
        std::size_t u1 = 0, u2 = 0;
        double const re = std::stod(re_part, &u1), im = std::stod(im_part, &u2);
        if (u1 != re_part.size() || u2 != im_part.size()) throw std::invalid_argument(s);
        return {re, im};
    } catch (std::invalid_argument const&) {
        throw validation_error("cannot parse complex number '" + s + "'");
    } catch (std::out_of_range const&) {
        throw validation_error("complex number out of range '" + s + "'");
    }
}

Contour make_contour(Options const& o) {
    Contour c = Contour::triangle();
    if (!o.contour.empty()) {
        c.vertices.clear();
        std::stringstream ss(o.contour);
        std::string part;
        while (std::getline(ss, part, ',')) c.vertices.push_back(parse_complex(part));
    }
    c.nodes_per_segment = o.nodes;
    return c;
}

std::pair<int, int> parse_pair(std::string const& s, char sep, int n) {
    auto const pos = s.find(sep);
    if (pos == std::string::npos) throw validation_error("expected I" + std::string(1, sep) + "J, got '" + s + "'");
    int a = 0, b = 0;
    try {
        a = std::stoi(s.substr(0, pos));
        b = std::stoi(s.substr(pos + 1));
    } catch (std::exception const&) {
        throw validation_error("expected I" + std::string(1, sep) + "J, got '" + s + "'");
    }
    if (a < 1 || a > n || b < 1 || b > n) throw validation_error("channel index out of range in '" + s + "'");
    return {a - 1, b - 1};
}

class Output {
  public:
    explicit Output(Options const& o) : path_(o.out) {
        if (o.format != "csv" && o.format != "json") throw validation_error("format must be csv or json");
    }
    void write(std::string const& text) const {
        if (path_.empty())
            std::cout << text;
        else
            write_text_file(path_, text);
    }
    std::string const& path() const { return path_; }

  private:
    std::string path_;
};

std::string csv(std::vector<std::string> const& header, std::vector<std::vector<std::string>> const& rows) {
    std::string s;
    for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
    s += "\n";
    for (auto const& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
        s += "\n";
    }
    return s;
}

// JSON numbers are written from the same %.12g text as the CSV output
json jnum(double x) { return json::parse(num(x)); }

SpectrumSearch spectrum_config(Options const& o) {
    SpectrumSearch cfg;
    cfg.jobs = o.jobs;
    cfg.refine.epsilon = o.epsilon;
    cfg.resonance_theta = o.theta;
    auto& r = *cfg.resonance_region;
    if (o.re_min) r.re_min = *o.re_min;
    if (o.re_max) r.re_max = *o.re_max;
    if (o.im_min) r.im_min = *o.im_min;
    if (o.im_max) r.im_max = *o.im_max;
    r.validate();
    return cfg;
}

SpectrumReport compute_spectrum(ChannelModel const& model, Options const& o, JostOptions const& jo) {
    auto rep = find_spectrum(model, spectrum_config(o), jo);
    for (auto const& f : rep.failures) std::cerr << "note: " << f << "\n";
    return rep;
}

MLExpansion obtain_expansion(ChannelModel const& model, Options const& o, JostOptions const& jo) {
    if (!o.cache.empty() && std::filesystem::exists(o.cache)) return expansion_from_json(read_json_file(o.cache));
    Contour const contour = make_contour(o);
    contour.validate(model);
    auto const spectrum = compute_spectrum(model, o, jo);
    ResidueOptions ro;
    ro.epsilon = o.epsilon;
    auto residues = enclosed_residues(model, spectrum, contour, ro, tightened(jo), o.jobs);
    return build_expansion(model, std::move(residues), contour, jo, o.jobs);
}

MLExpansion masked(MLExpansion const& e, Options const& o) {
    if (o.exclude_all) return e.with_all_excluded();
    return e.with_excluded(o.exclude);
}

int cmd_spectrum(Options const& o) {
    Output const out(o);
    auto const model = make_model(o);
    auto const jo = jost_options(o);
    auto const rep = compute_spectrum(model, o, jo);
    int const n = model.n_channels();
    std::vector<std::string> header{"kind", "sheet", "E_r", "Gamma"};
    for (int i = 1; i <= n; ++i) header.push_back("Gamma_" + std::to_string(i));
    for (auto const* h : {"re_E", "im_E", "residual", "iterations"}) header.push_back(h);

    if (o.format == "json") {
        json j = {{"bound", json::array()}, {"resonances", json::array()}};
        for (auto const& b : rep.bound)
            j["bound"].push_back({{"E", jnum(b.energy.real())}, {"sheet", b.sheet.label()},
                                  {"residual", jnum(b.det_residual)}, {"iterations", b.iterations}});
        for (auto const& r : rep.resonances) {
            json widths = json::array();
            for (double g : r.pole.partial_widths) widths.push_back(jnum(g));
            j["resonances"].push_back({{"E_r", jnum(r.pole.E_r)}, {"Gamma", jnum(r.pole.Gamma)},
                                       {"partial_widths", widths}, {"sheet", r.point.sheet.label()},
                                       {"residual", jnum(r.point.det_residual)}, {"iterations", r.point.iterations}});
        }
        out.write(j.dump(2) + "\n");
        return 0;
    }
    std::vector<std::vector<std::string>> rows;
    for (auto const& b : rep.bound) {
        std::vector<std::string> row{"bound", b.sheet.label(), num(b.energy.real()), num(0.0)};
        for (int i = 0; i < n; ++i) row.push_back("");
        for (auto const& v : {num(b.energy.real()), num(b.energy.imag()), num(b.det_residual), std::to_string(b.iterations)})
            row.push_back(v);
        rows.push_back(row);
    }
    for (auto const& r : rep.resonances) {
        std::vector<std::string> row{"resonance", r.point.sheet.label(), num(r.pole.E_r), num(r.pole.Gamma)};
        for (double g : r.pole.partial_widths) row.push_back(num(g));
        for (auto const& v : {num(r.point.energy.real()), num(r.point.energy.imag()), num(r.point.det_residual),
                              std::to_string(r.point.iterations)})
            row.push_back(v);
        rows.push_back(row);
    }
    out.write(csv(header, rows));
    return 0;
}

int cmd_xsec(Options const& o) {
    Output const out(o);
    auto const model = make_model(o);
    auto const jo = jost_options(o);
    int const n = model.n_channels();
    auto const grid = parse_grid(o.grid.empty() ? "0.2:20:0.02" : o.grid);

    std::vector<std::pair<int, int>> tr;
    if (o.transitions.empty()) {
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) tr.emplace_back(a, b);
    } else {
        std::stringstream ss(o.transitions);
        std::string part;
        while (std::getline(ss, part, ',')) tr.push_back(parse_pair(part, '-', n));
    }
    for (auto [from, to] : tr)
        if (!(grid.front() > model.thresholds()[static_cast<std::size_t>(from)]))
            throw validation_error("grid starts at or below the threshold of entrance channel " + std::to_string(from + 1));

    CrossSectionOptions cs;
    cs.momentum_power = o.momentum_power;
    std::optional<MLExpansion> ml;
    if (o.ml || !o.exclude.empty() || o.exclude_all) ml = masked(obtain_expansion(model, o, jo), o);

    std::vector<std::vector<double>> values(grid.size());
    parallel_for(grid.size(), ml ? 1 : o.jobs, [&](std::size_t i) {
        SMatrix const s = ml ? ml_s_matrix(*ml, grid[i]) : s_matrix(model, grid[i], jo);
        for (auto [from, to] : tr) values[i].push_back(cross_section_from(model, s, from, to, cs));
    });

    std::vector<std::string> header{"E"};
    for (auto [from, to] : tr) header.push_back("sigma_" + std::to_string(from + 1) + "_" + std::to_string(to + 1));
    if (o.format == "json") {
        json j = json::array();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            json row = {{"E", jnum(grid[i])}};
            for (std::size_t t = 0; t < tr.size(); ++t) row[header[t + 1]] = jnum(values[i][t]);
            j.push_back(row);
        }
        out.write(j.dump(2) + "\n");
        return 0;
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<std::string> row{num(grid[i])};
        for (double v : values[i]) row.push_back(num(v));
        rows.push_back(row);
    }
    out.write(csv(header, rows));
    return 0;
}

int cmd_residues(Options const& o) {
    Output const out(o);
    auto const model = make_model(o);
    auto const jo = jost_options(o);
    int const n = model.n_channels();
    std::vector<ResidueMatrix> res;
    if (!o.cache.empty() && std::filesystem::exists(o.cache) && o.epsilon == 1e-6) {
        res = expansion_from_json(read_json_file(o.cache)).poles;
    } else {
        Contour const contour = make_contour(o);
        contour.validate(model);
        ResidueOptions ro;
        ro.epsilon = o.epsilon;
        res = enclosed_residues(model, compute_spectrum(model, o, jo), contour, ro, tightened(jo), o.jobs);
    }
    for (int k : o.pole)
        if (k < 1 || k > static_cast<int>(res.size()))
            throw validation_error("pole number " + std::to_string(k) + " out of range (1.." + std::to_string(res.size()) + ")");
    auto wanted = [&](int k) { return o.pole.empty() || std::find(o.pole.begin(), o.pole.end(), k) != o.pole.end(); };

    std::vector<std::pair<int, int>> elems;
    for (int c = 0; c < n; ++c)
        for (int r = c; r < n; ++r) elems.emplace_back(r, c);
    std::vector<std::string> header{"pole", "re_E", "im_E"};
    for (auto [r, c] : elems) {
        std::string const tag = "S" + std::to_string(r + 1) + std::to_string(c + 1);
        header.push_back("re_Res_" + tag);
        header.push_back("im_Res_" + tag);
        header.push_back("phase_" + tag);
    }
    if (o.format == "json") {
        json j = json::array();
        for (std::size_t k = 0; k < res.size(); ++k) {
            if (!wanted(static_cast<int>(k + 1))) continue;
            json row = {{"pole", k + 1}, {"E", {jnum(res[k].pole.real()), jnum(res[k].pole.imag())}}};
            for (auto [r, c] : elems) {
                cplx const v = res[k].res(r, c);
                row["S" + std::to_string(r + 1) + std::to_string(c + 1)] = {
                    {"re", jnum(v.real())}, {"im", jnum(v.imag())}, {"phase", jnum(std::arg(v))}};
            }
            j.push_back(row);
        }
        out.write(j.dump(2) + "\n");
        return 0;
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < res.size(); ++k) {
        if (!wanted(static_cast<int>(k + 1))) continue;
        std::vector<std::string> row{std::to_string(k + 1), num(res[k].pole.real()), num(res[k].pole.imag())};
        for (auto [r, c] : elems) {
            cplx const v = res[k].res(r, c);
            row.push_back(num(v.real()));
            row.push_back(num(v.imag()));
            row.push_back(num(std::arg(v)));
        }
        rows.push_back(row);
    }
    out.write(csv(header, rows));
    return 0;
}

int cmd_argand(Options const& o) {
    Output const out(o);
    auto const model = make_model(o);
    auto const jo = jost_options(o);
    auto const [row, col] = parse_pair(o.element, ',', model.n_channels());
    bool const use_ml = o.ml || !o.exclude.empty() || o.exclude_all;
    auto const grid = parse_grid(o.grid.empty() ? (use_ml ? "0.6:19.6:0.05" : "0.5:20:0.05") : o.grid);

    std::vector<cplx> traj;
    if (use_ml) {
        auto const e = masked(obtain_expansion(model, o, jo), o);
        traj = argand_expansion(e, row, col, grid);
    } else {
        traj = argand_direct(model, row, col, grid, jo, o.jobs);
    }
    ArcOptions ao;
    ao.min_run = o.min_run;
    auto const arcs = detect_arcs(traj, grid, ao);
    for (auto const& w : arcs.warnings) std::cerr << "warning: " << w << "\n";

    auto integer_marker = [](double E) { return std::abs(E - std::round(E)) < 1e-9; };
    if (o.format == "json") {
        json j = {{"element", {row + 1, col + 1}}, {"trajectory", json::array()}, {"arcs", json::array()}};
        for (std::size_t i = 0; i < grid.size(); ++i)
            j["trajectory"].push_back({{"E", jnum(grid[i])}, {"re", jnum(traj[i].real())}, {"im", jnum(traj[i].imag())},
                                       {"integer_energy", integer_marker(grid[i])}});
        for (auto const& a : arcs.arcs)
            j["arcs"].push_back({{"E_start", jnum(a.e_start)}, {"E_end", jnum(a.e_end)}, {"orientation", to_string(a.orientation)}});
        out.write(j.dump(2) + "\n");
        return 0;
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i)
        rows.push_back({num(grid[i]), num(traj[i].real()), num(traj[i].imag()), integer_marker(grid[i]) ? "1" : "0"});
    std::vector<std::vector<std::string>> arc_rows;
    for (auto const& a : arcs.arcs) arc_rows.push_back({num(a.e_start), num(a.e_end), to_string(a.orientation)});
    std::string const traj_csv = csv({"E", "re_S", "im_S", "integer_energy"}, rows);
    std::string const arc_csv = csv({"E_start", "E_end", "orientation"}, arc_rows);
    if (out.path().empty()) {
        std::cout << traj_csv << "\n" << arc_csv;
    } else {
        write_text_file(out.path(), traj_csv);
        write_text_file(out.path() + ".arcs.csv", arc_csv);
    }
    return 0;
}

int cmd_ml_cache(Options const& o) {
    auto const model = make_model(o);
    auto const jo = jost_options(o);
    std::string const path = !o.cache.empty() ? o.cache : o.out;
    if (path.empty()) throw validation_error("ml-cache needs --cache PATH or --out PATH");
    Options fresh = o;
    fresh.cache.clear();
    auto const e = obtain_expansion(model, fresh, jo);
    write_text_file(path, expansion_to_json(e, model).dump(1) + "\n");
    std::cerr << "wrote " << e.poles.size() << " poles and " << e.background.nodes.size() << " contour nodes to " << path
              << "\n";
    return 0;
}

void add_common(CLI::App* app, Options& o) {
    app->add_option("--model", o.model, "model JSON file, or the builtin name noro-taylor");
    app->add_option("--builtin", o.builtin, "builtin model name (noro-taylor)");
    app->add_option("--theta", o.theta, "fixed rotation angle for f_in in radians (default: chosen per energy)");
    app->add_option("--r-min", o.r_min, "start of integration");
    app->add_option("--b", o.b, "end of the real-axis segment");
    app->add_option("--R", o.R, "matching radius");
    app->add_option("--tol", o.tol, "integrator absolute and relative tolerance");
    app->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app->add_option("--out", o.out, "output path (default stdout)");
    app->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--epsilon", o.epsilon, "central-difference step for d det f_in / dE")->check(CLI::PositiveNumber);
    app->add_option("--region-re-min", o.re_min, "resonance search region");
    app->add_option("--region-re-max", o.re_max);
    app->add_option("--region-im-min", o.im_min);
    app->add_option("--region-im-max", o.im_max);
}

void add_ml(CLI::App* app, Options& o) {
    app->add_option("--contour", o.contour, "contour vertices, e.g. 0.5+0.5i,0.5-30i,20.1+0.5i");
    app->add_option("--nodes", o.nodes, "Gauss-Legendre nodes per contour segment")->check(CLI::PositiveNumber);
    app->add_option("--cache", o.cache, "expansion cache (read if it exists)");
}

void add_mask(CLI::App* app, Options& o) {
    app->add_flag("--ml", o.ml, "evaluate S from the Mittag-Leffler expansion");
    app->add_option("--exclude-pole", o.exclude, "drop pole K (1-based, by increasing width) from the expansion");
    app->add_flag("--exclude-all-poles", o.exclude_all, "keep only the contour background");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Jost-matrix scattering: spectra, cross sections, residues and Argand analysis"};
    app.require_subcommand(1);
    Options o;

    auto* spectrum = app.add_subcommand("spectrum", "bound states and resonances with partial widths");
    add_common(spectrum, o);

    auto* xsec = app.add_subcommand("xsec", "partial cross sections on an energy grid");
    add_common(xsec, o);
    add_ml(xsec, o);
    add_mask(xsec, o);
    xsec->add_option("--grid", o.grid, "A:B:STEP (default 0.2:20:0.02)");
    xsec->add_option("--transitions", o.transitions, "comma list of FROM-TO, e.g. 1-1,1-2 (default all FROM <= TO)");
    xsec->add_option("--momentum-power", o.momentum_power, "sigma = pi / k^p |delta - S|^2 (default p = 1)");

    auto* residues = app.add_subcommand("residues", "S-matrix residues at the enclosed resonance poles");
    add_common(residues, o);
    add_ml(residues, o);
    residues->add_option("--pole", o.pole, "only these poles (1-based)");

    auto* argand = app.add_subcommand("argand", "Argand trajectory of one S-matrix element and its arcs");
    add_common(argand, o);
    add_ml(argand, o);
    add_mask(argand, o);
    argand->add_option("--grid", o.grid, "A:B:STEP (default 0.5:20:0.05, or 0.6:19.6:0.05 from the expansion)");
    argand->add_option("--element", o.element, "ROW,COL, 1-based (default 1,1)");
    argand->add_option("--min-run", o.min_run, "shortest run of equal turns reported as an arc")->check(CLI::PositiveNumber);

    auto* cache = app.add_subcommand("ml-cache", "compute and store the Mittag-Leffler expansion");
    add_common(cache, o);
    add_ml(cache, o);

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int const code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*spectrum) return cmd_spectrum(o);
        if (*xsec) return cmd_xsec(o);
        if (*residues) return cmd_residues(o);
        if (*argand) return cmd_argand(o);
        if (*cache) return cmd_ml_cache(o);
    } catch (validation_error const& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (io_error const& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (jostscat::error const& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    } catch (std::exception const& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
