#pragma once

// JSON model files:
//   {"n_channels": 2, "masses": [1, 1], "thresholds": [0, 0.1], "hbar": 1, "ell": 0,
//    "terms": [{"coeff": [[-1, -7.5], [-7.5, 7.5]], "power": 2, "decay": 1}]}
// "coeff" may also be a flat row-major list of n_channels^2 numbers.

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "jostscat/error.hpp"
#include "jostscat/model.hpp"

namespace jostscat {

using json = nlohmann::json;

namespace detail {

inline RMatrix coeff_from_json(json const& j, int n) {
    RMatrix c(n, n);
    if (!j.is_array()) throw validation_error("model: coeff must be an array");
    if (j.size() == static_cast<std::size_t>(n) && j[0].is_array()) {
        for (int r = 0; r < n; ++r) {
            auto const& row = j[static_cast<std::size_t>(r)];
            if (!row.is_array() || row.size() != static_cast<std::size_t>(n))
                throw validation_error("model: coeff row " + std::to_string(r) + " has wrong length");
            for (int col = 0; col < n; ++col) c(r, col) = row[static_cast<std::size_t>(col)].get<double>();
        }
        return c;
    }
    if (j.size() != static_cast<std::size_t>(n * n))
        throw validation_error("model: flat coeff needs n_channels^2 entries");
    for (int r = 0; r < n; ++r)
        for (int col = 0; col < n; ++col) c(r, col) = j[static_cast<std::size_t>(r * n + col)].get<double>();
    return c;
}

} // namespace detail

inline ChannelModel model_from_json(json const& j) {
    try {
        int const n = j.at("n_channels").get<int>();
        if (n < 1) throw validation_error("model: n_channels must be positive");
        auto masses = j.at("masses").get<std::vector<double>>();
        auto thresholds = j.at("thresholds").get<std::vector<double>>();
        if (masses.size() != static_cast<std::size_t>(n) || thresholds.size() != static_cast<std::size_t>(n))
            throw validation_error("model: masses and thresholds must have n_channels entries");
        double const hbar = j.value("hbar", 1.0);
        int const ell = j.value("ell", 0);
        std::vector<PotentialTerm> terms;
        for (auto const& t : j.value("terms", json::array()))
            terms.push_back({detail::coeff_from_json(t.at("coeff"), n), t.at("power").get<int>(), t.at("decay").get<double>()});
        return ChannelModel(std::move(masses), std::move(thresholds), std::move(terms), RiccatiOrder{ell}, hbar);
    } catch (json::exception const& e) {
        throw validation_error(std::string("model file: ") + e.what());
    } catch (domain_error const& e) {
        throw validation_error(std::string("model file: ") + e.what());
    }
}

inline json model_to_json(ChannelModel const& m) {
    json terms = json::array();
    for (auto const& t : m.terms()) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < t.coefficient.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < t.coefficient.cols(); ++c) row.push_back(t.coefficient(r, c));
            rows.push_back(row);
        }
        terms.push_back({{"coeff", rows}, {"power", t.power}, {"decay", t.decay}});
    }
    return {{"n_channels", m.n_channels()}, {"masses", m.reduced_masses()}, {"thresholds", m.thresholds()},
            {"hbar", m.hbar()},             {"ell", m.ell().value()},          {"terms", terms}};
}

inline json read_json_file(std::string const& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (json::exception const& e) {
        throw validation_error(path + ": " + e.what());
    }
}

inline void write_text_file(std::string const& path, std::string const& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path);
    out << text;
    if (!out) throw io_error("write failed for " + path);
}

inline ChannelModel load_model(std::string const& path) { return model_from_json(read_json_file(path)); }

} // namespace jostscat
