#pragma once

// N-channel problem definition: reduced masses, thresholds, an analytic
// potential matrix U(r) = sum_t C_t r^p_t exp(-a_t r), and the channel momenta
// on a chosen Riemann sheet.

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jostscat/error.hpp"
#include "jostscat/specfun.hpp"

namespace jostscat {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

struct PotentialTerm {
    RMatrix coefficient;  // symmetric, energy units
    int power = 0;
    double decay = 1.0;   // inverse length, > 0
};

class ChannelModel {
  public:
    ChannelModel(std::vector<double> reduced_masses, std::vector<double> thresholds,
                 std::vector<PotentialTerm> terms, RiccatiOrder ell = RiccatiOrder{0}, double hbar = 1.0)
        : masses_(std::move(reduced_masses)), thresholds_(std::move(thresholds)),
          terms_(std::move(terms)), ell_(ell), hbar_(hbar) {
        std::size_t const n = masses_.size();
        if (n == 0) throw validation_error("model needs at least one channel");
        if (thresholds_.size() != n)
            throw validation_error("model: thresholds and masses differ in length");
        if (!(hbar_ > 0.0)) throw validation_error("model: hbar must be positive");
        for (double m : masses_)
            if (!(m > 0.0)) throw validation_error("model: reduced masses must be positive");
        if (!std::is_sorted(thresholds_.begin(), thresholds_.end()))
            throw validation_error("model: thresholds must be non-decreasing");
        for (auto const& t : terms_) {
            if (t.coefficient.rows() != static_cast<Eigen::Index>(n) ||
                t.coefficient.cols() != static_cast<Eigen::Index>(n))
                throw validation_error("model: potential coefficient has wrong shape");
            if (!(t.decay > 0.0)) throw validation_error("model: decay must be positive");
            if (t.power < 0) throw validation_error("model: power must be non-negative");
            if ((t.coefficient - t.coefficient.transpose()).cwiseAbs().maxCoeff() >
                1e-12 * (1.0 + t.coefficient.cwiseAbs().maxCoeff()))
                throw validation_error("model: potential coefficient must be symmetric");
        }
        scale_.resize(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) scale_[static_cast<Eigen::Index>(i)] = 2.0 * masses_[i] / (hbar_ * hbar_);
    }

    int n_channels() const { return static_cast<int>(masses_.size()); }
    std::vector<double> const& reduced_masses() const { return masses_; }
    std::vector<double> const& thresholds() const { return thresholds_; }
    std::vector<PotentialTerm> const& terms() const { return terms_; }
    RiccatiOrder ell() const { return ell_; }
    double hbar() const { return hbar_; }
    // 2 mu_n / hbar^2 per channel
    Eigen::VectorXd const& momentum_scale() const { return scale_; }

    bool is_free() const {
        return std::all_of(terms_.begin(), terms_.end(),
                           [](PotentialTerm const& t) { return t.coefficient.isZero(0.0); });
    }

  private:
    std::vector<double> masses_;
    std::vector<double> thresholds_;
    std::vector<PotentialTerm> terms_;
    RiccatiOrder ell_;
    double hbar_;
    Eigen::VectorXd scale_;
};

// Sign of Im k_n: physical (+) or unphysical (-).
enum class Sheet { physical, unphysical };

struct SheetSelector {
    std::vector<Sheet> signs;

    static SheetSelector physical(int n) { return {std::vector<Sheet>(static_cast<std::size_t>(n), Sheet::physical)}; }
    static SheetSelector unphysical(int n) { return {std::vector<Sheet>(static_cast<std::size_t>(n), Sheet::unphysical)}; }

    // sheet reached by continuing from the upper rim of the real axis
    // across the cuts: physical above the axis, unphysical below it
    static SheetSelector by_half_plane(int n, cplx energy) {
        return energy.imag() < 0.0 ? unphysical(n) : physical(n);
    }

    std::string label() const {
        std::string s = "(";
        for (std::size_t i = 0; i < signs.size(); ++i) {
            if (i) s += ",";
            s += signs[i] == Sheet::physical ? "+" : "-";
        }
        return s + ")";
    }

    friend bool operator==(SheetSelector const&, SheetSelector const&) = default;
};

struct EnergyPoint {
    cplx energy;
    SheetSelector sheet;
};

// k_n = sqrt(2 mu_n/hbar^2 (E - E_n)) with sign(Im k_n) taken from the sheet.
// Real energies above a threshold keep the positive root (the rim value).
inline CVector channel_momenta(ChannelModel const& model, EnergyPoint const& point) {
    int const n = model.n_channels();
    if (static_cast<int>(point.sheet.signs.size()) != n)
        throw validation_error("sheet selector length does not match the channel count");
    CVector k(n);
    for (int i = 0; i < n; ++i) {
        cplx const de = point.energy - model.thresholds()[static_cast<std::size_t>(i)];
        if (de == cplx{0.0})
            throw branch_point_error("energy coincides with threshold of channel " + std::to_string(i + 1));
        // normalise signed zeros so the branch does not depend on -0.0
        cplx const arg{de.real(), de.imag() == 0.0 ? 0.0 : de.imag()};
        cplx q = std::sqrt(model.momentum_scale()[i] * arg);
        bool const want_positive = point.sheet.signs[static_cast<std::size_t>(i)] == Sheet::physical;
        if (q.imag() != 0.0 && (q.imag() > 0.0) != want_positive) q = -q;
        k[i] = q;
    }
    return k;
}

// U(r) = sum_t C_t r^p_t exp(-a_t r)
inline CMatrix interaction_matrix(ChannelModel const& model, cplx r) {
    int const n = model.n_channels();
    CMatrix u = CMatrix::Zero(n, n);
    for (auto const& t : model.terms()) {
        cplx const radial = (t.power == 0 ? cplx{1.0} : std::pow(r, t.power)) * std::exp(-t.decay * r);
        u += t.coefficient.cast<cplx>() * radial;
    }
    return u;
}

// V_{nn'}(r) = (2 mu_n / hbar^2) U_{nn'}(r); row-scaled, so non-symmetric for unequal masses.
inline CMatrix potential_matrix(ChannelModel const& model, cplx r) {
    CMatrix v = interaction_matrix(model, r);
    for (int i = 0; i < model.n_channels(); ++i) v.row(i) *= model.momentum_scale()[i];
    return v;
}

// Two-channel benchmark: U = [[-1, -7.5], [-7.5, 7.5]] r^2 e^{-r}, thresholds 0 and 0.1.
inline ChannelModel noro_taylor() {
    RMatrix c(2, 2);
    c << -1.0, -7.5, -7.5, 7.5;
    return ChannelModel({1.0, 1.0}, {0.0, 0.1}, {PotentialTerm{c, 2, 1.0}}, RiccatiOrder{0}, 1.0);
}

// Same kinematics as noro_taylor() but V = 0.
inline ChannelModel free_model(int n_channels = 2) {
    std::vector<double> masses(static_cast<std::size_t>(n_channels), 1.0);
    std::vector<double> thresholds(static_cast<std::size_t>(n_channels), 0.0);
    for (int i = 0; i < n_channels; ++i) thresholds[static_cast<std::size_t>(i)] = 0.1 * i;
    return ChannelModel(masses, thresholds, {}, RiccatiOrder{0}, 1.0);
}

} // namespace jostscat
