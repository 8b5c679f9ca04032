#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/SVD>

#include "jostscat/jost.hpp"

using namespace jostscat;

namespace {

double rel_diff(CMatrix const& a, CMatrix const& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

EnergyPoint unphys(cplx e) { return {e, SheetSelector::unphysical(2)}; }
EnergyPoint phys(cplx e) { return {e, SheetSelector::physical(2)}; }

CVector null_vector(CMatrix const& m) {
    Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullV);
    return svd.matrixV().col(m.cols() - 1);
}

} // namespace

TEST(FreeModel, JostMatricesAreIdentity) {
    auto const m = free_model();
    for (cplx e : {cplx{0.5}, cplx{3.0}, cplx{2.0, -1.0}}) {
        auto const p = e.imag() < 0 ? unphys(e) : phys(e);
        auto const jm = jost_pair(m, p);
        EXPECT_LT((jm.f_in - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((jm.f_out - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
    }
    EXPECT_LT((s_matrix(m, 2.0).s - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(FreeModel, WavefunctionIsTwiceSine) {
    auto const m = free_model();
    CVector c = CVector::Zero(2);
    c[0] = 1.0;
    std::vector<double> grid{0.3, 0.9, 2.0, 5.0};
    CMatrix const u = wavefunction(m, phys(1.0), c, grid);
    double const k = std::sqrt(2.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_LT(std::abs(u(static_cast<Eigen::Index>(i), 0) - 2.0 * std::sin(k * grid[i])), 1e-10);
        EXPECT_LT(std::abs(u(static_cast<Eigen::Index>(i), 1)), 1e-12);
    }
}

TEST(Systems, ABRightHandSideMatchesProductFormula) {
    auto const m = noro_taylor();
    auto const p = phys(cplx{3.0, 0.2});
    CVector const k = channel_momenta(m, p);
    cplx const r{1.3, 0.0};
    CMatrix a(2, 2), b(2, 2);
    a << 1.0, cplx{0.2, 0.1}, -0.3, 2.0;
    b << cplx{0.0, 0.5}, 0.1, 0.7, -1.0;
    auto const d = rhs_ab(m, p, {a, b, r});
    CMatrix phi(2, 2);
    CVector jv(2), nv(2);
    for (int i = 0; i < 2; ++i) {
        jv[i] = std::sin(k[i] * r);
        nv[i] = -std::cos(k[i] * r);
        phi.row(i) = jv[i] * a.row(i) - nv[i] * b.row(i);
    }
    CMatrix const vphi = potential_matrix(m, r) * phi;
    for (int i = 0; i < 2; ++i) {
        EXPECT_LT((d.A.row(i) + nv[i] / k[i] * vphi.row(i)).cwiseAbs().maxCoeff(), 1e-13);
        EXPECT_LT((d.B.row(i) + jv[i] / k[i] * vphi.row(i)).cwiseAbs().maxCoeff(), 1e-13);
    }
}

// variation of parameters: h^- F_in' + h^+ F_out' = 0
TEST(Systems, FRightHandSideSatisfiesLagrangeCondition) {
    auto const m = noro_taylor();
    auto const p = unphys(cplx{7.2, -0.7});
    CVector const k = channel_momenta(m, p);
    cplx const r = 1.0 + 2.0 * std::polar(1.0, 0.2 * pi);
    CMatrix fi(2, 2), fo(2, 2);
    fi << 1.0, 0.3, cplx{0.1, 0.2}, 0.8;
    fo << 0.5, cplx{0.0, -1.0}, 0.2, 1.1;
    auto const d = rhs_f(m, p, {fi, fo, r});
    for (int i = 0; i < 2; ++i) {
        cplx const hm = riccati_h(HankelSign::minus, RiccatiOrder{0}, k[i] * r);
        cplx const hp = riccati_h(HankelSign::plus, RiccatiOrder{0}, k[i] * r);
        EXPECT_LT((hm * d.F_in.row(i) + hp * d.F_out.row(i)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Systems, ABAndFConversionsAreInverse) {
    CMatrix a = CMatrix::Random(2, 2), b = CMatrix::Random(2, 2);
    auto const back = f_to_ab(ab_to_f({a, b, 1.0}));
    EXPECT_LT((back.A - a).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((back.B - b).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Systems, ABAndFIntegrationsAgree) {
    auto const m = noro_taylor();
    auto const p = phys(2.0);
    CVector const k = channel_momenta(m, p);
    CMatrix ab0(2, 4);
    ab0 << 2.0 * CMatrix::Identity(2, 2), CMatrix::Zero(2, 2);
    CMatrix const f0 = detail::ab_block_to_f(ab0);
    IntegratorConfig c;
    c.abs_tol = c.rel_tol = 1e-12;
    ComplexPath const path{{1e-4, 3.0}, 0.0};
    auto const ab = integrate(ABSystem(m, k), path, ab0, c).state;
    auto const f = integrate(FSystem(m, k), path, f0, c).state;
    EXPECT_LT(rel_diff(detail::ab_block_to_f(ab), f), 1e-9);
}

TEST(Invariance, RotationAngle) {
    auto const m = noro_taylor();
    auto const opt = precise_options();
    auto const p = unphys(cplx{7.241200363, -0.7559561045});
    CMatrix const a = jost_matrices(m, p, 0.2 * pi, opt).f_in;
    CMatrix const b = jost_matrices(m, p, 0.3 * pi, opt).f_in;
    EXPECT_LT(rel_diff(a, b), 1e-8);
    auto const q = phys(3.0);
    EXPECT_LT(rel_diff(jost_matrices(m, q, 0.0, opt).f_in, jost_matrices(m, q, 0.15 * pi, opt).f_in), 1e-8);
}

TEST(Invariance, MatchingPoint) {
    auto const m = noro_taylor();
    auto opt = precise_options();
    auto const p = unphys(cplx{8.171216555, -3.254165855});
    CMatrix const a = jost_matrices(m, p, 0.25 * pi, opt).f_in;
    opt.geometry.b = 2.5;
    EXPECT_LT(rel_diff(jost_matrices(m, p, 0.25 * pi, opt).f_in, a), 1e-8);
}

TEST(Invariance, RayLength) {
    auto const m = noro_taylor();
    auto opt = precise_options();
    auto const p = phys(5.0);
    CMatrix const a = jost_matrices(m, p, 0.0, opt, JostTarget::both).f_in;
    opt.geometry.R = 45.0;
    auto const jm = jost_matrices(m, p, 0.0, opt, JostTarget::both);
    EXPECT_GE(jm.R, 45.0);
    EXPECT_LT(rel_diff(jm.f_in, a), 1e-8);
}

TEST(Invariance, NormalizationCancelsInS) {
    auto const m = noro_taylor();
    auto jm = jost_matrices(m, phys(6.0), 0.0, {}, JostTarget::both);
    CMatrix const s = s_from_jost(jm);
    CMatrix c(2, 2);
    c << 1.0, 0.4, cplx{0.0, 0.3}, 2.0;
    jm.f_in = jm.f_in * c;
    jm.f_out = jm.f_out * c;
    EXPECT_LT((s_from_jost(jm) - s).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SMatrix, FluxNormalizedIsUnitaryAndSymmetric) {
    auto const m = noro_taylor();
    for (double e = 0.15; e < 20.0; e += 1.37) {
        CMatrix const s = flux_normalized(m, s_matrix(m, e, precise_options()));
        EXPECT_LT((s.adjoint() * s - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8) << "E = " << e;
        EXPECT_LT(std::abs(s(0, 1) - s(1, 0)), 1e-8) << "E = " << e;
    }
}

TEST(SMatrix, UnequalMassesStillUnitary) {
    RMatrix c(2, 2);
    c << -2.0, 1.0, 1.0, -1.0;
    ChannelModel const m({0.5, 2.0}, {0.0, 0.3}, {{c, 1, 1.2}});
    CMatrix const s = flux_normalized(m, s_matrix(m, 2.0, precise_options()));
    EXPECT_LT((s.adjoint() * s - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT(std::abs(s(0, 1) - s(1, 0)), 1e-8);
}

TEST(SMatrix, RequiresOpenChannel) {
    EXPECT_THROW(s_matrix(noro_taylor(), -0.5), validation_error);
    EXPECT_THROW(s_matrix(noro_taylor(), 0.0), validation_error);
}

TEST(SMatrix, SingularAtBoundState) {
    auto const m = noro_taylor();
    EXPECT_THROW(s_from_jost(jost_pair(m, phys(-2.314390558))), convergence_error);
}

TEST(Spectrum, DeterminantVanishesAtBoundState) {
    auto const m = noro_taylor();
    double const at = std::abs(jost_matrices(m, phys(-2.314390558), 0.0).f_in.determinant());
    double const away = std::abs(jost_matrices(m, phys(-2.0), 0.0).f_in.determinant());
    EXPECT_LT(at, 1e-6 * away);
}

TEST(Spectrum, DeterminantVanishesAtNarrowResonance) {
    auto const m = noro_taylor();
    auto const p = unphys(cplx{4.768196819, -0.0007100960729});
    double const at = std::abs(jost_matrices(m, p, 0.1 * pi).f_in.determinant());
    double const away = std::abs(jost_matrices(m, unphys(cplx{4.7, -0.01}), 0.1 * pi).f_in.determinant());
    EXPECT_LT(at, 1e-5 * away);
}

TEST(Spectrum, BoundStateWavefunctionDecays) {
    auto const m = noro_taylor();
    auto const opt = precise_options();
    {
        auto const p = phys(-2.314390558);
        CVector const c = null_vector(jost_matrices(m, p, 0.0, opt).f_in);
        std::vector<double> grid;
        for (double r = 0.25; r <= 8.0; r += 0.25) grid.push_back(r);
        CMatrix const u = wavefunction(m, p, c, grid, 0.0, opt);
        EXPECT_LT(u.row(u.rows() - 1).cwiseAbs().maxCoeff(), 1e-3 * u.cwiseAbs().maxCoeff());
    }
    {
        // weakly bound: the tail falls off as exp(-kappa r) with the open-most channel's kappa
        double const e = -0.06525771133;
        auto const p = phys(e);
        CVector const c = null_vector(jost_matrices(m, p, 0.0, opt).f_in);
        CMatrix const u = wavefunction(m, p, c, {17.0, 19.0}, 0.0, opt);
        double const ratio = u.row(1).cwiseAbs().maxCoeff() / u.row(0).cwiseAbs().maxCoeff();
        EXPECT_NEAR(ratio, std::exp(-2.0 * std::sqrt(-2.0 * e)), 1e-2 * ratio);
    }
}

TEST(Reachability, IncomingMatrixNeedsRotationBelowAxis) {
    auto const m = noro_taylor();
    auto const p = unphys(cplx{7.0, -13.0});
    EXPECT_THROW(jost_matrices(m, p, 0.0), unreachable_error);
    EXPECT_THROW(jost_matrices(m, p, 0.2 * pi, {}, JostTarget::out), unreachable_error);
    EXPECT_NO_THROW(theta_for_in(m, p));
    EXPECT_THROW(jost_matrices(m, p, 0.6 * pi), validation_error);
}

TEST(Reachability, DeepPolesBeyondScheduleAreRejected) {
    // arg(E) close to -pi: the needed rotation exceeds the schedule
    EXPECT_THROW(theta_for_in(noro_taylor(), unphys(cplx{-50.0, -1.0})), unreachable_error);
}

TEST(CrossSection, ClosedEntranceChannel) {
    auto const m = noro_taylor();
    EXPECT_THROW(cross_section(m, 0.05, 1, 0), validation_error);
    EXPECT_THROW(cross_section(m, 1.0, 2, 0), validation_error);
    EXPECT_GE(cross_section(m, 0.05, 0, 0), 0.0);
}

TEST(CrossSection, PeakAtNarrowResonance) {
    auto const m = noro_taylor();
    double const on = cross_section(m, 4.768197, 1, 1);
    EXPECT_GT(on, cross_section(m, 4.76, 1, 1));
    EXPECT_GT(on, cross_section(m, 4.776, 1, 1));
}

TEST(CrossSection, MomentumPowerOption) {
    auto const m = noro_taylor();
    auto const s = s_matrix(m, 3.0);
    double const k = std::sqrt(6.0);
    double const s1 = cross_section_from(m, s, 0, 1);
    double const s2 = cross_section_from(m, s, 0, 1, {2});
    EXPECT_NEAR(s1 / s2, k, 1e-12);
}
