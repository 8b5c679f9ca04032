#include <gtest/gtest.h>

#include <cmath>

#include "jostscat/odeint.hpp"

using namespace jostscat;

namespace {

Eigen::MatrixXcd scalar(cplx v) { return Eigen::MatrixXcd::Constant(1, 1, v); }

ComplexPath line(cplx a, cplx b) { return {{a, b}, 0.0}; }

} // namespace

TEST(Integrator, ZeroRightHandSideKeepsState) {
    Eigen::MatrixXcd y0(2, 3);
    y0 << 1, 2, cplx{0, 3}, 4, 5, 6;
    auto const res = integrate([](cplx, Eigen::MatrixXcd const& y) { return Eigen::MatrixXcd::Zero(y.rows(), y.cols()); },
                               line(0.0, 5.0), y0, {});
    EXPECT_EQ(res.state, y0);
}

TEST(Integrator, ExponentialGrowthOnRealSegment) {
    auto const res = integrate([](cplx, Eigen::MatrixXcd const& y) { return Eigen::MatrixXcd(I * y); }, line(0.0, 1.0),
                               scalar(1.0), {});
    EXPECT_LT(std::abs(res.state(0, 0) - std::exp(I)), 1e-9);
}

// dy/dr = 2 r y along 0 -> 1 + i gives exp((1+i)^2) = exp(2i)
TEST(Integrator, ComplexPathSegment) {
    auto const res = integrate([](cplx r, Eigen::MatrixXcd const& y) { return Eigen::MatrixXcd(2.0 * r * y); },
                               line(0.0, cplx{1.0, 1.0}), scalar(1.0), {});
    EXPECT_LT(std::abs(res.state(0, 0) - std::exp(2.0 * I)), 1e-9);
}

TEST(Integrator, PathIndependenceForAnalyticRhs) {
    OdeRhs const f = [](cplx r, Eigen::MatrixXcd const& y) { return Eigen::MatrixXcd(std::cos(r) * y); };
    cplx const end{3.0, 1.0};
    auto const direct = integrate(f, line(0.0, end), scalar(1.0), {});
    auto const bent = integrate(f, ComplexPath{{0.0, cplx{1.0, -1.0}, cplx{2.0, 2.0}, end}, 0.0}, scalar(1.0), {});
    EXPECT_LT(std::abs(direct.state(0, 0) - std::exp(std::sin(end))), 1e-8);
    EXPECT_LT(std::abs(direct.state(0, 0) - bent.state(0, 0)), 1e-8);
}

TEST(Integrator, Reversibility) {
    OdeRhs const f = [](cplx r, Eigen::MatrixXcd const& y) {
        Eigen::MatrixXcd a(2, 2);
        a << 0, 1, -1.0 - 0.1 * r, 0;
        return Eigen::MatrixXcd(a * y);
    };
    Eigen::MatrixXcd y0 = Eigen::MatrixXcd::Identity(2, 2);
    auto const fwd = integrate(f, line(0.5, 4.0), y0, {});
    auto const back = integrate(f, line(4.0, 0.5), fwd.state, {});
    EXPECT_LT((back.state - y0).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Integrator, TighterToleranceReducesError) {
    OdeRhs const f = [](cplx r, Eigen::MatrixXcd const& y) { return Eigen::MatrixXcd(-r * y); };
    cplx const exact = std::exp(-8.0);
    IntegratorConfig loose, tight;
    loose.abs_tol = loose.rel_tol = 1e-6;
    tight.abs_tol = tight.rel_tol = 1e-11;
    double const e_loose = std::abs(integrate(f, line(0.0, 4.0), scalar(1.0), loose).state(0, 0) - exact);
    auto const t = integrate(f, line(0.0, 4.0), scalar(1.0), tight);
    EXPECT_LT(std::abs(t.state(0, 0) - exact), e_loose);
    EXPECT_LT(std::abs(t.state(0, 0) - exact), 1e-10);
}

TEST(Integrator, ObserverSeesEveryVertex) {
    std::vector<cplx> seen;
    integrate([](cplx, Eigen::MatrixXcd const& y) { return Eigen::MatrixXcd(y); }, ComplexPath{{0.0, 1.0, 2.0}, 0.0},
              scalar(1.0), {}, [&](std::size_t, cplx r, Eigen::MatrixXcd const&) { seen.push_back(r); });
    ASSERT_EQ(seen.size(), 3u);
    EXPECT_EQ(seen[2], cplx{2.0});
}

TEST(Integrator, Validation) {
    OdeRhs const f = [](cplx, Eigen::MatrixXcd const& y) { return y; };
    EXPECT_THROW(integrate(f, ComplexPath{{1.0}, 0.0}, scalar(1.0), {}), validation_error);
    EXPECT_THROW(integrate(f, ComplexPath{{1.0, 1.0}, 0.0}, scalar(1.0), {}), validation_error);
    EXPECT_THROW(integrate(f, ComplexPath{{0.0, 1.0}, 2.0}, scalar(1.0), {}), validation_error);
    IntegratorConfig bad;
    bad.abs_tol = 0.0;
    EXPECT_THROW(integrate(f, line(0.0, 1.0), scalar(1.0), bad), validation_error);
}

TEST(Integrator, BlowUpUnderflowsStep) {
    // y' = y^2, y(0) = 1 is singular at r = 1
    OdeRhs const f = [](cplx, Eigen::MatrixXcd const& y) { return Eigen::MatrixXcd(y.cwiseProduct(y)); };
    EXPECT_THROW(integrate(f, line(0.0, 2.0), scalar(1.0), {}), convergence_error);
}

TEST(Integrator, StepBudget) {
    IntegratorConfig c;
    c.max_steps = 5;
    EXPECT_THROW(integrate([](cplx, Eigen::MatrixXcd const& y) { return Eigen::MatrixXcd(50.0 * I * y); }, line(0.0, 10.0),
                           scalar(1.0), c),
                 convergence_error);
}

TEST(Path, TwoSegmentGeometry) {
    auto const p = ComplexPath::two_segment(1e-4, 1.0, 30.0, 0.25 * pi);
    ASSERT_EQ(p.vertices.size(), 3u);
    EXPECT_LT(std::abs(p.vertices[2] - (1.0 + 29.0 * std::polar(1.0, 0.25 * pi))), 1e-13);
}
