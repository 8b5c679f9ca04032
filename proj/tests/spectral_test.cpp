#include <gtest/gtest.h>

#include <cmath>

#include "jostscat/spectral.hpp"
#include "shooting_oracle.hpp"

using namespace jostscat;

namespace {

ChannelModel single_well(double depth, double decay) {
    RMatrix c(1, 1);
    c << depth;
    return ChannelModel({1.0}, {0.0}, {{c, 0, decay}});
}

} // namespace

TEST(Spectrum, FreeModelIsEmpty) {
    auto const r = find_spectrum(free_model());
    EXPECT_TRUE(r.bound.empty());
    EXPECT_TRUE(r.resonances.empty());
    EXPECT_TRUE(r.failures.empty());
}

TEST(Spectrum, ResonanceRegionMustBeBelowAxis) {
    SpectrumSearch s;
    s.resonance_region = EnergyRegion{0.5, 9.0, -1.0, 0.0};
    EXPECT_THROW(find_spectrum(noro_taylor(), s), validation_error);
    EXPECT_THROW((EnergyRegion{1.0, 1.0, 0.0, 0.0}.validate()), validation_error);
}

TEST(Refine, BoundStateFromSeed) {
    auto const sp = refine_zero(noro_taylor(), -2.31, SheetSelector::physical(2), 0.0);
    EXPECT_NEAR(sp.energy.real(), -2.314390558, 1e-8);
    EXPECT_EQ(sp.energy.imag(), 0.0);
    EXPECT_EQ(sp.kind, SpectralKind::bound);
    EXPECT_GT(std::abs(sp.det_derivative), 1e-6);
}

TEST(Refine, NarrowResonanceFromSeed) {
    auto const sp = refine_zero(noro_taylor(), cplx{4.77, -0.001}, SheetSelector::unphysical(2));
    EXPECT_LT(std::abs(sp.energy - cplx{4.768196819, -0.000710096073}), 1e-8);
    EXPECT_EQ(sp.kind, SpectralKind::resonance);
    EXPECT_GT(std::abs(sp.det_derivative), 1e-6);
}

TEST(Refine, PoleDoesNotDependOnRotationAngle) {
    auto const m = noro_taylor();
    auto const sheet = SheetSelector::unphysical(2);
    cplx const seed{7.2, -0.8};
    auto const a = refine_zero(m, seed, sheet, 0.2 * pi, {}, precise_options());
    auto const b = refine_zero(m, seed, sheet, 0.3 * pi, {}, precise_options());
    EXPECT_LT(std::abs(a.energy - b.energy), 1e-8);
}

TEST(Refine, VanishingDerivativeIsReported) {
    RefineOptions ro;
    ro.min_derivative = 1e6;
    EXPECT_THROW(refine_zero(noro_taylor(), -2.3, SheetSelector::physical(2), 0.0, ro), convergence_error);
    EXPECT_THROW(refine_zero(free_model(), cplx{2.0, -0.5}, SheetSelector::unphysical(2)), convergence_error);
}

TEST(Refine, FixedUnreachableAngleIsReported) {
    EXPECT_THROW(refine_zero(noro_taylor(), cplx{7.1, -13.0}, SheetSelector::unphysical(2), 0.0), unreachable_error);
}

TEST(Refine, BelowThresholdResonanceByContinuation) {
    // the string continues past the lowest threshold deeper in the lower half plane
    auto const sp = refine_zero(noro_taylor(), cplx{-1.66, -27.23}, SheetSelector::unphysical(2));
    EXPECT_LT(std::abs(sp.energy - cplx{-1.657821, -27.2301515}), 1e-5);
}

TEST(Classify, Kinds) {
    auto const m = noro_taylor();
    EXPECT_EQ(classify(m, -1.0, SheetSelector::physical(2)), SpectralKind::bound);
    EXPECT_EQ(classify(m, cplx{3.0, -1.0}, SheetSelector::unphysical(2)), SpectralKind::resonance);
    EXPECT_EQ(classify(m, -1.0, SheetSelector::unphysical(2)), SpectralKind::virtual_state);
    EXPECT_EQ(classify(m, cplx{3.0, 1.0}, SheetSelector::physical(2)), SpectralKind::other);
    EXPECT_STREQ(to_string(SpectralKind::resonance), "resonance");
}

TEST(Widths, SumToTotalWidth) {
    auto const m = noro_taylor();
    auto const pole = partial_widths(m, cplx{7.24120036326, -0.75595610453}, SheetSelector::unphysical(2));
    EXPECT_NEAR(pole.Gamma, 1.51191220906, 1e-10);
    EXPECT_NEAR(pole.partial_widths[0] + pole.partial_widths[1], pole.Gamma, 1e-12 * pole.Gamma);
    EXPECT_LT(std::abs(pole.energy() - cplx{7.24120036326, -0.75595610453}), 1e-14);
    EXPECT_THROW(partial_widths(m, cplx{7.0, 0.1}, SheetSelector::unphysical(2)), validation_error);
}

TEST(Widths, ChannelExchangeSymmetryGivesEqualWidths) {
    RMatrix c(2, 2);
    c << -1.0, -7.5, -7.5, -1.0;
    ChannelModel const m({1.0, 1.0}, {0.0, 0.0}, {{c, 2, 1.0}});
    auto const sheet = SheetSelector::unphysical(2);
    auto const sp = refine_zero(m, cplx{3.09, -0.024}, sheet);
    auto const pole = partial_widths(m, sp.energy, sheet);
    EXPECT_NEAR(pole.partial_widths[0], pole.partial_widths[1], 1e-6 * pole.Gamma);
}

TEST(Adjugate, InverseTimesDeterminant) {
    CMatrix m(3, 3);
    m << 1, 2, cplx{0, 1}, 0, 3, 1, 4, cplx{1, -1}, 2;
    CMatrix const expected = m.inverse() * m.determinant();
    EXPECT_LT((adjugate(m) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Scan, CombinedMeasureKeepsMinimaOfBoth) {
    auto const m = noro_taylor();
    EnergyRegion const region{-3.0, 0.0, -1e-6, 1e-6};
    auto const sheet = SheetSelector::physical(2);
    auto const raw = scan_minima(m, region, {60, 3}, sheet, 0.0, {}, 1, ScanMeasure::raw);
    auto const nrm = scan_minima(m, region, {60, 3}, sheet, 0.0, {}, 1, ScanMeasure::normalized);
    auto const both = scan_minima(m, region, {60, 3}, sheet, 0.0, {}, 1, ScanMeasure::combined);
    for (auto const* part : {&raw, &nrm})
        for (cplx c : part->candidates)
            EXPECT_NE(std::find(both.candidates.begin(), both.candidates.end(), c), both.candidates.end());
    EXPECT_TRUE(both.failures.empty());
}

TEST(Spectrum, SingleChannelWellMatchesShootingOracle) {
    for (double depth : {-6.0, -20.0}) {
        auto const m = single_well(depth, 1.0);
        SpectrumSearch s;
        s.resonance_region.reset();
        s.bound_region = EnergyRegion{-20.0, 0.0, -1e-6, 1e-6};
        s.bound_grid = {200, 3};
        auto const found = find_spectrum(m, s);
        auto const expected = oracle::bound_states({depth, 1.0}, -20.0, -1e-3);
        ASSERT_EQ(found.bound.size(), expected.size()) << "depth " << depth;
        for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(found.bound[i].energy.real(), expected[i], 1e-6);
    }
}

TEST(Spectrum, ParallelScanMatchesSerial) {
    auto const m = single_well(-6.0, 1.0);
    SpectrumSearch s;
    s.resonance_region.reset();
    auto const a = find_spectrum(m, s);
    s.jobs = 3;
    auto const b = find_spectrum(m, s);
    ASSERT_EQ(a.bound.size(), b.bound.size());
    for (std::size_t i = 0; i < a.bound.size(); ++i) EXPECT_EQ(a.bound[i].energy, b.bound[i].energy);
}
