#include "ssl/soliton_frame.hpp"

#include <gtest/gtest.h>

using namespace ssl;

namespace {
GridPtr grid() {
    static const GridPtr g = make_grid(25.0, 1024, 0);
    return g;
}
double mass_at(double alpha) { return conserved_functionals(cached_ground_state(alpha, grid())->phi).mass; }
}  // namespace

TEST(SolitonFrame, RadialBlockFromMassDerivative) {
    // <d_a W, d*_a W> = -dM/dalpha and <d_G W, d*_G W> = dM/dalpha for real W, with M = int phi^2
    const TangentFrame f = tangent_frame({}, grid());
    const double d = 1e-3;
    const double dm = (mass_at(1.0 + d) - mass_at(1.0 - d)) / (2.0 * d);
    EXPECT_NEAR(f.pairing(0, 0), -dm, 1e-5 * std::abs(dm));
    EXPECT_NEAR(f.pairing(1, 1), dm, 1e-5 * std::abs(dm));
    EXPECT_NEAR(f.pairing(0, 1), 0.0, 1e-10);
    EXPECT_NEAR(f.pairing(1, 0), 0.0, 1e-10);
    EXPECT_NEAR(f.mass_w, 2.0 * mass_at(1.0), 1e-10);
}

TEST(SolitonFrame, SectorsDecouple) {
    const TangentFrame f = tangent_frame({}, grid());
    for (int a = 0; a < 2; ++a)
        for (int b = 2; b < kFrameSize; ++b) {
            EXPECT_EQ(f.pairing(a, b), 0.0);
            EXPECT_EQ(f.pairing(b, a), 0.0);
        }
    // different axes pair to zero
    EXPECT_EQ(f.pairing(2, 3), 0.0);
    EXPECT_EQ(f.pairing(5, 7), 0.0);
}

TEST(SolitonFrame, TangentsArePhysical) {
    const TangentFrame f = tangent_frame({1.0, 0.4, {}, {}}, grid());
    for (const auto& t : f.tangents) EXPECT_LT(t.field.symmetry_defect(), 1e-14);
}

TEST(SolitonFrame, GammaTangentIsPhaseDerivative) {
    const double d = 1e-6;
    const Spinor plus = build_soliton({1.0, 0.2 + d, {}, {}}, grid());
    const Spinor minus = build_soliton({1.0, 0.2 - d, {}, {}}, grid());
    const TangentFrame f = tangent_frame({1.0, 0.2, {}, {}}, grid());
    const CVec fd = (plus.upper.values - minus.upper.values) / (2.0 * d);
    EXPECT_LT((fd - f.tangents[1].field.upper.values).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(SolitonFrame, NearestSolitonRecoversParameters) {
    const SolitonParams truth{1.03, 0.7, {}, {}};
    const Spinor w = build_soliton(truth, grid());
    const Projection p = nearest_soliton(w, {1.0, 0.6, {}, {}});
    EXPECT_NEAR(p.params.alpha, 1.03, 1e-9);
    EXPECT_NEAR(p.params.gamma, 0.7, 1e-9);
    EXPECT_LT(std::abs(p.orthogonality[0]) + std::abs(p.orthogonality[1]), 1e-9);
}

TEST(SolitonFrame, NearestSolitonOrthogonalRemainder) {
    const Spinor w = build_soliton({}, grid());
    const Vec r = grid()->nodes;
    CVec bump = (0.01 * (-0.5 * (r.array() - 2.0).square()).exp()).matrix().cast<cplx>() * cplx(1.0, 0.5);
    const Spinor psi = w + Spinor::physical(grid(), bump);
    const Projection p = nearest_soliton(psi, {});
    EXPECT_LT(std::abs(p.orthogonality[0]), 1e-9);
    EXPECT_LT(std::abs(p.orthogonality[1]), 1e-9);
    const TangentFrame f = tangent_frame(p.params, grid());
    EXPECT_LT(std::abs(pairing(p.remainder, f.cotangents[0].field)), 1e-9);
}

TEST(SolitonFrame, WrapPhase) {
    EXPECT_NEAR(wrap_phase(1.5 * kPi), -0.5 * kPi, 1e-15);
    EXPECT_NEAR(wrap_phase(kPi), kPi, 1e-15);
    EXPECT_NEAR(wrap_phase(-kPi), kPi, 1e-15);
    EXPECT_NEAR(wrap_phase(7.0 * kPi + 0.1), -kPi + 0.1, 1e-12);
    EXPECT_EQ(wrap_phase(0.3), 0.3);
}

TEST(SolitonFrame, BoostMomentum) {
    // psi = phi (1 + i eps z): Im(conj(psi) d_z psi) = eps phi^2 exactly, so |P_3| = eps M
    const double eps = 1e-3;
    const GridPtr g0 = grid();
    const GridPtr g1 = with_sector(g0, 1);
    const Vec phi = cached_ground_state(1.0, g0)->phi.values.real();
    AxialField f{Spinor::physical(g0, phi.cast<cplx>()),
                 Spinor::physical(g1, (kI * eps * g0->nodes.cwiseProduct(phi)).eval())};
    EXPECT_NEAR(std::abs(axial_momentum(f)), eps * mass_at(1.0), 1e-8 * eps * mass_at(1.0));
    AxialField still{f.monopole, Spinor::physical(g1, CVec::Zero(g0->n))};
    EXPECT_EQ(axial_momentum(still), 0.0);
}

TEST(SolitonFrame, ParamsJsonRoundTrip) {
    SolitonParams p{1.5, -0.25, {0.1, 0.0, 0.0}, {0.0, 0.0, 2.0}};
    const SolitonParams q = soliton_params_from_json(to_json(p));
    EXPECT_EQ(q.alpha, p.alpha);
    EXPECT_EQ(q.gamma, p.gamma);
    EXPECT_EQ(q.v, p.v);
    EXPECT_EQ(q.d, p.d);
    EXPECT_FALSE(q.radial());
}
