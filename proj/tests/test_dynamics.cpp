#include "ssl/dynamics.hpp"
#include "ssl/norms.hpp"

#include <gtest/gtest.h>

using namespace ssl;

namespace {

CVec gaussian_flow(const Vec& r, double t) {
    // e^{it Delta} e^{-r^2/2} = (1 + 2it)^{-3/2} e^{-r^2 / (2 (1 + 2it))}
    const cplx s(1.0, 2.0 * t);
    CVec out(r.size());
    for (int j = 0; j < r.size(); ++j) out[j] = std::pow(s, -1.5) * std::exp(-r[j] * r[j] / (2.0 * s));
    return out;
}

double sup(const CVec& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Dynamics, FreeFlowMatchesGaussianSolution) {
    const GridPtr g = make_grid(40.0, 2048, 0);
    const Vec r = g->nodes;
    const SectorField f0 = real_field(g, Vec((-0.5 * r.array().square()).exp().matrix()));
    for (double t : {0.1, 0.5, 1.0}) {
        const SectorField ft = free_flow(f0, t);
        EXPECT_LT(sup(ft.values - gaussian_flow(r, t)), 1e-9) << t;
    }
}

TEST(Dynamics, SmallDataConservesMassWithoutSponge) {
    const GridPtr g = make_grid(40.0, 1024, 0);
    const Vec r = g->nodes;
    const SectorField f0 = real_field(g, Vec(0.3 * (-0.5 * r.array().square()).exp().matrix()));
    EvolveOptions opt;
    opt.sponge = false;
    opt.keep_states = false;
    const Trajectory tr = evolve_nls(f0, 1.0, 1e-3, opt);
    ASSERT_FALSE(tr.ledger.empty());
    EXPECT_EQ(tr.classification, "completed");
    const double m0 = tr.ledger.front().mass;
    for (const auto& row : tr.ledger) EXPECT_NEAR(row.mass, m0, 1e-11 * m0);
    EXPECT_NEAR(tr.ledger.back().energy, tr.ledger.front().energy, 1e-5 * std::abs(tr.ledger.front().energy));
}

TEST(Dynamics, SolitonRotatesOverShortTimes) {
    const GridPtr g = make_grid(30.0, 1024, 0);
    const GroundState gs = solve_ground_state(1.0, g);
    EvolveOptions opt;
    opt.sponge = false;
    opt.adaptive = false;
    const double t = 0.2;
    const Trajectory tr = evolve_nls(gs.phi, t, 5e-4, opt);
    const CVec expected = std::exp(kI * t) * gs.phi.values;
    EXPECT_LT(sup(tr.states.back().values - expected) / sup(gs.phi.values), 1e-4);
}

TEST(Dynamics, StrangSecondOrder) {
    const GridPtr g = make_grid(30.0, 512, 0);
    const Vec r = g->nodes;
    const SectorField f0 = real_field(g, Vec(1.5 * (-0.5 * r.array().square()).exp().matrix()));
    EvolveOptions opt;
    opt.sponge = false;
    opt.adaptive = false;
    auto end = [&](double dt) { return evolve_nls(f0, 0.2, dt, opt).states.back().values; };
    const CVec ref = end(1.25e-4);
    const double e1 = sup(end(4e-3) - ref);
    const double e2 = sup(end(2e-3) - ref);
    const double e3 = sup(end(1e-3) - ref);
    EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.15);
    EXPECT_NEAR(std::log2(e2 / e3), 2.0, 0.15);
}

TEST(Dynamics, NonlinearityAntiSymmetry) {
    // for physical R and W, sigma_2 conj(N) = -N
    const GridPtr g = make_grid(10.0, 64, 0);
    const Spinor rr = Spinor::physical(g, CVec::Random(64));
    const Spinor ww = Spinor::physical(g, CVec::Random(64));
    const Spinor n = nonlinearity_N(rr, ww);
    const Spinor s = sigma2_conj(n);
    EXPECT_LT(sup(s.upper.values + n.upper.values), 1e-14);
    EXPECT_LT(sup(s.lower.values + n.lower.values), 1e-14);
    // first component against the closed form
    const CVec& r = rr.upper.values;
    const CVec& w = ww.upper.values;
    const CVec n1 = -(r.cwiseAbs2().cwiseProduct(r) + r.cwiseProduct(r).cwiseProduct(w.conjugate()) +
                      2.0 * r.cwiseAbs2().cwiseProduct(w));
    EXPECT_LT(sup(n.upper.values - n1), 1e-14);
}

TEST(Dynamics, AccumulatorExactForLinearForcing) {
    // G(s) = (1 + s) m with m one sine mode: J = c int_0^T e^{i s w} (1 + s) ds
    const GridPtr g = make_grid(10.0, 128, 0);
    const SineTransform st(*g);
    const int k = 9;
    Vec a = Vec::Zero(128);
    a[k] = 1.0;
    const CVec m = from_u(*g, st.synthesize(a)).cast<cplx>();
    ScatteringAccumulator acc(g);
    const std::vector<double> ts{0.0, 0.13, 0.2, 0.41, 0.5, 0.77};
    for (size_t i = 0; i + 1 < ts.size(); ++i) {
        acc.add_step(ts[i], ts[i + 1], (1.0 + ts[i]) * m, (1.0 + ts[i + 1]) * m);
        if (i == 1) acc.mark(ts[i + 1]);
    }
    acc.mark(ts.back());
    const double w = st.stencil_symbol()[k];
    const double t = ts.back();
    const cplx e = std::exp(kI * w * t);
    const cplx i0 = (e - 1.0) / (kI * w);
    const cplx i1 = t * e / (kI * w) - (e - 1.0) / (kI * w * kI * w);
    const cplx jk = i0 + i1;
    const SectorField prof = acc.free_profile(SectorField(g));
    CVec c = st.analyze(to_u(*g, prof.values));
    EXPECT_NEAR(std::abs(c[k] - (-kI * jk)), 0.0, 1e-12);
    c[k] = 0.0;
    EXPECT_LT(sup(c), 1e-12);
    const auto rem = acc.remainders();
    ASSERT_EQ(rem.size(), 2u);
    EXPECT_GT(rem[0].second, 0.0);
    EXPECT_LT(rem[1].second, 1e-14);
}

TEST(Dynamics, StepperKeepsSolitonFixed) {
    const GridPtr g = make_grid(25.0, 256, 0);
    ModulationOptions opt;
    opt.sponge = false;
    ModulationStepper stepper(g, 1.0, opt);
    ModulationState s = stepper.initial(Spinor::physical(g, CVec::Zero(256)), {});
    for (int i = 0; i < 20; ++i) stepper.step(s);
    EXPECT_NEAR(s.alpha, 1.0, 1e-12);
    EXPECT_NEAR(s.gamma, 0.0, 1e-12);
    EXPECT_LT(s.y.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(s.theta, 20 * opt.dt, 1e-12);
}

TEST(Dynamics, SpongeProfile) {
    const GridPtr g = make_grid(20.0, 200, 0);
    const Vec s = sponge_profile(*g, {});
    EXPECT_EQ(s[0], 0.0);
    EXPECT_EQ(s[160], 0.0);  // r = 16.1 < r_s = 17
    EXPECT_NEAR(s[199], 4.0, 1e-12);
}
