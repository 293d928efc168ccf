#include "ssl/linear_estimates.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <gtest/gtest.h>

#include <sstream>

using namespace ssl;

namespace {

double sup(const Spinor& s) { return std::max(s.upper.values.cwiseAbs().maxCoeff(), s.lower.values.cwiseAbs().maxCoeff()); }

struct Fixture {
    GridPtr grid = make_grid(20.0, 384, 0);
    HamiltonianOperator h = assemble_hamiltonian({}, grid);
    SpectralData sd = compute_sigma_eigenpair(h);
    ProjectionSuite ps = riesz_projections(sd, tangent_frame({}, grid));
    Spinor f = random_smooth_spinor(grid, 11);
};

const Fixture& fx() {
    static const Fixture f;
    return f;
}

}  // namespace

TEST(FreeResolvent, WavenumberBranches) {
    const double mu = 1.0;
    for (double lam : {1.5, 4.0, -2.5}) {
        const auto p = free_wavenumbers(mu, lam, Branch::plus);
        const auto m = free_wavenumbers(mu, lam, Branch::minus);
        const auto e = free_wavenumbers(mu, cplx(lam, 1e-12), Branch::none);
        for (int k = 0; k < 2; ++k) {
            EXPECT_NEAR(std::abs(p[k] - std::conj(m[k])), 0.0, 1e-15);
            EXPECT_NEAR(std::abs(p[k] - e[k]), 0.0, 1e-9);
        }
    }
    EXPECT_THROW(free_wavenumbers(mu, 2.0, Branch::none), ParameterError);
    const auto c = free_wavenumbers(mu, cplx(0.4, -3.0), Branch::none);
    EXPECT_GE(c[0].real(), 0.0);
    EXPECT_GE(c[1].real(), 0.0);
}

TEST(FreeResolvent, RadialKernelInGapClosedForm) {
    // both wavenumbers real: K = -+ (e^{-k |r-s|} - e^{-k (r+s)}) / (2 k r s)
    const double mu = 1.0, lam = 0.3;
    const double k1 = std::sqrt(mu + lam), k2 = std::sqrt(mu - lam);
    for (auto [r, s] : {std::pair{0.5, 2.0}, {3.0, 1.0}, {1.0, 1.0}}) {
        const auto k = free_kernel_radial(mu, lam, Branch::none, r, s);
        auto exact = [&](double kk) { return (std::exp(-kk * std::abs(r - s)) - std::exp(-kk * (r + s))) / (2.0 * kk * r * s); };
        EXPECT_NEAR(std::abs(k[0] + exact(k1)), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(k[1] - exact(k2)), 0.0, 1e-14);
    }
}

TEST(FreeResolvent, RadialKernelIsAngularAverage) {
    // K(r, s) = 2 pi int_{-1}^{1} G3(|r - s w|) dc, on the +i0 branch above the threshold
    using gl = boost::math::quadrature::gauss<double, 40>;
    const double mu = 1.0, lam = 2.7;
    for (auto [r, s] : {std::pair{0.5, 2.0}, {4.0, 1.5}}) {
        const auto k = free_kernel_radial(mu, lam, Branch::plus, r, s);
        for (int c = 0; c < 2; ++c) {
            auto re = [&](double x) { return free_kernel_3d(mu, lam, Branch::plus, std::sqrt(r * r + s * s - 2 * r * s * x))[c].real(); };
            auto im = [&](double x) { return free_kernel_3d(mu, lam, Branch::plus, std::sqrt(r * r + s * s - 2 * r * s * x))[c].imag(); };
            const cplx avg = 2.0 * kPi * cplx(gl::integrate(re, -1.0, 1.0), gl::integrate(im, -1.0, 1.0));
            EXPECT_NEAR(std::abs(k[c] - avg), 0.0, 1e-12 * std::abs(avg)) << r << " " << s;
        }
    }
}

TEST(Resolvent, ComplexPointConvergesToStencilSolve) {
    // Green-function resolvent against a dense solve with the stencil matrix of H;
    // the two discretizations agree at the stencil's order
    const cplx lambda(0.6, 0.8);
    auto gap = [&](int n) {
        const GridPtr g = make_grid(20.0, n, 0);
        const HamiltonianOperator h = assemble_hamiltonian({}, g);
        const Spinor f = random_smooth_spinor(g, 11);
        const Spinor rv = perturbed_resolvent_apply(h, lambda, Branch::none, f);
        CVec rhs(2 * n);
        rhs << to_u(*g, f.upper.values), to_u(*g, f.lower.values);
        const CVec u = (h.dense() - lambda * CMat::Identity(2 * n, 2 * n)).partialPivLu().solve(rhs);
        const CVec up = from_u(*g, CVec(u.head(n)));
        return (rv.upper.values - up).cwiseAbs().maxCoeff() / up.cwiseAbs().maxCoeff();
    };
    const double coarse = gap(384), fine = gap(768);
    EXPECT_LT(coarse, 1e-5);
    EXPECT_LT(fine, 1e-7);
    EXPECT_GT(coarse / fine, 64.0);
}

TEST(Resolvent, SecondResolventIdentity) {
    // R_V f + R0 (V R_V f) = R0 f with V z = H z - H0 z pointwise
    const auto& f = fx();
    const HamiltonianOperator h0 = free_hamiltonian(f.h.alpha, f.grid);
    for (cplx lambda : {cplx(-0.4, 0.3), cplx(0.5, 0.0), cplx(3.0, 0.0)}) {
        const Branch b = lambda.imag() == 0.0 && lambda.real() > 1.0 ? Branch::plus : Branch::none;
        const Spinor rv = perturbed_resolvent_apply(f.h, lambda, b, f.f);
        const Spinor vrv = f.h.apply(rv) - h0.apply(rv);
        const Spinor lhs = rv + free_resolvent_apply(f.h, lambda, b, vrv);
        const Spinor rhs = free_resolvent_apply(f.h, lambda, b, f.f);
        EXPECT_LT(sup(lhs - rhs) / sup(rhs), 1e-8) << lambda;
    }
}

TEST(Resolvent, LimitingAbsorption) {
    // R_V(lambda + i eps) -> R_V(lambda + i0) linearly in eps
    const auto& f = fx();
    const double lam = 2.5;
    const Spinor lim = perturbed_resolvent_apply(f.h, lam, Branch::plus, f.f);
    auto gap = [&](double eps) { return sup(perturbed_resolvent_apply(f.h, cplx(lam, eps), Branch::none, f.f) - lim); };
    const double d1 = gap(1e-3), d2 = gap(5e-4);
    EXPECT_LT(d1 / sup(lim), 1e-2);
    EXPECT_NEAR(d1 / d2, 2.0, 0.05);
    // the -i0 value is the mirror image for this real-symmetric data
    const Spinor minus = perturbed_resolvent_apply(f.h, lam, Branch::minus, f.f);
    EXPECT_GT(sup(minus - lim), 1e-3 * sup(lim));
}

TEST(Resolvent, SimplePoleAtUnstableEigenvalue) {
    const auto& f = fx();
    const cplx pole(0.0, f.sd.sigma);
    auto size = [&](double d) { return sup(perturbed_resolvent_apply(f.h, pole + cplx(0.0, d), Branch::none, f.f)); };
    const double a = size(1e-3), b = size(5e-4);
    EXPECT_NEAR(b / a, 2.0, 0.02);
}

TEST(Resolvent, FreeCaseHasNoFredholmPart) {
    const GridPtr g = make_grid(10.0, 64, 0);
    const Resolvent r(free_hamiltonian(1.0, g), cplx(0.2, 0.5));
    EXPECT_EQ(r.fredholm_norm(), 0.0);
    EXPECT_EQ(r.fredholm_min_sv(), 1.0);
}

TEST(Norms, PowerIterationOnScalarMultiple) {
    const GridPtr g = make_grid(10.0, 64, 0);
    const CMat a = 2.5 * CMat::Identity(128, 128);
    EXPECT_NEAR(power_norm_pq(*g, a, 2.0, 2.0), 2.5, 1e-10);
    EXPECT_NEAR(power_norm_pq(*g, a, 6.0, 6.0), 2.5, 1e-8);
}

TEST(Norms, FractionalMatrixOrderZeroIsIdentity) {
    const GridPtr g = make_grid(10.0, 64, 0);
    EXPECT_LT((fractional_matrix_u(*g, 0.0) - Mat::Identity(64, 64)).cwiseAbs().maxCoeff(), 1e-12);
    const Mat half = fractional_matrix_u(*g, 0.5);
    EXPECT_LT((half * half - fractional_matrix_u(*g, 1.0)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Sweep, LambdaGrid) {
    const auto l = lap_lambda_grid(1.0, 100.0, 4, 5);
    ASSERT_EQ(l.size(), 9u);
    EXPECT_EQ(l.front(), 1.0);
    EXPECT_NEAR(l[3], 4.0, 1e-15);
    EXPECT_NEAR(l.back(), 100.0, 1e-12);
    for (size_t i = 1; i < l.size(); ++i) EXPECT_GT(l[i], l[i - 1]);
    EXPECT_THROW(lap_lambda_grid(1.0, 3.0, 4, 5), ParameterError);
}

TEST(Sweep, CsvLayout) {
    ResolventSweep s;
    s.lambdas = {1.0, 2.0};
    s.norms = {0.5, 0.25};
    s.fredholm_norms = {1.0, 0.5};
    s.fredholm_min_sv = {0.2, 0.3};
    std::ostringstream os;
    s.write_csv(os);
    const std::string text = os.str();
    EXPECT_EQ(text.find('\r'), std::string::npos);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    EXPECT_NE(text.find("0.25"), std::string::npos);
}

TEST(Projector, LowRankMatchesSuite) {
    const auto& f = fx();
    const ContinuousProjector pc(f.ps);
    EXPECT_EQ(pc.rank(), 4);
    const int n = f.grid->n;
    CVec u(2 * n);
    u << to_u(*f.grid, f.f.upper.values), to_u(*f.grid, f.f.lower.values);
    const CVec v = pc.apply(u);
    const Spinor ref = f.ps.p_c(f.f);
    EXPECT_LT((from_u(*f.grid, CVec(v.head(n))) - ref.upper.values).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((pc.apply(v) - v).cwiseAbs().maxCoeff(), 1e-10);
    // adjoint in the flat u-space inner product
    const CVec w = CVec::Random(2 * n);
    EXPECT_NEAR(std::abs(pc.apply(u).dot(w) - u.dot(pc.apply_adjoint(w))), 0.0, 1e-9);
}

TEST(Propagator, AdjointStep) {
    const auto& f = fx();
    const LinearPropagator prop(f.h, 0.01);
    const int n = f.grid->n;
    const CVec u0 = CVec::Random(2 * n), v0 = CVec::Random(2 * n);
    CVec u = u0, v = v0;
    prop.step(u, 0.3);
    prop.step_adjoint(v, 0.3);
    EXPECT_NEAR(std::abs(v0.dot(u) - v.dot(u0)), 0.0, 1e-10);
}

TEST(Propagator, FreeStepIsUnitary) {
    const GridPtr g = make_grid(10.0, 64, 0);
    const LinearPropagator prop(free_hamiltonian(1.0, g), 0.05);
    CVec u = CVec::Random(128);
    const double n0 = u.norm();
    for (int i = 0; i < 10; ++i) prop.step(u, 0.7);
    EXPECT_NEAR(u.norm(), n0, 1e-12);
}

TEST(Envelope, SyntheticRows) {
    std::vector<KernelRow> lin{{0.0, 0.0}, {0.1, 0.3}, {0.2, 0.6}, {0.4, 1.2}};
    const EnvelopeFit a = fit_envelope(lin);
    EXPECT_NEAR(a.slope, 1.0, 1e-12);
    EXPECT_TRUE(a.monotone);
    EXPECT_TRUE(a.bounded);
    EXPECT_NEAR(a.constant, 1.2 / std::pow(0.4, 0.2), 1e-12);
    std::vector<KernelRow> flat{{0.1, std::pow(0.1, 0.1)}, {0.2, std::pow(0.2, 0.1)}, {0.4, std::pow(0.4, 0.1)}};
    EXPECT_FALSE(fit_envelope(flat).bounded);
    std::vector<KernelRow> bump{{0.1, 0.5}, {0.2, 0.4}, {0.4, 0.6}};
    EXPECT_FALSE(fit_envelope(bump).monotone);
}
