#include "ssl/core.hpp"
#include "ssl/field_io.hpp"
#include "ssl/green.hpp"
#include "ssl/norms.hpp"
#include "ssl/operators.hpp"

#include <gtest/gtest.h>

#include <clocale>
#include <filesystem>

using namespace ssl;

TEST(Grid, NodesAndWeights) {
    auto g = make_grid(10.0, 100, 0);
    EXPECT_DOUBLE_EQ(g->nodes[0], 0.1);
    EXPECT_DOUBLE_EQ(g->nodes[99], 10.0);
    // exact for r^2 on [0, r_max]: integral of 1 r^2 dr
    EXPECT_NEAR(radial_integral(*g, Vec::Ones(100)), 1000.0 / 3.0, 1e-10);
    EXPECT_THROW(make_grid(-1.0, 32, 0), ParameterError);
    EXPECT_THROW(make_grid(1.0, 8, 0), ParameterError);
    EXPECT_THROW(make_grid(1.0, 32, 2), ParameterError);
}

TEST(Grid, GaussianMass) {
    // int e^{-r^2} d^3x = pi^{3/2}
    auto g = make_grid(12.0, 600, 0);
    const Vec f = (-g->nodes.array().square()).exp().matrix();
    EXPECT_NEAR(4.0 * kPi * radial_integral(*g, f), std::pow(kPi, 1.5), 1e-12);
}

TEST(SineTransform, RoundTrip) {
    auto g = make_grid(5.0, 127, 0);
    SineTransform dst(*g);
    Vec u = Vec::Random(127);
    EXPECT_LT((dst.synthesize(dst.analyze(u)) - u).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SineTransform, DiagonalizesStencil) {
    auto g = make_grid(8.0, 200, 0);
    SineTransform dst(*g);
    Vec a = Vec::Zero(200);
    a[7] = 1.0;
    const Vec u = dst.synthesize(a);
    const Vec d2 = second_derivative_u(*g, u);
    EXPECT_LT((d2 + dst.stencil_symbol()[7] * u).cwiseAbs().maxCoeff(), 1e-9);
    // the symbol approaches xi^2 at low frequency
    EXPECT_NEAR(dst.stencil_symbol()[0], dst.frequencies()[0] * dst.frequencies()[0], 1e-12);
}

TEST(Laplacian, GaussianClosedForm) {
    // Delta e^{-r^2} = (4 r^2 - 6) e^{-r^2}
    auto g = make_grid(8.0, 800, 0);
    const Vec r = g->nodes;
    const Vec f = (-r.array().square()).exp().matrix();
    const SectorField lf = laplacian_apply(real_field(g, f));
    const Vec exact = ((4.0 * r.array().square() - 6.0) * f.array()).matrix();
    EXPECT_LT((lf.values.real() - exact).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Laplacian, DipoleSector) {
    // l = 1: f = r e^{-r^2}, Delta_1 f = f'' + 2 f'/r - 2 f / r^2 = (4 r^3 - 10 r) e^{-r^2}
    auto g = make_grid(8.0, 800, 1);
    const Vec r = g->nodes;
    const Vec e = (-r.array().square()).exp().matrix();
    const SectorField lf = laplacian_apply(real_field(g, Vec(r.cwiseProduct(e))));
    const Vec exact = ((4.0 * r.array().cube() - 10.0 * r.array()) * e.array()).matrix();
    EXPECT_LT((lf.values.real() - exact).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Norms, HalfDerivativeOfGaussian) {
    // f = e^{-r^2/2}: ||f||_{Hdot^1/2}^2 = int |xi| |f^|^2 d^3xi / (2 pi)^3 = 2 pi
    auto g = make_grid(40.0, 4000, 0);
    const Vec f = (-0.5 * g->nodes.array().square()).exp().matrix();
    EXPECT_NEAR(hhalf_norm(real_field(g, f)), std::sqrt(2.0 * kPi), 1e-6);
}

TEST(Norms, LebesgueGaussian) {
    // ||e^{-r^2}||_6^6 = int e^{-6 r^2} = (pi / 6)^{3/2}
    auto g = make_grid(10.0, 1000, 0);
    const Vec f = (-g->nodes.array().square()).exp().matrix();
    EXPECT_NEAR(std::pow(lebesgue_norm(real_field(g, f), 6.0), 6.0), std::pow(kPi / 6.0, 1.5), 1e-10);
}

TEST(Spinor, PhysicalSymmetry) {
    auto g = make_grid(5.0, 32, 0);
    CVec w = CVec::Random(32);
    Spinor s = Spinor::physical(g, w);
    EXPECT_EQ(s.symmetry_defect(), 0.0);
    const Spinor t = sigma2_conj(s);
    EXPECT_LT((t.upper.values - s.upper.values).norm(), 1e-15);
}

TEST(BranchSqrt, Sides) {
    EXPECT_NEAR(std::abs(branch_sqrt(4.0, Side::none) - 2.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(branch_sqrt(-4.0, Side::upper) - cplx(0, 2)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(branch_sqrt(-4.0, Side::lower) - cplx(0, -2)), 0.0, 1e-15);
    EXPECT_THROW(branch_sqrt(-4.0, Side::none), ParameterError);
    const cplx k = branch_sqrt(cplx(1.0, -3.0), Side::none);
    EXPECT_GE(k.real(), 0.0);
}

TEST(GreenOperator, InvertsShiftedLaplacian) {
    auto g = make_grid(20.0, 400, 0);
    GreenOperator green(*g, 1.5);
    CVec u(400);
    for (int j = 0; j < 400; ++j) u[j] = g->nodes[j] * std::exp(-g->nodes[j] * g->nodes[j]);
    const CVec v = green.apply(u);
    // (-d^2 + kappa^2) v = u away from the wall
    const CVec back = -second_derivative_u(*g, v) + 2.25 * v;
    EXPECT_LT((back - u).head(300).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(FieldIo, RoundTrip) {
    auto g = make_grid(3.0, 17, 1);
    SectorField f(g, CVec::Random(17));
    const auto path = std::filesystem::temp_directory_path() / "ssl_field_roundtrip.bin";
    write_field(path, f);
    const SectorField back = read_field(path);
    EXPECT_EQ(back.grid->n, 17);
    EXPECT_EQ(back.grid->l, 1);
    EXPECT_EQ((back.values - f.values).norm(), 0.0);
    const SectorField j = field_from_json(field_to_json(f));
    EXPECT_EQ((j.values - f.values).norm(), 0.0);
    std::filesystem::remove(path);
}

TEST(FormatNumber, RoundTripAndLocale) {
    for (double x : {0.1, -2.5e-300, 1.0 / 3.0, 6.02214076e23, 0.0}) EXPECT_EQ(std::stod(format_number(x)), x);
    EXPECT_EQ(format_number(0.5), "0.5");
    // a comma-decimal C locale must not leak into CSV numbers
    if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8")) {
        EXPECT_EQ(format_number(0.25), "0.25");
        std::setlocale(LC_NUMERIC, "C");
    }
}
