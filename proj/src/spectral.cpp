#include "ssl/spectral.hpp"

#include "ssl/green.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

namespace ssl {

namespace {

CVec lap_f(const RadialGrid& g, const CVec& f) { return from_u(g, laplacian_u(g, to_u(g, f))); }

SparseMat scalar_matrix(const RadialGrid& g, double alpha, const Vec& potential) {
    SparseMat a = -laplacian_matrix(g);
    for (int j = 0; j < g.n; ++j) a.coeffRef(j, j) += alpha * alpha - potential[j];
    a.makeCompressed();
    return a;
}

double l2(const Spinor& s) { return std::sqrt(std::max(0.0, pairing(s, s).real())); }

Spinor rotate_gauge(const Spinor& s, double gamma) {
    const cplx e = std::polar(1.0, gamma);
    return {SectorField(s.grid(), e * s.upper.values), SectorField(s.grid(), std::conj(e) * s.lower.values)};
}

}  // namespace

SparseMat HamiltonianOperator::lplus() const { return scalar_matrix(*grid, alpha, Vec(3.0 * potential)); }
SparseMat HamiltonianOperator::lminus() const { return scalar_matrix(*grid, alpha, potential); }

Spinor HamiltonianOperator::apply(const Spinor& z) const {
    check_same_grid(z.upper, SectorField(grid));
    const auto& g = *grid;
    const CVec diag = (2.0 * potential.array() - alpha * alpha).matrix().cast<cplx>();
    const CVec a1 = lap_f(g, z.upper.values) + diag.cwiseProduct(z.upper.values);
    const CVec a2 = lap_f(g, z.lower.values) + diag.cwiseProduct(z.lower.values);
    const cplx e2 = std::polar(1.0, 2.0 * gamma);
    const CVec v = potential.cast<cplx>();
    CVec up = a1 + e2 * v.cwiseProduct(z.lower.values);
    CVec lo = -std::conj(e2) * v.cwiseProduct(z.upper.values) - a2;
    return {SectorField(grid, std::move(up)), SectorField(grid, std::move(lo))};
}

Spinor HamiltonianOperator::apply_adjoint(const Spinor& z) const { return sigma3(apply(sigma3(z))); }

CMat HamiltonianOperator::dense() const {
    const int n = grid->n;
    const Mat lap = Mat(laplacian_matrix(*grid));
    const Mat a = lap + (2.0 * potential.array() - alpha * alpha).matrix().asDiagonal().toDenseMatrix();
    const cplx e2 = std::polar(1.0, 2.0 * gamma);
    CMat m(2 * n, 2 * n);
    m.topLeftCorner(n, n) = a.cast<cplx>();
    m.bottomRightCorner(n, n) = -a.cast<cplx>();
    m.topRightCorner(n, n) = (e2 * potential.cast<cplx>()).asDiagonal().toDenseMatrix();
    m.bottomLeftCorner(n, n) = (-std::conj(e2) * potential.cast<cplx>()).asDiagonal().toDenseMatrix();
    return m;
}

Mat HamiltonianOperator::real_generator() const {
    const int n = grid->n;
    Mat t = Mat::Zero(2 * n, 2 * n);
    t.topRightCorner(n, n) = Mat(lminus());
    t.bottomLeftCorner(n, n) = -Mat(lplus());
    return t;
}

HamiltonianOperator assemble_hamiltonian(const SolitonParams& p, const GridPtr& grid) {
    if (!p.radial()) throw ParameterError("assemble_hamiltonian: boost and translation are not supported");
    auto gs = cached_ground_state(p.alpha, with_sector(grid, 0));
    HamiltonianOperator h;
    h.grid = grid;
    h.alpha = p.alpha;
    h.gamma = p.gamma;
    h.potential = gs->phi.values.real().cwiseAbs2();
    return h;
}

HamiltonianOperator free_hamiltonian(double alpha, const GridPtr& grid) {
    HamiltonianOperator h;
    h.grid = grid;
    h.alpha = alpha;
    h.potential = Vec::Zero(grid->n);
    return h;
}

CVec dense_spectrum(const HamiltonianOperator& h) {
    Eigen::EigenSolver<Mat> es(h.real_generator(), false);
    return -kI * es.eigenvalues();
}

SpectralData compute_sigma_eigenpair(const HamiltonianOperator& h, const SigmaOptions& opt) {
    if (h.grid->l != 0) throw ParameterError("compute_sigma_eigenpair: the unstable pair lives in the l = 0 sector");
    const double a2 = h.alpha * h.alpha;
    SpectralData sd;
    sd.alpha = h.alpha;

    // global count on the coarse grid
    {
        auto coarse = make_grid(opt.coarse_r_max / h.alpha, opt.coarse_n, 0);
        HamiltonianOperator hc = h;
        hc.grid = coarse;
        hc.gamma = 0.0;
        hc.potential = h.potential.isZero(0.0) ? Vec(Vec::Zero(coarse->n))
                                                : Vec(cached_ground_state(h.alpha, coarse)->phi.values.real().cwiseAbs2());
        // T^2 = diag(-L- L+, -L+ L-): eigenvalues of H are +-sqrt(nu), nu in the spectrum of L- L+
        Eigen::EigenSolver<Mat> es(Mat(hc.lminus() * hc.lplus()), false);
        for (const cplx nu : es.eigenvalues()) {
            const double m = std::abs(nu);
            if (std::sqrt(m) < opt.zero_cutoff * a2) continue;
            if (std::abs(nu.imag()) <= 1e-6 * m) {
                if (nu.real() < 0.0) {
                    ++sd.imaginary_pairs;
                    sd.coarse_sigma = std::sqrt(-nu.real());
                }
            } else {
                ++sd.off_axis;
            }
        }
    }
    if (sd.imaginary_pairs != 1)
        throw SpectralAnomaly("compute_sigma_eigenpair: found " + std::to_string(sd.imaginary_pairs) +
                              " imaginary eigenvalue pairs, expected 1");

    // inverse iteration for T e = sigma e on the operator's grid
    const auto& g = *h.grid;
    const int n = g.n;
    const SparseMat lp = h.lplus();
    const SparseMat lm = h.lminus();
    auto shifted = [&](double s) {
        std::vector<Eigen::Triplet<double>> trips;
        for (int j = 0; j < 2 * n; ++j) trips.emplace_back(j, j, -s);
        for (int k = 0; k < lm.outerSize(); ++k)
            for (SparseMat::InnerIterator it(lm, k); it; ++it) trips.emplace_back(it.row(), n + it.col(), it.value());
        for (int k = 0; k < lp.outerSize(); ++k)
            for (SparseMat::InnerIterator it(lp, k); it; ++it) trips.emplace_back(n + it.row(), it.col(), -it.value());
        SparseMat m(2 * n, 2 * n);
        m.setFromTriplets(trips.begin(), trips.end());
        return m;
    };
    auto apply_t = [&](const Vec& y) {
        Vec out(2 * n);
        out.head(n) = lm * y.tail(n);
        out.tail(n) = -(lp * y.head(n));
        return out;
    };
    auto rayleigh = [&](const Vec& e) {
        Vec left(2 * n);
        left << e.tail(n), e.head(n);
        return left.dot(apply_t(e)) / left.dot(e);
    };

    const Vec phi_u = to_u(g, Vec(h.potential.cwiseSqrt()));
    Vec y(2 * n);
    y << phi_u, phi_u;
    y /= y.cwiseAbs().maxCoeff();
    double sigma = sd.coarse_sigma;
    for (int pass = 0; pass < 3; ++pass) {
        Eigen::SparseLU<SparseMat> lu(shifted(sigma));
        if (lu.info() != Eigen::Success) throw ConvergenceError("compute_sigma_eigenpair: shifted factorization failed");
        for (int it = 0; it < 40; ++it) {
            Vec next = lu.solve(y);
            next /= next.cwiseAbs().maxCoeff();
            if (next.dot(y) < 0.0) next = -next;
            const double change = (next - y).cwiseAbs().maxCoeff();
            y = std::move(next);
            if (change < 1e-14) break;
        }
        const double updated = rayleigh(y);
        const bool done = std::abs(updated - sigma) < 1e-15 * sigma;
        sigma = updated;
        if (done) break;
    }
    sd.sigma = sigma;

    Vec ea = y.head(n);
    Vec eb = y.tail(n);
    const double cross = g.solid_angle() * g.u_weights.dot(ea.cwiseProduct(eb));
    if (!(cross > 0.0)) throw SpectralAnomaly("compute_sigma_eigenpair: mode has nonpositive <a, b>");
    double scale = std::sqrt(0.5 / cross);
    if (ea[0] < 0.0) scale = -scale;
    sd.mode_a = from_u(g, Vec(scale * ea));
    sd.mode_b = from_u(g, Vec(scale * eb));

    const CVec a = sd.mode_a.cast<cplx>();
    const CVec b = sd.mode_b.cast<cplx>();
    Spinor fm{SectorField(h.grid, a + kI * b), SectorField(h.grid, a - kI * b)};
    Spinor fp{SectorField(h.grid, a - kI * b), SectorField(h.grid, a + kI * b)};
    sd.f_plus = rotate_gauge(fp, h.gamma);
    sd.f_minus = rotate_gauge(fm, h.gamma);
    sd.norm_constant = 1.0 / pairing(sd.f_plus, kI * sigma3(sd.f_minus)).real();
    const Spinor res = h.apply(sd.f_plus) - (kI * sigma) * sd.f_plus;
    const double sup_f = sd.f_plus.upper.values.cwiseAbs().maxCoeff();
    sd.residual = std::max(res.upper.values.cwiseAbs().maxCoeff(), res.lower.values.cwiseAbs().maxCoeff()) / sup_f;
    return sd;
}

ProjectionSuite::ProjectionSuite(SpectralData sd, TangentFrame frame) : sd_(std::move(sd)), frame_(std::move(frame)) {
    if (std::abs(frame_.params.alpha - sd_.alpha) > 1e-14)
        throw ParameterError("ProjectionSuite: frame and spectral data at different alpha");
    c_minus_ = 1.0 / pairing(sd_.f_minus, kI * sigma3(sd_.f_plus)).real();
}

Spinor ProjectionSuite::p0(const Spinor& z) const {
    Eigen::Matrix2cd gram;
    Eigen::Vector2cd rhs;
    for (int g = 0; g < 2; ++g) {
        rhs[g] = pairing(z, frame_.cotangents[g].field);
        for (int f = 0; f < 2; ++f) gram(g, f) = frame_.pairing(f, g);
    }
    const Eigen::Vector2cd c = gram.fullPivLu().solve(rhs);
    return c[0] * frame_.tangents[0].field + c[1] * frame_.tangents[1].field;
}

cplx ProjectionSuite::plus_coefficient(const Spinor& z) const {
    return sd_.norm_constant * pairing(z, kI * sigma3(sd_.f_minus));
}

cplx ProjectionSuite::minus_coefficient(const Spinor& z) const {
    return c_minus_ * pairing(z, kI * sigma3(sd_.f_plus));
}

Spinor ProjectionSuite::p_plus(const Spinor& z) const { return plus_coefficient(z) * sd_.f_plus; }
Spinor ProjectionSuite::p_minus(const Spinor& z) const { return minus_coefficient(z) * sd_.f_minus; }

Spinor ProjectionSuite::p_c(const Spinor& z) const { return z - p0(z) - p_plus(z) - p_minus(z); }

ProjectionSuite riesz_projections(const SpectralData& sd, const TangentFrame& frame) { return {sd, frame}; }

SparseMat ScalarOperator::matrix() const { return scalar_matrix(*grid, alpha, potential); }

ScalarOperator lplus_operator(const GroundState& gs, int l) {
    return {with_sector(gs.grid(), l), gs.alpha, Vec(3.0 * gs.phi.values.real().cwiseAbs2())};
}

ScalarOperator lminus_operator(const GroundState& gs, int l) {
    return {with_sector(gs.grid(), l), gs.alpha, Vec(gs.phi.values.real().cwiseAbs2())};
}

double edge_resonance_test(const ScalarOperator& op, double edge) {
    const auto& g = *op.grid;
    const double a2 = op.alpha * op.alpha;
    if (edge < a2) throw ParameterError("edge_resonance_test: edge below the continuum threshold");
    // V = -potential = V1 V2
    const Vec v2 = op.potential.cwiseAbs().cwiseSqrt();
    Vec v1(g.n);
    for (int j = 0; j < g.n; ++j) v1[j] = op.potential[j] > 0.0 ? -v2[j] : v2[j];
    // z = edge + i0: kappa^2 = alpha^2 - z approached from below the axis
    const cplx kappa = branch_sqrt(cplx(a2 - edge, 0.0), Side::lower);
    const CMat green = GreenOperator(g, kappa).matrix();
    CMat m = v2.cast<cplx>().asDiagonal() * green * v1.cast<cplx>().asDiagonal();
    m.diagonal().array() += 1.0;
    Eigen::SelfAdjointEigenSolver<CMat> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().minCoeff()));
}

nlohmann::json GapReport::to_json() const {
    return {{"alpha", alpha},
            {"lplus_l0", lplus[0]},
            {"lplus_l1", lplus[1]},
            {"lminus_l0", lminus[0]},
            {"lminus_l1", lminus[1]},
            {"kernel_tol", kernel_tol},
            {"in_gap", in_gap},
            {"lminus_kernel_residual", lminus_kernel_residual},
            {"lplus_kernel_residual", lplus_kernel_residual},
            {"edge_lplus", edge_lplus},
            {"edge_lminus", edge_lminus}};
}

std::array<double, 2> kernel_residuals(const GroundState& gs) {
    const auto& g0 = *gs.grid();
    const Vec u = gs.u();
    auto rel_l2 = [](const RadialGrid& g, const Vec& num_u, const Vec& den_u) {
        return std::sqrt(g.u_weights.dot(num_u.cwiseAbs2()) / g.u_weights.dot(den_u.cwiseAbs2()));
    };
    const ScalarOperator lp1 = lplus_operator(gs, 1);
    const Vec dphi = radial_derivative(gs.phi).values.real();
    const Vec u1 = to_u(*lp1.grid, dphi);
    return {rel_l2(g0, lminus_operator(gs, 0).matrix() * u, u), rel_l2(*lp1.grid, lp1.matrix() * u1, u1)};
}

GapReport lpm_gap_check(const GroundState& gs) {
    GapReport rep;
    rep.alpha = gs.alpha;
    const double a2 = gs.alpha * gs.alpha;
    rep.kernel_tol = 1e-6 * a2;
    for (int l = 0; l < 2; ++l) {
        for (int which = 0; which < 2; ++which) {
            const ScalarOperator op = which == 0 ? lplus_operator(gs, l) : lminus_operator(gs, l);
            Eigen::SelfAdjointEigenSolver<Mat> es(Mat(op.matrix()), Eigen::EigenvaluesOnly);
            auto& out = which == 0 ? rep.lplus[l] : rep.lminus[l];
            for (double ev : es.eigenvalues()) {
                if (ev >= a2) break;
                out.push_back(ev);
                if (std::abs(ev) > rep.kernel_tol) {
                    if (ev > 0.0) ++rep.in_gap;
                }
            }
            (which == 0 ? rep.edge_lplus[l] : rep.edge_lminus[l]) = edge_resonance_test(op, a2);
        }
    }
    const auto k = kernel_residuals(gs);
    rep.lminus_kernel_residual = k[0];
    rep.lplus_kernel_residual = k[1];
    return rep;
}

double ZeroModeResiduals::max() const {
    return std::max({alpha_adj, gamma_adj, v_adj, d_adj, gamma_kernel, alpha_chain});
}

nlohmann::json ZeroModeResiduals::to_json() const {
    return {{"alpha_adj", alpha_adj}, {"gamma_adj", gamma_adj}, {"v_adj", v_adj},
            {"d_adj", d_adj},         {"gamma_kernel", gamma_kernel}, {"alpha_chain", alpha_chain}};
}

ZeroModeResiduals zero_mode_algebra_check(const SolitonParams& p, const GridPtr& grid) {
    const TangentFrame fr = tangent_frame(p, grid);
    const HamiltonianOperator h0 = assemble_hamiltonian(p, with_sector(grid, 0));
    HamiltonianOperator h1 = h0;
    h1.grid = with_sector(grid, 1);
    const double a = p.alpha;
    const cplx two_i_alpha(0.0, 2.0 * a);
    const auto& t = fr.tangents;
    const auto& c = fr.cotangents;
    ZeroModeResiduals z;
    z.alpha_adj = l2(h0.apply_adjoint(c[0].field)) / l2(c[0].field);
    z.gamma_adj = l2(h0.apply_adjoint(c[1].field) + two_i_alpha * c[0].field) / l2(c[0].field);
    z.v_adj = l2(h1.apply_adjoint(c[2].field)) / l2(c[2].field);
    z.d_adj = l2(h1.apply_adjoint(c[5].field) + cplx(0.0, 2.0) * c[2].field) / l2(c[2].field);
    z.gamma_kernel = l2(h0.apply(t[1].field)) / l2(t[1].field);
    z.alpha_chain = l2(h0.apply(t[0].field) + two_i_alpha * t[1].field) / l2(t[1].field);
    return z;
}

}  // namespace ssl
