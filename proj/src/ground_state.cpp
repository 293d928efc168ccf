#include "ssl/ground_state.hpp"

#include "ssl/norms.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace ssl {

namespace {

Vec cubic_u(const RadialGrid& g, const Vec& u) {
    // r phi^3 = u^3 / r^2
    return (u.array().cube() / g.nodes.array().square()).matrix();
}

Vec equation_u(const RadialGrid& g, const Vec& u, double alpha) {
    return -laplacian_u(g, u) + alpha * alpha * u - cubic_u(g, u);
}

}  // namespace

Vec GroundState::u() const { return to_u(*phi.grid, Vec(phi.values.real())); }

double ground_state_residual(const RadialGrid& g, const Vec& u, double alpha) {
    return equation_u(g, u, alpha).cwiseQuotient(g.nodes).cwiseAbs().maxCoeff();
}

SparseMat linearized_matrix(const RadialGrid& g, const Vec& u, double alpha, double c) {
    SparseMat a = -laplacian_matrix(g);
    for (int j = 0; j < g.n; ++j) {
        const double phi = u[j] / g.nodes[j];
        a.coeffRef(j, j) += alpha * alpha - c * phi * phi;
    }
    a.makeCompressed();
    return a;
}

double default_residual_tol(double alpha) { return 1e-10 * std::max(1.0, alpha * alpha * alpha); }

GroundState solve_ground_state(double alpha, const GridPtr& grid, double tol, const Vec* initial_u) {
    if (!(alpha > 0.0)) throw ParameterError("solve_ground_state: alpha must be positive");
    if (grid->l != 0) throw ParameterError("solve_ground_state: needs an l = 0 grid");
    if (tol < 1e-12) throw ParameterError("solve_ground_state: tol must be at least 1e-12");
    const auto& g = *grid;
    const double a2 = alpha * alpha;
    SineTransform dst(g);
    const Vec denom = dst.stencil_symbol().array() + a2;

    Vec u;
    if (initial_u) {
        if (initial_u->size() != g.n) throw ParameterError("solve_ground_state: initial profile has wrong length");
        u = *initial_u;
    } else {
        u = (4.0 * alpha * (-0.5 * (alpha * g.nodes.array()).square()).exp() * g.nodes.array()).matrix();
    }

    // Petviashvili with exponent 3/2 for the cubic nonlinearity
    for (int it = 0; it < 400; ++it) {
        Vec a = dst.analyze(u);
        Vec nl = dst.analyze(cubic_u(g, u));
        const double num = (denom.array() * a.array().square()).sum();
        const double den = a.dot(nl);
        if (!(den > 0.0)) throw ConvergenceError("solve_ground_state: Petviashvili lost positivity");
        const double stab = std::pow(num / den, 1.5);
        Vec next = dst.synthesize(Vec(stab * nl.cwiseQuotient(denom)));
        const double change = (next - u).cwiseAbs().maxCoeff() / next.cwiseAbs().maxCoeff();
        u = std::move(next);
        if (change < 1e-11) break;
    }

    double res = ground_state_residual(g, u, alpha);
    int newton = 0;
    while (res >= tol) {
        if (++newton > 30) {
            std::ostringstream msg;
            msg << "solve_ground_state: Newton did not converge, residual " << res << " after " << newton - 1
                << " iterations, phi(0) ~ " << u[0] / g.nodes[0];
            throw ConvergenceError(msg.str());
        }
        Eigen::SparseLU<SparseMat> lu(linearized_matrix(g, u, alpha, 3.0));
        if (lu.info() != Eigen::Success) throw ConvergenceError("solve_ground_state: singular Jacobian");
        Vec step = lu.solve(equation_u(g, u, alpha));
        u -= step;
        const double next = ground_state_residual(g, u, alpha);
        if (newton > 3 && next > 0.5 * res) {
            res = next;
            break;
        }
        res = next;
    }
    if (res >= tol) {
        std::ostringstream msg;
        msg << "solve_ground_state: residual " << res << " stalled above tol " << tol;
        throw ConvergenceError(msg.str());
    }
    // excited states have O(1) negative lobes; the far tail may carry rounding-level sign flips
    if (u.minCoeff() < -1e-8 * u.maxCoeff()) throw ConvergenceError("solve_ground_state: converged to a profile with a node");

    GroundState gs;
    gs.alpha = alpha;
    gs.phi = real_field(grid, from_u(g, u));
    gs.residual = res;
    auto fun = conserved_functionals(gs.phi);
    gs.mass = fun.mass;
    gs.energy = fun.energy;
    gs.hhalf_norm = fun.hhalf_norm;
    return gs;
}

Functionals conserved_functionals(const SectorField& psi) {
    const auto& g = *psi.grid;
    Functionals f;
    const double omega = g.solid_angle();
    CVec u = to_u(g, psi.values);
    CVec lap = laplacian_u(g, u);
    // discrete quadratic form, Euclidean product in u-space
    f.gradient_sq = -omega * g.h * u.dot(lap).real();
    f.mass = omega * radial_integral(g, psi.values.cwiseAbs2());
    f.quartic = omega * radial_integral(g, psi.values.cwiseAbs2().cwiseAbs2());
    f.energy = 0.5 * f.gradient_sq - 0.25 * f.quartic;
    f.hhalf_norm = g.l == 0 ? sobolev_norm(psi, 0.5, 2.0) : 0.0;
    return f;
}

Functionals conserved_functionals(const Spinor& psi) { return conserved_functionals(psi.upper); }

GnsCheck gns_stationarity_check(const SectorField& phi, const SectorField& h, double eps) {
    auto functional = [](const SectorField& f) {
        auto c = conserved_functionals(f);
        return c.mass * c.energy;
    };
    SectorField plus(phi.grid, phi.values + eps * h.values);
    SectorField minus(phi.grid, phi.values - eps * h.values);
    GnsCheck out;
    out.derivative = (functional(plus) - functional(minus)) / (2.0 * eps);
    auto hf = conserved_functionals(h);
    const double h1 = std::sqrt(hf.mass + hf.gradient_sq);
    out.scale = (std::abs(functional(phi)) + 1.0) * h1;
    return out;
}

AlphaDerivatives alpha_derivatives(const RadialGrid& g, const Vec& u, double alpha, int order) {
    Eigen::SparseLU<SparseMat> lu(linearized_matrix(g, u, alpha, 3.0));
    if (lu.info() != Eigen::Success) throw ConvergenceError("alpha_derivatives: L+ factorization failed");
    const Vec r2 = g.nodes.cwiseAbs2();
    AlphaDerivatives d;
    d.d1 = lu.solve(Vec(-2.0 * alpha * u));
    if (order < 2) return d;
    // products of f-space fields carry a 1/r^2 per extra factor in u-space
    Vec rhs2 = 6.0 * u.cwiseProduct(d.d1.cwiseAbs2()).cwiseQuotient(r2) - 4.0 * alpha * d.d1 - 2.0 * u;
    d.d2 = lu.solve(rhs2);
    if (order < 3) return d;
    Vec rhs3 = 6.0 * d.d1.array().cube().matrix().cwiseQuotient(r2) +
               18.0 * u.cwiseProduct(d.d1).cwiseProduct(d.d2).cwiseQuotient(r2) - 6.0 * d.d1 - 6.0 * alpha * d.d2;
    d.d3 = lu.solve(rhs3);
    return d;
}

SolitonFamily::SolitonFamily(GridPtr grid, const GroundState& anchor, double reanchor_step)
    : grid_(std::move(grid)), step_(reanchor_step), anchor_alpha_(anchor.alpha), u0_(anchor.u()) {
    d_ = alpha_derivatives(*grid_, u0_, anchor_alpha_, 3);
}

void SolitonFamily::reanchor(double alpha) {
    const double dl = alpha - anchor_alpha_;
    Vec guess = u0_ + dl * d_.d1 + 0.5 * dl * dl * d_.d2 + dl * dl * dl / 6.0 * d_.d3;
    auto gs = solve_ground_state(alpha, grid_, default_residual_tol(alpha), &guess);
    anchor_alpha_ = alpha;
    u0_ = gs.u();
    d_ = alpha_derivatives(*grid_, u0_, anchor_alpha_, 3);
}

SolitonFamily::Profile SolitonFamily::at(double alpha) {
    if (std::abs(alpha - anchor_alpha_) > step_) reanchor(alpha);
    const double dl = alpha - anchor_alpha_;
    Profile p;
    p.u = u0_ + dl * d_.d1 + 0.5 * dl * dl * d_.d2 + dl * dl * dl / 6.0 * d_.d3;
    p.du = d_.d1 + dl * d_.d2 + 0.5 * dl * dl * d_.d3;
    p.d2u = d_.d2 + dl * d_.d3;
    return p;
}

}  // namespace ssl
