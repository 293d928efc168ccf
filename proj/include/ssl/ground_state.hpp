#pragma once

#include "ssl/core.hpp"
#include "ssl/operators.hpp"

namespace ssl {

/// Positive radial solution of -Delta phi + alpha^2 phi = phi^3.
struct GroundState {
    double alpha = 1.0;
    SectorField phi;
    /// sup over nodes of the equation residual
    double residual = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    double hhalf_norm = 0.0;

    /// r phi on the grid
    Vec u() const;
    const GridPtr& grid() const { return phi.grid; }
};

struct Functionals {
    double mass = 0.0;
    double energy = 0.0;
    double hhalf_norm = 0.0;
    double gradient_sq = 0.0;  ///< integral of |grad psi|^2
    double quartic = 0.0;      ///< integral of |psi|^4
};

/// Residual target used by the cached and family solves: 1e-10 at alpha <= 1,
/// scaled by alpha^3 above (the equation's size grows like alpha^3 and the
/// stencil rounding floor with it).
double default_residual_tol(double alpha);

/// Petviashvili iteration in the sine basis followed by Newton polishing.
/// initial_u, when given, replaces the Gaussian starting profile.
GroundState solve_ground_state(double alpha, const GridPtr& grid, double tol = 1e-10, const Vec* initial_u = nullptr);

/// Mass, energy (1/2 |grad|^2 - 1/4 |psi|^4) and Hdot^{1/2} norm.
Functionals conserved_functionals(const SectorField& psi);
Functionals conserved_functionals(const Spinor& psi);

struct GnsCheck {
    double derivative = 0.0;
    double scale = 0.0;
    bool stationary(double rel = 1e-6) const { return std::abs(derivative) < rel * scale; }
};

/// Centered difference of F = M E along h (radial fields carry no momentum).
GnsCheck gns_stationarity_check(const SectorField& phi, const SectorField& h, double eps = 1e-4);

/// sup_j |(-Delta phi + alpha^2 phi - phi^3)(r_j)| for u = r phi.
double ground_state_residual(const RadialGrid& g, const Vec& u, double alpha);

/// -Delta + alpha^2 - c phi^2 in u-space (c = 3 gives L+, c = 1 gives L-).
SparseMat linearized_matrix(const RadialGrid& g, const Vec& u, double alpha, double c);

/// Derivatives of u = r phi with respect to alpha along the discrete family,
/// from solves with L+.
struct AlphaDerivatives {
    Vec d1;
    Vec d2;
    Vec d3;
};
AlphaDerivatives alpha_derivatives(const RadialGrid& g, const Vec& u, double alpha, int order = 3);

/// Ground-state profiles at nearby alpha, from a third-order Taylor
/// expansion around an anchor that is re-solved when alpha drifts too far.
class SolitonFamily {
public:
    SolitonFamily(GridPtr grid, const GroundState& anchor, double reanchor_step = 2e-4);

    struct Profile {
        Vec u;        ///< r phi(., alpha)
        Vec du;       ///< r d/dalpha phi
        Vec d2u;      ///< r d^2/dalpha^2 phi
    };
    Profile at(double alpha);
    double anchor_alpha() const { return anchor_alpha_; }
    const GridPtr& grid() const { return grid_; }

private:
    void reanchor(double alpha);

    GridPtr grid_;
    double step_;
    double anchor_alpha_;
    Vec u0_;
    AlphaDerivatives d_;
};

}  // namespace ssl
