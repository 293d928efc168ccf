#pragma once

#include "ssl/core.hpp"

#include <vector>

namespace ssl {

/// Boundary value of a square root on the cut: which side of the negative
/// real axis w = kappa^2 is approached from.
enum class Side { none, upper, lower };

/// kappa = sqrt(w) with Re kappa >= 0. For w < 0 the side picks +i or -i.
cplx branch_sqrt(cplx w, Side side);

/// Integral operator u -> int_0^L G(r, s) u(s) ds with G the Green's function
/// of -d^2/dr^2 + l(l+1)/r^2 + kappa^2 on u = r f, regular at 0 and decaying
/// (or outgoing, Re kappa = 0) at infinity. l = 1 is supported at kappa = 0.
///
/// G = p(r_<) q(r_>); each cell [x_i, x_i + h] is integrated by product
/// quadrature against the 8-point Lagrange interpolant of u, with the same
/// parity extension as the finite-difference stencil.
class GreenOperator {
public:
    GreenOperator(const RadialGrid& g, cplx kappa);

    CVec apply(const CVec& u) const;
    /// Matrix of apply() on the node basis.
    CMat matrix() const;
    /// G(r, s) in closed form.
    cplx kernel(double r, double s) const;
    cplx kappa() const { return kappa_; }

private:
    int n_;
    int l_;
    double h_;
    cplx kappa_;
    cplx decay_;
    // per cell, 8 stencil weights for the forward and backward sweeps
    std::vector<std::array<cplx, 8>> wf_;
    std::vector<std::array<cplx, 8>> wb_;
    CVec out_f_;
    CVec out_b_;
};

}  // namespace ssl
