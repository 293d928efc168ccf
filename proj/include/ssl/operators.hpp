#pragma once

#include "ssl/core.hpp"

#include <Eigen/Sparse>

#include <array>

namespace ssl {

using SparseMat = Eigen::SparseMatrix<double>;

namespace stencil {
/// Centered 8th-order second-derivative weights, offsets 0..4.
inline constexpr std::array<double, 5> d2{-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
/// Centered 8th-order first-derivative weights, offsets 1..4 (antisymmetric).
inline constexpr std::array<double, 4> d1{4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
inline constexpr int radius = 4;
}  // namespace stencil

/// Neighbour of node index j (0-based) at the given offset, resolved with
/// the sector parity at r = 0 (l = 0 odd, l = 1 even) and odd reflection at
/// the ghost node (n+1)h. Returns index -1 when the sample vanishes.
struct Neighbour {
    int index;
    double sign;
};

inline Neighbour neighbour(int j, int offset, int n, int l) {
    int m = j + 1 + offset;  // node number, r = m h
    double sign = 1.0;
    if (m < 0) {
        m = -m;
        sign = l == 0 ? -1.0 : 1.0;
    }
    const int period = 2 * (n + 1);
    m %= period;
    if (m > n + 1) {
        m = period - m;
        sign = -sign;
    }
    if (m == 0 || m == n + 1) return {-1, 0.0};
    return {m - 1, sign};
}

template <class Derived>
typename Derived::Scalar sample(const Eigen::MatrixBase<Derived>& u, int j, int offset, int n, int l) {
    using S = typename Derived::Scalar;
    const auto nb = neighbour(j, offset, n, l);
    return nb.index < 0 ? S(0) : S(nb.sign) * u[nb.index];
}

/// Second derivative of u (u-space), with the parity handled per sector.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> second_derivative_u(const RadialGrid& g,
                                                                             const Eigen::MatrixBase<Derived>& u) {
    using S = typename Derived::Scalar;
    const int n = g.n;
    const double ih2 = 1.0 / (g.h * g.h);
    Eigen::Matrix<S, Eigen::Dynamic, 1> out(n);
    for (int j = 0; j < n; ++j) {
        S acc = stencil::d2[0] * u[j];
        for (int m = 1; m <= stencil::radius; ++m)
            acc += stencil::d2[m] * (sample(u, j, -m, n, g.l) + sample(u, j, m, n, g.l));
        out[j] = acc * ih2;
    }
    return out;
}

/// Discrete Delta_l acting on u = r f (returns r Delta_l f).
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> laplacian_u(const RadialGrid& g,
                                                                     const Eigen::MatrixBase<Derived>& u) {
    auto out = second_derivative_u(g, u);
    if (g.l == 1) out.array() -= 2.0 * u.array() / g.nodes.array().square();
    return out;
}

/// First derivative of u with the sector parity at 0.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> first_derivative_u(const RadialGrid& g,
                                                                            const Eigen::MatrixBase<Derived>& u) {
    using S = typename Derived::Scalar;
    const int n = g.n;
    Eigen::Matrix<S, Eigen::Dynamic, 1> out(n);
    for (int j = 0; j < n; ++j) {
        S acc = S(0);
        for (int m = 1; m <= stencil::radius; ++m)
            acc += stencil::d1[m - 1] * (sample(u, j, m, n, g.l) - sample(u, j, -m, n, g.l));
        out[j] = acc / g.h;
    }
    return out;
}

/// u-space matrix of Delta_l (symmetric, bandwidth 4).
SparseMat laplacian_matrix(const RadialGrid& g);

SectorField laplacian_apply(const SectorField& f);
/// d/dr of a sector field.
SectorField radial_derivative(const SectorField& f);

inline Vec to_u(const RadialGrid& g, const Vec& f) { return f.cwiseProduct(g.nodes); }
inline Vec from_u(const RadialGrid& g, const Vec& u) { return u.cwiseQuotient(g.nodes); }
inline CVec to_u(const RadialGrid& g, const CVec& f) { return f.cwiseProduct(g.nodes.cast<cplx>()); }
inline CVec from_u(const RadialGrid& g, const CVec& u) { return u.cwiseQuotient(g.nodes.cast<cplx>()); }

/// DST-I on the grid's n interior nodes. Coefficients a_k represent
/// u(r_j) = sum_k a_k sin(xi_k r_j) with xi_k = pi (k+1) / L.
class SineTransform {
public:
    explicit SineTransform(const RadialGrid& g);

    Vec analyze(const Vec& u) const;
    Vec synthesize(const Vec& a) const;
    CVec analyze(const CVec& u) const;
    CVec synthesize(const CVec& a) const;

    const Vec& frequencies() const { return xi_; }
    /// Eigenvalues of -d^2/dr^2 for the 8th-order stencil with odd reflections.
    const Vec& stencil_symbol() const { return symbol_; }
    int size() const { return n_; }

private:
    int n_;
    Vec xi_;
    Vec symbol_;
};

/// Raw DST-I (FFTW RODFT00), y_k = 2 sum_j x_j sin(pi (j+1)(k+1)/(n+1)).
void dst1(const double* in, double* out, int n);

}  // namespace ssl
