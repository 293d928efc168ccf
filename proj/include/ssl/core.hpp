#pragma once

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ssl {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Shortest round-trip decimal form of x; never consults the C locale.
std::string format_number(double x);

class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Uniform radial grid r_j = j h, j = 1..n, h = r_max / n, for one
/// spherical-harmonic sector. The Dirichlet ghost node sits at (n+1) h.
struct RadialGrid {
    double r_max = 0.0;
    int n = 0;
    int l = 0;
    double h = 0.0;
    Vec nodes;
    /// Weights for the integral of g(r) r^2 dr over [0, r_max].
    Vec weights;
    /// Same weights divided by r_j^2, for integrals of u v dr with u = r f.
    Vec u_weights;

    double box_length() const { return (n + 1) * h; }
    /// Angular measure of the sector basis function (Y_0 = 1, Y_1 = x_k / r).
    double solid_angle() const { return l == 0 ? 4.0 * kPi : 4.0 * kPi / 3.0; }
};

using GridPtr = std::shared_ptr<const RadialGrid>;

GridPtr make_grid(double r_max, int n, int l);
/// Same r_max and n in another sector.
GridPtr with_sector(const GridPtr& g, int l);

struct SectorField {
    GridPtr grid;
    CVec values;

    SectorField() = default;
    SectorField(GridPtr g, CVec v);
    explicit SectorField(GridPtr g);

    int size() const { return static_cast<int>(values.size()); }
    bool is_finite() const { return values.allFinite(); }
};

SectorField real_field(const GridPtr& g, const Vec& v);

/// Two-component field (upper, lower). Physical spinors have lower = conj(upper).
struct Spinor {
    SectorField upper;
    SectorField lower;

    static Spinor physical(const SectorField& w);
    static Spinor physical(const GridPtr& g, const CVec& w);
    const GridPtr& grid() const { return upper.grid; }
    int size() const { return upper.size(); }
    double symmetry_defect() const;
};

Spinor operator+(const Spinor& a, const Spinor& b);
Spinor operator-(const Spinor& a, const Spinor& b);
Spinor operator*(cplx c, const Spinor& a);
/// sigma_3 F
Spinor sigma3(const Spinor& a);
/// sigma_2 conj(F) with the convention that physical spinors are fixed points.
Spinor sigma2_conj(const Spinor& a);

/// Integral of f conj(g) over R^3 (angular factor of the sector included).
cplx integrate_product(const SectorField& f, const SectorField& g);
/// Integral of g(r) r^2 dr on the grid (no angular factor).
double radial_integral(const RadialGrid& g, const Vec& values);
/// <F, G> = integral of F1 conj(G1) + F2 conj(G2) over R^3.
cplx pairing(const Spinor& f, const Spinor& g);

void check_same_grid(const SectorField& a, const SectorField& b);

}  // namespace ssl
