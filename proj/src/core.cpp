#include "ssl/core.hpp"

#include <charconv>
#include <cmath>

namespace ssl {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

GridPtr make_grid(double r_max, int n, int l) {
    if (!(r_max > 0.0) || !std::isfinite(r_max)) throw ParameterError("make_grid: r_max must be positive");
    if (n < 16) throw ParameterError("make_grid: n must be at least 16");
    if (l != 0 && l != 1) throw ParameterError("make_grid: sector l must be 0 or 1");
    auto g = std::make_shared<RadialGrid>();
    g->r_max = r_max;
    g->n = n;
    g->l = l;
    g->h = r_max / n;
    g->nodes.resize(n);
    for (int j = 0; j < n; ++j) g->nodes[j] = (j + 1) * g->h;
    // trapezoid with the even extension at 0 and Gregory weights at r_max
    Vec c = Vec::Ones(n);
    c[n - 1] = 3.0 / 8.0;
    c[n - 2] = 7.0 / 6.0;
    c[n - 3] = 23.0 / 24.0;
    g->u_weights = g->h * c;
    g->weights = g->u_weights.cwiseProduct(g->nodes.cwiseAbs2());
    return g;
}

GridPtr with_sector(const GridPtr& g, int l) {
    if (g->l == l) return g;
    return make_grid(g->r_max, g->n, l);
}

SectorField::SectorField(GridPtr g, CVec v) : grid(std::move(g)), values(std::move(v)) {
    if (!grid) throw ParameterError("SectorField: null grid");
    if (values.size() != grid->n) throw ParameterError("SectorField: length does not match grid");
}

SectorField::SectorField(GridPtr g) : grid(std::move(g)) {
    if (!grid) throw ParameterError("SectorField: null grid");
    values = CVec::Zero(grid->n);
}

SectorField real_field(const GridPtr& g, const Vec& v) { return SectorField(g, v.cast<cplx>()); }

Spinor Spinor::physical(const SectorField& w) { return Spinor{w, SectorField(w.grid, w.values.conjugate())}; }

Spinor Spinor::physical(const GridPtr& g, const CVec& w) { return physical(SectorField(g, w)); }

double Spinor::symmetry_defect() const { return (lower.values - upper.values.conjugate()).cwiseAbs().maxCoeff(); }

void check_same_grid(const SectorField& a, const SectorField& b) {
    if (a.grid != b.grid && (a.grid->n != b.grid->n || a.grid->r_max != b.grid->r_max || a.grid->l != b.grid->l))
        throw ParameterError("field grids differ");
}

Spinor operator+(const Spinor& a, const Spinor& b) {
    check_same_grid(a.upper, b.upper);
    return {SectorField(a.grid(), a.upper.values + b.upper.values), SectorField(a.grid(), a.lower.values + b.lower.values)};
}

Spinor operator-(const Spinor& a, const Spinor& b) {
    check_same_grid(a.upper, b.upper);
    return {SectorField(a.grid(), a.upper.values - b.upper.values), SectorField(a.grid(), a.lower.values - b.lower.values)};
}

Spinor operator*(cplx c, const Spinor& a) {
    return {SectorField(a.grid(), c * a.upper.values), SectorField(a.grid(), c * a.lower.values)};
}

Spinor sigma3(const Spinor& a) { return {a.upper, SectorField(a.grid(), -a.lower.values)}; }

Spinor sigma2_conj(const Spinor& a) {
    return {SectorField(a.grid(), a.lower.values.conjugate()), SectorField(a.grid(), a.upper.values.conjugate())};
}

double radial_integral(const RadialGrid& g, const Vec& values) { return g.weights.dot(values); }

cplx integrate_product(const SectorField& f, const SectorField& g) {
    check_same_grid(f, g);
    const auto& w = f.grid->weights;
    cplx s = 0.0;
    for (int j = 0; j < f.size(); ++j) s += w[j] * f.values[j] * std::conj(g.values[j]);
    return f.grid->solid_angle() * s;
}

cplx pairing(const Spinor& f, const Spinor& g) {
    return integrate_product(f.upper, g.upper) + integrate_product(f.lower, g.lower);
}

}  // namespace ssl
