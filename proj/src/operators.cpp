#include "ssl/operators.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace ssl {

namespace {

std::mutex plan_mutex;

fftw_plan dst_plan(int n) {
    static std::map<int, fftw_plan> plans;
    std::lock_guard lock(plan_mutex);
    auto it = plans.find(n);
    if (it != plans.end()) return it->second;
    std::vector<double> a(n), b(n);
    fftw_plan p = fftw_plan_r2r_1d(n, a.data(), b.data(), FFTW_RODFT00, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans.emplace(n, p);
    return p;
}

}  // namespace

void dst1(const double* in, double* out, int n) {
    fftw_plan p = dst_plan(n);
    fftw_execute_r2r(p, const_cast<double*>(in), out);
}

SparseMat laplacian_matrix(const RadialGrid& g) {
    const int n = g.n;
    const double ih2 = 1.0 / (g.h * g.h);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(n) * 9);
    for (int j = 0; j < n; ++j) {
        double diag = stencil::d2[0] * ih2;
        if (g.l == 1) diag -= 2.0 / (g.nodes[j] * g.nodes[j]);
        trips.emplace_back(j, j, diag);
        for (int m = 1; m <= stencil::radius; ++m) {
            for (int off : {-m, m}) {
                auto nb = neighbour(j, off, n, g.l);
                if (nb.index >= 0) trips.emplace_back(j, nb.index, nb.sign * stencil::d2[m] * ih2);
            }
        }
    }
    SparseMat a(n, n);
    a.setFromTriplets(trips.begin(), trips.end());
    return a;
}

SectorField laplacian_apply(const SectorField& f) {
    const auto& g = *f.grid;
    CVec u = to_u(g, f.values);
    return SectorField(f.grid, from_u(g, laplacian_u(g, u)));
}

SectorField radial_derivative(const SectorField& f) {
    const auto& g = *f.grid;
    CVec u = to_u(g, f.values);
    CVec du = first_derivative_u(g, u);
    // f' = (u' - f) / r
    return SectorField(f.grid, (du - f.values).cwiseQuotient(g.nodes.cast<cplx>()));
}

SineTransform::SineTransform(const RadialGrid& g) : n_(g.n), xi_(g.n), symbol_(g.n) {
    const double len = g.box_length();
    for (int k = 0; k < n_; ++k) {
        xi_[k] = kPi * (k + 1) / len;
        const double theta = kPi * (k + 1) / (n_ + 1);
        double s = stencil::d2[0];
        for (int m = 1; m <= stencil::radius; ++m) s += 2.0 * stencil::d2[m] * std::cos(m * theta);
        symbol_[k] = -s / (g.h * g.h);
    }
}

Vec SineTransform::analyze(const Vec& u) const {
    Vec a(n_);
    dst1(u.data(), a.data(), n_);
    return a / (n_ + 1);
}

Vec SineTransform::synthesize(const Vec& a) const {
    Vec u(n_);
    dst1(a.data(), u.data(), n_);
    return 0.5 * u;
}

CVec SineTransform::analyze(const CVec& u) const {
    Vec re = analyze(Vec(u.real()));
    Vec im = analyze(Vec(u.imag()));
    CVec out(n_);
    out.real() = re;
    out.imag() = im;
    return out;
}

CVec SineTransform::synthesize(const CVec& a) const {
    Vec re = synthesize(Vec(a.real()));
    Vec im = synthesize(Vec(a.imag()));
    CVec out(n_);
    out.real() = re;
    out.imag() = im;
    return out;
}

}  // namespace ssl
