#include "ssl/norms.hpp"

#include "ssl/operators.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace ssl {

namespace {

bool supported_p(double p) { return p == 2.0 || p == 6.0 || std::abs(p - 1.2) < 1e-14; }

struct SectorEigen {
    Vec values;
    Mat vectors;
};

// Orthonormal eigenbasis of -Delta_1 in u-space, shared per grid shape.
std::shared_ptr<const SectorEigen> sector1_eigen(const RadialGrid& g) {
    static std::mutex mu;
    static std::map<std::tuple<int, double>, std::shared_ptr<const SectorEigen>> cache;
    std::lock_guard lock(mu);
    auto key = std::make_tuple(g.n, g.r_max);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    Mat a = -Mat(laplacian_matrix(g));
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    auto e = std::make_shared<SectorEigen>(SectorEigen{es.eigenvalues().cwiseMax(0.0), es.eigenvectors()});
    cache.emplace(key, e);
    return e;
}

}  // namespace

double lebesgue_norm(const SectorField& f, double p) {
    const auto& g = *f.grid;
    Vec a = f.values.cwiseAbs().array().pow(p).matrix();
    return std::pow(g.solid_angle() * radial_integral(g, a), 1.0 / p);
}

SectorField fractional_derivative(const SectorField& f, double s) {
    const auto& g = *f.grid;
    if (g.l != 0) throw ParameterError("fractional_derivative: l = 0 only");
    SineTransform dst(g);
    CVec a = dst.analyze(to_u(g, f.values));
    a.array() *= dst.frequencies().array().pow(s).cast<cplx>();
    return SectorField(f.grid, from_u(g, dst.synthesize(a)));
}

double sobolev_norm(const SectorField& f, double s, double p) {
    if (s < 0.0 || s > 2.0) throw ParameterError("sobolev_norm: order must lie in [0, 2]");
    if (!supported_p(p)) throw ParameterError("sobolev_norm: p must be 2, 6 or 6/5");
    const auto& g = *f.grid;
    if (g.l == 1) {
        if (p != 2.0) throw ParameterError("sobolev_norm: l = 1 supports p = 2 only");
        auto e = sector1_eigen(g);
        CVec c = e->vectors.transpose().cast<cplx>() * to_u(g, f.values);
        // orthonormal eigenvectors in the Euclidean product; u-space measure is h
        double acc = 0.0;
        for (int k = 0; k < c.size(); ++k) acc += std::pow(e->values[k], s) * std::norm(c[k]);
        return std::sqrt(g.solid_angle() * g.h * acc);
    }
    if (s == 0.0) return lebesgue_norm(f, p);
    if (p == 2.0) {
        SineTransform dst(g);
        CVec a = dst.analyze(to_u(g, f.values));
        const Vec& xi = dst.frequencies();
        double acc = 0.0;
        for (int k = 0; k < a.size(); ++k) acc += std::pow(xi[k], 2.0 * s) * std::norm(a[k]);
        // integral of |sum a_k sin(xi_k r)|^2 over [0, L] is (L/2) sum |a_k|^2
        return std::sqrt(g.solid_angle() * 0.5 * g.box_length() * acc);
    }
    return lebesgue_norm(fractional_derivative(f, s), p);
}

double sobolev_norm(const Spinor& f, double s, double p) {
    const double a = sobolev_norm(f.upper, s, p);
    const double b = sobolev_norm(f.lower, s, p);
    return p == 2.0 ? std::hypot(a, b) : a + b;
}

}  // namespace ssl
