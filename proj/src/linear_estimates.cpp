#include "ssl/linear_estimates.hpp"

#include "ssl/norms.hpp"
#include "ssl/operators.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

namespace ssl {

const char* branch_name(Branch b) {
    switch (b) {
        case Branch::plus: return "+i0";
        case Branch::minus: return "-i0";
        default: return "none";
    }
}

std::array<cplx, 2> free_wavenumbers(double mu, cplx lambda, Branch b) {
    // lambda + i0 puts mu + lambda above the cut and mu - lambda below it
    const Side s1 = b == Branch::plus ? Side::upper : b == Branch::minus ? Side::lower : Side::none;
    const Side s2 = b == Branch::plus ? Side::lower : b == Branch::minus ? Side::upper : Side::none;
    return {branch_sqrt(mu + lambda, s1), branch_sqrt(mu - lambda, s2)};
}

std::array<cplx, 2> free_kernel_3d(double mu, cplx lambda, Branch b, double d) {
    if (d <= 0.0) throw ParameterError("free_kernel_3d: distance must be positive");
    const auto k = free_wavenumbers(mu, lambda, b);
    const double c = 1.0 / (4.0 * kPi * d);
    return {-c * std::exp(-k[0] * d), c * std::exp(-k[1] * d)};
}

namespace {

// sinh(k a) e^{-k b} / k for a <= b
cplx radial_green(cplx k, double a, double b) {
    if (std::abs(k * a) < 1e-4) {
        const cplx x2 = (k * a) * (k * a);
        return a * (1.0 + x2 / 6.0) * std::exp(-k * b);
    }
    return (std::exp(k * (a - b)) - std::exp(-k * (a + b))) / (2.0 * k);
}

}  // namespace

std::array<cplx, 2> free_kernel_radial(double mu, cplx lambda, Branch b, double r, double s) {
    if (r <= 0.0 || s <= 0.0) throw ParameterError("free_kernel_radial: radii must be positive");
    const auto k = free_wavenumbers(mu, lambda, b);
    const double lo = std::min(r, s), hi = std::max(r, s);
    return {-radial_green(k[0], lo, hi) / (r * s), radial_green(k[1], lo, hi) / (r * s)};
}

// ---------------------------------------------------------------- resolvents

Resolvent::Resolvent(const HamiltonianOperator& h, cplx lambda, Branch b)
    : grid_(h.grid), mu_(h.alpha * h.alpha), lambda_(lambda), branch_(b) {
    const auto& g = *grid_;
    if (g.l != 0) throw ParameterError("Resolvent: l = 0 only");
    const auto k = free_wavenumbers(mu_, lambda, b);
    green_[0] = -GreenOperator(g, k[0]).matrix();
    green_[1] = GreenOperator(g, k[1]).matrix();
    free_ = h.potential.size() == 0 || h.potential.cwiseAbs().maxCoeff() == 0.0;
    const int n = g.n;
    if (free_) return;
    // S = phi^2 [[2, e^{2i Gamma}], [e^{-2i Gamma}, 2]] = phi^2 U diag(3, 1) U^H
    const double cp = 0.5 * (std::sqrt(3.0) + 1.0), cm = 0.5 * (std::sqrt(3.0) - 1.0);
    const cplx e2 = std::polar(1.0, 2.0 * h.gamma);
    const Vec amp = h.potential.cwiseAbs().cwiseSqrt();
    sqrt_s_[0] = (cp * amp).cast<cplx>();
    sqrt_s_[1] = (cm * amp).cast<cplx>() * e2;
    sqrt_s_[2] = (cm * amp).cast<cplx>() * std::conj(e2);
    // K = V2 R0 V1, V2 = S^{1/2}, V1 = sigma_3 S^{1/2}
    CMat v2r0(2 * n, 2 * n);
    v2r0.topLeftCorner(n, n) = sqrt_s_[0].asDiagonal() * green_[0];
    v2r0.topRightCorner(n, n) = sqrt_s_[1].asDiagonal() * green_[1];
    v2r0.bottomLeftCorner(n, n) = sqrt_s_[2].asDiagonal() * green_[0];
    v2r0.bottomRightCorner(n, n) = sqrt_s_[0].asDiagonal() * green_[1];
    k_.resize(2 * n, 2 * n);
    const auto d = sqrt_s_[0].asDiagonal();
    const auto ur = sqrt_s_[1].asDiagonal();
    const auto ll = sqrt_s_[2].asDiagonal();
    k_.leftCols(n) = v2r0.leftCols(n) * d - v2r0.rightCols(n) * ll;
    k_.rightCols(n) = v2r0.leftCols(n) * ur - v2r0.rightCols(n) * d;
    CMat m = k_;
    m.diagonal().array() += 1.0;
    lu_.compute(m);
    rcond_ = lu_.rcond();
}

CVec Resolvent::apply_free_u(const CVec& u) const {
    const int n = grid_->n;
    CVec out(2 * n);
    out.head(n) = green_[0] * u.head(n);
    out.tail(n) = green_[1] * u.tail(n);
    return out;
}

CVec Resolvent::apply_u(const CVec& u) const {
    CVec r0 = apply_free_u(u);
    if (free_) return r0;
    const int n = grid_->n;
    // V2 R0 u
    CVec w(2 * n);
    w.head(n) = sqrt_s_[0].cwiseProduct(r0.head(n)) + sqrt_s_[1].cwiseProduct(r0.tail(n));
    w.tail(n) = sqrt_s_[2].cwiseProduct(r0.head(n)) + sqrt_s_[0].cwiseProduct(r0.tail(n));
    const CVec x = lu_.solve(w);
    const CVec resid = x + k_ * x - w;
    const double rel = resid.norm() / std::max(w.norm(), 1e-300);
    if (rel > 1e-8 || rcond_ < 1e-13)
        throw NearSingularError("Resolvent: Fredholm operator is numerically singular (resonance or eigenvalue)");
    // V1 x
    CVec v1x(2 * n);
    v1x.head(n) = sqrt_s_[0].cwiseProduct(x.head(n)) + sqrt_s_[1].cwiseProduct(x.tail(n));
    v1x.tail(n) = -(sqrt_s_[2].cwiseProduct(x.head(n)) + sqrt_s_[0].cwiseProduct(x.tail(n)));
    return r0 - apply_free_u(v1x);
}

namespace {

CVec spinor_to_u(const Spinor& f) {
    const auto& g = *f.grid();
    CVec u(2 * g.n);
    u.head(g.n) = to_u(g, f.upper.values);
    u.tail(g.n) = to_u(g, f.lower.values);
    return u;
}

Spinor u_to_spinor(const GridPtr& g, const CVec& u) {
    return {SectorField(g, from_u(*g, CVec(u.head(g->n)))), SectorField(g, from_u(*g, CVec(u.tail(g->n))))};
}

}  // namespace

Spinor Resolvent::apply_free(const Spinor& f) const { return u_to_spinor(grid_, apply_free_u(spinor_to_u(f))); }

Spinor Resolvent::apply(const Spinor& f) const { return u_to_spinor(grid_, apply_u(spinor_to_u(f))); }

CMat Resolvent::free_matrix() const {
    const int n = grid_->n;
    CMat m = CMat::Zero(2 * n, 2 * n);
    m.topLeftCorner(n, n) = green_[0];
    m.bottomRightCorner(n, n) = green_[1];
    return m;
}

CMat Resolvent::matrix() const {
    CMat r0 = free_matrix();
    if (free_) return r0;
    const int n = grid_->n;
    const auto d = sqrt_s_[0].asDiagonal();
    const auto ur = sqrt_s_[1].asDiagonal();
    const auto ll = sqrt_s_[2].asDiagonal();
    CMat v2r0(2 * n, 2 * n);
    v2r0.topRows(n) = d * r0.topRows(n) + ur * r0.bottomRows(n);
    v2r0.bottomRows(n) = ll * r0.topRows(n) + d * r0.bottomRows(n);
    CMat r0v1(2 * n, 2 * n);
    r0v1.leftCols(n) = r0.leftCols(n) * d - r0.rightCols(n) * ll;
    r0v1.rightCols(n) = r0.leftCols(n) * ur - r0.rightCols(n) * d;
    return r0 - r0v1 * lu_.solve(v2r0);
}

double Resolvent::fredholm_norm() const {
    if (free_) return 0.0;
    Eigen::BDCSVD<CMat> svd(k_);
    return svd.singularValues()[0];
}

double Resolvent::fredholm_min_sv() const {
    if (free_) return 1.0;
    CMat m = k_;
    m.diagonal().array() += 1.0;
    Eigen::BDCSVD<CMat> svd(m);
    return svd.singularValues().minCoeff();
}

Spinor free_resolvent_apply(const HamiltonianOperator& h, cplx lambda, Branch b, const Spinor& f) {
    HamiltonianOperator h0 = h;
    h0.potential = Vec::Zero(h.grid->n);
    return Resolvent(h0, lambda, b).apply_free(f);
}

Spinor perturbed_resolvent_apply(const HamiltonianOperator& h, cplx lambda, Branch b, const Spinor& f) {
    return Resolvent(h, lambda, b).apply(f);
}

// ---------------------------------------------------------------- weighted norms

Mat fractional_matrix_u(const RadialGrid& g, double s) {
    SineTransform dst(g);
    const Vec mult = dst.frequencies().array().pow(s).matrix();
    Mat m(g.n, g.n);
    Vec e = Vec::Zero(g.n);
    for (int j = 0; j < g.n; ++j) {
        e[j] = 1.0;
        m.col(j) = dst.synthesize(Vec(dst.analyze(e).cwiseProduct(mult)));
        e[j] = 0.0;
    }
    return m;
}

double power_norm_pq(const RadialGrid& g, const CMat& a, double p, double q, int starts, int iterations,
                     std::uint64_t seed) {
    const int n = g.n;
    if (a.rows() != 2 * n || a.cols() != 2 * n) throw ParameterError("power_norm_pq: expects a 2n x 2n matrix");
    // f-space measure and the conjugation u = r f
    Vec w(2 * n), r(2 * n);
    w << g.weights, g.weights;
    w *= g.solid_angle();
    r << g.nodes, g.nodes;
    const CMat af = r.cwiseInverse().cast<cplx>().asDiagonal() * a * r.cast<cplx>().asDiagonal();
    const CMat adj = w.cwiseInverse().cast<cplx>().asDiagonal() * af.adjoint() * w.cast<cplx>().asDiagonal();
    auto norm = [&](const CVec& x, double pp) {
        return std::pow(w.dot(Vec(x.cwiseAbs().array().pow(pp).matrix())), 1.0 / pp);
    };
    // x -> |x|^{p-2} x / ||x||_p^{p-1}, the norming functional
    auto dual = [&](const CVec& x, double pp) {
        const double nx = norm(x, pp);
        CVec out(x.size());
        for (int i = 0; i < x.size(); ++i) {
            const double m = std::abs(x[i]);
            out[i] = m == 0.0 ? cplx(0.0) : x[i] * std::pow(m / nx, pp - 2.0) / nx;
        }
        return out;
    };
    const double pd = p / (p - 1.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    double best = 0.0;
    for (int s = 0; s < starts; ++s) {
        CVec x(2 * n);
        for (int i = 0; i < 2 * n; ++i) x[i] = cplx(nd(rng), nd(rng)) * std::exp(-0.1 * r[i] * r[i]);
        x /= norm(x, p);
        double est = 0.0;
        for (int it = 0; it < iterations; ++it) {
            const CVec y = af * x;
            est = norm(y, q);
            if (est == 0.0) break;
            const CVec z = adj * dual(y, q);
            if (norm(z, pd) == 0.0) break;
            x = dual(z, pd);
            x /= norm(x, p);
        }
        best = std::max(best, est);
    }
    return best;
}

void ResolventSweep::write_csv(std::ostream& os) const {
    os << "lambda,branch,norm_est,fredholm_norm,fredholm_min_sv\n";
    for (std::size_t i = 0; i < lambdas.size(); ++i)
        os << format_number(lambdas[i]) << ',' << branch_name(branch) << ','
           << format_number(i < norms.size() ? norms[i] : 0.0) << ',' << format_number(fredholm_norms[i]) << ','
           << format_number(fredholm_min_sv[i]) << '\n';
}

std::vector<double> lap_lambda_grid(double mu, double lambda_max, int linear, int logarithmic) {
    if (lambda_max <= 4.0 * mu || linear < 2 || logarithmic < 1)
        throw ParameterError("lap_lambda_grid: need lambda_max > 4 mu and at least 2 + 1 points");
    std::vector<double> out;
    for (int i = 0; i < linear; ++i) out.push_back(mu + 3.0 * mu * i / (linear - 1));
    const double l0 = std::log(4.0 * mu), l1 = std::log(lambda_max);
    for (int i = 1; i <= logarithmic; ++i) out.push_back(std::exp(l0 + (l1 - l0) * i / logarithmic));
    return out;
}

ResolventSweep limiting_absorption_sweep(const HamiltonianOperator& h, const ProjectionSuite* pc,
                                         const std::vector<double>& lambdas, Branch b) {
    ResolventSweep out;
    out.lambdas = lambdas;
    out.branch = b;
    const auto& g = *h.grid;
    const int n = g.n;
    CMat dplus, dminus, pcm;
    if (pc) {
        const Mat d1 = fractional_matrix_u(g, 0.5);
        const Mat d2 = fractional_matrix_u(g, -0.5);
        dplus = CMat::Zero(2 * n, 2 * n);
        dminus = CMat::Zero(2 * n, 2 * n);
        dplus.topLeftCorner(n, n) = d1.cast<cplx>();
        dplus.bottomRightCorner(n, n) = d1.cast<cplx>();
        dminus.topLeftCorner(n, n) = d2.cast<cplx>();
        dminus.bottomRightCorner(n, n) = d2.cast<cplx>();
        const ContinuousProjector proj(*pc);
        pcm.resize(2 * n, 2 * n);
        CVec e = CVec::Zero(2 * n);
        for (int j = 0; j < 2 * n; ++j) {
            e[j] = 1.0;
            pcm.col(j) = proj.apply(e);
            e[j] = 0.0;
        }
        pcm = pcm * dminus;
    }
    for (double lam : lambdas) {
        const Resolvent res(h, lam, b);
        out.fredholm_norms.push_back(res.fredholm_norm());
        out.fredholm_min_sv.push_back(res.fredholm_min_sv());
        if (pc) {
            const CMat op = dplus * res.matrix() * pcm;
            out.norms.push_back(power_norm_pq(g, op, 6.0 / 5.0, 6.0, 3, 30));
        }
    }
    return out;
}

// ---------------------------------------------------------------- projected linear flow

ContinuousProjector::ContinuousProjector(const ProjectionSuite& suite) {
    const GridPtr& g = suite.spectral().f_plus.grid();
    const int n = g->n;
    CMat m(2 * n, 2 * n);
    CVec e = CVec::Zero(2 * n);
    for (int j = 0; j < 2 * n; ++j) {
        e[j] = 1.0;
        const Spinor z = u_to_spinor(g, e);
        m.col(j) = e - spinor_to_u(suite.p_c(z));
        e[j] = 0.0;
    }
    Eigen::ColPivHouseholderQR<CMat> qr(m);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    q_ = CMat(qr.householderQ()).leftCols(rank);
    b_ = q_.adjoint() * m;
}

CVec ContinuousProjector::apply(const CVec& u) const { return u - q_ * (b_ * u); }

CVec ContinuousProjector::apply_adjoint(const CVec& u) const { return u - b_.adjoint() * (q_.adjoint() * u); }

LinearPropagator::LinearPropagator(const HamiltonianOperator& h, double dt)
    : n_(h.grid->n), dt_(dt), mu_(h.alpha * h.alpha), dst_(std::make_shared<SineTransform>(*h.grid)) {
    if (h.grid->l != 0) throw ParameterError("LinearPropagator: l = 0 only");
    // Z_t = i V Z with V = phi^2 [[2, e^{2iG}], [-e^{-2iG}, -2]]; V^2 = 3 phi^4 I
    const double tau = 0.5 * dt;
    const cplx e2 = std::polar(1.0, 2.0 * h.gamma);
    for (auto& v : half_) v.resize(n_);
    for (int j = 0; j < n_; ++j) {
        const double p = h.potential.size() ? h.potential[j] : 0.0;
        const double th = std::sqrt(3.0) * tau * p;
        const double c = std::cos(th);
        const double sc = th == 0.0 ? tau : std::sin(th) / (std::sqrt(3.0) * p);
        // exp(i tau V) = cos(th) I + i V sin(th) / (sqrt 3 phi^2)
        half_[0][j] = c + kI * sc * 2.0 * p;
        half_[1][j] = kI * sc * p * e2;
        half_[2][j] = -kI * sc * p * std::conj(e2);
        half_[3][j] = c - kI * sc * 2.0 * p;
    }
}

void LinearPropagator::potential_half(CVec& u, bool adjoint) const {
    for (int j = 0; j < n_; ++j) {
        const cplx a = u[j], b = u[j + n_];
        if (!adjoint) {
            u[j] = half_[0][j] * a + half_[1][j] * b;
            u[j + n_] = half_[2][j] * a + half_[3][j] * b;
        } else {
            u[j] = std::conj(half_[0][j]) * a + std::conj(half_[2][j]) * b;
            u[j + n_] = std::conj(half_[1][j]) * a + std::conj(half_[3][j]) * b;
        }
    }
}

void LinearPropagator::kinetic(CVec& u, double a, bool adjoint) const {
    // upper: exp(i dt (-k^2 - mu + A)), lower: the conjugate phase
    const Vec& sym = dst_->stencil_symbol();
    const double sgn = adjoint ? -1.0 : 1.0;
    CVec up = dst_->analyze(CVec(u.head(n_)));
    CVec lo = dst_->analyze(CVec(u.tail(n_)));
    for (int k = 0; k < n_; ++k) {
        const double w = -sym[k] - mu_ + a;
        up[k] *= std::polar(1.0, sgn * dt_ * w);
        lo[k] *= std::polar(1.0, -sgn * dt_ * w);
    }
    u.head(n_) = dst_->synthesize(up);
    u.tail(n_) = dst_->synthesize(lo);
}

void LinearPropagator::step(CVec& u, double a) const {
    potential_half(u, false);
    kinetic(u, a, false);
    potential_half(u, false);
}

void LinearPropagator::step_adjoint(CVec& u, double a) const {
    potential_half(u, true);
    kinetic(u, a, true);
    potential_half(u, true);
}

nlohmann::json StrichartzLedger::to_json() const {
    return {{"data_norm", data_norm}, {"forcing_norm", forcing_norm}, {"sup_hhalf", sup_hhalf},
            {"l2w126", l2w126},       {"ratio", ratio}};
}

StrichartzLedger strichartz_monitor(const HamiltonianOperator& h, const ContinuousProjector& pc, const Spinor& z0,
                                    const StrichartzOptions& opt) {
    const GridPtr& g = h.grid;
    const int steps = static_cast<int>(std::lround(opt.horizon / opt.dt));
    if (steps < 1) throw ParameterError("strichartz_monitor: horizon shorter than one step");
    const double dt = opt.horizon / steps;
    const LinearPropagator prop(h, dt);
    auto a_at = [&](double t) { return opt.a ? opt.a(t) : 0.0; };
    StrichartzLedger led;
    CVec u = pc.apply(spinor_to_u(z0));
    auto norms = [&](const CVec& v) {
        const Spinor s = u_to_spinor(g, v);
        return std::array<double, 2>{hhalf_norm(s), sobolev_norm(s, 0.5, 6.0)};
    };
    auto nf = [&](double t) { return opt.forcing ? hhalf_norm(opt.forcing(t)) : 0.0; };
    auto [h0, w0] = norms(u);
    led.data_norm = h0;
    led.sup_hhalf = h0;
    double l2 = 0.0, prev_w = w0, prev_f = nf(0.0);
    for (int k = 0; k < steps; ++k) {
        const double t = k * dt;
        if (opt.forcing) u -= (kI * 0.5 * dt) * spinor_to_u(opt.forcing(t));
        prop.step(u, a_at(t + 0.5 * dt));
        if (opt.forcing) u -= (kI * 0.5 * dt) * spinor_to_u(opt.forcing(t + dt));
        u = pc.apply(u);
        auto [hh, ww] = norms(u);
        led.sup_hhalf = std::max(led.sup_hhalf, hh);
        l2 += 0.5 * dt * (prev_w * prev_w + ww * ww);
        prev_w = ww;
        const double f1 = nf(t + dt);
        led.forcing_norm += 0.5 * dt * (prev_f + f1);
        prev_f = f1;
    }
    led.l2w126 = std::sqrt(l2);
    const double den = led.data_norm + led.forcing_norm;
    led.ratio = den > 0.0 ? std::max(led.sup_hhalf, led.l2w126) / den : 0.0;
    return led;
}

Spinor random_smooth_spinor(const GridPtr& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> centre(0.0, 5.0), width(0.6, 1.6), amp(-1.0, 1.0);
    Spinor out{SectorField(g), SectorField(g)};
    for (SectorField* f : {&out.upper, &out.lower}) {
        for (int b = 0; b < 3; ++b) {
            const double c = centre(rng), w = width(rng);
            const cplx a(amp(rng), amp(rng));
            for (int j = 0; j < g->n; ++j) {
                const double r = g->nodes[j];
                // even in r so the field is smooth at the origin
                f->values[j] += a * (std::exp(-std::pow((r - c) / w, 2)) + std::exp(-std::pow((r + c) / w, 2)));
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- kernel comparison

namespace {

struct KernelOperator {
    const LinearPropagator& prop;
    const ContinuousProjector& pc;
    Vec weight;  // <r>^{-N}, both components
    int steps;
    double dt;
    double a;
    double period;

    double amp(int k) const {
        const double t = (k + 0.5) * dt;
        return (static_cast<long>(std::floor(t / period)) % 2 == 0) ? a : -a;
    }

    // F_0..F_{M-1} -> O_1..O_M
    std::vector<CVec> forward(const std::vector<CVec>& f) const {
        const int m = static_cast<int>(weight.size());
        CVec z = CVec::Zero(m), zt = CVec::Zero(m);
        std::vector<CVec> out(steps);
        for (int k = 0; k < steps; ++k) {
            const CVec in = dt * pc.apply(weight.cast<cplx>().cwiseProduct(f[k]));
            z += in;
            zt += in;
            prop.step(z, 0.0);
            prop.step(zt, amp(k));
            z = pc.apply(z);
            zt = pc.apply(zt);
            out[k] = weight.cast<cplx>().cwiseProduct(zt - z);
        }
        return out;
    }

    std::vector<CVec> adjoint(const std::vector<CVec>& o) const {
        const int m = static_cast<int>(weight.size());
        CVec mu = CVec::Zero(m), mut = CVec::Zero(m);
        std::vector<CVec> out(steps);
        for (int k = steps - 1; k >= 0; --k) {
            const CVec src = weight.cast<cplx>().cwiseProduct(o[k]);
            mu = pc.apply_adjoint(mu - src);
            mut = pc.apply_adjoint(mut + src);
            prop.step_adjoint(mu, 0.0);
            prop.step_adjoint(mut, amp(k));
            out[k] = dt * weight.cast<cplx>().cwiseProduct(pc.apply_adjoint(mu + mut));
        }
        return out;
    }
};

double total_norm(const std::vector<CVec>& v) {
    double s = 0.0;
    for (const auto& x : v) s += x.squaredNorm();
    return std::sqrt(s);
}

}  // namespace

std::vector<KernelRow> kernel_comparison(const HamiltonianOperator& h, const ContinuousProjector& pc,
                                         const std::vector<double>& amplitudes, const KernelOptions& opt) {
    const auto& g = *h.grid;
    const int steps = static_cast<int>(std::lround(opt.horizon / opt.dt));
    const double dt = opt.horizon / steps;
    const LinearPropagator prop(h, dt);
    Vec weight(2 * g.n);
    for (int j = 0; j < g.n; ++j) weight[j] = weight[j + g.n] = std::pow(1.0 + g.nodes[j] * g.nodes[j], -0.5 * opt.weight_power);
    std::vector<KernelRow> rows;
    for (double a : amplitudes) {
        KernelRow row{a, 0.0};
        if (a != 0.0) {
            const KernelOperator op{prop, pc, weight, steps, dt, a, opt.switch_period};
            std::mt19937_64 rng(opt.seed);
            std::normal_distribution<double> nd;
            std::vector<CVec> f(steps, CVec(2 * g.n));
            for (auto& x : f)
                for (int i = 0; i < x.size(); ++i) x[i] = cplx(nd(rng), nd(rng));
            double nf = total_norm(f);
            for (auto& x : f) x /= nf;
            double est = 0.0;
            for (int it = 0; it < opt.iterations; ++it) {
                const auto o = op.forward(f);
                est = total_norm(o);
                f = op.adjoint(o);
                nf = total_norm(f);
                if (nf == 0.0) break;
                for (auto& x : f) x /= nf;
            }
            row.norm = est;
        }
        rows.push_back(row);
    }
    return rows;
}

EnvelopeFit fit_envelope(const std::vector<KernelRow>& rows) {
    EnvelopeFit fit;
    std::vector<KernelRow> sorted = rows;
    std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.amplitude < b.amplitude; });
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0 && sorted[i].norm < sorted[i - 1].norm) fit.monotone = false;
        if (sorted[i].amplitude <= 0.0 || sorted[i].norm <= 0.0) continue;
        const double x = std::log(sorted[i].amplitude), y = std::log(sorted[i].norm);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
        ++m;
    }
    if (m >= 2) fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    if (sorted.empty() || sorted.back().amplitude <= 0.0) return fit;
    fit.constant = sorted.back().norm / std::pow(sorted.back().amplitude, 0.2);
    for (const auto& r : sorted)
        if (r.norm > fit.constant * std::pow(r.amplitude, 0.2) * (1.0 + 1e-12)) fit.bounded = false;
    return fit;
}

}  // namespace ssl
