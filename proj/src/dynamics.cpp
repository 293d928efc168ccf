#include "ssl/dynamics.hpp"

#include "ssl/norms.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdio>
#include <ostream>

namespace ssl {

Vec sponge_profile(const RadialGrid& g, const SpongeOptions& opt) {
    if (opt.fraction <= 0.0 || opt.fraction >= 1.0 || opt.strength < 0.0)
        throw ParameterError("sponge: fraction must lie in (0, 1) and strength be nonnegative");
    const double rs = (1.0 - opt.fraction) * g.r_max;
    Vec gam = Vec::Zero(g.n);
    for (int j = 0; j < g.n; ++j) {
        const double s = (g.nodes[j] - rs) / (g.r_max - rs);
        if (s > 0.0) gam[j] = opt.strength * s * s * s;
    }
    return gam;
}

void Trajectory::write_csv(std::ostream& os) const {
    os << "t,mass,energy,hhalf,w126_running,absorbed_mass,absorbed_energy,sup,classification\n";
    for (const auto& row : ledger) {
        for (double v : {row.t, row.mass, row.energy, row.hhalf, row.w126_running, row.absorbed, row.absorbed_energy, row.sup})
            os << format_number(v) << ',';
        os << classification << '\n';
    }
}

namespace {

LedgerRow make_row(double t, const SectorField& psi, double absorbed, double absorbed_energy) {
    auto f = conserved_functionals(psi);
    LedgerRow row;
    row.t = t;
    row.mass = f.mass;
    row.energy = f.energy;
    row.hhalf = f.hhalf_norm;
    row.absorbed = absorbed;
    row.absorbed_energy = absorbed_energy;
    row.sup = psi.values.cwiseAbs().maxCoeff();
    return row;
}

// mass and energy only (conserved_functionals also transforms for the Hdot^1/2 norm)
std::pair<double, double> mass_energy(const RadialGrid& g, const CVec& psi) {
    const CVec u = to_u(g, psi);
    const double omega = g.solid_angle();
    const double grad = -omega * g.h * u.dot(laplacian_u(g, u)).real();
    const Vec rho = psi.cwiseAbs2();
    return {omega * radial_integral(g, rho), 0.5 * grad - 0.25 * omega * radial_integral(g, rho.cwiseAbs2())};
}

void nonlinear_phase(CVec& psi, double dt) {
    for (Eigen::Index j = 0; j < psi.size(); ++j) psi[j] *= std::exp(kI * (std::norm(psi[j]) * dt));
}

}  // namespace

Trajectory evolve_nls(const SectorField& psi0, double t_end, double dt, const EvolveOptions& opt) {
    const auto& g = *psi0.grid;
    if (g.l != 0) throw ParameterError("evolve_nls: radial (l = 0) data only");
    if (!(dt > 0.0) || !(t_end >= 0.0)) throw ParameterError("evolve_nls: need dt > 0 and t_end >= 0");
    if (!psi0.is_finite()) throw ParameterError("evolve_nls: non-finite initial data");

    const SineTransform st(g);
    const Vec& sym = st.stencil_symbol();
    const Vec gam = opt.sponge ? sponge_profile(g, opt.sponge_opt) : Vec::Zero(g.n);
    const Vec r = g.nodes;
    const double sup0 = psi0.values.cwiseAbs().maxCoeff();
    const double sample = opt.sample_every > 0.0 ? opt.sample_every : t_end;

    Trajectory traj;
    CVec psi = psi0.values;
    double t = 0.0;
    double absorbed = 0.0;
    double absorbed_energy = 0.0;
    double w126_sq = 0.0;
    double w126_prev = sobolev_norm(psi0, 0.5, 6.0);

    auto record = [&](double time) {
        SectorField f(psi0.grid, psi);
        auto row = make_row(time, f, absorbed, absorbed_energy);
        const double w = sobolev_norm(f, 0.5, 6.0);
        if (!traj.times.empty()) w126_sq += 0.5 * (time - traj.times.back()) * (w * w + w126_prev * w126_prev);
        w126_prev = w;
        row.w126_running = std::sqrt(w126_sq);
        traj.times.push_back(time);
        traj.ledger.push_back(row);
        if (opt.keep_states) traj.states.push_back(std::move(f));
    };
    record(0.0);

    int k_sample = 1;
    while (t < t_end * (1.0 - 1e-14)) {
        const double target = std::min(k_sample * sample, t_end);
        double step = dt;
        if (opt.adaptive) {
            const double peak = psi.cwiseAbs2().maxCoeff();
            if (peak > 0.0) step = std::min(step, opt.phase_cap / peak);
            if (step < opt.dt_min) {
                traj.classification = "resolution limit";
                traj.exit_time = t;
                record(t);
                return traj;
            }
        }
        if (t + step > target - 1e-12 * dt) step = target - t;

        nonlinear_phase(psi, 0.5 * step);
        CVec a = st.analyze(CVec(psi.cwiseProduct(r.cast<cplx>())));
        for (int k = 0; k < g.n; ++k) a[k] *= std::exp(-kI * (sym[k] * step));
        psi = st.synthesize(a).cwiseQuotient(r.cast<cplx>());
        nonlinear_phase(psi, 0.5 * step);
        if (opt.sponge) {
            const auto [m0, e0] = mass_energy(g, psi);
            for (int j = 0; j < g.n; ++j) psi[j] *= std::exp(-gam[j] * step);
            const auto [m1, e1] = mass_energy(g, psi);
            absorbed += m0 - m1;
            absorbed_energy += e0 - e1;
        }
        t += step;
        ++traj.steps;

        if (!psi.allFinite() || psi.cwiseAbs().maxCoeff() > opt.blowup_factor * sup0) {
            traj.classification = "focusing exit";
            traj.exit_time = t;
            if (psi.allFinite()) record(t);
            return traj;
        }
        if (t >= target - 1e-12 * dt) {
            t = target;
            record(t);
            ++k_sample;
        }
    }
    traj.exit_time = t;
    return traj;
}

Spinor nonlinearity_N(const Spinor& r, const Spinor& w) {
    check_same_grid(r.upper, w.upper);
    check_same_grid(r.lower, w.lower);
    const int n = r.size();
    CVec up(n), lo(n);
    for (int j = 0; j < n; ++j) {
        const cplx a = r.upper.values[j];
        const cplx b = w.upper.values[j];
        const double m = std::norm(a);
        up[j] = -m * a - a * a * std::conj(b) - 2.0 * m * b;
        lo[j] = m * std::conj(a) + std::conj(a) * std::conj(a) * b + 2.0 * m * std::conj(b);
    }
    return {SectorField(r.grid(), up), SectorField(r.grid(), lo)};
}

// ---------------------------------------------------------------- modulation

SolitonParams ModulationState::params() const {
    SolitonParams p;
    p.alpha = alpha;
    p.gamma = wrap_phase(theta + gamma);
    return p;
}

Spinor ModulationState::remainder(const GridPtr& grid) const {
    const int n = grid->n;
    const cplx rot = std::exp(kI * (theta + gamma));
    CVec z(n);
    for (int j = 0; j < n; ++j) z[j] = rot * cplx(y[j], y[n + j]) / grid->nodes[j];
    return Spinor::physical(grid, z);
}

void cubic_forcing_u(const RadialGrid& g, const Vec& phi_u, const Vec& a_u, const Vec& b_u, Vec& re_u, Vec& im_u) {
    const int n = g.n;
    re_u.resize(n);
    im_u.resize(n);
    for (int j = 0; j < n; ++j) {
        const double r = g.nodes[j];
        const cplx z(a_u[j] / r, b_u[j] / r);
        const double phi = phi_u[j] / r;
        const double m = std::norm(z);
        const cplx n1 = -(m * z + z * z * phi + 2.0 * m * phi);
        re_u[j] = r * n1.real();
        im_u[j] = r * n1.imag();
    }
}

ModulationStepper::ModulationStepper(GridPtr grid, double alpha0, const ModulationOptions& opt)
    : grid_(std::move(grid)),
      alpha0_(alpha0),
      opt_(opt),
      family_(grid_, *cached_ground_state(alpha0, grid_)) {
    const auto& g = *grid_;
    if (g.l != 0) throw ParameterError("ModulationStepper: radial grid required");
    if (g.n > 512) throw ParameterError("ModulationStepper: dense propagator limited to n <= 512");
    if (!(opt.dt > 0.0)) throw ParameterError("ModulationStepper: dt must be positive");
    const auto gs = cached_ground_state(alpha0, grid_);
    const Vec u0 = gs->u();
    phi0_sq_ = u0.cwiseQuotient(g.nodes).cwiseAbs2();

    const int n = g.n;
    const Mat lap = Mat(laplacian_matrix(g));
    t_ = Mat::Zero(2 * n, 2 * n);
    Mat lminus = -lap;
    Mat lplus = -lap;
    for (int j = 0; j < n; ++j) {
        lminus(j, j) += alpha0 * alpha0 - phi0_sq_[j];
        lplus(j, j) += alpha0 * alpha0 - 3.0 * phi0_sq_[j];
    }
    t_.topRightCorner(n, n) = lminus;
    t_.bottomLeftCorner(n, n) = -lplus;
    if (opt.sponge) {
        const Vec gam = sponge_profile(g, opt.sponge_opt);
        for (int j = 0; j < n; ++j) {
            t_(j, j) -= gam[j];
            t_(n + j, n + j) -= gam[j];
        }
    }
    half_ = (0.5 * opt.dt * t_).exp();
}

ModulationStepper::Local ModulationStepper::profiles(double alpha) {
    if (!(alpha > kAlphaMin && alpha < kAlphaMax)) throw ModulationBreakdown("modulation: alpha left the admissible range");
    auto p = family_.at(alpha);
    return {std::move(p.u), std::move(p.du), std::move(p.d2u)};
}

Eigen::Vector2d ModulationStepper::solve_rates(const Vec& y, double /*alpha*/, const Local& loc) const {
    const auto& g = *grid_;
    const int n = g.n;
    const auto a = y.head(n);
    const auto b = y.tail(n);
    const Vec& w = g.u_weights;
    auto dot = [&](const auto& f, const auto& h) { return (w.array() * f.array() * h.array()).sum(); };
    Vec re, im;
    cubic_forcing_u(g, loc.u, a, b, re, im);
    Eigen::Matrix2d m;
    m(0, 0) = dot(loc.du, a) - dot(loc.u, loc.du);
    m(0, 1) = dot(loc.u, b);
    m(1, 0) = dot(loc.d2u, b);
    m(1, 1) = -dot(loc.du, a) - dot(loc.du, loc.u);
    const Eigen::Vector2d rhs(-dot(loc.u, im), dot(loc.du, re));
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(m);
    const auto s = svd.singularValues();
    if (!(s[1] > 0.0) || s[0] / s[1] > opt_.max_condition)
        throw ModulationBreakdown("modulation: Gram system ill-conditioned");
    return m.partialPivLu().solve(rhs);
}

Vec ModulationStepper::forcing(const Vec& y, double alpha, const Local& loc, const Eigen::Vector2d& rates) const {
    const auto& g = *grid_;
    const int n = g.n;
    const auto a = y.head(n);
    const auto b = y.tail(n);
    Vec re, im;
    cubic_forcing_u(g, loc.u, a, b, re, im);
    const double da2 = alpha * alpha - alpha0_ * alpha0_;
    const Vec dv = loc.u.cwiseQuotient(g.nodes).cwiseAbs2() - phi0_sq_;
    const double ad = rates[0];
    const double gd = rates[1];
    Vec out(2 * n);
    out.head(n) = (da2 - dv.array()).matrix().cwiseProduct(b) + gd * b - ad * loc.du + im;
    out.tail(n) = -(da2 - 3.0 * dv.array()).matrix().cwiseProduct(a) - gd * a - gd * loc.u - re;
    return out;
}

ModulationState ModulationStepper::initial(const Spinor& r0, const SolitonParams& p0) const {
    if (!p0.radial()) throw ParameterError("ModulationStepper: radial parameters only");
    if (r0.grid()->n != grid_->n || r0.grid()->r_max != grid_->r_max || r0.grid()->l != 0)
        throw ParameterError("ModulationStepper: data on a different grid");
    const int n = grid_->n;
    ModulationState s;
    s.alpha = p0.alpha;
    s.gamma = p0.gamma;
    s.y.resize(2 * n);
    const cplx rot = std::exp(-kI * p0.gamma);
    for (int j = 0; j < n; ++j) {
        const cplx z = rot * r0.upper.values[j] * grid_->nodes[j];
        s.y[j] = z.real();
        s.y[n + j] = z.imag();
    }
    return s;
}

Eigen::Vector2d ModulationStepper::rates(const ModulationState& s) {
    return solve_rates(s.y, s.alpha, profiles(s.alpha));
}

Eigen::Vector2d ModulationStepper::orthogonality(const ModulationState& s) {
    const auto& g = *grid_;
    const int n = g.n;
    const auto loc = profiles(s.alpha);
    const Vec& w = g.u_weights;
    const double omega = g.solid_angle();
    const double pa = -2.0 * omega * (w.array() * loc.u.array() * s.y.head(n).array()).sum();
    const double pg = 2.0 * omega * (w.array() * loc.du.array() * s.y.tail(n).array()).sum();
    return {pa, pg};
}

Vec ModulationStepper::real_forcing(const ModulationState& s) {
    const auto loc = profiles(s.alpha);
    return forcing(s.y, s.alpha, loc, solve_rates(s.y, s.alpha, loc));
}

CVec ModulationStepper::free_forcing(const ModulationState& s) {
    const auto& g = *grid_;
    const int n = g.n;
    const auto loc = profiles(s.alpha);
    const Eigen::Vector2d rt = solve_rates(s.y, s.alpha, loc);
    Vec re, im;
    cubic_forcing_u(g, loc.u, s.y.head(n), s.y.tail(n), re, im);
    const cplx rot = std::exp(kI * (s.theta + s.gamma));
    CVec out(n);
    for (int j = 0; j < n; ++j) {
        const double r = g.nodes[j];
        const cplx z(s.y[j] / r, s.y[n + j] / r);
        const double phi = loc.u[j] / r;
        const cplx val = -2.0 * phi * phi * z - phi * phi * std::conj(z) + rt[1] * phi - kI * (rt[0] * loc.du[j] / r) +
                         cplx(re[j], im[j]) / r;
        out[j] = rot * val;
    }
    return out;
}

void ModulationStepper::step(ModulationState& s, std::array<Vec, 4>* stage_forcing) {
    const double h = opt_.dt;
    struct Stage {
        Vec g;
        Eigen::Vector2d rt;
    };
    auto eval = [&](const Vec& y, double alpha) {
        const auto loc = profiles(alpha);
        Stage st;
        st.rt = solve_rates(y, alpha, loc);
        st.g = forcing(y, alpha, loc, st.rt);
        return st;
    };
    const Stage k1 = eval(s.y, s.alpha);
    const Vec ey = half_ * s.y;
    const Vec ek1 = half_ * k1.g;
    const double a2 = s.alpha + 0.5 * h * k1.rt[0];
    const Stage k2 = eval(ey + 0.5 * h * ek1, a2);
    const double a3 = s.alpha + 0.5 * h * k2.rt[0];
    const Stage k3 = eval(ey + 0.5 * h * k2.g, a3);
    const double a4 = s.alpha + h * k3.rt[0];
    const Stage k4 = eval(half_ * (ey + h * k3.g), a4);

    if (stage_forcing) *stage_forcing = {k1.g, k2.g, k3.g, k4.g};
    const double a1 = s.alpha;
    s.y = half_ * (ey + (h / 6.0) * ek1 + (h / 3.0) * (k2.g + k3.g)) + (h / 6.0) * k4.g;
    s.alpha += h / 6.0 * (k1.rt[0] + 2.0 * k2.rt[0] + 2.0 * k3.rt[0] + k4.rt[0]);
    s.gamma += h / 6.0 * (k1.rt[1] + 2.0 * k2.rt[1] + 2.0 * k3.rt[1] + k4.rt[1]);
    s.theta += h / 6.0 * (a1 * a1 + 2.0 * a2 * a2 + 2.0 * a3 * a3 + a4 * a4);
    auto l1 = [](const Eigen::Vector2d& v) { return std::abs(v[0]) + std::abs(v[1]); };
    s.pi_dot_l1 += h / 6.0 * (l1(k1.rt) + 2.0 * l1(k2.rt) + 2.0 * l1(k3.rt) + l1(k4.rt));
    s.t += h;
    if (!s.y.allFinite()) throw ModulationBreakdown("modulation: non-finite state");
    const auto rt = rates(s);
    s.alpha_dot = rt[0];
    s.gamma_dot = rt[1];
}

// ---------------------------------------------------------------- tracking

TrackResult track_modulated_decomposition(const Trajectory& traj, const SolitonParams& guess, double tube) {
    TrackResult out;
    if (traj.states.empty()) return out;
    SolitonParams p = guess;
    double w_sq = 0.0;
    double w_prev = 0.0;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const double t = traj.times[i];
        if (i > 0) p.gamma = wrap_phase(p.gamma + p.alpha * p.alpha * (t - traj.times[i - 1]));
        Projection proj;
        try {
            proj = nearest_soliton(Spinor::physical(traj.states[i]), p, tube);
        } catch (const ProjectionError&) {
            out.left_tube = true;
            out.exit_time = t;
            return out;
        }
        p = proj.params;
        TrackRecord rec;
        rec.t = t;
        rec.params = p;
        rec.hhalf_r = hhalf_norm(proj.remainder);
        const double w = sobolev_norm(proj.remainder, 0.5, 6.0);
        if (i > 0) w_sq += 0.5 * (t - traj.times[i - 1]) * (w * w + w_prev * w_prev);
        w_prev = w;
        rec.w126_running = std::sqrt(w_sq);
        rec.orth_resid = std::max(std::abs(proj.orthogonality[0]), std::abs(proj.orthogonality[1]));
        rec.iterations = proj.iterations;
        out.records.push_back(rec);
        if (rec.hhalf_r > tube) {
            out.left_tube = true;
            out.exit_time = t;
            return out;
        }
    }
    return out;
}

// ---------------------------------------------------------------- scattering

SectorField free_flow(const SectorField& f, double t) {
    const auto& g = *f.grid;
    if (g.l != 0) throw ParameterError("free_flow: l = 0 only");
    const SineTransform st(g);
    const Vec& sym = st.stencil_symbol();
    CVec a = st.analyze(to_u(g, f.values));
    for (int k = 0; k < g.n; ++k) a[k] *= std::exp(-kI * (sym[k] * t));
    return SectorField(f.grid, from_u(g, st.synthesize(a)));
}

ScatteringAccumulator::ScatteringAccumulator(GridPtr grid) : grid_(std::move(grid)) {
    if (grid_->l != 0) throw ParameterError("ScatteringAccumulator: l = 0 only");
    omega_ = SineTransform(*grid_).stencil_symbol();
    total_ = CVec::Zero(grid_->n);
}

void ScatteringAccumulator::add_step(double t0, double t1, const CVec& g0, const CVec& g1) {
    const auto& g = *grid_;
    const SineTransform st(g);
    const CVec c0 = st.analyze(to_u(g, g0));
    const CVec c1 = st.analyze(to_u(g, g1));
    const double dt = t1 - t0;
    for (int k = 0; k < g.n; ++k) {
        const double x = omega_[k] * dt;
        cplx p1, p2;  // int_0^1 e^{ix s} ds, int_0^1 s e^{ix s} ds
        if (std::abs(x) < 0.1) {
            cplx term = 1.0;
            p1 = 0.0;
            p2 = 0.0;
            double fact = 1.0;
            for (int m = 0; m < 10; ++m) {
                if (m > 0) {
                    term *= kI * x;
                    fact *= m;
                }
                p1 += term / (fact * (m + 1));
                p2 += term / (fact * (m + 2));
            }
        } else {
            const cplx e = std::exp(kI * x);
            const cplx ix = kI * x;
            p1 = (e - 1.0) / ix;
            p2 = e / ix - (e - 1.0) / (ix * ix);
        }
        total_[k] += std::exp(kI * (omega_[k] * t0)) * dt * (c0[k] * p1 + (c1[k] - c0[k]) * p2);
    }
}

void ScatteringAccumulator::mark(double t) { marks_.emplace_back(t, total_); }

SectorField ScatteringAccumulator::free_profile(const SectorField& r0) const {
    const auto& g = *grid_;
    const SineTransform st(g);
    CVec a = st.analyze(to_u(g, r0.values)) - kI * total_;
    return SectorField(grid_, from_u(g, st.synthesize(a)));
}

std::vector<std::pair<double, double>> ScatteringAccumulator::remainders() const {
    const auto& g = *grid_;
    const SineTransform st(g);
    std::vector<std::pair<double, double>> out;
    for (const auto& [t, j] : marks_) {
        const CVec diff = total_ - j;
        out.emplace_back(t, hhalf_norm(SectorField(grid_, from_u(g, st.synthesize(diff)))));
    }
    return out;
}

}  // namespace ssl
