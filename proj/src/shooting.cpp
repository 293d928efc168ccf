#include "ssl/shooting.hpp"

#include "ssl/norms.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

namespace ssl {

namespace {

using gl16 = boost::math::quadrature::gauss<double, 16>;

double panel_integral(const ScalarPath& f, double a, double b) {
    return gl16::integrate(f, a, b);
}

double adaptive(const std::function<double(double)>& f, double a, double b) {
    if (b <= a) return 0.0;
    double err = 0.0;
    // tighter targets sit at the rounding floor and force full-depth recursion
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 10, 1e-12, &err);
}

}  // namespace

// ---------------------------------------------------------------- scalar toolkit

SigmaIntegral::SigmaIntegral(ScalarPath sigma, double horizon) : sigma_(std::move(sigma)) {
    if (!(horizon > 0.0)) throw ParameterError("SigmaIntegral: horizon must be positive");
    const int panels = std::max(1, static_cast<int>(std::ceil(horizon / 0.25)));
    width_ = horizon / panels;
    cumulative_.assign(panels + 1, 0.0);
    sigma_min_ = sigma_(0.0);
    for (int p = 0; p < panels; ++p) {
        cumulative_[p + 1] = cumulative_[p] + panel_integral(sigma_, p * width_, (p + 1) * width_);
        for (int q = 0; q <= 8; ++q) sigma_min_ = std::min(sigma_min_, sigma_(p * width_ + q * width_ / 8.0));
    }
}

double SigmaIntegral::operator()(double t) const {
    if (t <= 0.0) return 0.0;
    int p = static_cast<int>(t / width_);
    p = std::min<int>(p, static_cast<int>(cumulative_.size()) - 1);
    const double a = p * width_;
    if (t == a) return cumulative_[p];
    return cumulative_[p] + panel_integral(sigma_, a, t);
}

HyperbolicSolution solve_hyperbolic_ode(const ScalarPath& sigma, const ScalarPath& f1, const ScalarPath& f2, double x2_0,
                                        double horizon, int samples) {
    if (samples < 2) throw ParameterError("solve_hyperbolic_ode: need at least two samples");
    const SigmaIntegral s_int(sigma, horizon);
    if (!(s_int.sigma_min() > 0.0)) throw ParameterError("solve_hyperbolic_ode: sigma must stay positive");

    HyperbolicSolution sol;
    sol.sigma_min = s_int.sigma_min();
    sol.times = Vec::LinSpaced(samples, 0.0, horizon);
    sol.x1.resize(samples);
    sol.x2.resize(samples);

    // bounded x1, integrated backwards in pieces between samples
    double acc = 0.0;  // -int_{t_i}^T e^{-(S(s) - S(t_i))} f1(s) ds
    sol.x1[samples - 1] = 0.0;
    for (int i = samples - 2; i >= 0; --i) {
        const double a = sol.times[i];
        const double b = sol.times[i + 1];
        const double sa = s_int(a);
        const double piece = adaptive([&](double s) { return std::exp(-(s_int(s) - sa)) * f1(s); }, a, b);
        acc = std::exp(-(s_int(b) - sa)) * acc - piece;
        sol.x1[i] = acc;
    }
    sol.x1_0_required = sol.x1[0];
    double fmax = 0.0;
    for (int q = 0; q <= 64; ++q) fmax = std::max(fmax, std::abs(f1(horizon * (1.0 + q / 16.0))));
    sol.tail_bound = fmax / sol.sigma_min * std::exp(-s_int(horizon));

    // stable x2 forward
    double x2 = x2_0;
    sol.x2[0] = x2;
    for (int i = 1; i < samples; ++i) {
        const double a = sol.times[i - 1];
        const double b = sol.times[i];
        const double sb = s_int(b);
        const double piece = adaptive([&](double s) { return std::exp(-(sb - s_int(s))) * f2(s); }, a, b);
        x2 = std::exp(-(sb - s_int(a))) * x2 + piece;
        sol.x2[i] = x2;
    }
    return sol;
}

Vec forward_unstable(const ScalarPath& sigma, const ScalarPath& f1, double x1_0, const Vec& times) {
    const double horizon = times.size() ? times.maxCoeff() : 0.0;
    const SigmaIntegral s_int(sigma, std::max(horizon, 1e-12));
    Vec out(times.size());
    double acc = x1_0;  // x1_0 + int_0^t e^{-S} f1
    double prev = 0.0;
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        acc += adaptive([&](double s) { return std::exp(-s_int(s)) * f1(s); }, prev, times[i]);
        prev = times[i];
        out[i] = std::exp(s_int(times[i])) * acc;
    }
    return out;
}

// ---------------------------------------------------------------- shooting

Shooter::Shooter(const SolitonParams& p0, GridPtr grid, const ShootOptions& opt)
    : p0_(p0), grid_(std::move(grid)), opt_(opt) {
    if (!p0.radial()) throw ParameterError("Shooter: radial solitons only");
    if (!(opt.tol > 0.0) || !(opt.tube_factor > 0.0)) throw ParameterError("Shooter: tolerances must be positive");
    sd_ = compute_sigma_eigenpair(assemble_hamiltonian(p0_, grid_), opt.sigma);
    proj_ = std::make_unique<ProjectionSuite>(sd_, tangent_frame(p0_, grid_));
    stepper_ = std::make_unique<ModulationStepper>(grid_, p0_.alpha, opt.modulation);
    tube_ = opt.tube_factor * cached_ground_state(p0_.alpha, grid_)->hhalf_norm;

    const int n = grid_->n;
    // growing mode of the rotated frame (Gamma = 0): z = a + ib
    const cplx rot = std::exp(-kI * p0_.gamma);
    e_.resize(2 * n);
    for (int j = 0; j < n; ++j) {
        const cplx z = rot * sd_.f_minus.upper.values[j] * grid_->nodes[j];
        e_[j] = z.real();
        e_[n + j] = z.imag();
    }
    left_.resize(2 * n);
    left_.head(n) = e_.tail(n);
    left_.tail(n) = e_.head(n);
    left_norm_ = left_.dot(e_);
}

Spinor Shooter::unstable_direction() const { return sd_.f_minus; }

Spinor Shooter::admissible(const Spinor& z) const {
    Spinor out = z - proj_->p0(z);
    out = out - proj_->p_minus(out);
    return Spinor::physical(out.upper);
}

std::array<double, 2> Shooter::admissibility_defect(const Spinor& r0) const {
    const Spinor p = proj_->p0(r0);
    return {std::sqrt(std::max(0.0, pairing(p, p).real())), std::abs(proj_->minus_coefficient(r0))};
}

ModulationState Shooter::initial_state(const Spinor& r0, double h) const {
    ModulationState s = stepper_->initial(r0, p0_);
    s.y += h * e_;
    return s;
}

double Shooter::unstable_coefficient(const Vec& y) const { return left_.dot(y) / left_norm_; }

ShootRun Shooter::run(const ModulationState& start, double horizon, bool keep, ScatteringAccumulator* acc,
                      const std::vector<double>* marks) {
    ShootRun out;
    ModulationState s = start;
    const double dt = stepper_->dt();
    const int steps = std::max(1, static_cast<int>(std::lround(horizon / dt)));
    const Mat& gen = stepper_->generator();
    auto record = [&](const ModulationState& st, double hh) {
        out.times.push_back(st.t);
        out.x.push_back(unstable_coefficient(st.y));
        out.hhalf.push_back(hh);
        const Vec g = stepper_->real_forcing(st);
        out.forcing.push_back(left_.dot(gen * st.y + g) / left_norm_ - sd_.sigma * out.x.back());
    };
    const double r0 = hhalf_norm(s.remainder(grid_));
    out.r0_norm = r0;
    out.sup_r = r0;
    Eigen::Vector2d orth0 = stepper_->orthogonality(s);
    if (keep) record(s, r0);
    std::size_t next_mark = 0;
    CVec g_prev;
    if (acc) {
        g_prev = stepper_->free_forcing(s);
        while (marks && next_mark < marks->size() && (*marks)[next_mark] <= s.t + 1e-9) acc->mark((*marks)[next_mark++]);
    }
    for (int k = 0; k < steps; ++k) {
        const double t0 = s.t;
        std::array<Vec, 4> stages;
        try {
            stepper_->step(s, keep ? &stages : nullptr);
        } catch (const ModulationBreakdown&) {
            out.classification = "indeterminate";
            out.exit_time = s.t;
            out.x_end = unstable_coefficient(s.y);
            out.side = out.x_end >= 0.0 ? 1 : -1;
            out.final_state = s;
            return out;
        }
        const double hh = hhalf_norm(s.remainder(grid_));
        out.sup_r = std::max(out.sup_r, hh);
        const Eigen::Vector2d orth = stepper_->orthogonality(s);
        out.orth_drift = std::max(out.orth_drift, (orth - orth0).cwiseAbs().maxCoeff() / (s.t - start.t));
        if (keep) {
            record(s, hh);
            // Lawson RK4 is RK4 for e^{-sigma t} x, so this rule matches the discrete flow
            double f[4];
            for (int q = 0; q < 4; ++q) f[q] = left_.dot(stages[q]) / left_norm_;
            const double w0 = std::exp(-sd_.sigma * (t0 - start.t));
            const double eh = std::exp(-0.5 * sd_.sigma * dt);
            out.forcing_integral += w0 * dt / 6.0 * (f[0] + 2.0 * eh * (f[1] + f[2]) + eh * eh * f[3]);
        }
        if (acc) {
            CVec g_now = stepper_->free_forcing(s);
            acc->add_step(t0, s.t, g_prev, g_now);
            g_prev = std::move(g_now);
            while (marks && next_mark < marks->size() && (*marks)[next_mark] <= s.t + 1e-9) acc->mark((*marks)[next_mark++]);
        }
        const double x = unstable_coefficient(s.y);
        if (hh > tube_) {
            out.side = x >= 0.0 ? 1 : -1;
            out.classification = out.side > 0 ? "unstable-exit-plus" : "unstable-exit-minus";
            out.exit_time = s.t;
            out.x_end = x;
            out.pi_dot_l1 = s.pi_dot_l1 - start.pi_dot_l1;
            out.final_state = s;
            return out;
        }
    }
    out.x_end = unstable_coefficient(s.y);
    out.side = out.x_end >= 0.0 ? 1 : -1;
    out.exit_time = s.t;
    out.pi_dot_l1 = s.pi_dot_l1 - start.pi_dot_l1;
    out.final_state = s;
    return out;
}

namespace {

std::string side_label(int side) { return side > 0 ? "unstable-exit-plus" : "unstable-exit-minus"; }

// -x(0) - int_0^T e^{-sigma s} f(s) ds by Simpson's rule on the step samples
double integral_h(const ShootRun& run, double sigma, double x_start_data) {
    const auto& t = run.times;
    const auto& f = run.forcing;
    const int m = static_cast<int>(t.size()) - 1;
    if (m < 1) return -x_start_data;
    auto g = [&](int i) { return std::exp(-sigma * (t[i] - t[0])) * f[i]; };
    double sum = 0.0;
    int end = m;
    if (m % 2 == 1 && m >= 3) {
        // Simpson 3/8 on the last three intervals
        const double hh = (t[m] - t[m - 3]) / 3.0;
        sum += 3.0 * hh / 8.0 * (g(m - 3) + 3.0 * g(m - 2) + 3.0 * g(m - 1) + g(m));
        end = m - 3;
    } else if (m == 1) {
        return -x_start_data - 0.5 * (t[1] - t[0]) * (g(0) + g(1));
    }
    for (int i = 0; i + 2 <= end; i += 2) {
        const double hh = 0.5 * (t[i + 2] - t[i]);
        sum += hh / 3.0 * (g(i) + 4.0 * g(i + 1) + g(i + 2));
    }
    return -x_start_data - sum;
}

struct Bisection {
    double lo, hi;
    int side_lo, side_hi;
    int runs = 0;
    bool monotone = true;
};

// Bisection on the coefficient c of the growing vector added to `base`.
Bisection bisect(Shooter& sh, const ModulationState& base, double seed, double horizon, double tol) {
    std::vector<std::pair<double, int>> probes;
    auto side_at = [&](double c) {
        ModulationState s = base;
        s.y += c * sh.growing_vector();
        const ShootRun r = sh.run(s, horizon);
        probes.emplace_back(c, r.side);
        return r.side;
    };
    double lo = -seed, hi = seed;
    int slo = side_at(lo), shi = side_at(hi);
    if (slo == shi) {
        lo *= 10.0;
        hi *= 10.0;
        slo = side_at(lo);
        shi = side_at(hi);
        if (slo == shi) throw BracketError("shoot_h: both bracket seeds classify identically");
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const int sm = side_at(mid);
        if (sm == slo)
            lo = mid;
        else
            hi = mid;
    }
    Bisection b{lo, hi, slo, shi, static_cast<int>(probes.size()), true};
    std::sort(probes.begin(), probes.end());
    int changes = 0;
    for (std::size_t i = 1; i < probes.size(); ++i)
        if (probes[i].second != probes[i - 1].second) ++changes;
    b.monotone = changes == 1;
    return b;
}

// first-pass estimate: the integral formula along the c = 0 run
double first_pass(Shooter& sh, const ModulationState& base, double horizon) {
    ShootRun r = sh.run(base, horizon, true);
    // only the part of the run before the unstable growth dominates is meaningful; the
    // integral weights it with e^{-sigma s} anyway
    return integral_h(r, sh.sigma(), sh.unstable_coefficient(base.y));
}

}  // namespace

ShootingResult shoot_h(Shooter& sh, const Spinor& r0, double horizon, double tol) {
    if (horizon <= 0.0) horizon = sh.default_horizon();
    if (tol <= 0.0) tol = sh.options().tol;
    const auto& g = *sh.grid();
    const double phi_h = cached_ground_state(sh.params().alpha, sh.grid())->hhalf_norm;
    ShootingResult res;
    res.horizon = horizon;
    res.tube_radius = sh.tube();
    res.r0_norm = hhalf_norm(r0);
    if (res.r0_norm > 0.05 * phi_h * std::sqrt(2.0) + 1e-15)
        throw ParameterError("shoot_h: ||R0|| exceeds 0.05 ||phi|| (spinor norm)");
    const auto defect = sh.admissibility_defect(r0);
    const double wscale = std::sqrt(2.0 * cached_ground_state(sh.params().alpha, sh.grid())->mass);
    if (defect[0] > 1e-10 * wscale || defect[1] > 1e-10)
        throw ParameterError("shoot_h: R0 has P0 or unstable components above 1e-10");
    (void)g;

    const ModulationState base = sh.initial_state(r0, 0.0);
    const double est = first_pass(sh, base, horizon);
    const double seed = std::max(4.0 * std::abs(est), tol);
    const Bisection b = bisect(sh, base, seed, horizon, tol);
    res.bracket = {b.lo, b.hi};
    res.h = 0.5 * (b.lo + b.hi);
    res.classification_lo = side_label(b.side_lo);
    res.classification_hi = side_label(b.side_hi);
    res.runs = b.runs + 1;
    res.monotone = b.monotone;
    res.k_ratio = res.r0_norm > 0.0 ? std::abs(res.h) / (res.r0_norm * res.r0_norm) : 0.0;

    // converged run: confinement, integral cross-check, modulation ledger
    const ModulationState conv = sh.initial_state(r0, res.h);
    const ShootRun r = sh.run(conv, horizon, true);
    res.sup_r = r.sup_r;
    res.pi_dot_l1 = r.pi_dot_l1;
    res.orth_drift = r.orth_drift;
    res.confinement = r.classification;
    res.h_integral = -sh.unstable_coefficient(base.y) - r.forcing_integral;
    res.h_integral_simpson = integral_h(r, sh.sigma(), sh.unstable_coefficient(base.y));
    return res;
}

double shoot_correction(Shooter& sh, const ModulationState& state, double horizon, double tol, ShootingResult* report) {
    ModulationState base = state;
    base.y -= sh.unstable_coefficient(state.y) * sh.growing_vector();  // start from x = 0
    // fixed point of c = -int_0^T e^{-sigma s} f(s; c) ds; the map contracts at rate O(||R||)
    double c = 0.0;
    int runs = 0;
    for (; runs < 12; ++runs) {
        ModulationState s = base;
        s.y += c * sh.growing_vector();
        const ShootRun r = sh.run(s, horizon, true);
        const double next = -r.forcing_integral;
        const double step = std::abs(next - c);
        c = next;
        if (step < tol) break;
    }
    if (report) {
        report->h = c;
        report->runs = runs + 1;
    }
    return c;
}

Spinor random_direction(const Shooter& sh, std::uint64_t seed) {
    const auto& g = *sh.grid();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_real_distribution<double> width(0.6, 3.0);
    // a few Gaussian bumps with random complex weights, widths, and centres in [0, 4]
    CVec z = CVec::Zero(g.n);
    for (int b = 0; b < 4; ++b) {
        const cplx c(uni(rng), uni(rng));
        const double w = width(rng) / sh.params().alpha;
        const double r0 = 2.0 * (uni(rng) + 1.0) / sh.params().alpha;
        for (int j = 0; j < g.n; ++j) {
            const double r = g.nodes[j];
            z[j] += c * (std::exp(-std::pow((r - r0) / w, 2)) + std::exp(-std::pow((r + r0) / w, 2)));
        }
    }
    Spinor d = sh.admissible(Spinor::physical(sh.grid(), z));
    const double nrm = hhalf_norm(d);
    return (1.0 / nrm) * d;
}

std::vector<ManifoldRow> manifold_sample(Shooter& sh, const std::vector<Spinor>& directions,
                                         const std::vector<double>& amplitudes, double horizon) {
    std::vector<ManifoldRow> rows;
    const double phi_h = cached_ground_state(sh.params().alpha, sh.grid())->hhalf_norm;
    for (std::size_t d = 0; d < directions.size(); ++d) {
        for (double a : amplitudes) {
            ManifoldRow row;
            row.dir_id = static_cast<int>(d);
            row.amplitude = a;
            const Spinor r0 = (a * phi_h) * directions[d];
            row.r0_hhalf = hhalf_norm(r0);
            try {
                row.result = shoot_h(sh, r0, horizon);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_manifold_csv(std::ostream& os, const std::vector<ManifoldRow>& rows) {
    os << "dir_id,amplitude,R0_hhalf,h,bracket_width,horizon,sup_R,classification_lo,classification_hi,h_integral,"
          "pi_dot_l1,error\n";
    auto f = [](double v) { return format_number(v); };
    for (const auto& r : rows) {
        const auto& s = r.result;
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        os << r.dir_id << ',' << f(r.amplitude) << ',' << f(r.r0_hhalf) << ',' << f(s.h) << ','
           << f(s.bracket[1] - s.bracket[0]) << ',' << f(s.horizon) << ',' << f(s.sup_r) << ',' << s.classification_lo
           << ',' << s.classification_hi << ',' << f(s.h_integral) << ',' << f(s.pi_dot_l1) << ',' << err << '\n';
    }
}

ConfinedRun confined_run(Shooter& sh, const Spinor& r0, double horizon, const std::vector<double>& marks) {
    ConfinedRun out;
    const double seg = sh.default_horizon();
    const double advance = 0.5 * seg;
    ScatteringAccumulator acc(sh.grid());
    ModulationState s = sh.initial_state(r0, 0.0);
    out.r0_norm = hhalf_norm(s.remainder(sh.grid()));
    out.sup_r = out.r0_norm;
    // marks relative to t = 0
    std::vector<double> pending = marks;
    std::sort(pending.begin(), pending.end());
    while (s.t < horizon - 1e-9) {
        const double c = shoot_correction(sh, s, seg, sh.options().tol * 1e-2);
        const double x = sh.unstable_coefficient(s.y);
        s.y += (c - x) * sh.growing_vector();
        out.max_correction = std::max(out.max_correction, std::abs(c - x));
        ++out.segments;
        const double len = std::min(advance, horizon - s.t);
        ShootRun r = sh.run(s, len, true, &acc, &pending);
        for (std::size_t i = 0; i < r.times.size(); ++i) {
            if (!out.times.empty() && r.times[i] <= out.times.back() + 1e-12) continue;
            out.times.push_back(r.times[i]);
            out.hhalf.push_back(r.hhalf[i]);
        }
        out.sup_r = std::max(out.sup_r, r.sup_r);
        if (r.classification != "confined") {
            out.confined = false;
            break;
        }
        s = r.final_state;
        out.params.push_back(s.params());
        // marks already handled are dropped
        pending.erase(std::remove_if(pending.begin(), pending.end(), [&](double m) { return m <= s.t + 1e-9; }),
                      pending.end());
    }
    out.remainders = acc.remainders();
    for (auto& [t, v] : out.remainders) v *= std::sqrt(2.0);
    return out;
}

}  // namespace ssl
