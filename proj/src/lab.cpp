#include "ssl/lab.hpp"

#include "ssl/dynamics.hpp"
#include "ssl/field_io.hpp"
#include "ssl/ground_state.hpp"
#include "ssl/linear_estimates.hpp"
#include "ssl/norms.hpp"
#include "ssl/shooting.hpp"
#include "ssl/soliton_frame.hpp"
#include "ssl/spectral.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <locale>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#ifndef SSL_VERSION
#define SSL_VERSION "0.0.0"
#endif

namespace ssl::lab {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---------------------------------------------------------------- defaults

ExperimentConfig make(const std::string& name, double r_max, int n, double horizon, std::uint64_t seed,
                      std::map<std::string, double> tol, json options) {
    ExperimentConfig c;
    c.experiment = name;
    c.r_max = r_max;
    c.n = n;
    c.horizon = horizon;
    c.seed = seed;
    c.tolerances = std::move(tol);
    c.options = std::move(options);
    return c;
}

const std::map<std::string, ExperimentConfig>& registry() {
    static const std::map<std::string, ExperimentConfig> reg = [] {
        std::map<std::string, ExperimentConfig> m;
        auto add = [&m](ExperimentConfig c) { m.emplace(c.experiment, std::move(c)); };
        add(make("ground-state", 30.0, 2048, 0.0, 1,
                 {{"residual", 1e-10}, {"scaling", 1e-6}, {"pohozaev", 1e-6}, {"runtime_s", 5.0}},
                 {{"scale_alpha", 2.0}}));
        add(make("zero-modes", 30.0, 2048, 0.0, 1,
                 {{"pairing", 1e-6}, {"off_diagonal", 1e-6}, {"relations", 1e-6}, {"runtime_s", 10.0}}, json::object()));
        add(make("spectrum", 30.0, 2048, 0.0, 1,
                 {{"scaling", 1e-4}, {"normalization", 1e-8}, {"projection", 1e-8}, {"refinement", 1e-5},
                  {"runtime_s", 120.0}},
                 {{"alphas", {0.5, 1.0, 2.0}}, {"coarse_n", 512}, {"refined_from", 1024}, {"samples", 4}}));
        add(make("gap-check", 30.0, 1024, 0.0, 1, {{"kernel", 1e-6}, {"edge", 0.05}, {"runtime_s", 60.0}},
                 {{"kernel_n", 2048}}));
        add(make("evolve", 30.0, 2048, 5.0, 1,
                 {{"phase", 1e-5}, {"mass", 1e-6}, {"energy", 1e-5}, {"slope", 0.2}, {"runtime_s", 60.0},
                  {"blowup", 0.05}},
                 {{"dt", 2.5e-3},
                  {"sponge", false},
                  {"order_horizon", 0.25},
                  {"order_dts", {1e-2, 5e-3, 2.5e-3}},
                  {"blowup_scale", 1.2},
                  {"blowup_dt", 2e-3},
                  {"blowup_horizon", 5.0}}));
        add(make("modulate", 30.0, 256, 0.0, 1000,
                 {{"fixed_point", 1e-8}, {"ratio_lo", 0.15}, {"ratio_hi", 0.4}, {"orth_drift", 1e-5}},
                 {{"dt", 0.01}, {"steps", 1000}, {"amplitudes", {0.02, 0.01}}, {"directions", 2}}));
        add(make("shoot", 30.0, 256, 0.0, 1000,
                 {{"closed_form", 1e-10},
                  {"divergence", 1e3},
                  {"bisection", 1e-10},
                  {"agreement_factor", 5.0},
                  {"sup_factor", 3.0},
                  {"exit_agreement", 0.1},
                  {"horizon_factor", 10.0}},
                 {{"amplitude", 0.02},
                  {"exit_eps", 1e-3},
                  {"exit_horizon", 30.0},
                  {"toolkit_horizon", 40.0},
                  {"perturbation", 1e-6},
                  {"divergence_time", 40.0},
                  {"horizon_doubling", true}}));
        add(make("manifold-sample", 30.0, 256, 0.0, 1000,
                 {{"ratio_lo", 0.15}, {"ratio_hi", 0.4}, {"runtime_s", 1800.0}},
                 {{"directions", 20}, {"amplitudes", {0.02, 0.01}}}));
        add(make("scatter", 60.0, 256, 64.0, 1000, {{"halving", 0.5}},
                 {{"amplitude", 0.02},
                  {"sponge_fraction", 0.5},
                  {"sponge_strength", 2.0},
                  {"marks", {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}}}));
        add(make("resolvent-sweep", 20.0, 256, 0.0, 1,
                 {{"kernel", 1e-10}, {"identity", 1e-7}, {"decay", 0.2}, {"edge_sv", 0.05}},
                 {{"identity_n", 512},
                  {"lambda_max", 55.0},
                  {"linear", 4},
                  {"logarithmic", 8},
                  {"decay_multiple", 50.0}}));
        add(make("strichartz", 20.0, 256, 4.0, 100, {{"grid_change", 0.1}, {"forcing_factor", 2.0}},
                 {{"members", 50}, {"dt", 0.02}, {"refined_n", 512}, {"a_amplitude", 0.05}}));
        add(make("kernel-compare", 20.0, 256, 4.0, 7, {{"slope", 0.2}},
                 {{"amplitudes", {0.0, 0.01, 0.02, 0.05, 0.1}},
                  {"dt", 0.02},
                  {"weight_power", 2.0},
                  {"switch_period", 1.0},
                  {"iterations", 30}}));
        return m;
    }();
    return reg;
}

bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return true;
    if (a.is_boolean() && b.is_boolean()) return true;
    if (a.is_array() && b.is_array()) {
        for (const auto& v : b)
            if (!v.is_number()) return false;
        return true;
    }
    return false;
}

// ---------------------------------------------------------------- output

struct Cell {
    std::string s;
    Cell(double v) : s(format_number(v)) {}
    Cell(int v) : s(std::to_string(v)) {}
    Cell(std::size_t v) : s(std::to_string(v)) {}
    Cell(const char* v) : s(v) {}
    Cell(std::string v) : s(std::move(v)) {}
};

class Csv {
public:
    Csv(const fs::path& path, const std::string& header) : os_(path, std::ios::binary) {
        if (!os_) throw std::runtime_error("cannot write " + path.string());
        os_.imbue(std::locale::classic());
        os_ << header << '\n';
    }
    void row(std::initializer_list<Cell> cells) {
        bool first = true;
        for (const auto& c : cells) {
            if (!first) os_ << ',';
            os_ << c.s;
            first = false;
        }
        os_ << '\n';
    }
    std::ostream& stream() { return os_; }

private:
    std::ofstream os_;
};

struct Context {
    const ExperimentConfig& cfg;
    RunManifest& m;
    fs::path dir;
    int threads = 1;
    std::string stage = "setup";

    GridPtr grid(int n = 0, double r_max = 0.0) const {
        return make_grid(r_max > 0.0 ? r_max : cfg.r_max, n > 0 ? n : cfg.n, 0);
    }
    void enter(const std::string& s) { stage = s; }

    Check& check(const std::string& name, int criterion, double value, const std::string& rel, double threshold,
                 bool asserted = true, const std::string& note = "") {
        Check c;
        c.name = name;
        c.criterion = criterion;
        c.value = value;
        c.threshold = threshold;
        c.relation = rel;
        c.asserted = asserted;
        c.note = note;
        if (rel == "<")
            c.passed = value < threshold;
        else if (rel == "<=")
            c.passed = value <= threshold;
        else if (rel == ">")
            c.passed = value > threshold;
        else if (rel == ">=")
            c.passed = value >= threshold;
        else
            throw std::logic_error("check: unknown relation " + rel);
        m.checks.push_back(c);
        return m.checks.back();
    }
    Check& check_in(const std::string& name, int criterion, double value, double lo, double hi, bool asserted = true,
                    const std::string& note = "") {
        Check c;
        c.name = name;
        c.criterion = criterion;
        c.value = value;
        c.threshold = lo;
        c.upper = hi;
        c.relation = "in";
        c.passed = value >= lo && value <= hi;
        c.asserted = asserted;
        c.note = note;
        m.checks.push_back(c);
        return m.checks.back();
    }
    void flag(const std::string& name, int criterion, bool ok, bool asserted = true, const std::string& note = "") {
        check(name, criterion, ok ? 1.0 : 0.0, ">=", 1.0, asserted, note);
    }
};

template <class F>
void parallel_for(int count, int threads, F&& fn) {
    threads = std::clamp(threads, 1, std::max(count, 1));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i, 0);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&, w] {
            for (;;) {
                const int i = next++;
                if (i >= count) return;
                try {
                    fn(i, w);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

double l2(const Spinor& a) { return std::sqrt(std::max(pairing(a, a).real(), 0.0)); }

Spinor random_spinor(const GridPtr& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Spinor z{SectorField(g), SectorField(g)};
    for (int j = 0; j < g->n; ++j) {
        const double env = std::exp(-0.1 * g->nodes[j] * g->nodes[j]);
        z.upper.values[j] = env * cplx(nd(rng), nd(rng));
        z.lower.values[j] = env * cplx(nd(rng), nd(rng));
    }
    return z;
}

// keep result arrays in the manifest readable
json decimate(const std::vector<double>& t, const std::vector<double>& v, std::size_t max_points = 2000) {
    json out = {{"t", json::array()}, {"value", json::array()}};
    const std::size_t stride = std::max<std::size_t>(1, t.size() / max_points);
    for (std::size_t i = 0; i < t.size(); i += stride) {
        out["t"].push_back(t[i]);
        out["value"].push_back(v[i]);
    }
    if (!t.empty() && (t.size() - 1) % stride != 0) {
        out["t"].push_back(t.back());
        out["value"].push_back(v.back());
    }
    return out;
}

// ---------------------------------------------------------------- experiments

void ground_state(Context& c) {
    const auto& cfg = c.cfg;
    auto g = c.grid();
    c.enter("solve");
    const auto t0 = Clock::now();
    const GroundState gs = solve_ground_state(cfg.alpha, g, cfg.tol("residual"));
    const double runtime = seconds_since(t0);
    const Functionals f = conserved_functionals(gs.phi);

    c.enter("scaling");
    const double a2 = cfg.opt("scale_alpha");
    const GroundState gs2 = solve_ground_state(a2 * cfg.alpha, g, default_residual_tol(a2 * cfg.alpha));
    // phi(r, k alpha) = k phi(k r, alpha); for integer k compare node j against node k j
    const int k = static_cast<int>(std::lround(a2));
    double scaling = 0.0;
    if (std::abs(a2 - k) > 1e-12 || k < 1) throw ConfigError("scale_alpha must be a positive integer");
    const double peak = gs2.phi.values.real().cwiseAbs().maxCoeff();
    for (int j = 0; (j + 1) * k <= g->n; ++j)
        scaling = std::max(scaling, std::abs(gs2.phi.values[j].real() - k * gs.phi.values[(j + 1) * k - 1].real()));
    scaling /= peak;

    c.enter("output");
    {
        Csv csv(c.dir / "profile.csv", "r,phi,phi_scaled");
        for (int j = 0; j < g->n; ++j)
            csv.row({g->nodes[j], gs.phi.values[j].real(), gs2.phi.values[j].real()});
    }
    write_field(c.dir / "phi.bin", gs.phi);

    c.check("equation residual", 1, gs.residual, "<", cfg.tol("residual"));
    c.check("scaling defect", 1, scaling, "<", cfg.tol("scaling"));
    c.check("Pohozaev |grad phi|^2 / M - 3", 1, std::abs(f.gradient_sq / f.mass - 3.0), "<", cfg.tol("pohozaev"));
    c.check("Pohozaev |phi|^4 / M - 4", 1, std::abs(f.quartic / f.mass - 4.0), "<", cfg.tol("pohozaev"));
    c.check("runtime s", 1, runtime, "<", cfg.tol("runtime_s"));
    c.m.results["ground_state"] = {{"residual", gs.residual}, {"mass", f.mass},         {"energy", f.energy},
                                   {"hhalf_norm", f.hhalf_norm}, {"phi_r1", gs.phi.values[0].real()},
                                   {"gradient_ratio", f.gradient_sq / f.mass}, {"quartic_ratio", f.quartic / f.mass},
                                   {"scaling_defect", scaling},  {"solve_seconds", runtime}};
}

void zero_modes(Context& c) {
    const auto& cfg = c.cfg;
    auto g = c.grid();
    c.enter("frame");
    const auto t0 = Clock::now();
    const SolitonParams p{cfg.alpha};
    const TangentFrame fr = tangent_frame(p, g);
    c.enter("relations");
    // the relation list holds in this form at alpha = 1
    const ZeroModeResiduals zm = zero_mode_algebra_check(SolitonParams{1.0}, g);
    const double runtime = seconds_since(t0);

    c.enter("output");
    const double w2 = fr.mass_w;
    const char* names[kFrameSize] = {"alpha", "Gamma", "v1", "v2", "v3", "D1", "D2", "D3"};
    {
        Csv csv(c.dir / "pairing.csv", "row,col,value,value_over_w2");
        for (int i = 0; i < kFrameSize; ++i)
            for (int j = 0; j < kFrameSize; ++j) csv.row({names[i], names[j], fr.pairing(i, j), fr.pairing(i, j) / w2});
    }
    const double target_a = w2 / (4.0 * cfg.alpha);
    const double target_v = 0.5 * w2;
    double off = 0.0;
    for (int i = 0; i < kFrameSize; ++i)
        for (int j = 0; j < kFrameSize; ++j)
            if (i != j) off = std::max(off, std::abs(fr.pairing(i, j)));
    c.check("<d_alpha W, d*_alpha W> vs |W|^2/(4 alpha)", 2, std::abs(fr.pairing(0, 0) - target_a) / w2, "<",
            cfg.tol("pairing"), true, "computed value is |W|^2/(2 alpha)");
    c.check("<d_Gamma W, d*_Gamma W> vs |W|^2/(4 alpha)", 2, std::abs(fr.pairing(1, 1) - target_a) / w2, "<",
            cfg.tol("pairing"), true, "computed value is -|W|^2/(2 alpha)");
    double dv = 0.0, dd = 0.0;
    for (int k = 0; k < 3; ++k) {
        dv = std::max(dv, std::abs(fr.pairing(2 + k, 2 + k) - target_v) / w2);
        dd = std::max(dd, std::abs(fr.pairing(5 + k, 5 + k) - target_v) / w2);
    }
    c.check("<d_v W, d*_v W> vs |W|^2/2", 2, dv, "<", cfg.tol("pairing"));
    c.check("<d_D W, d*_D W> vs |W|^2/2", 2, dd, "<", cfg.tol("pairing"), true, "computed value is -|W|^2/2");
    c.check("off-diagonal / |W|^2", 2, off / w2, "<", cfg.tol("off_diagonal"));
    c.check("zero-mode relations", 2, zm.max(), "<", cfg.tol("relations"));
    c.check("runtime s", 2, runtime, "<", cfg.tol("runtime_s"));
    json diag = json::array();
    for (int i = 0; i < kFrameSize; ++i) diag.push_back(fr.pairing(i, i) / w2);
    c.m.results["zero_modes"] = {{"mass_w", w2}, {"diagonal_over_w2", diag}, {"relations", zm.to_json()}};
}

void spectrum(Context& c) {
    const auto& cfg = c.cfg;
    const auto t0 = Clock::now();
    SigmaOptions so;
    so.coarse_n = static_cast<int>(cfg.opt("coarse_n"));
    auto g = c.grid();
    json table = json::array();
    double sigma1 = 0.0;
    std::vector<std::pair<double, double>> rows;
    for (double a : cfg.list("alphas")) {
        c.enter("sigma alpha=" + format_number(a));
        const SpectralData sd = compute_sigma_eigenpair(assemble_hamiltonian(SolitonParams{a}, g), so);
        rows.emplace_back(a, sd.sigma);
        c.check("imaginary pairs alpha=" + format_number(a), 3, sd.imaginary_pairs, ">=", 1.0);
        c.check("imaginary pairs alpha=" + format_number(a) + " (at most one)", 3, sd.imaginary_pairs, "<=", 1.0);
        table.push_back({{"alpha", a}, {"sigma", sd.sigma}, {"pairs", sd.imaginary_pairs}, {"residual", sd.residual}});
        if (a == 1.0) sigma1 = sd.sigma;
    }
    if (sigma1 == 0.0) throw ConfigError("spectrum: alphas must include 1");
    double scaling = 0.0;
    for (auto [a, s] : rows) scaling = std::max(scaling, std::abs(s / (a * a * sigma1) - 1.0));
    c.check("sigma(alpha) / (alpha^2 sigma(1)) - 1", 3, scaling, "<", cfg.tol("scaling"));

    c.enter("normalization");
    const SolitonParams p{cfg.alpha};
    const HamiltonianOperator h = assemble_hamiltonian(p, g);
    const SpectralData sd = compute_sigma_eigenpair(h, so);
    // f+ = a - i b in the upper component
    const double norm = -4.0 * kPi * radial_integral(*g, Vec(sd.mode_a.cwiseProduct(sd.mode_b)));
    c.check("int Re f+ Im f+ + 1/2", 3, std::abs(norm + 0.5), "<", cfg.tol("normalization"));

    c.enter("projections");
    const ProjectionSuite ps(sd, tangent_frame(p, g));
    double ident = 0.0, idem = 0.0;
    for (int k = 0; k < static_cast<int>(cfg.opt("samples")); ++k) {
        const Spinor z = random_spinor(g, cfg.seed + k);
        const Spinor sum = ps.p0(z) + ps.p_plus(z) + ps.p_minus(z) + ps.p_c(z);
        ident = std::max(ident, l2(sum - z) / l2(z));
        const Spinor pp = ps.p_plus(z), p0 = ps.p0(z);
        idem = std::max({idem, l2(ps.p_plus(pp) - pp) / l2(z), l2(ps.p0(p0) - p0) / l2(z),
                         l2(ps.p0(pp)) / l2(z), l2(ps.p_minus(pp)) / l2(z)});
    }
    c.check("P0 + P+ + P- + Pc - I", 3, ident, "<", cfg.tol("projection"));
    c.check("idempotence and mutual annihilation", 3, idem, "<", cfg.tol("projection"));

    c.enter("refinement");
    const int coarse = static_cast<int>(cfg.opt("refined_from"));
    const double sigma_c = compute_sigma_eigenpair(assemble_hamiltonian(p, c.grid(coarse)), so).sigma;
    const double refine = std::abs(sd.sigma - sigma_c);
    c.check("sigma change n=" + std::to_string(coarse) + " -> " + std::to_string(cfg.n), 3, refine, "<",
            cfg.tol("refinement"));
    const double runtime = seconds_since(t0);
    c.check("runtime s", 3, runtime, "<", cfg.tol("runtime_s"));

    c.enter("output");
    {
        Csv csv(c.dir / "sigma.csv", "alpha,sigma,sigma_over_alpha2");
        for (auto [a, s] : rows) csv.row({a, s, s / (a * a)});
    }
    {
        Csv csv(c.dir / "mode.csv", "r,a,b");
        for (int j = 0; j < g->n; ++j) csv.row({g->nodes[j], sd.mode_a[j], sd.mode_b[j]});
    }
    write_field(c.dir / "f_plus_upper.bin", sd.f_plus.upper);
    c.m.results["sigma_table"] = table;
    c.m.results["spectrum"] = {{"sigma", sd.sigma}, {"sigma_coarse_grid", sigma_c}, {"normalization", norm},
                               {"norm_constant", sd.norm_constant}, {"residual", sd.residual}};
}

void gap_check(Context& c) {
    const auto& cfg = c.cfg;
    const auto t0 = Clock::now();
    c.enter("solve");
    const GroundState gs = solve_ground_state(cfg.alpha, c.grid(), default_residual_tol(cfg.alpha));
    c.enter("eigensolve");
    const GapReport rep = lpm_gap_check(gs);
    c.enter("kernel residuals");
    // the phi' residual is a stencil truncation error (order h^6); measured on the ground-state grid
    const int kn = static_cast<int>(cfg.opt("kernel_n"));
    const auto kres = kernel_residuals(
        kn == cfg.n ? gs : solve_ground_state(cfg.alpha, c.grid(kn), default_residual_tol(cfg.alpha)));
    const double runtime = seconds_since(t0);
    c.enter("output");
    {
        Csv csv(c.dir / "gap.csv", "operator,sector,index,eigenvalue");
        for (int l = 0; l < 2; ++l) {
            for (std::size_t i = 0; i < rep.lplus[l].size(); ++i) csv.row({"L+", l, i, rep.lplus[l][i]});
            for (std::size_t i = 0; i < rep.lminus[l].size(); ++i) csv.row({"L-", l, i, rep.lminus[l][i]});
        }
    }
    c.check("eigenvalues in (0, alpha^2)", 4, rep.in_gap, "<", 0.5);
    const std::string at = " (n=" + std::to_string(kn) + ")";
    c.check("|L- phi| / |phi|" + at, 4, kres[0], "<", cfg.tol("kernel"));
    c.check("|L+ phi'| / |phi'|" + at, 4, kres[1], "<", cfg.tol("kernel"));
    c.check("|L+ phi'| / |phi'| (eigensolve grid)", 0, rep.lplus_kernel_residual, "<", cfg.tol("kernel"), false,
            "report only");
    c.check("L- edge indicator l=0", 4, rep.edge_lminus[0], ">", cfg.tol("edge"));
    c.check("L+ edge indicator l=0", 4, rep.edge_lplus[0], ">", cfg.tol("edge"), false,
            "L+ sits close to a threshold resonance");
    c.check("runtime s", 4, runtime, "<", cfg.tol("runtime_s"));
    c.m.results["gap"] = rep.to_json();
    c.m.results["gap"]["kernel_residuals"] = {{"n", kn}, {"lminus", kres[0]}, {"lplus", kres[1]}};
}

double phase_error(const Trajectory& tr, const GroundState& gs, double t) {
    const CVec exact = gs.phi.values * std::exp(kI * gs.alpha * gs.alpha * t);
    return (tr.states.back().values - exact).cwiseAbs().maxCoeff() / gs.phi.values.cwiseAbs().maxCoeff();
}

void evolve(Context& c) {
    const auto& cfg = c.cfg;
    auto g = c.grid();
    c.enter("ground state");
    const auto gs = cached_ground_state(cfg.alpha, g);
    const double sponge = cfg.options.at("sponge").get<bool>();

    c.enter("evolve");
    EvolveOptions o;
    o.adaptive = false;
    o.sponge = sponge;
    o.sample_every = 0.05;
    o.keep_states = false;
    const auto t0 = Clock::now();
    Trajectory tr = evolve_nls(gs->phi, cfg.horizon, cfg.opt("dt"), o);
    const double runtime = seconds_since(t0);
    // final state for the phase law
    EvolveOptions ok = o;
    ok.sample_every = cfg.horizon;
    ok.keep_states = true;
    const Trajectory fin = evolve_nls(gs->phi, cfg.horizon, cfg.opt("dt"), ok);
    const double phase = phase_error(fin, *gs, cfg.horizon);
    const auto& a = tr.ledger.front();
    const auto& b = tr.ledger.back();
    const double mass = std::abs(b.mass + b.absorbed - a.mass) / a.mass;
    const double energy = std::abs(b.energy + b.absorbed_energy - a.energy) / std::abs(a.energy);

    c.enter("order");
    std::vector<double> dts = cfg.list("order_dts"), errs;
    const double th = cfg.opt("order_horizon");
    for (double dt : dts) {
        EvolveOptions oo = o;
        oo.sample_every = th;
        oo.keep_states = true;
        errs.push_back(phase_error(evolve_nls(gs->phi, th, dt, oo), *gs, th));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        const double x = std::log(dts[i]), y = std::log(errs[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double k = static_cast<double>(dts.size());
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);

    c.enter("blow-up");
    EvolveOptions bo;
    bo.adaptive = true;
    bo.keep_states = false;
    bo.sample_every = 0.05;
    const SectorField big(g, cfg.opt("blowup_scale") * gs->phi.values);
    const double bdt = cfg.opt("blowup_dt");
    bo.phase_cap = 0.1;
    const Trajectory b1 = evolve_nls(big, cfg.opt("blowup_horizon"), bdt, bo);
    bo.phase_cap = 0.05;
    const Trajectory b2 = evolve_nls(big, cfg.opt("blowup_horizon"), 0.5 * bdt, bo);
    const bool exited = b1.classification == "focusing exit" && b2.classification == "focusing exit";
    const double blow = exited ? std::abs(b1.exit_time - b2.exit_time) / b2.exit_time : 1.0;

    c.enter("output");
    {
        std::ofstream os(c.dir / "ledger.csv", std::ios::binary);
        os.imbue(std::locale::classic());
        tr.write_csv(os);
    }
    {
        Csv csv(c.dir / "order.csv", "dt,error");
        for (std::size_t i = 0; i < dts.size(); ++i) csv.row({dts[i], errs[i]});
    }
    {
        Csv csv(c.dir / "blowup.csv", "dt,classification,exit_time,steps");
        csv.row({bdt, b1.classification, b1.exit_time, b1.steps});
        csv.row({0.5 * bdt, b2.classification, b2.exit_time, b2.steps});
    }
    c.check("phase law error at horizon", 5, phase, "<", cfg.tol("phase"));
    c.check("relative mass drift", 5, mass, "<", cfg.tol("mass"));
    c.check("relative energy drift", 5, energy, "<", cfg.tol("energy"));
    c.check_in("splitting order slope", 5, slope, 2.0 - cfg.tol("slope"), 2.0 + cfg.tol("slope"));
    c.check("runtime s", 5, runtime, "<", cfg.tol("runtime_s"));
    c.check("blow-up exit time under step halving", 0, blow, "<", cfg.tol("blowup"));
    std::vector<double> ts, hs;
    for (const auto& r : tr.ledger) ts.push_back(r.t), hs.push_back(r.hhalf);
    c.m.results["evolve"] = {{"phase_error", phase}, {"mass_drift", mass},      {"energy_drift", energy},
                             {"order_slope", slope}, {"blowup_exit", {b1.exit_time, b2.exit_time}},
                             {"seconds", runtime}};
    c.m.results["norm_trajectory"] = decimate(ts, hs);
}

ShootOptions shoot_options(const ExperimentConfig& cfg) {
    ShootOptions so;
    if (cfg.tolerances.count("bisection")) so.tol = cfg.tol("bisection");
    return so;
}

void modulate(Context& c) {
    const auto& cfg = c.cfg;
    auto g = c.grid();
    c.enter("fixed point");
    ModulationOptions mo;
    mo.dt = cfg.opt("dt");
    ModulationStepper ms(g, cfg.alpha, mo);
    const SolitonParams p0{cfg.alpha};
    ModulationState s = ms.initial(Spinor::physical(SectorField(g)), p0);
    const int steps = static_cast<int>(cfg.opt("steps"));
    for (int k = 0; k < steps; ++k) ms.step(s);
    const double fixed = std::max({std::abs(s.alpha - cfg.alpha), std::abs(s.gamma), s.y.cwiseAbs().maxCoeff(),
                                   s.pi_dot_l1});
    c.check("exact soliton drift over " + std::to_string(steps) + " steps", 6, fixed, "<", cfg.tol("fixed_point"));

    c.enter("confined runs");
    ShootOptions so = shoot_options(cfg);
    so.modulation = mo;
    Shooter sh(p0, g, so);
    const double phi_h = cached_ground_state(cfg.alpha, g)->hhalf_norm;
    const auto amps = cfg.list("amplitudes");
    if (amps.size() != 2) throw ConfigError("modulate: amplitudes needs two entries");
    Csv csv(c.dir / "modulation.csv", "direction,amplitude,r0_hhalf,pi_dot_l1,orth_drift,sup_r,confinement");
    double rmin = 1e300, rmax = -1e300, drift = 0.0;
    for (int d = 0; d < static_cast<int>(cfg.opt("directions")); ++d) {
        const Spinor dir = random_direction(sh, cfg.seed + d);
        double pd[2];
        for (int k = 0; k < 2; ++k) {
            const ShootingResult r = shoot_h(sh, (amps[k] * phi_h) * dir);
            pd[k] = r.pi_dot_l1;
            drift = std::max(drift, r.orth_drift);
            csv.row({d, amps[k], r.r0_norm, r.pi_dot_l1, r.orth_drift, r.sup_r, r.confinement});
        }
        rmin = std::min(rmin, pd[1] / pd[0]);
        rmax = std::max(rmax, pd[1] / pd[0]);
    }
    c.check_in("pi_dot L1 halving ratio (min)", 6, rmin, cfg.tol("ratio_lo"), cfg.tol("ratio_hi"));
    c.check_in("pi_dot L1 halving ratio (max)", 6, rmax, cfg.tol("ratio_lo"), cfg.tol("ratio_hi"));
    c.check("orthogonality drift per unit time", 6, drift, "<", cfg.tol("orth_drift"));
    c.m.results["modulate"] = {{"fixed_point_drift", fixed}, {"ratio_min", rmin}, {"ratio_max", rmax},
                               {"orth_drift", drift}};
}

void shoot(Context& c) {
    const auto& cfg = c.cfg;
    c.enter("toolkit");
    const double th = cfg.opt("toolkit_horizon");
    const ScalarPath one = [](double) { return 1.0; };
    const ScalarPath zero = [](double) { return 0.0; };
    const double cst = 0.7;
    const auto s0 = solve_hyperbolic_ode(one, zero, zero, 0.0, th);
    const auto s1 = solve_hyperbolic_ode(one, [cst](double) { return cst; }, zero, 0.0, th);
    const ScalarPath decay = [](double t) { return std::exp(-t); };
    const auto s2 = solve_hyperbolic_ode(one, decay, zero, 0.0, th);
    const double cf = std::max({std::abs(s0.x1_0_required), s0.x1.cwiseAbs().maxCoeff(),
                                std::abs(s1.x1_0_required + cst), std::abs(s2.x1_0_required + 0.5)});
    c.check("closed forms (f = 0, f = c, f = e^-t)", 7, cf, "<", cfg.tol("closed_form"));
    const double eps = cfg.opt("perturbation");
    const double tdiv = cfg.opt("divergence_time");
    Vec at(1);
    at << tdiv;
    const double up = std::abs(forward_unstable(one, decay, s2.x1_0_required + eps, at)[0]);
    const double dn = std::abs(forward_unstable(one, decay, s2.x1_0_required - eps, at)[0]);
    c.check("perturbed initialization |x1(T)| (+)", 7, up, ">", cfg.tol("divergence"));
    c.check("perturbed initialization |x1(T)| (-)", 7, dn, ">", cfg.tol("divergence"));
    {
        Csv csv(c.dir / "toolkit.csv", "case,x1_0,expected");
        csv.row({"f=0", s0.x1_0_required, 0.0});
        csv.row({"f=c", s1.x1_0_required, -cst});
        csv.row({"f=exp(-t)", s2.x1_0_required, -0.5});
    }

    c.enter("shooter");
    auto g = c.grid();
    const SolitonParams p0{cfg.alpha};
    Shooter sh(p0, g, shoot_options(cfg));
    const double tol = sh.options().tol;
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : sh.default_horizon();

    c.enter("unstable exits");
    const double ee = cfg.opt("exit_eps");
    const Spinor none = Spinor::physical(SectorField(g));
    const ShootRun ep = sh.run(sh.initial_state(none, ee), cfg.opt("exit_horizon"));
    const ShootRun em = sh.run(sh.initial_state(none, -ee), cfg.opt("exit_horizon"));
    const bool exits = ep.classification.rfind("unstable-exit", 0) == 0 &&
                       em.classification.rfind("unstable-exit", 0) == 0 && ep.side == -em.side;
    const double exit_diff =
        exits ? std::abs(ep.exit_time - em.exit_time) / std::max(ep.exit_time, em.exit_time) : 1.0;
    c.check("+-eps exit time agreement", 0, exit_diff, "<", cfg.tol("exit_agreement"));

    c.enter("h(0)");
    const ShootingResult z = shoot_h(sh, none, horizon);
    c.check("|h(0)|", 8, std::abs(z.h), "<=", tol);

    c.enter("shoot");
    const double phi_h = cached_ground_state(cfg.alpha, g)->hhalf_norm;
    const Spinor dir = random_direction(sh, cfg.seed);
    const ShootingResult r = shoot_h(sh, (cfg.opt("amplitude") * phi_h) * dir, horizon);
    c.check("|h - h_integral|", 8, std::abs(r.h - r.h_integral), "<", cfg.tol("agreement_factor") * tol);
    c.check("sup ||R|| / ||R0||", 8, r.sup_r / r.r0_norm, "<=", cfg.tol("sup_factor"));
    c.flag("converged run confined", 8, r.confinement == "confined");
    double doubled = std::nan("");
    if (cfg.options.at("horizon_doubling").get<bool>()) {
        c.enter("horizon doubling");
        doubled = shoot_h(sh, (cfg.opt("amplitude") * phi_h) * dir, 2.0 * horizon).h;
        c.check("h change under horizon doubling", 0, std::abs(doubled - r.h), "<", cfg.tol("horizon_factor") * tol,
                false, "report only");
    }

    c.enter("output");
    {
        Csv csv(c.dir / "shoot.csv", "case,amplitude,h,h_integral,bracket_width,runs,sup_over_r0,confinement");
        csv.row({"zero", 0.0, z.h, z.h_integral, z.bracket[1] - z.bracket[0], z.runs, 0.0, z.confinement});
        csv.row({"direction", cfg.opt("amplitude"), r.h, r.h_integral, r.bracket[1] - r.bracket[0], r.runs,
                 r.sup_r / r.r0_norm, r.confinement});
    }
    {
        Csv csv(c.dir / "exits.csv", "eps,classification,exit_time");
        csv.row({ee, ep.classification, ep.exit_time});
        csv.row({-ee, em.classification, em.exit_time});
    }
    c.m.results["shoot"] = {{"sigma", sh.sigma()}, {"horizon", horizon},       {"h", r.h},
                            {"h_integral", r.h_integral}, {"h_zero", z.h}, {"sup_over_r0", r.sup_r / r.r0_norm},
                            {"k_ratio", r.k_ratio}};
    if (!std::isnan(doubled)) c.m.results["shoot"]["h_doubled_horizon"] = doubled;
    c.m.results["manifold"] = json::array({{{"dir", -1}, {"amplitude", 0.0}, {"h", z.h}},
                                           {{"dir", 0}, {"amplitude", cfg.opt("amplitude")}, {"h", r.h}}});
}

void manifold_sample_exp(Context& c) {
    const auto& cfg = c.cfg;
    const auto t0 = Clock::now();
    auto g = c.grid();
    const SolitonParams p0{cfg.alpha};
    const ShootOptions so = shoot_options(cfg);
    c.enter("shooter");
    Shooter main(p0, g, so);
    const int ndir = static_cast<int>(cfg.opt("directions"));
    const auto amps = cfg.list("amplitudes");
    if (amps.size() != 2) throw ConfigError("manifold-sample: amplitudes needs two entries");
    std::vector<Spinor> dirs;
    for (int d = 0; d < ndir; ++d) dirs.push_back(random_direction(main, cfg.seed + d));
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : main.default_horizon();

    c.enter("sweep");
    // task 0 is the zero row; then direction-major
    const int tasks = 1 + ndir * 2;
    std::vector<ManifoldRow> rows(tasks);
    std::vector<std::unique_ptr<Shooter>> workers(std::max(1, c.threads));
    const double phi_h = cached_ground_state(cfg.alpha, g)->hhalf_norm;
    parallel_for(tasks, c.threads, [&](int i, int w) {
        Shooter* sh = &main;
        if (c.threads > 1) {
            if (!workers[w]) workers[w] = std::make_unique<Shooter>(p0, g, so);
            sh = workers[w].get();
        }
        ManifoldRow row;
        const Spinor r0 = i == 0 ? Spinor::physical(SectorField(g)) : (amps[(i - 1) % 2] * phi_h) * dirs[(i - 1) / 2];
        row.dir_id = i == 0 ? -1 : (i - 1) / 2;
        row.amplitude = i == 0 ? 0.0 : amps[(i - 1) % 2];
        row.r0_hhalf = hhalf_norm(r0);
        try {
            row.result = shoot_h(*sh, r0, horizon);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows[i] = std::move(row);
    });
    const double runtime = seconds_since(t0);

    c.enter("output");
    {
        std::ofstream os(c.dir / "manifold.csv", std::ios::binary);
        os.imbue(std::locale::classic());
        write_manifold_csv(os, rows);
    }
    int errors = 0;
    double rmin = 1e300, rmax = -1e300;
    json table = json::array();
    for (const auto& r : rows) {
        if (!r.error.empty()) ++errors;
        table.push_back({{"dir", r.dir_id}, {"amplitude", r.amplitude}, {"h", r.result.h}});
    }
    for (int d = 0; d < ndir; ++d) {
        const double ratio = rows[2 + 2 * d].result.h / rows[1 + 2 * d].result.h;
        rmin = std::min(rmin, ratio);
        rmax = std::max(rmax, ratio);
    }
    c.check("directions", 8, ndir, ">=", 20.0);
    c.check("failed shots", 8, errors, "<", 0.5);
    c.check("|h(0)|", 8, std::abs(rows[0].result.h), "<=", so.tol);
    c.check_in("h halving ratio (min)", 8, rmin, cfg.tol("ratio_lo"), cfg.tol("ratio_hi"));
    c.check_in("h halving ratio (max)", 8, rmax, cfg.tol("ratio_lo"), cfg.tol("ratio_hi"));
    c.check("runtime s", 8, runtime, "<", cfg.tol("runtime_s"));
    c.m.results["manifold"] = table;
    c.m.results["manifold_summary"] = {{"ratio_min", rmin}, {"ratio_max", rmax}, {"seconds", runtime}};
}

void scatter(Context& c) {
    const auto& cfg = c.cfg;
    auto g = c.grid();
    ShootOptions so;
    so.modulation.sponge_opt.fraction = cfg.opt("sponge_fraction");
    so.modulation.sponge_opt.strength = cfg.opt("sponge_strength");
    c.enter("shooter");
    Shooter sh(SolitonParams{cfg.alpha}, g, so);
    const double phi_h = cached_ground_state(cfg.alpha, g)->hhalf_norm;
    const Spinor dir = random_direction(sh, cfg.seed);
    c.enter("confined run");
    const ConfinedRun cr = confined_run(sh, (cfg.opt("amplitude") * phi_h) * dir, cfg.horizon, cfg.list("marks"));

    c.enter("output");
    {
        Csv csv(c.dir / "remainder.csv", "t,remainder_hhalf");
        for (auto [t, v] : cr.remainders) csv.row({t, v});
    }
    {
        Csv csv(c.dir / "trajectory.csv", "t,r_hhalf,alpha,gamma");
        for (std::size_t i = 0; i < cr.times.size(); ++i)
            csv.row({cr.times[i], cr.hhalf[i], cr.params[i].alpha, cr.params[i].gamma});
    }
    auto rem = [&](double t) {
        for (auto [s, v] : cr.remainders)
            if (s == t) return v;
        throw ConfigError("scatter: marks must include 8, 16 and 32");
    };
    const double r8 = rem(8.0), r16 = rem(16.0), r32 = rem(32.0);
    c.flag("run confined", 9, cr.confined);
    c.check("rem(16) - rem(8)", 9, r16 - r8, "<=", 0.0);
    c.check("rem(32) - rem(16)", 9, r32 - r16, "<=", 0.0);
    c.check("rem(32) / rem(8)", 9, r32 / r8, "<=", cfg.tol("halving"));
    json rems = json::array();
    for (auto [t, v] : cr.remainders) rems.push_back({t, v});
    c.m.results["scatter"] = {{"remainders", rems},      {"segments", cr.segments},
                              {"sup_over_r0", cr.sup_r / cr.r0_norm}, {"max_correction", cr.max_correction}};
    c.m.results["norm_trajectory"] = decimate(cr.times, cr.hhalf);
}

Spinor test_spinor(const GridPtr& g) {
    Spinor f{SectorField(g), SectorField(g)};
    for (int j = 0; j < g->n; ++j) {
        const double r = g->nodes[j];
        f.upper.values[j] = std::exp(-r * r);
        f.lower.values[j] = cplx(0.5, 0.3) * std::exp(-r * r / 2);
    }
    return f;
}

void resolvent_sweep(Context& c) {
    const auto& cfg = c.cfg;
    const double mu = cfg.alpha * cfg.alpha;
    c.enter("kernel");
    // radial kernel against the angular average of the 3D kernel, d in [|r - s|, r + s]
    struct Probe {
        cplx lambda;
        Branch b;
    };
    const std::vector<Probe> probes{{0.5 * mu, Branch::none},
                                    {cplx(0.3, 0.4) * mu, Branch::none},
                                    {2.5 * mu, Branch::plus},
                                    {-2.5 * mu, Branch::plus},
                                    {1.7 * mu, Branch::minus}};
    const std::vector<double> radii{0.3, 1.0, 2.5, 4.0};
    double kerr = 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    for (const auto& pr : probes)
        for (double r : radii)
            for (double s : radii) {
                const auto k = free_kernel_radial(mu, pr.lambda, pr.b, r, s);
                for (int comp = 0; comp < 2; ++comp) {
                    auto part = [&](bool imag) {
                        return GK::integrate(
                            [&](double d) {
                                const cplx v = 2.0 * kPi / (r * s) * d * free_kernel_3d(mu, pr.lambda, pr.b, d)[comp];
                                return imag ? v.imag() : v.real();
                            },
                            std::abs(r - s), r + s, 12, 1e-15);
                    };
                    const cplx q(part(false), part(true));
                    kerr = std::max(kerr, std::abs(k[comp] - q) / std::abs(q));
                }
            }
    c.check("radial kernel vs angular average", 10, kerr, "<", cfg.tol("kernel"));

    c.enter("identity");
    {
        auto g = c.grid(static_cast<int>(cfg.opt("identity_n")));
        const auto h = assemble_hamiltonian(SolitonParams{cfg.alpha}, g);
        const Spinor f = test_spinor(g);
        const cplx l1 = 0.5 * mu, l2c = cplx(-0.3, 0.2) * mu;
        const Resolvent r1(h, l1), r2(h, l2c);
        const Spinor a = r1.apply(f), b = r2.apply(f);
        const double defect = l2(a - b - (l1 - l2c) * r1.apply(b)) / l2(a);
        c.check("resolvent identity defect", 10, defect, "<", cfg.tol("identity"));
        c.m.results["identity_defect"] = defect;
    }

    c.enter("sweep");
    auto g = c.grid();
    const SolitonParams p{cfg.alpha};
    const auto h = assemble_hamiltonian(p, g);
    const ProjectionSuite ps(compute_sigma_eigenpair(h), tangent_frame(p, g));
    const auto lambdas = lap_lambda_grid(mu, cfg.opt("lambda_max") * mu, static_cast<int>(cfg.opt("linear")),
                                         static_cast<int>(cfg.opt("logarithmic")));
    const ResolventSweep sw = limiting_absorption_sweep(h, &ps, lambdas);
    bool finite = true;
    for (std::size_t i = 0; i < lambdas.size(); ++i)
        finite = finite && std::isfinite(sw.norms[i]) && std::isfinite(sw.fredholm_norms[i]);
    c.flag("sweep norms finite", 10, finite);
    const auto imax = std::max_element(sw.norms.begin(), sw.norms.end()) - sw.norms.begin();
    c.flag("norm maximum below the top of the sweep", 10, imax + 1 < static_cast<long>(lambdas.size()), false,
           "report only");

    c.enter("decay");
    const Resolvent at_mu(h, mu, Branch::plus);
    const double mult = cfg.opt("decay_multiple");
    const Resolvent at_far(h, mult * mu, Branch::plus);
    const double ratio = at_far.fredholm_norm() / at_mu.fredholm_norm();
    c.check("Fredholm norm ratio " + format_number(mult) + " mu / mu", 10, ratio, "<", cfg.tol("decay"));
    const double edge_sv = at_mu.fredholm_min_sv();
    c.check("min singular value of I + K at mu", 10, edge_sv, ">", cfg.tol("edge_sv"));

    c.enter("output");
    {
        std::ofstream os(c.dir / "sweep.csv", std::ios::binary);
        os.imbue(std::locale::classic());
        sw.write_csv(os);
    }
    c.m.results["sweep"] = {{"lambda", sw.lambdas},
                            {"norm", sw.norms},
                            {"fredholm_norm", sw.fredholm_norms},
                            {"fredholm_min_sv", sw.fredholm_min_sv}};
    c.m.results["resolvent"] = {{"kernel_error", kerr}, {"decay_ratio", ratio}, {"edge_min_sv", edge_sv}};
}

void strichartz(Context& c) {
    const auto& cfg = c.cfg;
    const int members = static_cast<int>(cfg.opt("members"));
    const double amp = cfg.opt("a_amplitude");
    const SolitonParams p{cfg.alpha};
    struct Setup {
        GridPtr g;
        HamiltonianOperator h;
        std::unique_ptr<ContinuousProjector> pc;
    };
    std::vector<Setup> setups;
    for (int n : {cfg.n, static_cast<int>(cfg.opt("refined_n"))}) {
        c.enter("projector n=" + std::to_string(n));
        Setup s;
        s.g = c.grid(n);
        s.h = assemble_hamiltonian(p, s.g);
        s.pc = std::make_unique<ContinuousProjector>(ProjectionSuite(compute_sigma_eigenpair(s.h), tangent_frame(p, s.g)));
        setups.push_back(std::move(s));
    }
    c.enter("ensemble");
    // task = (grid, member, A on/off)
    const int tasks = 2 * members * 2;
    std::vector<StrichartzLedger> out(tasks);
    parallel_for(tasks, c.threads, [&](int i, int) {
        const int gi = i / (2 * members), m = (i / 2) % members, ai = i % 2;
        const auto& s = setups[gi];
        StrichartzOptions o;
        o.horizon = cfg.horizon;
        o.dt = cfg.opt("dt");
        if (ai == 1) o.a = [amp](double t) { return amp * std::sin(t); };
        out[i] = strichartz_monitor(s.h, *s.pc, random_smooth_spinor(s.g, cfg.seed + m), o);
    });
    double mx[2][2] = {{0, 0}, {0, 0}};
    bool finite = true;
    c.enter("output");
    {
        Csv csv(c.dir / "strichartz.csv", "n,member,a_amplitude,data_norm,sup_hhalf,l2_w126,ratio");
        for (int i = 0; i < tasks; ++i) {
            const int gi = i / (2 * members), m = (i / 2) % members, ai = i % 2;
            const auto& L = out[i];
            finite = finite && std::isfinite(L.ratio);
            mx[gi][ai] = std::max(mx[gi][ai], L.ratio);
            csv.row({setups[gi].g->n, m, ai ? amp : 0.0, L.data_norm, L.sup_hhalf, L.l2w126, L.ratio});
        }
    }
    const double change = std::abs(mx[1][0] - mx[0][0]) / mx[0][0];
    const double factor = mx[0][1] / mx[0][0];
    c.flag("ratios finite", 10, finite);
    c.check("max ratio change under grid doubling", 10, change, "<", cfg.tol("grid_change"));
    c.check_in("ratio with A(t) over ratio with A = 0", 10, factor, 1.0 / cfg.tol("forcing_factor"),
               cfg.tol("forcing_factor"));
    c.m.results["strichartz"] = {{"max_ratio", {mx[0][0], mx[1][0]}},
                                 {"max_ratio_with_a", {mx[0][1], mx[1][1]}},
                                 {"grid_change", change}};
}

void kernel_compare(Context& c) {
    const auto& cfg = c.cfg;
    auto g = c.grid();
    const SolitonParams p{cfg.alpha};
    c.enter("projector");
    const auto h = assemble_hamiltonian(p, g);
    const ContinuousProjector pc(ProjectionSuite(compute_sigma_eigenpair(h), tangent_frame(p, g)));
    c.enter("kernel");
    KernelOptions ko;
    ko.horizon = cfg.horizon;
    ko.dt = cfg.opt("dt");
    ko.weight_power = cfg.opt("weight_power");
    ko.switch_period = cfg.opt("switch_period");
    ko.iterations = static_cast<int>(cfg.opt("iterations"));
    ko.seed = cfg.seed;
    const auto rows = kernel_comparison(h, pc, cfg.list("amplitudes"), ko);
    const EnvelopeFit fit = fit_envelope(rows);
    c.enter("output");
    json table = json::array();
    {
        Csv csv(c.dir / "kernel.csv", "amplitude,norm,envelope");
        for (const auto& r : rows) {
            csv.row({r.amplitude, r.norm, fit.constant * std::pow(r.amplitude, 0.2)});
            table.push_back({{"amplitude", r.amplitude}, {"norm", r.norm}});
        }
    }
    c.flag("monotone in |A|", 10, fit.monotone);
    c.check("log-log slope", 10, fit.slope, ">=", cfg.tol("slope"));
    c.flag("bounded by C |A|^(1/5)", 10, fit.bounded);
    c.m.results["kernel"] = table;
    c.m.results["kernel_fit"] = {{"slope", fit.slope}, {"constant", fit.constant}};
}

using Runner = void (*)(Context&);

const std::map<std::string, Runner>& runners() {
    static const std::map<std::string, Runner> r{
        {"ground-state", ground_state}, {"zero-modes", zero_modes},
        {"spectrum", spectrum},         {"gap-check", gap_check},
        {"evolve", evolve},             {"modulate", modulate},
        {"shoot", shoot},               {"manifold-sample", manifold_sample_exp},
        {"scatter", scatter},           {"resolvent-sweep", resolvent_sweep},
        {"strichartz", strichartz},     {"kernel-compare", kernel_compare}};
    return r;
}

json check_json(const Check& c) {
    json j = {{"name", c.name},     {"criterion", c.criterion}, {"value", c.value},   {"relation", c.relation},
              {"threshold", c.threshold}, {"passed", c.passed}, {"asserted", c.asserted}};
    if (c.relation == "in") j["upper"] = c.upper;
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

void write_text(const fs::path& path, const std::string& text, bool append = false) {
    std::ofstream os(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

}  // namespace

// ---------------------------------------------------------------- config

double ExperimentConfig::tol(const std::string& key) const {
    auto it = tolerances.find(key);
    if (it == tolerances.end()) throw ConfigError("unknown tolerance '" + key + "' for " + experiment);
    return it->second;
}

double ExperimentConfig::opt(const std::string& key) const {
    if (!options.contains(key) || !options.at(key).is_number())
        throw ConfigError("numeric option '" + key + "' missing for " + experiment);
    return options.at(key).get<double>();
}

std::vector<double> ExperimentConfig::list(const std::string& key) const {
    if (!options.contains(key) || !options.at(key).is_array())
        throw ConfigError("list option '" + key + "' missing for " + experiment);
    return options.at(key).get<std::vector<double>>();
}

json ExperimentConfig::to_json() const {
    return {{"experiment", experiment}, {"grid", {{"r_max", r_max}, {"n", n}}}, {"alpha", alpha},
            {"tolerances", tolerances}, {"horizon", horizon},                    {"seed", seed},
            {"output_dir", output_dir}, {"options", options}};
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"ground-state", "spectrum",        "gap-check", "zero-modes",
                                                "evolve",       "modulate",        "shoot",     "manifold-sample",
                                                "scatter",      "resolvent-sweep", "strichartz", "kernel-compare"};
    return names;
}

ExperimentConfig default_config(const std::string& experiment) {
    auto it = registry().find(experiment);
    if (it == registry().end()) throw ConfigError("unknown experiment '" + experiment + "'");
    return it->second;
}

ExperimentConfig parse_config(const json& doc, const std::string& hint) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    std::string name = hint;
    if (doc.contains("experiment")) {
        if (!doc["experiment"].is_string()) throw ConfigError("'experiment' must be a string");
        name = doc["experiment"].get<std::string>();
        if (!hint.empty() && name != hint)
            throw ConfigError("config is for '" + name + "' but '" + hint + "' was requested");
    }
    if (name.empty()) throw ConfigError("config names no experiment");
    ExperimentConfig c = default_config(name);

    auto number = [](const json& v, const std::string& key) {
        if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
        return v.get<double>();
    };
    for (const auto& [key, v] : doc.items()) {
        if (key == "experiment") continue;
        if (key == "grid") {
            if (!v.is_object()) throw ConfigError("'grid' must be an object");
            for (const auto& [gk, gv] : v.items()) {
                if (gk == "r_max")
                    c.r_max = number(gv, "grid.r_max");
                else if (gk == "n") {
                    if (!gv.is_number_integer()) throw ConfigError("'grid.n' must be an integer");
                    c.n = gv.get<int>();
                } else
                    throw ConfigError("unknown key 'grid." + gk + "'");
            }
        } else if (key == "alpha") {
            c.alpha = number(v, key);
        } else if (key == "horizon") {
            c.horizon = number(v, key);
        } else if (key == "seed") {
            if (!v.is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
            c.seed = v.get<std::uint64_t>();
        } else if (key == "output_dir") {
            if (!v.is_string()) throw ConfigError("'output_dir' must be a string");
            c.output_dir = v.get<std::string>();
        } else if (key == "tolerances") {
            if (!v.is_object()) throw ConfigError("'tolerances' must be an object");
            for (const auto& [tk, tv] : v.items()) {
                if (!c.tolerances.count(tk)) throw ConfigError("unknown tolerance '" + tk + "' for " + name);
                const double t = number(tv, "tolerances." + tk);
                if (!(t > 0.0)) throw ConfigError("tolerance '" + tk + "' must be positive");
                c.tolerances[tk] = t;
            }
        } else if (key == "options") {
            if (!v.is_object()) throw ConfigError("'options' must be an object");
            for (const auto& [ok, ov] : v.items()) {
                if (!c.options.contains(ok)) throw ConfigError("unknown option '" + ok + "' for " + name);
                if (!same_kind(c.options[ok], ov)) throw ConfigError("option '" + ok + "' has the wrong type");
                c.options[ok] = ov;
            }
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    if (!(c.r_max > 0.0) || c.n < 16) throw ConfigError("grid needs r_max > 0 and n >= 16");
    if (!(c.alpha >= kAlphaMin && c.alpha <= kAlphaMax)) throw ConfigError("alpha outside [0.25, 4]");
    if (c.horizon < 0.0) throw ConfigError("horizon must be non-negative");
    return c;
}

ExperimentConfig load_config(const fs::path& path, const std::string& hint) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path.string());
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(doc, hint);
}

// ---------------------------------------------------------------- manifest

bool RunManifest::ok() const {
    if (!failed_stage.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed || !c.asserted; });
}

bool RunManifest::criterion_ok(int k) const {
    if (!failed_stage.empty()) return false;
    bool any = false;
    for (const auto& c : checks) {
        if (c.criterion != k || !c.asserted) continue;
        any = true;
        if (!c.passed) return false;
    }
    return any;
}

json RunManifest::to_json() const {
    json j = {{"config", config.to_json()}, {"version", version}, {"wall_time_s", wall_time}, {"ok", ok()}};
    if (!failed_stage.empty()) j["failed_stage"] = failed_stage, j["error"] = error;
    j["checks"] = json::array();
    for (const auto& c : checks) j["checks"].push_back(check_json(c));
    j["artifacts"] = json::array();
    for (const auto& a : artifacts) j["artifacts"].push_back({{"file", a.file}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    j["results"] = results;
    return j;
}

std::string version_string() { return std::string("ssl ") + SSL_VERSION; }

std::string file_sha256(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
    std::vector<char> buf(1 << 16);
    while (is) {
        is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += hex[md[i] >> 4], out += hex[md[i] & 15];
    return out;
}

int resolve_threads(int cli_value) {
    if (cli_value > 0) return cli_value;
    if (const char* env = std::getenv("SSL_THREADS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1) throw ConfigError("SSL_THREADS must be a positive integer");
        return static_cast<int>(v);
    }
    return 1;
}

std::vector<std::string> emit_plotdata(const RunManifest& m, const fs::path& dir) {
    fs::create_directories(dir);
    std::vector<std::string> missing;
    const json& r = m.results;
    auto has = [&](const char* key, const char* view) {
        if (r.contains(key)) return true;
        missing.push_back(view);
        return false;
    };
    {
        Csv csv(dir / "sigma_vs_alpha.csv", "alpha,sigma,sigma_over_alpha2");
        if (has("sigma_table", "sigma_vs_alpha"))
            for (const auto& row : r["sigma_table"]) {
                const double a = row["alpha"], s = row["sigma"];
                csv.row({a, s, s / (a * a)});
            }
    }
    {
        Csv csv(dir / "gap_eigenvalues.csv", "operator,sector,index,eigenvalue");
        if (has("gap", "gap_eigenvalues"))
            for (int l = 0; l < 2; ++l)
                for (const char* op : {"lplus", "lminus"}) {
                    const auto& ev = r["gap"][std::string(op) + "_l" + std::to_string(l)];
                    for (std::size_t i = 0; i < ev.size(); ++i)
                        csv.row({std::string(op) == "lplus" ? "L+" : "L-", l, i, ev[i].get<double>()});
                }
    }
    {
        Csv csv(dir / "remainder_vs_t.csv", "t,r_hhalf");
        if (has("norm_trajectory", "remainder_vs_t")) {
            const auto& t = r["norm_trajectory"]["t"];
            const auto& v = r["norm_trajectory"]["value"];
            for (std::size_t i = 0; i < t.size(); ++i) csv.row({t[i].get<double>(), v[i].get<double>()});
        }
    }
    {
        Csv csv(dir / "h_vs_amplitude2.csv", "direction,amplitude,amplitude2,h");
        if (has("manifold", "h_vs_amplitude2"))
            for (const auto& row : r["manifold"]) {
                const double a = row["amplitude"];
                csv.row({row["dir"].get<int>(), a, a * a, row["h"].get<double>()});
            }
    }
    {
        Csv csv(dir / "resolvent_norm_vs_lambda.csv", "lambda,norm,fredholm_norm,fredholm_min_sv");
        if (has("sweep", "resolvent_norm_vs_lambda")) {
            const auto& s = r["sweep"];
            for (std::size_t i = 0; i < s["lambda"].size(); ++i)
                csv.row({s["lambda"][i].get<double>(), s["norm"][i].get<double>(), s["fredholm_norm"][i].get<double>(),
                         s["fredholm_min_sv"][i].get<double>()});
        }
    }
    {
        Csv csv(dir / "kernel_norm_vs_A.csv", "amplitude,norm");
        if (has("kernel", "kernel_norm_vs_A"))
            for (const auto& row : r["kernel"]) csv.row({row["amplitude"].get<double>(), row["norm"].get<double>()});
    }
    return missing;
}

RunManifest run(const ExperimentConfig& config, int threads) {
    const auto t0 = Clock::now();
    RunManifest m;
    m.config = config;
    m.version = version_string();
    const fs::path dir = fs::path(config.output_dir) / config.experiment;
    fs::create_directories(dir);
    Context ctx{config, m, dir, std::max(1, threads)};
    try {
        runners().at(config.experiment)(ctx);
    } catch (const std::exception& e) {
        m.failed_stage = ctx.stage;
        m.error = e.what();
    }
    try {
        m.results["plotdata_missing"] = emit_plotdata(m, dir / "plotdata");
    } catch (const std::exception& e) {
        if (m.failed_stage.empty()) m.failed_stage = "plotdata", m.error = e.what();
    }
    m.wall_time = seconds_since(t0);

    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename() != "manifest.json" && e.path().filename() != "runs.jsonl")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files)
        m.artifacts.push_back({fs::relative(f, dir).generic_string(), file_sha256(f), fs::file_size(f)});

    const json j = m.to_json();
    write_text(dir / "manifest.json", j.dump(2) + "\n");
    write_text(dir / "runs.jsonl", j.dump() + "\n", true);
    return m;
}

}  // namespace ssl::lab
