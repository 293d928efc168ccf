#pragma once

#include "ssl/core.hpp"
#include "ssl/ground_state.hpp"
#include "ssl/operators.hpp"
#include "ssl/soliton_frame.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ssl {

/// Absorbing layer gamma(r) = strength * ((r - r_s) / (r_max - r_s))^3 on r > r_s = (1 - fraction) r_max.
struct SpongeOptions {
    double fraction = 0.15;
    double strength = 4.0;
};
Vec sponge_profile(const RadialGrid& g, const SpongeOptions& opt);

struct EvolveOptions {
    bool adaptive = true;        ///< cap dt so that dt * max|psi|^2 <= phase_cap
    double phase_cap = 0.1;
    double blowup_factor = 10.0;  ///< focusing exit when sup|psi| exceeds this times the initial sup
    double dt_min = 1e-7;        ///< adaptive steps below this end the run as "resolution limit"
    double sample_every = 0.1;
    bool keep_states = true;
    bool sponge = true;
    SpongeOptions sponge_opt;
};

struct LedgerRow {
    double t = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    double hhalf = 0.0;
    double w126_running = 0.0;  ///< (int_0^t ||psi||_{W^{1/2,6}}^2)^{1/2}, trapezoid over samples
    double absorbed = 0.0;      ///< mass removed by the sponge so far
    double absorbed_energy = 0.0;
    double sup = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<SectorField> states;
    std::vector<LedgerRow> ledger;
    std::string classification = "completed";  ///< | "focusing exit" | "resolution limit"
    double exit_time = 0.0;
    int steps = 0;

    void write_csv(std::ostream& os) const;
};

/// Strang splitting of i psi_t + Delta psi + |psi|^2 psi = 0 on a radial l = 0 grid:
/// half nonlinear phase, full kinetic step diagonal in the sine basis, half phase,
/// then the sponge mask e^{-gamma dt}.
Trajectory evolve_nls(const SectorField& psi0, double t_end, double dt, const EvolveOptions& opt = {});

/// N(R, W) = (-|r|^2 r - r^2 conj(w) - 2|r|^2 w, |r|^2 conj(r) + conj(r)^2 w + 2|r|^2 conj(w)).
Spinor nonlinearity_N(const Spinor& r, const Spinor& w);

class ModulationBreakdown : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// psi = e^{i Theta} (phi(., alpha) + z), Theta = theta + Gamma, d theta / dt = alpha^2.
/// z is stored as y = (r Re z, r Im z) on the grid.
struct ModulationState {
    double t = 0.0;
    double alpha = 1.0;
    double gamma = 0.0;
    double theta = 0.0;
    Vec y;
    double alpha_dot = 0.0;
    double gamma_dot = 0.0;
    double pi_dot_l1 = 0.0;  ///< int_0^t (|alpha'| + |Gamma'|)

    SolitonParams params() const;
    /// R = psi - W_pi in the lab frame.
    Spinor remainder(const GridPtr& grid) const;
};

struct ModulationOptions {
    double dt = 0.01;
    bool sponge = true;
    SpongeOptions sponge_opt;
    double max_condition = 1e8;
};

/// Integrating-factor RK4 (Lawson) for the (z, alpha, Gamma) system: the linear
/// part is the real generator T = [[0, L-], [-L+, 0]] at the reference alpha_0
/// (minus the sponge), exponentiated exactly; everything else, including the
/// change of the potential with alpha, is treated as forcing. alpha' and
/// Gamma' come from the 2 x 2 system that keeps <R, d*_alpha W> and
/// <R, d*_Gamma W> constant.
class ModulationStepper {
public:
    ModulationStepper(GridPtr grid, double alpha0, const ModulationOptions& opt = {});

    /// Rotated-frame state for psi = W(p0) + R0 with R0 a physical spinor.
    ModulationState initial(const Spinor& r0, const SolitonParams& p0) const;
    /// stage_forcing, when given, receives g at the four Runge-Kutta stages.
    void step(ModulationState& s, std::array<Vec, 4>* stage_forcing = nullptr);
    /// (alpha', Gamma') at the given state.
    Eigen::Vector2d rates(const ModulationState& s);
    /// <R, d*_alpha W>, <R, d*_Gamma W>
    Eigen::Vector2d orthogonality(const ModulationState& s);
    /// Lab-frame forcing F - V_pi R of i R_t + Delta R = F - V_pi R (no sponge term), f-space.
    CVec free_forcing(const ModulationState& s);
    /// Real-form forcing g(y) of y' = T y + g, u-space.
    Vec real_forcing(const ModulationState& s);

    const GridPtr& grid() const { return grid_; }
    double alpha0() const { return alpha0_; }
    double dt() const { return opt_.dt; }
    const Mat& generator() const { return t_; }

private:
    struct Local {
        Vec u, du, d2u;  // r phi, r phi_alpha, r phi_alpha_alpha
    };
    Local profiles(double alpha);
    Eigen::Vector2d solve_rates(const Vec& y, double alpha, const Local& loc) const;
    Vec forcing(const Vec& y, double alpha, const Local& loc, const Eigen::Vector2d& rates) const;

    GridPtr grid_;
    double alpha0_;
    ModulationOptions opt_;
    Vec phi0_sq_;
    Mat t_;
    Mat half_;  // exp(dt / 2 T)
    SolitonFamily family_;
};

/// Real/imaginary parts of N_1(z) = -(|z|^2 z + z^2 phi + 2 |z|^2 phi) in u-space.
void cubic_forcing_u(const RadialGrid& g, const Vec& phi_u, const Vec& a_u, const Vec& b_u, Vec& re_u, Vec& im_u);

struct TrackRecord {
    double t = 0.0;
    SolitonParams params;
    double hhalf_r = 0.0;
    double w126_running = 0.0;
    double orth_resid = 0.0;
    int iterations = 0;
};

struct TrackResult {
    std::vector<TrackRecord> records;
    bool left_tube = false;
    double exit_time = 0.0;
};

/// Nearest-soliton decomposition of every stored state; the guess for the next
/// sample advances Gamma by alpha^2 dt.
TrackResult track_modulated_decomposition(const Trajectory& traj, const SolitonParams& guess, double tube);

/// Accumulates J(t) = int_0^t e^{-is Delta} G(s) ds in the sine basis with
/// Filon weights (G linear in s on each step, exact oscillatory factor).
class ScatteringAccumulator {
public:
    explicit ScatteringAccumulator(GridPtr grid);

    /// G given at the start and end of a step [t0, t1].
    void add_step(double t0, double t1, const CVec& g0, const CVec& g1);
    /// Record J at the current time.
    void mark(double t);
    /// R_free = R(0) - i J(T), T the last accumulated time.
    SectorField free_profile(const SectorField& r0) const;
    /// ||int_t^T e^{-is Delta} G ds||_{Hdot^1/2} at the marked times (upper component;
    /// multiply by sqrt 2 for the spinor norm).
    std::vector<std::pair<double, double>> remainders() const;

private:
    GridPtr grid_;
    Vec omega_;
    CVec total_;
    std::vector<std::pair<double, CVec>> marks_;
};

/// Free flow e^{it Delta} of an l = 0 field, exact in the sine basis.
SectorField free_flow(const SectorField& f, double t);

}  // namespace ssl
