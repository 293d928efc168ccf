#pragma once

#include "ssl/core.hpp"
#include "ssl/dynamics.hpp"
#include "ssl/soliton_frame.hpp"
#include "ssl/spectral.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace ssl {

// ---------------------------------------------------------------- scalar toolkit

using ScalarPath = std::function<double(double)>;

/// x1' = sigma(t) x1 + f1(t), x2' = -sigma(t) x2 + f2(t) on [0, horizon].
struct HyperbolicSolution {
    Vec times;
    Vec x1;  ///< the bounded solution, x1(t) = -int_t^T e^{-(S(s) - S(t))} f1(s) ds
    Vec x2;  ///< forward Duhamel from x2_0
    double x1_0_required = 0.0;
    double tail_bound = 0.0;  ///< bound on the part of the x1 integral beyond the horizon
    double sigma_min = 0.0;
};

/// S(t) = int_0^t sigma, evaluated on Gauss-Legendre panels.
class SigmaIntegral {
public:
    SigmaIntegral(ScalarPath sigma, double horizon);
    double operator()(double t) const;
    double sigma_min() const { return sigma_min_; }

private:
    ScalarPath sigma_;
    double width_;
    std::vector<double> cumulative_;
    double sigma_min_;
};

HyperbolicSolution solve_hyperbolic_ode(const ScalarPath& sigma, const ScalarPath& f1, const ScalarPath& f2, double x2_0,
                                        double horizon, int samples = 401);

/// x1(t) = e^{S(t)} (x1_0 + int_0^t e^{-S(s)} f1(s) ds) at the given times.
Vec forward_unstable(const ScalarPath& sigma, const ScalarPath& f1, double x1_0, const Vec& times);

// ---------------------------------------------------------------- shooting

struct ShootOptions {
    double tol = 1e-10;
    double tube_factor = 0.1;  ///< tube radius = tube_factor ||phi||_{Hdot^1/2}
    double horizon_efolds = 8.0;
    ModulationOptions modulation;
    SigmaOptions sigma;
};

struct ShootRun {
    std::string classification = "confined";  ///< | "unstable-exit-plus" | "unstable-exit-minus" | "indeterminate"
    int side = 0;                             ///< sign of x at exit, or at the horizon when confined
    double exit_time = 0.0;
    double x_end = 0.0;
    double sup_r = 0.0;
    double r0_norm = 0.0;
    double pi_dot_l1 = 0.0;
    double orth_drift = 0.0;  ///< max |<R, d*W>(t) - <R, d*W>(0)| / t
    std::vector<double> times;
    std::vector<double> x;
    std::vector<double> forcing;  ///< f in x' = sigma_0 x + f
    /// int_0^t e^{-sigma_0 s} f(s) ds with the integrator's own stage rule
    double forcing_integral = 0.0;
    std::vector<double> hhalf;
    ModulationState final_state;
};

struct ShootingResult {
    double h = 0.0;
    std::array<double, 2> bracket{};
    double horizon = 0.0;
    std::string classification_lo;
    std::string classification_hi;
    double tube_radius = 0.0;
    double r0_norm = 0.0;
    double k_ratio = 0.0;    ///< |h| / ||R0||^2
    double h_integral = 0.0;  ///< -x_R0 - int_0^T e^{-sigma_0 s} f(s) ds along the converged run
    double h_integral_simpson = 0.0;  ///< the same with Simpson's rule on the step samples
    double sup_r = 0.0;
    double pi_dot_l1 = 0.0;
    double orth_drift = 0.0;
    int runs = 0;
    bool monotone = true;
    std::string confinement = "confined";
};

class BracketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Centre-stable shooting around a fixed radial soliton W(p0) on one grid.
/// Trajectories use the modulation stepper; the unstable coefficient is
/// x = l^T y / l^T e for the growing mode e of the frozen generator and its
/// left vector l.
class Shooter {
public:
    Shooter(const SolitonParams& p0, GridPtr grid, const ShootOptions& opt = {});

    double sigma() const { return sd_.sigma; }
    double tube() const { return tube_; }
    double default_horizon() const { return opt_.horizon_efolds / sd_.sigma; }
    const SolitonParams& params() const { return p0_; }
    const GridPtr& grid() const { return grid_; }
    const SpectralData& spectral() const { return sd_; }
    const ProjectionSuite& projections() const { return *proj_; }
    const ShootOptions& options() const { return opt_; }
    ModulationStepper& stepper() { return *stepper_; }

    /// F_u = (a + ib, a - ib): the physical growing direction.
    Spinor unstable_direction() const;
    /// z - P0 z - (unstable part of z).
    Spinor admissible(const Spinor& z) const;
    /// ||P0 R0||_2 and the unstable coefficient of R0.
    std::array<double, 2> admissibility_defect(const Spinor& r0) const;

    ModulationState initial_state(const Spinor& r0, double h) const;
    double unstable_coefficient(const Vec& y) const;
    /// Vector e with x(e) = 1, in the stepper's y-space.
    const Vec& growing_vector() const { return e_; }

    /// Integrate from a state until tube exit, breakdown, or the horizon.
    /// acc, when given, receives the free-flow forcing of every step.
    ShootRun run(const ModulationState& start, double horizon, bool keep = false,
                 ScatteringAccumulator* acc = nullptr, const std::vector<double>* marks = nullptr);

private:
    SolitonParams p0_;
    GridPtr grid_;
    ShootOptions opt_;
    SpectralData sd_;
    std::unique_ptr<ProjectionSuite> proj_;
    std::unique_ptr<ModulationStepper> stepper_;
    Vec e_;
    Vec left_;
    double left_norm_ = 1.0;
    double tube_ = 0.0;
};

/// Bisection on h in R(0) = R0 + h F_u until the bracket is below tol.
ShootingResult shoot_h(Shooter& shooter, const Spinor& r0, double horizon = 0.0, double tol = 0.0);

/// Coefficient along the growing vector that puts an arbitrary state on the
/// centre-stable side, by fixed-point iteration of the integral formula; used
/// to keep long runs confined segment by segment.
double shoot_correction(Shooter& shooter, const ModulationState& state, double horizon, double tol,
                        ShootingResult* report = nullptr);

struct ManifoldRow {
    int dir_id = 0;
    double amplitude = 0.0;
    double r0_hhalf = 0.0;
    ShootingResult result;
    std::string error;
};

/// Random smooth admissible direction, normalized in Hdot^1/2 (spinor norm).
Spinor random_direction(const Shooter& shooter, std::uint64_t seed);

/// h over directions x amplitudes, amplitude measured as a fraction of ||phi||_{Hdot^1/2}.
std::vector<ManifoldRow> manifold_sample(Shooter& shooter, const std::vector<Spinor>& directions,
                                         const std::vector<double>& amplitudes, double horizon = 0.0);

void write_manifold_csv(std::ostream& os, const std::vector<ManifoldRow>& rows);

/// Long confined run by segmented re-shooting; returns the final run data
/// and fills the scattering accumulator.
struct ConfinedRun {
    std::vector<double> times;
    std::vector<double> hhalf;
    std::vector<SolitonParams> params;
    std::vector<std::pair<double, double>> remainders;
    double r0_norm = 0.0;
    double sup_r = 0.0;
    int segments = 0;
    double max_correction = 0.0;
    bool confined = true;
};
ConfinedRun confined_run(Shooter& shooter, const Spinor& r0, double horizon, const std::vector<double>& marks);

}  // namespace ssl
