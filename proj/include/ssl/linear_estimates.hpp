#pragma once

#include "ssl/core.hpp"
#include "ssl/green.hpp"
#include "ssl/spectral.hpp"

#include "json.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

namespace ssl {

/// Boundary value of the resolvent on the continuous spectrum.
enum class Branch { none, plus, minus };  // lambda + i0, lambda - i0

const char* branch_name(Branch b);

/// Decay rates of the two diagonal entries of R0(lambda) = (H0 - lambda)^{-1},
/// H0 = diag(Delta - mu, -Delta + mu): kappa_1^2 = mu + lambda, kappa_2^2 = mu - lambda.
std::array<cplx, 2> free_wavenumbers(double mu, cplx lambda, Branch b);

/// Diagonal kernel of R0 in R^3 at distance d: (-e^{-kappa_1 d}, e^{-kappa_2 d}) / (4 pi d).
std::array<cplx, 2> free_kernel_3d(double mu, cplx lambda, Branch b, double d);

/// Radial kernel K with (R0 f)(r) = int K(r, s) f(s) s^2 ds for l = 0 data.
std::array<cplx, 2> free_kernel_radial(double mu, cplx lambda, Branch b, double r, double s);

class NearSingularError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// R0 and R_V = (H - lambda)^{-1} at one spectral point, l = 0. With
/// V = sigma_3 S, S the pointwise Hermitian 2 x 2 potential, V1 = sigma_3 S^{1/2}
/// and V2 = S^{1/2}:
///   R_V = R0 - R0 V1 (I + V2 R0 V1)^{-1} V2 R0.
/// Matrices act on u = r f, upper block first.
class Resolvent {
public:
    Resolvent(const HamiltonianOperator& h, cplx lambda, Branch b = Branch::none);

    Spinor apply_free(const Spinor& f) const;
    /// Throws NearSingularError when the Fredholm solve residual exceeds 1e-8.
    Spinor apply(const Spinor& f) const;

    CMat free_matrix() const;
    CMat matrix() const;
    /// V2 R0 V1
    const CMat& birman_schwinger() const { return k_; }
    double fredholm_norm() const;
    double fredholm_min_sv() const;
    double rcond() const { return rcond_; }

    cplx lambda() const { return lambda_; }
    Branch branch() const { return branch_; }
    const GridPtr& grid() const { return grid_; }

private:
    CVec apply_free_u(const CVec& u) const;  // 2n
    CVec apply_u(const CVec& u) const;

    GridPtr grid_;
    double mu_;
    cplx lambda_;
    Branch branch_;
    std::array<CMat, 2> green_;  // R0 blocks, signs included
    std::array<CVec, 3> sqrt_s_;  // S^{1/2} entries: diagonal, upper-right, lower-left
    bool free_ = true;
    CMat k_;
    Eigen::PartialPivLU<CMat> lu_;
    double rcond_ = 1.0;
};

Spinor free_resolvent_apply(const HamiltonianOperator& h, cplx lambda, Branch b, const Spinor& f);
Spinor perturbed_resolvent_apply(const HamiltonianOperator& h, cplx lambda, Branch b, const Spinor& f);

/// Dense u-space matrix of the l = 0 map u -> r |grad|^s (u / r) through the sine transform.
Mat fractional_matrix_u(const RadialGrid& g, double s);

/// Estimate of ||A||_{L^p -> L^q} for a u-space matrix acting on l = 0 spinors,
/// with L^p of the pair (f1, f2) taken as (||f1||_p^p + ||f2||_p^p)^{1/p};
/// Boyd's nonlinear power iteration from `starts` seeded random vectors.
double power_norm_pq(const RadialGrid& g, const CMat& a, double p, double q, int starts = 4, int iterations = 40,
                     std::uint64_t seed = 1);

struct ResolventSweep {
    std::vector<double> lambdas;
    Branch branch = Branch::plus;
    std::vector<double> norms;            ///< ||R_V P_c|| between the Wdot^{1/2,6/5} and Wdot^{1/2,6} proxies
    std::vector<double> fredholm_norms;   ///< ||V2 R0 V1||_{2 -> 2}
    std::vector<double> fredholm_min_sv;  ///< smallest singular value of I + V2 R0 V1

    void write_csv(std::ostream& os) const;
};

/// mu, then 4 mu evenly, then log-spaced to lambda_max.
std::vector<double> lap_lambda_grid(double mu, double lambda_max, int linear, int logarithmic);

/// Limiting-absorption sweep; pc may be null to skip the weighted norms.
ResolventSweep limiting_absorption_sweep(const HamiltonianOperator& h, const ProjectionSuite* pc,
                                         const std::vector<double>& lambdas, Branch b = Branch::plus);

/// P_c in low-rank form on u-space spinors: P_c z = z - Q (B z).
class ContinuousProjector {
public:
    explicit ContinuousProjector(const ProjectionSuite& suite);
    CVec apply(const CVec& u) const;
    CVec apply_adjoint(const CVec& u) const;
    int rank() const { return static_cast<int>(q_.cols()); }

private:
    CMat q_;
    CMat b_;
};

/// Split-step propagator of i Z_t + A sigma_3 Z + H Z = 0 on u-space spinors:
/// half pointwise potential, exact kinetic step in the sine basis (with the
/// stencil symbol, so it matches the discrete H), half potential.
class LinearPropagator {
public:
    LinearPropagator(const HamiltonianOperator& h, double dt);

    /// One step with A held at the given value.
    void step(CVec& u, double a) const;
    /// L^2 adjoint of step().
    void step_adjoint(CVec& u, double a) const;
    double dt() const { return dt_; }

private:
    void potential_half(CVec& u, bool adjoint) const;
    void kinetic(CVec& u, double a, bool adjoint) const;

    int n_;
    double dt_;
    double mu_;
    std::shared_ptr<const SineTransform> dst_;
    std::array<CVec, 4> half_;  // exp(i dt/2 V) entries per node: 11, 12, 21, 22
};

struct StrichartzLedger {
    double data_norm = 0.0;     ///< ||P_c Z(0)||_{Hdot^1/2}
    double forcing_norm = 0.0;  ///< ||F||_{L^1 Hdot^1/2}
    double sup_hhalf = 0.0;
    double l2w126 = 0.0;
    double ratio = 0.0;

    nlohmann::json to_json() const;
};

struct StrichartzOptions {
    double horizon = 4.0;
    double dt = 0.01;
    std::function<double(double)> a;                   ///< A(t); empty means 0
    std::function<Spinor(double)> forcing;             ///< F(t); empty means 0
};

/// Integrates the projected flow (P_c applied after every step) and
/// accumulates the ledger norms of P_c Z.
StrichartzLedger strichartz_monitor(const HamiltonianOperator& h, const ContinuousProjector& pc, const Spinor& z0,
                                    const StrichartzOptions& opt = {});

/// Smooth random l = 0 spinor defined off-grid (Gaussian bumps with seeded
/// centres, widths and complex amplitudes), so the same member can be sampled
/// on different grids.
Spinor random_smooth_spinor(const GridPtr& g, std::uint64_t seed);

struct KernelRow {
    double amplitude = 0.0;
    double norm = 0.0;
};

struct KernelOptions {
    double horizon = 4.0;
    double dt = 0.02;
    double weight_power = 2.0;  ///< <x>^{-N}
    double switch_period = 1.0;  ///< A(t) = a * (-1)^floor(t / period)
    int iterations = 30;
    std::uint64_t seed = 7;
};

/// Weighted space-time norm of F -> <x>^{-N} int_0^t (T_A(t, s) - T(t, s)) P_c <x>^{-N} F(s) ds
/// on L^2_t L^2_x, T_A the propagator with A(t) sigma_3 and T the one without,
/// by power iteration with the adjoint recursion.
std::vector<KernelRow> kernel_comparison(const HamiltonianOperator& h, const ContinuousProjector& pc,
                                         const std::vector<double>& amplitudes, const KernelOptions& opt = {});

struct EnvelopeFit {
    double slope = 0.0;     ///< least-squares log-log slope over nonzero amplitudes
    double constant = 0.0;  ///< C with C a_max^{1/5} = norm(a_max)
    bool monotone = true;
    bool bounded = true;    ///< norm(a) <= C a^{1/5} for every a
};
EnvelopeFit fit_envelope(const std::vector<KernelRow>& rows);

}  // namespace ssl
