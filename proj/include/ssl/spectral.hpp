#pragma once

#include "ssl/core.hpp"
#include "ssl/ground_state.hpp"
#include "ssl/operators.hpp"
#include "ssl/soliton_frame.hpp"

#include "json.hpp"

#include <vector>

namespace ssl {

/// H = [[Delta - alpha^2 + 2 V, e^{2i Gamma} V], [-e^{-2i Gamma} V, -Delta + alpha^2 - 2 V]]
/// with V = phi^2, acting on spinors of one sector. Linearized flow: i Z_t + H Z = 0.
struct HamiltonianOperator {
    GridPtr grid;
    double alpha = 1.0;
    double gamma = 0.0;
    Vec potential;  ///< phi^2 at the nodes (zero for the free operator)

    /// -Delta_l + alpha^2 - 3 V and -Delta_l + alpha^2 - V in u-space.
    SparseMat lplus() const;
    SparseMat lminus() const;
    Spinor apply(const Spinor& z) const;
    /// H* = sigma_3 H sigma_3
    Spinor apply_adjoint(const Spinor& z) const;
    /// 2n x 2n matrix in u-space, blocks (upper, lower).
    CMat dense() const;
    /// Real generator T = [[0, L-], [-L+, 0]] of the Gamma = 0 flow on
    /// (Re z, Im z) in u-space; eigenvalues of H are -i times those of T.
    Mat real_generator() const;
};

HamiltonianOperator assemble_hamiltonian(const SolitonParams& p, const GridPtr& grid);
HamiltonianOperator free_hamiltonian(double alpha, const GridPtr& grid);

/// All eigenvalues of H from a dense solve.
CVec dense_spectrum(const HamiltonianOperator& h);

class SpectralAnomaly : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SpectralData {
    double alpha = 1.0;
    double sigma = 0.0;
    /// H F+ = i sigma F+ (decays under the flow), F- = conj(F+) grows.
    Spinor f_plus;
    Spinor f_minus;
    /// Real growing mode e = (a, b), T e = sigma e, f-space; F- = (a + ib, a - ib).
    Vec mode_a;
    Vec mode_b;
    /// 1 / <F+, i s3 F->, the constant making P+ idempotent (the same for P-).
    double norm_constant = 0.0;
    double coarse_sigma = 0.0;
    int imaginary_pairs = 0;
    int off_axis = 0;
    double residual = 0.0;  ///< ||H F+ - i sigma F+|| / ||F+||, sup norm
};

struct SigmaOptions {
    int coarse_n = 512;
    double coarse_r_max = 20.0;  ///< at alpha = 1; scaled by 1 / alpha
    double zero_cutoff = 1e-2;   ///< |lambda| below this (times alpha^2) counts as a zero mode
};

/// Dense count of the imaginary pair on a coarse grid, then inverse
/// iteration on the operator's own grid. Throws SpectralAnomaly unless
/// exactly one pair is found.
SpectralData compute_sigma_eigenpair(const HamiltonianOperator& h, const SigmaOptions& opt = {});

/// P0, P+, P-, P_c on radial spinors.
class ProjectionSuite {
public:
    ProjectionSuite(SpectralData sd, TangentFrame frame);

    Spinor p0(const Spinor& z) const;
    Spinor p_plus(const Spinor& z) const;
    Spinor p_minus(const Spinor& z) const;
    Spinor p_c(const Spinor& z) const;
    /// Coefficients of P+ z and P- z along F+ and F-.
    cplx plus_coefficient(const Spinor& z) const;
    cplx minus_coefficient(const Spinor& z) const;

    const SpectralData& spectral() const { return sd_; }
    const TangentFrame& frame() const { return frame_; }

private:
    SpectralData sd_;
    TangentFrame frame_;
    double c_minus_ = 0.0;
};

ProjectionSuite riesz_projections(const SpectralData& sd, const TangentFrame& frame);

/// L = -Delta_l + alpha^2 - potential, self-adjoint in u-space.
struct ScalarOperator {
    GridPtr grid;
    double alpha = 1.0;
    Vec potential;

    SparseMat matrix() const;
};

ScalarOperator lplus_operator(const GroundState& gs, int l);
ScalarOperator lminus_operator(const GroundState& gs, int l);

/// Smallest singular value of I + V2 R0(edge) V1 for V = -potential on the
/// sector, R0 the free outgoing resolvent of -Delta_l + alpha^2. Values near 0
/// flag an eigenvalue or resonance at the edge.
double edge_resonance_test(const ScalarOperator& op, double edge);

struct GapReport {
    double alpha = 1.0;
    /// eigenvalues below alpha^2, per sector l = 0, 1
    std::array<std::vector<double>, 2> lplus;
    std::array<std::vector<double>, 2> lminus;
    double kernel_tol = 1e-6;
    int in_gap = 0;  ///< eigenvalues in (kernel_tol, alpha^2)
    double lminus_kernel_residual = 0.0;  ///< ||L- phi||_2 / ||phi||_2
    double lplus_kernel_residual = 0.0;   ///< ||L+ phi'||_2 / ||phi'||_2 on l = 1
    std::array<double, 2> edge_lplus{};
    std::array<double, 2> edge_lminus{};

    nlohmann::json to_json() const;
};

/// ||L- phi|| / ||phi|| (l = 0) and ||L+ phi'|| / ||phi'|| (l = 1), relative L^2.
std::array<double, 2> kernel_residuals(const GroundState& gs);

/// Dense symmetric eigensolves of L+ and L- in sectors 0 and 1.
GapReport lpm_gap_check(const GroundState& gs);

struct ZeroModeResiduals {
    double alpha_adj = 0.0;   ///< |H* d*_a W| / |d*_a W|
    double gamma_adj = 0.0;   ///< |H* d*_G W + 2i alpha d*_a W| / |d*_a W|
    double v_adj = 0.0;       ///< |H* d*_v W| / |d*_v W|
    double d_adj = 0.0;       ///< |H* d*_D W + 2i d*_v W| / |d*_v W|
    double gamma_kernel = 0.0;  ///< |H d_G W| / |d_G W|
    double alpha_chain = 0.0;   ///< |H d_a W + 2i alpha d_G W| / |d_G W|

    double max() const;
    nlohmann::json to_json() const;
};

ZeroModeResiduals zero_mode_algebra_check(const SolitonParams& p, const GridPtr& grid);

}  // namespace ssl
