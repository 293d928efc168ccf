#pragma once

#include "ssl/core.hpp"
#include "ssl/ground_state.hpp"

#include "json.hpp"

#include <array>
#include <memory>
#include <optional>

namespace ssl {

struct SolitonParams {
    double alpha = 1.0;
    double gamma = 0.0;
    std::array<double, 3> v{0.0, 0.0, 0.0};
    std::array<double, 3> d{0.0, 0.0, 0.0};

    bool radial() const { return v == std::array<double, 3>{} && d == std::array<double, 3>{}; }
};

inline constexpr double kAlphaMin = 0.25;
inline constexpr double kAlphaMax = 4.0;

nlohmann::json to_json(const SolitonParams& p);
SolitonParams soliton_params_from_json(const nlohmann::json& j);

/// Ground state on the given l = 0 grid, memoized per (grid shape, alpha).
std::shared_ptr<const GroundState> cached_ground_state(double alpha, const GridPtr& grid);

/// W = (w, conj w) with w = e^{i gamma} phi(., alpha); radial parameters only.
Spinor build_soliton(const SolitonParams& p, const GridPtr& grid);

/// Frame direction order: alpha, Gamma, v_1..v_3, D_1..D_3.
enum class Direction : int { alpha = 0, gamma = 1, v1 = 2, v2 = 3, v3 = 4, d1 = 5, d2 = 6, d3 = 7 };
inline constexpr int kFrameSize = 8;

/// A frame spinor is a radial profile times a sector basis function:
/// axis -1 means l = 0, axis k means the l = 1 function x_k / r.
struct FrameSpinor {
    Spinor field;
    int axis = -1;
};

/// Pairing over R^3; zero between different angular functions.
cplx pairing(const FrameSpinor& a, const FrameSpinor& b);

struct TangentFrame {
    SolitonParams params;
    std::array<FrameSpinor, kFrameSize> tangents;
    std::array<FrameSpinor, kFrameSize> cotangents;
    /// pairing(f, g) = <d_f W, d*_g W>
    Eigen::Matrix<double, kFrameSize, kFrameSize> pairing;
    double mass_w = 0.0;  ///< ||W||_2^2 = 2 M[phi]
};

/// Tangents: d_alpha W, d_Gamma W = i s3 W, d_{v_k} W = i s3 x_k W and
/// d_{D_k} W = -d_k W (derivative of w(x - D)); cotangents d*_a = i s3 d_G,
/// d*_G = i s3 d_a, d*_v = i s3 d_D, d*_D = i s3 d_v.
TangentFrame tangent_frame(const SolitonParams& p, const GridPtr& grid);

/// Second derivatives d_f d*_g W for f, g in {alpha, Gamma}.
std::array<std::array<Spinor, 2>, 2> radial_frame_derivatives(const SolitonParams& p, const GridPtr& grid);

struct Projection {
    SolitonParams params;
    Spinor remainder;
    std::array<double, 2> orthogonality{};  ///< <R, d*_alpha W>, <R, d*_Gamma W>
    int iterations = 0;
    double bound_ratio = 0.0;  ///< ||R||_{Hdot^1/2} / ||psi - W(p_guess)||_{Hdot^1/2}
};

class ProjectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Radial modulation: the (alpha, Gamma) with <psi - W, d*_f W> = 0.
Projection nearest_soliton(const Spinor& psi, const SolitonParams& guess, std::optional<double> tube = std::nullopt);

/// Wrap a phase into (-pi, pi].
double wrap_phase(double g);

/// Field a(r) + b(r) x_3 / r, given as spinors in l = 0 and l = 1.
struct AxialField {
    Spinor monopole;
    Spinor dipole;
};

/// x_3 component of P = integral of i grad psi conj(psi); other components vanish.
double axial_momentum(const AxialField& f);
/// |P[w + r] - P[w] - P[r]|
double momentum_split_check(const AxialField& w, const AxialField& r);

}  // namespace ssl
