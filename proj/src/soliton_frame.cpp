#include "ssl/soliton_frame.hpp"

#include "ssl/norms.hpp"
#include "ssl/operators.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace ssl {

nlohmann::json to_json(const SolitonParams& p) {
    return {{"alpha", p.alpha}, {"gamma", p.gamma}, {"v", p.v}, {"d", p.d}};
}

SolitonParams soliton_params_from_json(const nlohmann::json& j) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() != "alpha" && it.key() != "gamma" && it.key() != "v" && it.key() != "d")
            throw ParameterError("soliton params: unknown key '" + it.key() + "'");
    }
    SolitonParams p;
    p.alpha = j.at("alpha").get<double>();
    p.gamma = j.value("gamma", 0.0);
    if (j.contains("v")) p.v = j.at("v").get<std::array<double, 3>>();
    if (j.contains("d")) p.d = j.at("d").get<std::array<double, 3>>();
    if (!(p.alpha >= kAlphaMin && p.alpha <= kAlphaMax)) throw ParameterError("soliton params: alpha outside [0.25, 4]");
    return p;
}

std::shared_ptr<const GroundState> cached_ground_state(double alpha, const GridPtr& grid) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, double>, std::shared_ptr<const GroundState>> cache;
    const auto key = std::make_tuple(grid->n, grid->r_max, alpha);
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto gs = std::make_shared<const GroundState>(solve_ground_state(alpha, with_sector(grid, 0), default_residual_tol(alpha)));
    std::lock_guard lock(mu);
    return cache.emplace(key, gs).first->second;
}

double wrap_phase(double g) {
    double w = std::remainder(g, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

namespace {

Spinor rotated(const GridPtr& g, const Vec& profile, double gamma) {
    const cplx e = std::polar(1.0, gamma);
    return {SectorField(g, e * profile.cast<cplx>()), SectorField(g, std::conj(e) * profile.cast<cplx>())};
}

Spinor i_sigma3(const Spinor& s) { return kI * sigma3(s); }

void require_radial(const SolitonParams& p) {
    if (!p.radial())
        throw ParameterError("build_soliton: nonzero boost or translation needs a 3D field (only frame pairings support them)");
}

}  // namespace

Spinor build_soliton(const SolitonParams& p, const GridPtr& grid) {
    require_radial(p);
    if (grid->l != 0) throw ParameterError("build_soliton: needs an l = 0 grid");
    auto gs = cached_ground_state(p.alpha, grid);
    return rotated(grid, gs->phi.values.real(), p.gamma);
}

cplx pairing(const FrameSpinor& a, const FrameSpinor& b) {
    if (a.axis != b.axis) return 0.0;
    return pairing(a.field, b.field);
}

TangentFrame tangent_frame(const SolitonParams& p, const GridPtr& grid) {
    require_radial(p);
    const GridPtr g0 = with_sector(grid, 0);
    const GridPtr g1 = with_sector(grid, 1);
    auto gs = cached_ground_state(p.alpha, g0);
    const Vec phi = gs->phi.values.real();
    const Vec u = gs->u();
    const Vec dphi_dalpha = from_u(*g0, alpha_derivatives(*g0, u, p.alpha, 1).d1);
    const Vec dphi_dr = radial_derivative(gs->phi).values.real();

    TangentFrame fr;
    fr.params = p;
    const Spinor w = rotated(g0, phi, p.gamma);
    fr.tangents[0] = {rotated(g0, dphi_dalpha, p.gamma), -1};
    fr.tangents[1] = {i_sigma3(w), -1};
    for (int k = 0; k < 3; ++k) {
        // x_k phi = (r phi) x_k / r ; -d_k phi = -phi'(r) x_k / r
        fr.tangents[2 + k] = {i_sigma3(rotated(g1, Vec(g0->nodes.cwiseProduct(phi)), p.gamma)), k};
        fr.tangents[5 + k] = {rotated(g1, Vec(-dphi_dr), p.gamma), k};
    }
    fr.cotangents[0] = {i_sigma3(fr.tangents[1].field), -1};
    fr.cotangents[1] = {i_sigma3(fr.tangents[0].field), -1};
    for (int k = 0; k < 3; ++k) {
        fr.cotangents[2 + k] = {i_sigma3(fr.tangents[5 + k].field), k};
        fr.cotangents[5 + k] = {i_sigma3(fr.tangents[2 + k].field), k};
    }
    for (int f = 0; f < kFrameSize; ++f)
        for (int c = 0; c < kFrameSize; ++c) fr.pairing(f, c) = pairing(fr.tangents[f], fr.cotangents[c]).real();
    fr.mass_w = pairing(w, w).real();
    return fr;
}

std::array<std::array<Spinor, 2>, 2> radial_frame_derivatives(const SolitonParams& p, const GridPtr& grid) {
    require_radial(p);
    auto gs = cached_ground_state(p.alpha, grid);
    const auto& g = *grid;
    const auto d = alpha_derivatives(g, gs->u(), p.alpha, 2);
    const Spinor w = rotated(grid, gs->phi.values.real(), p.gamma);
    const Spinor dw = rotated(grid, from_u(g, d.d1), p.gamma);
    const Spinor d2w = rotated(grid, from_u(g, d.d2), p.gamma);
    // [f][g] = d_f d*_g W
    std::array<std::array<Spinor, 2>, 2> out;
    out[0][0] = cplx(-1.0) * dw;
    out[1][0] = cplx(-1.0) * i_sigma3(w);
    out[0][1] = i_sigma3(d2w);
    out[1][1] = cplx(-1.0) * dw;
    return out;
}

Projection nearest_soliton(const Spinor& psi, const SolitonParams& guess, std::optional<double> tube) {
    require_radial(guess);
    const GridPtr grid = psi.grid();
    const auto& g = *grid;
    if (g.l != 0) throw ParameterError("nearest_soliton: radial spinor expected");
    auto gs0 = cached_ground_state(guess.alpha, grid);
    SolitonFamily family(grid, *gs0);

    const double initial_dist = hhalf_norm(psi - rotated(grid, gs0->phi.values.real(), guess.gamma));
    if (tube && initial_dist > *tube) throw ProjectionError("nearest_soliton: data outside the tube around the guess");

    struct Eval {
        Eigen::Vector2d residual;
        Eigen::Matrix2d jacobian;
        Spinor remainder;
    };
    auto evaluate = [&](double alpha, double gamma) {
        auto prof = family.at(alpha);
        const Spinor w = rotated(grid, from_u(g, prof.u), gamma);
        const Spinor dw = rotated(grid, from_u(g, prof.du), gamma);
        const Spinor d2w = rotated(grid, from_u(g, prof.d2u), gamma);
        Spinor r = psi - w;
        const std::array<Spinor, 2> tang{dw, i_sigma3(w)};
        const std::array<Spinor, 2> cot{i_sigma3(tang[1]), i_sigma3(dw)};
        std::array<std::array<Spinor, 2>, 2> second{
            std::array<Spinor, 2>{cplx(-1.0) * dw, i_sigma3(d2w)},
            std::array<Spinor, 2>{cplx(-1.0) * i_sigma3(w), cplx(-1.0) * dw}};
        Eval e;
        for (int c = 0; c < 2; ++c) {
            e.residual[c] = pairing(r, cot[c]).real();
            for (int f = 0; f < 2; ++f)
                e.jacobian(c, f) = -pairing(tang[f], cot[c]).real() + pairing(r, second[f][c]).real();
        }
        e.remainder = std::move(r);
        return e;
    };

    const double target = 1e-12 * 2.0 * gs0->mass;
    double alpha = guess.alpha;
    double gamma = guess.gamma;
    Eval cur = evaluate(alpha, gamma);
    int it = 0;
    while (cur.residual.norm() > target) {
        if (++it > 50) throw ProjectionError("nearest_soliton: Newton did not converge in 50 iterations");
        Eigen::Vector2d step = cur.jacobian.fullPivLu().solve(-cur.residual);
        double damp = 1.0;
        Eval next = evaluate(alpha + step[0], gamma + step[1]);
        while (next.residual.norm() >= cur.residual.norm() && damp > 1.0 / 64.0) {
            damp *= 0.5;
            next = evaluate(alpha + damp * step[0], gamma + damp * step[1]);
        }
        alpha += damp * step[0];
        gamma += damp * step[1];
        if (!(alpha > 0.0)) throw ProjectionError("nearest_soliton: alpha left the admissible range");
        cur = std::move(next);
    }

    Projection out;
    out.params = guess;
    out.params.alpha = alpha;
    out.params.gamma = wrap_phase(gamma);
    // R does not depend on the representative of gamma
    out.remainder = std::move(cur.remainder);
    out.orthogonality = {cur.residual[0], cur.residual[1]};
    out.iterations = it;
    out.bound_ratio = initial_dist > 0.0 ? hhalf_norm(out.remainder) / initial_dist : 0.0;
    return out;
}

double axial_momentum(const AxialField& f) {
    const auto& g = *f.monopole.grid();
    if (g.l != 0 || f.dipole.grid()->l != 1) throw ParameterError("axial_momentum: expects l = 0 monopole and l = 1 dipole");
    // P_3 = (4 pi / 3) integral r^2 i (A' conj B - conj A' B) dr = -(8 pi / 3) integral r^2 Im(A' conj B) dr
    const CVec da = radial_derivative(f.monopole.upper).values;
    const CVec& b = f.dipole.upper.values;
    Vec integrand(g.n);
    for (int j = 0; j < g.n; ++j) integrand[j] = std::imag(da[j] * std::conj(b[j]));
    return -(8.0 * kPi / 3.0) * radial_integral(g, integrand);
}

double momentum_split_check(const AxialField& w, const AxialField& r) {
    AxialField sum{w.monopole + r.monopole, w.dipole + r.dipole};
    return std::abs(axial_momentum(sum) - axial_momentum(w) - axial_momentum(r));
}

}  // namespace ssl
