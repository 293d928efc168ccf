#include "ssl/green.hpp"

#include "ssl/operators.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>

namespace ssl {

cplx branch_sqrt(cplx w, Side side) {
    if (w.imag() != 0.0 || w.real() >= 0.0) {
        cplx k = std::sqrt(w);
        return k.real() < 0.0 ? -k : k;
    }
    if (side == Side::none) throw ParameterError("branch_sqrt: point on the cut needs a side (+i0 or -i0)");
    const double m = std::sqrt(-w.real());
    return side == Side::upper ? cplx(0.0, m) : cplx(0.0, -m);
}

namespace {

constexpr int kStencil = 8;
constexpr int kLeft = 3;  // stencil offsets -3..4 around the cell's left node

// sinh(k s) / k, with the k -> 0 limit
cplx sinh_over(cplx k, double s) {
    const cplx ks = k * s;
    if (std::abs(ks) < 1e-3) {
        const cplx k2 = ks * ks;
        return s * (1.0 + k2 / 6.0 + k2 * k2 / 120.0);
    }
    return std::sinh(ks) / k;
}

// e^{-k t} sinh(k s) / k for 0 <= s, computed without overflow when s <= t + O(h)
cplx scaled_p(cplx k, double s, double t) {
    if (std::abs(k * s) < 1e-3) return std::exp(-k * t) * sinh_over(k, s);
    return (std::exp(k * (s - t)) - std::exp(-k * (s + t))) / (2.0 * k);
}

struct Cell {
    std::array<double, 16> t;
    std::array<double, 16> w;
    std::array<std::array<double, kStencil>, 16> basis;
};

const Cell& cell_rule() {
    static const Cell c = [] {
        using gauss = boost::math::quadrature::gauss<double, 16>;
        Cell out;
        const auto& x = gauss::abscissa();
        const auto& wt = gauss::weights();
        int q = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            for (int sgn : {-1, 1}) {
                if (x[i] == 0.0 && sgn > 0) continue;
                out.t[q] = 0.5 * (1.0 + sgn * x[i]);
                out.w[q] = 0.5 * wt[i];
                ++q;
            }
        }
        for (int qq = 0; qq < 16; ++qq) {
            for (int m = 0; m < kStencil; ++m) {
                double v = 1.0;
                const double xm = m - kLeft;
                for (int k = 0; k < kStencil; ++k)
                    if (k != m) v *= (out.t[qq] - (k - kLeft)) / (xm - (k - kLeft));
                out.basis[qq][m] = v;
            }
        }
        return out;
    }();
    return c;
}

}  // namespace

GreenOperator::GreenOperator(const RadialGrid& g, cplx kappa) : n_(g.n), l_(g.l), h_(g.h), kappa_(kappa) {
    if (kappa.real() < 0.0) throw ParameterError("GreenOperator: Re kappa must be nonnegative");
    if (l_ == 1 && kappa != 0.0) throw ParameterError("GreenOperator: l = 1 is supported at kappa = 0 only");
    const Cell& rule = cell_rule();
    const int cells = n_ + 1;
    wf_.assign(cells, {});
    wb_.assign(cells, {});
    decay_ = l_ == 0 ? std::exp(-kappa_ * h_) : cplx(1.0);
    for (int i = 0; i < cells; ++i) {
        const double x0 = i * h_;
        const double x1 = x0 + h_;
        for (int q = 0; q < 16; ++q) {
            const double s = x0 + rule.t[q] * h_;
            cplx kf, kb;
            if (l_ == 0) {
                kf = scaled_p(kappa_, s, x1);
                kb = std::exp(kappa_ * (x0 - s));
            } else {
                kf = s * s / 3.0;
                kb = 1.0 / s;
            }
            for (int m = 0; m < kStencil; ++m) {
                wf_[i][m] += h_ * rule.w[q] * rule.basis[q][m] * kf;
                wb_[i][m] += h_ * rule.w[q] * rule.basis[q][m] * kb;
            }
        }
    }
    out_f_.resize(n_);
    out_b_.resize(n_);
    for (int j = 0; j < n_; ++j) {
        const double r = (j + 1) * h_;
        if (l_ == 0) {
            out_f_[j] = 1.0;
            out_b_[j] = std::abs(kappa_ * r) < 1e-3 ? std::exp(-kappa_ * r) * sinh_over(kappa_, r)
                                                    : (1.0 - std::exp(-2.0 * kappa_ * r)) / (2.0 * kappa_);
        } else {
            out_f_[j] = 1.0 / r;
            out_b_[j] = r * r / 3.0;
        }
    }
}

CVec GreenOperator::apply(const CVec& u) const {
    if (u.size() != n_) throw ParameterError("GreenOperator::apply: length mismatch");
    // u at node numbers -3 .. n+5 through the stencil's parity rules
    const int pad = kLeft + 1;
    std::vector<cplx> ue(n_ + 2 + 2 * pad);
    for (int m = -pad; m <= n_ + 1 + pad; ++m) {
        const auto nb = neighbour(-1, m, n_, l_);
        ue[m + pad] = nb.index < 0 ? cplx(0.0) : nb.sign * u[nb.index];
    }
    auto cell_sum = [&](const std::array<cplx, kStencil>& w, int i) {
        cplx acc = 0.0;
        for (int m = 0; m < kStencil; ++m) acc += w[m] * ue[i - kLeft + m + pad];
        return acc;
    };
    CVec out(n_);
    cplx acc = 0.0;
    for (int i = 0; i < n_; ++i) {
        acc = decay_ * acc + cell_sum(wf_[i], i);
        out[i] = out_f_[i] * acc;  // node i + 1
    }
    acc = 0.0;
    for (int i = n_; i >= 1; --i) {
        acc = decay_ * acc + cell_sum(wb_[i], i);
        out[i - 1] += out_b_[i - 1] * acc;
    }
    return out;
}

CMat GreenOperator::matrix() const {
    CMat m(n_, n_);
    CVec e = CVec::Zero(n_);
    for (int j = 0; j < n_; ++j) {
        e[j] = 1.0;
        m.col(j) = apply(e);
        e[j] = 0.0;
    }
    return m;
}

cplx GreenOperator::kernel(double r, double s) const {
    const double lo = std::min(r, s);
    const double hi = std::max(r, s);
    if (l_ == 1) return lo * lo / (3.0 * hi);
    return sinh_over(kappa_, lo) * std::exp(-kappa_ * hi);
}

}  // namespace ssl
