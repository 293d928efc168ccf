"""Test-only oracle: ground-state value phi(0) by ODE shooting and the
unstable eigenvalue sigma(1) and the negative eigenvalue of L+ (l = 0) by
second-order finite differences with Richardson extrapolation in h. Independent of the C++ discretization."""
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy.integrate import solve_ivp


def shoot_phi0():
    def rhs(r, y):
        return [y[1], -2 / r * y[1] + y[0] - y[0] ** 3]

    def crosses(r, y):
        return y[0]

    crosses.terminal = True

    def run(a):
        r0 = 1e-6
        return solve_ivp(rhs, [r0, 25], [a + (a - a ** 3) * r0 ** 2 / 6, (a - a ** 3) * r0 / 3],
                         events=[crosses], rtol=1e-12, atol=1e-14)

    lo, hi = 3.0, 5.0
    for _ in range(50):
        m = 0.5 * (lo + hi)
        if len(run(m).t_events[0]) > 0:
            hi = m
        else:
            lo = m
    return lo


def sigma_fd(n, R=20.0):
    h = R / (n + 1)
    r = h * np.arange(1, n + 1)
    D = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h ** 2
    u = 4.3 * np.exp(-r ** 2 / 2) * r
    for _ in range(200):  # Petviashvili on the FD operator
        A = (-D + sp.identity(n)).tocsc()
        nl = u ** 3 / r ** 2
        num = u @ (A @ u)
        den = u @ nl
        u = (num / den) ** 1.5 * sla.spsolve(A, nl)
    for _ in range(20):
        F = -D @ u + u - u ** 3 / r ** 2
        J = (-D + sp.diags(1 - 3 * u ** 2 / r ** 2)).tocsc()
        du = sla.spsolve(J, F)
        u -= du
        if np.abs(du).max() < 1e-14:
            break
    V = u ** 2 / r ** 2
    Lp = (-D + sp.diags(1 - 3 * V)).tocsc()
    Lm = (-D + sp.diags(1 - V)).tocsc()
    vals = sla.eigs(Lm @ Lp, k=1, sigma=-30.0, return_eigenvectors=False)
    neg = sla.eigsh(Lp, k=1, sigma=-20.0, return_eigenvectors=False)
    return np.sqrt(-vals[0].real), neg[0]


if __name__ == "__main__":
    print("phi0 %.15f" % shoot_phi0())
    ns = [999, 1999, 3999]
    out = [sigma_fd(n) for n in ns]
    h = [20.0 / (n + 1) for n in ns]
    # q(h) = q + c2 h^2 + c4 h^4
    A = np.array([[1, hh ** 2, hh ** 4] for hh in h])
    for name, k in (("sigma", 0), ("lplus_min", 1)):
        raw = np.array([o[k] for o in out])
        print("%s raw" % name, raw)
        print("%s extrapolated %.12f" % (name, np.linalg.solve(A, raw)[0]))
