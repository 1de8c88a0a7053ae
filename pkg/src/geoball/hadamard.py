"""Geometric kernels driving the radial variation of the first eigenvalue,
the identity checks built on them, and closed-form constant-curvature bounds.

The kernels are g = f'/f, h = g' + (n-1)g^2/2 and H = t h' + 2h. The radial
derivative of the eigenvalue satisfies

    r lam'(r) + 2 lam(r) = (n-1)/2 * int_0^r H f^{n-1} psi^2 / int_0^r f^{n-1} psi^2,

which integrates to a reconstruction of lam(r) from an anchor radius r0
(anchor value j^2 when r0 = 0). Both forms are evaluated here against the
shooting solver.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import simpson

from .eigensolver import first_eigenvalue
from .specfun import first_bessel_zero

_T_FLOOR = 1e-8      # kernel evaluations closer to the pole are rejected
_RATIO_FLOOR = 1e-3  # below this ball radius the inner ratio uses the limit


def _pole_limit(man):
    # H(t) -> (2n/3) f'''(0) as t -> 0; equals +-2n/3 at curvature -+1
    return (2.0*man.n/3.0)*float(man.warp.jet(0.0, 3)[3])


def _jet_arrays(warp, t):
    """(f, f', f'', f''') on an array of radii."""
    if warp.kind == "euclidean":
        one = np.ones_like(t)
        zero = np.zeros_like(t)
        return 1.0*t, one, zero, zero
    if warp.kind == "sphere":
        ka = warp.kappa
        s, c = np.sin(ka*t), np.cos(ka*t)
        return s/ka, c, -ka*s, -ka*ka*c
    if warp.kind == "hyperbolic":
        ka = warp.kappa
        s, c = np.sinh(ka*t), np.cosh(ka*t)
        return s/ka, c, ka*s, ka*ka*c
    js = np.array([warp.tree.jet(float(x), 3) for x in np.atleast_1d(t)])
    return js[:, 0], js[:, 1], js[:, 2], js[:, 3]


def _g_h_hp(n, f0, f1, f2, f3):
    g = f1/f0
    gp = f2/f0 - g*g
    h = f2/f0 + 0.5*(n - 3.0)*g*g
    hp = (f3*f0 - f2*f1)/(f0*f0) + (n - 3.0)*g*gp
    return g, h, hp


class GeometricKernels:
    """Kernel evaluations g, h, H on (0, R) from the warp jets."""

    def __init__(self, man):
        self.man = man

    def _fields(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < _T_FLOOR) or np.any(t >= self.man.warp.R):
            raise ValueError("kernel radius must lie in [1e-8, R)")
        return t, _g_h_hp(self.man.n, *_jet_arrays(self.man.warp, t))

    def g(self, t):
        _, (g, _, _) = self._fields(t)
        return g if g.ndim else float(g)

    def h(self, t):
        _, (_, h, _) = self._fields(t)
        return h if h.ndim else float(h)

    def H(self, t):
        t, (_, h, hp) = self._fields(t)
        out = t*hp + 2.0*h
        return out if out.ndim else float(out)


def kernel_H(man, t):
    """H(t) = t h'(t) + 2 h(t). Radii below 1e-8 are rejected; use the
    analytic pole limit (2n/3) f'''(0) there instead."""
    return GeometricKernels(man).H(float(t))


def _H_filled(man, grid):
    """H on an output grid whose first entries may sit at or near 0."""
    out = np.empty_like(grid)
    cut = 1e-6
    near = grid < cut
    out[near] = _pole_limit(man)  # H = limit + O(t^2)
    if np.any(~near):
        out[~near] = GeometricKernels(man).H(grid[~near])
    return out


def _thread_count():
    raw = os.environ.get("GEOBALL_THREADS", "").strip()
    if raw:
        try:
            k = int(raw)
        except ValueError:
            raise ValueError("GEOBALL_THREADS must be an integer") from None
        return max(1, k)
    return min(4, os.cpu_count() or 1)


def derivative_identity_residual(man, r, tol=1e-10):
    """Relative mismatch of r lam' + 2 lam against the kernel average.

    lam'(r) is a 5-point central difference of the solver with step 1e-3 r,
    so the check stays independent of the identity being verified. The
    mismatch is normalized by |RHS|, with a floor at the natural scale of
    the left side so that flat space (both sides zero) reports ~0.
    """
    warp, n = man.warp, man.n
    if not 0.0 < r < warp.R:
        raise ValueError("r must satisfy 0 < r < R")
    s = 1e-3*r
    res = first_eigenvalue(man, r, tol=tol)
    lam = res.lam
    lm2 = first_eigenvalue(man, r - 2.0*s, tol=tol).lam
    lm1 = first_eigenvalue(man, r - s, tol=tol).lam
    lp1 = first_eigenvalue(man, r + s, tol=tol).lam
    lp2 = first_eigenvalue(man, r + 2.0*s, tol=tol).lam
    dlam = (lm2 - 8.0*lm1 + 8.0*lp1 - lp2)/(12.0*s)
    lhs = r*dlam + 2.0*lam

    w = np.asarray(warp(res.grid), dtype=float)**(n - 1)
    q = w*res.psi*res.psi
    num = float(simpson(_H_filled(man, res.grid)*q, x=res.grid))
    den = float(simpson(q, x=res.grid))
    rhs = 0.5*(n - 1.0)*num/den
    return abs(lhs - rhs)/max(abs(rhs), 2e-3*lam)


def integrated_identity_eval(man, r, r0=0.0, quad_points=64, tol=1e-10):
    """Reconstruct lam(r) from the integrated variation identity.

    lam(r) = [anchor + (n-1)/2 * int_{r0}^r t Q(t) dt] / r^2 with
    Q(t) = int_0^t H f^{n-1} psi_t^2 / int_0^t f^{n-1} psi_t^2, where psi_t
    is the eigenfunction of the ball of radius t (recomputed per outer
    quadrature node); anchor = j^2 for r0 = 0, else r0^2 lam(r0).
    Outer-node solves run on a thread pool capped by GEOBALL_THREADS; the
    reduction order is fixed, so results are bit-stable run to run.
    """
    warp, n = man.warp, man.n
    if not (0.0 <= r0 < r < warp.R) or r > warp.R - 1e-6:
        raise ValueError("radii must satisfy 0 <= r0 < r <= R - 1e-6")
    if quad_points < 4:
        raise ValueError("quad_points must be at least 4")
    x, wq = leggauss(quad_points)
    half = 0.5*(r - r0)
    nodes = 0.5*(r + r0) + half*x
    weights = half*wq
    h0 = _pole_limit(man)

    def inner_ratio(t):
        if t < _RATIO_FLOOR:
            return h0
        res = first_eigenvalue(man, float(t), tol=tol)
        w = np.asarray(warp(res.grid), dtype=float)**(n - 1)
        q = w*res.psi*res.psi
        return float(simpson(_H_filled(man, res.grid)*q, x=res.grid)
                     / simpson(q, x=res.grid))

    k = _thread_count()
    if k > 1:
        with ThreadPoolExecutor(max_workers=k) as pool:
            ratios = np.fromiter(pool.map(inner_ratio, nodes), dtype=float)
    else:
        ratios = np.fromiter((inner_ratio(t) for t in nodes), dtype=float)
    integral = float(weights @ (nodes*ratios))

    if r0 == 0.0:
        anchor = first_bessel_zero(0.5*n - 1.0)**2
    else:
        anchor = r0*r0*first_eigenvalue(man, r0, tol=tol).lam
    return (anchor + 0.5*(n - 1.0)*integral)/(r*r)


def bounds_constant_curvature(space, n, r):
    """Closed-form (lower, upper) for lam_1 on curvature +-1 spaces.

    Plus signs for hyperbolic space, minus for the sphere; s is sinh or sin.
    Other curvatures are reachable by rescaling the metric, lam(kappa, r) =
    kappa^2 lam(1, kappa r), rather than by extra formulas here.
    """
    if space == "hyperbolic":
        sgn, s = 1.0, math.sinh(r) if r > 0 else 0.0
    elif space == "sphere":
        sgn, s = -1.0, math.sin(r) if r > 0 else 0.0
    else:
        raise ValueError("space must be 'hyperbolic' or 'sphere'")
    if not isinstance(n, int) or n < 2:
        raise ValueError("dimension must be an integer >= 2")
    if r <= 0.0 or (space == "sphere" and r >= math.pi):
        raise ValueError("radius out of range")
    r2, s2 = r*r, s*s
    if n == 2:
        j2 = first_bessel_zero(0.0)**2
        return (j2/r2 + 0.25*(1.0/r2 - 1.0/s2 + sgn), j2/r2 + sgn/3.0)
    if n == 3:
        val = math.pi**2/r2 + sgn
        return (val, val)
    j2 = first_bessel_zero(0.5*n - 1.0)**2
    lower = j2/r2 + sgn*n*(n - 1.0)/6.0
    upper = (j2/r2 + sgn*0.25*(n - 1.0)**2
             + 0.25*(n - 1.0)*(n - 3.0)*(1.0/s2 - 1.0/r2))
    return (lower, upper)
