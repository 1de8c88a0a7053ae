"""Eigenvalue asymptotics for nearly maximal balls on compact model spaces.

On a compact space the first Dirichlet eigenvalue of the ball B_r vanishes
as r approaches the diameter R, because the limit problem is the closed
manifold whose lowest eigenvalue is 0 with constant eigenfunction.  The
decay rate is governed by a dimension dependent gauge

    mu_2(r) = 1/ln(R - r),        mu_n(r) = (2 - n) (r - R)^(n-2),  n >= 3,

and lambda(r) admits an expansion lambda = sum_j mu_n^j lambda_j(r) whose
terms are nested integrals of V (ball volume) and V' (sphere area).  This
module computes

* the gauge :func:`mu` and the exact partial sums ``mu^j lambda_j`` for
  j = 1..3 (:func:`lambda_series_exact`, :func:`mu_series_term`),
* the inverse solution operator of the weighted Laplacian used by that
  recursion (:func:`solution_operator`),
* closed-form expansion coefficients in powers of (R - r) and ln(R - r)
  via endpoint regularization of the integrals (:func:`compute_constants`,
  :func:`expansion_evaluate`),
* a test-function upper bound valid at any radius
  (:func:`upper_bound_compact`),
* an empirical detector for the logarithmic terms that appear in even
  dimensions (:func:`log_term_detector`).

All quadrature runs on one tanh-graded master grid per manifold with
cumulative Simpson passes, so the triple integrals cost O(m) after the
cumulants are built.  Endpoint-singular integrands are regularized by
subtracting their Laurent data at R, which the same machinery produces
from the order-6 jet of f.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import BPoly, CubicSpline

from .manifold import Manifold, unit_sphere_volume
from .specfun import QuadratureSpec, integrate

__all__ = [
    "LargeRadiusConstants",
    "MuSeriesTerm",
    "LogTermReport",
    "mu",
    "solution_operator",
    "lambda_series_exact",
    "mu_series_term",
    "compute_constants",
    "expansion_evaluate",
    "upper_bound_compact",
    "log_term_detector",
]

_MASTER_NODES = 8000
_SWITCH_FRACTION = 0.016   # fraction of R near the endpoint served by series
_LOG_CAP = 4               # highest ln-power carried by the series algebra


# ----------------------------------------------------------------------
# sparse bivariate series sum_{p,q} c[p,q] * v^p * ln^q(v), p integer
# (possibly negative), q >= 0.  Used for endpoint expansions in v = R - t.

class _Series:
    __slots__ = ("t", "pmax")

    def __init__(self, terms=None, pmax=12):
        self.pmax = pmax
        self.t = {}
        if terms:
            for k, c in terms.items():
                if c != 0.0 and k[0] <= pmax:
                    self.t[k] = self.t.get(k, 0.0) + c

    def copy(self):
        s = _Series(None, self.pmax)
        s.t = dict(self.t)
        return s

    def __add__(self, other):
        s = self.copy()
        for k, c in other.t.items():
            s.t[k] = s.t.get(k, 0.0) + c
        return s

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, a):
        s = _Series(None, self.pmax)
        s.t = {k: a * c for k, c in self.t.items() if a * c != 0.0}
        return s

    def shift(self, dp):
        s = _Series(None, self.pmax)
        s.t = {(p + dp, q): c for (p, q), c in self.t.items() if p + dp <= s.pmax}
        return s

    def mul(self, other):
        s = _Series(None, min(self.pmax, other.pmax))
        for (p1, q1), c1 in self.t.items():
            for (p2, q2), c2 in other.t.items():
                p, q = p1 + p2, q1 + q2
                if p <= s.pmax and q <= _LOG_CAP:
                    k = (p, q)
                    s.t[k] = s.t.get(k, 0.0) + c1 * c2
        return s

    def inverse(self):
        # requires a lone log-free leading term; geometric series for the rest
        p0 = min(p for (p, q) in self.t)
        lead = self.t.get((p0, 0))
        if lead is None or any(p == p0 and q > 0 for (p, q) in self.t):
            raise ValueError("series leading term must be log-free")
        rest = self.copy()
        del rest.t[(p0, 0)]
        u = rest.scale(-1.0 / lead).shift(-p0)   # -(tail/lead)/v^p0, order >= 1
        inv = _Series({(0, 0): 1.0}, self.pmax)
        term = _Series({(0, 0): 1.0}, self.pmax)
        depth = self.pmax + max(1, -p0) + 2
        for _ in range(depth):
            term = term.mul(u)
            if not term.t:
                break
            inv = inv + term
        return inv.scale(1.0 / lead).shift(-p0)

    def truncated(self, pmax):
        s = _Series(None, pmax)
        s.t = {(p, q): c for (p, q), c in self.t.items() if p <= pmax}
        return s

    def drop_small(self, tol):
        big = max((abs(c) for c in self.t.values()), default=1.0)
        s = _Series(None, self.pmax)
        s.t = {k: c for k, c in self.t.items() if abs(c) > tol * big}
        return s

    def evaluate(self, v):
        lv = math.log(v)
        return sum(c * v ** p * lv ** q for (p, q), c in self.t.items())


def _antiderivative(s):
    """Term-by-term antiderivative of a _Series in v (integration from 0)."""
    out = _Series(None, s.pmax + 1)
    for (p, q), c in s.t.items():
        if p == -1:
            out.t[(0, q + 1)] = out.t.get((0, q + 1), 0.0) + c / (q + 1)
            continue
        # int v^p ln^q v dv = v^(p+1) sum_i (-1)^i q!/(q-i)! /(p+1)^(i+1) ln^(q-i) v
        fac = 1.0
        for i in range(q + 1):
            coef = c * fac * (-1.0) ** i / (p + 1.0) ** (i + 1)
            k = (p + 1, q - i)
            out.t[k] = out.t.get(k, 0.0) + coef
            fac *= (q - i)
    return out


# ----------------------------------------------------------------------
# master grid and cumulative quadrature

def _master_grid(R, m=_MASTER_NODES, a=8.0):
    # tanh grading clusters nodes at both endpoints; ends pinned exactly
    s = np.linspace(-1.0, 1.0, m + 1)
    t = R * 0.5 * (1.0 + np.tanh(a * s) / math.tanh(a))
    t[0], t[-1] = 0.0, R
    return t


def _cum0(y, t):
    return cumulative_simpson(y, x=t, initial=0.0)


class _Endpoint:
    """Endpoint data at t = R: jets of f, the V, V' expansions in v = R - t."""

    def __init__(self, man, pmax):
        n, w = man.n, man.warp
        R = w.R
        jR = w.jet(R, 6)
        A = jR[1]
        om = unit_sphere_volume(n - 1)
        a2 = jR[3] / (6.0 * A)
        a4 = jR[5] / (120.0 * A)
        a5 = -jR[6] / (720.0 * A)
        base = _Series({(0, 0): 1.0, (2, 0): a2, (4, 0): a4, (5, 0): a5}, pmax)
        fpow = _Series({(0, 0): 1.0}, pmax)
        for _ in range(n - 1):
            fpow = fpow.mul(base)
        eps = om * (-A) ** (n - 1)
        spec = QuadratureSpec(rel_tol=1e-13, abs_tol=1e-13)
        V_R = om * integrate(lambda t: w(t) ** (n - 1), 0.0, R, spec)
        Vp = fpow.shift(n - 1).scale(eps)           # V'(t) as a series in v
        V = _Series({(0, 0): V_R}, pmax) - _antiderivative(Vp)
        self.n, self.R, self.A, self.om = n, R, A, om
        self.jets = jR
        self.a2, self.a4, self.a5 = a2, a4, a5
        self.fpow, self.eps, self.V_R = fpow, eps, V_R
        self.Vp, self.V = Vp, V
        self.A2 = fpow.t.get((2, 0), 0.0)
        self.A4 = fpow.t.get((4, 0), 0.0)
        self.A5 = fpow.t.get((5, 0), 0.0)
        self.cbar = V_R / eps
        self.B1v = V_R ** 2 / eps                    # positive normalization


def _cumulate(ep, k_ser, k_grid, t, u_sw):
    """Constant + series of the cumulative of a kernel singular at R.

    k_ser is the endpoint series of the kernel, k_grid its grid values.
    Returns T with cumulative(t) = T.evaluate(R - t) near R; T[(0,0)] is the
    regularized constant (finite part at R).
    """
    R = t[-1]
    vbar = R - t
    sing = _Series({k: c for k, c in k_ser.t.items() if k[0] <= -1}, k_ser.pmax)
    reg = k_ser - sing
    sub = np.array(k_grid, dtype=float)
    if sing.t:
        near = vbar < u_sw
        away = ~near
        sv = np.array([sing.evaluate(v) for v in vbar[away]])
        sub[away] = k_grid[away] - sv
        sub[near] = [reg.evaluate(v) if v > 0 else reg.t.get((0, 0), 0.0)
                     for v in vbar[near]]
    C_num = simpson(sub, x=t)
    C = C_num + (_antiderivative(sing).evaluate(R) if sing.t else 0.0)
    T = _Series({(0, 0): C}, k_ser.pmax + 1) - _antiderivative(k_ser)
    return T


def _hybrid(T, t, R, raw_cum, u_sw):
    """Grid cumulative: raw Simpson prefix away from R, series values near R."""
    vbar = R - t
    out = np.array(raw_cum, dtype=float)
    near = vbar < u_sw
    out[near] = [T.evaluate(v) if v > 0 else math.nan for v in vbar[near]]
    return out


# ----------------------------------------------------------------------
# cumulant tower: G, W, E, D, SE, F, T and their regularized constants

class _Cumulants:
    """All single-grid cumulative integrals entering the lambda recursion.

    W  = int V/V'          G  = int V^2/V'        E(t) = G - V W
    D  = int (V/V') E      SE = int E/V'          F(t) = D - V SE
    T  = int (V/V') F      K  = E(R)              M    = F(R)
    """

    def __init__(self, man, m=_MASTER_NODES, pextra=6):
        n, w = man.n, man.warp
        R = w.R
        pmax = n + pextra
        ep = _Endpoint(man, pmax)
        t = _master_grid(R, m)
        u_sw = _SWITCH_FRACTION * R
        vbar = R - t
        fg = w(t)
        Vp_g = ep.om * fg ** (n - 1)
        V_g = _cum0(Vp_g, t)
        V_g *= ep.V_R / V_g[-1]                     # pin the total volume
        iVp = ep.fpow.inverse().shift(1 - n).scale(1.0 / ep.eps)

        kG_ser = ep.V.mul(ep.V).mul(iVp)
        kW_ser = ep.V.mul(iVp)
        with np.errstate(divide="ignore", invalid="ignore"):
            kG_g = V_g ** 2 / Vp_g
            kW_g = V_g / Vp_g
        kG_g[0] = kW_g[0] = 0.0
        kG_g[-1] = kW_g[-1] = 0.0
        G_T = _cumulate(ep, kG_ser, kG_g, t, u_sw)
        W_T = _cumulate(ep, kW_ser, kW_g, t, u_sw)
        G_g = _hybrid(G_T, t, R, _cum0(np.nan_to_num(kG_g), t), u_sw)
        W_g = _hybrid(W_T, t, R, _cum0(np.nan_to_num(kW_g), t), u_sw)

        # K = E(R).  (V - V_R) cancels catastrophically near R, so the
        # integrand switches to its endpoint series there.
        Vm_ser = _antiderivative(ep.Vp).scale(-1.0)  # V - V_R in v
        kE_ser = Vm_ser.mul(ep.V).mul(iVp)
        with np.errstate(invalid="ignore"):
            kE = (V_g - ep.V_R) * V_g / Vp_g
        kE[0] = 0.0
        near = vbar < u_sw
        kE[near] = [kE_ser.evaluate(v) if v > 0 else 0.0 for v in vbar[near]]
        K = simpson(kE, x=t)

        # E' = -V' W anchors a backward form that is exact near R; the
        # forward form G - V W keeps relative accuracy near 0 where E ~ t^(n+2)
        VpW_ser = ep.Vp.mul(W_T)
        E_T = _Series({(0, 0): K}, pmax) + _antiderivative(VpW_ser)
        VpW_g = Vp_g * W_g
        VpW_g[-1] = 0.0
        IVW = _cum0(VpW_g, t)
        E_g = K + (IVW[-1] - IVW)
        fwd = t < 0.5 * R
        E_g[fwd] = G_g[fwd] - V_g[fwd] * W_g[fwd]
        E_g[near] = [E_T.evaluate(v) if v > 0 else K for v in vbar[near]]

        kD_ser = kW_ser.mul(E_T)
        with np.errstate(divide="ignore", invalid="ignore"):
            kD_g = kW_g * E_g
        kD_g[0] = kD_g[-1] = 0.0
        D_T = _cumulate(ep, kD_ser, kD_g, t, u_sw)
        D_g = _hybrid(D_T, t, R, _cum0(np.nan_to_num(kD_g), t), u_sw)
        self.kG_ser, self.kW_ser, self.kD_ser = kG_ser, kW_ser, kD_ser

        kSE_ser = E_T.mul(iVp)
        with np.errstate(divide="ignore", invalid="ignore"):
            kSE_g = E_g / Vp_g
        kSE_g[0] = kSE_g[-1] = 0.0
        SE_T = _cumulate(ep, kSE_ser, kSE_g, t, u_sw)
        SE_g = _hybrid(SE_T, t, R, _cum0(np.nan_to_num(kSE_g), t), u_sw)

        kM_ser = Vm_ser.mul(E_T).mul(iVp)
        with np.errstate(invalid="ignore"):
            kM = (V_g - ep.V_R) * E_g / Vp_g
        kM[0] = 0.0
        kM[near] = [kM_ser.evaluate(v) if v > 0 else 0.0 for v in vbar[near]]
        M = simpson(kM, x=t)

        VpSE_ser = ep.Vp.mul(SE_T)
        F_T = _Series({(0, 0): M}, pmax) + _antiderivative(VpSE_ser)
        VpSE_g = Vp_g * SE_g
        VpSE_g[-1] = 0.0
        IVSE = _cum0(VpSE_g, t)
        F_g = M + (IVSE[-1] - IVSE)
        F_g[fwd] = D_g[fwd] - V_g[fwd] * SE_g[fwd]
        F_g[near] = [F_T.evaluate(v) if v > 0 else M for v in vbar[near]]

        kT_ser = kW_ser.mul(F_T)
        with np.errstate(divide="ignore", invalid="ignore"):
            kT_g = kW_g * F_g
        kT_g[0] = kT_g[-1] = 0.0
        T_T = _cumulate(ep, kT_ser, kT_g, t, u_sw)

        self.ep = ep
        self.n, self.R, self.V_R = n, R, ep.V_R
        self.C_G = G_T.t[(0, 0)]
        self.C_W = W_T.t[(0, 0)]
        self.K, self.M = K, M
        self.D_c = D_T.t[(0, 0)]
        self.C_SE = SE_T.t[(0, 0)]
        self.T_c = T_T.t[(0, 0)]
        self.G_T, self.W_T, self.E_T = G_T, W_T, E_T
        self.D_T, self.SE_T, self.F_T, self.T_T = D_T, SE_T, F_T, T_T
        # defect of the exact relations E(R) = C_G - V_R C_W and
        # F(R) = D_c - V_R C_SE; a pure quadrature diagnostic
        self.identity_gap = (abs(K - (self.C_G - ep.V_R * self.C_W)),
                             abs(M - (self.D_c - ep.V_R * self.C_SE)))

    def lambda_series(self):
        """Expansion of lambda in v = R - r (in x = -1/ln(R - r) for n = 2)."""
        n = self.n
        if n == 2:
            px = 5
            cbar, K, M = self.ep.cbar, self.K, self.M
            V = _Series({(0, 0): self.V_R}, px)
            G = _Series({(-1, 0): self.ep.B1v, (0, 0): self.C_G}, px)
            W = _Series({(-1, 0): cbar, (0, 0): self.C_W}, px)
            E = _Series({(0, 0): K}, px)
            D = _Series({(-1, 0): cbar * K, (0, 0): self.D_c}, px)
            SE = _Series({(-1, 0): K / self.ep.eps, (0, 0): self.C_SE}, px)
            T = _Series({(-1, 0): cbar * M, (0, 0): self.T_c}, px)
            lam = _assemble(V, G, W, E, D, SE, T).truncated(4)
        else:
            lam = _assemble(self.ep.V, self.G_T, self.W_T, self.E_T,
                            self.D_T, self.SE_T, self.T_T)
            lam = lam.truncated(4 if n == 3 else n + 2)
        return lam.drop_small(1e-11)


def _assemble(V, G, W, E, D, SE, T):
    """lambda = m1 + m2 + m3 in series form, from the reduced identities.

    m1 = V/G, m2 = m1 E/G - m1^2 D/G, and m3 collects the third-order
    solvability condition of the recursion; E, D, SE, T are the cumulants
    of the nested integral formulas after integration by parts.
    """
    iG = G.inverse()
    iW = W.inverse()
    one = _Series({(0, 0): 1.0}, V.pmax)
    L1 = V.mul(iG)
    L2 = L1.mul(E).mul(iG) - L1.mul(L1).mul(D).mul(iG)
    L0 = iW
    MP1 = L1.mul(W) - one + L1.mul(SE).mul(iW)
    t1 = (L2.mul(L1.scale(2.0) - L0) + L1.mul(L1).mul(MP1)).mul(W).scale(-1.0)
    t2 = D.mul(L1).mul(iG).mul(L2.scale(2.0) + L1.mul(L1 - L0).mul(W)).scale(-1.0)
    t3 = L1.mul(L1).mul(L1).mul(T).mul(iG).scale(-1.0)
    return L1 + L2 + (t1 + t2 + t3)


@lru_cache(maxsize=16)
def _cumulants(man):
    return _Cumulants(man)


def _require_compact(man, who):
    if not man.warp.compact:
        raise ValueError(f"{who} needs a compact manifold (f(R)=0, f'(R)<0)")


# ----------------------------------------------------------------------
# gauge and the exact mu-series terms

def mu(n, R, r):
    """Gauge function mu_n(r) of the maximal-radius expansion.

    mu_2 = 1/ln(R-r) (negative once R - r < 1), mu_n = (2-n)(r-R)^(n-2)
    for n >= 3.  Requires 0 < r < R.
    """
    if not 0.0 < r < R:
        raise ValueError("mu is defined for 0 < r < R")
    if n == 2:
        return 1.0 / math.log(R - r)
    return (2.0 - n) * (r - R) ** (n - 2)


def _grid_tower(man, r, m=_MASTER_NODES):
    """Cumulative integrals of the weight on [0, r] (r strictly inside)."""
    n, w = man.n, man.warp
    om = unit_sphere_volume(n - 1)
    t = _master_grid(r, m)
    fg = w(t)
    if fg[-1] <= 0.0:                    # r = R would degenerate the grid
        raise ValueError("radius must satisfy r < R")
    Vp = om * fg ** (n - 1)
    V = _cum0(Vp, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        kW = V / Vp
        kG = V * kW
    kW[0] = kG[0] = 0.0
    W = _cum0(kW, t)
    G = _cum0(kG, t)
    return t, fg, Vp, V, kW, W, G


@lru_cache(maxsize=64)
def _mu_terms(man, r, order):
    """Partial products mu^j lambda_j, j = 1..order, by the exact recursion.

    Each step applies the inverse operator of -(f^(n-1) u')' once, so the
    nested triple integral of the third term costs two cumulative passes.
    """
    t, fg, Vp, V, kW, W, G = _grid_tower(man, r)
    Wr, Gr, Vr = W[-1], G[-1], V[-1]
    psi0 = 1.0 - W / Wr

    def inverse_op(source):
        # source = f^(n-1) g; solves -(f^(n-1) u')' = source, u(r) = 0
        I = _cum0(source, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            k = I / Vp
        k[0] = 0.0
        U = _cum0(k, t)
        return U[-1] - U

    norm0 = simpson(Vp * psi0, x=t)
    m1 = (Vr / Wr) / norm0               # = Vr/Gr up to quadrature
    terms = [m1]
    if order >= 2:
        psi1 = inverse_op(Vp * (m1 * psi0 - 1.0 / Wr))
        i1 = simpson(Vp * psi1, x=t)
        m2 = -m1 * i1 / norm0
        terms.append(m2)
    if order >= 3:
        psi2 = inverse_op(Vp * (m2 * psi0 + m1 * psi1))
        i2 = simpson(Vp * psi2, x=t)
        terms.append(-(m1 * i2 + m2 * i1) / norm0)
    return terms, Gr, Wr, Vr


def lambda_series_exact(man, r, order=3):
    """Exact partial sums [mu lambda_1, mu^2 lambda_2, mu^3 lambda_3].

    mu lambda_1 = V(r)/G(r); the higher terms are the solvability
    conditions of the recursion, evaluated as nested cumulative integrals
    on one master grid.  The expansion is asymptotic as r -> R^-; the
    regime guard rejects r <= R/2 where the gauge series has no meaning.
    """
    _require_compact(man, "lambda_series_exact")
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    R = man.warp.R
    if not 0.5 * R < r < R:
        raise ValueError("maximal-radius regime requires R/2 < r < R")
    terms, _, _, _ = _mu_terms(man, float(r), order)
    return list(terms[:order])


@dataclass(frozen=True)
class MuSeriesTerm:
    """Gauge value and the first three expansion terms at one radius."""
    mu_n: float
    lambda1: float
    lambda2: float
    lambda3: float
    G: float


def mu_series_term(man, r):
    """Bundle mu_n(r), lambda_1..3(r) and G(r) = int_0^r V^2/V'."""
    _require_compact(man, "mu_series_term")
    R = man.warp.R
    if not 0.5 * R < r < R:
        raise ValueError("maximal-radius regime requires R/2 < r < R")
    terms, Gr, _, _ = _mu_terms(man, float(r), 3)
    g = mu(man.n, R, r)
    return MuSeriesTerm(mu_n=g, lambda1=terms[0] / g, lambda2=terms[1] / g ** 2,
                        lambda3=terms[2] / g ** 3, G=Gr)


# ----------------------------------------------------------------------
# solution operator

def solution_operator(man, r, g):
    """Inverse of -(f^(n-1) u')' on (0, r) with u'(0) = u(r) = 0.

    u(t) = int_t^r f^(1-n)(s) int_0^s f^(n-1) g dtau ds.  The right-hand
    side must have zero weighted mean, int_0^r f^(n-1) g = 0, to relative
    tolerance 1e-8; that is the solvability condition of the recursion
    steps this operator serves.

    The integrand of the outer integral, k = f^(1-n) int_0^t f^(n-1) g,
    satisfies k' = g - (n-1)(f'/f) k, so both k and k' are known exactly
    at the nodes once the inner cumulative is done.  The return value is
    the exact antiderivative of the Hermite interpolant of -k; building
    u this way keeps its value, slope and curvature mutually consistent,
    which a separately integrated value table would not be.
    """
    n, w = man.n, man.warp
    if not 0.0 < r <= w.R:
        raise ValueError("radius must satisfy 0 < r <= R")
    t = _master_grid(float(r))
    if w(t[-1]) <= 0.0:
        t = t[:-1]                       # compact closing: weight vanishes at r
    fg = w(t)
    weight = fg ** (n - 1)
    gv = np.asarray([float(g(x)) for x in t])
    total = simpson(weight * gv, x=t)
    vol = simpson(weight, x=t)
    gnorm = float(np.max(np.abs(gv)))
    if abs(total) > 1e-8 * max(gnorm, 1e-300) * vol:
        raise ValueError("right-hand side must have zero weighted mean")
    I = _cum0(weight * gv, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = I / weight
    k[0] = 0.0
    fp = np.asarray([w.jet(x, 1)[1] for x in t])
    kp = gv - (n - 1) * fp / np.where(fg > 0.0, fg, 1.0) * k
    kp[0] = gv[0] / n                    # limit of g - (n-1)(f'/f) k at the pole
    kpoly = BPoly.from_derivatives(t, np.column_stack([k, kp]))
    K = kpoly.antiderivative()
    return BPoly(float(K(t[-1])) - K.c, K.x)


# ----------------------------------------------------------------------
# printed constants of the closed-form expansions

@dataclass(frozen=True)
class LargeRadiusConstants:
    """Constants of the (R - r)-expansion for one compact manifold.

    B1 holds the first-family constants B1[k] = c_k V_R^2/(om A^(n-1))
    with c_1 = 1, c_2 = -A2, c_3 = A2^2 - A4 (signed by A^(n-1)); the
    order-6 endpoint jet determines no members beyond k = 3.  B2 holds
    the second-family regularized integrals under their published indices
    0..14; only the slots belonging to dimension n are populated.  series
    is the full machine-computed coefficient table {(p, q): c} of
    lambda = sum c (R-r)^p ln^q(R-r) (powers of 1/ln(R-r) for n = 2),
    which expansion_evaluate consumes.  notes records every place where
    a published formula had to be repaired or disambiguated, and the
    boundedness audit of each regularized integrand.
    """
    n: int
    R: float
    A: float
    A2: float
    A4: float
    V_R: float
    B1: Mapping[int, float]
    B2: Mapping[int, float]
    series: Mapping[tuple, float]
    notes: tuple


def _boundedness_audit(label, values):
    """Subtracted integrands must stay bounded approaching R."""
    finite = [v for v in values if math.isfinite(v)]
    if len(finite) < len(values):
        return f"{label}: subtracted integrand not finite near R"
    lo = max(abs(finite[0]), 1e-12)
    if abs(finite[-1]) > 50.0 * max(abs(v) for v in finite[:-1]) + 10.0 * lo:
        return f"{label}: subtracted integrand grows near R"
    return None


def _constants_impl(man, derivatives):
    cu = _cumulants(man)
    ep = cu.ep
    n, R, A, V_R = cu.n, cu.R, ep.A, cu.V_R
    om = ep.om
    notes = []

    # Taylor constants of f^(n-1)(t) = (A(t-R))^(n-1) (1 + A2 v^2 + A4 v^4 + ..)
    # The published formulas cite f'''(0), f^(5)(0) and an A^(n-1) denominator;
    # only endpoint jets with a single A reproduce the volume expansion, so
    # at_R is the default and the literal reading is reported alongside.
    A2_R = (n - 1) * ep.jets[3] / (6.0 * A)
    A4_R = (n - 1) * (ep.jets[5] / (120.0 * A)
                      + (n - 2) * ep.jets[3] ** 2 / (72.0 * A * A))
    j0 = man.warp.jet(0.0, 5)
    A2_0 = (n - 1) * j0[3] / (6.0 * A ** (n - 1))
    A4_0 = (n - 1) * (j0[5] / 120.0 + (n - 2) * j0[3] ** 2 / 12.0)
    if derivatives == "at_R":
        A2, A4 = A2_R, A4_R
    elif derivatives == "at_zero":
        A2, A4 = A2_0, A4_0
    else:
        raise ValueError("derivatives must be 'at_R' or 'at_zero'")
    if not math.isclose(A2_R, A2_0, rel_tol=1e-9, abs_tol=1e-12):
        notes.append("A2 readings disagree: at_R %.12g vs at_zero literal %.12g;"
                     " at_R matches the G(r) expansion" % (A2_R, A2_0))
    if not math.isclose(A4_R, A4_0, rel_tol=1e-9, abs_tol=1e-12):
        notes.append("A4 readings disagree: at_R %.12g vs at_zero literal %.12g;"
                     " at_R matches the volume jet" % (A4_R, A4_0))
    # internal consistency with the endpoint series used by the engine
    assert math.isclose(A2_R, ep.A2, rel_tol=1e-12, abs_tol=1e-14)
    assert math.isclose(A4_R, ep.A4, rel_tol=1e-12, abs_tol=1e-14)

    sgnA = A ** (n - 1)                  # negative in even dimensions
    B1 = {1: V_R ** 2 / (om * sgnA),
          2: -A2_R * V_R ** 2 / (om * sgnA),
          3: (A2_R ** 2 - A4_R) * V_R ** 2 / (om * sgnA)}
    notes.append("B1 members beyond k=3 need order>6 endpoint jets; omitted")

    # second-family constants; regularized ones reuse the engine cumulants,
    # whose subtraction terms coincide with the published ones after the
    # (t-R) -> -(R-t) sign folding
    cbar = ep.cbar
    B2 = {}
    audits = []
    samples = [R * 10.0 ** (-k) for k in range(2, 7)]

    def audit(label, values):
        msg = _boundedness_audit(label, values)
        audits.append(msg or "%s: bounded after subtraction "
                             "(samples %.6g -> %.6g)"
                             % (label, values[0], values[-1]))
        return msg is None

    def regular_part(kernel_series):
        sing = _Series({k: c for k, c in kernel_series.t.items() if k[0] <= -1},
                       kernel_series.pmax)
        return kernel_series - sing

    regG = regular_part(cu.kG_ser)
    if n == 5:
        B2[0] = cu.C_G
        audit("B2_0", [regG.evaluate(v) for v in samples])
        # published integrand reads (V(s)-V(R))/V(s) * V(s) = V - V_R; the
        # V'(s) denominator (as in every sibling constant) is needed for the
        # (r-R)^6 coefficient to match the eigenvalue ladder
        lit = -om * integrate(lambda s: s * man.warp(s) ** (n - 1), 0.0, R,
                              QuadratureSpec(rel_tol=1e-12, abs_tol=1e-12))
        pref = -9.0 * V_R ** 3 / (om * B1[1] ** 3 * A ** 4)
        B2[1] = pref * cu.K
        notes.append("B2_1 uses denominator V'(s); the literal V(s) reading "
                     "gives %.12g from int(V-V_R)=%.12g and fails the "
                     "eigenvalue ladder" % (pref * lit, lit))
    elif n == 4:
        B2[2] = cu.C_G
        audit("B2_2", [regG.evaluate(v) for v in samples])
        B2[3] = cu.K
    elif n == 3:
        B2[4] = cu.C_G
        audit("B2_4", [regG.evaluate(v) for v in samples])
        B2[8] = cbar * cu.K
        B2[6] = -B2[8] * V_R ** 2 / B1[1] ** 3
        # published B2_9 places the B2_8 (t-R)^-2 subtraction inside the
        # bracket multiplied by V/V', which leaves a v^-4 divergence; the
        # audit shows it and the bounded outside reading is used instead
        lit_vals = [cu.kD_ser.evaluate(v) - B2[8] * cu.kW_ser.evaluate(v) / v ** 2
                    for v in samples]
        ok = audit("B2_9 literal (subtraction inside bracket)", lit_vals)
        audit("B2_9 bounded (subtraction outside)",
              [regular_part(cu.kD_ser).evaluate(v) for v in samples])
        B2[9] = cu.D_c
        if not ok:
            notes.append("B2_9: literal bracket placement diverges; computed "
                         "with the subtraction applied to the full integrand "
                         "(finite-part boundary -B2_8/R, not +B2_8/R)")
        B2[5] = ((om * A * A * B1[1] ** 3 - 3.0 * V_R * B1[2] * B1[1]
                  - 3.0 * V_R * B2[4] ** 2) / (3.0 * B1[1] ** 3))
        notes.append("B2_5: undefined symbol B1_(-2) read as B1[1]")
        B2[7] = (-2.0 * V_R ** 2 * B2[4] * B2[8] / B1[1] ** 4
                 - (B2[9] / B1[1] + B2[4] * B2[8] / B1[1] ** 2)
                 * V_R ** 2 / B1[1] ** 2)
        B2[10] = V_R ** 3 * cu.M / (om * A * A * B1[1] ** 3)
    elif n == 2:
        B2[11] = cu.C_G
        audit("B2_11", [regG.evaluate(v) for v in samples])
        B2[12] = -V_R * cu.K / (om * A)
        B2[13] = cu.D_c
        notes.append("B2_13: published inner integrand omits the V(s) factor "
                     "and flips the boundary sign; computed as the "
                     "regularized constant of int (V/V') E")
        B2[14] = V_R ** 4 * cu.M / (om * A * A * B1[1] ** 4)
    audits.append("identity gaps E(R)-(C_G - V_R C_W), F(R)-(D_c - V_R C_SE):"
                  f" {cu.identity_gap[0]:.3g}, {cu.identity_gap[1]:.3g}")

    lam = cu.lambda_series()
    return LargeRadiusConstants(
        n=n, R=R, A=A, A2=A2, A4=A4, V_R=V_R, B1=B1, B2=B2,
        series=dict(lam.t), notes=tuple(notes + audits))


@lru_cache(maxsize=16)
def compute_constants(man, derivatives="at_R"):
    """All expansion constants of Theorem-style closed forms for one manifold.

    derivatives selects how the Taylor constants A2, A4 read their jets:
    "at_R" (default) takes them at the far endpoint, which reproduces the
    volume expansion and the G(r) fits; "at_zero" is the literal published
    reading.  Divergent readings are reported in notes either way.
    """
    _require_compact(man, "compute_constants")
    return _constants_impl(man, derivatives)


def expansion_evaluate(consts, r, terms=None):
    """Evaluate the truncated closed-form expansion at radius r.

    Keeps the published number of terms for the dimension (three powers,
    plus the logarithmic companions in even dimensions) unless ``terms``
    asks for a shorter partial sum.  Meaningful as an asymptotic formula
    for R/2 < r < R; evaluation outside that window is extrapolation.
    """
    R = consts.R
    if not 0.0 < r < R:
        raise ValueError("expansion is evaluated for 0 < r < R")
    v = R - r
    if consts.n == 2:
        x = -1.0 / math.log(v)
        keys = sorted(consts.series, key=lambda k: (k[0], -k[1]))[:3]
        if terms is not None:
            keys = keys[:terms]
        return sum(consts.series[k] * x ** k[0] for k in keys)
    printed = 4 if consts.n == 6 else 3
    keys = sorted(consts.series, key=lambda k: (k[0], -k[1]))[:printed]
    if terms is not None:
        keys = keys[:terms]
    lv = math.log(v)
    return sum(c * v ** p * lv ** q
               for (p, q), c in ((k, consts.series[k]) for k in keys))


# ----------------------------------------------------------------------
# test-function upper bound

def upper_bound_compact(man, r, m=_MASTER_NODES):
    """Rayleigh-quotient upper bound from the leading profile psi_0.

    psi_0 = 1 - W(t)/W(r) gives lambda <= G(r) / int_0^r V'(W(r)-W)^2.
    The denominator also equals G^2/V + int V' G^2/V^2 evaluated at r,
    the published closed form; both are computed and must agree, which
    guards the quadrature.  Valid at every radius 0 < r < R.
    """
    _require_compact(man, "upper_bound_compact")
    R = man.warp.R
    if not 0.0 < r < R:
        raise ValueError("upper bound needs 0 < r < R")
    t, fg, Vp, V, kW, W, G = _grid_tower(man, float(r), m)
    num = G[-1]
    den_direct = simpson(Vp * (W[-1] - W) ** 2, x=t)
    with np.errstate(divide="ignore", invalid="ignore"):
        kk = Vp * (G / V) ** 2
    kk[0] = 0.0
    den_rewrite = G[-1] ** 2 / V[-1] + simpson(kk, x=t)
    if abs(den_direct - den_rewrite) > 1e-6 * abs(den_direct):
        raise ArithmeticError("upper bound assemblies disagree; grid too coarse")
    return num / den_rewrite


# ----------------------------------------------------------------------
# empirical log-term detection

@dataclass(frozen=True)
class LogTermReport:
    """Outcome of fitting eigenvalue remainders against a log model."""
    n: int
    kind: str                    # "leading-log", "power-log" or "absent"
    fitted_p: float
    expected_p: float
    c_values: tuple
    log_product: float
    log_product_target: float
    residual_change: float


def _fd_lambda(man, r):
    from .eigensolver import fd_matrix_oracle
    return fd_matrix_oracle(man, r, 16000)


def log_term_detector(man, n_list=None):
    """Detect ln(R-r) structure in the eigenvalue decay toward r = R.

    For even n >= 4 the remainder after removing the algebraic part of the
    expansion is fitted against c (R-r)^p ln(R-r); the log term sits at
    p = 2(n-2).  n = 2 instead reports the limit of lambda ln(R-r), whose
    target is V_R/B1_1 = -1/2 on the round sphere.  Odd dimensions run an
    absence check at the first order past the computed series: the change
    in fit residual from adding a log regressor is measured against the
    norm of the remainder signal itself, so that the smooth truncation
    tail the base column absorbs anyway cannot masquerade as a log term.
    Eigenvalues come from the dense-grid matrix oracle, which keeps
    accuracy when the weight degenerates at both ends.
    """
    _require_compact(man, "log_term_detector")
    if n_list is None:
        n_list = [man.n]
    out = {}
    for n in n_list:
        sub = man if n == man.n else Manifold(n, man.warp)
        R = sub.warp.R
        consts = compute_constants(sub)
        nan = math.nan
        if n == 2:
            vs = [1e-2, 3e-3, 1e-3]
            prods = [_fd_lambda(sub, R - v) * math.log(v) for v in vs]
            target = consts.V_R / consts.B1[1]
            out[n] = LogTermReport(n=n, kind="leading-log", fitted_p=0.0,
                                   expected_p=0.0, c_values=tuple(prods),
                                   log_product=prods[-1],
                                   log_product_target=target,
                                   residual_change=nan)
            continue
        if n % 2 == 0:
            p_exp = 2.0 * (n - 2)
            ks = range(4, 9) if n == 4 else range(2, 7)
            vs = [2.0 ** (-k) for k in ks]
            alg = {k: c for k, c in consts.series.items() if k[1] == 0}
            rem, cs = [], []
            for v in vs:
                lam = _fd_lambda(sub, R - v)
                lv = math.log(v)
                base = sum(c * v ** p for (p, q), c in alg.items())
                d = lam - base
                rem.append(abs(d))
                cs.append(d / (v ** p_exp * lv))
            x = np.log(vs)
            y = np.log(rem)
            p_fit = float(np.polyfit(x, y, 1)[0])
            out[n] = LogTermReport(n=n, kind="power-log", fitted_p=p_fit,
                                   expected_p=p_exp, c_values=tuple(cs),
                                   log_product=nan, log_product_target=nan,
                                   residual_change=nan)
            continue
        # odd dimension: compare algebraic fit with and without a log column
        ks = range(2, 8)
        vs = np.array([2.0 ** (-k) for k in ks])
        cap = max(p for (p, q) in consts.series)
        full = np.array([sum(c * v ** p * math.log(v) ** q
                             for (p, q), c in consts.series.items())
                         for v in vs])
        y = np.array([_fd_lambda(sub, R - v) for v in vs]) - full
        X0 = vs[:, None] ** (cap + 1)
        X1 = np.column_stack([X0, vs ** (cap + 1) * np.log(vs)])

        def resid_norm(X):
            coef = np.linalg.lstsq(X, y, rcond=None)[0]
            return math.sqrt(float(np.sum((y - X @ coef) ** 2)))

        r0, r1 = resid_norm(X0), resid_norm(X1)
        ynorm = math.sqrt(float(np.sum(y * y)))
        change = abs(r0 - r1) / ynorm if ynorm > 0.0 else 0.0
        out[n] = LogTermReport(n=n, kind="absent", fitted_p=nan,
                               expected_p=nan, c_values=(),
                               log_product=nan, log_product_target=nan,
                               residual_change=change)
    return out
