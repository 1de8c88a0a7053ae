"""Three-term small-radius expansion of the first eigenvalue.

lam(r) = j^2/r^2 - S(p)/6 + [alpha1 S(p)^2 + alpha2 S''(p)] r^2 + O(r^4),

with j the first zero of J_{n/2-1}, S the scalar curvature at the pole and
the alpha coefficients dimension-only Bessel integrals. An equivalent
parameterization by the warp derivatives f'''(0), f^(5)(0) is provided; the
two must agree to roundoff, which cross-checks the curvature conversion.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .eigensolver import first_eigenvalue
from .manifold import scalar_curvature_pole
from .specfun import (QuadratureSpec, bessel_j, bessel_y, bessel_j_prime,
                      bessel_y_prime, first_bessel_zero, integrate)

_CACHE = {}


@dataclass(frozen=True)
class SmallRadiusExpansion:
    n: int
    j: float        # first zero of J_{n/2-1}
    c0: float       # sqrt(2)/|J'_{n/2-1}(j)|, the Y0-normalization constant
    I1: float       # int_0^1 xi^3 J(j xi)^2 dxi
    I2: float       # int_0^1 xi^3 J(j xi)^3 Y(j xi) dxi
    I3: float       # int_0^1 xi^4 J(j xi)^3 Y'(j xi) dxi
    alpha1: float
    alpha2: float

    def lambda_tilde_2(self, f3, f5):
        """r^2 coefficient in the f-derivative parameterization: the image
        of alpha1 S^2 + alpha2 S'' under S = -n(n-1) f3,
        S'' = (n+2)(n-1)(f3^2 - f5)/6."""
        n = self.n
        return (self.alpha1*(n*(n - 1.0))**2*f3*f3
                + self.alpha2*(n + 2.0)*(n - 1.0)/6.0*(f3*f3 - f5))


def compute_expansion(n):
    """Dimension-only data of the expansion; computed once and cached."""
    if not isinstance(n, int) or n < 2:
        raise ValueError("dimension must be an integer >= 2")
    if n in _CACHE:
        return _CACHE[n]
    nu = 0.5*n - 1.0
    j = first_bessel_zero(nu)
    c0 = math.sqrt(2.0)/abs(bessel_j_prime(nu, j))

    spec = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-15,
                          endpoint_grading="left" if n == 2 else "none")
    I1 = integrate(lambda x: x**3*bessel_j(nu, j*x)**2, 0.0, 1.0, spec)
    # Y and Y' blow up at 0 (log for n=2, power otherwise) but J^3 wins;
    # Gauss nodes never touch the endpoint
    I2 = integrate(lambda x: x**3*bessel_j(nu, j*x)**3*bessel_y(nu, j*x),
                   0.0, 1.0, spec)
    I3 = integrate(lambda x: x**4*bessel_j(nu, j*x)**3*bessel_y_prime(nu, j*x),
                   0.0, 1.0, spec)

    alpha1 = c0*c0/(270.0*n*n*(n - 1.0)) \
        * (5.0*math.pi*(n - 1.0)*(I2 + j*I3) - 3.0*(n + 2.0)*I1)
    alpha2 = -c0*c0*I1/10.0
    exp = SmallRadiusExpansion(n=n, j=j, c0=c0, I1=float(I1), I2=float(I2),
                               I3=float(I3), alpha1=float(alpha1),
                               alpha2=float(alpha2))
    _CACHE[n] = exp
    return exp


def evaluate(exp, man, r):
    """Three-term expansion value at radius r from the pole curvatures."""
    if man.n != exp.n:
        raise ValueError("expansion dimension does not match the manifold")
    S, Spp = scalar_curvature_pole(man)
    return (exp.j**2/(r*r) - S/6.0
            + (exp.alpha1*S*S + exp.alpha2*Spp)*r*r)


def evaluate_fderiv_form(man, r):
    """Same expansion parameterized by f'''(0), f^(5)(0) directly."""
    exp = compute_expansion(man.n)
    jet = man.warp.jet(0.0, 5)
    f3, f5 = float(jet[3]), float(jet[5])
    n = man.n
    return (exp.j**2/(r*r) + n*(n - 1.0)*f3/6.0
            + exp.lambda_tilde_2(f3, f5)*r*r)


@dataclass(frozen=True)
class OrderFit:
    slope: float            # log-log least-squares slope (nan if starved)
    radii: tuple
    residuals: tuple        # |lam_num - expansion| per radius
    used: tuple             # mask: residual above the solver noise floor


def remainder_order_fit(man, radii, tol=1e-10):
    """Fit the remainder order of the expansion against the eigensolver.

    Returns an OrderFit whose slope should be ~4. Radii whose residual sits
    at the solver noise floor are excluded from the fit; if fewer than three
    remain the slope is nan and a warning reports the floor hit.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 5:
        raise ValueError("need at least 5 radii")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    if radii[0] > 0.5 or radii[-1] <= 0.0:
        raise ValueError("radii must lie in (0, 0.5]")
    exp = compute_expansion(man.n)
    resid, used = [], []
    for r in radii:
        lam = first_eigenvalue(man, r, tol=tol).lam
        d = abs(lam - evaluate(exp, man, r))
        resid.append(d)
        # realized eigenvalue error is ~0.01*tol*lam; keep a 5x margin so
        # the r^4 signal at small radii is not thrown away with the noise
        used.append(bool(d > max(1e-11, 0.05*tol*lam)))
    if sum(used) < 3:
        warnings.warn("residuals sit at the solver noise floor; "
                      "remainder order not identifiable", RuntimeWarning)
        slope = math.nan
    else:
        x = np.log([r for r, u in zip(radii, used) if u])
        y = np.log([d for d, u in zip(resid, used) if u])
        slope = float(np.polyfit(x, y, 1)[0])
    return OrderFit(slope=slope, radii=tuple(radii),
                    residuals=tuple(resid), used=tuple(used))
