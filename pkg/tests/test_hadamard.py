"""Kernel closed forms, both variation-identity checks, and the
constant-curvature bounds against the eigensolver."""

import math
import os

import numpy as np
import pytest

from geoball.eigensolver import first_eigenvalue
from geoball.hadamard import (GeometricKernels, bounds_constant_curvature,
                              derivative_identity_residual,
                              integrated_identity_eval, kernel_H)
from geoball.manifold import Manifold, WarpingFunction
from geoball.specfun import first_bessel_zero


def _man(kind, n):
    return Manifold(n, WarpingFunction(kind) if kind != "euclidean"
                    else WarpingFunction.euclidean())


# ------------------------------------------------------------------ kernels

def test_kernel_H_n3_constants():
    assert abs(kernel_H(_man("hyperbolic", 3), 1.3) - 2.0) <= 1e-12
    assert abs(kernel_H(_man("sphere", 3), 0.4) + 2.0) <= 1e-12


def test_kernel_H_hyperbolic_plane_limit_at_infinity():
    assert abs(kernel_H(_man("hyperbolic", 2), 30.0) - 1.0) <= 1e-3


def test_kernel_H_flat_is_zero():
    for t in (0.1, 1.0, 7.3):
        assert abs(kernel_H(_man("euclidean", 5), t)) <= 1e-12


@pytest.mark.parametrize("n", [2, 3, 5])
def test_kernel_H_pole_limit(n):
    # H -> (2n/3) f'''(0), i.e. +-2n/3 at curvature -+1
    assert abs(kernel_H(_man("hyperbolic", n), 1e-5) - 2.0*n/3.0) <= 1e-3
    assert abs(kernel_H(_man("sphere", n), 1e-5) + 2.0*n/3.0) <= 1e-3


def test_kernel_g_h_closed_forms():
    ker = GeometricKernels(_man("hyperbolic", 3))
    for t in (0.5, 0.9, 2.0):
        assert abs(ker.g(t) - 1.0/math.tanh(t)) <= 1e-12
        assert abs(ker.h(t) - 1.0) <= 1e-12


@pytest.mark.parametrize("kind,span", [("hyperbolic", (0.05, 10.0)),
                                       ("sphere", (0.05, math.pi - 0.05))])
def test_kernel_H_monotonicity_pattern(kind, span):
    t = np.linspace(*span, 200)
    h2 = GeometricKernels(_man(kind, 2)).H(t)
    assert np.all(np.diff(h2) < 0.0)
    h3 = GeometricKernels(_man(kind, 3)).H(t)
    want = 2.0 if kind == "hyperbolic" else -2.0
    assert np.max(np.abs(h3 - want)) <= 1e-10
    for n in (4, 5, 6):
        hn = GeometricKernels(_man(kind, n)).H(t)
        assert np.all(np.diff(hn) > 0.0)


def test_kernel_H_custom_warp_matches_builtin():
    man = Manifold(4, WarpingFunction.custom("(sinh 1)"))
    ref = _man("hyperbolic", 4)
    for t in (0.3, 1.1):
        assert abs(kernel_H(man, t) - kernel_H(ref, t)) <= 1e-10


def test_kernel_H_domain():
    man = _man("sphere", 3)
    with pytest.raises(ValueError):
        kernel_H(man, 1e-9)
    with pytest.raises(ValueError):
        kernel_H(man, math.pi)


# ------------------------------------------------------------------- bounds

def test_bounds_n3_exact_pair():
    want = math.pi**2/4.0 + 1.0
    lo, up = bounds_constant_curvature("hyperbolic", 3, 2.0)
    assert lo == up
    assert abs(lo - want) <= 1e-12


def test_bounds_n2_hyperbolic_example():
    j2 = first_bessel_zero(0.0)**2
    lo, up = bounds_constant_curvature("hyperbolic", 2, 1.0)
    assert abs(lo - (j2 + 0.25*(1.0 - 1.0/math.sinh(1.0)**2 + 1.0))) <= 1e-12
    assert abs(up - (j2 + 1.0/3.0)) <= 1e-12


def test_bounds_n4_sphere_example():
    j2 = first_bessel_zero(1.0)**2
    lo, up = bounds_constant_curvature("sphere", 4, 1.0)
    assert abs(lo - (j2 - 2.0)) <= 1e-12
    assert abs(up - (j2 - 2.25 + 0.75*(1.0/math.sin(1.0)**2 - 1.0))) <= 1e-12


def test_bounds_domain():
    with pytest.raises(ValueError):
        bounds_constant_curvature("flat", 3, 1.0)
    with pytest.raises(ValueError):
        bounds_constant_curvature("sphere", 3, math.pi)
    with pytest.raises(ValueError):
        bounds_constant_curvature("hyperbolic", 3, 0.0)
    with pytest.raises(ValueError):
        bounds_constant_curvature("hyperbolic", 2.5, 1.0)


@pytest.mark.parametrize("space", ["hyperbolic", "sphere"])
@pytest.mark.parametrize("n", [2, 4, 5, 6])
def test_bounds_sandwich_eigenvalue(space, n):
    man = _man(space, n)
    for r in (0.3, 0.8, 1.5):
        lam = first_eigenvalue(man, r).lam
        lo, up = bounds_constant_curvature(space, n, r)
        assert lo <= lam <= up + 1e-8, (space, n, r)


@pytest.mark.parametrize("space,radii", [("hyperbolic", (0.5, 1.0, 2.0)),
                                         ("sphere", (0.5, 1.0, 2.5))])
def test_bounds_n3_match_solver(space, radii):
    man = _man(space, 3)
    sgn = 1.0 if space == "hyperbolic" else -1.0
    for r in radii:
        lam = first_eigenvalue(man, r).lam
        assert abs(lam - (math.pi**2/r**2 + sgn)) <= 1e-8*lam


def test_bounds_small_radius_sharpness():
    man = _man("hyperbolic", 2)
    lam = first_eigenvalue(man, 0.05).lam
    lo, up = bounds_constant_curvature("hyperbolic", 2, 0.05)
    assert up - lam <= 0.05
    assert lam - lo <= 0.05


@pytest.mark.parametrize("n", [4, 6])
def test_bounds_hyperbolic_large_radius_upper(n):
    # beyond the j^2/r^2 tail the upper bound settles at (n-1)^2/4
    j2 = first_bessel_zero(0.5*n - 1.0)**2
    lim = 0.25*(n - 1.0)**2
    _, up20 = bounds_constant_curvature("hyperbolic", n, 20.0)
    assert abs(up20 - (j2/400.0 + lim)) <= 0.05
    _, up40 = bounds_constant_curvature("hyperbolic", n, 40.0)
    assert abs(up40 - lim) < abs(up20 - lim)


# -------------------------------------------------------- derivative identity

DERIV_CASES = [("hyperbolic", 2, 1.2), ("hyperbolic", 3, 1.0),
               ("sphere", 2, 1.0), ("sphere", 3, 1.3),
               ("hyperbolic", 4, 0.8), ("sphere", 4, 1.1)]


@pytest.mark.parametrize("kind,n,r", DERIV_CASES)
def test_derivative_identity(kind, n, r):
    assert derivative_identity_residual(_man(kind, n), r) <= 1e-3


def test_derivative_identity_flat():
    # both sides vanish; the residual must report ~0, not 0/0
    assert derivative_identity_residual(_man("euclidean", 2), 1.0) <= 1e-5


def test_derivative_identity_domain():
    with pytest.raises(ValueError):
        derivative_identity_residual(_man("sphere", 3), math.pi + 0.1)


# -------------------------------------------------------- integrated identity

def test_integrated_identity_hyperbolic_n3():
    got = integrated_identity_eval(_man("hyperbolic", 3), 1.5)
    want = math.pi**2/1.5**2 + 1.0
    assert abs(got - want) <= 1e-6


def test_integrated_identity_flat_n4():
    got = integrated_identity_eval(_man("euclidean", 4), 1.0)
    want = first_bessel_zero(1.0)**2
    assert abs(got - want) <= 1e-10*want


def test_integrated_identity_sphere_n2():
    man = _man("sphere", 2)
    got = integrated_identity_eval(man, 1.0)
    lam = first_eigenvalue(man, 1.0).lam
    assert abs(got - lam) <= 1e-4*lam


def test_integrated_identity_interior_anchor():
    man = _man("hyperbolic", 3)
    got = integrated_identity_eval(man, 1.5, r0=0.7)
    want = math.pi**2/1.5**2 + 1.0
    assert abs(got - want) <= 1e-6


def test_integrated_identity_thread_determinism():
    man = _man("sphere", 2)
    saved = os.environ.get("GEOBALL_THREADS")
    try:
        os.environ["GEOBALL_THREADS"] = "1"
        serial = integrated_identity_eval(man, 1.0, quad_points=16)
        os.environ["GEOBALL_THREADS"] = "3"
        pooled = integrated_identity_eval(man, 1.0, quad_points=16)
    finally:
        if saved is None:
            os.environ.pop("GEOBALL_THREADS", None)
        else:
            os.environ["GEOBALL_THREADS"] = saved
    assert serial == pooled


def test_integrated_identity_domain():
    man = _man("sphere", 3)
    with pytest.raises(ValueError):
        integrated_identity_eval(man, 1.0, r0=1.0)
    with pytest.raises(ValueError):
        integrated_identity_eval(man, math.pi)
    with pytest.raises(ValueError):
        integrated_identity_eval(man, 1.0, quad_points=2)
