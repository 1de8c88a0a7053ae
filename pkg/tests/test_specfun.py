"""Bessel functions, first zeros, and the adaptive integrator.

Reference values were computed independently with mpmath at 25 significant
digits and are frozen here as literals.
"""

import math

import pytest

from geoball import specfun as sf

# (nu, x, J_nu(x))
J_REF = [
    (0.0, 1.0, 0.7651976865579665514497),
    (0.0, 5.0, -0.1775967713143383043474),
    (0.0, 12.0, 0.04768931079683353662381),
    (0.0, 30.0, -0.08636798358104021133596),
    (1.0, 1.0, 0.4400505857449335159597),
    (1.0, 20.0, 0.06683312417585004557899),
    (0.5, 2.0, 0.5130161365618277516657),
    (1.5, 0.3, 0.04330988191837832327152),
    (1.5, 7.0, -0.1990517132924935488198),
    (2.0, 2.5, 0.4460590584396172267359),
    (2.5, 4.0, 0.4408849745573411655239),
    (3.0, 10.0, 0.05837937930518681234294),
    (0.75, 3.0, 0.2161997723349338146558),
]

# (nu, x, Y_nu(x))
Y_REF = [
    (0.0, 1.0, 0.08825696421567695798293),
    (0.0, 8.0, 0.2235214893875662205273),
    (1.0, 2.0, -0.1070324315409375468884),
    (1.0, 25.0, -0.09882996478323741005333),
    (0.5, 2.0, 0.234785710406248469174),
    (1.5, 5.0, 0.3219244429611401298467),
    (2.0, 0.7, -2.961477561827271703011),
    (0.75, 3.0, 0.4108259507218363908708),
    (3.0, 18.0, 0.03372448670402342152691),
]

# (nu, first positive zero of J_nu)
ZERO_REF = [
    (0.0, 2.404825557695772768621632),
    (0.5, math.pi),
    (1.0, 3.831705970207512315614436),
    (1.5, 4.493409457909064175307881),
    (2.0, 5.135622301840682556301402),
    (2.5, 5.763459196894549791406467),
    (3.0, 6.380161895923983506236615),
    (0.3, 2.854097224376684432202758),
]


@pytest.mark.parametrize("nu,x,want", J_REF)
def test_bessel_j_reference(nu, x, want):
    got = sf.bessel_j(nu, x)
    assert abs(got - want) <= 1e-12*abs(want)


@pytest.mark.parametrize("nu,x,want", Y_REF)
def test_bessel_y_reference(nu, x, want):
    got = sf.bessel_y(nu, x)
    assert abs(got - want) <= 1e-10*abs(want)


def test_bessel_j_at_origin():
    assert sf.bessel_j(0.0, 0.0) == 1.0
    assert sf.bessel_j(1.0, 0.0) == 0.0
    assert sf.bessel_j(0.5, 0.0) == 0.0


def test_bessel_j_half_closed_form():
    # J_{1/2}(x) = sqrt(2/(pi x)) sin x, so J_{1/2}(pi) = 0
    assert abs(sf.bessel_j(0.5, math.pi)) < 1e-14


def test_bessel_y_log_singularity():
    assert sf.bessel_y(0.0, 1e-8) < -10.0


def test_bessel_y_rejects_nonpositive_x():
    with pytest.raises(ValueError):
        sf.bessel_y(0.0, 0.0)
    with pytest.raises(ValueError):
        sf.bessel_y(1.0, -1.0)


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5, 3.5])
@pytest.mark.parametrize("x", [0.4, 1.3, 3.7, 9.0])
def test_half_integer_matches_series(nu, x):
    closed = sf.bessel_j(nu, x)
    series = sf._j_series(nu, x)
    assert abs(closed - series) <= 1e-10*max(1.0, abs(closed))


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 1.5, 2.0])
@pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 5.0, 10.0])
def test_wronskian(nu, x):
    w = (sf.bessel_j(nu, x)*sf.bessel_y_prime(nu, x)
         - sf.bessel_j_prime(nu, x)*sf.bessel_y(nu, x))
    want = 2.0/(math.pi*x)
    assert abs(w - want) <= 1e-9*want


def test_j_prime_zero_order_identity():
    # J0' = -J1 exactly by the recurrence's nu=0 branch
    for x in (0.3, 1.0, 4.0, 20.0):
        assert sf.bessel_j_prime(0.0, x) == -sf.bessel_j(1.0, x)


def test_j_prime_against_finite_differences():
    h = 1e-6
    for nu in (0.0, 0.5, 1.0, 2.5):
        for x in (0.8, 2.0, 6.0):
            fd = (sf.bessel_j(nu, x + h) - sf.bessel_j(nu, x - h))/(2*h)
            assert abs(sf.bessel_j_prime(nu, x) - fd) < 1e-8


def test_j_prime_at_first_zero():
    j01 = sf.first_bessel_zero(0.0)
    want = -0.5191474972894669029446                      # -J1(j01), mpmath
    assert abs(sf.bessel_j_prime(0.0, j01) - want) < 1e-12


@pytest.mark.parametrize("nu,want", ZERO_REF)
def test_first_zero_reference(nu, want):
    assert abs(sf.first_bessel_zero(nu) - want) <= 1e-12


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 1.5, 2.0, 2.5])
def test_j_vanishes_at_its_zero(nu):
    j = sf.first_bessel_zero(nu)
    assert abs(sf.bessel_j(nu, j)) <= 1e-11


def test_integrate_polynomial():
    got = sf.integrate(lambda t: t*t, 0.0, 1.0)
    assert abs(got - 1.0/3.0) < 1e-12


def test_integrate_sine():
    got = sf.integrate(math.sin, 0.0, math.pi)
    assert abs(got - 2.0) < 1e-12


def test_integrate_log_endpoint():
    spec = sf.QuadratureSpec(endpoint_grading="left")
    got = sf.integrate(lambda t: math.log(1.0/t), 0.0, 1.0, spec)
    assert abs(got - 1.0) < 1e-9


def test_integrate_log_right_endpoint():
    spec = sf.QuadratureSpec(endpoint_grading="right")
    got = sf.integrate(lambda t: math.log(1.0/(1.0 - t)), 0.0, 1.0, spec)
    assert abs(got - 1.0) < 1e-9


def test_integrate_additivity():
    g = lambda t: math.exp(-t*t)
    spec = sf.QuadratureSpec()
    for c in (0.3, 0.7, 1.1, 1.9):
        whole = sf.integrate(g, 0.0, 2.0, spec)
        split = sf.integrate(g, 0.0, c, spec) + sf.integrate(g, c, 2.0, spec)
        assert abs(whole - split) <= 2*spec.abs_tol


def test_integrate_divergent_raises():
    with pytest.raises(sf.QuadratureError):
        sf.integrate(lambda t: 1.0/t, 0.0, 1.0)


def test_integrate_rejects_bad_interval():
    with pytest.raises(ValueError):
        sf.integrate(math.sin, 1.0, 1.0)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        sf.QuadratureSpec(rel_tol=0.0)
    with pytest.raises(ValueError):
        sf.QuadratureSpec(abs_tol=-1e-12)
    with pytest.raises(ValueError):
        sf.QuadratureSpec(max_depth=0)
    with pytest.raises(ValueError):
        sf.QuadratureSpec(endpoint_grading="center")
