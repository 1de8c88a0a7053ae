"""Small-radius expansion coefficients against an independent multiprecision
oracle, the two parameterizations against each other, and the remainder
order against the eigensolver."""

import math

import pytest

from geoball.asympt_small import (OrderFit, compute_expansion, evaluate,
                                  evaluate_fderiv_form, remainder_order_fit)
from geoball.eigensolver import first_eigenvalue
from geoball.hadamard import bounds_constant_curvature
from geoball.manifold import Manifold, WarpingFunction, scalar_curvature_pole
from geoball.specfun import QuadratureSpec, bessel_j, integrate


def _man(kind, n):
    return Manifold(n, WarpingFunction(kind) if kind != "euclidean"
                    else WarpingFunction.euclidean())


# 50-digit mpmath quadrature of the defining integrals, frozen
COEFF_REF = {
    2: dict(j=2.404825557695772768621632, c0=2.72410744491089478598510513153,
            I1=0.0293846695416027017207038808527,
            I2=0.00318556973384450877800612285265,
            I3=0.00450950650347803334739568867982,
            alpha1=-0.000908569252692652980780925459916,
            alpha2=-0.021805662064623671538742211038),
    3: dict(j=math.pi, c0=math.pi,
            I1=0.0286407367534370895533834294363,
            I2=0.00122541136614501955223559360849,
            I3=0.00396280946988433376147532429428,
            alpha1=0.0,
            alpha2=-0.0282672741512164447611393601728),
    4: dict(j=3.83170597020751231561443588631,
            c0=3.51131116359486277126880213779,
            I1=0.0270358551377809409145426872748,
            I2=0.000447624127319164877265691183914,
            I3=0.00325208821534099656317406590873,
            alpha1=1.0/8640.0, alpha2=-1.0/30.0),
    5: dict(j=4.49340945790906417530788092728,
            c0=3.84910610430277077180266557971,
            I1=0.0252845616941573485309690472088,
            I2=0.0000919564843226848166468029794998,
            I3=0.00266624543356519569289594887956,
            alpha1=0.000124868800785432555888129669766,
            alpha2=-0.0374606402356297667664389009299),
    6: dict(j=5.13562230184068255630140169014,
            c0=4.16350810152455515278460000934,
            I1=0.023603608166025077930655001983,
            I2=-0.0000831290924502779698415359877424,
            I3=0.00221064189858014673822294828539,
            alpha1=0.000113656616673844642129337095758,
            alpha2=-0.0409163820025840711665613544729),
    7: dict(j=5.76345919689454979140646665395,
            c0=4.45975249662975816676869893504,
            I1=0.0220569635410978859341071779828,
            I2=-0.000171796781710616785766280883066,
            I3=0.00185708282952155327790350273229,
            alpha1=0.0000994783676879292446961372964494,
            alpha2=-0.0438699601503767969109965477342),
}


@pytest.mark.parametrize("n", sorted(COEFF_REF))
def test_coefficients_against_oracle(n):
    exp = compute_expansion(n)
    ref = COEFF_REF[n]
    for key in ("j", "c0", "I1", "I2", "I3", "alpha2"):
        got, want = getattr(exp, key), ref[key]
        assert abs(got - want) <= 1e-9*abs(want), (n, key)
    if n == 3:
        assert abs(exp.alpha1) <= 1e-10
    else:
        assert abs(exp.alpha1 - ref["alpha1"]) <= 1e-9*abs(ref["alpha1"])


def test_alpha2_n3_closed_form():
    want = (1.0/(2.0*math.pi**2) - 1.0/3.0)/10.0
    assert abs(compute_expansion(3).alpha2 - want) <= 1e-8*abs(want)


def test_alpha2_follows_I1():
    for n in (2, 4, 6):
        exp = compute_expansion(n)
        assert exp.alpha2 == -exp.c0**2*exp.I1/10.0


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7])
def test_c0_normalizes_psi0(n):
    exp = compute_expansion(n)
    nu = 0.5*n - 1.0
    q = integrate(lambda x: x*bessel_j(nu, exp.j*x)**2, 0.0, 1.0,
                  QuadratureSpec(rel_tol=1e-12, abs_tol=1e-15))
    assert abs(exp.c0**2*q - 1.0) <= 1e-9


def test_expansion_cache_and_validation():
    assert compute_expansion(4) is compute_expansion(4)
    with pytest.raises(ValueError):
        compute_expansion(1)
    with pytest.raises(ValueError):
        compute_expansion(2.5)


# ------------------------------------------------------------- evaluations

def test_evaluate_flat_is_pure_bessel():
    exp = compute_expansion(4)
    man = _man("euclidean", 4)
    for r in (0.1, 0.3):
        assert evaluate(exp, man, r) == exp.j**2/r**2
        assert evaluate_fderiv_form(man, r) == exp.j**2/r**2


def test_evaluate_sphere_n2_terms():
    exp = compute_expansion(2)
    man = _man("sphere", 2)
    S, Spp = scalar_curvature_pole(man)
    assert abs(S - 2.0) <= 1e-12
    r = 0.2
    want = exp.j**2/r**2 - 1.0/3.0 + (exp.alpha1*4.0 + exp.alpha2*Spp)*r**2
    assert abs(evaluate(exp, man, r) - want) <= 1e-12*abs(want)


def test_evaluate_hyperbolic_n3_small_radius():
    # two-term-exact case: expansion reproduces pi^2/r^2 + 1 up to alpha1 ~ 0
    man = _man("hyperbolic", 3)
    got = evaluate(compute_expansion(3), man, 0.1)
    assert abs(got - (math.pi**2/0.01 + 1.0)) <= 1e-4


def test_evaluate_dimension_mismatch():
    with pytest.raises(ValueError):
        evaluate(compute_expansion(3), _man("sphere", 2), 0.1)


@pytest.mark.parametrize("kind,n", [("sphere", 2), ("sphere", 4),
                                    ("hyperbolic", 3), ("hyperbolic", 5)])
def test_two_parameterizations_agree(kind, n):
    man = _man(kind, n)
    exp = compute_expansion(n)
    for r in (0.05, 0.2, 0.4):
        a = evaluate(exp, man, r)
        b = evaluate_fderiv_form(man, r)
        assert abs(a - b) <= 1e-12*abs(a)


def test_fderiv_form_truncated_sinh_jet():
    # f = t + t^3/6 + t^5/120 carries the same order-5 jet as sinh
    tree = "(+ t (scale 0.16666666666666666 (pow t 3)) " \
           "(scale 0.008333333333333333 (pow t 5)))"
    man = Manifold(3, WarpingFunction.custom(tree))
    ref = _man("hyperbolic", 3)
    for r in (0.05, 0.1):
        assert abs(evaluate_fderiv_form(man, r)
                   - evaluate_fderiv_form(ref, r)) <= 1e-10


# ------------------------------------------------------- asymptotic laws

CURVED = [("sphere", n) for n in (2, 3, 4, 5)] \
    + [("hyperbolic", n) for n in (2, 3, 4, 5)]


@pytest.mark.parametrize("kind,n", CURVED)
def test_leading_order_law(kind, n):
    man = _man(kind, n)
    exp = compute_expansion(n)
    lam = first_eigenvalue(man, 0.02).lam
    assert abs(0.02**2*lam/exp.j**2 - 1.0) <= 1e-3


@pytest.mark.parametrize("kind,n", CURVED)
def test_second_term_law(kind, n):
    man = _man(kind, n)
    exp = compute_expansion(n)
    S, _ = scalar_curvature_pole(man)
    lam = first_eigenvalue(man, 0.05).lam
    assert abs(lam - exp.j**2/0.05**2 + S/6.0) <= 0.02*(1.0 + abs(S))


def test_two_term_truncation_is_n2_sphere_upper_bound():
    exp = compute_expansion(2)
    man = _man("sphere", 2)
    for r in (0.5, 1.0):
        trunc = exp.j**2/r**2 - 1.0/3.0
        _, upper = bounds_constant_curvature("sphere", 2, r)
        assert abs(trunc - upper) <= 1e-12
        assert first_eigenvalue(man, r).lam <= trunc + 1e-8


# ------------------------------------------------------- remainder order

def test_remainder_order_sphere_n2():
    radii = [0.4*2.0**-k for k in range(5)]
    fit = remainder_order_fit(_man("sphere", 2), radii)
    assert isinstance(fit, OrderFit)
    # smallest radii may hit the solver noise floor; the large ones never do
    assert sum(fit.used) >= 3 and all(fit.used[:3])
    assert 3.5 <= fit.slope <= 4.5


def test_remainder_order_sphere_n4():
    radii = [0.4*2.0**-k for k in range(5)]
    fit = remainder_order_fit(_man("sphere", 4), radii)
    assert 3.5 <= fit.slope <= 4.5


def test_remainder_hyperbolic_n3_two_term_exact():
    # expansion coincides with the exact law; residuals sit at solver noise
    radii = [0.4*2.0**-k for k in range(5)]
    with pytest.warns(RuntimeWarning):
        fit = remainder_order_fit(_man("hyperbolic", 3), radii)
    assert math.isnan(fit.slope)
    assert max(fit.residuals) <= 1e-6


def test_remainder_flat_is_noise():
    radii = [0.4*2.0**-k for k in range(5)]
    man = _man("euclidean", 3)
    exp = compute_expansion(3)
    for r in radii:
        lam = first_eigenvalue(man, r).lam
        assert abs(lam - evaluate(exp, man, r)) <= 1e-9*lam


def test_remainder_order_fit_validation():
    man = _man("sphere", 2)
    with pytest.raises(ValueError):
        remainder_order_fit(man, [0.4, 0.2, 0.1, 0.05])
    with pytest.raises(ValueError):
        remainder_order_fit(man, [0.1, 0.2, 0.1, 0.05, 0.02])
    with pytest.raises(ValueError):
        remainder_order_fit(man, [0.8, 0.4, 0.2, 0.1, 0.05])
