"""Spherically symmetric manifolds via warping functions.

The metric is dr^2 + f(t)^2 dtheta^2 with f(0)=0, f'(0)=1, f''(0)=0. Builtin
warpings (euclidean, sphere, hyperbolic) have exact derivative jets; custom
warpings are expression trees whose jets are propagated by truncated Taylor
arithmetic, because the asymptotic modules need derivatives up to order 6 at
the domain endpoints and finite differences of a black box are too noisy.
"""

import json
import math
import warnings

import numpy as np

from .specfun import QuadratureSpec, integrate

MAX_JET = 6


def _jet_mul(a, b):
    # Leibniz product of two derivative arrays of equal length
    k = len(a)
    out = np.zeros(k)
    for m in range(k):
        s = 0.0
        for j in range(m + 1):
            s += math.comb(m, j)*a[j]*b[m - j]
        out[m] = s
    return out


class ExpressionTree:
    """Warping functions built from a fixed set of primitives.

    Node kinds: "t", "const" (value c), "sin" (value a, meaning sin(a*t)),
    "sinh" (value a, meaning sinh(a*t)), "sum", "product",
    "scale" (value c, one child), "pow" (value k >= 0 integer, one child).

    The sin/sinh leaves act on a*t directly rather than on a subexpression;
    this keeps order-6 jets exact without a full composition rule.
    """

    __slots__ = ("kind", "value", "children")

    def __init__(self, kind, value=None, children=()):
        self.kind = kind
        self.value = value
        self.children = tuple(children)
        if kind in ("t",):
            if value is not None or self.children:
                raise ValueError("t takes no arguments")
        elif kind in ("const", "sin", "sinh"):
            if not isinstance(value, (int, float)):
                raise ValueError(f"{kind} needs a numeric parameter")
            if self.children:
                raise ValueError(f"{kind} takes no children")
        elif kind in ("sum", "product"):
            if len(self.children) < 2:
                raise ValueError(f"{kind} needs at least two children")
        elif kind == "scale":
            if not isinstance(value, (int, float)) or len(self.children) != 1:
                raise ValueError("scale needs a factor and one child")
        elif kind == "pow":
            if (not isinstance(value, int) or value < 0
                    or len(self.children) != 1):
                raise ValueError("pow needs one child and an integer >= 0")
        else:
            raise ValueError(f"unknown node kind {kind!r}")

    def __call__(self, t):
        k = self.kind
        if k == "t":
            return t
        if k == "const":
            return self.value*np.ones_like(t) if isinstance(t, np.ndarray) else self.value
        if k == "sin":
            return np.sin(self.value*t)
        if k == "sinh":
            return np.sinh(self.value*t)
        if k == "sum":
            return sum(c(t) for c in self.children)
        if k == "product":
            out = self.children[0](t)
            for c in self.children[1:]:
                out = out*c(t)
            return out
        if k == "scale":
            return self.value*self.children[0](t)
        return self.children[0](t)**self.value

    def jet(self, t, k=MAX_JET):
        """Derivative array [f(t), f'(t), ..., f^(k)(t)]."""
        if k < 0 or k > MAX_JET:
            raise ValueError(f"jet order must be in [0, {MAX_JET}]")
        m = k + 1
        kind = self.kind
        if kind == "t":
            out = np.zeros(m)
            out[0] = t
            if m > 1:
                out[1] = 1.0
            return out
        if kind == "const":
            out = np.zeros(m)
            out[0] = self.value
            return out
        if kind == "sin":
            a = self.value
            return np.array([a**j*math.sin(a*t + 0.5*j*math.pi) for j in range(m)])
        if kind == "sinh":
            a = self.value
            s, c = math.sinh(a*t), math.cosh(a*t)
            return np.array([a**j*(s if j % 2 == 0 else c) for j in range(m)])
        if kind == "sum":
            out = np.zeros(m)
            for child in self.children:
                out += child.jet(t, k)
            return out
        if kind == "product":
            out = self.children[0].jet(t, k)
            for child in self.children[1:]:
                out = _jet_mul(out, child.jet(t, k))
            return out
        if kind == "scale":
            return self.value*self.children[0].jet(t, k)
        # pow
        p = self.value
        if p == 0:
            out = np.zeros(m)
            out[0] = 1.0
            return out
        base = self.children[0].jet(t, k)
        out = base.copy()
        for _ in range(p - 1):
            out = _jet_mul(out, base)
        return out

    @staticmethod
    def parse(text):
        """Parse a prefix-notation expression.

        Grammar: expr := "t" | <number> | "(" op args ")" with
        (sin a), (sinh a), (+ e1 e2 ...), (* e1 e2 ...), (scale c e),
        (pow e k). Bare numbers are constants. Example, a unit sphere:
        "(sin 1)"; the flat space warp is just "t".
        """
        tokens = text.replace("(", " ( ").replace(")", " ) ").split()
        pos = 0

        def need(what):
            nonlocal pos
            if pos >= len(tokens):
                raise ValueError(f"unexpected end of expression, wanted {what}")

        def number():
            nonlocal pos
            need("a number")
            try:
                v = float(tokens[pos])
            except ValueError:
                raise ValueError(f"expected a number, got {tokens[pos]!r}") from None
            pos += 1
            return v

        def expr():
            nonlocal pos
            need("an expression")
            tok = tokens[pos]
            if tok == "t":
                pos += 1
                return ExpressionTree("t")
            if tok != "(":
                return ExpressionTree("const", number())
            pos += 1
            need("an operator")
            op = tokens[pos]
            pos += 1
            if op in ("sin", "sinh"):
                node = ExpressionTree(op, number())
            elif op in ("+", "*"):
                kids = []
                while pos < len(tokens) and tokens[pos] != ")":
                    kids.append(expr())
                node = ExpressionTree("sum" if op == "+" else "product",
                                      children=kids)
            elif op == "scale":
                c = number()
                node = ExpressionTree("scale", c, [expr()])
            elif op == "pow":
                child = expr()
                node = ExpressionTree("pow", int(number()), [child])
            else:
                raise ValueError(f"unknown operator {op!r}")
            need("')'")
            if tokens[pos] != ")":
                raise ValueError(f"expected ')', got {tokens[pos]!r}")
            pos += 1
            return node

        node = expr()
        if pos != len(tokens):
            raise ValueError(f"trailing tokens after expression: {tokens[pos:]}")
        return node


class WarpingFunction:
    """A warping function f on [0, R] with derivative jets up to order 6.

    Construction validates the pole conditions f(0)=0, f'(0)=1, f''(0)=0
    (tolerance 1e-12) and f''''(0)=0 (1e-10), and that f > 0 on the open
    domain. With tolerant=True violations warn instead of raising, for
    deliberately singular experiments. The compact flag is set when R is
    finite with f(R)=0, f'(R)=A<0 and f''(R)=0, the closed-manifold case.
    """

    def __init__(self, kind, kappa=None, tree=None, R=math.inf, tolerant=False):
        if kind not in ("euclidean", "sphere", "hyperbolic", "custom"):
            raise ValueError(f"unknown warping kind {kind!r}")
        if kind in ("sphere", "hyperbolic"):
            if kappa is None:
                kappa = 1.0
            if kappa <= 0:
                raise ValueError("kappa must be positive")
        if kind == "custom" and tree is None:
            raise ValueError("custom warping needs an expression tree")
        if kind == "sphere" and (R is None or math.isinf(R)):
            R = math.pi/kappa
        if not R > 0:
            raise ValueError("R must be positive")
        self.kind = kind
        self.kappa = kappa
        self.tree = tree
        self.R = float(R)
        self._validate(tolerant)
        jR = self.jet(self.R, 2) if math.isfinite(self.R) else None
        self.compact = bool(
            jR is not None
            and abs(jR[0]) <= 1e-9*max(1.0, self.R)
            and jR[1] < 0.0
            and abs(jR[2]) <= 1e-8)
        self.A = float(jR[1]) if self.compact else None

    @classmethod
    def euclidean(cls):
        return cls("euclidean")

    @classmethod
    def sphere(cls, kappa=1.0):
        return cls("sphere", kappa=kappa)

    @classmethod
    def hyperbolic(cls, kappa=1.0):
        return cls("hyperbolic", kappa=kappa)

    @classmethod
    def custom(cls, tree, R=math.inf, tolerant=False):
        if isinstance(tree, str):
            tree = ExpressionTree.parse(tree)
        return cls("custom", tree=tree, R=R, tolerant=tolerant)

    def _validate(self, tolerant):
        def complain(msg):
            if tolerant:
                warnings.warn(msg, RuntimeWarning, stacklevel=3)
            else:
                raise ValueError(msg)

        j0 = self.jet(0.0, 4)
        if abs(j0[0]) > 1e-12:
            complain(f"f(0) = {j0[0]:.3e}, expected 0")
        if abs(j0[1] - 1.0) > 1e-12:
            complain(f"f'(0) = {j0[1]:.6g}, expected 1")
        if abs(j0[2]) > 1e-12:
            complain(f"f''(0) = {j0[2]:.3e}, expected 0")
        if abs(j0[4]) > 1e-10:
            complain(f"f''''(0) = {j0[4]:.3e}, expected 0")
        hi = self.R if math.isfinite(self.R) else 100.0
        ts = np.linspace(0.0, hi, 402)[1:-1]
        vals = self(ts)
        if np.any(vals <= 0.0):
            bad = ts[np.argmax(vals <= 0.0)]
            complain(f"f is not positive on (0, R): f({bad:.6g}) <= 0")

    def __call__(self, t):
        """f(t); accepts scalars or numpy arrays."""
        if self.kind == "euclidean":
            return t*1.0
        if self.kind == "sphere":
            return np.sin(self.kappa*t)/self.kappa
        if self.kind == "hyperbolic":
            return np.sinh(self.kappa*t)/self.kappa
        return self.tree(t)

    def jet(self, t, k=MAX_JET):
        """Derivative array [f(t), f'(t), ..., f^(k)(t)], k <= 6."""
        if k < 0 or k > MAX_JET:
            raise ValueError(f"jet order must be in [0, {MAX_JET}]")
        m = k + 1
        if self.kind == "euclidean":
            out = np.zeros(m)
            out[0] = t
            if m > 1:
                out[1] = 1.0
            return out
        if self.kind == "sphere":
            a = self.kappa
            return np.array([a**(j - 1)*math.sin(a*t + 0.5*j*math.pi)
                             for j in range(m)])
        if self.kind == "hyperbolic":
            a = self.kappa
            s, c = math.sinh(a*t), math.cosh(a*t)
            return np.array([a**(j - 1)*(s if j % 2 == 0 else c)
                             for j in range(m)])
        return self.tree.jet(t, k)


class Manifold:
    """Dimension n >= 2 together with a warping function."""

    __slots__ = ("n", "warp")

    def __init__(self, n, warp):
        if not isinstance(n, int) or n < 2:
            raise ValueError("dimension must be an integer >= 2")
        self.n = n
        self.warp = warp


def unit_sphere_volume(m):
    """m-volume of the unit m-sphere, omega_m = 2 pi^((m+1)/2) / Gamma((m+1)/2)."""
    if m < 1 or m != int(m):
        raise ValueError("m must be an integer >= 1")
    return 2.0*math.pi**(0.5*(m + 1))/math.gamma(0.5*(m + 1))


def volume(man, r):
    """Ball volume V(r) = omega_{n-1} * integral_0^r f^{n-1}."""
    if not 0.0 < r <= man.warp.R:
        raise ValueError("r must be in (0, R]")
    n = man.n
    w = man.warp
    # scale the absolute budget so small balls still resolve relatively
    scale = max(float(w(0.5*r))**(n - 1)*r, 1e-280)
    spec = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-13*scale)
    return unit_sphere_volume(n - 1)*integrate(lambda t: w(t)**(n - 1), 0.0, r, spec)


def boundary_area(man, r):
    """Boundary (n-1)-volume S(r) = omega_{n-1} f(r)^{n-1}."""
    if not 0.0 < r <= man.warp.R:
        raise ValueError("r must be in (0, R]")
    return unit_sphere_volume(man.n - 1)*float(man.warp(r))**(man.n - 1)


def scalar_curvature(man, t):
    """Scalar curvature at radius t in (0, R).

    S = -2(n-1) f''/f + (n-1)(n-2)(1 - f'^2)/f^2. The formula is 0/0 at the
    pole; use scalar_curvature_pole there.
    """
    if not 0.0 < t < man.warp.R:
        raise ValueError("t must be in (0, R); the pole has its own routine")
    n = man.n
    f, fp, fpp = man.warp.jet(t, 2)
    return -2.0*(n - 1)*fpp/f + (n - 1)*(n - 2)*(1.0 - fp*fp)/(f*f)


def scalar_curvature_pole(man):
    """Curvature data at the pole: (S(p), S''(p)).

    S(p) = -n(n-1) f'''(0) and S''(p) = (n+2)(n-1)/6 * (f'''(0)^2 - f^(5)(0)).
    S'(p) = 0 is implied by f''''(0) = 0 and is asserted here.
    """
    n = man.n
    j = man.warp.jet(0.0, 5)
    f3, f4, f5 = j[3], j[4], j[5]
    if abs(f4) > 1e-8*(1.0 + abs(f3)):
        raise RuntimeError(f"S'(pole) != 0: f''''(0) = {f4:.3e}")
    S = -n*(n - 1)*f3
    Spp = (n + 2)*(n - 1)/6.0*(f3*f3 - f5)
    return S, Spp


def manifold_from_dict(d, tolerant=False):
    """Build a Manifold from its definition dictionary.

    Schema: {"dimension": n, "warp": {"kind": ..., "kappa": k} or
    {"kind": "custom", "expr": <prefix string>}, "R": number or "inf"}.
    R may be omitted for builtins (sphere defaults to pi/kappa, the others
    to infinity).
    """
    try:
        n = d["dimension"]
        wd = d["warp"]
        kind = wd["kind"]
    except (KeyError, TypeError) as e:
        raise ValueError(f"manifold definition missing field: {e}") from None
    R = d.get("R", "inf")
    R = math.inf if R == "inf" else float(R)
    if kind == "custom":
        if "expr" not in wd:
            raise ValueError("custom warp needs an 'expr' field")
        warp = WarpingFunction.custom(wd["expr"], R=R, tolerant=tolerant)
    elif kind in ("euclidean", "sphere", "hyperbolic"):
        kappa = float(wd.get("kappa", 1.0))
        warp = WarpingFunction(kind, kappa=None if kind == "euclidean" else kappa,
                               R=R, tolerant=tolerant)
    else:
        raise ValueError(f"unknown warp kind {kind!r}")
    return Manifold(int(n), warp)


def load_manifold_file(path, tolerant=False):
    with open(path, "r", encoding="utf-8") as fh:
        return manifold_from_dict(json.load(fh), tolerant=tolerant)
