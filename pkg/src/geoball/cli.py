"""Command line front end.

Runs eigenvalue sweeps, bound comparisons, expansion validations and the
Hadamard identity checks, and emits deterministic CSV or JSON tables.  One
row per radius; rows are computed in parallel across radii (capped by the
GEOBALL_THREADS environment variable) and always written in increasing
radius order, so repeated runs produce byte-identical files.

Exit codes: 0 success, 1 usage error, 2 numerical failure.  A failing
radius does not abort the sweep; it produces a diagnostic row with nan
values and the error message in the method column, and the process exits
with code 2 after writing the table.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .asympt_large import (compute_constants, expansion_evaluate,
                           lambda_series_exact, log_term_detector, mu)
from .asympt_small import compute_expansion, evaluate, remainder_order_fit
from .eigensolver import fd_matrix_oracle, first_eigenvalue
from .hadamard import (bounds_constant_curvature,
                       derivative_identity_residual, integrated_identity_eval)
from .manifold import Manifold, WarpingFunction, load_manifold_file

__all__ = ["RunConfig", "main", "build_config", "run_command"]

_NAN = float("nan")
_FD_NODES = 16000


class UsageError(Exception):
    """Bad flags or invalid radii; mapped to exit code 1."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved invocation: command, manifold source, radii and output."""
    command: str
    manifold_spec: str                  # shorthand like "s3" or a file path
    radii: Tuple[float, ...]
    output: Optional[str]
    format: str                         # "csv" or "json"
    tol: float
    method: str                         # eigen only: shooting | fd | both
    detect_log: bool


# ----------------------------------------------------------------------
# argument handling

class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems; the contract reserves 2 for
    # numerical failures, so route everything through UsageError instead
    def error(self, message):
        raise UsageError(message)


def _make_parser():
    p = _Parser(prog="geoball", description=__doc__.splitlines()[0],
                add_help=True)
    sub = p.add_subparsers(dest="command")
    specs = {
        "eigen": "first Dirichlet eigenvalue per radius",
        "bounds": "constant-curvature bounds around the eigenvalue",
        "expand-small": "small-radius expansion against the eigenvalue",
        "expand-large": "maximal-radius expansion against the eigenvalue",
        "verify-hadamard": "variation identity residuals per radius",
    }
    for name, help_text in specs.items():
        q = sub.add_parser(name, help=help_text)
        q.add_argument("--space", help="builtin shorthand e{n}, s{n} or h{n}")
        q.add_argument("--manifold-file", help="manifold description file")
        q.add_argument("--r", action="append", type=float,
                       help="single radius, repeatable")
        q.add_argument("--radii", help="comma separated radii")
        q.add_argument("--ladder", metavar="a,q,k",
                       help="radii a*q^i, i = 0..k-1 (factor q in (0,1))")
        q.add_argument("--ladder-to-R", dest="ladder_to_R", metavar="d0,q,k",
                       help="radii R - d0*q^i, i = 0..k-1 (compact spaces)")
        q.add_argument("--linspace", metavar="a,b,k",
                       help="k equally spaced radii from a to b")
        q.add_argument("--out", help="output path (default: stdout)")
        q.add_argument("--format", choices=("csv", "json"), default="csv")
        q.add_argument("--tol", type=float, default=1e-10,
                       help="solver tolerance override")
        if name == "eigen":
            q.add_argument("--method", choices=("shooting", "fd", "both"),
                           default="shooting")
        if name == "expand-large":
            q.add_argument("--detect-log", action="store_true",
                           help="run the log-term detector instead of a sweep")
    return p


def _parse_triplet(text, flag, count_min=1):
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError("%s expects three comma separated values" % flag)
    try:
        a, q = float(parts[0]), float(parts[1])
        k = int(parts[2])
    except ValueError:
        raise UsageError("%s: could not parse %r" % (flag, text))
    if k < count_min:
        raise UsageError("%s: count must be >= %d" % (flag, count_min))
    return a, q, k


def _resolve_manifold(args):
    if bool(args.space) == bool(args.manifold_file):
        raise UsageError("exactly one of --space or --manifold-file is required")
    if args.manifold_file:
        return load_manifold_file(args.manifold_file), args.manifold_file
    s = args.space.strip().lower()
    kind, nstr = s[:1], s[1:]
    if kind not in "esh" or not nstr.isdigit() or int(nstr) < 2:
        raise UsageError("space shorthand must be e{n}, s{n} or h{n}, n >= 2")
    n = int(nstr)
    warp = {"e": WarpingFunction.euclidean,
            "s": WarpingFunction.sphere,
            "h": WarpingFunction.hyperbolic}[kind]()
    return Manifold(n, warp), s


def _resolve_radii(args, R):
    sources = [name for name, val in (("--r", args.r), ("--radii", args.radii),
                                      ("--ladder", args.ladder),
                                      ("--ladder-to-R", args.ladder_to_R),
                                      ("--linspace", args.linspace)) if val]
    if getattr(args, "detect_log", False):
        if sources:
            raise UsageError("--detect-log does not take radii")
        return ()
    if len(sources) != 1:
        raise UsageError("exactly one radii source is required "
                         "(--r, --radii, --ladder, --ladder-to-R, --linspace)")
    if args.r:
        radii = list(args.r)
    elif args.radii:
        try:
            radii = [float(x) for x in args.radii.split(",") if x.strip()]
        except ValueError:
            raise UsageError("--radii: could not parse %r" % args.radii)
    elif args.ladder:
        a, q, k = _parse_triplet(args.ladder, "--ladder")
        if not (a > 0.0 and 0.0 < q < 1.0):
            raise UsageError("--ladder needs a > 0 and factor q in (0,1)")
        radii = [a * q ** i for i in range(k)]
    elif args.ladder_to_R:
        d0, q, k = _parse_triplet(args.ladder_to_R, "--ladder-to-R")
        if not math.isfinite(R):
            raise UsageError("--ladder-to-R requires a compact space")
        if not (d0 > 0.0 and 0.0 < q < 1.0):
            raise UsageError("--ladder-to-R needs d0 > 0 and factor q in (0,1)")
        radii = [R - d0 * q ** i for i in range(k)]
    else:
        a, b, k = _parse_triplet(args.linspace, "--linspace", count_min=2)
        radii = [a + (b - a) * i / (k - 1) for i in range(k)]
    if not radii:
        raise UsageError("empty radii list")
    for r in radii:
        if not 0.0 < r < R:
            raise UsageError("radius %g outside (0, %g)" % (r, R))
    return tuple(sorted(radii))


def build_config(argv):
    args = _make_parser().parse_args(argv)
    if not args.command:
        raise UsageError("a command is required "
                         "(eigen, bounds, expand-small, expand-large, "
                         "verify-hadamard)")
    man, spec = _resolve_manifold(args)
    radii = _resolve_radii(args, man.warp.R)
    cfg = RunConfig(command=args.command, manifold_spec=spec, radii=radii,
                    output=args.out, format=args.format, tol=args.tol,
                    method=getattr(args, "method", "shooting"),
                    detect_log=getattr(args, "detect_log", False))
    return cfg, man


# ----------------------------------------------------------------------
# row computations

def _thread_count(n_jobs):
    cap = os.environ.get("GEOBALL_THREADS")
    workers = min(4, os.cpu_count() or 1, max(1, n_jobs))
    if cap is not None:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise UsageError("GEOBALL_THREADS must be an integer")
    return workers


def _map_rows(fn, radii):
    with ThreadPoolExecutor(max_workers=_thread_count(len(radii))) as ex:
        return list(ex.map(fn, radii))


def _eigen_rows(cfg, man):
    methods = {"shooting": ("shooting",), "fd": ("fd16000",),
               "both": ("shooting", "fd16000")}[cfg.method]

    def one(r):
        rows = []
        for meth in methods:
            try:
                if meth == "shooting":
                    res = first_eigenvalue(man, r, tol=cfg.tol)
                    rows.append((r, res.lam, res.residual, meth))
                else:
                    rows.append((r, fd_matrix_oracle(man, r, _FD_NODES),
                                 _NAN, meth))
            except Exception as e:   # diagnostic row, sweep continues
                rows.append((r, _NAN, _NAN, "error: %s" % e))
        return rows

    rows = [row for group in _map_rows(one, cfg.radii) for row in group]
    return ["r", "lambda", "residual", "method"], rows


def _bounds_rows(cfg, man):
    kind = man.warp.kind
    if kind not in ("sphere", "hyperbolic") or man.warp.kappa != 1.0:
        raise UsageError("bounds covers the curvature-1 closed forms; "
                         "use s{n} or h{n}")

    def one(r):
        try:
            lam = first_eigenvalue(man, r, tol=cfg.tol).lam
            lo, up = bounds_constant_curvature(kind, man.n, r)
            return (r, lam, lo, up, lam - lo, up - lam,
                    lo <= lam + 1e-12, lam <= up + 1e-8, "")
        except Exception as e:
            return (r, _NAN, _NAN, _NAN, _NAN, _NAN, False, False,
                    "error: %s" % e)

    rows = _map_rows(one, cfg.radii)
    return ["r", "lambda", "lower", "upper", "lower_gap", "upper_gap",
            "lower_ok", "upper_ok", "note"], rows


def _expand_small_rows(cfg, man):
    exp = compute_expansion(man.n)
    desc = sorted(set(cfg.radii), reverse=True)
    fitted = _NAN
    if len(desc) >= 5 and desc[0] <= 0.5:
        try:
            fitted = remainder_order_fit(man, desc, tol=cfg.tol).slope
        except Exception:
            fitted = _NAN

    def one(r):
        try:
            lam = first_eigenvalue(man, r, tol=cfg.tol).lam
            val = evaluate(exp, man, r)
            return (r, lam, val, lam - val, fitted, exp.alpha1, exp.alpha2, "")
        except Exception as e:
            return (r, _NAN, _NAN, _NAN, fitted, exp.alpha1, exp.alpha2,
                    "error: %s" % e)

    rows = _map_rows(one, cfg.radii)
    return ["r", "lambda", "expansion", "gap", "fitted_order",
            "alpha1", "alpha2", "note"], rows


def _detector_rows(cfg, man):
    rep = log_term_detector(man)[man.n]
    row = (rep.n, rep.kind, rep.fitted_p, rep.expected_p,
           rep.residual_change, rep.log_product, rep.log_product_target)
    return ["n", "kind", "fitted_p", "expected_p", "residual_change",
            "log_product", "log_product_target"], [row]


def _expand_large_rows(cfg, man):
    if not man.warp.compact:
        raise ValueError("expand-large requires a compact manifold")
    if cfg.detect_log:
        return _detector_rows(cfg, man)
    consts = compute_constants(man)
    R = man.warp.R
    n = man.n
    # the logarithmic gauge in dimension 2 makes the dense matrix the
    # reference there; elsewhere shooting keeps full precision near R
    meth = "fd16000" if n == 2 else "shooting"

    def one(r):
        try:
            if n == 2:
                lam = fd_matrix_oracle(man, r, _FD_NODES)
            else:
                lam = first_eigenvalue(man, r, tol=cfg.tol).lam
            closed = [expansion_evaluate(consts, r, terms=m) for m in (1, 2, 3)]
            if r > 0.5 * R:
                vp = sum(lambda_series_exact(man, r, order=3))
            else:
                vp = _NAN                     # outside the asymptotic regime
            v = R - r
            return (r, v, mu(n, R, r), lam, meth,
                    closed[0], closed[1], closed[2], vp,
                    lam - closed[0], lam - closed[1], lam - closed[2],
                    lam * math.log(v))
        except Exception as e:
            return (r, R - r, _NAN, _NAN, "error: %s" % e,
                    _NAN, _NAN, _NAN, _NAN, _NAN, _NAN, _NAN, _NAN)

    rows = _map_rows(one, cfg.radii)
    # dyadic ladders admit order fits of the truncation gaps
    fits = [_NAN, _NAN, _NAN]
    good = [row for row in rows if not row[4].startswith("error")]
    if len(good) >= 4:
        lv = np.log([row[1] for row in good])
        for m in (1, 2, 3):
            gaps = np.abs([row[8 + m] for row in good])
            if np.all(gaps > 0.0) and np.all(np.isfinite(gaps)):
                fits[m - 1] = float(np.polyfit(lv, np.log(gaps), 1)[0])
    rows = [row + tuple(fits) for row in rows]
    return ["r", "v", "mu", "lambda", "method", "closed1", "closed2",
            "closed3", "value_path", "gap1", "gap2", "gap3", "log_product",
            "fitted_order1", "fitted_order2", "fitted_order3"], rows


def _hadamard_rows(cfg, man):
    def one(r):
        try:
            lam = first_eigenvalue(man, r, tol=cfg.tol).lam
            dres = derivative_identity_residual(man, r, tol=cfg.tol)
            ilam = integrated_identity_eval(man, r, tol=cfg.tol)
            return (r, lam, dres, ilam, abs(ilam - lam) / abs(lam), "")
        except Exception as e:
            return (r, _NAN, _NAN, _NAN, _NAN, "error: %s" % e)

    rows = _map_rows(one, cfg.radii)
    return ["r", "lambda", "derivative_residual", "integrated_lambda",
            "integrated_rel_err", "note"], rows


_RUNNERS = {
    "eigen": _eigen_rows,
    "bounds": _bounds_rows,
    "expand-small": _expand_small_rows,
    "expand-large": _expand_large_rows,
    "verify-hadamard": _hadamard_rows,
}


def run_command(cfg, man):
    return _RUNNERS[cfg.command](cfg, man)


# ----------------------------------------------------------------------
# serialization

def _csv_cell(x):
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else format(x, ".17g")
    return str(x)


def _render(columns, rows, fmt):
    if fmt == "csv":
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_csv_cell(x) for x in row))
        return "\n".join(lines) + "\n"
    data = {}
    for j, name in enumerate(columns):
        col = []
        for row in rows:
            x = row[j]
            if isinstance(x, float) and math.isnan(x):
                x = None
            col.append(x)
        data[name] = col
    return json.dumps(data, indent=1) + "\n"


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _has_failures(rows):
    return any(isinstance(x, str) and x.startswith("error:")
               for row in rows for x in row)


def main(argv=None):
    try:
        cfg, man = build_config(sys.argv[1:] if argv is None else list(argv))
        columns, rows = run_command(cfg, man)
    except UsageError as e:
        print("usage error: %s" % e, file=sys.stderr)
        return 1
    except Exception as e:
        print("numerical failure: %s" % e, file=sys.stderr)
        return 2
    _emit(_render(columns, rows, cfg.format), cfg.output)
    return 2 if _has_failures(rows) else 0


if __name__ == "__main__":
    sys.exit(main())
