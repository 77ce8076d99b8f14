"""
Command-line front end.

Every command prints one JSON report (``"schema": 1``) or, with
``--format text``, aligned ``key  value`` lines.  Failures print a one-line
JSON error object on stderr and exit with 2 (bad input) or 3 (numerical
failure).  Negative leading values must be attached with ``=``, e.g.
``--theta=-1,-2,0``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from .approx import complex_bingham_const, log_spa1
from .exceptions import BinghamError, InputError, NumericalError
from .hg import OdeControl, Trajectory, hg_norm_const
from .mle import SuffStats, fit_continuous, fit_discrete, sufficient_stats
from .model import canonicalize, log_uniform_mass
from .oracles import contour_norm_const, mc_norm_const
from .series import DEFAULT_MAX_TERMS, series_log_norm_const, series_order
from .tables import TABLES, format_table

SCHEMA = 1
SCALES = ("normalized", "raw", "log")
METHODS = ("hg", "series", "mc", "contour")
SPA_DISCLAIMER = ("first-order saddle-point approximation; typical relative error "
                  "is a few percent, use 'const' for an exact value")
EXIT_INPUT, EXIT_NUMERICAL = 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _vector(text) -> list:
    """Comma-separated numbers; exact fractions such as ``1/15`` are accepted."""
    try:
        vals = [float(Fraction(t)) for t in str(text).replace(" ", "").split(",") if t != ""]
    except (ValueError, ZeroDivisionError):
        raise InputError(f"cannot parse numeric list {text!r}") from None
    if not vals:
        raise InputError("empty numeric list")
    return vals


def _vector_arg(text) -> list:
    try:
        return _vector(text)
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _count_arg(text) -> int:
    try:
        return _count(text)
    except InputError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _count(text) -> int:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise InputError(f"cannot parse count {text!r}") from None
    if not math.isfinite(v) or v < 1 or v != int(v):
        raise InputError(f"count must be a positive integer, got {text!r}")
    return int(v)


def _positive(name, v):
    if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
        raise InputError(f"{name} must be a positive finite number")
    return float(v)


def _threads() -> int:
    raw = os.environ.get("BINGHAM_HGM_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise InputError("BINGHAM_HGM_THREADS must be an integer") from None
    return max(1, n)


def _scaled(log_norm: float, p: int, scale: str) -> float:
    if scale == "log":
        return log_norm
    if scale == "raw":
        return math.exp(log_norm + log_uniform_mass(p))
    return math.exp(log_norm)


# ---------------------------------------------------------------- const / grad

def _const_job(job: dict, trajectory: Trajectory | None = None) -> dict:
    """Evaluate one normalised job dict; the result embeds the job for re-feeding."""
    theta = np.asarray(job["theta"], dtype=float)
    method, scale, eps = job["method"], job["scale"], job["eps"]
    p = theta.size
    rep = {"schema": SCHEMA, "command": "const", **job}
    diag = {}
    if method == "hg":
        r = hg_norm_const(theta, eps=eps, tie_tol=job["tie_tol"], trajectory=trajectory)
        log_norm = r.log_c
        diag = {"path": r.method, "series_terms": r.n_terms, "ode_steps": r.ode_steps,
                "seed_phi": None if r.seed is None else np.asarray(r.seed).tolist(),
                "multiplicities": r.theta.d.tolist()}
    elif method == "series":
        t = canonicalize(theta, job["tie_tol"])
        log_norm, n_terms = series_log_norm_const(t, eps, DEFAULT_MAX_TERMS)
        diag = {"series_terms": n_terms, "multiplicities": t.d.tolist()}
    elif method == "mc":
        est = mc_norm_const(theta, n=job["n"], seed=job["seed"])
        log_norm = math.log(est.mean)
        factor = {"normalized": 1.0, "raw": math.exp(log_uniform_mass(p))}.get(scale)
        diag = {"stderr": None if factor is None else est.stderr * factor,
                "stderr_normalized": est.stderr, "n": est.n, "seed": est.seed}
    elif method == "contour":
        cv = contour_norm_const(theta, full=True)
        log_norm = math.log(cv.value)
        diag = {"imag": cv.imag, "abserr": cv.abserr}
    else:
        raise InputError(f"unknown method {method!r}")
    rep.update(value=_scaled(log_norm, p, scale), log_normalized=log_norm,
               log_raw=log_norm + log_uniform_mass(p), diagnostics=diag)
    return rep


def _normalize_job(raw: dict, defaults: dict) -> dict:
    if not isinstance(raw, dict):
        raise InputError("each job must be a JSON object")
    if "theta" not in raw:
        raise InputError("job is missing 'theta'")
    job = dict(defaults)
    for k in ("eps", "method", "scale", "n", "seed", "tie_tol"):
        if k in raw and raw[k] is not None:
            job[k] = raw[k]
    theta = raw["theta"]
    if isinstance(theta, str):
        theta = _vector(theta)
    try:
        job["theta"] = [float(v) for v in theta]
    except (TypeError, ValueError):
        raise InputError("'theta' must be a list of numbers") from None
    if job["method"] not in METHODS:
        raise InputError(f"method must be one of {METHODS}")
    if job["scale"] not in SCALES:
        raise InputError(f"scale must be one of {SCALES}")
    job["eps"] = _positive("eps", job["eps"])
    job["n"] = _count(job["n"])
    job["seed"] = int(job["seed"])
    tt = job["tie_tol"]
    if not (isinstance(tt, (int, float)) and tt >= 0):
        raise InputError("tie_tol must be non-negative")
    job["tie_tol"] = float(tt)
    return job


def _safe_const(job):
    try:
        return _const_job(job)
    except BinghamError as exc:
        return _error_object(exc)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc.msg}") from None


def _write_trajectory(path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([repr(float(v)) for v in r])
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _job_defaults(args) -> dict:
    return {"eps": args.eps, "method": args.method, "scale": args.scale,
            "n": args.n, "seed": args.seed, "tie_tol": args.tie_tol}


def cmd_const(args) -> dict:
    defaults = _job_defaults(args)
    sources = [s for s in (args.theta, args.json, args.batch) if s is not None]
    if len(sources) != 1:
        raise InputError("give exactly one of --theta, --json, --batch")
    if args.batch is not None:
        data = _load_json(args.batch)
        if isinstance(data, dict) and "jobs" in data:
            data = data["jobs"]
        if not isinstance(data, list):
            raise InputError("batch file must hold a JSON list of jobs")
        jobs = [_normalize_job(j if isinstance(j, dict) else {"theta": j}, defaults)
                for j in data]
        workers = min(_threads(), len(jobs)) or 1
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as ex:
                results = list(ex.map(_safe_const, jobs))
        else:
            results = [_safe_const(j) for j in jobs]
        return {"schema": SCHEMA, "command": "const", "batch": True, "results": results}

    raw = _load_json(args.json) if args.json is not None else {"theta": args.theta}
    job = _normalize_job(raw, defaults)
    traj = None
    if args.trajectory:
        if job["method"] != "hg":
            raise InputError("--trajectory needs --method hg")
        traj = Trajectory()
    rep = _const_job(job, traj)
    if traj is not None:
        q = len(rep["diagnostics"]["multiplicities"])
        if rep["diagnostics"]["path"] == "hg-log":
            header = ["tau"] + [f"eta{i + 1}" for i in range(q)] + ["log_c"]
        else:
            header = ["tau"] + [f"g{i + 1}" for i in range(q)]
        _write_trajectory(args.trajectory, header, traj.as_array() if traj.tau else [])
        rep["diagnostics"]["trajectory_file"] = args.trajectory
    return rep


def cmd_grad(args) -> dict:
    theta = np.asarray(args.theta, dtype=float)
    r = hg_norm_const(theta, eps=args.eps, tie_tol=args.tie_tol)
    p = theta.size
    value = _scaled(r.log_c, p, args.scale)
    eta = r.eta
    grad = eta if args.scale == "log" else value * eta
    return {"schema": SCHEMA, "command": "grad", "theta": theta.tolist(), "eps": args.eps,
            "scale": args.scale, "value": value, "gradient": grad.tolist(),
            "eta": eta.tolist(), "log_normalized": r.log_c,
            "diagnostics": {"path": r.method, "series_terms": r.n_terms,
                            "ode_steps": r.ode_steps}}


# ------------------------------------------------------------------------ fit

def _read_csv(path, header: bool) -> np.ndarray:
    try:
        x = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    return x


def cmd_fit(args) -> dict:
    if (args.data is None) == (args.stats is None):
        raise InputError("give exactly one of --data or --stats")
    if args.data is not None:
        stats = sufficient_stats(_read_csv(args.data, args.header), args.norm_tol)
    else:
        s = np.asarray(args.stats, dtype=float)
        if np.all(s > 0) and abs(s.sum() - 1) <= 1e-3:
            s = s / s.sum()  # tolerate statistics rounded for the command line
        stats = SuffStats(s, args.n)
    ctl = OdeControl(rel_tol=args.ode_tol, abs_tol=args.ode_tol)
    if args.mode == "discrete":
        res = fit_discrete(stats, grad_tol=args.grad_tol, ctl=ctl, max_iter=args.max_iter,
                           tie_tol=args.tie_tol)
    else:
        res = fit_continuous(stats, epsilon=args.epsilon, polish_steps=args.polish_steps,
                             ctl=ctl, grad_tol=args.grad_tol, tie_tol=args.tie_tol)
    if args.trajectory:
        q = res.theta_hat.q
        header = (["tau"] + [f"phi{i + 1}" for i in range(q)]
                  + [f"eta_block{i + 1}" for i in range(q)])
        rows = [np.concatenate([[t], ph, et]) for t, ph, et in res.trajectory]
        _write_trajectory(args.trajectory, header, rows)
    rep = {
        "schema": SCHEMA, "command": "fit", "mode": res.mode,
        "s": stats.s.tolist(), "n": stats.n,
        "theta_hat": res.theta.tolist(), "eta_hat": np.asarray(res.eta_hat).tolist(),
        "residual": res.residual, "loglik": res.loglik, "converged": res.converged,
        "iterations": [{"phi": np.asarray(ph).tolist(), "residual": float(r)}
                       for ph, r in res.iterations],
        "flow_steps": max(len(res.trajectory) - 1, 0),
    }
    if not res.converged:
        raise NumericalError(
            f"fit did not reach grad_tol={args.grad_tol:g} (residual {res.residual:.3g})")
    return rep


# ------------------------------------------------------------ spa / cbingham

def cmd_spa(args) -> dict:
    theta = np.asarray(args.theta, dtype=float)
    lr = log_spa1(theta)
    p = theta.size
    ln = lr - log_uniform_mass(p)
    return {"schema": SCHEMA, "command": "spa", "theta": theta.tolist(), "scale": args.scale,
            "value": _scaled(ln, p, args.scale), "log_raw": lr, "order": 1,
            "approximate": True, "disclaimer": SPA_DISCLAIMER}


def cmd_cbingham(args) -> dict:
    phi = np.asarray(args.phi, dtype=float)
    v = complex_bingham_const(phi)
    return {"schema": SCHEMA, "command": "cbingham", "phi": phi.tolist(), "value": v,
            "note": "raw complex Bingham constant; equals the real constant with every "
                    "value repeated twice"}


# --------------------------------------------------------------------- verify

def cmd_verify(args) -> dict:
    theta = np.asarray(args.theta, dtype=float)
    p = theta.size
    ref = hg_norm_const(theta, eps=1e-10)
    hv = ref.value
    checks = []

    def add(name, value, tol, extra=None, kind="relative"):
        rel = abs(value - hv) / hv
        entry = {"method": name, "value": value, "rel_diff": rel, "tol": tol, "kind": kind}
        if extra:
            entry.update(extra)
        if kind == "sigma":
            entry["ok"] = abs(value - hv) <= tol * extra["stderr"]
        else:
            entry["ok"] = rel <= tol
        checks.append(entry)

    t = canonicalize(theta)
    try:
        series_order(t, 1e-10, DEFAULT_MAX_TERMS)
    except NumericalError:
        checks.append({"method": "series", "skipped": "outside series budget"})
    else:
        lv, _ = series_log_norm_const(t, 1e-10)
        add("series", math.exp(lv), 1e-6)
    if p >= 3:
        add("contour", contour_norm_const(theta), 1e-6)
    else:
        checks.append({"method": "contour", "skipped": "needs p >= 3"})
    est = mc_norm_const(theta, n=args.n, seed=args.seed)
    add("mc", est.mean, 4.0, {"stderr": est.stderr}, kind="sigma")
    add("spa1", math.exp(log_spa1(theta) - log_uniform_mass(p)), 0.10)
    ok = all(c.get("ok", True) for c in checks)
    rep = {"schema": SCHEMA, "command": "verify", "theta": theta.tolist(), "hg": hv,
           "hg_path": ref.method, "checks": checks, "ok": ok}
    if not ok:
        bad = [c["method"] for c in checks if c.get("ok") is False]
        raise _VerifyFailed(rep, f"disagreement for {', '.join(bad)}")
    return rep


class _VerifyFailed(NumericalError):
    def __init__(self, report, message):
        super().__init__(message)
        self.report = report


def cmd_table(args) -> dict:
    rows = TABLES[args.name]()
    return {"schema": SCHEMA, "command": "table", "name": args.name, "rows": rows}


# --------------------------------------------------------------------- output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _text(rep: dict) -> str:
    if rep.get("command") == "table":
        return format_table(rep["name"], rep["rows"])
    lines = []
    width = max(len(k) for k in rep)

    def fmt(v):
        if isinstance(v, float):
            return f"{v:.10g}"
        if isinstance(v, list) and all(isinstance(x, (int, float)) for x in v):
            return " ".join(fmt(x) for x in v)
        if isinstance(v, (dict, list)):
            return json.dumps(_jsonable(v))
        return str(v)

    for k, v in rep.items():
        if k in ("schema", "iterations", "results", "checks"):
            continue
        lines.append(f"{k:<{width}}  {fmt(v)}")
    for c in rep.get("checks", []):
        lines.append("  ".join(f"{k}={fmt(v)}" for k, v in c.items()))
    for r in rep.get("results", []):
        lines.append(json.dumps(_jsonable(r)))
    return "\n".join(lines)


def _error_object(exc: BaseException) -> dict:
    code = EXIT_NUMERICAL if isinstance(exc, NumericalError) else EXIT_INPUT
    return {"schema": SCHEMA, "error": {"type": type(exc).__name__.lstrip("_"),
                                        "code": code, "message": str(exc)}}


def _emit(rep: dict, fmt: str, stream=None):
    stream = stream or sys.stdout
    if fmt == "text":
        print(_text(rep), file=stream)
    else:
        print(json.dumps(_jsonable(rep)), file=stream)


# --------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bingham-hgm",
                 description="Bingham normalising constant, derivatives and MLE by the "
                             "holonomic gradient method.")
    ap.add_argument("--version", action="version", version=__version__)
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    scale = _Parser(add_help=False)
    g = scale.add_mutually_exclusive_group()
    g.add_argument("--normalized", dest="scale", action="store_const", const="normalized",
                   help="C(theta)/C(0) (default)")
    g.add_argument("--raw", dest="scale", action="store_const", const="raw",
                   help="C(theta) itself")
    g.add_argument("--log", dest="scale", action="store_const", const="log",
                   help="log(C(theta)/C(0))")
    scale.set_defaults(scale=None)

    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("const", parents=[common, scale], help="normalising constant")
    c.add_argument("--theta", type=_vector_arg)
    c.add_argument("--json", metavar="FILE", help="job file, e.g. a previous const report")
    c.add_argument("--batch", metavar="FILE", help="JSON list of jobs")
    c.add_argument("--eps", type=float, default=1e-10)
    c.add_argument("--method", choices=METHODS, default="hg")
    c.add_argument("--n", type=_count_arg, default=1_000_000, help="Monte Carlo sample size")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tie-tol", type=float, default=0.0)
    c.add_argument("--trajectory", metavar="CSV", help="dump the HG trajectory")
    c.set_defaults(func=cmd_const)

    gr = sub.add_parser("grad", parents=[common, scale], help="constant and its gradient")
    gr.add_argument("--theta", type=_vector_arg, required=True)
    gr.add_argument("--eps", type=float, default=1e-10)
    gr.add_argument("--tie-tol", type=float, default=0.0)
    gr.set_defaults(func=cmd_grad)

    f = sub.add_parser("fit", parents=[common], help="maximum likelihood estimate")
    f.add_argument("--data", metavar="CSV", help="one unit vector per row")
    f.add_argument("--header", action="store_true", help="CSV has a header row")
    f.add_argument("--norm-tol", type=float, default=1e-8)
    f.add_argument("--stats", type=_vector_arg, help="sufficient statistics s")
    f.add_argument("--n", type=_count_arg, default=1, help="sample size for --stats")
    f.add_argument("--mode", choices=("discrete", "continuous"), default="continuous")
    f.add_argument("--grad-tol", type=float, default=1e-8)
    f.add_argument("--epsilon", type=float, default=1e-2, help="continuous flow end 1-epsilon")
    f.add_argument("--polish-steps", type=int, default=3)
    f.add_argument("--max-iter", type=int, default=100)
    f.add_argument("--ode-tol", type=float, default=1e-10)
    f.add_argument("--tie-tol", type=float, default=0.0)
    f.add_argument("--trajectory", metavar="CSV", help="dump the continuous flow")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("spa", parents=[common, scale], help="first-order saddle point")
    s.add_argument("--theta", type=_vector_arg, required=True)
    s.set_defaults(func=cmd_spa)

    cb = sub.add_parser("cbingham", parents=[common], help="complex Bingham closed form")
    cb.add_argument("--phi", type=_vector_arg, required=True)
    cb.set_defaults(func=cmd_cbingham)

    v = sub.add_parser("verify", parents=[common], help="cross-check HG against oracles")
    v.add_argument("--theta", type=_vector_arg, required=True)
    v.add_argument("--n", type=_count_arg, default=1_000_000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("table", parents=[common], help="recompute a benchmark table")
    t.add_argument("name", choices=sorted(TABLES))
    t.set_defaults(func=cmd_table)
    return ap


def main(argv=None) -> int:
    fmt = "json"
    try:
        args = build_parser().parse_args(argv)
        fmt = args.format
        for name in ("eps", "grad_tol", "ode_tol", "norm_tol"):
            if getattr(args, name, None) is not None:
                _positive(name.replace("_", "-"), getattr(args, name))
        if getattr(args, "tie_tol", 0.0) < 0:
            raise InputError("tie-tol must be non-negative")
        if getattr(args, "scale", "unset") is None:
            args.scale = "raw" if args.command == "spa" else "normalized"
        rep = args.func(args)
    except _VerifyFailed as exc:
        _emit(exc.report, fmt)
        print(json.dumps(_error_object(exc)), file=sys.stderr)
        return EXIT_NUMERICAL
    except BinghamError as exc:
        print(json.dumps(_error_object(exc)), file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(exc, NumericalError) else EXIT_INPUT
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        err = NumericalError(str(exc)) if isinstance(exc, (ArithmeticError,
                                                          np.linalg.LinAlgError)) \
            else InputError(str(exc))
        print(json.dumps(_error_object(err)), file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(err, NumericalError) else EXIT_INPUT
    _emit(rep, fmt)
    return 0


if __name__ == "__main__":
    sys.exit(main())
