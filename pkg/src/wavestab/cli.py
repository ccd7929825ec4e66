"""Command-line front end: ``wavestab <subcommand> --config cfg.json --out path``.

Exit codes: 0 success, 1 configuration or usage error, 2 diagnostic (the
computation itself reported a typed failure, e.g. no saddle in the portrait).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys as _sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Iterable

import numpy as np

from . import asymlib, asymptotics, constant_states
from .errors import ConfigError, UsageError, WavestabError
from .model import Params, Poly, SystemSpec
from .portrait import classify_portrait, orbit_roots
from .quadrature import action_gradient, boussinesq_momentum, momentum_derivatives
from .stability import _threads, stability_verdict

EXIT_OK, EXIT_CONFIG, EXIT_DIAGNOSTIC = 0, 1, 2


# ---------------------------------------------------------------- formatting


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o).__name__)


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def csv_line(fields: Iterable) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([fmt(f) for f in fields])
    return buf.getvalue()


# ---------------------------------------------------------------- config


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _need(cfg: dict, key: str, kind=None):
    if key not in cfg:
        raise ConfigError(f"missing key {key!r}")
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"key {key!r} has the wrong type")
    return val


def _real(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not np.isfinite(x):
        raise ConfigError(f"{what} must be a finite number")
    return float(x)


def _lam(x, N: int, what: str = "lambda") -> tuple:
    if isinstance(x, (int, float)) and not isinstance(x, bool) and N == 1:
        x = [x]
    if not isinstance(x, list) or len(x) != N:
        raise ConfigError(f"{what} must be a list of length {N}")
    return tuple(_real(v, what) for v in x)


def system_from(cfg: dict) -> SystemSpec:
    return SystemSpec.from_json(_need(cfg, "system", dict))


def _point(p: Any, N: int) -> Params:
    if not isinstance(p, dict):
        raise ConfigError("each point must be an object with mu, lambda, c")
    return Params(_real(_need(p, "mu"), "mu"), _lam(_need(p, "lambda"), N), _real(_need(p, "c"), "c"))


def _ladder(spec: Any) -> np.ndarray:
    if not isinstance(spec, dict):
        raise ConfigError("ladder must be an object")
    q = spec.get("quantity")
    if q not in ("mu", "rho", "delta"):
        raise ConfigError("ladder quantity must be mu, rho or delta")
    decades = spec.get("decades")
    ppd = spec.get("points_per_decade")
    decades = _real(decades, "ladder decades") if decades is not None else 0.0
    ppd = _real(ppd, "ladder points_per_decade") if ppd is not None else 0.0
    if decades <= 0 or ppd <= 0:
        raise ConfigError("ladder needs positive decades and points_per_decade")
    start = _real(spec.get("start", 1e-2), "ladder start")
    # points_per_decade may be fractional: log2(10) gives a halving ladder
    n = int(round(decades * ppd))
    return start * 10.0 ** (-np.arange(n + 1) / ppd)


# ---------------------------------------------------------------- stability rows


def stability_header(N: int) -> list[str]:
    lam = [f"lambda{i + 1}" for i in range(N)]
    return ["mu", *lam, "c", "theta", "period", "d2mu", "det", "signature", "verdict", "error"]


def stability_row(sys: SystemSpec, p: Params) -> list:
    try:
        rep = stability_verdict(sys, p)
        return [p.mu, *p.lam, p.c, rep.theta, rep.grad[0], rep.d2mu, rep.det, rep.signature, rep.verdict, ""]
    except WavestabError as exc:
        return [p.mu, *p.lam, p.c, None, None, None, None, None, None, exc.reason]


def _sweep_worker(args):
    sys_json, p = args
    return stability_row(SystemSpec.from_json(sys_json), p)


def _worker_init():
    # grid-level parallelism only; no nested pools inside workers
    os.environ["WAVESTAB_THREADS"] = "1"


# ---------------------------------------------------------------- subcommands


def cmd_portrait(cfg: dict, out: str) -> int:
    sys = system_from(cfg)
    c = _real(_need(cfg, "c"), "c")
    lam = _lam(_need(cfg, "lambda"), sys.N)
    try:
        pt = classify_portrait(sys, c, lam)
    except WavestabError as exc:
        write_json(out, {"ok": False, "reason": exc.reason, "message": str(exc)})
        return EXIT_DIAGNOSTIC
    write_json(out, {"ok": True, **pt.as_dict()})
    return EXIT_OK


def cmd_stability(cfg: dict, out: str) -> int:
    sys = system_from(cfg)
    pts = _need(cfg, "points", list)
    if not pts:
        raise ConfigError("points must be non-empty")
    params = [_point(p, sys.N) for p in pts]
    with open(out, "w") as fh:
        fh.write(csv_line(stability_header(sys.N)))
        for p in params:
            fh.write(csv_line(stability_row(sys, p)))
    return EXIT_OK


def _grid(cfg: dict, sys: SystemSpec) -> list[Params]:
    grid = _need(cfg, "grid", dict)
    cs = [_real(c, "c") for c in _need(grid, "c", list)]
    lams = [_lam(l, sys.N) for l in _need(grid, "lambda", list)]
    mus = grid.get("mu")
    fracs = grid.get("mu_fraction")
    if (mus is None) == (fracs is None):
        raise ConfigError("grid needs exactly one of mu or mu_fraction")
    if not cs or not lams or not (mus or fracs):
        raise ConfigError("sweep grid must be non-empty")
    points = []
    for lam in lams:
        for c in cs:
            if mus is not None:
                points.extend(Params(_real(m, "mu"), lam, c) for m in mus)
                continue
            try:
                pt = classify_portrait(sys, c, lam)
                lo, hi = pt.mu_0, pt.mu_s
            except WavestabError:
                lo = hi = None
            for t in fracs:
                t = _real(t, "mu_fraction")
                if not 0.0 < t < 1.0:
                    raise ConfigError("mu_fraction entries must lie in (0, 1)")
                # an invalid portrait still yields a row, carrying the error
                mu = lo + t * (hi - lo) if lo is not None else float("nan")
                points.append(Params(mu, lam, c))
    return points


def _row_key(p: Params) -> tuple:
    return tuple(fmt(x) for x in (p.mu, *p.lam, p.c))


def cmd_sweep(cfg: dict, out: str) -> int:
    sys = system_from(cfg)
    points = _grid(cfg, sys)
    header = stability_header(sys.N)
    done = set()
    if os.path.exists(out) and os.path.getsize(out) > 0:
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows[0] != header:
            raise ConfigError("existing output has a different header")
        done = {tuple(r[: sys.N + 2]) for r in rows[1:] if len(r) == len(header)}
    else:
        with open(out, "w") as fh:
            fh.write(csv_line(header))
    todo = [p for p in points if _row_key(p) not in done]
    nan_rows = {i for i, p in enumerate(todo) if not np.isfinite(p.mu)}

    def emit(fh, row):
        fh.write(csv_line(row))
        fh.flush()
        os.fsync(fh.fileno())

    workers = _threads()
    with open(out, "a") as fh:
        jobs = [(sys.to_json(), p) for i, p in enumerate(todo) if i not in nan_rows]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(workers, initializer=_worker_init) as ex:
                results = iter(ex.map(_sweep_worker, jobs, chunksize=1))
                for i, p in enumerate(todo):
                    emit(fh, _portrait_failure_row(sys, p) if i in nan_rows else next(results))
        else:
            for i, p in enumerate(todo):
                emit(fh, _portrait_failure_row(sys, p) if i in nan_rows else stability_row(sys, p))
    return EXIT_OK


def _portrait_failure_row(sys: SystemSpec, p: Params) -> list:
    try:
        classify_portrait(sys, p.c, p.lam)
        reason = "MuOutOfRange"
    except WavestabError as exc:
        reason = exc.reason
    return [p.mu, *p.lam, p.c, None, None, None, None, None, None, reason]


ASYMPT_COLUMNS = ["check", "x", "numeric", "predicted", "residual", "ratio", "log10_x", "log10_residual"]


def _table(check: str, xs, num, pred, res) -> list[list]:
    rows, prev = [], None
    for x, n, p, r in zip(xs, num, pred, res):
        ratio = r / prev if prev not in (None, 0.0) else None
        rows.append([check, x, n, p, r, ratio, np.log10(x), np.log10(r) if r > 0 else None])
        prev = r
    return rows


def _asympt_check(name: str, sys: SystemSpec, c: float, lam, pt, ladder: np.ndarray, quantity: str):
    rows_x, num, pred, res = [], [], [], []
    if name in ("harmonic_hessian", "harmonic_period"):
        frame = asymptotics.harmonic_hessian_prediction(sys, c, lam, pt)
        for x in ladder:
            if quantity == "delta":
                mu = asymptotics.mu_for_delta(sys, c, lam, pt, x)
            elif quantity == "mu":
                mu = pt.mu_0 + x
            else:
                raise ConfigError(f"{name} needs a mu or delta ladder")
            p = Params(mu, lam, c)
            if name == "harmonic_hessian":
                r = asymptotics.compare_hessian(sys, p, "harmonic", pt)
                n, q, e = np.linalg.norm(r["H_num"], 2), np.linalg.norm(r["H_pred"], 2), r["residual"]
            else:
                n = action_gradient(sys, p, portrait=pt).period
                q, e = frame.Xi0, abs(n - frame.Xi0)
            rows_x.append(x), num.append(n), pred.append(q), res.append(e)
    elif name in ("soliton_hessian", "soliton_action"):
        M2 = None
        if name == "soliton_hessian":
            M2 = momentum_derivatives(sys, c, asymptotics.endstate(sys, c, lam, pt.v_s), "finite_difference").d2M
        a_s = asymptotics.limit_coeffs(sys, c, lam, pt, "soliton").a
        M = boussinesq_momentum(sys, c, lam, pt)
        for x in ladder:
            if quantity == "rho":
                mu = asymptotics.mu_for_rho(sys, c, lam, pt, x)
            elif quantity == "mu":
                mu = pt.mu_s - x
            else:
                raise ConfigError(f"{name} needs a mu or rho ladder")
            p = Params(mu, lam, c)
            if name == "soliton_hessian":
                r = asymptotics.compare_hessian(sys, p, "soliton", pt, M2=M2)
                n, q = r["SHS"], r["M2"]
            else:
                e = pt.mu_s - mu
                n = action_gradient(sys, p, portrait=pt).theta
                q = M + a_s * np.sqrt(0.5 * float(sys.kappa(pt.v_s))) * e * np.log(e)
            rows_x.append(x), num.append(n), pred.append(q), res.append(abs(n - q))
    elif name in ("roots_harmonic", "roots_soliton"):
        which = "harmonic" if name == "roots_harmonic" else "soliton"
        if quantity != "mu":
            raise ConfigError(f"{name} needs a mu ladder")
        co = asymptotics.limit_coeffs(sys, c, lam, pt, which)
        for x in ladder:
            if which == "harmonic":
                o = orbit_roots(sys, Params(pt.mu_0 + x, lam, c), pt)
                q = pt.v_0 - co.a * np.sqrt(x) + co.b * x - co.cc * x**1.5
            else:
                o = orbit_roots(sys, Params(pt.mu_s - x, lam, c), pt)
                q = pt.v_s + co.a * np.sqrt(x) + co.b * x
            rows_x.append(x), num.append(o.v2), pred.append(q), res.append(abs(o.v2 - q))
    else:
        raise ConfigError(f"unknown check {name!r}")
    return _table(name, rows_x, num, pred, res)


def cmd_asympt(cfg: dict, out: str) -> int:
    sys = system_from(cfg)
    c = _real(_need(cfg, "c"), "c")
    lam = _lam(_need(cfg, "lambda"), sys.N)
    checks = _need(cfg, "checks", list)
    if not checks:
        raise ConfigError("checks must be non-empty")
    jobs = []
    for chk in checks:
        if not isinstance(chk, dict) or "name" not in chk:
            raise ConfigError("each check needs a name and a ladder")
        ladder = _ladder(chk.get("ladder"))
        jobs.append((chk["name"], ladder, chk["ladder"]["quantity"]))
    try:
        pt = classify_portrait(sys, c, lam)
    except WavestabError as exc:
        write_json(out, {"ok": False, "reason": exc.reason, "message": str(exc)})
        return EXIT_DIAGNOSTIC
    rows = []
    for name, ladder, quantity in jobs:
        rows.extend(_asympt_check(name, sys, c, lam, pt, ladder, quantity))
    with open(out, "w") as fh:
        fh.write(csv_line(ASYMPT_COLUMNS))
        for r in rows:
            fh.write(csv_line(r))
    return EXIT_OK


def cmd_constants(cfg: dict, out: str) -> int:
    sys = system_from(cfg)
    state = _lam(_need(cfg, "state"), sys.N, "state")
    c = _real(_need(cfg, "c"), "c")
    lam = _lam(cfg["lambda"], sys.N) if "lambda" in cfg else None
    xis = [_real(x, "xi") for x in cfg.get("xi", [])]
    periods = [_real(x, "Xi") for x in cfg.get("Xi", [])]
    rep = constant_states.coperiodic_threshold(sys, state, c, lam)
    disp = [{"xi": x, "z": [[z.real, z.imag] for z in constant_states.dispersion_relation(sys, state, x, c)]}
            for x in xis]
    checks = []
    for X in periods:
        dim, lowest = constant_states.mode_nullity(sys, state, c, X)
        checks.append({"Xi": X, "predicate": rep.coperiodic_stable(X), "min_eigenvalue": lowest,
                       "kernel_dim": dim})
    write_json(out, {"hyperbolic": rep.hyperbolic, "spectrally_stable_localized": rep.spectrally_stable_localized,
                     "Xi_star": rep.Xi_star, "kernel_dim_at_Xi_star": rep.kernel_dim_at_Xi_star,
                     "dispersion": disp, "periods": checks})
    return EXIT_OK


def _smooth(spec: Any) -> asymlib.SmoothFn:
    if not isinstance(spec, dict) or spec.get("kind") not in ("poly", "over_sqrt"):
        raise ConfigError("functions entries need kind 'poly' or 'over_sqrt' and coeffs")
    coeffs = [_real(x, "coeffs") for x in _need(spec, "coeffs", list)]
    if spec["kind"] == "poly":
        return asymlib.SmoothFn.polynomial(coeffs, name=f"poly{coeffs}")
    return asymlib.SmoothFn.over_sqrt(coeffs, name=f"over_sqrt{coeffs}")


def cmd_asymlib_check(cfg: dict, out: str) -> int:
    rhos = [_real(r, "rho") for r in cfg.get("rho", [1e-1, 1e-2, 1e-3, 1e-4])]
    if any(r <= 0 for r in rhos):
        raise ConfigError("rho values must be positive")
    report: dict[str, Any] = {"functions": []}
    for spec in cfg.get("functions", [{"kind": "poly", "coeffs": [1.0]}]):
        g = _smooth(spec)
        Gs, Fs, Hs = asymlib.G_expansion(g), asymlib.F_expansion(g), asymlib.H_expansion(g)
        report["functions"].append({
            "name": g.name,
            "G": {"a": Gs.a, "b": Gs.b},
            "F": {"A": Fs.a, "B": Fs.b},
            "H": {"pole": Hs.pole, "c": Hs.a, "d": Hs.b},
            "errors": [{"rho": r, "G": abs(asymlib.G_numeric(g, r) - Gs(r)),
                        "F": abs(asymlib.F_numeric(g, r) - Fs(r)),
                        "H": abs(asymlib.H_numeric(g, r) - Hs(r))} for r in rhos],
        })
    if "root_W" in cfg:
        W = Poly(tuple(_real(x, "root_W") for x in _need(cfg, "root_W", list)))
        eps = [_real(e, "eps") for e in cfg.get("eps", [1e-2, 1e-3, 1e-4, 1e-5])]
        try:
            lad = asymlib.root_ladder(W, eps)
        except WavestabError as exc:
            write_json(out, {"ok": False, "reason": exc.reason, "message": str(exc)})
            return EXIT_DIAGNOSTIC
        rex = lad["expansion"]
        report["roots"] = {"alpha": rex.alpha, "beta": rex.beta, "gamma": rex.gamma, "eta": rex.eta,
                           "eps": eps, "err_z": lad["err_z"], "err_dz": lad["err_dz"]}
    if "system" in cfg:
        sys = system_from(cfg)
        c = _real(_need(cfg, "c"), "c")
        lam = _lam(_need(cfg, "lambda"), sys.N)
        n = int(cfg.get("triples", 100))
        rng = np.random.default_rng(int(cfg.get("seed", 0)))
        lo, hi = sys.domain
        report["R_symmetry_residual"] = asymlib.symmetry_check_R(sys, rng.uniform(lo, hi, size=(n, 3)), c, lam)
    write_json(out, {"ok": True, **report})
    return EXIT_OK


COMMANDS: dict[str, Callable[[dict, str], int]] = {
    "portrait": cmd_portrait,
    "stability": cmd_stability,
    "asympt": cmd_asympt,
    "sweep": cmd_sweep,
    "constants": cmd_constants,
    "asymlib-check": cmd_asymlib_check,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavestab", description="Co-periodic stability of periodic traveling waves.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", required=True, help="output file (CSV or JSON)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, args.out)
    except (ConfigError, UsageError) as exc:
        print(f"wavestab: {exc.reason}: {exc}", file=_sys.stderr)
        return EXIT_CONFIG
    except WavestabError as exc:
        print(f"wavestab: {exc.reason}: {exc}", file=_sys.stderr)
        return EXIT_DIAGNOSTIC


if __name__ == "__main__":
    raise SystemExit(main())
