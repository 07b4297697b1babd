"""Command-line front end.

Configuration is a flat ``key = value`` document (``#`` starts a comment) or
a JSON object with the same keys.  Command-line flags override the file.
Every output file gets a ``<path>.meta.json`` sidecar holding the full
configuration echo, which is enough to regenerate the output.
"""
import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .ensembles import (EnsembleSpec, assemble_observations, check_assumptions, draw_design,
                        make_coefficients, sample_noise, toeplitz_covariance)
from .errors import GLLabError, IoError, NotConverged, ParseError, ValidationError
from .experiments import (LambdaRule, SweepResult, SweepSpec, chi2_tail_check,
                          lambda_from_rule, sample_size, sweep_theta, theta50_scan)
from .solver import SolverConfig, group_lasso
from .theory import SupportSet, TheoryReport, bmin, psi_bounds, sample_complexity_theta, sparsity_overlap
from .witness import construct_witness

log = logging.getLogger(__name__)

COMMANDS = ("psi", "solve", "witness", "sweep", "theta50-scan", "check-assumptions", "tail-check")
SWEEP_COLUMNS = ("family", "p", "s", "K", "sigma", "method", "lambda_rule",
                 "theta", "n", "trials", "successes", "success_rate")
SCAN_COLUMNS = ("alpha", "cos_alpha", "theta50_group", "theta50_lasso")


def _floats(text):
    if isinstance(text, (list, tuple)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).replace(";", ",").split(",") if x.strip())


def _opt_float(x):
    return None if x is None or x == "" else float(x)


def _opt_int(x):
    return None if x is None or x == "" else int(x)


def _int(x):
    if isinstance(x, bool) or (isinstance(x, float) and not x.is_integer()):
        raise ValueError(f"expected an integer, got {x!r}")
    return int(x)


def _str(x):
    return None if x is None else str(x)


@dataclass
class RunConfig:
    """Validated run configuration; field names double as config keys."""

    command: str = "psi"
    family: str = "identical"
    p: int = 64
    s: int = 8
    K: int = 2
    sigma: float = 0.1
    alpha: float | None = None
    covariance: str = "identity"
    support_placement: str = "first_s"
    n: int | None = None
    theta: float | None = None
    theta_grid: tuple = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0)
    alpha_grid: tuple = tuple(i * math.pi / 12 for i in range(7))
    trials: int = 200
    seed: int = 0
    lambda_rule: str = "paper_sim"
    method: str = "group_l12"
    x_path: str | None = None
    y_path: str | None = None
    m: int = 10
    d: int = 2
    t: float = 18.0
    tail_trials: int = 100_000
    threads: int | None = None
    out: str | None = None
    format: str = "json"

    def to_dict(self):
        return {f.name: _jsonable(getattr(self, f.name)) for f in dataclasses.fields(self)}

    def covariance_matrix(self):
        if self.covariance == "identity":
            return None
        return toeplitz_covariance(self.p, _parse_call(self.covariance, "toeplitz"))

    def ensemble(self):
        return EnsembleSpec(p=self.p, s=self.s, K=self.K, sigma=self.sigma, family=self.family,
                            alpha=self.alpha, covariance=self.covariance_matrix(),
                            support_placement=self.support_placement,
                            placement_seed=self.seed)


_CONVERTERS = {
    "command": str, "family": str, "p": _int, "s": _int, "K": _int, "sigma": float,
    "alpha": _opt_float, "covariance": str, "support_placement": str, "n": _opt_int,
    "theta": _opt_float, "theta_grid": _floats, "alpha_grid": _floats, "trials": _int,
    "seed": _int, "lambda_rule": str, "method": str, "x_path": _str, "y_path": _str,
    "m": _int, "d": _int, "t": float, "tail_trials": _int, "threads": _opt_int,
    "out": _str, "format": str,
}


def _parse_call(text, name):
    text = text.strip()
    if not (text.startswith(name + "(") and text.endswith(")")):
        raise ValueError(f"expected {name}(<number>), got {text!r}")
    return float(text[len(name) + 1:-1])


def _read_pairs(text):
    stripped = text.lstrip()
    if stripped.startswith("{"):
        def hook(pairs):
            seen = {}
            for k, v in pairs:
                if k in seen:
                    raise ParseError("duplicate key", key=k)
                seen[k] = v
            return seen
        try:
            obj = json.loads(text, object_pairs_hook=hook)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, line=exc.lineno) from None
        return [(k, v, None) for k, v in obj.items()]
    pairs, seen = [], set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("empty key", line=lineno)
        if key in seen:
            raise ParseError("duplicate key", line=lineno, key=key)
        seen.add(key)
        pairs.append((key, value, lineno))
    return pairs


def parse_config(text, overrides=None):
    """Parse and validate a configuration document.

    ``overrides`` (a mapping) is applied on top of the document before
    validation; command-line flags go through here.
    """
    values = {}
    for key, value, lineno in _read_pairs(text):
        if key not in _CONVERTERS:
            raise ParseError("unknown key", line=lineno, key=key)
        try:
            values[key] = _CONVERTERS[key](value)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad value {value!r}: {exc}", line=lineno, key=key) from None
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        try:
            values[key] = _CONVERTERS[key](value)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad value {value!r}: {exc}", key=key) from None
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg):
    def need(cond, message):
        if not cond:
            raise ValidationError(message)

    need(cfg.command in COMMANDS, f"command must be one of {', '.join(COMMANDS)}")
    need(cfg.format in ("csv", "json"), "format must be csv or json")
    need(cfg.p >= 2, "p must be ≥ 2")
    need(1 <= cfg.s < cfg.p, "s must satisfy 1 ≤ s < p")
    need(cfg.p - cfg.s >= 2, "p - s must be ≥ 2")
    need(cfg.K >= 1, "K must be ≥ 1")
    need(cfg.sigma >= 0, "sigma must be ≥ 0")
    need(cfg.trials >= 1, "trials must be ≥ 1")
    need(cfg.seed >= 0, "seed must be a nonnegative 64-bit integer")
    need(cfg.threads is None or cfg.threads >= 0, "threads must be ≥ 0")
    need(cfg.method in ("group_l12", "lasso_union"), "method must be group_l12 or lasso_union")
    need(cfg.n is None or cfg.n >= 1, "n must be ≥ 1")
    need(cfg.theta is None or cfg.theta > 0, "theta must be > 0")
    grid = cfg.theta_grid
    need(len(grid) >= 1, "theta_grid must be nonempty")
    need(all(b > a for a, b in zip(grid, grid[1:])), "theta_grid must be strictly increasing")
    need(all(0.1 <= x <= 3.0 for x in grid), "theta_grid values must lie in [0.1, 3]")
    need(len(cfg.alpha_grid) >= 1, "alpha_grid must be nonempty")
    need(cfg.m >= 1 and cfg.d >= 1, "m and d must be ≥ 1")
    need(cfg.t > cfg.d, "t must be > d")
    need(cfg.tail_trials >= 1, "tail_trials must be ≥ 1")
    need((cfg.x_path is None) == (cfg.y_path is None), "x_path and y_path go together")
    try:
        rule = LambdaRule.parse(cfg.lambda_rule)
        if rule.kind == "paper_sim":
            need(cfg.s >= 2, "lambda_rule paper_sim needs s ≥ 2")
        if cfg.command == "solve" and cfg.x_path is not None:
            pass  # data come from files; s only feeds the lambda rule
        elif cfg.command != "theta50-scan":
            cfg.ensemble()
        elif cfg.s % 2:
            raise ValidationError("theta50-scan needs an even s")
    except ValidationError:
        raise
    except (GLLabError, ValueError) as exc:
        raise ValidationError(str(exc)) from None
    if cfg.command in ("solve", "witness") and cfg.x_path is None:
        need(cfg.n is not None or cfg.theta is not None, f"{cfg.command} needs n or theta")
    return cfg


# ---------------------------------------------------------------- serialization

def _jsonable(x):
    if dataclasses.is_dataclass(x) and not isinstance(x, type):
        if isinstance(x, SupportSet):
            return list(x.indices)
        return {f.name: _jsonable(getattr(x, f.name)) for f in dataclasses.fields(x)
                if f.name not in ("B_S", "covariance", "objective_trace")}
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, LambdaRule):
        return str(x)
    return x


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g") if math.isfinite(x) else ""
    return str(x)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _sweep_rows(result):
    spec = result.spec_echo
    ens = spec.ensemble
    for pt in result.points:
        yield (ens.family, ens.p, ens.s, ens.K, float(ens.sigma), spec.method,
               str(spec.lambda_rule), pt.theta, pt.n, pt.trials, pt.successes, pt.success_rate)


def to_csv(result):
    if isinstance(result, SweepResult):
        return _csv_text(SWEEP_COLUMNS, _sweep_rows(result))
    if isinstance(result, list) and result and hasattr(result[0], "cos_alpha"):
        return _csv_text(SCAN_COLUMNS, ((r.alpha, r.cos_alpha, r.theta50_group, r.theta50_lasso)
                                        for r in result))
    record = _jsonable(result)
    if "B_hat" in record and isinstance(record["B_hat"], list):
        K = len(record["B_hat"][0])
        return _csv_text(["row"] + [f"b{k}" for k in range(K)],
                         ([i] + row for i, row in enumerate(record["B_hat"])))
    scalars = {k: v for k, v in record.items() if not isinstance(v, (list, dict))}
    return _csv_text(list(scalars), [list(scalars.values())])


def to_json(result):
    return json.dumps(_jsonable(result), indent=2, allow_nan=False) + "\n"


def emit_results(result, path, fmt="json", meta=None):
    """Write ``result`` as CSV or JSON to ``path`` (stdout when None).

    When ``path`` is given and ``meta`` is not None, ``<path>.meta.json`` is
    written next to it.
    """
    if fmt not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    text = to_csv(result) if fmt == "csv" else to_json(result)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        if meta is not None:
            with open(f"{path}.meta.json", "w", encoding="utf-8") as fh:
                fh.write(to_json(meta))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------- commands

def _sample_size(cfg):
    return cfg.n if cfg.n is not None else sample_size(cfg.theta, cfg.p, cfg.s)


def _instance(cfg):
    spec = cfg.ensemble()
    Bstar, S = make_coefficients(spec)
    n = _sample_size(cfg)
    X = draw_design(spec, n, cfg.seed)
    W = sample_noise(n, cfg.K, cfg.sigma, cfg.seed)
    return spec, Bstar, S, X, W


def _load_matrix(path):
    try:
        if path.endswith(".npy"):
            return np.load(path)
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def cmd_psi(cfg):
    spec = cfg.ensemble()
    Bstar, S = make_coefficients(spec)
    rows = S.as_array()
    Sigma = spec.Sigma
    psi = sparsity_overlap(Bstar[rows], Sigma[np.ix_(rows, rows)])
    rep = check_assumptions(Sigma, S)
    lo, hi = psi_bounds(cfg.s, cfg.K, rep.cmin, rep.cmax)
    n = cfg.n if cfg.n is not None else (
        sample_size(cfg.theta, cfg.p, cfg.s) if cfg.theta is not None else None)
    theta = sample_complexity_theta(n, cfg.p, cfg.s, psi) if n is not None else None
    return TheoryReport(psi=psi, theta=theta, psi_lower=lo, psi_upper=hi, bmin=bmin(Bstar[rows]))


def cmd_check_assumptions(cfg):
    spec = cfg.ensemble()
    _, S = make_coefficients(spec)
    return check_assumptions(spec.Sigma, S)


def cmd_solve(cfg):
    if cfg.x_path is not None:
        X, Y = _load_matrix(cfg.x_path), _load_matrix(cfg.y_path)
        n, p = X.shape
        s = cfg.s
    else:
        _, Bstar, _, X, W = _instance(cfg)
        Y = assemble_observations(X, Bstar, W)
        n, p, s = X.shape[0], cfg.p, cfg.s
    lam = lambda_from_rule(cfg.lambda_rule, n, p, s)
    try:
        sol = group_lasso(X, Y, SolverConfig(lam=lam))
    except NotConverged as exc:
        log.warning("%s", exc)
        sol = exc.solution
    return {"n": n, "p": p, "lambda": lam, "support": list(sol.support.indices),
            "iterations": sol.iterations, "converged": sol.converged,
            "objective": sol.objective, "kkt_max_violation": sol.kkt_max_violation,
            "B_hat": sol.B_hat}


def cmd_witness(cfg):
    _, Bstar, S, X, W = _instance(cfg)
    lam = lambda_from_rule(cfg.lambda_rule, X.shape[0], cfg.p, cfg.s)
    return construct_witness(X, W, Bstar, S, lam)


def cmd_sweep(cfg):
    spec = SweepSpec(ensemble=cfg.ensemble(), theta_grid=cfg.theta_grid, trials=cfg.trials,
                     base_seed=cfg.seed, lambda_rule=cfg.lambda_rule, method=cfg.method)
    return sweep_theta(spec, threads=cfg.threads)


def cmd_theta50_scan(cfg):
    return theta50_scan(cfg.p, cfg.s, cfg.alpha_grid, cfg.theta_grid, cfg.trials,
                        base_seed=cfg.seed, sigma=cfg.sigma, lambda_rule=cfg.lambda_rule,
                        threads=cfg.threads)


def cmd_tail_check(cfg):
    return chi2_tail_check(cfg.m, cfg.d, cfg.t, cfg.tail_trials, cfg.seed)


HANDLERS = {
    "psi": cmd_psi, "solve": cmd_solve, "witness": cmd_witness, "sweep": cmd_sweep,
    "theta50-scan": cmd_theta50_scan, "check-assumptions": cmd_check_assumptions,
    "tail-check": cmd_tail_check,
}


def run(cfg):
    return HANDLERS[cfg.command](cfg)


def meta_for(cfg):
    return {"artifact_version": __version__, "seed": cfg.seed, "config": cfg.to_dict()}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gl-lab",
        description="Group Lasso row-selection lab: theory, solver, witness and sweeps.",
        epilog="Config keys (defaults): " + ", ".join(
            f"{f.name}={_jsonable(f.default)}" for f in dataclasses.fields(RunConfig)),
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key = value file or JSON object")
    parser.add_argument("--out", help="output path (stdout when omitted)")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--seed", type=int, help="64-bit base seed")
    parser.add_argument("--threads", type=int,
                        help="worker threads, 0 = auto (fallback: GL_LAB_THREADS)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a single config key")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = ""
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise IoError(f"cannot read {args.config}: {exc}") from exc
            if text.lstrip().startswith("{"):
                try:
                    obj = json.loads(text)
                except json.JSONDecodeError:
                    obj = None  # parse_config reports the position
                if isinstance(obj, dict) and "config" in obj and "artifact_version" in obj:
                    text = json.dumps(obj["config"])  # a meta sidecar replays its run
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ParseError(f"--set expects KEY=VALUE, got {item!r}")
            key, value = (x.strip() for x in item.split("=", 1))
            if key not in _CONVERTERS:
                raise ParseError("unknown key", key=key)
            overrides[key] = value
        threads = args.threads
        if threads is None and os.environ.get("GL_LAB_THREADS"):
            threads = int(os.environ["GL_LAB_THREADS"])
        overrides.update({"command": args.command, "out": args.out, "format": args.format,
                          "seed": args.seed, "threads": threads})
        cfg = parse_config(text, overrides)
        result = run(cfg)
        emit_results(result, cfg.out, cfg.format, meta=meta_for(cfg) if cfg.out else None)
    except (ParseError, ValidationError, IoError) as exc:
        print(f"gl-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
