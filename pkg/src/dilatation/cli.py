"""Command-line runner: ``dilatation <command> [flags]``.

Commands: ``audit``, ``tangent``, ``curve``, ``diff``, ``lookdown``,
``suite``.  Each writes ``<command>.json`` (and ``<command>.csv`` when a
trace is produced) into the output directory, taken from ``--out``, else
``$DILATATION_OUTPUT_DIR``, else ``./dilatation-output``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage or
input errors.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from . import calculus as calc
from . import curves as cv
from . import lookdown as ld
from .core import FAIL, PASS, STATUSES, InvalidInputError, Report, audit_axioms, sample_ball
from .limits import EpsSchedule
from .structures import make_structure
from .tangent import (TangentGroup, check_cone_property, check_left_invariance,
                      check_metric_tangent, tangent_delta, tangent_distance, tangent_inv,
                      tangent_sum)

OUTPUT_ENV = "DILATATION_OUTPUT_DIR"
COMMANDS = ("audit", "tangent", "curve", "diff", "lookdown", "suite")
SECTION = "experiment"


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Everything a run depends on; serializes to a flat ``key = value`` file."""

    command: str = "audit"
    op: str = ""
    structure: str = "euclidean:2"
    structure2: str = ""
    pair: str = "heisenberg-euclidean"
    curve: str = ""
    map: str = "identity"
    map2: str = ""
    x: str = ""
    u: str = ""
    v: str = ""
    t: str = ""
    eps: float = 0.5
    samples: int = 50
    radius: float = 1.0
    seed: int = 0
    eps0: float = 0.5
    ratio: float = 0.5
    steps: int = 30
    tol: float = 1e-6
    exact_tol: float = 1e-10
    jobs: int = 1
    out: str = ""

    @property
    def schedule(self) -> EpsSchedule:
        return EpsSchedule(self.eps0, self.ratio, self.steps)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            lines.append(f"{f.name} = {val!r}" if isinstance(val, float) else f"{f.name} = {val}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, base: Optional["ExperimentConfig"] = None) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        if not text.lstrip().startswith("["):
            text = f"[{SECTION}]\n" + text
        parser.read_string(text)
        if not parser.has_section(SECTION):
            raise UsageError(f"config needs an [{SECTION}] section or flat key = value lines")
        cfg = dataclasses.replace(base) if base else cls()
        return cfg.updated(dict(parser[SECTION]))

    def updated(self, values: dict) -> "ExperimentConfig":
        kinds = {f.name: f.type for f in dataclasses.fields(self)}
        changes = {}
        for key, raw in values.items():
            if raw is None:
                continue
            if key not in kinds:
                raise UsageError(f"unknown config key {key!r}")
            kind = {"int": int, "float": float, "str": str}[str(kinds[key])]
            try:
                changes[key] = kind(raw)
            except ValueError:
                raise UsageError(f"bad value for {key}: {raw!r}") from None
        return dataclasses.replace(self, **changes)


# --- reports and emission ---------------------------------------------------

def _clean(obj):
    """JSON-safe copy: arrays to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


@dataclass
class RunReport:
    config: ExperimentConfig
    reports: list
    trace_header: Optional[list] = None
    trace_rows: Optional[list] = None
    wall_clock: float = 0.0

    @property
    def records(self) -> list:
        out = []
        for rep in self.reports:
            for c in rep.checks:
                witness = c.witness
                if c.status != PASS and witness is None:
                    witness = {"check": c.name, "residual": c.residual}
                out.append({"report": rep.name, "name": c.name, "status": c.status,
                            "residual": c.residual, "witness": witness, "detail": c.detail})
        return out

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def _config_record(self) -> dict:
        # the output location does not affect results; leaving it out keeps
        # reports from identical runs byte-identical
        cfg = dataclasses.asdict(self.config)
        cfg.pop("out")
        return cfg

    def to_dict(self) -> dict:
        records = self.records
        return _clean({
            "artifact": "dilatation", "version": __version__,
            "command": self.config.command, "config": self._config_record(),
            "passed": self.passed, "status_values": list(STATUSES),
            "records": records,
            "witnesses": [r for r in records if r["status"] != PASS],
            "info": {rep.name: rep.info for rep in self.reports},
            "wall_clock_seconds": self.wall_clock,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def emit_report(run: RunReport, out_dir: str, formats=("json", "csv")) -> list:
    """Write the JSON report and, when there is a trace, the CSV file."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    base = os.path.join(out_dir, run.config.command)
    if "json" in formats:
        with open(base + ".json", "w", encoding="utf-8") as fh:
            fh.write(run.to_json())
        written.append(base + ".json")
    if "csv" in formats and run.trace_header:
        with open(base + ".csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(run.trace_header)
            for row in run.trace_rows or []:
                w.writerow([_fmt(v) for v in row])
        written.append(base + ".csv")
    return written


# --- command implementations ------------------------------------------------

def _point(text: str, dim: int, default=None) -> np.ndarray:
    if not text:
        return np.zeros(dim) if default is None else np.asarray(default, dtype=float)
    try:
        vals = [float(s) for s in text.replace(";", ",").split(",") if s.strip()]
    except ValueError:
        raise InvalidInputError(f"cannot parse point {text!r}") from None
    if len(vals) != dim:
        raise InvalidInputError(f"point {text!r} needs {dim} coordinates")
    return np.array(vals)


def _coords(prefix: str, dim: int) -> list:
    return [f"{prefix}{i}" for i in range(dim)]


def cmd_audit(cfg: ExperimentConfig):
    S = make_structure(cfg.structure)
    rep = audit_axioms(S, cfg.samples, cfg.radius, cfg.schedule, cfg.seed, cfg.exact_tol, cfg.tol)
    return [rep], None, None


TANGENT_OPS = ("delta", "sum", "inv", "distance", "cone", "invariance", "metric")


def cmd_tangent(cfg: ExperimentConfig):
    S = make_structure(cfg.structure)
    op = cfg.op or "delta"
    if op not in TANGENT_OPS:
        raise UsageError(f"tangent --op must be one of {', '.join(TANGENT_OPS)}")
    sch = cfg.schedule
    x0 = _point(cfg.x, S.dim)
    if op == "cone":
        u = _point(cfg.u, S.dim, x0 + 0.3)
        v = _point(cfg.v, S.dim, x0 - 0.2)
        return [check_cone_property(S, x0, u, v, schedule=sch, tol=cfg.tol)], None, None
    if op == "invariance":
        return [check_left_invariance(S, x0, cfg.samples, cfg.seed, sch, cfg.tol)], None, None
    if op == "metric":
        return [check_metric_tangent(S, x0, sch, seed=cfg.seed, tol=cfg.tol)], None, None
    if cfg.u:
        triples = [(x0, _point(cfg.u, S.dim), _point(cfg.v, S.dim, x0))]
    else:
        rng = np.random.default_rng(cfg.seed)
        xs = sample_ball(rng, x0, cfg.radius, cfg.samples)
        us = xs + sample_ball(rng, np.zeros(S.dim), 0.5 * S.A, cfg.samples)
        vs = xs + sample_ball(rng, np.zeros(S.dim), 0.5 * S.A, cfg.samples)
        triples = list(zip(xs, us, vs))
    rep = Report(f"tangent-{op}[{S.name}]")
    width = 1 if op == "distance" else S.dim
    header = (_coords("x", S.dim) + _coords("u", S.dim) + _coords("v", S.dim) + ["eps"]
              + _coords("value", width) + ["residual", "status"])
    rows = []
    for i, (x, u, v) in enumerate(triples):
        if op == "delta":
            est = tangent_delta(S, x, u, v, sch, cfg.tol)
        elif op == "sum":
            est = tangent_sum(S, x, u, v, sch, cfg.tol)
        elif op == "inv":
            est = tangent_inv(S, x, u, sch, cfg.tol)
        else:
            est = tangent_distance(S, x, u, v, sch, cfg.tol)
        for e, val in est.samples:
            rows.append(list(x) + list(u) + list(v) + [e] + list(np.ravel(val))
                        + [est.residual, est.status])
        ok = est.converged
        rep.add(f"sample-{i}", PASS if ok else FAIL, est.residual,
                None if ok else {"x": x, "u": u, "v": v, "status": est.status},
                value=np.ravel(est.value).tolist(), limit_status=est.status)
    return [rep], header, rows


CURVE_OPS = ("var", "lip", "md", "length", "reparam", "derive", "rn", "lenformula", "hausdorff")


def cmd_curve(cfg: ExperimentConfig):
    S = make_structure(cfg.structure)
    c = cv.make_curve(cfg.curve or "segment", S.dim)
    probe = c(0.5 * (c.a + c.b))
    if np.shape(probe)[-1] != S.dim:
        raise InvalidInputError(f"curve {c.name!r} does not live in {S.name}")
    op = cfg.op or "var"
    if op not in CURVE_OPS:
        raise UsageError(f"curve --op must be one of {', '.join(CURVE_OPS)}")
    t = float(cfg.t) if cfg.t else 0.5 * (c.a + c.b) + 0.1234 * (c.b - c.a)
    rep = Report(f"curve-{op}[{S.name}, {c.name}]")
    header = rows = None
    if op == "var":
        v = cv.variation_details(c, S)
        rep.info.update(value=v.value, depth=v.depth, exact=v.exact)
        rep.add("variation-settled", PASS if v.exact else FAIL,
                v.levels[-1] - v.levels[-2], None if v.exact else {"depth": v.depth, "value": v.value})
        header = ["depth", "partitions", "sum"]
        rows = [[k, 2 ** k, s] for k, s in enumerate(v.levels)]
    elif op == "lip":
        val = cv.upper_dilatation(c, t, S)
        rep.info.update(t=t, value=val)
        rep.add("finite", PASS if math.isfinite(val) else FAIL, 0.0,
                None if math.isfinite(val) else {"t": t})
    elif op == "md":
        est = cv.metric_derivative(c, t, S, cfg.schedule, cfg.tol)
        rep.info.update(t=t, value=est.value, status=est.status)
        rep.add("converged", PASS if est.converged else FAIL, est.residual,
                None if est.converged else {"t": t, "status": est.status})
        header, rows = ["eps", "value"], [[e, float(v)] for e, v in est.samples]
    elif op in ("length", "hausdorff"):
        var = cv.variation(c, S)
        if op == "length":
            try:
                L = cv.length_via_dilatation(c, S)
            except ValueError as exc:
                raise InvalidInputError(str(exc)) from None
        else:
            L = cv.hausdorff_length_estimate(c, S)
        rel = abs(L - var) / max(var, 1e-300)
        rep.info.update(length=L, variation=var, lipschitz=c.lipschitz)
        rep.add("length=variation", PASS if rel < 1e-3 else FAIL, rel,
                None if rel < 1e-3 else {"length": L, "variation": var})
    elif op == "reparam":
        cc = cv.reparametrize_arclength(c, S)
        var = cv.variation(cc, S)
        rel = abs(var - cc.b) / cc.b
        rep.info.update(length=cc.b)
        rep.add("unit-speed", PASS if rel < 1e-6 else FAIL, rel,
                None if rel < 1e-6 else {"length": cc.b, "variation": var})
        s = np.linspace(0, cc.b, 257)
        header = ["s"] + _coords("c", S.dim)
        rows = [[si] + list(p) for si, p in zip(s, cc(s))]
    elif op == "derive":
        res = cv.derivative_at(c, t, S, cfg.schedule, cfg.tol)
        rep.info.update(t=t, velocity=res.forward.value, mismatch=res.mismatch,
                        forward=res.forward.status, backward=res.backward.status)
        rep.add("derivable", PASS if res.derivable else FAIL, res.forward.residual,
                None if res.derivable else {"t": t, "forward": res.forward.status,
                                            "backward": res.backward.status})
        header = ["eps"] + _coords("forward", S.dim) + _coords("backward", S.dim)
        rows = [[e] + list(f) + list(b) for (e, f), (_, b)
                in zip(res.forward.samples, res.backward.samples)]
    elif op == "rn":
        rep = cv.rn_probe(S, c, cfg.samples, cfg.schedule, cfg.seed)
        header = ["t", "forward_status", "backward_status", "derivable"]
        rows = [[r.t, r.forward.status, r.backward.status, int(r.derivable)] for r in rep.results]
    else:
        rep = cv.length_formula_check(S, c, schedule=cfg.schedule)
    return [rep], header, rows


DIFF_OPS = ("derive", "probe", "morphism", "chain", "equiv", "iso", "transport")


def cmd_diff(cfg: ExperimentConfig):
    S = make_structure(cfg.structure)
    op = cfg.op or "derive"
    if op not in DIFF_OPS:
        raise UsageError(f"diff --op must be one of {', '.join(DIFF_OPS)}")
    x = _point(cfg.x, S.dim)
    header = rows = None
    if op in ("equiv", "iso"):
        if not cfg.structure2:
            raise UsageError(f"diff --op {op} needs --structure2")
        S2 = make_structure(cfg.structure2)
        if op == "equiv":
            return [calc.equivalence_check(S, S2, cfg.samples, cfg.schedule, cfg.seed, cfg.tol)], None, None
        return [calc.tangent_iso_check(S, S2, x, cfg.samples, cfg.schedule, cfg.seed)], None, None
    F = calc.make_map(cfg.map, S)
    if op == "derive":
        u = _point(cfg.u, S.dim, x + 0.25)
        est = calc.pansu_derivative(F, x, u, cfg.schedule, cfg.tol)
        rep = Report(f"derivative[{F.name} on {S.name}]",
                     info={"value": est.value, "status": est.status})
        rep.add("converged", PASS if est.converged else FAIL, est.residual,
                None if est.converged else {"x": x, "u": u, "status": est.status})
        header = ["eps"] + _coords("value", S.dim)
        rows = [[e] + list(v) for e, v in est.samples]
        return [rep], header, rows
    if op == "probe":
        return [calc.derivative_probe(F, cfg.samples, cfg.radius, schedule=cfg.schedule,
                                      seed=cfg.seed, tol=cfg.tol)], None, None
    if op == "morphism":
        D = calc.derivative(F, x, cfg.schedule, cfg.tol)
        return [calc.check_conical_morphism(D, TangentGroup(S, x, cfg.schedule),
                                            TangentGroup(S, F(x), cfg.schedule),
                                            seed=cfg.seed, tol=cfg.tol)], None, None
    if op == "chain":
        G = calc.make_map(cfg.map2 or "identity", S)
        return [calc.chain_rule_check(F, G, x, schedule=cfg.schedule, seed=cfg.seed,
                                      tol=cfg.tol)], None, None
    T = calc.transport_structure(S, F)
    return [audit_axioms(T, cfg.samples, cfg.radius, cfg.schedule, cfg.seed, cfg.exact_tol,
                         cfg.tol)], None, None


LOOKDOWN_OPS = ("audit", "qeps", "gap", "did", "projector", "transfer", "condc")


def cmd_lookdown(cfg: ExperimentConfig):
    P = ld.make_pair(cfg.pair)
    op = cfg.op or "audit"
    if op not in LOOKDOWN_OPS:
        raise UsageError(f"lookdown --op must be one of {', '.join(LOOKDOWN_OPS)}")
    x = _point(cfg.x, P.dim)
    z = _point(cfg.u, P.dim, ld.translate(x, np.eye(P.dim)[0]))
    if op == "audit":
        return [ld.lookdown_audit(P, cfg.samples, cfg.radius, cfg.schedule, cfg.seed)], None, None
    if op == "qeps":
        val = ld.q_eps(P, x, cfg.eps, z)
        rep = Report(f"qeps[{P.name}]", info={"value": val, "eps": cfg.eps})
        rep.add("computed", PASS)
        return [rep], None, None
    if op in ("gap", "condc"):
        if op == "gap":
            zc = lambda e: z
        else:
            zc = lambda e: ld.translate(z, np.array([0.0, 0.0, e]) if P.dim == 3 else 0.0)
        rep = ld.check_condition_c(P, x, zc, cfg.schedule, radius=max(2.0, cfg.radius))
        if op == "gap":
            rep.info["gap"] = ld.distribution_gap(P, x, cfg.eps, z, radius=max(2.0, cfg.radius))
        return [rep], ["eps", "gap", "vertical"], [list(t) for t in rep.info["trace"]]
    if op == "did":
        est = ld.identity_derivative(P, x, z, cfg.schedule, cfg.tol)
        rep = Report(f"identity-derivative[{P.name}]", info={"value": est.value})
        rep.add("converged", PASS if est.converged else FAIL, est.residual,
                None if est.converged else {"x": x, "u": z, "status": est.status})
        return [rep], None, None
    if op == "projector":
        return [ld.check_projector(P, x, cfg.samples, cfg.schedule, cfg.seed)], None, None
    c = cv.make_curve(cfg.curve or "heisenberg-circle", P.dim)
    try:
        return [ld.transfer_probe(P, c, cfg.samples, cfg.schedule, cfg.seed)], None, None
    except ValueError as exc:
        raise InvalidInputError(str(exc)) from None


def cmd_suite(cfg: ExperimentConfig):
    from .suite import run_suite
    reports = run_suite(cfg.seed, cfg.jobs)
    summary = Report("suite")
    for rep in reports:
        bad = [c for c in rep.checks if not c.passed]
        summary.add(rep.name, PASS if not bad else FAIL, max((c.residual for c in bad), default=0.0),
                    None if not bad else {"check": bad[0].name, "residual": bad[0].residual,
                                          "witness": bad[0].witness})
    return [summary] + reports, None, None


HANDLERS = {"audit": cmd_audit, "tangent": cmd_tangent, "curve": cmd_curve, "diff": cmd_diff,
            "lookdown": cmd_lookdown, "suite": cmd_suite}


# --- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run")
    g.add_argument("--config", help="flat key = value config file; flags override it")
    g.add_argument("--write-config", help="write the effective config to this file")
    g.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or ./dilatation-output)")
    g.add_argument("--seed", type=int)
    g.add_argument("--samples", type=int)
    g.add_argument("--radius", type=float)
    g.add_argument("--jobs", type=int)
    g.add_argument("--eps0", type=float)
    g.add_argument("--ratio", type=float)
    g.add_argument("--steps", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--exact-tol", dest="exact_tol", type=float)
    g.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="dilatation", description="Numerical checks for dilatation structures.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("audit", parents=[common], help="audit axioms A0-A4")
    p.add_argument("--structure")
    p = sub.add_parser("tangent", parents=[common], help="tangent operations and checks")
    p.add_argument("--structure")
    p.add_argument("--op", choices=TANGENT_OPS)
    for k in ("x", "u", "v"):
        p.add_argument(f"--{k}", help="comma separated coordinates")
    p = sub.add_parser("curve", parents=[common], help="curve calculus")
    p.add_argument("--structure")
    p.add_argument("--curve", help="fixture name or CSV file of t, coords rows")
    p.add_argument("--op", choices=CURVE_OPS)
    p.add_argument("--t")
    p = sub.add_parser("diff", parents=[common], help="derivatives of maps")
    p.add_argument("--structure")
    p.add_argument("--structure2")
    p.add_argument("--map")
    p.add_argument("--map2")
    p.add_argument("--op", choices=DIFF_OPS)
    for k in ("x", "u"):
        p.add_argument(f"--{k}")
    p = sub.add_parser("lookdown", parents=[common], help="looking-down pairs")
    p.add_argument("--pair")
    p.add_argument("--op", choices=LOOKDOWN_OPS)
    p.add_argument("--curve")
    p.add_argument("--eps", type=float)
    p.add_argument("--x")
    p.add_argument("--z", dest="u")
    sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = ExperimentConfig.from_text(fh.read(), cfg)
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    flags = {k: v for k, v in vars(args).items() if k in names and k != "command"}
    cfg = cfg.updated(flags)
    return dataclasses.replace(cfg, command=args.command)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        if args.write_config:
            with open(args.write_config, "w", encoding="utf-8") as fh:
                fh.write(cfg.to_text())
        start = time.perf_counter()
        reports, header, rows = HANDLERS[cfg.command](cfg)
        elapsed = time.perf_counter() - start
    except (UsageError, ValueError, OSError, configparser.Error) as exc:
        print(f"dilatation: error: {exc}", file=sys.stderr)
        return 2
    run_report = RunReport(cfg, reports, header, rows, elapsed)
    out_dir = cfg.out or os.environ.get(OUTPUT_ENV) or "dilatation-output"
    try:
        written = emit_report(run_report, out_dir)
    except OSError as exc:
        print(f"dilatation: cannot write report: {exc}", file=sys.stderr)
        return 2
    if not args.quiet:
        for rep in reports:
            print(rep.summary())
        for path in written:
            print(f"wrote {path}")
    return 0 if run_report.passed else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
