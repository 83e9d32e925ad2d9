"""Dilatation-structure abstraction, check reports and the axiom audit."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np

from .limits import CONVERGED, EpsSchedule, check_scale

PASS = "pass"
FAIL = "fail"
DEGENERATE = "degenerate"
INCONCLUSIVE = "inconclusive"
STATUSES = (PASS, FAIL, DEGENERATE, INCONCLUSIVE)

EXACT_TOL = 1e-10
LIMIT_TOL = 1e-6


class InvalidInputError(ValueError):
    """Raised for non-finite coordinates or points outside the model space."""


def as_point(p, dim: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"non-finite coordinates: {p!r}")
    if dim is not None and (arr.ndim == 0 or arr.shape[-1] != dim):
        raise InvalidInputError(f"expected points of dimension {dim}, got shape {arr.shape}")
    return arr


@dataclass
class Check:
    name: str
    status: str
    residual: float = 0.0
    witness: Any = None
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == PASS


@dataclass
class Report:
    name: str
    checks: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def add(self, name, status, residual=0.0, witness=None, **detail) -> Check:
        c = Check(name, status, float(residual), witness, detail)
        self.checks.append(c)
        return c

    def extend(self, other: "Report", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.status, c.residual, c.witness, c.detail))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self) -> str:
        lines = [f"{self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            lines.append(f"  {c.name:<32} {c.status:<12} residual={c.residual:.3e}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "info": self.info,
                "checks": [asdict(c) for c in self.checks]}


def status_from(residual: float, tol: float) -> str:
    return PASS if residual < tol else FAIL


class DilatationStructure:
    """A metric together with base-point dilatations ``delta^x_eps``.

    Subclasses implement ``distance`` and ``_dilate`` on arrays of shape
    ``(..., dim)``.  Domains are the whole model space, so the constants
    ``A`` and ``B`` of the domain axiom only bound sampling radii.
    """

    name = "abstract"
    dim = 0
    A = 2.0
    B = 1.5

    def distance(self, x, y):
        raise NotImplementedError

    def _dilate(self, x: np.ndarray, eps: float, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dilate(self, x, eps, y) -> np.ndarray:
        eps = check_scale(eps)
        return self._dilate(as_point(x, self.dim), eps, as_point(y, self.dim))

    def dilate_many(self, x, eps, y) -> np.ndarray:
        """``delta^{x_k}_{eps_k} y_k`` for a 1-D array of scales.

        ``x`` and ``y`` are single points or arrays with one point per scale.
        """
        eps = np.asarray(eps, dtype=float)
        if eps.ndim != 1 or not np.all(np.isfinite(eps)) or np.any(eps <= 0):
            raise ValueError("scales must be a 1-D array of positive finite reals")
        shape = eps.shape + (self.dim,)
        x = np.broadcast_to(as_point(x, self.dim), shape)
        y = np.broadcast_to(as_point(y, self.dim), shape)
        return self._dilate_many(x, eps, y)

    def _dilate_many(self, x, eps, y):
        return np.stack([self._dilate(x[k], float(e), y[k]) for k, e in enumerate(eps)])

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


def dilate(S: DilatationStructure, x, eps, y) -> np.ndarray:
    return S.dilate(x, eps, y)


def sample_ball(rng: np.random.Generator, center, radius: float, n: int) -> np.ndarray:
    """Uniform samples in the coordinate ball of given radius."""
    center = np.asarray(center, dtype=float)
    d = center.shape[-1]
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / d)
    return center + g * r[:, None]


def _worst(entries):
    """Max residual and its witness; order independent."""
    if not entries:
        return 0.0, None
    res, wit = max(entries, key=lambda e: (e[0], repr(e[1])))
    return float(res), wit


def audit_axioms(
    S: DilatationStructure,
    sample_count: int = 50,
    radius: float = 1.0,
    schedule: Optional[EpsSchedule] = None,
    seed: int = 0,
    exact_tol: float = EXACT_TOL,
    limit_tol: float = LIMIT_TOL,
) -> Report:
    """Audit axioms A0-A4 on seeded samples.

    A0-A2 are exact identities.  A3 and A4 are limits estimated along
    ``schedule``; A3 is reported ``degenerate`` when the tangent distance of
    two distinct points vanishes.
    """
    from .tangent import tangent_delta, tangent_distance

    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    if radius <= 0:
        raise ValueError("radius must be positive")
    schedule = schedule or EpsSchedule()
    rng = np.random.default_rng(seed)
    xs = sample_ball(rng, np.zeros(S.dim), radius, sample_count)
    spread = 0.5 * S.A
    us = xs + sample_ball(rng, np.zeros(S.dim), spread, sample_count)
    vs = xs + sample_ball(rng, np.zeros(S.dim), spread, sample_count)
    epss = rng.uniform(0.01, 1.0, sample_count)
    mus = rng.uniform(0.01, 1.0, sample_count)

    a0, a1, a1lim, a2, a3, a4 = [], [], [], [], [], []
    degenerate = []
    a3_status, a4_status = [], []
    for i in range(sample_count):
        x, u, v, e, m = xs[i], us[i], vs[i], float(epss[i]), float(mus[i])
        w = (x.tolist(), u.tolist(), e)
        back = S.dilate(x, 1.0 / e, S.dilate(x, e, u))
        a0.append((float(np.max(np.abs(back - u))), w))
        r1 = max(np.max(np.abs(S.dilate(x, 1.0, u) - u)), np.max(np.abs(S.dilate(x, e, x) - x)))
        a1.append((float(r1), w))
        tiny = S.dilate(x, schedule.values()[-1], u)
        a1lim.append((float(S.distance(tiny, x)), w))
        r2 = np.max(np.abs(S.dilate(x, e, S.dilate(x, m, u)) - S.dilate(x, e * m, u)))
        a2.append((float(r2), (x.tolist(), u.tolist(), e, m)))

        wt = (x.tolist(), u.tolist(), v.tolist())
        est = tangent_distance(S, x, u, v, schedule, tol=limit_tol)
        a3.append((est.residual, wt))
        a3_status.append(est.status)
        if est.status == CONVERGED and abs(est.value) < limit_tol * (1 + float(S.distance(u, v))):
            degenerate.append(wt)
        est4 = tangent_delta(S, x, u, v, schedule, tol=limit_tol)
        a4.append((est4.residual, wt))
        a4_status.append(est4.status)

    report = Report(f"axioms[{S.name}]", info={
        "structure": S.name, "sample_count": sample_count, "radius": radius, "seed": seed,
        "schedule": [schedule.eps0, schedule.ratio, schedule.steps],
        "exact_tol": exact_tol, "limit_tol": limit_tol})
    for name, entries in (("A0", a0), ("A1", a1), ("A2", a2)):
        res, wit = _worst(entries)
        report.add(name, status_from(res, exact_tol), res, wit if res >= exact_tol else None)
    res, wit = _worst(a1lim)
    report.add("A1-limit", status_from(res, 1e3 * exact_tol), res, wit if res >= 1e3 * exact_tol else None)

    res, wit = _worst(a3)
    if degenerate:
        report.add("A3", DEGENERATE, res, degenerate[0])
    elif all(s == CONVERGED for s in a3_status):
        report.add("A3", status_from(res, limit_tol), res, wit if res >= limit_tol else None)
    else:
        bad = next(a3[i][1] for i, s in enumerate(a3_status) if s != CONVERGED)
        report.add("A3", INCONCLUSIVE if "inconclusive" in a3_status else FAIL, res, bad)

    res, wit = _worst(a4)
    if all(s == CONVERGED for s in a4_status):
        report.add("A4", status_from(res, limit_tol), res, wit if res >= limit_tol else None)
    else:
        bad = next(a4[i][1] for i, s in enumerate(a4_status) if s != CONVERGED)
        report.add("A4", INCONCLUSIVE if set(a4_status) <= {CONVERGED, "inconclusive"} else FAIL, res, bad)
    return report
