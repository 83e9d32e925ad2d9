"""Curve calculus in a dilatation structure.

Variation, upper dilatation, metric derivative, the two lengths, arc-length
reparametrization, dilatation derivatives of curves, the Radon-Nikodym probe
and the length formula ``L = int d^{c(t)}(c(t), c'(t)) dt``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import PchipInterpolator

from .core import FAIL, PASS, DilatationStructure, Report
from .limits import (INCONCLUSIVE as LIMIT_INCONCLUSIVE, EpsSchedule,
                     LimitEstimate, estimate_limit)
from .tangent import tangent_distance, tangent_inv


@dataclass
class Curve:
    """A parametrized path ``[a, b] -> X`` with vectorized evaluation.

    ``func`` maps a 1-D array of parameters to an ``(n, dim)`` array.
    ``lipschitz=False`` marks fixtures that are not Lipschitz.
    """

    a: float
    b: float
    func: Callable[[np.ndarray], np.ndarray]
    lip_bound: Optional[float] = None
    lipschitz: bool = True
    name: str = "curve"

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"curve needs a < b, got [{self.a}, {self.b}]")

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t_arr).ravel()
        span = self.b - self.a
        if np.any(flat < self.a - 1e-12 * span) or np.any(flat > self.b + 1e-12 * span):
            raise ValueError(f"parameter outside [{self.a}, {self.b}]")
        out = np.asarray(self.func(np.clip(flat, self.a, self.b)), dtype=float)
        if t_arr.ndim == 0:
            return out[0]
        return out.reshape(t_arr.shape + out.shape[-1:])


# --- fixtures ---------------------------------------------------------------

def segment(v, start=None, a: float = 0.0, b: float = 1.0, speed: float = 1.0) -> Curve:
    """``t -> start + speed * t * v``."""
    v = np.asarray(v, dtype=float)
    start = np.zeros_like(v) if start is None else np.asarray(start, dtype=float)
    return Curve(a, b, lambda t: start + speed * t[:, None] * v,
                 lip_bound=speed * float(np.linalg.norm(v)), name="segment")


def circle(radius: float = 1.0, speed: float = 1.0) -> Curve:
    """One turn of the circle of given radius at angular speed ``speed``."""
    def f(t):
        return radius * np.stack([np.cos(speed * t), np.sin(speed * t)], axis=-1)
    return Curve(0.0, 2 * math.pi / speed, f, lip_bound=radius * speed, name="circle")


def polyline(points, name: str = "polyline") -> Curve:
    """Piecewise linear through ``points``, vertex ``i`` at parameter ``i``."""
    pts = np.asarray(points, dtype=float)
    idx = np.arange(len(pts), dtype=float)

    def f(t):
        return np.stack([np.interp(t, idx, pts[:, k]) for k in range(pts.shape[1])], axis=-1)

    lip = float(np.max(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
    return Curve(0.0, float(len(pts) - 1), f, lip_bound=lip, name=name)


def corner_polyline() -> Curve:
    """Planar polyline with three corners and unequal edge speeds."""
    return polyline([(0, 0), (1, 0), (1, 2), (-1, 2), (-1, 3)], name="corner-polyline")


def from_samples(ts, points) -> Curve:
    """Linear interpolation of ``(t, coords)`` samples."""
    ts = np.asarray(ts, dtype=float)
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    order = np.argsort(ts)
    ts, pts = ts[order], pts[order]

    def f(t):
        return np.stack([np.interp(t, ts, pts[:, k]) for k in range(pts.shape[1])], axis=-1)

    return Curve(float(ts[0]), float(ts[-1]), f, name="samples")


def sign_curve() -> Curve:
    """``t -> (t, sign t)`` on ``[-1, 1]``; variation 4, path length 2."""
    return Curve(-1.0, 1.0, lambda t: np.stack([t, np.sign(t)], axis=-1),
                 lipschitz=False, name="sign")


@functools.lru_cache(maxsize=4)
def _cantor_nodes(depth: int) -> np.ndarray:
    """Values of the depth-``depth`` approximant on the grid ``k / 3**depth``."""
    nodes = np.array([0.0, 1.0])
    for _ in range(depth):
        half = 0.5 * nodes
        plateau = np.full(len(nodes) - 2, 0.5)
        nodes = np.concatenate([half, plateau, 0.5 + half])
    nodes.setflags(write=False)
    return nodes


def cantor_function(t, depth: int = 12) -> np.ndarray:
    """Depth-``depth`` piecewise linear approximant of the Cantor function.

    It is linear on each interval of the triadic grid of step ``3**-depth``
    and equals the Cantor function at the grid points.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    nodes = _cantor_nodes(int(depth))
    grid = np.linspace(0.0, 1.0, len(nodes))
    return np.interp(np.asarray(t, dtype=float), grid, nodes)


def cantor_staircase(depth: int = 12) -> Curve:
    """The Cantor approximant as a curve into the line."""
    return Curve(0.0, 1.0, lambda t: cantor_function(t, depth)[:, None],
                 lipschitz=False, name=f"cantor:{depth}")


def cantor_graph(depth: int = 12) -> Curve:
    """``t -> (t, cantor(t))``."""
    return Curve(0.0, 1.0, lambda t: np.stack([t, cantor_function(t, depth)], axis=-1),
                 lipschitz=False, name=f"cantor-graph:{depth}")


def heisenberg_line() -> Curve:
    return Curve(-1.0, 1.0, lambda t: np.stack([t, 0 * t, 0 * t], axis=-1),
                 lip_bound=1.0, name="heisenberg-line")


def heisenberg_circle_lift() -> Curve:
    """Horizontal lift ``(cos t, sin t, t/2)`` of the unit circle."""
    return Curve(0.0, 2 * math.pi,
                 lambda t: np.stack([np.cos(t), np.sin(t), 0.5 * t], axis=-1),
                 lip_bound=1.0, name="heisenberg-circle")


def vertical_segment() -> Curve:
    """``t -> (0, 0, t)``; not Lipschitz for the gauge distance."""
    return Curve(0.0, 1.0, lambda t: np.stack([0 * t, 0 * t, t], axis=-1),
                 lipschitz=False, name="vertical")


CURVES = {
    "segment": lambda dim: segment(np.eye(dim)[0], start=-np.eye(dim)[0], a=0.0, b=2.0),
    "circle": lambda dim: circle(),
    "polyline": lambda dim: corner_polyline(),
    "sign": lambda dim: sign_curve(),
    "cantor": lambda dim: cantor_staircase(),
    "cantor-graph": lambda dim: cantor_graph(),
    "heisenberg-line": lambda dim: heisenberg_line(),
    "heisenberg-circle": lambda dim: heisenberg_circle_lift(),
    "vertical": lambda dim: vertical_segment(),
}


def make_curve(name: str, dim: int = 2) -> Curve:
    """Fixture by name, or a CSV file of ``t, coords...`` rows."""
    if name in CURVES:
        return CURVES[name](dim)
    if name.endswith(".csv"):
        data = np.loadtxt(name, delimiter=",", ndmin=2, comments="#")
        return from_samples(data[:, 0], data[:, 1:])
    raise ValueError(f"unknown curve {name!r}")


# --- variation and lengths --------------------------------------------------

@dataclass
class Variation:
    value: float
    exact: bool
    depth: int
    levels: list = field(default_factory=list)

    def __float__(self):
        return self.value


def _partition_sum(c: Curve, S: DilatationStructure, n: int) -> float:
    pts = c(np.linspace(c.a, c.b, n + 1))
    return float(np.sum(S.distance(pts[:-1], pts[1:])))


def variation_details(c: Curve, S: DilatationStructure, refine_tol: float = 1e-9,
                      max_depth: int = 20, min_depth: int = 4) -> Variation:
    """Partition sums over dyadic partitions, refined until they settle.

    Each level doubles the partition, so sums are nondecreasing.  Refinement
    stops once the increase is below ``refine_tol`` (relative to the value);
    reaching ``max_depth`` first leaves a lower bound flagged inexact.
    """
    levels = [_partition_sum(c, S, 1)]
    for depth in range(1, max_depth + 1):
        levels.append(max(levels[-1], _partition_sum(c, S, 2 ** depth)))
        if depth >= min_depth and levels[-1] - levels[-2] < refine_tol * max(1.0, levels[-1]):
            return Variation(levels[-1], True, depth, levels)
    return Variation(levels[-1], False, max_depth, levels)


def variation(c: Curve, S: DilatationStructure, refine_tol: float = 1e-9,
              max_depth: int = 20) -> float:
    return variation_details(c, S, refine_tol, max_depth).value


def _window_sups(c: Curve, S, ts: np.ndarray, window: float, pairs: int, scales: int,
                 q: float) -> np.ndarray:
    """Sup of difference quotients over consecutive nodes, per node and window."""
    radii = window * q ** np.arange(scales)
    lo = np.maximum(c.a, ts[:, None] - radii[None, :])
    hi = np.minimum(c.b, ts[:, None] + radii[None, :])
    frac = np.linspace(0.0, 1.0, pairs + 1)
    nodes = lo[..., None] + (hi - lo)[..., None] * frac
    pts = c(nodes.ravel()).reshape(nodes.shape + (-1,))
    dist = S.distance(pts[..., :-1, :], pts[..., 1:, :])
    step = np.diff(nodes, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(step > 0, dist / step, 0.0)
    return np.max(ratio, axis=-1)


def _limsup(sups: np.ndarray) -> np.ndarray:
    growing = np.all(sups[:, 1:] >= 1.3 * sups[:, :-1], axis=1) & (sups[:, -1] > 0)
    return np.where(growing, math.inf, np.min(sups, axis=1))


def upper_dilatation(c: Curve, t: float, S: DilatationStructure, window: Optional[float] = None,
                     pairs: int = 16, scales: int = 6, q: float = 0.5) -> float:
    """``Lip(c)(t)``: limsup of ``d(c(v), c(w)) / |v - w|`` for ``v, w`` near ``t``.

    Sups over ``pairs`` consecutive node pairs in windows shrinking by ``q``;
    the limsup is the smallest window sup.  Sups growing by 30% or more at
    every shrink signal an unbounded quotient and give ``inf``.
    """
    window = 1e-2 * (c.b - c.a) if window is None else window
    sups = _window_sups(c, S, np.array([float(t)]), window, pairs, scales, q)
    return float(_limsup(sups)[0])


def upper_dilatations(c: Curve, ts, S, window: Optional[float] = None, pairs: int = 16,
                      scales: int = 6, q: float = 0.5) -> np.ndarray:
    window = 1e-2 * (c.b - c.a) if window is None else window
    return _limsup(_window_sups(c, S, np.asarray(ts, dtype=float), window, pairs, scales, q))


def length_via_dilatation(c: Curve, S: DilatationStructure, quad_points: int = 1024) -> float:
    """``L(c) = int_a^b Lip(c)(t) dt`` by composite Simpson.

    A curve marked non-Lipschitz is measured by its variation instead; for
    such curves the two lengths need not agree and only the variation is
    meaningful.
    """
    if not c.lipschitz:
        return variation(c, S)
    ts = np.linspace(c.a, c.b, quad_points + 1)
    lip = np.concatenate([upper_dilatations(c, chunk, S) for chunk in np.array_split(ts, 8)])
    if not np.all(np.isfinite(lip)):
        bad = ts[~np.isfinite(lip)][0]
        raise ValueError(f"upper dilatation is unbounded at t={bad:g}; curve is not Lipschitz")
    return float(simpson(lip, x=ts))


def hausdorff_length_estimate(c: Curve, S: DilatationStructure, mesh: Optional[float] = None,
                              sub: int = 2) -> float:
    """Sum of diameters of the images of a uniform partition with the given mesh.

    Each piece is sampled at ``sub + 1`` points.  A step longer than
    ``sqrt(mesh)`` counts as a jump and splits the piece image into separate
    cover sets.  For injective Lipschitz curves the estimate tends to the
    variation.
    """
    mesh = (c.b - c.a) / 2 ** 16 if mesh is None else mesh
    n = max(1, int(math.ceil((c.b - c.a) / mesh - 1e-9)))
    t = np.linspace(c.a, c.b, n * sub + 1)
    pts = c(t)
    idx = np.arange(n)[:, None] * sub + np.arange(sub + 1)[None, :]
    piece = pts[idx]
    steps = S.distance(piece[:, :-1], piece[:, 1:])
    jumps = np.concatenate([np.zeros((n, 1)), np.cumsum(steps > math.sqrt(mesh), axis=1)], axis=1)
    best = np.zeros(n)
    for i in range(sub + 1):
        for j in range(i + 1, sub + 1):
            ok = jumps[:, i] == jumps[:, j]
            d = S.distance(piece[:, i], piece[:, j])
            best = np.maximum(best, np.where(ok, d, 0.0))
    return float(np.sum(best))


# --- derivatives along curves ----------------------------------------------

def _inner_schedule(c: Curve, t: float, schedule: Optional[EpsSchedule]) -> EpsSchedule:
    schedule = schedule or EpsSchedule()
    room = min(t - c.a, c.b - t)
    if room <= 0:
        raise ValueError("parameter must be interior")
    return schedule.scaled(min(1.0, 0.5 * room / schedule.eps0))


def metric_derivative(c: Curve, t: float, S: DilatationStructure,
                      schedule: Optional[EpsSchedule] = None, tol: float = 1e-6) -> LimitEstimate:
    """``md(c)(t) = lim d(c(s), c(t)) / |s - t|``, both sides.

    The two one-sided limits must agree within ``tol``, otherwise the
    forward estimate is returned with status ``inconclusive``.
    """
    sch = _inner_schedule(c, t, schedule)
    ct = c(t)
    fwd = estimate_limit(lambda es: S.distance(c(t + es), ct) / es, None, sch, tol, batch=True)
    bwd = estimate_limit(lambda es: S.distance(c(t - es), ct) / es, None, sch, tol, batch=True)
    if fwd.converged and bwd.converged and abs(fwd.value - bwd.value) < tol:
        fwd.value = 0.5 * (fwd.value + bwd.value)
        return fwd
    if fwd.converged:
        fwd.status = LIMIT_INCONCLUSIVE
    return fwd


@dataclass
class DerivabilityResult:
    t: float
    forward: LimitEstimate
    backward: LimitEstimate
    derivable: bool
    mismatch: float = math.nan

    @property
    def velocity(self):
        return self.forward.value


def derivative_at(c: Curve, t: float, S: DilatationStructure,
                  schedule: Optional[EpsSchedule] = None, tol: float = 1e-6,
                  match_tol: float = 1e-5) -> DerivabilityResult:
    """Dilatation derivative of ``c`` at ``t``.

    The forward candidate is ``delta^{c(t)}_{1/eps} c(t + eps)``, the
    backward one uses ``c(t - eps)`` and must match ``inv^{c(t)}`` of the
    forward limit within ``match_tol``.
    """
    sch = _inner_schedule(c, t, schedule)
    ct = c(t)
    fwd = estimate_limit(lambda es: S.dilate_many(ct, 1.0 / es, c(t + es)), None, sch, tol,
                         batch=True)
    bwd = estimate_limit(lambda es: S.dilate_many(ct, 1.0 / es, c(t - es)), None, sch, tol,
                         batch=True)
    if not (fwd.converged and bwd.converged):
        return DerivabilityResult(float(t), fwd, bwd, False)
    inv = tangent_inv(S, ct, fwd.value, schedule, tol)
    mismatch = float(np.max(np.abs(inv.value - bwd.value)))
    return DerivabilityResult(float(t), fwd, bwd, inv.converged and mismatch < match_tol, mismatch)


def reparametrize_arclength(c: Curve, S: DilatationStructure, n: int = 2 ** 14) -> Curve:
    """Reparametrize ``c`` by arc length on ``[0, L]``.

    The cumulative variation is sampled on ``n`` pieces, refined by one
    Richardson step against the ``n/2`` sums (chord defects are quadratic in
    the step), then inverted by monotone cubic interpolation.
    """
    ts = np.linspace(c.a, c.b, n + 1)
    pts = c(ts)
    fine = np.asarray(S.distance(pts[:-1], pts[1:]))
    coarse = np.asarray(S.distance(pts[:-2:2], pts[2::2]))
    pair = fine[0::2] + fine[1::2]
    step = (4.0 * pair - coarse) / 3.0
    s_even = np.concatenate([[0.0], np.cumsum(step)])
    s = np.empty(n + 1)
    s[0::2] = s_even
    s[1::2] = s_even[:-1] + fine[0::2] * np.where(pair > 0, step / np.where(pair > 0, pair, 1), 0)
    length = float(s[-1])
    if not length > 0:
        raise ValueError("cannot reparametrize a curve of zero length")
    keep = np.concatenate([[True], np.diff(s) > 0])
    inverse = PchipInterpolator(s[keep], ts[keep])
    return Curve(0.0, length, lambda u: c(np.clip(inverse(u), c.a, c.b)),
                 lip_bound=1.0, lipschitz=c.lipschitz, name=f"{c.name}/arclength")


def rn_probe(S: DilatationStructure, c: Curve, t_samples: int = 100,
             schedule: Optional[EpsSchedule] = None, seed: int = 0,
             threshold: float = 0.95, reparametrize: bool = True) -> Report:
    """Fraction of sampled parameters where the curve is derivable.

    The curve is first reparametrized by arc length; parameters are drawn
    uniformly from the interior.
    """
    cc = reparametrize_arclength(c, S) if reparametrize else c
    rng = np.random.default_rng(seed)
    span = cc.b - cc.a
    ts = np.sort(cc.a + span * (0.005 + 0.99 * rng.random(t_samples)))
    results = [derivative_at(cc, float(t), S, schedule) for t in ts]
    ok = [r.derivable for r in results]
    frac = float(np.mean(ok))
    statuses: dict = {}
    for r in results:
        key = f"{r.forward.status}/{r.backward.status}"
        statuses[key] = statuses.get(key, 0) + 1
    failures = [r.t for r in results if not r.derivable]
    report = Report(f"rn-probe[{S.name}, {c.name}]", info={
        "fraction": frac, "statuses": statuses, "failures": failures,
        "failure_measure": len(failures) / t_samples * span, "length": span})
    report.add("derivable-fraction", PASS if frac >= threshold else FAIL, 1.0 - frac,
               None if frac >= threshold else (failures[0] if failures else None),
               fraction=frac)
    report.results = results
    return report


def length_formula_check(S: DilatationStructure, c: Curve, quad_points: int = 1024,
                         schedule: Optional[EpsSchedule] = None, rel_tol: float = 1e-3,
                         min_fraction: float = 0.95) -> Report:
    """Compare the variation with ``int d^{c(t)}(c(t), c'(t)) dt``.

    The integrand is evaluated at Simpson nodes from the forward derivative
    (backward at the right endpoint).  Refuses, with a failing report, when
    fewer than ``min_fraction`` of interior nodes are derivable.
    """
    lhs = variation(c, S)
    ts = np.linspace(c.a, c.b, quad_points + 1)
    sch = schedule or EpsSchedule()
    integrand = np.empty_like(ts)
    derivable = []
    for i, t in enumerate(ts):
        if 0 < i < quad_points:
            res = derivative_at(c, float(t), S, sch)
            derivable.append(res.derivable)
            vel = res.forward.value
        else:
            inward = c.b - t if i == 0 else c.a - t
            step = np.sign(inward) * min(sch.eps0, 0.5 * (c.b - c.a))
            ct = c(t)
            est = estimate_limit(
                lambda es: S.dilate_many(ct, 1.0 / es, c(t + np.sign(inward) * es)),
                None, sch.scaled(abs(step) / sch.eps0), batch=True)
            vel = est.value
        integrand[i] = float(tangent_distance(S, c(t), c(t), vel, sch).value)
    frac = float(np.mean(derivable)) if derivable else 0.0
    report = Report(f"length-formula[{S.name}, {c.name}]")
    if frac < min_fraction:
        report.info.update(lhs=lhs, rhs=math.nan, rel_err=math.nan, fraction=frac)
        report.add("derivability", FAIL, 1.0 - frac, frac)
        return report
    rhs = float(simpson(integrand, x=ts))
    rel = abs(lhs - rhs) / max(abs(lhs), 1e-300)
    report.info.update(lhs=lhs, rhs=rhs, rel_err=rel, fraction=frac)
    report.add("derivability", PASS, 1.0 - frac)
    report.add("length-formula", PASS if rel < rel_tol else FAIL, rel,
               None if rel < rel_tol else (lhs, rhs))
    return report
