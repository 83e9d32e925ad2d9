"""Tangent spaces of a dilatation structure.

At a base point ``x`` the rescaled distances converge to the tangent
distance ``d^x`` and the finite-scale operator

    Delta^x_eps(u, v) = delta^{delta^x_eps u}_{1/eps} delta^x_eps v

converges to ``Delta^x(u, v)``.  Tangent objects are encoded as points near
``x``.  The tangent group operation is the limit of the approximate sum

    Sigma^x_eps(u, v) = delta^x_{1/eps} delta^{delta^x_eps u}_eps v

with neutral element ``x`` and inverse ``inv^x(u) = Delta^x(u, x)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (DilatationStructure, FAIL, INCONCLUSIVE, LIMIT_TOL, PASS, Report,
                   as_point, sample_ball)
from .limits import (CONVERGED, EpsSchedule, LimitEstimate, check_scale, estimate_limit,
                     tends_to_zero)


@dataclass
class TangentVector:
    base: np.ndarray
    rep: np.ndarray
    magnitude: float


def rescaled_distance(S: DilatationStructure, x, eps, u, v) -> float:
    eps = check_scale(eps)
    return float(S.distance(S.dilate(x, eps, u), S.dilate(x, eps, v))) / eps


def tangent_distance(S, x, u, v, schedule: Optional[EpsSchedule] = None,
                     tol: float = LIMIT_TOL) -> LimitEstimate:
    """``d^x(u, v)`` as the limit of rescaled distances."""
    x, u, v = (as_point(p, S.dim) for p in (x, u, v))
    def trace(es):
        return S.distance(S.dilate_many(x, es, u), S.dilate_many(x, es, v)) / es
    return estimate_limit(trace, None, schedule, tol, batch=True)


def tangent_vector(S, x, u, schedule=None) -> TangentVector:
    est = tangent_distance(S, x, x, u, schedule)
    return TangentVector(as_point(x, S.dim), as_point(u, S.dim), float(est.value))


def delta_op(S, x, eps, u, v) -> np.ndarray:
    """Finite-scale operator ``Delta^x_eps(u, v)``, for ``0 < eps <= 1``."""
    eps = check_scale(eps)
    if eps > 1:
        raise ValueError("delta_op needs eps in (0, 1]")
    return S.dilate(S.dilate(x, eps, u), 1.0 / eps, S.dilate(x, eps, v))


def approx_sum(S, x, eps, u, v) -> np.ndarray:
    """Approximate tangent sum ``Sigma^x_eps(u, v)``."""
    eps = check_scale(eps)
    return S.dilate(x, 1.0 / eps, S.dilate(S.dilate(x, eps, u), eps, v))


def tangent_delta(S, x, u, v, schedule=None, tol: float = LIMIT_TOL) -> LimitEstimate:
    """``Delta^x(u, v) = lim Delta^x_eps(u, v)``; non-convergence means A4 fails.

    Euclidean: ``x + v - u``.  Heisenberg: ``x u^-1 v``.
    """
    x, u, v = (as_point(p, S.dim) for p in (x, u, v))
    def trace(es):
        return S.dilate_many(S.dilate_many(x, es, u), 1.0 / es, S.dilate_many(x, es, v))
    return estimate_limit(trace, None, schedule, tol, batch=True)


def tangent_sum(S, x, u, v, schedule=None, tol: float = LIMIT_TOL) -> LimitEstimate:
    """Tangent group operation ``Sigma^x(u, v)``; neutral element ``x``."""
    x, u, v = (as_point(p, S.dim) for p in (x, u, v))
    def trace(es):
        return S.dilate_many(x, 1.0 / es, S.dilate_many(S.dilate_many(x, es, u), es, v))
    return estimate_limit(trace, None, schedule, tol, batch=True)


def tangent_inv(S, x, u, schedule=None, tol: float = LIMIT_TOL) -> LimitEstimate:
    """``inv^x(u) = Delta^x(u, x)``."""
    return tangent_delta(S, x, u, x, schedule, tol)


class TangentGroup:
    """The conical group ``(U(x), Sigma^x, delta^x)`` with distance ``d^x``.

    Every operation is a limit estimate; ``strict`` makes a non-converged
    estimate raise instead of returning its best value.
    """

    def __init__(self, S: DilatationStructure, x, schedule: Optional[EpsSchedule] = None,
                 tol: float = LIMIT_TOL, strict: bool = False):
        self.S = S
        self.x = as_point(x, S.dim)
        self.schedule = schedule or EpsSchedule()
        self.tol = tol
        self.strict = strict
        self.estimates: list[LimitEstimate] = []

    def _take(self, est: LimitEstimate):
        self.estimates.append(est)
        if self.strict and est.status != CONVERGED:
            raise ArithmeticError(f"tangent limit {est.status}")
        return est.value

    @property
    def all_converged(self) -> bool:
        return all(e.status == CONVERGED for e in self.estimates)

    @property
    def neutral(self) -> np.ndarray:
        return self.x

    def op(self, u, v):
        return self._take(tangent_sum(self.S, self.x, u, v, self.schedule, self.tol))

    def inv(self, u):
        return self._take(tangent_inv(self.S, self.x, u, self.schedule, self.tol))

    def delta(self, u, v):
        return self._take(tangent_delta(self.S, self.x, u, v, self.schedule, self.tol))

    def dilate(self, eps, u):
        return self.S.dilate(self.x, eps, u)

    def distance(self, u, v) -> float:
        return float(self._take(tangent_distance(self.S, self.x, u, v, self.schedule, self.tol)))


def check_cone_property(S, x, u, v, mus: Sequence[float] = (0.25, 0.5, 1.0, 1.5),
                        schedule=None, tol: float = LIMIT_TOL) -> Report:
    """``d^x(u, v) = d^x(delta_mu u, delta_mu v) / mu`` for ``mu`` in ``(0, A)``."""
    T = TangentGroup(S, x, schedule, tol)
    report = Report(f"cone[{S.name}]")
    base = T.distance(u, v)
    for mu in mus:
        if not 0 < mu < S.A:
            raise ValueError(f"mu must lie in (0, {S.A})")
        other = T.distance(T.dilate(mu, u), T.dilate(mu, v)) / mu
        res = abs(other - base)
        report.add(f"mu={mu:g}", PASS if res < tol and T.all_converged else FAIL, res,
                   None if res < tol else (list(np.ravel(u)), list(np.ravel(v)), mu))
    return report


def check_left_invariance(S, x, samples: int = 10, seed: int = 0, schedule=None,
                          tol: float = LIMIT_TOL, radius: Optional[float] = None) -> Report:
    """``d^x(Sigma^x(w, u), Sigma^x(w, v)) = d^x(u, v)`` on sampled ``w, u, v``."""
    T = TangentGroup(S, x, schedule, tol)
    rng = np.random.default_rng(seed)
    radius = 0.5 * S.A if radius is None else radius
    pts = sample_ball(rng, T.x, radius, 3 * samples).reshape(samples, 3, S.dim)
    report = Report(f"left-invariance[{S.name}]")
    for i, (w, u, v) in enumerate(pts):
        res = abs(T.distance(T.op(w, u), T.op(w, v)) - T.distance(u, v))
        ok = res < tol and T.all_converged
        report.add(f"sample-{i}", PASS if ok else FAIL, res,
                   None if ok else (w.tolist(), u.tolist(), v.tolist()))
    return report


def _points_at_scale(S, x, cand, eps: float, iters: int = 80) -> np.ndarray:
    """``delta^x_s c`` with ``d(x, delta^x_s c) = eps * d(x, c)``, by bisection in ``log s``."""
    target = eps * np.asarray(S.distance(x, cand), dtype=float)
    lo = np.full(len(cand), math.log(eps) * 4 - 10)
    hi = np.zeros(len(cand))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        d = np.asarray(S.distance(x, S.dilate_many(x, np.exp(mid), cand)))
        big = d > target
        hi = np.where(big, mid, hi)
        lo = np.where(big, lo, mid)
    s = np.exp(0.5 * (lo + hi))
    # exact homogeneity: keep s = eps where it already hits the target
    direct = np.asarray(S.distance(x, S.dilate_many(x, np.full(len(cand), eps), cand)))
    s = np.where(np.abs(direct - target) <= 1e-12 * np.maximum(target, 1e-300), eps, s)
    return S.dilate_many(x, s, cand)


def check_metric_tangent(S, x, schedule=None, pairs: int = 8, probes: int = 8,
                         seed: int = 0, tol: float = LIMIT_TOL) -> Report:
    """Trend of ``sup |d(u,v) - d^x(u,v)| / eps`` over ``d(x,u), d(x,v) <= eps``.

    Each point ``c`` of the unit ball is moved along its dilatation orbit
    ``delta^x_s c`` to distance ``eps * d(x, c)`` from ``x`` (``s`` found by
    bisection), so the probe does not assume ``delta^x_eps`` shrinks
    distances by exactly ``eps``.
    """
    x = as_point(x, S.dim)
    rng = np.random.default_rng(seed)
    cand = sample_ball(rng, x, 1.0, 4 * pairs)
    cand = cand[np.asarray(S.distance(x, cand)) <= 1.0]
    if len(cand) < 2:
        cand = np.stack([x, x])
    trace = []
    for j in range(1, probes + 1):
        eps = 0.5 ** j
        pts = _points_at_scale(S, x, cand, eps)
        pts = pts[np.asarray(S.distance(x, pts)) <= eps * (1 + 1e-9)]
        worst = 0.0
        for a, b in itertools.islice(itertools.combinations(range(len(pts)), 2), pairs):
            est = tangent_distance(S, x, pts[a], pts[b], schedule, tol)
            worst = max(worst, abs(float(S.distance(pts[a], pts[b])) - float(est.value)) / eps)
        trace.append((eps, worst))
    report = Report(f"metric-tangent[{S.name}]", info={"trace": trace})
    values = [w for _, w in trace]
    peak = max(values)
    if peak < tol:
        status = PASS
    elif values[-1] <= 1e-2 * values[0] and all(b <= a * (1 + 1e-6) for a, b in zip(values, values[1:])):
        status = PASS
    else:
        status = FAIL
    report.add("sup-trend", status, peak, None if status == PASS else trace[-1])
    return report


def one_param_membership(T: TangentGroup, u, alphas: Sequence[float] = (0.25, 0.5, 1.0),
                         tol: float = 1e-8) -> Report:
    """Is ``eps -> delta_eps u`` a semigroup morphism of ``((0, inf), +)``?

    Checks ``delta_{a+b} u = Sigma(delta_a u, delta_b u)`` over all pairs from
    ``alphas``; one violation makes ``u`` a non-member.
    """
    u = as_point(u, T.S.dim)
    report = Report("one-parameter-membership")
    worst, wit = 0.0, None
    for a, b in itertools.combinations_with_replacement(alphas, 2):
        lhs = T.dilate(a + b, u)
        rhs = T.op(T.dilate(a, u), T.dilate(b, u))
        res = float(np.max(np.abs(lhs - rhs)))
        if res > worst:
            worst, wit = res, (a, b)
    if not T.all_converged:
        report.add("member", INCONCLUSIVE, worst, u.tolist())
    else:
        report.add("member", PASS if worst < tol else FAIL, worst,
                   None if worst < tol else (u.tolist(), wit))
    return report
