"""Derivatives of maps between dilatation structures.

The derivative of ``f : (X, delta) -> (Y, bar delta)`` at ``x`` is estimated
pointwise as the limit of ``bar delta^{f(x)}_{1/eps} f(delta^x_eps u)``.
Derivatives are kept extensional: a map from probe points to limit
estimates, never a coefficient matrix.
"""

from __future__ import annotations

import ast
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import (FAIL, INCONCLUSIVE, LIMIT_TOL, PASS, DilatationStructure, Report,
                   as_point, audit_axioms, sample_ball)
from .limits import CONVERGED, EpsSchedule, LimitEstimate, estimate_limit
from .structures import graded_dilation
from .tangent import TangentGroup

Point = np.ndarray


@dataclass
class StructureMap:
    """A map ``source -> target`` evaluated on arrays of points."""

    source: DilatationStructure
    target: DilatationStructure
    eval: Callable[[np.ndarray], np.ndarray]
    inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "map"

    def __call__(self, p) -> np.ndarray:
        return np.asarray(self.eval(as_point(p, self.source.dim)), dtype=float)

    def inv(self, p) -> np.ndarray:
        if self.inverse is None:
            raise ValueError(f"map {self.name!r} has no inverse")
        return np.asarray(self.inverse(as_point(p, self.target.dim)), dtype=float)

    def inverted(self) -> "StructureMap":
        if self.inverse is None:
            raise ValueError(f"map {self.name!r} has no inverse")
        return StructureMap(self.target, self.source, self.inverse, self.eval, f"{self.name}^-1")

    def then(self, other: "StructureMap") -> "StructureMap":
        """``other`` after ``self``."""
        inv = None
        if self.inverse is not None and other.inverse is not None:
            inv = lambda p: self.inverse(other.inverse(p))
        return StructureMap(self.source, other.target, lambda p: other.eval(self.eval(p)), inv,
                            f"{other.name}.{self.name}")

    def roundtrip_error(self, points) -> float:
        pts = as_point(points, self.source.dim)
        return float(np.max(np.abs(self.inv(self(pts)) - pts)))


# --- registered maps --------------------------------------------------------

def _complex(fn):
    def wrapped(p):
        p = np.asarray(p, dtype=float)
        w = fn(p[..., 0] + 1j * p[..., 1])
        return np.stack([w.real, w.imag], axis=-1)
    return wrapped


def _cubeplus_inverse(y, iters: int = 100):
    y = np.asarray(y, dtype=float)
    w = np.where(np.abs(y) < 1, y, np.cbrt(y))
    for _ in range(iters):
        step = (w + w ** 3 - y) / (1 + 3 * w * w)
        w = w - step
        if np.max(np.abs(step), initial=0.0) < 1e-15:
            break
    return w


def _need_dim(S, dim, name):
    if S.dim != dim:
        raise ValueError(f"map {name!r} needs a {dim}-dimensional structure, got {S.name}")


def make_map(name: str, S: DilatationStructure, T: Optional[DilatationStructure] = None) -> StructureMap:
    """Registered endomaps by name.

    ``identity``, ``square``, ``cube``, ``conjugate`` (complex maps on the
    plane), ``affine:<matrix>[+<vector>]``, ``hgraded:<lambda>``,
    ``cubeplus`` (``w + w^3`` componentwise) and ``quadratic``
    (``w + w^2`` componentwise).
    """
    T = T or S
    name = name.strip()
    if name == "identity":
        return StructureMap(S, T, lambda p: np.array(p, dtype=float), lambda p: np.array(p, dtype=float), name)
    if name in ("square", "cube", "conjugate"):
        _need_dim(S, 2, name)
        if name == "square":
            return StructureMap(S, T, _complex(lambda w: w * w), None, name)
        if name == "cube":
            return StructureMap(S, T, _complex(lambda w: w ** 3), None, name)
        conj = _complex(np.conj)
        return StructureMap(S, T, conj, conj, name)
    if name == "cubeplus":
        return StructureMap(S, T, lambda p: p + p ** 3, _cubeplus_inverse, name)
    if name == "quadratic":
        return StructureMap(S, T, lambda p: p + p * p, None, name)
    m = re.fullmatch(r"hgraded:(.+)", name)
    if m:
        _need_dim(S, 3, name)
        try:
            lam = float(m.group(1))
        except ValueError:
            raise ValueError(f"malformed scale in map name {name!r}") from None
        if lam == 0 or not math.isfinite(lam):
            raise ValueError("hgraded needs a finite nonzero scale")
        return StructureMap(S, T, lambda p: graded_dilation(lam, p),
                            lambda p: graded_dilation(1.0 / lam, p), name)
    m = re.fullmatch(r"affine:([^+]+?)(?:\+(.+))?", name)
    if m:
        try:
            M = np.array(ast.literal_eval(m.group(1)), dtype=float)
            b = np.array(ast.literal_eval(m.group(2)), dtype=float) if m.group(2) else np.zeros(S.dim)
        except (ValueError, SyntaxError):
            raise ValueError(f"malformed matrix literal in map name {name!r}") from None
        return affine_map(S, M, b, T, name)
    raise ValueError(f"unknown map {name!r}")


def affine_map(S, M, b=None, T=None, name: str = "affine") -> StructureMap:
    M = np.asarray(M, dtype=float)
    b = np.zeros(S.dim) if b is None else np.asarray(b, dtype=float)
    if M.shape != (S.dim, S.dim) or b.shape != (S.dim,):
        raise ValueError(f"affine map needs a {S.dim}x{S.dim} matrix and a {S.dim}-vector")
    inv = None
    if abs(np.linalg.det(M)) > 1e-12:
        Minv = np.linalg.inv(M)
        inv = lambda p: (np.asarray(p, dtype=float) - b) @ Minv.T
    return StructureMap(S, T or S, lambda p: np.asarray(p, dtype=float) @ M.T + b, inv, name)


# --- derivatives -------------------------------------------------------------

def pansu_derivative(F: StructureMap, x, u, schedule: Optional[EpsSchedule] = None,
                     tol: float = LIMIT_TOL) -> LimitEstimate:
    """``Q^x(u) = lim bar delta^{f(x)}_{1/eps} f(delta^x_eps u)``."""
    S, T = F.source, F.target
    x = as_point(x, S.dim)
    u = as_point(u, S.dim)
    fx = F(x)

    def trace(es):
        return T.dilate_many(fx, 1.0 / es, F.eval(S.dilate_many(x, es, u)))

    return estimate_limit(trace, None, schedule, tol, batch=True)


def resubstitution_residual(F: StructureMap, x, u, q, eps: float) -> float:
    """``(1/eps) bar d(f(delta^x_eps u), bar delta^{f(x)}_eps q)`` at one scale."""
    S, T = F.source, F.target
    lhs = F(S.dilate(x, eps, u))
    rhs = T.dilate(F(x), eps, q)
    return float(T.distance(lhs, rhs)) / eps


@dataclass
class DerivativeEstimate:
    """``Df(x)`` as a map from probe points to limit estimates."""

    F: StructureMap
    x: np.ndarray
    schedule: EpsSchedule = field(default_factory=EpsSchedule)
    tol: float = LIMIT_TOL
    morphism_report: Optional[Report] = None

    def apply(self, u, schedule: Optional[EpsSchedule] = None) -> LimitEstimate:
        return pansu_derivative(self.F, self.x, u, schedule or self.schedule, self.tol)

    def __call__(self, u):
        est = self.apply(u)
        if est.status != CONVERGED:
            raise ArithmeticError(f"derivative at {self.x.tolist()} is {est.status} for u={np.ravel(u).tolist()}")
        return est.value


def derivative(F: StructureMap, x, schedule: Optional[EpsSchedule] = None,
               tol: float = LIMIT_TOL) -> DerivativeEstimate:
    return DerivativeEstimate(F, as_point(x, F.source.dim), schedule or EpsSchedule(), tol)


def _probe_points(rng, x, radius, n):
    return sample_ball(rng, x, radius, n)


def derivative_probe(F: StructureMap, samples: int = 20, radius: float = 1.0,
                     spread: float = 0.5, schedule: Optional[EpsSchedule] = None,
                     seed: int = 0, tol: float = LIMIT_TOL) -> Report:
    """Run ``pansu_derivative`` at seeded ``(x, u)`` probes and tally statuses.

    The largest residual over converged probes is the grid spot-check of
    uniform differentiability.
    """
    rng = np.random.default_rng(seed)
    dim = F.source.dim
    xs = sample_ball(rng, np.zeros(dim), radius, samples)
    us = xs + sample_ball(rng, np.zeros(dim), spread, samples)
    statuses: dict = {}
    worst = 0.0
    witness = None
    for x, u in zip(xs, us):
        est = pansu_derivative(F, x, u, schedule, tol)
        statuses[est.status] = statuses.get(est.status, 0) + 1
        if est.converged:
            worst = max(worst, est.residual)
        elif witness is None:
            witness = (x.tolist(), u.tolist(), est.status)
    frac = statuses.get(CONVERGED, 0) / samples
    report = Report(f"derivative[{F.name} on {F.source.name}]", info={
        "statuses": statuses, "converged_fraction": frac,
        "oscillating_fraction": statuses.get("oscillating", 0) / samples,
        "uniform_residual": worst})
    report.add("differentiable", PASS if frac == 1.0 else FAIL, worst, witness)
    return report


def _value(Q, u):
    if isinstance(Q, DerivativeEstimate):
        est = Q.apply(u)
        return est.value, est.status == CONVERGED
    return np.asarray(Q(u), dtype=float), True


def check_conical_morphism(Q, source: TangentGroup, target: TangentGroup, samples: int = 10,
                           seed: int = 0, tol: float = LIMIT_TOL, radius: float = 0.5,
                           scales=(0.25, 0.5, 1.0)) -> Report:
    """Homogeneity ``Q(delta_eps u) = bar delta_eps Q(u)`` and additivity over Sigma.

    ``Q`` is a ``DerivativeEstimate`` or any callable on points; ``source``
    and ``target`` are the tangent groups at ``x`` and ``f(x)``.
    """
    rng = np.random.default_rng(seed)
    pts = sample_ball(rng, source.x, radius, 2 * samples).reshape(samples, 2, source.S.dim)
    hom, add = [], []
    converged = True
    for u, v in pts:
        qu, ok_u = _value(Q, u)
        qv, ok_v = _value(Q, v)
        converged &= ok_u and ok_v
        for eps in scales:
            lhs, ok = _value(Q, source.dilate(eps, u))
            converged &= ok
            hom.append((float(np.max(np.abs(lhs - target.dilate(eps, qu)))), (u.tolist(), eps)))
        lhs, ok = _value(Q, source.op(u, v))
        converged &= ok
        rhs = target.op(qu, qv)
        add.append((float(np.max(np.abs(lhs - rhs))), (u.tolist(), v.tolist())))
    converged &= source.all_converged and target.all_converged
    report = Report("conical-morphism")
    for name, entries in (("homogeneity", hom), ("additivity", add)):
        res, wit = max(entries, key=lambda e: e[0])
        if not converged:
            report.add(name, INCONCLUSIVE, res, wit)
        else:
            report.add(name, PASS if res < tol else FAIL, res, None if res < tol else wit)
    return report


def chain_rule_check(F: StructureMap, G: StructureMap, x, samples: int = 10,
                     schedule: Optional[EpsSchedule] = None, seed: int = 0,
                     tol: float = LIMIT_TOL, radius: float = 0.5) -> Report:
    """Compare ``D(g f)(x) u`` with ``Dg(f(x)) Df(x) u`` on sampled ``u``."""
    x = as_point(x, F.source.dim)
    fx = F(x)
    GF = F.then(G)
    rng = np.random.default_rng(seed)
    us = sample_ball(rng, x, radius, samples)
    worst, wit = 0.0, None
    report = Report(f"chain-rule[{G.name} . {F.name}]")
    for u in us:
        df = pansu_derivative(F, x, u, schedule, tol)
        if not df.converged:
            report.add("Df", INCONCLUSIVE, df.residual, (u.tolist(), df.status))
            return report
        dg = pansu_derivative(G, fx, df.value, schedule, tol)
        dgf = pansu_derivative(GF, x, u, schedule, tol)
        for tag, est in (("Dg", dg), ("D(gf)", dgf)):
            if not est.converged:
                report.add(tag, INCONCLUSIVE, est.residual, (u.tolist(), est.status))
                return report
        res = float(np.max(np.abs(dgf.value - dg.value)))
        if res > worst:
            worst, wit = res, u.tolist()
    report.info["max_discrepancy"] = worst
    report.add("chain-rule", PASS if worst < tol else FAIL, worst, None if worst < tol else wit)
    return report


def _bilipschitz(S1, S2, rng, n: int, bound: float):
    """Distance ratios ``d2/d1`` over pairs at offsets from 1 down to 1e-8."""
    lo, hi, wit = math.inf, 0.0, None
    base = sample_ball(rng, np.zeros(S1.dim), 1.0, n)
    dirs = sample_ball(rng, np.zeros(S1.dim), 1.0, n)
    for k in range(9):
        other = base + 10.0 ** -k * dirs
        d1 = np.asarray(S1.distance(base, other))
        d2 = np.asarray(S2.distance(base, other))
        ok = d1 > 0
        r = d2[ok] / d1[ok]
        if len(r):
            if r.min() < lo:
                lo = float(r.min())
            if r.max() > hi:
                hi = float(r.max())
            bad = (r > bound) | (r < 1.0 / bound)
            if wit is None and np.any(bad):
                i = int(np.argmax(bad))
                wit = (base[ok][i].tolist(), other[ok][i].tolist(), float(r[i]))
    return lo, hi, wit


def equivalence_check(S1: DilatationStructure, S2: DilatationStructure, samples: int = 10,
                      schedule: Optional[EpsSchedule] = None, seed: int = 0,
                      tol: float = LIMIT_TOL, bound: float = 1e3) -> Report:
    """Are ``S1`` and ``S2`` equivalent through the identity map?

    The identity must be bilipschitz (distance ratios within ``[1/bound,
    bound]`` on pairs down to offset 1e-8), and both
    ``Q^x(u) = lim bar delta^x_{1/eps} delta^x_eps u`` and the reverse
    ``P^x`` must converge at every sampled ``(x, u)``.
    """
    if S1.dim != S2.dim:
        raise ValueError("structures live on different model spaces")
    rng = np.random.default_rng(seed)
    report = Report(f"equivalence[{S1.name} ~ {S2.name}]")
    lo, hi, wit = _bilipschitz(S1, S2, rng, 4 * samples, bound)
    report.info["ratio_range"] = [lo, hi]
    report.add("bilipschitz", PASS if wit is None else FAIL, hi, wit)
    xs = sample_ball(rng, np.zeros(S1.dim), 1.0, samples)
    us = xs + sample_ball(rng, np.zeros(S1.dim), 0.5, samples)
    q_stat, p_stat = [], []
    q_wit = p_wit = None
    for x, u in zip(xs, us):
        q = estimate_limit(lambda es: S2.dilate_many(x, 1.0 / es, S1.dilate_many(x, es, u)),
                           None, schedule, tol, batch=True)
        p = estimate_limit(lambda es: S1.dilate_many(x, 1.0 / es, S2.dilate_many(x, es, u)),
                           None, schedule, tol, batch=True)
        q_stat.append(q.status)
        p_stat.append(p.status)
        if not q.converged and q_wit is None:
            q_wit = (x.tolist(), u.tolist(), q.status)
        if not p.converged and p_wit is None:
            p_wit = (x.tolist(), u.tolist(), p.status)
    report.add("Q-limit", PASS if q_wit is None else FAIL, 0.0, q_wit,
               statuses=sorted(set(q_stat)))
    report.add("P-limit", PASS if p_wit is None else FAIL, 0.0, p_wit,
               statuses=sorted(set(p_stat)))
    report.info["equivalent"] = report.passed
    return report


def equivalence_maps(S1, S2, x, schedule=None, tol: float = LIMIT_TOL):
    """The maps ``Q^x`` (into ``S2``) and ``P^x`` (back into ``S1``) at ``x``."""
    x = as_point(x, S1.dim)

    def Q(u):
        return estimate_limit(lambda es: S2.dilate_many(x, 1.0 / es, S1.dilate_many(x, es, u)),
                              None, schedule, tol, batch=True)

    def P(u):
        return estimate_limit(lambda es: S1.dilate_many(x, 1.0 / es, S2.dilate_many(x, es, u)),
                              None, schedule, tol, batch=True)

    return Q, P


def tangent_iso_check(S1, S2, x, samples: int = 10, schedule: Optional[EpsSchedule] = None,
                      seed: int = 0, tol: float = 1e-8, radius: float = 0.5) -> Report:
    """``bar Sigma^x(u, v) = Q^x(Sigma^x(P^x u, P^x v))`` on sampled ``u, v``."""
    x = as_point(x, S1.dim)
    Q, P = equivalence_maps(S1, S2, x, schedule)
    T1 = TangentGroup(S1, x, schedule)
    T2 = TangentGroup(S2, x, schedule)
    rng = np.random.default_rng(seed)
    pts = sample_ball(rng, x, radius, 2 * samples).reshape(samples, 2, S1.dim)
    worst, wit, ok = 0.0, None, True
    for u, v in pts:
        pu, pv = P(u), P(v)
        inner = T1.op(pu.value, pv.value)
        q = Q(inner)
        lhs = T2.op(u, v)
        ok &= pu.converged and pv.converged and q.converged
        res = float(np.max(np.abs(lhs - q.value)))
        if res > worst:
            worst, wit = res, (u.tolist(), v.tolist())
    ok &= T1.all_converged and T2.all_converged
    report = Report(f"tangent-iso[{S1.name} ~ {S2.name}]")
    if not ok:
        report.add("iso", INCONCLUSIVE, worst, wit)
    else:
        report.add("iso", PASS if worst < tol else FAIL, worst, None if worst < tol else wit)
    return report


class TransportedStructure(DilatationStructure):
    """``f*S``: target distance and dilatations ``f delta^{f^-1 x}_eps f^-1``."""

    def __init__(self, S: DilatationStructure, F: StructureMap):
        if F.inverse is None:
            raise ValueError(f"transport needs an invertible map, {F.name!r} has no inverse")
        self.base = S
        self.F = F
        self.dim = F.target.dim
        self.name = f"transport[{S.name}, {F.name}]"

    def distance(self, x, y):
        return self.F.target.distance(x, y)

    def _pull(self, p):
        out = np.asarray(self.F.inverse(p), dtype=float)
        if not np.all(np.isfinite(out)):
            raise ArithmeticError("inverse evaluation failed")
        return out

    def _dilate(self, x, eps, y):
        return self.F.eval(self.base._dilate(self._pull(x), eps, self._pull(y)))

    def _dilate_many(self, x, eps, y):
        return self.F.eval(self.base._dilate_many(self._pull(x), eps, self._pull(y)))


def transport_structure(S: DilatationStructure, F: StructureMap, audit: bool = False,
                        **audit_kw) -> DilatationStructure:
    """The transport ``f*S``; with ``audit=True`` the axiom audit runs and must pass."""
    T = TransportedStructure(S, F)
    if audit:
        report = audit_axioms(T, **audit_kw)
        T.audit = report
        if not report.passed:
            raise ArithmeticError(f"transported structure fails its audit:\n{report.summary()}")
    return T
