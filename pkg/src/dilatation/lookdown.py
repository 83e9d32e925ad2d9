"""The looking-down relation ``A >= B`` between two structures on one space.

``A`` carries ``(d_A, delta)`` and ``B`` carries ``(d_B, bar delta)``.  The
relation asks for (a) a 1-Lipschitz identity ``d_B <= d_A``, (b) an identity
derivative ``D id(x) = lim bar delta^x_{1/eps} delta^x_eps`` that is a
projector, and (c) vanishing vertical parts along curves asymptotic to the
topological distribution.  The transfer probe runs the argument that moves
derivability of curves from ``B`` up to ``A``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (FAIL, INCONCLUSIVE, LIMIT_TOL, PASS, DilatationStructure, Report,
                   as_point, sample_ball)
from .curves import Curve, derivative_at, reparametrize_arclength, upper_dilatations, variation
from .limits import EpsSchedule, LimitEstimate, check_scale, decay_fit, estimate_limit, tends_to_zero
from .structures import group_op, make_structure
from .tangent import tangent_distance


@dataclass
class LookdownPair:
    A: DilatationStructure
    B: DilatationStructure

    def __post_init__(self):
        if self.A.dim != self.B.dim:
            raise ValueError("a lookdown pair needs one model space")

    @property
    def name(self) -> str:
        return f"{self.A.name}>={self.B.name}"

    @property
    def dim(self) -> int:
        return self.A.dim


PAIRS = {
    "heisenberg-euclidean": ("heisenberg", "heisenberg-flat"),
    "euclidean-heisenberg": ("heisenberg-flat", "heisenberg"),
    "euclidean-euclidean": ("euclidean:3", "euclidean:3"),
}


def make_pair(name: str = "heisenberg-euclidean") -> LookdownPair:
    """A registered pair, or ``"<upper>>=<lower>"`` with structure names."""
    if name in PAIRS:
        a, b = PAIRS[name]
    elif ">=" in name:
        a, b = name.split(">=", 1)
    else:
        raise ValueError(f"unknown lookdown pair {name!r}")
    return LookdownPair(make_structure(a), make_structure(b))


def translate(x, a) -> np.ndarray:
    """``x . a`` in the Heisenberg model, plain ``x + a`` in other dimensions."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    return group_op(x, a) if x.shape[-1] == 3 else x + a


def q_eps(P: LookdownPair, x, eps, z) -> np.ndarray:
    """``Q^x_eps z = bar delta^x_{1/eps} delta^x_eps z``, for ``0 < eps <= 1``."""
    eps = check_scale(eps)
    if eps > 1:
        raise ValueError("q_eps needs eps in (0, 1]")
    return P.B.dilate(x, 1.0 / eps, P.A.dilate(x, eps, z))


def _tdist(S, x, u, v, schedule=None) -> float:
    return float(tangent_distance(S, x, u, v, schedule).value)


def distribution_gap(P: LookdownPair, x, eps, z, radius: float = 2.0,
                     schedule: Optional[EpsSchedule] = None) -> float:
    """``d^x_A(x, z) - (1/eps) d^x_B(x, delta^x_eps z)`` with tangent distances.

    Refuses points with ``d^x_A(x, z) > radius``.
    """
    eps = check_scale(eps)
    x = as_point(x, P.dim)
    z = as_point(z, P.dim)
    da = _tdist(P.A, x, x, z, schedule)
    if da > radius:
        raise ValueError(f"d^x_A(x, z) = {da:.6g} exceeds the probe radius {radius:g}")
    return da - _tdist(P.B, x, x, P.A.dilate(x, eps, z), schedule) / eps


def in_distribution(P: LookdownPair, x, eps, lam: float, z, radius: float = 2.0) -> bool:
    """Membership of ``z`` in the filter set ``F(x, eps, lam)``: gap at most ``lam``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return distribution_gap(P, x, eps, z, radius) <= lam


def vertical_part(P: LookdownPair, x, eps, z, schedule=None) -> float:
    """``d^x_A(Q^x_eps z, z)``."""
    return _tdist(P.A, x, q_eps(P, x, eps, z), z, schedule)


def check_condition_c(P: LookdownPair, x, z_curve: Callable[[float], np.ndarray],
                      schedule: Optional[EpsSchedule] = None, radius: float = 2.0,
                      fit_below: float = 1e-2) -> Report:
    """If the gap along ``z(eps)`` tends to 0, so must the vertical part.

    Both traces are reported; the vertical trace gets a power fit
    ``C eps^p`` over ``eps <= fit_below``.  When the gap does not vanish the
    implication holds vacuously and the check passes with
    ``hypothesis = "not met"``.
    """
    schedule = schedule or EpsSchedule()
    x = as_point(x, P.dim)
    eps_all = schedule.values()
    z_end = as_point(z_curve(float(eps_all[-1])), P.dim)
    if _tdist(P.A, x, x, z_end) > radius:
        raise ValueError(f"probe curve leaves the radius-{radius:g} ball as eps -> 0")
    gaps = {}
    verts = {}

    def gap(e):
        if e not in gaps:
            gaps[e] = distribution_gap(P, x, e, z_curve(e), radius)
        return gaps[e]

    def vert(e):
        if e not in verts:
            verts[e] = vertical_part(P, x, e, z_curve(e))
        return verts[e]

    gap_zero, gap_est, _ = tends_to_zero(lambda e: abs(gap(e)), schedule)
    vert_zero, vert_est, p = tends_to_zero(vert, schedule)
    trace = [(float(e), float(gaps[float(e)]), float(verts[float(e)])) for e in eps_all]
    mask = eps_all <= fit_below
    fp, fc, _ = decay_fit(eps_all[mask], [verts[float(e)] for e in eps_all[mask]])
    report = Report(f"condition-c[{P.name}]", info={
        "trace": trace, "fit_power": fp, "fit_coefficient": fc, "decay_power": p,
        "gap_vanishes": gap_zero, "vertical_vanishes": vert_zero})
    if not gap_zero:
        report.add("condition-c", PASS, 0.0, hypothesis="not met")
    elif vert_zero:
        report.add("condition-c", PASS, float(trace[-1][2]), hypothesis="met")
    else:
        report.add("condition-c", FAIL, float(trace[-1][2]), (x.tolist(), trace[-1]),
                   hypothesis="met")
    return report


def identity_derivative(P: LookdownPair, x, u, schedule: Optional[EpsSchedule] = None,
                        tol: float = LIMIT_TOL) -> LimitEstimate:
    """``D id(x)(u) = lim Q^x_eps u``; non-convergence means condition (b) fails."""
    x = as_point(x, P.dim)
    u = as_point(u, P.dim)
    return estimate_limit(lambda es: P.B.dilate_many(x, 1.0 / es, P.A.dilate_many(x, es, u)),
                          None, schedule, tol, batch=True)


def check_projector(P: LookdownPair, x, samples: int = 10,
                    schedule: Optional[EpsSchedule] = None, seed: int = 0,
                    tol: float = 1e-9, radius: float = 0.5,
                    scales=(0.1, 0.25, 0.5, 0.75, 1.0)) -> Report:
    """``D id(x)`` is idempotent, and ``delta`` and ``bar delta`` agree on its image."""
    x = as_point(x, P.dim)
    rng = np.random.default_rng(seed)
    us = sample_ball(rng, x, radius, samples)
    idem, comm = [], []
    converged = True
    for u in us:
        du = identity_derivative(P, x, u, schedule)
        ddu = identity_derivative(P, x, du.value, schedule)
        converged &= du.converged and ddu.converged
        idem.append((float(np.max(np.abs(ddu.value - du.value))), u.tolist()))
        for e in scales:
            r = float(np.max(np.abs(P.A.dilate(x, e, du.value) - P.B.dilate(x, e, du.value))))
            comm.append((r, (u.tolist(), e)))
    report = Report(f"projector[{P.name}]")
    for name, entries in (("idempotent", idem), ("dilatations-agree", comm)):
        res, wit = max(entries, key=lambda e: e[0])
        if not converged:
            report.add(name, INCONCLUSIVE, res, wit)
        else:
            report.add(name, PASS if res < tol else FAIL, res, None if res < tol else wit)
    return report


def check_condition_a(P: LookdownPair, samples: int = 200, radius: float = 0.5,
                      seed: int = 0, slack: float = 1e-9) -> Report:
    """``d_B <= d_A (1 + slack)`` on random pairs plus vertical and horizontal probes."""
    rng = np.random.default_rng(seed)
    xs = sample_ball(rng, np.zeros(P.dim), radius, samples)
    ys = sample_ball(rng, np.zeros(P.dim), radius, samples)
    probes = []
    for x in xs[: max(1, samples // 20)]:
        for k in range(1, 9):
            for axis in range(P.dim):
                off = np.zeros(P.dim)
                off[axis] = 0.5 ** k
                probes.append((x, translate(x, off)))
    px = np.concatenate([xs, np.array([p[0] for p in probes])])
    py = np.concatenate([ys, np.array([p[1] for p in probes])])
    da = np.asarray(P.A.distance(px, py))
    db = np.asarray(P.B.distance(px, py))
    ratio = np.where(da > 0, db / np.where(da > 0, da, 1.0), 0.0)
    i = int(np.argmax(ratio))
    worst = float(ratio[i])
    ok = worst <= 1 + slack
    report = Report(f"condition-a[{P.name}]", info={"max_ratio": worst, "radius": radius})
    report.add("1-lipschitz", PASS if ok else FAIL, max(0.0, worst - 1.0),
               None if ok else (px[i].tolist(), py[i].tolist(), worst),
               offset=translate(-px[i], py[i]).tolist())
    return report


def probe_curves(x):
    """Curves ``z(eps)`` approaching the distribution at ``x`` from above it."""
    x = np.asarray(x, dtype=float)
    dim = x.shape[-1]
    out = []
    for k in range(min(dim, 2)):
        h = np.zeros(dim)
        h[k] = 1.0
        if dim == 3:
            out.append(lambda e, h=h: translate(x, h + np.array([0.0, 0.0, e])))
        else:
            out.append(lambda e, h=h: translate(x, h))
    return out


def lookdown_audit(P: LookdownPair, samples: int = 20, radius: float = 0.5,
                   schedule: Optional[EpsSchedule] = None, seed: int = 0) -> Report:
    """Conditions (a), (b) and (c) on seeded samples in the ball of given radius."""
    report = Report(f"lookdown[{P.name}]", info={"radius": radius, "samples": samples,
                                                 "seed": seed})
    ca = check_condition_a(P, 10 * samples, radius, seed)
    report.extend(ca, "a/")
    report.info["max_ratio"] = ca.info["max_ratio"]
    rng = np.random.default_rng(seed + 1)
    xs = sample_ball(rng, np.zeros(P.dim), radius, max(1, samples // 4))
    for i, x in enumerate(xs):
        report.extend(check_projector(P, x, samples=5, schedule=schedule, seed=seed + i,
                                      radius=radius), f"b/x{i}/")
        for j, z in enumerate(probe_curves(x)):
            report.extend(check_condition_c(P, x, z, schedule), f"c/x{i}/z{j}/")
    return report


# --- transfer of derivability ------------------------------------------------

def _require_lipschitz(S, c: Curve, nodes: int = 33):
    if not c.lipschitz:
        raise ValueError(f"curve {c.name!r} is not Lipschitz")
    lip = upper_dilatations(c, np.linspace(c.a, c.b, nodes), S)
    if not np.all(np.isfinite(lip)):
        raise ValueError(f"curve {c.name!r} is not Lipschitz for {S.name} (unbounded dilatation)")


def transfer_probe(P: LookdownPair, c: Curve, t_samples: int = 100,
                   schedule: Optional[EpsSchedule] = None, seed: int = 0,
                   threshold: float = 0.97, match_tol: float = 1e-5) -> Report:
    """Move derivability of ``c`` from ``B`` to ``A``, stage by stage.

    After reparametrizing by ``d_A`` arc length, and checking that the ``A``
    and ``B`` variations agree, each sampled ``t`` goes through

    1. derivability in ``B``,
    2. ``(1/eps) (d_A - d_B)(c(t+eps), c(t)) -> 0``,
    3. ``(1/eps) d_A(delta^{c(t)}_eps bar delta^{c(t)}_{1/eps} c(t+eps), c(t+eps)) -> 0``,
    4. derivability in ``A`` with the same derivative as in ``B``.

    A stage passes when it succeeds at ``threshold`` of the samples.
    """
    _require_lipschitz(P.A, c)
    schedule = schedule or EpsSchedule()
    var_a = variation(c, P.A)
    var_b = variation(c, P.B)
    rel = abs(var_a - var_b) / max(var_a, 1e-300)
    cc = reparametrize_arclength(c, P.A)
    rng = np.random.default_rng(seed)
    span = cc.b - cc.a
    ts = np.sort(cc.a + span * (0.005 + 0.99 * rng.random(t_samples)))
    stage = {k: [] for k in ("B-derivable", "length-gap", "vertical-part", "A-derivable",
                             "A-equals-B")}
    witness = {k: None for k in stage}
    worst_match = 0.0
    for t in ts:
        t = float(t)
        room = min(t - cc.a, cc.b - t)
        sch = schedule.scaled(min(1.0, 0.5 * room / schedule.eps0))
        ct = cc(t)
        rb = derivative_at(cc, t, P.B, schedule)
        gap_ok, _, _ = tends_to_zero(
            lambda e: abs(float(P.A.distance(cc(t + e), ct)) - float(P.B.distance(cc(t + e), ct))) / e,
            sch)

        def vert(e):
            far = cc(t + e)
            back = P.A.dilate(ct, e, P.B.dilate(ct, 1.0 / e, far))
            return float(P.A.distance(back, far)) / e

        vert_ok, _, _ = tends_to_zero(vert, sch)
        ra = derivative_at(cc, t, P.A, schedule)
        match = math.inf
        if ra.derivable and rb.derivable:
            match = float(np.max(np.abs(ra.forward.value - rb.forward.value)))
            worst_match = max(worst_match, match)
        for key, ok in (("B-derivable", rb.derivable), ("length-gap", gap_ok),
                        ("vertical-part", vert_ok), ("A-derivable", ra.derivable),
                        ("A-equals-B", match < match_tol)):
            stage[key].append(ok)
            if not ok and witness[key] is None:
                witness[key] = t
    fractions = {k: float(np.mean(v)) for k, v in stage.items()}
    report = Report(f"transfer[{P.name}, {c.name}]", info={
        "variation_A": var_a, "variation_B": var_b, "fractions": fractions,
        "max_derivative_mismatch": worst_match, "length": span,
        "hypotheses": {"(a')": "variations compared", "(c)": "read as the vertical-part condition",
                       "(d)": "same as (c)"}})
    report.add("a-prime", PASS if rel < 1e-3 else FAIL, rel, None if rel < 1e-3 else (var_a, var_b))
    for key, frac in fractions.items():
        ok = frac >= threshold
        report.add(key, PASS if ok else FAIL, 1.0 - frac, None if ok else witness[key],
                   fraction=frac)
    return report
