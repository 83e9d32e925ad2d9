"""Scale schedules and classification of limits as the scale goes to 0.

Every ``lim_{eps -> 0}`` in the library is estimated by sampling the
quantity along a geometric schedule ``eps_k = eps0 * q**k`` and classifying
the resulting trace.  Floating point roundoff grows as ``eps`` shrinks for
most dilatation quotients, so the classifier works on the part of the trace
before the roundoff floor (the point where successive residuals stop
shrinking).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Sequence

import numpy as np

CONVERGED = "converged"
OSCILLATING = "oscillating"
DIVERGING = "diverging"
INCONCLUSIVE = "inconclusive"

DEFAULT_TOL = 1e-6
DEFAULT_TAIL = 8
DEFAULT_BOUND = 1e6
ROUNDOFF_FLOOR = 1e-14


def check_scale(eps: float) -> float:
    """Validate a scale value, an element of the multiplicative group (0, inf)."""
    eps = float(eps)
    if not math.isfinite(eps) or eps <= 0.0:
        raise ValueError(f"scale must be a positive finite real, got {eps!r}")
    return eps


@dataclass(frozen=True)
class EpsSchedule:
    """Geometric schedule ``eps0 * ratio**k`` for ``k = 0 .. steps-1``."""

    eps0: float = 0.5
    ratio: float = 0.5
    steps: int = 30

    def __post_init__(self):
        check_scale(self.eps0)
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"ratio must lie in (0, 1), got {self.ratio}")
        if int(self.steps) != self.steps or self.steps < 4:
            raise ValueError(f"steps must be an integer >= 4, got {self.steps}")

    def values(self) -> np.ndarray:
        return self.eps0 * self.ratio ** np.arange(self.steps)

    def scaled(self, factor: float) -> "EpsSchedule":
        """Same ratio and length, first scale multiplied by ``factor``."""
        return EpsSchedule(self.eps0 * factor, self.ratio, self.steps)

    def __iter__(self):
        return iter(self.values())

    def __len__(self):
        return self.steps


@dataclass
class LimitEstimate:
    samples: list
    value: Any
    status: str
    residual: float
    tail_diameter: float
    refined: bool = False
    witness: Optional[float] = None
    cutoff: int = -1

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def eps(self) -> np.ndarray:
        return np.array([e for e, _ in self.samples])

    @property
    def values(self) -> list:
        return [v for _, v in self.samples]


def richardson_extrapolate(v_k, v_next, q: float):
    """One Richardson step for a residual linear in ``eps``.

    ``v_k`` is the value at ``eps`` and ``v_next`` the value at ``q * eps``.
    """
    if q == 1:
        raise ValueError("richardson_extrapolate needs q != 1")
    v_k = np.asarray(v_k, dtype=float)
    v_next = np.asarray(v_next, dtype=float)
    out = (v_next - q * v_k) / (1.0 - q)
    return float(out) if out.ndim == 0 else out


def _residuals(values, metric) -> np.ndarray:
    """Successive distances, each widened to the max over its two neighbours.

    The widening makes a coincidental near-cancellation between two
    neighbouring values unable to pose as convergence.  ``values`` is either
    a list (with a custom metric) or an array of flattened samples.
    """
    if metric is None:
        r = np.sqrt(np.sum(np.diff(values, axis=0) ** 2, axis=1))
    else:
        r = np.array([metric(values[i], values[i + 1]) for i in range(len(values) - 1)])
    if len(r) < 3:
        return r
    padded = np.concatenate([r[:1], r, r[-1:]])
    return np.maximum(np.maximum(padded[:-2], padded[1:-1]), padded[2:])


def _diameter(values, metric) -> float:
    if metric is None:
        diff = values[:, None, :] - values[None, :, :]
        return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))
    best = 0.0
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            best = max(best, metric(values[i], values[j]))
    return best


def _decreasing(residuals: np.ndarray, upto: int) -> bool:
    """True when residuals in the clean prefix shrink geometrically."""
    r = residuals[: upto + 1]
    r = r[r > 0]
    if len(r) < 3:
        return False
    return bool(np.median(r[1:] / r[:-1]) < 0.9)


def _best_cut(residuals: np.ndarray, slack: float) -> int:
    """Index of the (earliest near-) smallest residual inside the clean prefix.

    The clean prefix ends at the first residual exceeding 1.5 times the
    running minimum (plus ``slack``): past that point roundoff dominates and
    later small residuals (values frozen by cancellation) carry no
    information.
    """
    end, low = 1, residuals[0]
    while end < len(residuals) and residuals[end] <= 1.5 * low + slack:
        low = min(low, residuals[end])
        end += 1
    # earliest near-minimal index: later ties come from values frozen by rounding
    near = residuals[:end] <= 2.0 * low + 1e-3 * slack
    return int(np.argmax(near))


def estimate_limit(
    seq: Callable[[float], Any],
    metric: Optional[Callable[[Any, Any], float]] = None,
    schedule: Optional[EpsSchedule] = None,
    tol: float = DEFAULT_TOL,
    tail: int = DEFAULT_TAIL,
    osc_floor: Optional[float] = None,
    bound: float = DEFAULT_BOUND,
    levels: int = 2,
    batch: bool = False,
) -> LimitEstimate:
    """Estimate ``lim_{eps -> 0} seq(eps)`` and classify the trace.

    The trace is cut at its roundoff floor: the clean prefix ends once a
    residual exceeds 1.5 times the running minimum, so residuals up to the
    cut are non-increasing up to that factor.  When the clean residuals
    shrink, up to ``levels`` Richardson sweeps (ratios ``q``, ``q**2``) give
    further candidate traces; the candidate with the smallest residual
    provides ``value`` and ``residual``.  ``converged`` means that residual is
    below ``tol``.  Otherwise a bounded tail whose residuals stall is
    ``oscillating`` and anything else is ``inconclusive``.

    With ``batch=True``, ``seq`` takes the whole array of scales and returns
    one value per scale along the first axis.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    schedule = schedule or EpsSchedule()
    osc_floor = 10 * tol if osc_floor is None else osc_floor
    q = schedule.ratio

    eps_all = schedule.values()
    if batch:
        out = np.asarray(seq(eps_all), dtype=float)
        raw = [float(v) if out.ndim == 1 else v for v in out]
    else:
        raw = None
    samples = []
    for k, eps in enumerate(eps_all):
        val = raw[k] if batch else seq(float(eps))
        arr = np.asarray(val, dtype=float)
        samples.append((float(eps), val))
        if not np.all(np.isfinite(arr)) or np.max(np.abs(arr), initial=0.0) > bound:
            return LimitEstimate(samples, val, DIVERGING, math.inf, math.inf, witness=float(eps))

    values = [v for _, v in samples]
    shape = np.shape(values[0])
    scalar = isinstance(values[0], (float, int, np.floating))
    # the default metric runs on a flattened array; custom metrics on the list
    trace = np.array(values, dtype=float).reshape(len(values), -1) if metric is None else values
    res = _residuals(trace, metric)
    slack = 1e-3 * tol

    def unpack(row):
        if metric is not None:
            return row
        return float(row[0]) if scalar else np.array(row).reshape(shape)

    cut = _best_cut(res, slack)
    candidates = [(res[cut], values[cut + 1], False, cut)]
    if _decreasing(res, cut):
        refined = trace
        for level in range(1, levels + 1):
            if metric is None:
                refined = (refined[1:] - q ** level * refined[:-1]) / (1.0 - q ** level)
            else:
                refined = [richardson_extrapolate(refined[i], refined[i + 1], q ** level)
                           for i in range(len(refined) - 1)]
            rres = _residuals(refined, metric)
            rcut = _best_cut(rres, slack)
            candidates.append((rres[rcut], unpack(refined[rcut + 1]), True, rcut))
    # residuals under the roundoff floor tie; the shallowest cut wins the tie,
    # since deep samples may be frozen by cancellation rather than converged
    floor = ROUNDOFF_FLOOR * (1.0 + float(np.max(np.abs(trace[0])))) if metric is None else 0.0
    residual, value, was_refined, at = min(candidates, key=lambda c: (max(c[0], floor), c[3]))

    tail_diam = _diameter(trace[-tail:], metric)

    if residual < tol:
        return LimitEstimate(samples, value, CONVERGED, float(residual), tail_diam, was_refined, cutoff=at)

    tail_res = res[-(tail - 1):]
    half = len(tail_res) // 2
    stalled = np.max(tail_res[half:]) >= 0.25 * np.max(tail_res[:half])
    if tail_diam > osc_floor and stalled:
        return LimitEstimate(samples, values[-1], OSCILLATING, float(res[-1]), tail_diam, cutoff=at)
    return LimitEstimate(samples, value, INCONCLUSIVE, float(residual), tail_diam, was_refined, cutoff=at)


def decay_fit(eps: Sequence[float], values: Sequence[float], min_points: int = 5):
    """Fit ``values ~ C * eps**p`` on the clean (pre-roundoff) part of a trace.

    The trace is truncated where the values stop decreasing.  Returns
    ``(p, C, n_used)``, or ``(nan, nan, n)`` when fewer than ``min_points``
    positive decreasing values are available.
    """
    eps = np.asarray(eps, dtype=float)
    vals = np.abs(np.asarray(values, dtype=float))
    n = 1
    while n < len(vals) and 0 < vals[n] < vals[n - 1]:
        n += 1
    if n < min_points or vals[0] <= 0:
        return math.nan, math.nan, n
    p, logc = np.polyfit(np.log(eps[:n]), np.log(vals[:n]), 1)
    return float(p), float(math.exp(logc)), n


def tends_to_zero(
    seq: Callable[[float], float],
    schedule: Optional[EpsSchedule] = None,
    tol: float = DEFAULT_TOL,
    min_power: float = 0.25,
) -> tuple[bool, LimitEstimate, float]:
    """Decide whether a nonnegative scalar trace vanishes as ``eps -> 0``.

    Passes when the limit converges to within ``tol`` of 0, or when the clean
    part of the trace drops by a factor 10 and decays at least like
    ``eps**min_power``, both over the whole clean part and over its last five
    points (a trace levelling off at a nonzero limit fails the latter).  Slow
    decays (``sqrt(eps)``) hit the roundoff floor before reaching ``tol``,
    hence the second route.  Returns ``(vanishes, estimate, fitted_power)``.
    """
    est = estimate_limit(seq, None, schedule, tol)
    vals = np.abs(np.array([float(v) for v in est.values]))
    p, _, n = decay_fit(est.eps, vals)
    if est.status == CONVERGED and abs(float(est.value)) < tol:
        return True, est, p
    if not math.isfinite(p) or p < min_power or vals[n - 1] > 0.1 * max(vals[0], 1e-300):
        return False, est, p
    local, _, _ = decay_fit(est.eps[n - 5:n], vals[n - 5:n])
    return bool(math.isfinite(local) and local >= min_power), est, p
