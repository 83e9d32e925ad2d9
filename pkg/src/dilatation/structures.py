"""Concrete dilatation structures and the name registry."""

from __future__ import annotations

import math
import re

import numpy as np

from .core import DilatationStructure


class EuclideanStructure(DilatationStructure):
    """``R^n`` with a p-norm distance and ``delta^x_eps y = x + eps (y - x)``."""

    def __init__(self, dim: int = 2, p: float = 2.0):
        if int(dim) != dim or dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {dim!r}")
        if p < 1:
            raise ValueError("p-norm needs p >= 1")
        self.dim = int(dim)
        self.p = float(p)
        suffix = "" if self.p == 2.0 else f":{p:g}"
        self.name = f"euclidean:{self.dim}{suffix}"

    def distance(self, x, y):
        diff = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        if self.p == 2.0:
            return np.sqrt(np.sum(diff * diff, axis=-1))
        if math.isinf(self.p):
            return np.max(np.abs(diff), axis=-1)
        return np.sum(np.abs(diff) ** self.p, axis=-1) ** (1.0 / self.p)

    def _dilate(self, x, eps, y):
        return x + eps * (y - x)

    def _dilate_many(self, x, eps, y):
        return x + eps[:, None] * (y - x)


def complex_power(eps: float, theta: float) -> np.ndarray:
    """The 2x2 real matrix of ``eps**(1 + i theta)`` acting on ``R^2 = C``."""
    ang = theta * math.log(eps)
    c, s = math.cos(ang), math.sin(ang)
    return eps * np.array([[c, -s], [s, c]])


class RotatingStructure(DilatationStructure):
    """The plane with Euclidean distance and spiralling dilatations.

    ``delta^x_eps y = x + eps**z (y - x)`` with ``z = 1 + i theta``: scale by
    ``eps`` and rotate by ``theta * ln(eps)``.
    """

    dim = 2

    def __init__(self, theta: float = 0.0):
        self.theta = float(theta)
        self.name = f"rotating:{self.theta:g}"

    def distance(self, x, y):
        diff = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def _dilate(self, x, eps, y):
        return x + (y - x) @ complex_power(eps, self.theta).T

    def _dilate_many(self, x, eps, y):
        ang = self.theta * np.log(eps)
        c, s = eps * np.cos(ang), eps * np.sin(ang)
        d = y - x
        return x + np.stack([c * d[:, 0] - s * d[:, 1], s * d[:, 0] + c * d[:, 1]], axis=-1)


class ContractingStructure(EuclideanStructure):
    """Negative fixture: ``delta^x_eps y = x + eps**2 (y - x)``.

    It satisfies the exact axioms, but the rescaled distance goes to 0, so
    the tangent distance is degenerate.
    """

    def __init__(self, dim: int = 2):
        super().__init__(dim)
        self.name = f"contracting:{self.dim}"

    def _dilate(self, x, eps, y):
        return x + eps * eps * (y - x)

    def _dilate_many(self, x, eps, y):
        return x + (eps * eps)[:, None] * (y - x)


# --- Heisenberg group -------------------------------------------------------

def group_op(g, h) -> np.ndarray:
    """Heisenberg product ``(p,q,r)(p',q',r') = (p+p', q+q', r+r'+(pq'-qp')/2)``."""
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    out = g + h
    out[..., 2] += 0.5 * (g[..., 0] * h[..., 1] - g[..., 1] * h[..., 0])
    return out


def group_inv(g) -> np.ndarray:
    return -np.asarray(g, dtype=float)


def graded_dilation(eps: float, a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a * np.array([eps, eps, eps * eps])


def _left_difference(x, y) -> np.ndarray:
    """``x^-1 y`` computed from ``y - x``."""
    d = y - x
    d = np.array(d, dtype=float, copy=True) if d.ndim else d
    d[..., 2] -= 0.5 * (x[..., 0] * d[..., 1] - x[..., 1] * d[..., 0])
    return d


def koranyi_gauge(a) -> np.ndarray:
    """Cygan-Koranyi gauge ``((a1^2 + a2^2)^2 + 16 a3^2)^(1/4)``."""
    a = np.asarray(a, dtype=float)
    r2 = a[..., 0] ** 2 + a[..., 1] ** 2
    return (r2 * r2 + 16.0 * a[..., 2] ** 2) ** 0.25


class HeisenbergStructure(DilatationStructure):
    """The Heisenberg group with gauge distance and graded dilatations.

    ``d(x, y) = N(x^-1 y)`` and ``delta^x_eps u = x Delta_eps(x^-1 u)``.
    """

    name = "heisenberg"
    dim = 3

    def distance(self, x, y):
        # x^-1 y with the area term written through y - x, avoiding the
        # cancellation of the x1*x2 products for nearby points far from 0
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return koranyi_gauge(_left_difference(x, y))

    def _dilate(self, x, eps, y):
        return group_op(x, graded_dilation(eps, group_op(group_inv(x), y)))

    def _dilate_many(self, x, eps, y):
        grade = np.stack([eps, eps, eps * eps], axis=-1)
        return group_op(x, grade * group_op(group_inv(x), y))


class HeisenbergFlatStructure(DilatationStructure):
    """Left-translated Euclidean geometry on the Heisenberg group.

    ``d(x, y) = |x^-1 y|`` (Euclidean norm of the group difference) and
    ``delta^x_eps u = x (eps x^-1 u)``: isotropic dilatations read in the
    left-translated frame.  At the origin it coincides with ``euclidean:3``.
    Its distance is bounded by the gauge distance on gauge-small pairs,
    which ``euclidean:3`` is not away from the vertical axis.
    """

    name = "heisenberg-flat"
    dim = 3

    def distance(self, x, y):
        diff = _left_difference(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def _dilate(self, x, eps, y):
        return group_op(x, eps * group_op(group_inv(x), y))

    def _dilate_many(self, x, eps, y):
        return group_op(x, eps[:, None] * group_op(group_inv(x), y))


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def make_structure(spec: str) -> DilatationStructure:
    """Build a registered structure from its name.

    Recognised names: ``euclidean:<dim>[:<p>]``, ``rotating:<theta>``,
    ``heisenberg``, ``heisenberg-flat``, ``contracting:<dim>``.
    """
    spec = spec.strip()
    if spec == "heisenberg":
        return HeisenbergStructure()
    if spec == "heisenberg-flat":
        return HeisenbergFlatStructure()
    m = re.fullmatch(r"euclidean:(\d+)(?::(inf|" + _NUM + r"))?", spec)
    if m:
        p = float(m.group(2)) if m.group(2) else 2.0
        return EuclideanStructure(int(m.group(1)), p)
    m = re.fullmatch(r"rotating:(" + _NUM + ")", spec)
    if m:
        return RotatingStructure(float(m.group(1)))
    m = re.fullmatch(r"contracting:(\d+)", spec)
    if m:
        return ContractingStructure(int(m.group(1)))
    head = spec.split(":", 1)[0]
    if head in ("euclidean", "rotating", "contracting"):
        raise ValueError(f"malformed parameter in structure name {spec!r}")
    raise ValueError(f"unknown structure {spec!r}")
