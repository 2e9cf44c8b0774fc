"""Function descriptors: indicators, quadratic and cone bases, G_alpha, tilts, tables.

Every descriptor knows its convex base; the mass side is the base pushed
through ``f = (1 + phi/beta)^(-beta)`` (``exp(-phi)`` when beta is infinite).
Indicators and G_alpha carry no beta of their own for the base.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from .extgrid import CONVEX, MASS

# boundary slack when deciding membership of grid nodes in a body
_EDGE = 1e-12


def _unbase(phi: np.ndarray, beta: float) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if math.isinf(beta):
            out = np.exp(-phi)
        else:
            out = np.exp(-beta * np.log1p(phi / beta))
    return np.where(np.isfinite(phi), out, 0.0)


def _check_dim(points: np.ndarray, coords) -> None:
    if points.shape[-1] != len(coords):
        raise ValueError(f"descriptor lives in {len(coords)}D but the grid is {points.shape[-1]}D")


def _norm(points: np.ndarray, center) -> np.ndarray:
    _check_dim(points, center)
    return np.sqrt(np.sum((points - np.asarray(center, dtype=float)) ** 2, axis=-1))


@dataclasses.dataclass(frozen=True)
class Indicator:
    """Axis-aligned box (interval in 1D); ``lo == hi`` gives a single point."""
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = np.atleast_1d(self.lo).astype(float), np.atleast_1d(self.hi).astype(float)
        if lo.shape != hi.shape or (lo > hi).any():
            raise ValueError("indicator box needs lo <= hi on every axis")
        object.__setattr__(self, "lo", tuple(lo))
        object.__setattr__(self, "hi", tuple(hi))

    def inside(self, points):
        _check_dim(points, self.lo)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return np.all((points >= lo - _EDGE) & (points <= hi + _EDGE), axis=-1)

    def evaluate(self, points, side):
        inside = self.inside(points)
        if side == MASS:
            return inside.astype(float)
        return np.where(inside, 0.0, np.inf)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))


def point(dim: int = 1, at=0.0) -> Indicator:
    c = tuple(np.broadcast_to(np.asarray(at, dtype=float), (dim,)))
    return Indicator(c, c)


@dataclasses.dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", tuple(np.atleast_1d(self.center).astype(float)))

    def inside(self, points):
        return _norm(points, self.center) <= self.radius + _EDGE

    def evaluate(self, points, side):
        inside = self.inside(points)
        if side == MASS:
            return inside.astype(float)
        return np.where(inside, 0.0, np.inf)


@dataclasses.dataclass(frozen=True)
class QuadraticBase:
    """Base |x - center|^2 / (2 scale^2) + offset, +inf outside ``body`` if given."""
    center: tuple = (0.0,)
    scale: float = 1.0
    offset: float = 0.0
    beta: float = math.inf
    body: Indicator | Ball | None = None

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not math.isinf(self.beta) and not self.offset > -self.beta:
            raise ValueError("offset must exceed -beta")
        object.__setattr__(self, "center", tuple(np.atleast_1d(self.center).astype(float)))

    def base(self, points):
        phi = _norm(points, self.center) ** 2 / (2 * self.scale ** 2) + self.offset
        if self.body is not None:
            phi = np.where(self.body.inside(points), phi, np.inf)
        return phi

    def evaluate(self, points, side):
        phi = self.base(points)
        return phi if side == CONVEX else _unbase(phi, self.beta)


@dataclasses.dataclass(frozen=True)
class ConeBase:
    """Base slope*|x - center| + offset (two-sided exponential / Cauchy-like mass)."""
    center: tuple = (0.0,)
    slope: float = 1.0
    offset: float = 0.0
    beta: float = math.inf
    body: Indicator | Ball | None = None

    def __post_init__(self):
        if not self.slope > 0:
            raise ValueError("slope must be positive")
        object.__setattr__(self, "center", tuple(np.atleast_1d(self.center).astype(float)))

    def base(self, points):
        phi = self.slope * _norm(points, self.center) + self.offset
        if self.body is not None:
            phi = np.where(self.body.inside(points), phi, np.inf)
        return phi

    def evaluate(self, points, side):
        phi = self.base(points)
        return phi if side == CONVEX else _unbase(phi, self.beta)


@dataclasses.dataclass(frozen=True)
class GAlpha:
    """G_alpha(x) = (1 + |x|^2/(2 beta))^(-beta); its base is |x|^2/2 for every beta."""
    beta: float = math.inf

    def evaluate(self, points, side):
        phi = np.sum(points ** 2, axis=-1) / 2
        return phi if side == CONVEX else _unbase(phi, self.beta)


@dataclasses.dataclass(frozen=True)
class LinearTilt:
    """Affine convex function <a, x> + c (convex side only)."""
    a: tuple = (1.0,)
    c: float = 0.0

    def evaluate(self, points, side):
        if side != CONVEX:
            raise ValueError("a linear tilt is unbounded below; it has no mass side")
        return points @ np.atleast_1d(np.asarray(self.a, dtype=float)) + self.c


@dataclasses.dataclass(frozen=True)
class UserTable:
    values: np.ndarray

    def evaluate(self, points, side):
        return np.asarray(self.values, dtype=float).reshape(points.shape[:-1])


@dataclasses.dataclass(frozen=True)
class Closure:
    fn: Callable[[np.ndarray], np.ndarray]

    def evaluate(self, points, side):
        return self.fn(points)


def parse(text: str, beta: float = math.inf, dim: int = 1):
    """Parse a compact descriptor string.

    ``g_alpha``, ``point``, ``indicator:a,b`` (``a0,b0,a1,b1`` in 2D),
    ``ball:r`` or ``ball:c0,c1,r``, ``quadratic:c[,scale[,offset]]``,
    ``cone:c[,slope[,offset]]``.  Centers are replicated across axes.
    """
    name, _, rest = text.strip().partition(":")
    args = [float(t) for t in rest.split(",") if t.strip()] if rest else []
    name = name.lower()
    if name in ("g_alpha", "g", "galpha"):
        return GAlpha(beta)
    if name == "point":
        return point(dim, args[0] if args else 0.0)
    if name == "indicator":
        if len(args) != 2 * dim:
            raise ValueError(f"indicator needs {2 * dim} numbers in {dim}D")
        return Indicator(tuple(args[0::2]), tuple(args[1::2]))
    if name == "ball":
        if len(args) == 1:
            return Ball((0.0,) * dim, args[0])
        return Ball(tuple(args[:-1]), args[-1])
    if name in ("quadratic", "cone"):
        c = (args[0] if args else 0.0,) * dim
        k = args[1] if len(args) > 1 else 1.0
        off = args[2] if len(args) > 2 else 0.0
        if name == "quadratic":
            return QuadraticBase(c, k, off, beta)
        return ConeBase(c, k, off, beta)
    raise ValueError(f"unknown function descriptor {text!r}")


def random_member(rng: np.random.Generator, beta: float = math.inf, dim: int = 1, radius: float = 2.0):
    """A random zoo member with mass <= 1 (so every alpha-sum with it is defined)."""
    kind = rng.integers(4)
    c = tuple(rng.uniform(-0.5, 0.5, dim))
    if kind == 0:
        lo = rng.uniform(-radius, 0.0, dim)
        hi = lo + rng.uniform(0.5, radius, dim)
        return Indicator(tuple(lo), tuple(np.minimum(hi, radius)))
    if kind == 1:
        return QuadraticBase(c, float(rng.uniform(0.5, 1.0)), float(rng.uniform(0.0, 0.5)), beta)
    if kind == 2:
        # a bare cone has h = +inf outside its slope range, so keep the support bounded
        body = Indicator(tuple(rng.uniform(-radius, -0.5, dim)), tuple(rng.uniform(0.5, radius, dim)))
        return ConeBase(c, float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.0, 0.5)), beta, body)
    lo = rng.uniform(-radius, -0.5, dim)
    hi = rng.uniform(0.5, radius, dim)
    return QuadraticBase(c, float(rng.uniform(0.5, 1.0)), 0.0, beta, Indicator(tuple(lo), tuple(hi)))
