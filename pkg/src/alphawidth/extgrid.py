"""Uniform grids on boxes in R^1 / R^2 and extended-real sampled functions.

Convex-side functions take values in (-inf, +inf]; +inf is stored as the IEEE
``np.inf`` flag, never as a large sentinel.  Mass-side functions are finite and
non-negative.
"""
from __future__ import annotations

import dataclasses
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

CONVEX = "convex"
MASS = "mass"
SIDES = (CONVEX, MASS)

# fractional grid indices closer than this to an integer are snapped to it
SNAP = 1e-9


class GridError(ValueError):
    """Invalid grid, grid function, or sampled value."""


@dataclasses.dataclass(frozen=True)
class GridSpec:
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    m: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        m = tuple(int(v) for v in np.atleast_1d(self.m))
        if not (len(lo) == len(hi) == len(m)) or len(lo) not in (1, 2):
            raise GridError("grid dimension must be 1 or 2 with matching lo/hi/m")
        for a, b, k in zip(lo, hi, m):
            if not a < b:
                raise GridError(f"need lo < hi, got {a} >= {b}")
            if k < 3:
                raise GridError(f"need at least 3 points per axis, got {k}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "m", m)

    @classmethod
    def box(cls, lo, hi, m, dim: int = 1) -> "GridSpec":
        """Same bounds and resolution on every axis."""
        return cls((lo,) * dim, (hi,) * dim, (m,) * dim)

    @property
    def dim(self) -> int:
        return len(self.m)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.m

    @property
    def h(self) -> tuple[float, ...]:
        return tuple((b - a) / (k - 1) for a, b, k in zip(self.lo, self.hi, self.m))

    @property
    def hmax(self) -> float:
        return max(self.h)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def axis(self, i: int) -> np.ndarray:
        # affine indexing: coordinate k is lo + k*h, no cumulative drift
        return self.lo[i] + np.arange(self.m[i]) * self.h[i]

    def axes(self) -> list[np.ndarray]:
        return [self.axis(i) for i in range(self.dim)]

    def points(self) -> np.ndarray:
        """Grid points, shape ``(*shape, dim)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def norm2(self) -> np.ndarray:
        """|x|^2 at every grid point."""
        return np.sum(self.points() ** 2, axis=-1)

    def zero_index(self) -> tuple[int, ...]:
        """Index of the origin; raises if the origin is not a grid node."""
        idx = []
        for a, h in zip(self.lo, self.h):
            t = -a / h
            k = round(t)
            if abs(t - k) > SNAP * max(1.0, abs(t)) or not 0 <= k:
                raise GridError("origin is not a node of the grid")
            idx.append(int(k))
        if any(k >= mm for k, mm in zip(idx, self.m)):
            raise GridError("origin is not a node of the grid")
        return tuple(idx)

    def coarsen(self) -> "GridSpec | None":
        """Every-other-node subgrid over the same box, or None if m-1 is odd."""
        if any((k - 1) % 2 for k in self.m) or any((k - 1) // 2 + 1 < 3 for k in self.m):
            return None
        return GridSpec(self.lo, self.hi, tuple((k - 1) // 2 + 1 for k in self.m))


@dataclasses.dataclass(frozen=True, eq=False)
class GridFn:
    spec: GridSpec
    side: str
    values: np.ndarray
    meta: Mapping[str, Any] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.side not in SIDES:
            raise GridError(f"side must be one of {SIDES}")
        v = np.array(self.values, dtype=float)
        if v.shape != self.spec.shape:
            raise GridError(f"values shape {v.shape} does not match grid {self.spec.shape}")
        if np.isnan(v).any():
            raise GridError(f"NaN at index {_first(np.isnan(v))}")
        if self.side == MASS:
            bad = ~np.isfinite(v) | (v < 0)
            if bad.any():
                raise GridError(f"mass-side value must be finite and >= 0; bad index {_first(bad)}")
            if not (v > 0).any():
                raise GridError("mass-side function is identically 0")
        else:
            if np.isneginf(v).any():
                raise GridError(f"convex-side value -inf at index {_first(np.isneginf(v))}")
            if not np.isfinite(v).any():
                raise GridError("convex-side function is identically +inf")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    def with_values(self, values, side: str | None = None, **meta) -> "GridFn":
        return GridFn(self.spec, side or self.side, values, meta)

    @property
    def finite(self) -> np.ndarray:
        return np.isfinite(self.values)

    def __repr__(self):
        return f"GridFn(side={self.side!r}, spec={self.spec}, meta={dict(self.meta)})"


def _first(mask: np.ndarray) -> tuple[int, ...]:
    return tuple(int(i) for i in np.argwhere(mask)[0])


def sample(descriptor, spec: GridSpec, side: str = MASS) -> GridFn:
    """Evaluate a function descriptor (or a plain callable on points) on the grid.

    Descriptors expose ``evaluate(points, side)``; callables receive the point
    array of shape ``(*shape, dim)`` and return values of shape ``shape``.
    """
    pts = spec.points()
    if hasattr(descriptor, "evaluate"):
        vals = descriptor.evaluate(pts, side)
    else:
        vals = descriptor(pts)
    vals = np.broadcast_to(np.asarray(vals, dtype=float), spec.shape)
    if side == MASS and (vals < 0).any():
        raise GridError(f"negative mass-side value at index {_first(vals < 0)}")
    if side == CONVEX and np.isneginf(vals).any():
        raise GridError(f"-inf convex-side value at index {_first(np.isneginf(vals))}")
    return GridFn(spec, side, vals)


def _trapz(values: np.ndarray, spec: GridSpec) -> float:
    out = values
    for i, h in enumerate(spec.h):
        out = np.trapezoid(out, dx=h, axis=0)
    return float(out)


def integrate(f: GridFn) -> float:
    """Tensor-product trapezoid rule over the grid box."""
    if f.side != MASS:
        raise TypeError("integrate expects a mass-side function")
    return _trapz(f.values, f.spec)


def integrate_with_error(f: GridFn) -> tuple[float, float]:
    """Trapezoid value and a step-doubling error estimate |T_h - T_2h|.

    No Richardson factor is applied, so the estimate stays conservative for
    integrands with jumps (indicators), where the rule is only first order.
    """
    if f.side != MASS:
        raise TypeError("integrate expects a mass-side function")
    return weighted_integral(f.values, f.spec)


def weighted_integral(values: np.ndarray, spec: GridSpec) -> tuple[float, float]:
    """Trapezoid value and step-doubling error for a raw finite array on ``spec``."""
    values = np.asarray(values, dtype=float)
    full = _trapz(values, spec)
    # largest prefix box with an even number of cells per axis
    sl, sub_m, sub_hi = [], [], []
    for a, h, k in zip(spec.lo, spec.h, spec.m):
        kk = (k - 1) // 2 * 2 + 1
        sl.append(slice(0, kk))
        sub_m.append(kk)
        sub_hi.append(a + (kk - 1) * h)
    if min(sub_m) < 5:
        return full, 0.0
    sub = GridSpec(spec.lo, tuple(sub_hi), tuple(sub_m))
    inner = values[tuple(sl)]
    fine = _trapz(inner, sub)
    coarse = _trapz(inner[tuple(slice(None, None, 2) for _ in sub_m)], sub.coarsen())
    return full, abs(fine - coarse)


def gradient_central(f: GridFn) -> np.ndarray:
    """Per-axis derivative samples, shape ``(dim, *shape)``.

    Central differences in the interior, first-order one-sided at the boundary.
    """
    if not np.isfinite(f.values).all():
        raise GridError("gradient_central needs finite values everywhere")
    grads = np.gradient(f.values, *f.spec.h, edge_order=1)
    if f.spec.dim == 1:
        grads = [grads]
    return np.stack(grads)


def interpolate(f: GridFn, points: np.ndarray) -> tuple[np.ndarray, bool]:
    """Multilinear interpolation of ``f`` at arbitrary points.

    A corner with non-zero weight that is +inf (convex side) or 0 (mass side)
    makes the result +inf / 0, so supports and effective domains are resampled
    without smearing.  Points outside the box get +inf / 0; the second return
    value reports whether that happened.
    """
    spec = f.spec
    points = np.asarray(points, dtype=float)
    shape = points.shape[:-1]
    empty = np.inf if f.side == CONVEX else 0.0
    out_of_box = np.zeros(shape, dtype=bool)
    lower, frac = [], []
    for i in range(spec.dim):
        t = (points[..., i] - spec.lo[i]) / spec.h[i]
        r = np.rint(t)
        t = np.where(np.abs(t - r) <= SNAP * np.maximum(1.0, np.abs(t)), r, t)
        out_of_box |= (t < 0) | (t > spec.m[i] - 1)
        k = np.clip(np.floor(t), 0, spec.m[i] - 2).astype(int)
        s = np.clip(t - k, 0.0, 1.0)
        lower.append(k)
        frac.append(s)
    vals = np.zeros(shape)
    blocked = out_of_box.copy()
    for corner in np.ndindex(*(2,) * spec.dim):
        w = np.ones(shape)
        idx = []
        for i, c in enumerate(corner):
            w = w * (frac[i] if c else 1.0 - frac[i])
            idx.append(lower[i] + c)
        v = f.values[tuple(idx)]
        active = w > 0
        if f.side == CONVEX:
            blocked |= active & ~np.isfinite(v)
        else:
            blocked |= active & (v == 0)
        vals = vals + np.where(active & np.isfinite(v), w * np.where(np.isfinite(v), v, 0.0), 0.0)
    vals = np.where(blocked, empty, vals)
    return vals, bool(out_of_box.any())


def second_differences(values: np.ndarray, axis: int) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    return v[2:] - 2 * v[1:-1] + v[:-2]


def is_discretely_convex(f: GridFn, rtol: float = 1e-10) -> bool:
    """Convexity along every grid line: contiguous finite runs, second differences >= -tol."""
    v = f.values
    for axis in range(f.spec.dim):
        lines = np.moveaxis(v, axis, -1).reshape(-1, f.spec.m[axis])
        for line in lines:
            fin = np.flatnonzero(np.isfinite(line))
            if fin.size == 0:
                continue
            if fin[-1] - fin[0] + 1 != fin.size:
                return False
            seg = line[fin[0]:fin[-1] + 1]
            if seg.size >= 3:
                d2 = seg[2:] - 2 * seg[1:-1] + seg[:-2]
                scale = max(1.0, float(np.max(np.abs(seg))))
                if d2.min() < -rtol * scale:
                    return False
    return True
