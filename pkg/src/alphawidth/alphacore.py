"""Algebra of alpha-concave functions through their convex bases.

For alpha < 0 (beta = -1/alpha) the base of f is ``beta*(f^(-1/beta) - 1)``
and the inverse is ``(1 + phi/beta)^(-beta)``; at alpha = 0 they are
``-log f`` and ``exp(-phi)``.  Sums are inf-convolutions of bases, homotheties
rescale the base, and the support function is the conjugate of the base.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import lft
from .extgrid import CONVEX, MASS, GridError, GridFn, GridSpec, interpolate, is_discretely_convex

# masses below this are treated as exactly zero (base +inf)
TINY_MASS = 1e-300


class AlphaDomainError(ValueError):
    """A base value reached -beta, so no alpha-concave function has it as base."""


@dataclasses.dataclass(frozen=True)
class AlphaParam:
    alpha: float
    beta: float = dataclasses.field(default=None)

    def __post_init__(self):
        a = float(self.alpha)
        if math.isnan(a) or a > 0 or math.isinf(a):
            raise ValueError(f"alpha must lie in (-inf, 0], got {a}")
        if self.beta is None:
            object.__setattr__(self, "beta", math.inf if a == 0 else -1.0 / a)
        object.__setattr__(self, "alpha", a)

    @classmethod
    def from_beta(cls, beta: float) -> "AlphaParam":
        beta = float(beta)
        if not beta > 0:
            raise ValueError(f"beta must be positive, got {beta}")
        return cls(0.0 if math.isinf(beta) else -1.0 / beta, beta)

    @property
    def log_concave(self) -> bool:
        return math.isinf(self.beta)

    def kappa(self, n: int) -> float:
        """alpha/(1 + n alpha) = 1/(n - beta); defined for alpha >= -1/n."""
        if self.log_concave:
            return 0.0
        if self.beta < n:
            raise ValueError(f"kappa needs alpha >= -1/n, i.e. beta >= {n}; got beta={self.beta}")
        if self.beta == n:
            return -math.inf
        return 1.0 / (n - self.beta)

    def __str__(self):
        return f"alpha={self.alpha:g} (beta={self.beta:g})"


def base(f: GridFn, param: AlphaParam) -> GridFn:
    """Convex base of a mass-side function; zero mass maps to +inf."""
    if f.side != MASS:
        raise TypeError("base expects a mass-side function")
    v = f.values
    pos = v >= TINY_MASS
    logs = np.log(np.where(pos, v, 1.0))
    if param.log_concave:
        phi = -logs
    else:
        phi = param.beta * np.expm1(-logs / param.beta)
    return GridFn(f.spec, CONVEX, np.where(pos, phi, np.inf))


def unbase(phi: GridFn, param: AlphaParam) -> GridFn:
    """Inverse of :func:`base`; +inf maps to 0.  Raises if some value is <= -beta."""
    if phi.side != CONVEX:
        raise TypeError("unbase expects a convex-side function")
    v = phi.values
    fin = np.isfinite(v)
    if not param.log_concave and (v[fin] <= -param.beta).any():
        bad = tuple(int(i) for i in np.argwhere(fin & (v <= -param.beta))[0])
        raise AlphaDomainError(
            f"base value {v[bad]:g} <= -beta = {-param.beta:g} at index {bad}; "
            "a convex base always exceeds -beta")
    w = np.where(fin, v, 0.0)
    with np.errstate(over="ignore", under="ignore"):
        if param.log_concave:
            m = np.exp(-w)
        else:
            m = np.exp(-param.beta * np.log1p(w / param.beta))
    m = np.where(fin & (m >= TINY_MASS), m, 0.0)
    return GridFn(phi.spec, MASS, m)


@dataclasses.dataclass(frozen=True, eq=False)
class AlphaFn:
    """An alpha-concave function sampled on a grid, with its base cached."""
    param: AlphaParam
    mass: GridFn
    base: GridFn

    @classmethod
    def from_mass(cls, mass: GridFn, param: AlphaParam, check: bool = True) -> "AlphaFn":
        phi = base(mass, param)
        if check and not is_discretely_convex(phi):
            raise GridError(f"mass is not {param}-concave along some grid line")
        return cls(param, mass, phi)

    @classmethod
    def from_base(cls, phi: GridFn, param: AlphaParam, check: bool = True) -> "AlphaFn":
        if check and not is_discretely_convex(phi):
            raise GridError("base is not convex along some grid line")
        return cls(param, unbase(phi, param), phi)

    @classmethod
    def sample(cls, descriptor, spec: GridSpec, param: AlphaParam) -> "AlphaFn":
        """Sample a descriptor's base and push it through ``unbase``."""
        from .extgrid import sample
        return cls.from_base(sample(descriptor, spec, CONVEX), param)

    @property
    def spec(self) -> GridSpec:
        return self.mass.spec


def _same(f: AlphaFn, g: AlphaFn):
    if f.param != g.param:
        raise ValueError("alpha-sum operands must share one alpha")
    if f.spec != g.spec:
        raise GridError("alpha-sum operands must share one grid")


def support_function(f: AlphaFn, dual: GridSpec | None = None) -> GridFn:
    """h_f = (base f)^*, sampled on ``dual``."""
    return lft.legendre(f.base, dual)


def alpha_sum(f: AlphaFn, g: AlphaFn, route: str = "auto") -> AlphaFn:
    """f +_alpha g: the function whose base is (base f) box (base g)."""
    _same(f, g)
    phi = lft.inf_convolve(f.base, g.base, route=route)
    v = phi.values
    if not f.param.log_concave and (v[np.isfinite(v)] <= -f.param.beta).any():
        raise AlphaDomainError(
            "sum undefined: the inf-convolution of the bases reaches -beta, "
            "so it is not the base of an alpha-concave function")
    return AlphaFn(f.param, unbase(phi, f.param), phi)


def _rescaled(fn: GridFn, lam: float) -> tuple[np.ndarray, bool]:
    return interpolate(fn, fn.spec.points() / lam)


def alpha_scale(lam: float, f: AlphaFn) -> AlphaFn:
    """lam ._alpha f, with base x -> lam * (base f)(x / lam).

    ``x / lam`` is resolved by linear interpolation of the base; points that
    land outside the primal box get +inf and ``meta['truncated']`` is set.
    """
    if not lam > 0:
        raise ValueError("homothety factor must be positive")
    vals, outside = _rescaled(f.base, lam)
    phi = GridFn(f.spec, CONVEX, lam * vals, {"truncated": outside})
    return AlphaFn(f.param, unbase(phi, f.param), phi)


def convex_combination(lam: float, f: AlphaFn, g: AlphaFn) -> AlphaFn:
    """[lam . f] +_alpha [(1 - lam) . g] by direct max-scan of the power-mean formula.

    h(x) = sup_{y+z=x} [lam f(y/lam)^alpha + (1-lam) g(z/(1-lam))^alpha]^(1/alpha),
    with the rescaled masses obtained by linear interpolation of the masses
    themselves (not of the bases).  For alpha = 0 this is the sup-convolution
    of f(./lam)^lam and g(./(1-lam))^(1-lam).
    """
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    _same(f, g)
    zero = f.spec.zero_index()
    fy, _ = _rescaled(f.mass, lam)
    gz, _ = _rescaled(g.mass, 1 - lam)
    for name, k, v in (("f", lam, fy), ("g", 1 - lam, gz)):
        if not (v > 0).any():
            raise AlphaDomainError(f"{k:g} . {name} has no mass on the grid: its support is narrower than one cell")
    alpha = f.param.alpha
    if f.param.log_concave:
        a = fy ** lam
        b = gz ** (1 - lam)
        out = lft._shift_scan(a, b, zero, a > 0, np.multiply, np.greater, 0.0)
    else:
        with np.errstate(divide="ignore"):
            a = np.where(fy >= TINY_MASS, lam * np.where(fy > 0, fy, 1.0) ** alpha, np.inf)
            b = np.where(gz >= TINY_MASS, (1 - lam) * np.where(gz > 0, gz, 1.0) ** alpha, np.inf)
        best = lft._shift_scan(a, b, zero, np.isfinite(a), np.add, np.less, np.inf)
        fin = np.isfinite(best)
        out = np.where(fin, np.where(fin, best, 1.0) ** (1 / alpha), 0.0)
    mass = GridFn(f.spec, MASS, out)
    return AlphaFn.from_mass(mass, f.param, check=False)


@dataclasses.dataclass(frozen=True)
class ConcavityReport:
    passed: bool
    worst: float
    location: tuple | None
    alpha: float

    def __bool__(self):
        return self.passed


def power_mean(a, b, alpha: float, lam: float = 0.5):
    """[lam a^alpha + (1-lam) b^alpha]^(1/alpha) with the limit conventions at 0, +-inf."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if alpha == -math.inf:
        return np.minimum(a, b)
    if alpha == math.inf:
        return np.maximum(a, b)
    if abs(alpha) < 1e-150:
        # alpha log x would underflow; the geometric mean is exact to O(alpha log^2 x)
        geo = a ** lam * b ** (1 - lam)
        return np.where((a == 0) | (b == 0), 0.0, geo) if alpha <= 0 else geo
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        u, v = alpha * np.log(a), alpha * np.log(b)
        # small |alpha log x|: expm1/log1p avoid the cancellation in x^alpha - 1
        small = np.log1p(lam * np.expm1(u) + (1 - lam) * np.expm1(v)) / alpha
        large = np.logaddexp(u + math.log(lam), v + math.log1p(-lam)) / alpha
        out = np.exp(np.where((np.abs(u) < 1) & (np.abs(v) < 1), small, large))
    return np.where((a == 0) | (b == 0), 0.0 if alpha < 0 else out, out)


def is_alpha_concave(f: GridFn, alpha: float, tol: float = 1e-10) -> ConcavityReport:
    """Midpoint test f((x+y)/2) >= M_alpha(f(x), f(y)) over all node pairs in the support.

    Pairs with a zero value are outside the support and skipped; a zero at the
    midpoint of two support points is a violation (non-convex support).
    Accepts any alpha in [-inf, +inf].
    """
    if f.side != MASS:
        raise TypeError("is_alpha_concave expects a mass-side function")
    v = f.values
    shape = v.shape
    worst, where = -math.inf, None
    ranges = [range(-(n - 1) // 2, (n - 1) // 2 + 1) for n in shape]
    for d in np.ndindex(*(len(r) for r in ranges)):
        d = tuple(r[k] for r, k in zip(ranges, d))
        if d <= (0,) * len(d):
            continue  # each unordered pair once; skip d == 0
        lo = tuple(slice(max(0, 2 * -di), n - max(0, 2 * di)) for di, n in zip(d, shape))
        if any(s.start >= s.stop for s in lo):
            continue
        a = v[lo]
        mid = v[tuple(slice(s.start + di, s.stop + di) for s, di in zip(lo, d))]
        b = v[tuple(slice(s.start + 2 * di, s.stop + 2 * di) for s, di in zip(lo, d))]
        both = (a > 0) & (b > 0)
        if not both.any():
            continue
        with np.errstate(over="ignore", divide="ignore"):
            m = power_mean(np.where(both, a, 1.0), np.where(both, b, 1.0), alpha)
        gap = np.where(both, m - mid - tol * np.maximum(1.0, m), -np.inf)
        k = int(np.argmax(gap))
        if gap.flat[k] > worst:
            worst = float(gap.flat[k])
            first = np.unravel_index(k, a.shape)
            start = tuple(int(s.start + i) for s, i in zip(lo, first))
            where = (start,
                     tuple(p + di for p, di in zip(start, d)),
                     tuple(p + 2 * di for p, di in zip(start, d)))
    passed = worst <= 0
    return ConcavityReport(passed, max(worst, 0.0), None if passed else where, alpha)


def make_G_alpha(spec: GridSpec, param: AlphaParam) -> AlphaFn:
    """G_alpha on the grid, built from its base |x|^2/2."""
    phi = GridFn(spec, CONVEX, spec.norm2() / 2)
    return AlphaFn(param, unbase(phi, param), phi)
