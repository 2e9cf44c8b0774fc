"""Alpha-mean width by two independent routes, plus the Gamma-function closed forms.

Representation route: integrate the support function against the kernel
``(1 + |x|^2/(2 beta))^(-beta-1)``.  Limit route: difference quotients
``(int G +_a [eps . f] - int G) / eps`` for a short schedule of eps values,
extrapolated to eps = 0.  The perturbed base is
``|x|^2/2 - eps * (phi + eps |z|^2/2)^*(x)``, which keeps f on its own grid
instead of squeezing it into an eps-wide box.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy import integrate as sp_integrate
from scipy import special

from . import lft
from .alphacore import AlphaDomainError, AlphaFn, unbase
from .extgrid import CONVEX, MASS, GridFn, GridSpec, gradient_central, weighted_integral

# Bernoulli-number coefficients B_2k / (2k (2k-1)) of the Stirling series
_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188,
             -691 / 360360, 1 / 156, -3617 / 122400)
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)
_SHIFT_TO = 15.0

DEFAULT_SCHEDULE = (0.02, 0.01, 0.005)


class WidthDomainError(ValueError):
    """The truncated integration box loses too much of the integrand."""


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0.

    Recurrence up to x >= 15, then the Stirling series with eight Bernoulli
    terms; the first omitted term is below 1e-20 there.
    """
    x = float(x)
    if not x > 0 or math.isinf(x):
        raise ValueError(f"log_gamma needs a finite x > 0, got {x}")
    prod = 1.0
    while x < _SHIFT_TO:
        prod *= x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    power = inv
    for c in _STIRLING:
        series += c * power
        power *= inv2
    return (x - 0.5) * math.log(x) - x + _HALF_LOG_2PI + series - math.log(prod)


def integral_G_alpha(n: int, beta: float, shrink: float = 1.0) -> float:
    """Closed form of int (1 + shrink |x|^2 / (2 beta))^(-beta) dx over R^n."""
    if not 0 < shrink <= 1:
        raise ValueError("shrink must lie in (0, 1]")
    if math.isinf(beta):
        return (2 * math.pi / shrink) ** (n / 2)
    if not beta > n / 2:
        raise ValueError(f"int G_alpha diverges for beta <= n/2 (beta={beta}, n={n})")
    # poch gives Gamma(b - n/2)/Gamma(b) without the cancellation of a log-gamma difference
    return (2 * math.pi * beta / shrink) ** (n / 2) * float(special.poch(beta, -n / 2))


def integral_weight(n: int, beta: float, order: int) -> float:
    """int (1 + |x|^2/(2 beta))^(-beta-order) dx; the Gaussian integral when beta is infinite."""
    if math.isinf(beta):
        return (2 * math.pi) ** (n / 2)
    g = beta + order
    return (2 * math.pi * beta) ** (n / 2) * float(special.poch(g, -n / 2))


def kernel_from_norm2(r2, beta: float, order: int):
    r2 = np.asarray(r2, dtype=float)
    if math.isinf(beta):
        return np.exp(-r2 / 2)
    return np.exp(-(beta + order) * np.log1p(r2 / (2 * beta)))


def weight_kernel(x, beta: float, order: int = 1):
    """(1 + |x|^2/(2 beta))^(-beta-order) at points ``x`` (last axis = coordinates)."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    x = np.asarray(x, dtype=float)
    r2 = np.sum(np.atleast_1d(x) ** 2, axis=-1) if x.ndim else x ** 2
    return kernel_from_norm2(r2, beta, order)


def _sphere_area(n: int) -> float:
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def tail_bound(n: int, beta: float, radius: float, growth: float = 0.0, order: int = 0) -> float:
    """int_{|x| > radius} |x|^growth (1 + |x|^2/(2 beta))^(-beta-order) dx, exactly.

    The radial integral is an incomplete Beta function after the substitution
    u = r^2/(2 beta); infinite beta uses the incomplete Gamma function.  Any
    box containing the ball of this radius loses at most this much.
    """
    a = (n + growth) / 2
    if math.isinf(beta):
        return _sphere_area(n) * 2 ** (a - 1) * special.gamma(a) * special.gammaincc(a, radius ** 2 / 2)
    b = beta + order - a
    if b <= 0:
        return math.inf
    u = radius ** 2 / (2 * beta)
    return (_sphere_area(n) * (2 * beta) ** a / 2
            * special.beta(a, b) * special.betainc(b, a, 1 / (1 + u)))


def truncation_radius(n: int, beta: float, growth: float = 0.0, order: int = 0,
                      rtol: float = 1e-4, floor: float = 6.0) -> float:
    """Smallest radius (to 1%) whose tail bound is below rtol times the full weight integral."""
    target = rtol * integral_weight(n, beta, order) if order else rtol * integral_G_alpha(n, beta)
    lo, hi = 0.0, floor
    while tail_bound(n, beta, hi, growth, order) > target:
        lo, hi = hi, 2 * hi
        if hi > 1e8:
            raise WidthDomainError("no finite truncation radius meets the tail tolerance")
    while hi - lo > 0.01 * hi:
        mid = 0.5 * (lo + hi)
        if tail_bound(n, beta, mid, growth, order) > target:
            lo = mid
        else:
            hi = mid
    return max(hi, floor)


def symmetric_grid(n: int, radius: float, step: float, max_m: int | None = None) -> GridSpec:
    """Box [-R', R']^n with R' >= radius, origin on the grid and m - 1 divisible by 4."""
    cells = 4 * math.ceil(radius / step / 2)
    if max_m is not None and cells + 1 > max_m:
        cells = 4 * ((max_m - 1) // 4)
        step = 2 * radius / cells
    r = cells // 2 * step
    return GridSpec.box(-r, r, cells + 1, dim=n)


def width_grid(n: int, beta: float, growth: float = 2.0, rtol: float = 1e-4,
               step: float | None = None) -> GridSpec:
    """Dual box for mean-width integrals of support functions growing like |x|^growth."""
    radius = truncation_radius(n, beta, growth=growth, order=1, rtol=rtol)
    if step is None:
        step = 0.02 if n == 1 else 0.12
    return symmetric_grid(n, radius, step, max_m=None if n == 1 else 801)


def width_grids(n: int, beta: float, margin: float = 1.25, **kw) -> tuple[GridSpec, GridSpec]:
    """(primal, dual) pair for width computations: the primal box is ``margin``
    times wider than the dual one, on the same step, so that superlinear bases
    attain their conjugate's supremum inside the primal box."""
    dual = width_grid(n, beta, **kw)
    step = dual.h[0]
    primal = symmetric_grid(n, margin * dual.hi[0], step, max_m=None if n == 1 else 1001)
    return primal, dual


def quadrature_G_alpha(n: int, beta: float, rtol: float = 1e-4, step: float | None = None):
    """Trapezoid integral of G_alpha over a box chosen from the tail bound.

    Returns ``(value, error_estimate, grid)``; the error estimate is the
    step-doubling quadrature error plus the analytic tail bound.
    """
    radius = truncation_radius(n, beta, rtol=rtol)
    if step is None:
        step = 0.05 if n == 1 else 0.15
    spec = symmetric_grid(n, radius, step)
    val, err = weighted_integral(kernel_from_norm2(spec.norm2(), beta, 0), spec)
    r_in = min(min(abs(a), b) for a, b in zip(spec.lo, spec.hi))
    return val, err + tail_bound(n, beta, r_in), spec


@dataclasses.dataclass(frozen=True)
class WidthResult:
    value: float
    route: str
    quadrature_error_estimate: float
    epsilon_schedule: tuple = ()
    diagnostics: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.quadrature_error_estimate < 0:
            raise ValueError("error estimate must be non-negative")
        eps = [e for e, _ in self.epsilon_schedule]
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon schedule must be strictly decreasing")


def _inscribed_radius(spec: GridSpec) -> float:
    return min(min(-a, b) for a, b in zip(spec.lo, spec.hi))


def _linear_tail(h: GridFn, beta: float) -> float:
    """Kernel-weighted integral outside the inscribed ball of a linear extension of h."""
    spec = h.spec
    n = spec.dim
    edge = np.zeros(spec.shape, dtype=bool)
    for i in range(n):
        sl = [slice(None)] * n
        sl[i] = 0
        edge[tuple(sl)] = True
        sl[i] = -1
        edge[tuple(sl)] = True
    hb = float(np.max(np.abs(h.values[edge])))
    slope = float(np.max(np.sqrt(np.sum(gradient_central(h)[:, edge] ** 2, axis=0))))
    r0 = _inscribed_radius(spec)
    if r0 <= 0:
        raise WidthDomainError("the dual box must contain the origin in its interior")

    def integrand(r):
        return r ** (n - 1) * (hb + slope * (r - r0)) * kernel_from_norm2(r * r, beta, 1)

    val, _ = sp_integrate.quad(integrand, r0, np.inf, limit=200)
    return _sphere_area(n) * val


def _require_interior(star: GridFn):
    count = star.meta.get("boundary_argmax", 0)
    if count:
        raise WidthDomainError(
            f"primal box truncates the conjugate at {count} dual nodes; enlarge the primal "
            "box, or the support function is infinite there and the width diverges")


def _dual_for(f: AlphaFn, dual: GridSpec | None) -> GridSpec:
    if dual is not None:
        return dual
    return width_grid(f.spec.dim, f.param.beta)


def mean_width_repr(f: AlphaFn, dual: GridSpec | None = None) -> WidthResult:
    """w_alpha(f) = int h_f(x) (1 + |x|^2/(2 beta))^(-beta-1) dx over the dual box plus a tail estimate.

    The error estimate adds the step-doubling quadrature error, the change
    when the transform is recomputed from every other primal node (the
    discrete sup is taken over nodes only), and the size of the tail term.
    """
    dual = _dual_for(f, dual)
    beta = f.param.beta
    h = lft.legendre(f.base, dual)
    _require_interior(h)
    w1 = kernel_from_norm2(dual.norm2(), beta, 1)
    head, qerr = weighted_integral(h.values * w1, dual)
    coarse = f.spec.coarsen()
    res_err = 0.0
    if coarse is not None:
        phi_c = GridFn(coarse, CONVEX, f.base.values[tuple(slice(None, None, 2) for _ in coarse.m)])
        if np.isfinite(phi_c.values).any():
            res_err = abs(weighted_integral(lft.legendre(phi_c, dual).values * w1, dual)[0] - head)
    tail = _linear_tail(h, beta)
    value = head + tail
    # measured against int |h| w so that widths near zero do not trip the guard
    scale = weighted_integral(np.abs(h.values) * w1, dual)[0]
    if abs(tail) > 0.01 * scale and abs(tail) > 1e-12:
        raise WidthDomainError(
            f"domain too small: tail estimate {tail:.3g} exceeds 1% of int |h| w = {scale:.3g}")
    return WidthResult(value, "representation", qerr + res_err + abs(tail),
                       diagnostics={"head": head, "tail": tail, "quadrature": qerr,
                                    "resolution": res_err,
                                    "boundary_argmax": h.meta.get("boundary_argmax", 0),
                                    "grid_m": dual.m})


def perturbed_G_mass(f: AlphaFn, eps: float, dual: GridSpec) -> GridFn:
    """Mass of G_alpha +_alpha [eps . f] on ``dual``."""
    primal = f.spec
    reg = GridFn(primal, CONVEX, f.base.values + eps * primal.norm2() / 2)
    star = lft.legendre(reg, dual)
    _require_interior(star)
    phi = GridFn(dual, CONVEX, dual.norm2() / 2 - eps * star.values)
    return unbase(phi, f.param)


def mean_width_limit(f: AlphaFn, schedule=DEFAULT_SCHEDULE, dual: GridSpec | None = None) -> WidthResult:
    """w_alpha(f) from difference quotients in eps, one Richardson step on the two smallest eps.

    ``int G_alpha`` is the closed form; the perturbed integral is the box
    quadrature plus the closed-form tail of G_alpha outside the box.
    """
    eps = [float(e) for e in schedule]
    if len(eps) < 2 or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("schedule needs >= 2 strictly decreasing positive eps values")
    dual = _dual_for(f, dual)
    n = f.spec.dim
    beta = f.param.beta
    closed = integral_G_alpha(n, beta)
    g_box, g_err = weighted_integral(kernel_from_norm2(dual.norm2(), beta, 0), dual)
    g_tail = closed - g_box
    quotients, qerrs = [], []
    for e in eps:
        try:
            mass = perturbed_G_mass(f, e, dual)
        except AlphaDomainError as exc:
            raise AlphaDomainError(f"G_alpha + eps.f undefined at eps={e}: {exc}") from exc
        a_box, a_err = weighted_integral(mass.values, dual)
        quotients.append((a_box + g_tail - closed) / e)
        qerrs.append((a_err + g_err) / e)

    def richardson(i: int) -> float:
        ea, eb = eps[i], eps[i + 1]
        return (ea * quotients[i + 1] - eb * quotients[i]) / (ea - eb)

    value = richardson(len(eps) - 2)
    if len(eps) >= 3:
        spread = abs(value - richardson(len(eps) - 3))
    else:
        spread = abs(quotients[-1] - quotients[-2])
    return WidthResult(value, "limit", spread + qerrs[-1], tuple(zip(eps, quotients)),
                       diagnostics={"int_G_closed": closed, "int_G_box": g_box,
                                    "extrapolation_spread": spread, "grid_m": dual.m})
