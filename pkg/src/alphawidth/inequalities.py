"""Numerical verifiers for the BBL, Urysohn and Poincare-type inequalities.

Every check returns a :class:`CheckReport` whose tolerance is computed from
the error estimates of both sides (plus ``10 * eps * |rhs|``), never fixed.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from . import lft
from .alphacore import AlphaDomainError, AlphaFn, AlphaParam, convex_combination, is_alpha_concave
from .extgrid import (CONVEX, MASS, GridError, GridFn, GridSpec, gradient_central, integrate_with_error,
                      interpolate, is_discretely_convex, weighted_integral)
from .meanwidth import (integral_G_alpha, kernel_from_norm2, mean_width_repr, symmetric_grid, tail_bound,
                        truncation_radius)

EPS = np.finfo(float).eps


class ParameterRangeError(ValueError):
    """alpha or beta outside the range where an inequality is stated."""


@dataclasses.dataclass(frozen=True)
class CheckReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    tolerance: float
    passed: bool
    diagnostics: dict = dataclasses.field(default_factory=dict)

    @classmethod
    def build(cls, name: str, lhs: float, rhs: float, tolerance: float, **diagnostics) -> "CheckReport":
        slack = lhs - rhs
        if math.isnan(slack):
            slack = -math.inf if lhs != rhs else 0.0
        return cls(name, float(lhs), float(rhs), float(slack), float(tolerance),
                   bool(slack >= -tolerance), diagnostics)

    def __bool__(self):
        return self.passed


def _kappa(param: AlphaParam, n: int) -> float:
    try:
        return param.kappa(n)
    except ValueError as exc:
        raise ParameterRangeError(
            f"the inequality needs alpha >= -1/n = {-1 / n:g}; got {param}") from exc


def kappa_mean(a: float, b: float, kappa: float, lam: float) -> float:
    """[lam a^kappa + (1-lam) b^kappa]^(1/kappa); geometric at 0, min at -inf."""
    if kappa == 0:
        return a ** lam * b ** (1 - lam)
    if kappa == -math.inf:
        return min(a, b)
    return (lam * a ** kappa + (1 - lam) * b ** kappa) ** (1 / kappa)


def _subsample(f: AlphaFn, coarse: GridSpec) -> AlphaFn:
    mass = f.mass.values[tuple(slice(None, None, 2) for _ in coarse.m)]
    return AlphaFn.from_mass(GridFn(coarse, MASS, mass), f.param, check=False)


def edge_error(mass: GridFn) -> float:
    """Trapezoid error bound from the jump of an alpha-concave mass at its support edge.

    Such a mass is continuous inside its support, so jumps sit only where the
    support ends; each crossing along a grid line is known to within one cell.
    Step doubling misses this when the coarse grid happens to resolve the edge
    the same way as the fine one.
    """
    total = 0.0
    for axis in range(mass.spec.dim):
        v = np.moveaxis(mass.values, axis, 0)
        crossing = (v[1:] > 0) != (v[:-1] > 0)
        total += float(np.maximum(v[1:], v[:-1])[crossing].sum())
    return total * mass.spec.cell_volume


def check_bbl(f: AlphaFn, g: AlphaFn, lam: float, kappa: float | None = None) -> CheckReport:
    """int [lam . f] + [(1-lam) . g] >= kappa-mean of (int f, int g).

    ``kappa`` defaults to alpha/(1 + n alpha).  A larger kappa (up to 1/n) is
    accepted only if both masses pass the midpoint test for the matching
    alpha' = kappa/(1 - n kappa); this covers the Brunn-Minkowski case of
    indicators, which are concave for every alpha.
    """
    n = f.spec.dim
    k0 = _kappa(f.param, n)
    if kappa is None:
        kappa = k0
    elif kappa > 1 / n + 1e-15:
        raise ParameterRangeError(f"kappa must not exceed 1/n = {1 / n:g}")
    elif kappa > k0:
        a2 = math.inf if abs(kappa - 1 / n) <= 1e-15 else kappa / (1 - n * kappa)
        for name, fn in (("f", f), ("g", g)):
            if not is_alpha_concave(fn.mass, a2):
                raise ParameterRangeError(f"{name} is not {a2:g}-concave, so kappa={kappa:g} is not justified")
    h = convex_combination(lam, f, g)
    lhs, lerr = integrate_with_error(h.mass)
    lerr += edge_error(h.mass)
    res = 0.0
    coarse = f.spec.coarsen()
    if coarse is not None:
        try:
            coarse.zero_index()
            hc = convex_combination(lam, _subsample(f, coarse), _subsample(g, coarse))
            res = abs(integrate_with_error(hc.mass)[0] - lhs)
        except GridError:
            pass
        except AlphaDomainError as exc:
            # without the coarse grid there is no resolution estimate to report
            raise AlphaDomainError(f"grid too coarse to estimate the resolution error ({exc}); refine it") from exc
    i_f, e_f = integrate_with_error(f.mass)
    i_g, e_g = integrate_with_error(g.mass)
    e_f, e_g = e_f + edge_error(f.mass), e_g + edge_error(g.mass)
    rhs = kappa_mean(i_f, i_g, kappa, lam)
    # propagate the integral errors through the power mean by perturbation
    rerr = max(abs(kappa_mean(i_f + sf * e_f, i_g + sg * e_g, kappa, lam) - rhs)
               for sf in (-1, 1) for sg in (-1, 1) if i_f + sf * e_f > 0 and i_g + sg * e_g > 0) \
        if e_f or e_g else 0.0
    tol = lerr + res + rerr + 10 * EPS * abs(rhs)
    return CheckReport.build("bbl", lhs, rhs, tol, kappa=kappa, lam=lam, int_f=i_f, int_g=i_g,
                             lhs_quadrature=lerr, lhs_resolution=res, rhs_error=rerr,
                             grid_m=f.spec.m)


def _kappa_term(ratio: float, kappa: float) -> float:
    """(ratio^kappa - 1)/kappa, with its limits log(ratio) at 0 and the -inf branch."""
    if kappa == 0:
        return math.log(ratio)
    if kappa == -math.inf:
        return 0.0 if ratio >= 1 else -math.inf
    return math.expm1(kappa * math.log(ratio)) / kappa


def urysohn_rhs(f: AlphaFn, n: int | None = None, int_f: float | None = None) -> float:
    """int G_alpha * [n/2 + ((int f / int G_alpha)^kappa - 1)/kappa]."""
    n = f.spec.dim if n is None else n
    kappa = _kappa(f.param, n)
    ig = integral_G_alpha(n, f.param.beta)
    if int_f is None:
        int_f = integrate_with_error(f.mass)[0]
    return ig * (n / 2 + _kappa_term(int_f / ig, kappa))


def check_urysohn(f: AlphaFn, dual: GridSpec | None = None) -> CheckReport:
    n = f.spec.dim
    kappa = _kappa(f.param, n)
    width = mean_width_repr(f, dual)
    i_f, e_f = integrate_with_error(f.mass)
    e_f += edge_error(f.mass)
    rhs = urysohn_rhs(f, n, i_f)
    ig = integral_G_alpha(n, f.param.beta)
    # d rhs / d int_f = (int_f / int_G)^(kappa - 1)
    if math.isfinite(kappa):
        rerr = (i_f / ig) ** (kappa - 1) * e_f
    else:
        rerr = 0.0
    tol = width.quadrature_error_estimate + rerr + 10 * EPS * abs(rhs)
    return CheckReport.build("urysohn", width.value, rhs, tol, kappa=kappa, int_f=i_f, int_G=ig,
                             width_error=width.quadrature_error_estimate, rhs_error=rerr,
                             grid_m=width.diagnostics["grid_m"])


# test functions psi for the Poincare checks; every one grows at most quadratically
PSI_LIBRARY: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "const": lambda p: np.ones(p.shape[:-1]),
    "x": lambda p: p[..., 0],
    "x2": lambda p: np.sum(p ** 2, axis=-1),
    "cos": lambda p: np.cos(p[..., 0]),
    "x2cap": lambda p: np.minimum(np.sum(p ** 2, axis=-1), 4.0),
}


def poincare_grid(n: int, beta: float, step: float | None = None) -> GridSpec:
    """Box wide enough for quartic growth against the order-1 weight."""
    radius = truncation_radius(n, beta, growth=4, order=1, rtol=1e-10)
    if step is None:
        step = 0.005 if n == 1 else 0.05
    return symmetric_grid(n, radius, step)


def sample_psi(name: str, spec: GridSpec) -> GridFn:
    if name not in PSI_LIBRARY:
        raise ValueError(f"unknown psi {name!r}; choose from {sorted(PSI_LIBRARY)}")
    return GridFn(spec, CONVEX, PSI_LIBRARY[name](spec.points()))


def _poincare_sides(psi: np.ndarray, spec: GridSpec, beta: float, normalized: bool):
    """(lhs, rhs, lhs_err, rhs_err) on one grid; quadrature errors only."""
    r2 = spec.norm2()
    w1 = kernel_from_norm2(r2, beta, 1)
    w2 = kernel_from_norm2(r2, beta, 2)
    grad = gradient_central(GridFn(spec, CONVEX, psi))
    g2 = np.sum(grad ** 2, axis=0)
    lhs, e_l = weighted_integral(g2 * w1, spec)
    i1, e1 = weighted_integral(psi * w1, spec)
    i2, e2 = weighted_integral(psi ** 2 * w2, spec)
    if normalized:
        z, ez = weighted_integral(w1, spec)
        mean = i1 / z
        lhs, e_l = lhs / z, e_l / z + abs(lhs) * ez / z ** 2
        rhs = i2 / z - mean ** 2
        err = e2 / z + 2 * abs(mean) * e1 / z + (abs(i2) / z ** 2 + 2 * mean ** 2 / z) * ez
        return lhs, rhs, e_l, err
    n = spec.dim
    kappa = 0.0 if math.isinf(beta) else 1 / (n - beta)
    c = 1.0 if math.isinf(beta) else (beta + 1) / beta
    ig = integral_G_alpha(n, beta)
    rhs = (kappa - 1) / ig * i1 ** 2 + c * i2
    err = abs(2 * (kappa - 1) / ig * i1) * e1 + c * e2
    return lhs, rhs, e_l, err


def _growth_tails(psi: np.ndarray, spec: GridSpec, beta: float, normalized: bool) -> float:
    """Weighted mass of psi, psi^2 and |grad psi|^2 outside the box, from quadratic growth fits."""
    n = spec.dim
    r2 = spec.norm2()
    a = float(np.max(np.abs(psi) / (1 + r2)))
    grad = gradient_central(GridFn(spec, CONVEX, psi))
    b = float(np.max(np.sum(grad ** 2, axis=0) / (1 + r2)))
    r0 = min(min(-lo, hi) for lo, hi in zip(spec.lo, spec.hi))
    t1 = lambda g: tail_bound(n, beta, r0, g, 1)
    t2 = lambda g: tail_bound(n, beta, r0, g, 2)
    lhs_tail = b * (t1(0) + t1(2))
    i1_tail = a * (t1(0) + t1(2))
    i2_tail = a * a * (t2(0) + 2 * t2(2) + t2(4))
    if normalized:
        z = (2 * math.pi) ** (n / 2)
        return (lhs_tail + i2_tail + 2 * abs(float(np.max(np.abs(psi)))) * i1_tail) / z
    return lhs_tail + i2_tail + 2 * i1_tail * float(np.max(np.abs(psi)))


def _poincare(psi: GridFn, beta: float, normalized: bool, name: str) -> CheckReport:
    spec = psi.spec
    v = psi.values
    if not np.isfinite(v).all():
        raise GridError("psi must be finite on the grid")
    lhs, rhs, e_l, e_r = _poincare_sides(v, spec, beta, normalized)
    res = 0.0
    coarse = spec.coarsen()
    if coarse is not None:
        lc, rc, _, _ = _poincare_sides(v[tuple(slice(None, None, 2) for _ in coarse.m)], coarse, beta, normalized)
        res = abs(lc - lhs) + abs(rc - rhs)
    tails = _growth_tails(v, spec, beta, normalized)
    tol = e_l + e_r + res + tails + 10 * EPS * abs(rhs)
    return CheckReport.build(name, lhs, rhs, tol, beta=beta, lhs_quadrature=e_l, rhs_quadrature=e_r,
                             resolution=res, tails=tails, grid_m=spec.m)


def check_poincare(psi: GridFn, n: int | None = None, beta: float = math.inf) -> CheckReport:
    """int |grad psi|^2 w1 >= (kappa-1)/int G_alpha (int psi w1)^2 + (beta+1)/beta int psi^2 w2.

    ``w_k = (1 + |x|^2/(2 beta))^(-beta-k)`` and kappa = 1/(n - beta).  Infinite
    beta gives the unnormalized Gaussian form; see :func:`check_gaussian_poincare`
    for the probability-measure version.
    """
    n = psi.spec.dim if n is None else n
    if n != psi.spec.dim:
        raise ValueError(f"psi lives in dimension {psi.spec.dim}, not {n}")
    if not beta > n:
        raise ParameterRangeError(f"the Poincare-type inequality needs beta > n = {n}; got beta={beta}")
    return _poincare(psi, float(beta), normalized=False, name="poincare")


def check_gaussian_poincare(psi: GridFn) -> CheckReport:
    """Var_gamma(psi) <= E_gamma |grad psi|^2 under the standard Gaussian measure."""
    return _poincare(psi, math.inf, normalized=True, name="gaussian-poincare")


def variation_grid(half_width: float = 1.0, step: float = 1e-6, dual_points: int = 21,
                   dual_half_width: float = 0.5) -> tuple[GridSpec, GridSpec]:
    """(primal, dual) for the variation check: a very fine 1D primal grid
    and a few dual probes that coincide with primal nodes."""
    cells = 2 * math.ceil(half_width / step)
    primal = GridSpec.box(-cells / 2 * step, cells / 2 * step, cells + 1)
    stride = round(2 * dual_half_width / step) // (dual_points - 1)
    r = stride * (dual_points - 1) // 2 * step
    return primal, GridSpec.box(-r, r, dual_points)


def check_variation_formulas(phi0: GridFn, psi: GridFn, epsilons=(0.004, 0.002, 0.001),
                             dual: GridSpec | None = None, atol: float = 1e-4,
                             floor: float = 1e-9) -> CheckReport:
    """Central differences in t of (phi0 + t psi)^* against -psi and |grad psi|^2.

    ``phi0`` must be |x|^2/2, so the maximiser at t = 0 is y itself.  Errors
    are taken at interior dual nodes.  The report has lhs = 0 and rhs = the
    worst error at the smallest step, so it passes iff that error is within
    ``atol``; the per-step errors and their reduction ratios are in the
    diagnostics (ratios are reported as inf once both errors are below ``floor``).
    Steps at which phi_t is not convex on the grid are halved until it is.
    """
    spec = phi0.spec
    if psi.spec != spec:
        raise GridError("phi0 and psi must share one grid")
    if not np.allclose(phi0.values, spec.norm2() / 2, rtol=0, atol=1e-12):
        raise ValueError("phi0 must be |x|^2/2 on its grid")
    if not np.isfinite(psi.values).all():
        raise GridError("psi must be finite on the grid")
    if dual is None:
        dual = variation_grid(-spec.lo[0], spec.h[0])[1] if spec.dim == 1 else GridSpec(
            tuple(0.5 * a for a in spec.lo), tuple(0.5 * b for b in spec.hi), (21,) * spec.dim)
    steps = [float(t) for t in epsilons]
    if not steps or any(t <= 0 for t in steps):
        raise ValueError("t-steps must be positive")

    def transform(t: float) -> np.ndarray:
        phi_t = GridFn(spec, CONVEX, phi0.values + t * psi.values)
        if not is_discretely_convex(phi_t):
            raise _NotConvex
        return lft.legendre(phi_t, dual).values

    pts = dual.points()
    target1 = -interpolate(psi, pts)[0]
    grads = gradient_central(psi)
    target2 = sum(interpolate(GridFn(spec, CONVEX, g), pts)[0] ** 2 for g in grads)
    inner = tuple(slice(1, -1) for _ in dual.m)
    f0 = transform(0.0)
    used, err1, err2 = [], [], []
    for t in steps:
        for _ in range(30):
            try:
                fp, fm = transform(t), transform(-t)
                break
            except _NotConvex:
                t /= 2
        else:
            raise ValueError("phi_t is not convex for any tested t")
        d1 = (fp - fm) / (2 * t)
        d2 = (fp - 2 * f0 + fm) / t ** 2
        used.append(t)
        err1.append(float(np.max(np.abs(d1 - target1)[inner])))
        err2.append(float(np.max(np.abs(d2 - target2)[inner])))

    def ratios(errs):
        return [math.inf if max(a, b) <= floor else (a / b if b > 0 else math.inf)
                for a, b in zip(errs, errs[1:])]

    worst = max(err1[-1], err2[-1])
    return CheckReport.build("variation", 0.0, worst, atol, t_steps=tuple(used),
                             first_errors=tuple(err1), second_errors=tuple(err2),
                             first_ratios=tuple(ratios(err1)), second_ratios=tuple(ratios(err2)),
                             grid_m=spec.m)


class _NotConvex(Exception):
    pass
