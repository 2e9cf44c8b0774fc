"""Discrete Legendre-Fenchel transform, convex envelope and inf/sup-convolution.

The transform takes the supremum over sampled nodes only.  In one dimension it
runs in linear time after a lower-hull pass: the conjugate at ``y`` is attained
at the hull vertex whose incoming/outgoing edge slopes bracket ``y``.  Two
dimensional transforms are two nested one dimensional passes,
``sup_{x1,x2} = sup_{x1} sup_{x2}``.
"""
from __future__ import annotations

import numpy as np

from .extgrid import CONVEX, MASS, GridError, GridFn, GridSpec, is_discretely_convex

# vectorised pruning rounds before falling back to the sequential monotone chain
_PRUNE_ROUNDS = 64


def monotone_chain_lower(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of points sorted by ``x`` (collinear points dropped)."""
    xs = np.asarray(x, dtype=float).tolist()
    fs = np.asarray(f, dtype=float).tolist()
    hull: list[int] = []
    for i in range(len(xs)):
        xi, fi = xs[i], fs[i]
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (xs[b] - xs[a]) * (fi - fs[a]) - (fs[b] - fs[a]) * (xi - xs[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=int)


def lower_hull(x: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Lower hull vertex indices of finite points sorted by ``x``.

    Repeatedly drops, all at once, every point that does not make a strict
    left turn with its current neighbours.  Such a point is never a hull vertex,
    so simultaneous removal is safe.  Convex data exits after one round.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    keep = np.arange(x.size)
    for _ in range(_PRUNE_ROUNDS):
        if keep.size < 3:
            return keep
        xa, xb, xc = x[keep[:-2]], x[keep[1:-1]], x[keep[2:]]
        fa, fb, fc = f[keep[:-2]], f[keep[1:-1]], f[keep[2:]]
        cross = (xb - xa) * (fc - fa) - (fb - fa) * (xc - xa)
        bad = cross <= 0
        if not bad.any():
            return keep
        mask = np.ones(keep.size, dtype=bool)
        mask[1:-1] = ~bad
        keep = keep[mask]
    return keep[monotone_chain_lower(x[keep], f[keep])]


def conjugate_1d(x: np.ndarray, f: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """max_i (x_i*y - f_i) for every y, with the maximising index (ties -> smaller index).

    Entries of ``f`` equal to +inf are ignored; if all are +inf the result is -inf.
    """
    y = np.asarray(y, dtype=float)
    fin = np.flatnonzero(np.isfinite(f))
    if fin.size == 0:
        return np.full(y.shape, -np.inf), np.full(y.shape, -1)
    xs, fs = x[fin], f[fin]
    hull = lower_hull(xs, fs)
    hx, hf = xs[hull], fs[hull]
    if hull.size == 1:
        k = np.zeros(y.shape, dtype=int)
    else:
        slopes = np.diff(hf) / np.diff(hx)
        k = np.searchsorted(slopes, y, side="left")
    return hx[k] * y - hf[k], fin[hull][k]


def dual_grid(phi: GridFn, pad: float = 0.1, m=None, resolve: bool = False,
              max_points: int = 1 << 22) -> GridSpec:
    """Symmetric dual box sized by the largest finite slope along each axis.

    With ``resolve=True`` (one dimension) the dual spacing is made no larger
    than the smallest slope jump between consecutive hull edges, so every hull
    vertex is exposed by some dual node and the double transform reproduces it.
    """
    v = phi.values
    radius, counts = [], []
    for axis, h in enumerate(phi.spec.h):
        with np.errstate(invalid="ignore"):  # inf - inf outside the domain
            d = np.diff(v, axis=axis) / h
        d = d[np.isfinite(d)]
        r = float(np.max(np.abs(d))) if d.size else 1.0
        r = (r if r > 0 else 1.0) * (1 + pad)
        radius.append(r)
        counts.append(phi.spec.m[axis] if m is None else int(np.atleast_1d(m)[axis % np.size(m)]))
    if resolve:
        if phi.spec.dim != 1:
            raise ValueError("resolve=True is supported in one dimension only")
        x = phi.spec.axis(0)
        fin = np.isfinite(v)
        hull = lower_hull(x[fin], v[fin])
        if hull.size >= 3:
            slopes = np.diff(v[fin][hull]) / np.diff(x[fin][hull])
            jump = float(np.min(np.diff(slopes)))
            need = int(np.ceil(2 * radius[0] / jump)) + 1
            counts[0] = min(max(counts[0], need), max_points)
    return GridSpec(tuple(-r for r in radius), tuple(radius), tuple(counts))


def legendre(phi: GridFn, dual: GridSpec | None = None) -> GridFn:
    """Discrete conjugate phi*(y) = max over nodes x of <x,y> - phi(x), sampled on ``dual``.

    ``meta['boundary_argmax']`` counts dual nodes whose maximiser sits on the
    primal box boundary, a sign that the primal box truncates the supremum.
    """
    if phi.side != CONVEX:
        raise TypeError("legendre expects a convex-side function")
    if not np.isfinite(phi.values).any():
        raise GridError("legendre of an identically +inf function")
    if dual is None:
        dual = dual_grid(phi)
    if dual.dim != phi.spec.dim:
        raise GridError("dual grid dimension differs from primal")
    spec = phi.spec
    if spec.dim == 1:
        val, arg = conjugate_1d(spec.axis(0), phi.values, dual.axis(0))
        on_edge = (arg == 0) | (arg == spec.m[0] - 1)
        return GridFn(dual, CONVEX, val, {"boundary_argmax": int(on_edge.sum())})

    x0, x1 = spec.axes()
    y0, y1 = dual.axes()
    inner = np.empty((spec.m[0], dual.m[1]))
    arg1 = np.empty((spec.m[0], dual.m[1]), dtype=int)
    for i in range(spec.m[0]):
        inner[i], arg1[i] = conjugate_1d(x1, phi.values[i], y1)
    # rows with no finite value give -inf, i.e. +inf in the outer pass
    outer_in = -inner
    out = np.empty(dual.shape)
    arg0 = np.empty(dual.shape, dtype=int)
    for j in range(dual.m[1]):
        out[:, j], arg0[:, j] = conjugate_1d(x0, outer_in[:, j], y0)
    a1 = arg1[arg0, np.arange(dual.m[1])[None, :]]
    on_edge = (arg0 == 0) | (arg0 == spec.m[0] - 1) | (a1 == 0) | (a1 == spec.m[1] - 1)
    return GridFn(dual, CONVEX, out, {"boundary_argmax": int(on_edge.sum())})


def convex_envelope(phi: GridFn, dual: GridSpec | None = None) -> GridFn:
    """Largest convex minorant of the sampled data, restricted to the primal grid.

    One dimension: exact lower hull, interpolated linearly between vertices and
    +inf outside the hull's x-range.  Two dimensions: double discrete transform
    through ``dual`` (default :func:`dual_grid`), +inf outside the convex hull
    of the finite nodes.
    """
    if phi.side != CONVEX:
        raise TypeError("convex_envelope expects a convex-side function")
    if not np.isfinite(phi.values).any():
        raise GridError("convex envelope of an identically +inf function")
    spec = phi.spec
    if spec.dim == 1:
        x = spec.axis(0)
        fin = np.flatnonzero(np.isfinite(phi.values))
        hull = fin[lower_hull(x[fin], phi.values[fin])]
        out = np.full(spec.shape, np.inf)
        lo, hi = hull[0], hull[-1]
        out[lo:hi + 1] = np.interp(x[lo:hi + 1], x[hull], phi.values[hull])
        out[hull] = phi.values[hull]
        return GridFn(spec, CONVEX, out)

    star = legendre(phi, dual)
    env = legendre(star, spec).values.copy()
    fin = np.isfinite(phi.values)
    if not fin.all():
        env[~_in_hull(spec.points()[fin], spec.points())] = np.inf
    return GridFn(spec, CONVEX, env)


def _in_hull(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    from scipy.spatial import Delaunay
    from scipy.spatial import QhullError

    flat = points.reshape(-1, points.shape[-1])
    try:
        tri = Delaunay(vertices)
    except QhullError:
        # degenerate (collinear) domain: keep only the sampled finite nodes
        keys = {tuple(v) for v in np.round(vertices, 12)}
        inside = np.array([tuple(p) in keys for p in np.round(flat, 12)])
        return inside.reshape(points.shape[:-1])
    return (tri.find_simplex(flat, tol=1e-12) >= 0).reshape(points.shape[:-1])


def _check_pair(a: GridFn, b: GridFn, side: str):
    if a.side != side or b.side != side:
        raise TypeError(f"expected two {side}-side functions")
    if a.spec != b.spec:
        raise GridError("grid mismatch: both inputs must share one GridSpec")
    return a.spec.zero_index()


def _shift_scan(a: np.ndarray, b: np.ndarray, zero, active: np.ndarray, combine, better, init):
    """out[k] = best over i in active of combine(a[i], b[k - i + zero])."""
    out = np.full(a.shape, init)
    shape = a.shape
    for i in np.argwhere(active):
        shift = [int(ii) - z for ii, z in zip(i, zero)]
        dst, src = [], []
        for s, n in zip(shift, shape):
            lo_k, hi_k = max(0, s), min(n, n + s)
            if lo_k >= hi_k:
                break
            dst.append(slice(lo_k, hi_k))
            src.append(slice(lo_k - s, hi_k - s))
        else:
            cand = combine(a[tuple(i)], b[tuple(src)])
            region = out[tuple(dst)]
            np.copyto(region, cand, where=better(cand, region))
    return out


def inf_convolve(phi: GridFn, psi: GridFn, route: str = "auto") -> GridFn:
    """(phi box psi)(x) = min over node pairs y + z = x of phi(y) + psi(z).

    ``route``: ``"dual"`` merges the slope sequences of two discretely convex
    one-dimensional inputs, which is the conjugate-sum route carried out in
    slope space and exact on the grid; ``"direct"`` scans all node pairs;
    ``"auto"`` takes the dual route whenever it applies.  The dual route would
    silently convexify non-convex data, so auto never uses it there.
    """
    zero = _check_pair(phi, psi, CONVEX)
    convex_1d = phi.spec.dim == 1 and is_discretely_convex(phi) and is_discretely_convex(psi)
    if route == "auto":
        route = "dual" if convex_1d else "direct"
    if route == "dual":
        if not convex_1d:
            raise ValueError("dual route needs discretely convex one-dimensional inputs")
        out = _merge_route(phi.values, psi.values, zero[0])
    elif route == "direct":
        a, b = phi.values, psi.values
        out = _shift_scan(a, b, zero, np.isfinite(a), np.add, np.less, np.inf)
    else:
        raise ValueError(f"unknown route {route!r}")
    return GridFn(phi.spec, CONVEX, out, {"route": route})


def _merge_route(a: np.ndarray, b: np.ndarray, zero: int) -> np.ndarray:
    fa, fb = np.flatnonzero(np.isfinite(a)), np.flatnonzero(np.isfinite(b))
    sa, sb = a[fa[0]:fa[-1] + 1], b[fb[0]:fb[-1] + 1]
    steps = np.sort(np.concatenate([np.diff(sa), np.diff(sb)]), kind="stable")
    vals = sa[0] + sb[0] + np.concatenate([[0.0], np.cumsum(steps)])
    start = fa[0] + fb[0] - zero
    out = np.full(a.shape, np.inf)
    k = np.arange(vals.size) + start
    ok = (k >= 0) & (k < a.size)
    if not ok.any():
        raise GridError("inf-convolution has no finite value on the grid")
    out[k[ok]] = vals[ok]
    return out


def sup_convolve(f: GridFn, g: GridFn) -> GridFn:
    """(f * g)(x) = max over node pairs y + z = x of f(y) g(z) (Asplund sum)."""
    zero = _check_pair(f, g, MASS)
    out = _shift_scan(f.values, g.values, zero, f.values > 0, np.multiply, np.greater, 0.0)
    return GridFn(f.spec, MASS, out)
