"""Hysteresis-loop geometry: loop widths, the constants K and L, and discretisation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from ..errors import DomainError
from .relay import RelayBank

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def loop_width(density, I1, I, I2):
    """Width of the minor loop between I1 and I2, measured at input I.

    This is the mass of the rectangle {I1 <= a1 < I, I < a2 <= I2}.
    """
    if not (0.0 <= I1 <= I <= I2 <= 1.0):
        raise DomainError(f"need 0 <= I1 <= I <= I2 <= 1, got ({I1}, {I}, {I2})")
    return density.rect(I1, I, I, I2)


def gauss_int_np(a, b, mean, s):
    """Vectorised integral of exp(-(x - mean)^2 / (2 s^2)) over [a, b] (zero if b <= a)."""
    a, b = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float))
    k = s * math.sqrt(0.5 * math.pi)
    za = (a - mean) / (s * math.sqrt(2.0))
    zb = (b - mean) / (s * math.sqrt(2.0))
    with np.errstate(invalid="ignore"):
        right = k * (special.erfc(za) - special.erfc(zb))
        left = k * (special.erfc(-zb) - special.erfc(-za))
        mid = k * (special.erf(zb) - special.erf(za))
    out = np.where(za > 0.0, right, np.where(zb < 0.0, left, mid))
    return np.where(b > a, out, 0.0)


def _rect_np(density, a_lo, a_hi, b_lo, b_hi):
    if density.kind == "uniform":
        w = np.clip(np.asarray(a_hi) - a_lo, 0.0, None) * np.clip(np.asarray(b_hi) - b_lo, 0.0, None)
        return density.c * w
    s = density.sigma
    return density.A * gauss_int_np(a_lo, a_hi, density.alpha_m1, s) * gauss_int_np(b_lo, b_hi, density.alpha_m2, s)


def lipschitz_K(density):
    """Largest column mass  sup_{a1} int q(a1, a2) da2  over the triangle.

    Infinite for a density with atoms, zero for the zero density.
    """
    if density.is_zero:
        return 0.0
    if density.kind == "discrete":
        return math.inf
    if density.kind == "uniform":
        return density.c
    m1, s = density.alpha_m1, density.sigma

    def col(a1):
        a1 = np.asarray(a1, float)
        g1 = density.A * np.exp(-0.5 * ((a1 - m1) / s) ** 2)
        return g1 * gauss_int_np(a1, 1.0, density.alpha_m2, s)

    grid = _grid(density, 2049)
    vals = col(grid)
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(lambda a: -float(col(a)), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-13})
        return float(max(vals[k], -res.fun))
    return float(vals[k])


def _grid(density, n):
    pts = [np.linspace(0.0, 1.0, n)]
    if density.kind == "gaussian":
        for c in (density.alpha_m1, density.alpha_m2):
            pts.append(np.clip(c + density.sigma * np.linspace(-8.0, 8.0, n), 0.0, 1.0))
    return np.unique(np.concatenate(pts))


@dataclass(frozen=True)
class LoopRatio:
    """Maximal loop-width ratio with the maximiser and a tolerance estimate."""

    value: float
    I1: float
    I: float
    I2: float
    tol: float


def _inner_max(density, I1, I2, iters=80):
    # golden section on I in [I1, I2]; the rectangle mass is log-concave in I
    f = lambda x: _rect_np(density, I1, x, x, I2)
    a = np.array(I1, dtype=float, copy=True)
    b = np.array(I2, dtype=float, copy=True)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc > fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = np.where(left, b - _INV_PHI * (b - a), d)
        d_new = np.where(left, c, a + _INV_PHI * (b - a))
        fc_new = np.where(left, f(c_new), fd)
        fd_new = np.where(left, fc, f(d_new))
        c, d, fc, fd = c_new, d_new, fc_new, fd_new
    x = 0.5 * (a + b)
    return f(x), x


def _loop_ratio_discrete(density):
    atoms = np.array(density.atoms, dtype=float).reshape(-1, 3)
    if atoms.shape[0] == 0 or not np.any(atoms[:, 2] > 0):
        return LoopRatio(0.0, 0.0, 0.0, 1.0, 0.0)
    # the sup is approached with I1 -> a1 from below, I2 -> a2 from above; a
    # rectangle collects every atom it contains, so enumerate atom corners
    best = LoopRatio(0.0, 0.0, 0.0, 1.0, 0.0)
    a1s = np.unique(atoms[:, 0])
    a2s = np.unique(atoms[:, 1])
    for lo in a1s:
        for hi in a2s:
            if hi <= lo:
                continue
            # I ranges over the atoms' a1 < I < a2 window; mass piecewise constant
            cand = np.unique(np.concatenate((atoms[:, 0], atoms[:, 1])))
            cand = cand[(cand >= lo) & (cand <= hi)]
            mids = 0.5 * (cand[:-1] + cand[1:]) if len(cand) > 1 else np.array([0.5 * (lo + hi)])
            for x in mids:
                sel = (atoms[:, 0] >= lo) & (atoms[:, 0] < x) & (atoms[:, 1] > x) & (atoms[:, 1] <= hi)
                mass = atoms[sel, 2].sum()
                ratio = mass / (hi - lo)
                if ratio > best.value:
                    best = LoopRatio(float(ratio), float(lo), float(x), float(hi), 0.0)
    return best


def loop_ratio_L(density, resolution=64):
    """L = sup over I1 < I <= I2 of loop_width(I1, I, I2) / (I2 - I1).

    Coarse search on a grid over (I1, I2), with points clustered around the
    density centres, followed by a Nelder-Mead refinement from the best
    candidates.  ``tol`` is the improvement achieved by the refinement.
    """
    if density.is_zero:
        return LoopRatio(0.0, 0.0, 0.0, 1.0, 0.0)
    if density.kind == "discrete":
        return _loop_ratio_discrete(density)
    if density.kind == "uniform":
        # c (I - I1)(I2 - I) / (I2 - I1) peaks at c/4 on the whole range
        return LoopRatio(density.c / 4.0, 0.0, 0.5, 1.0, 0.0)

    grid = _grid(density, resolution + 1)
    i1, i2 = np.meshgrid(grid, grid, indexing="ij")
    sel = i2 > i1
    I1, I2 = i1[sel], i2[sel]
    widths, xs = _inner_max(density, I1, I2)
    ratios = widths / (I2 - I1)
    order = np.argsort(ratios)[::-1][:3]
    coarse = float(ratios[order[0]])

    def inner(lo, hi):
        res = optimize.minimize_scalar(lambda x: -density.rect(lo, x, x, hi), bounds=(lo, hi),
                                       method="bounded", options={"xatol": 1e-12 * (hi - lo)})
        return -res.fun, res.x

    def neg_ratio(z):
        lo, hi = float(np.clip(z[0], 0.0, 1.0)), float(np.clip(z[1], 0.0, 1.0))
        if hi - lo <= 1e-14:
            return 0.0
        return -inner(lo, hi)[0] / (hi - lo)

    best = LoopRatio(coarse, float(I1[order[0]]), float(xs[order[0]]), float(I2[order[0]]), 0.0)
    for k in order:
        res = optimize.minimize(neg_ratio, [I1[k], I2[k]], method="Nelder-Mead",
                                options={"xatol": 1e-11, "fatol": 1e-13, "maxiter": 600})
        if -res.fun > best.value:
            lo, hi = float(np.clip(res.x[0], 0, 1)), float(np.clip(res.x[1], 0, 1))
            best = LoopRatio(float(-res.fun), lo, float(inner(lo, hi)[1]), hi, 0.0)
    return LoopRatio(best.value, best.I1, best.I, best.I2, best.value - coarse)


def discretize(density, N, memory=None):
    """Relay bank approximating ``density`` on an N x N cell grid.

    Each off-diagonal cell contributes one relay at its centre, each diagonal
    half-cell one relay at its centroid, weighted by the cell mass.  Discrete
    densities are returned exactly.  States follow ``memory`` (a staircase) or
    start OFF at input 0.
    """
    if N < 1:
        raise DomainError("N must be positive")
    if density.kind == "discrete":
        atoms = np.array(density.atoms, dtype=float).reshape(-1, 3)
        a1, a2, w = atoms[:, 0], atoms[:, 1], atoms[:, 2]
    else:
        h = 1.0 / N
        edges = np.linspace(0.0, 1.0, N + 1)
        i, j = np.triu_indices(N, k=1)
        a1 = np.concatenate(((i + 0.5) * h, edges[:-1] + h / 3.0))
        a2 = np.concatenate(((j + 0.5) * h, edges[:-1] + 2.0 * h / 3.0))
        w_off = _rect_np(density, edges[i], edges[i + 1], edges[j], edges[j + 1])
        w_diag = np.array([density.tri(edges[k + 1]) - density.tri(edges[k])
                           - density.rect(0.0, edges[k], edges[k], edges[k + 1])
                           for k in range(N)])
        w = np.concatenate((w_off, np.clip(w_diag, 0.0, None)))
    if memory is None:
        return RelayBank(a1, a2, w, np.zeros(len(a1), np.uint8), 0.0)
    state = memory.is_on(a1, a2).astype(np.uint8)
    return RelayBank(a1, a2, w, state, memory.current)
