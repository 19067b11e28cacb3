"""Muckenhoupt weights on the periodic grid.

Averages over balls are computed over cubes (windows of nodes) with
periodic prefix sums.  A power weight ``|x|^b`` is sampled at every node
except the one at the origin, whose cell carries the exact average
``h^-d * integral_cell |x|^b dx`` so that Riemann sums stay finite for
``b > -d`` and become ``inf`` (detectably) for ``b <= -d``.

Every supremum here is over a finite family of windows, hence a lower
bound of the true constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage

from .spectral_core import SpectralField, SpectralGrid

__all__ = [
    "Weight",
    "BallFamily",
    "unit_weight",
    "power_weight",
    "weight_from_spec",
    "cell_average_power",
    "ap_constant_estimate",
    "ap_constant_profile",
    "regularity_constant",
    "membership_heuristic",
    "order_candidates",
    "maximal_function",
    "sharp_function",
    "window_oscillations",
]

_GL16_NODES, _GL16_WEIGHTS = np.polynomial.legendre.leggauss(16)
_Q_FLOOR = 1.01


def cell_average_power(s: float, h: float, dim: int) -> float:
    """Average of ``|x|^s`` over the cube ``[-h/2, h/2]^dim``; ``inf`` if not integrable."""
    if s == 0:
        return 1.0
    if s <= -dim:
        return math.inf
    if dim == 1:
        return (h / 2.0) ** s / (s + 1.0)
    # by symmetry average over the positive orthant [0, h/2]^dim
    x = 0.25 * h * (_GL16_NODES + 1.0)
    w = 0.5 * _GL16_WEIGHTS
    mesh = np.meshgrid(*([x] * dim), indexing="ij")
    r = np.sqrt(sum(m**2 for m in mesh))
    wt = w
    for _ in range(dim - 1):
        wt = np.multiply.outer(wt, w)
    return float(np.sum(wt * r**s))


@dataclass(frozen=True)
class Weight:
    """Spatial weight ``w(x)``.

    ``kind`` is one of ``unit``, ``power`` (``|x|^b``), ``product``
    (``prod_i |x - c_i|^{b_i}``) or ``custom`` (a callable on point arrays of
    shape ``(dim, ...)``).
    """

    kind: str
    b: float = 0.0
    factors: tuple = ()
    func: Callable | None = field(default=None, compare=False)
    label: str = ""

    @property
    def identifier(self) -> str:
        if self.label:
            return self.label
        if self.kind == "power":
            return f"power({self.b:g})"
        return self.kind

    def to_spec(self) -> dict:
        if self.kind == "unit":
            return {"kind": "unit"}
        if self.kind == "power":
            return {"kind": "power", "b": self.b}
        if self.kind == "product":
            return {"kind": "product", "factors": [{"center": list(c), "b": b} for c, b in self.factors]}
        return {"kind": "custom", "label": self.label}

    def node_power(self, grid: SpectralGrid, power: float = 1.0) -> np.ndarray:
        """Values of ``w^power`` at the nodes, with the singular-cell rule."""
        if self.kind == "unit":
            return np.ones(grid.shape)
        if self.kind == "power":
            s = self.b * power
            out = np.ones(grid.shape)
            r = grid.abs_position
            mask = r > 0
            out[mask] = r[mask] ** s
            out[grid.origin_index] = cell_average_power(s, grid.spacing, grid.dim)
            return out
        if self.kind == "product":
            out = np.ones(grid.shape)
            for center, b in self.factors:
                c = np.asarray(center, dtype=float).reshape((grid.dim,) + (1,) * grid.dim)
                r = np.sqrt(np.sum((grid.points - c) ** 2, axis=0))
                s = b * power
                vals = np.where(r > 0, r, 1.0) ** s
                zero = r == 0
                if np.any(zero):
                    vals[zero] = cell_average_power(s, grid.spacing, grid.dim)
                out = out * vals
            return out
        vals = np.asarray(self.func(grid.points), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return vals**power

    def node_values(self, grid: SpectralGrid) -> np.ndarray:
        return self.node_power(grid, 1.0)

    def in_ap(self, p: float, dim: int) -> bool | None:
        """Closed-form membership for power and product weights; ``None`` otherwise."""
        if self.kind == "unit":
            return True
        exps = self._exponents()
        if exps is None:
            return None
        return all(-dim < b < dim * (p - 1) for b in exps)

    def _exponents(self):
        if self.kind == "power":
            return [self.b]
        if self.kind == "product":
            bs = [b for _, b in self.factors]
            return bs + [sum(bs)]  # local factors plus behavior at infinity
        return None

    def regularity_constant(self, p: float, dim: int) -> float:
        return regularity_constant(self, p, dim)


def unit_weight() -> Weight:
    return Weight("unit")


def power_weight(b: float) -> Weight:
    return Weight("power", b=float(b))


def weight_from_spec(spec: dict | None) -> Weight:
    """``{"kind": "power", "b": 0.5}``, ``{"kind": "unit"}`` or a product spec."""
    if spec is None:
        return unit_weight()
    kind = spec.get("kind", "unit")
    if kind == "unit":
        return unit_weight()
    if kind == "power":
        return power_weight(spec["b"])
    if kind == "product":
        return Weight("product", factors=tuple((tuple(f["center"]), float(f["b"])) for f in spec["factors"]))
    raise ValueError(f"unknown weight kind {kind!r}")


# ---------------------------------------------------------------------------
# window sums


def _window_sum(arr: np.ndarray, k: int) -> np.ndarray:
    """Periodic sums over cubes of ``k`` nodes per axis; entry ``m`` is the cube starting at ``m``."""
    out = arr
    for axis in range(arr.ndim):
        n = out.shape[axis]
        ext = np.concatenate([out, np.take(out, np.arange(k), axis=axis)], axis=axis)
        c = np.cumsum(ext, axis=axis)
        zero = np.zeros_like(np.take(c, [0], axis=axis))
        c = np.concatenate([zero, c], axis=axis)
        out = np.take(c, np.arange(k, k + n), axis=axis) - np.take(c, np.arange(n), axis=axis)
    return out


def _centered_window_sum(arr: np.ndarray, radius: int) -> np.ndarray:
    """Periodic sums over cubes ``m - radius .. m + radius`` per axis."""
    k = 2 * radius + 1
    s = _window_sum(arr, k)
    return np.roll(s, shift=(radius,) * arr.ndim, axis=tuple(range(arr.ndim)))


def _window_average(arr: np.ndarray, radius: int) -> np.ndarray:
    # infinite node values are tracked by count so they do not poison the prefix sums
    bad = ~np.isfinite(arr)
    k = 2 * radius + 1
    avg = _centered_window_sum(np.where(bad, 0.0, arr), radius) / k**arr.ndim
    if np.any(bad):
        hits = _centered_window_sum(bad.astype(float), radius)
        avg = np.where(hits > 0.5, np.inf, avg)
    return avg


@dataclass(frozen=True)
class BallFamily:
    """Cubes of half-width ``2^l h`` centered at grid nodes.

    ``levels`` selects ``l``; ``exclude_origin`` drops cubes whose node set
    contains the origin node, ``centers`` is an optional boolean mask.
    """

    levels: tuple
    exclude_origin: bool = False
    centers: np.ndarray | None = field(default=None, compare=False)

    @classmethod
    def dyadic(cls, grid: SpectralGrid, l_min: int = 0, l_max: int | None = None, **kw) -> BallFamily:
        top = int(math.log2(grid.points_per_axis)) - 2
        l_max = top if l_max is None else min(l_max, top)
        return cls(tuple(range(l_min, l_max + 1)), **kw)


def _ap_level_values(weight: Weight, p: float, grid: SpectralGrid, level: int, family: BallFamily) -> np.ndarray:
    radius = 2**level
    aw = _window_average(weight.node_power(grid, 1.0), radius)
    av = _window_average(weight.node_power(grid, -1.0 / (p - 1.0)), radius)
    with np.errstate(invalid="ignore", over="ignore"):
        vals = aw * av ** (p - 1.0)
    vals = np.where(np.isnan(vals), np.inf, vals)
    mask = np.ones(grid.shape, dtype=bool)
    if family.centers is not None:
        mask &= family.centers
    if family.exclude_origin:
        n = grid.points_per_axis
        o = n // 2
        idx = np.indices(grid.shape)
        dist = np.abs(((idx - o) + n // 2) % n - n // 2)
        mask &= ~np.all(dist <= radius, axis=0)
    return np.where(mask, vals, -np.inf)


def ap_constant_profile(weight: Weight, p: float, grid: SpectralGrid, family: BallFamily | None = None) -> dict:
    """Largest sampled ``A_p`` average per level ``l`` of the family."""
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    family = family or BallFamily.dyadic(grid)
    if not family.levels:
        raise ValueError("ball family is empty")
    out = {}
    for level in family.levels:
        vals = _ap_level_values(weight, p, grid, level, family)
        out[int(level)] = float(np.max(vals))
    return out


def ap_constant_estimate(weight: Weight, p: float, grid: SpectralGrid, family: BallFamily | None = None) -> float:
    """Lower bound of ``[w]_{A_p}``: max over the family of ``avg(w) * avg(w^(-1/(p-1)))^(p-1)``."""
    prof = ap_constant_profile(weight, p, grid, family)
    est = max(prof.values())
    if est == -math.inf:
        raise ValueError("ball family selects no cubes")
    return est


def membership_heuristic(weight: Weight, q: float, grid: SpectralGrid) -> str:
    """Decide ``w in A_q`` from the growth of estimates between two radius decades.

    Returns ``"in"``, ``"out"`` or ``"undecided"``: ratio of the estimate on
    small cubes (``l = 0..3``) to larger cubes (``l = 4..7``) above 4 means
    out, in ``[2, 4]`` undecided.  Infinite averages mean out.
    """
    top = int(math.log2(grid.points_per_axis)) - 2
    small = ap_constant_estimate(weight, q, grid, BallFamily(tuple(range(0, min(3, top) + 1))))
    large = ap_constant_estimate(weight, q, grid, BallFamily(tuple(range(min(4, top), min(7, top) + 1))))
    if not math.isfinite(small) or not math.isfinite(large):
        return "out"
    ratio = small / large
    if ratio > 4:
        return "out"
    if ratio >= 2:
        return "undecided"
    return "in"


def regularity_constant(weight: Weight, p: float, dim: int, method: str = "closed_form",
                        grid: SpectralGrid | None = None, tol: float = 1e-4):
    """``R = sup{p0 in (1, 2] : w in A_{p/p0}}``.

    ``method="closed_form"`` uses ``min(2, dp/(d+b))`` for power weights (and
    the analogous minimum over factors for products).  ``method="bisection"``
    bisects ``p0`` with :func:`membership_heuristic` on ``grid`` and may
    return the string ``"undecided"``.
    """
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if method == "closed_form" and weight.kind != "custom":
        if weight.kind == "unit":
            return 2.0
        if not weight.in_ap(p, dim):
            raise ValueError(f"{weight.identifier} is not in A_{p:g} on R^{dim}")
        R = 2.0
        for b in weight._exponents():
            if b > 0:
                R = min(R, dim * p / (dim + b))
        return R
    if grid is None:
        raise ValueError("bisection needs a grid")
    if grid.dim != dim:
        raise ValueError("grid dimension does not match dim")
    verdict = membership_heuristic(weight, p, grid)
    if verdict != "in":
        if verdict == "out":
            raise ValueError(f"{weight.identifier} not in A_{p:g} by the divergence heuristic")
        return "undecided"
    # A_q probes with q -> 1 overflow w^(-1/(q-1)); q = 1.01 is the closest probe
    top = min(2.0, p / _Q_FLOOR)
    if membership_heuristic(weight, p / top, grid) == "in":
        return 2.0
    lo, hi = 1.0, top
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        v = membership_heuristic(weight, p / mid, grid)
        if v == "undecided":
            return "undecided"
        if v == "in":
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def order_candidates(weight: Weight, p: float, dim: int) -> list[int]:
    """Required symbol orders ``floor(d/R) + 2``; two values when ``R`` sits within 1e-6 of a breakpoint."""
    R = regularity_constant(weight, p, dim)
    base = dim / R
    out = {int(math.floor(base + 1e-12)) + 2}
    for k in range(1, dim + 1):
        if abs(R - dim / k) < 1e-6:
            out.update({k + 1, k + 2})
    return sorted(out)


# ---------------------------------------------------------------------------
# maximal and sharp functions


def maximal_function(field: SpectralField, max_size: int | None = None) -> np.ndarray:
    """Uncentered cube maximal function of ``|f|`` at every node.

    Sup over all cubes of ``k = 1 .. N/2`` nodes per axis that contain the
    node.  Returned as a real array on the grid.
    """
    grid = field.grid
    a = np.abs(field.values)
    n = grid.points_per_axis
    max_size = n // 2 if max_size is None else min(max_size, n)
    out = a.copy()
    for k in range(2, max_size + 1):
        avg = _window_sum(a, k) / k**grid.dim
        # cube starting at s contains m iff m-k+1 <= s <= m
        out = np.maximum(out, ndimage.maximum_filter(avg, size=k, mode="wrap", origin=(k - 1) // 2))
    return out


def window_oscillations(values: np.ndarray, k: int) -> np.ndarray:
    """``avg_W |f - avg_W f|`` for every cube ``W`` of ``k`` nodes per axis, indexed by its start."""
    f = np.asarray(values)
    dim = f.ndim
    mean = _window_sum(f, k) / k**dim
    acc = np.zeros(f.shape)
    for offset in np.ndindex(*((k,) * dim)):
        shifted = np.roll(f, shift=tuple(-o for o in offset), axis=tuple(range(dim)))
        acc += np.abs(shifted - mean)
    return acc / k**dim


def window_double_oscillation(values: np.ndarray, start: int, k: int) -> float:
    """``avg_{y0, y1 in W} |f(y0) - f(y1)|`` for a 1-D periodic window."""
    f = np.asarray(values)
    w = f[(start + np.arange(k)) % f.size]
    return float(np.mean(np.abs(w[:, None] - w[None, :])))


def sharp_function(field: SpectralField, max_level: int | None = None, budget: int = 4096) -> np.ndarray:
    """Sharp maximal function with the single-average oscillation.

    Sup over cubes of ``2^(l+1) + 1`` nodes per axis that contain the node.
    In 2-D/3-D the largest cubes are dropped once ``k^d`` exceeds ``budget``.
    """
    grid = field.grid
    f = field.values
    top = int(math.log2(grid.points_per_axis)) - 2 if max_level is None else max_level
    out = np.zeros(grid.shape)
    for level in range(0, top + 1):
        k = 2 ** (level + 1) + 1
        if grid.dim > 1 and k**grid.dim > budget:
            break
        osc = window_oscillations(f, k)
        out = np.maximum(out, ndimage.maximum_filter(osc, size=k, mode="wrap", origin=(k - 1) // 2))
    return out
