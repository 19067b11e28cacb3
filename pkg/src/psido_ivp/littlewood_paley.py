"""Littlewood-Paley frame, weighted Bessel/Besov norms, square function and lifts.

The radial cutoff is ``chi(r) = 1`` for ``r <= 1``, ``h(2 - r)`` on
``[1, 2]`` and ``0`` beyond, with the bump quotient
``h(s) = phi(s) / (phi(s) + phi(1 - s))``, ``phi(s) = exp(-1/s)``.
Blocks are the differences ``chi(2^-j xi) - chi(2^-(j-1) xi)``, so partial
sums telescope to a single cutoff.

A frame on a grid with resolved band ``[j_min, j_max]`` carries the ladder
``j_min - 1 .. j_max + 1``; the ladder sums to one on every lattice
frequency with ``2^(j_min-1) <= |xi| <= 2^(j_max+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .spectral_core import SpectralField, SpectralGrid, make_grid, weighted_lp_norm
from .symbols import _central_difference, multi_indices
from .time_measures import DyadicSequence
from .weights import Weight, unit_weight, weight_from_spec

__all__ = [
    "bump_quotient",
    "chi",
    "LPFrame",
    "NormSpec",
    "make_frame",
    "project",
    "low_projection",
    "space_norm",
    "space_norm_details",
    "classical_bessel_norm",
    "square_function",
    "lift",
    "lift_multiplier",
    "inverse_lift",
    "mikhlin_constant",
    "smoothness_from_spec",
    "norm_spec_from_dict",
]


def bump_quotient(s) -> np.ndarray:
    """``h(s) = phi(s) / (phi(s) + phi(1 - s))``; 0 for ``s <= 0``, 1 for ``s >= 1``."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
        return a / (a + b)


def chi(r) -> np.ndarray:
    """Radial cutoff: 1 on ``[0, 1]``, ``h(2 - r)`` on ``[1, 2]``, 0 beyond."""
    r = np.asarray(r, dtype=float)
    return np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, bump_quotient(2.0 - r)))


@dataclass(frozen=True, eq=False)
class LPFrame:
    """Dyadic blocks tabulated on a grid's frequency lattice."""

    grid: SpectralGrid
    profile: str = "bump_quotient"

    @property
    def band(self) -> tuple[int, int]:
        return self.grid.band

    @property
    def ladder(self) -> tuple[int, int]:
        lo, hi = self.band
        return lo - 1, hi + 1

    @property
    def split_level(self) -> int:
        """Level replacing 0 in ``S_0`` for inhomogeneous norms."""
        lo, hi = self.band
        return 0 if lo <= 0 <= hi else lo

    def cutoff(self, j: int) -> np.ndarray:
        """``chi(2^-j xi)`` on the lattice."""
        return chi(self.grid.abs_frequency * 2.0 ** (-j))

    @cached_property
    def _blocks(self) -> dict:
        lo, hi = self.ladder
        out = {}
        clamped = 0
        prev = self.cutoff(lo - 1)
        for j in range(lo, hi + 1):
            cur = self.cutoff(j)
            blk = cur - prev
            neg = blk < 0
            clamped += int(np.count_nonzero(neg))
            out[j] = np.where(neg, 0.0, blk)
            prev = cur
        object.__setattr__(self, "_clamped", clamped)
        return out

    @property
    def clamped_count(self) -> int:
        """Number of block values below zero (rounding) that were set to 0."""
        self._blocks
        return self._clamped

    def block(self, j: int) -> np.ndarray:
        lo, hi = self.ladder
        if not lo <= j <= hi:
            raise ValueError(f"level {j} outside the resolved ladder [{lo}, {hi}]")
        return self._blocks[j]

    def resolved_mask(self) -> np.ndarray:
        lo, hi = self.ladder
        r = self.grid.abs_frequency
        # the ladder sums to one exactly on 2^lo <= |xi| <= 2^hi
        return (r >= 2.0**lo) & (r <= 2.0**hi)


def make_frame(grid: SpectralGrid, transition_profile: str = "bump_quotient") -> LPFrame:
    if transition_profile != "bump_quotient":
        raise ValueError(f"unknown transition profile {transition_profile!r}")
    return LPFrame(grid, transition_profile)


def project(frame: LPFrame, field: SpectralField, j: int) -> SpectralField:
    """``Delta_j f``."""
    return field.multiply_spectrum(frame.block(j))


def low_projection(frame: LPFrame, field: SpectralField, j0: int) -> SpectralField:
    """``sum_{j <= j0} Delta_j f``, i.e. multiplication by ``chi(2^-j0 xi)``."""
    lo, hi = frame.ladder
    if not lo <= j0 <= hi:
        raise ValueError(f"level {j0} outside the resolved ladder [{lo}, {hi}]")
    return field.multiply_spectrum(frame.cutoff(j0))


# ---------------------------------------------------------------------------
# norms


def smoothness_from_spec(spec, j_lo: int, j_hi: int) -> DyadicSequence:
    """``{"kind": "linear", "slope": s, "offset": c}`` or ``{"kind": "table", "j_lo": j, "values": [...]}``."""
    if isinstance(spec, DyadicSequence):
        return spec
    kind = spec.get("kind", "linear")
    if kind == "linear":
        return DyadicSequence.linear(float(spec.get("slope", 0.0)), j_lo, j_hi, float(spec.get("offset", 0.0)))
    if kind == "table":
        vals = spec["values"]
        start = int(spec["j_lo"])
        return DyadicSequence(start, start + len(vals) - 1, np.asarray(vals, dtype=float))
    raise ValueError(f"unknown smoothness kind {kind!r}")


@dataclass(frozen=True)
class NormSpec:
    """Parameters of one of the four weighted spaces."""

    p: float
    q: float
    smoothness: DyadicSequence
    weight: Weight = field(default_factory=unit_weight)
    flavor: str = "bessel"
    homogeneous: bool = False

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError("p must be >= 1")
        if not self.q > 0:
            raise ValueError("q must be positive")
        if self.flavor not in ("bessel", "besov"):
            raise ValueError("flavor must be 'bessel' or 'besov'")


def norm_spec_from_dict(d: dict, frame: LPFrame) -> NormSpec:
    lo, hi = frame.ladder
    return NormSpec(
        p=float(d["p"]),
        q=float(d.get("q", d["p"])),
        smoothness=smoothness_from_spec(d.get("r", {"kind": "linear", "slope": 0.0}), lo, hi),
        weight=weight_from_spec(d.get("weight")),
        flavor=d.get("flavor", "bessel"),
        homogeneous=bool(d.get("homogeneous", False)),
    )


def _levels(frame: LPFrame, homogeneous: bool) -> range:
    lo, hi = frame.ladder
    if homogeneous:
        return range(lo, hi + 1)
    return range(frame.split_level + 1, hi + 1)


def space_norm_details(field: SpectralField, spec: NormSpec, frame: LPFrame | None = None) -> dict:
    """Norm value plus the effective split level and per-level terms."""
    frame = frame or make_frame(field.grid)
    levels = _levels(frame, spec.homogeneous)
    if not spec.smoothness.covers(levels.start, levels.stop - 1):
        raise ValueError(
            f"smoothness sequence [{spec.smoothness.j_lo}, {spec.smoothness.j_hi}] does not cover "
            f"levels [{levels.start}, {levels.stop - 1}]"
        )
    if max(abs(spec.smoothness(j)) for j in levels) > 1000:
        raise ValueError("2^r(j) overflows")
    spec_arr = field.spectrum
    w = spec.weight
    terms = {}
    if spec.flavor == "besov":
        acc = 0.0
        for j in levels:
            nj = weighted_lp_norm(SpectralField.from_spectrum(frame.grid, spec_arr * frame.block(j)), spec.p, w)
            t = 2.0 ** (spec.q * spec.smoothness(j)) * nj**spec.q
            terms[j] = t
            acc += t
        tail = acc ** (1.0 / spec.q)
    else:
        sq = np.zeros(frame.grid.shape)
        for j in levels:
            dj = SpectralField.from_spectrum(frame.grid, spec_arr * frame.block(j)).values
            part = (2.0 ** spec.smoothness(j)) ** 2 * np.abs(dj) ** 2
            terms[j] = float(np.sum(part) * frame.grid.cell_volume)
            sq += part
        tail = weighted_lp_norm(SpectralField.from_values(frame.grid, np.sqrt(sq)), spec.p, w)
    low = 0.0
    if not spec.homogeneous:
        low = weighted_lp_norm(low_projection(frame, field, frame.split_level), spec.p, w)
    return {"value": low + tail, "low": low, "tail": tail, "split_level": None if spec.homogeneous else frame.split_level,
            "levels": (levels.start, levels.stop - 1), "terms": terms}


def space_norm(field: SpectralField, spec: NormSpec, frame: LPFrame | None = None) -> float:
    """Weighted Bessel-potential or Besov (quasi-)norm truncated to the resolved ladder."""
    return space_norm_details(field, spec, frame)["value"]


def classical_bessel_norm(field: SpectralField, s: float, p: float, weight: Weight | None = None) -> float:
    """``||(1 - Laplacian)^(s/2) f||_{L_p(w)}``."""
    if s == 0:
        return weighted_lp_norm(field, p, weight)
    mult = (1.0 + field.grid.abs_frequency**2) ** (s / 2.0)
    return weighted_lp_norm(field.multiply_spectrum(mult), p, weight)


def square_function(frame: LPFrame, field: SpectralField) -> np.ndarray:
    """``(sum_j |Delta_j f|^2)^(1/2)`` over the ladder, as a real node array."""
    lo, hi = frame.ladder
    sq = np.zeros(frame.grid.shape)
    for j in range(lo, hi + 1):
        sq += np.abs(project(frame, field, j).values) ** 2
    return np.sqrt(sq)


def lift_multiplier(frame: LPFrame, r: DyadicSequence, homogeneous: bool = True) -> np.ndarray:
    levels = _levels(frame, homogeneous)
    if not r.covers(levels.start, levels.stop - 1):
        raise ValueError("smoothness sequence does not cover the ladder")
    if max(r(j) for j in levels) > 1000:
        raise ValueError("2^r(j) overflows")
    mult = np.zeros(frame.grid.shape)
    for j in levels:
        mult += 2.0 ** r(j) * frame.block(j)
    if not homogeneous:
        mult += frame.cutoff(frame.split_level)
    return mult


def lift(frame: LPFrame, field: SpectralField, r: DyadicSequence, homogeneous: bool = True) -> SpectralField:
    """``sum_j 2^r(j) Delta_j f`` (plus ``S_0 f`` when inhomogeneous)."""
    return field.multiply_spectrum(lift_multiplier(frame, r, homogeneous))


def inverse_lift(frame: LPFrame, field: SpectralField, r: DyadicSequence, homogeneous: bool = True) -> SpectralField:
    """Exact inverse of :func:`lift` on frequencies where its multiplier is nonzero."""
    mult = lift_multiplier(frame, r, homogeneous)
    inv = np.zeros_like(mult)
    nz = mult > 0
    inv[nz] = 1.0 / mult[nz]
    return field.multiply_spectrum(inv)


# ---------------------------------------------------------------------------
# Mikhlin condition

_DEFAULT_MIKHLIN_GRIDS = {1: (4096, 64 * math.pi), 2: (256, 8 * math.pi), 3: (64, 2 * math.pi)}


def mikhlin_constant(multiplier: Callable, dim: int, grid: SpectralGrid | None = None,
                     return_table: bool = False):
    """``max_R max_{|alpha| <= dim} (R^(2|alpha| - d) integral_{R<|xi|<2R} |D^alpha m|^2)^(1/2)``.

    ``R`` runs over ``2^j`` with ``[R, 2R]`` inside the resolved band;
    annulus integrals are lattice sums with half weight on the two
    boundary spheres.  Derivatives by central differences as in
    :func:`psido_ivp.symbols.check_regular_upper_bound`.
    """
    if grid is None:
        n, L = _DEFAULT_MIKHLIN_GRIDS[dim]
        grid = make_grid(dim, n, L)
    if grid.dim != dim:
        raise ValueError("grid dimension does not match dim")
    lo, hi = grid.band
    xi_all = grid.frequencies.reshape(dim, -1)
    r_all = np.sqrt(np.sum(xi_all**2, axis=0))
    vol = grid.freq_step**dim
    table = {}
    for j in range(lo, hi):
        R = 2.0**j
        tol = 1e-9 * R
        sel = (r_all >= R - tol) & (r_all <= 2 * R + tol)
        xi = xi_all[:, sel]
        r = r_all[sel]
        wts = np.where((np.abs(r - R) <= tol) | (np.abs(r - 2 * R) <= tol), 0.5, 1.0) * vol
        per_alpha = {}
        for order in range(dim + 1):
            for alpha in multi_indices(dim, order):
                if order == 0:
                    d = np.asarray(multiplier(xi), dtype=complex)
                else:
                    step = 1e-5 if order == 1 else float(np.finfo(float).eps ** (1.0 / (order + 2)))
                    eta = np.maximum(1e-5, step * r)
                    d = _central_difference(multiplier, xi, alpha, eta)
                val = math.sqrt(R ** (2 * order - dim) * float(np.sum(wts * np.abs(d) ** 2)))
                per_alpha["".join(map(str, alpha))] = val
        table[j] = per_alpha
    const = max(max(v.values()) for v in table.values())
    if return_table:
        return const, table
    return const
