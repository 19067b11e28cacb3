"""Time-measurable symbols psi(t, xi) and their empirical certificates.

A :class:`Symbol` is either piecewise constant in time (a list of
frequency-only pieces on a partition ``0 = t_0 < t_1 < ...``) or a smooth
callable ``psi(t, xi)`` integrated with 8-point Gauss-Legendre on each
declared subinterval.  Frequencies are always passed as arrays of shape
``(dim, ...)``.

The declared constants ``kappa`` and ``M`` are never inferred silently:
:func:`check_ellipticity` and :func:`check_regular_upper_bound` compare
sampled ratios against them and report a verdict.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .spectral_core import SpectralGrid

__all__ = [
    "Symbol",
    "SymbolReport",
    "builtin_symbol",
    "symbol_from_spec",
    "check_ellipticity",
    "check_regular_upper_bound",
    "default_time_samples",
    "required_order",
    "multi_indices",
]

_GL8_NODES, _GL8_WEIGHTS = np.polynomial.legendre.leggauss(8)
ELLIPTICITY_RTOL = 1e-9


def _abs_xi(xi: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(xi, dtype=float) ** 2, axis=0))


@dataclass(frozen=True, eq=False)
class Symbol:
    """Symbol of order ``gamma`` with declared ellipticity and size constants.

    Parameters
    ----------
    gamma : float
        Order, ``gamma > 0``.
    kappa, M : float
        Declared lower (real part) and upper (modulus) constants.
    pieces : sequence of callables, optional
        ``pieces[k](xi)`` is the value on ``[t_k, t_{k+1})``.
    breaks : array_like
        ``t_0 = 0 < t_1 < ... < t_K``.  With ``K = len(pieces)`` and
        ``periodic=True`` the pattern repeats with period ``t_K``; otherwise
        the last piece extends to infinity.
    smooth : callable, optional
        ``smooth(t, xi)``; used instead of ``pieces``.
    """

    gamma: float
    kappa: float
    M: float
    name: str = "custom"
    pieces: tuple = ()
    breaks: np.ndarray = field(default_factory=lambda: np.zeros(1))
    periodic: bool = False
    smooth: Callable | None = None
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("symbol order gamma must be positive")
        if not (self.kappa > 0 and self.M > 0):
            raise ValueError("declared kappa and M must be positive")
        breaks = np.asarray(self.breaks, dtype=float)
        if breaks.ndim != 1 or breaks.size == 0 or breaks[0] != 0.0:
            raise ValueError("time partition must start at 0")
        if np.any(np.diff(breaks) <= 0):
            raise ValueError("time partition must be strictly increasing")
        object.__setattr__(self, "breaks", breaks)
        if self.smooth is None:
            k = len(self.pieces)
            if k == 0:
                raise ValueError("a piecewise symbol needs at least one piece")
            if breaks.size not in (k, k + 1):
                raise ValueError("time partition length must be len(pieces) or len(pieces) + 1")
            if self.periodic and breaks.size != k + 1:
                raise ValueError("a periodic symbol needs the closing break t_K")

    # -- time structure -------------------------------------------------
    @property
    def piecewise(self) -> bool:
        return self.smooth is None

    @property
    def kappa_effective(self) -> float:
        """``min(kappa, 1)``: the ellipticity constant used by downstream bounds."""
        return min(self.kappa, 1.0)

    def piece_index(self, t: float) -> int:
        """Index of the piece active at ``t`` (right-continuous)."""
        if t < 0:
            raise ValueError("time must be nonnegative")
        k = len(self.pieces)
        if self.periodic:
            t = math.fmod(t, self.breaks[-1])
        idx = int(np.searchsorted(self.breaks, t, side="right")) - 1
        return min(idx, k - 1)

    def piece_durations(self, s: float, t: float) -> np.ndarray:
        """Lebesgue measure of ``[s, t] ∩ {piece k active}`` for each ``k``."""
        if t < s:
            raise ValueError("need s <= t")
        k = len(self.pieces)
        starts = self.breaks[:k]
        ends = np.append(self.breaks[1:k], np.inf) if self.breaks.size == k else self.breaks[1:]
        if not self.periodic:
            return np.clip(np.minimum(ends, t) - np.maximum(starts, s), 0.0, None)
        period = self.breaks[-1]

        def cumulative(x):
            # time spent in each piece on [0, x]
            n_full, rem = divmod(x, period)
            return n_full * (ends - starts) + np.clip(np.minimum(ends, rem) - starts, 0.0, None)

        return cumulative(t) - cumulative(s)

    # -- evaluation -----------------------------------------------------
    def __call__(self, t: float, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if self.smooth is not None:
            return np.asarray(self.smooth(t, xi), dtype=complex)
        return np.asarray(self.pieces[self.piece_index(t)](xi), dtype=complex)

    evaluate = __call__

    def on_grid(self, t: float, grid: SpectralGrid) -> np.ndarray:
        return self(t, grid.frequencies)

    def time_integral(self, s: float, t: float, xi) -> np.ndarray:
        """``∫_s^t psi(r, xi) dr``: exact for piecewise symbols, GL-8 per subinterval otherwise."""
        if t < s:
            raise ValueError("need s <= t")
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape[1:], dtype=complex)
        if t == s:
            return out
        if self.smooth is None:
            for k, dur in enumerate(self.piece_durations(s, t)):
                if dur > 0:
                    out += dur * np.asarray(self.pieces[k](xi), dtype=complex)
            return out
        cuts = self.breaks[(self.breaks > s) & (self.breaks < t)]
        edges = np.concatenate(([s], cuts, [t]))
        for a, b in zip(edges[:-1], edges[1:]):
            half = 0.5 * (b - a)
            for node, weight in zip(_GL8_NODES, _GL8_WEIGHTS):
                out += half * weight * np.asarray(self.smooth(a + half * (node + 1.0), xi), dtype=complex)
        return out

    def scaled(self, lam: float) -> Symbol:
        """``lam^(-gamma) psi(t, lam xi)``; same declared constants."""
        g = self.gamma
        if self.smooth is not None:
            fn = self.smooth
            return Symbol(g, self.kappa, self.M, f"{self.name}@{lam:g}", breaks=self.breaks,
                          smooth=lambda t, xi: lam ** (-g) * fn(t, lam * np.asarray(xi)))
        pieces = tuple(
            (lambda xi, f=f: lam ** (-g) * f(lam * np.asarray(xi))) for f in self.pieces
        )
        return Symbol(g, self.kappa, self.M, f"{self.name}@{lam:g}", pieces, self.breaks, self.periodic)

    def to_spec(self) -> dict:
        return dict(self.spec)


# ---------------------------------------------------------------------------
# builtins


def _partition(params: dict, n_pieces: int) -> tuple[np.ndarray, bool]:
    if "time_partition" in params and params["time_partition"] is not None:
        breaks = np.asarray(params["time_partition"], dtype=float)
    else:
        step = float(params.get("step", 1.0))
        breaks = step * np.arange(n_pieces + 1)
    periodic = bool(params.get("periodic", breaks.size == n_pieces + 1))
    return breaks, periodic


def _check_declared(name, declared, computed, lower):
    if declared is None:
        return computed
    declared = float(declared)
    bad = declared > computed * (1 + 1e-12) if lower else declared < computed * (1 - 1e-12)
    if bad:
        word = "ellipticity" if lower else "upper"
        raise ValueError(f"{name}: declared {word} constant {declared} violated (sampled {computed})")
    return declared


def builtin_symbol(kind: str, params: dict | None = None) -> Symbol:
    """Construct one of the shipped symbols.

    Kinds
    -----
    ``fractional_laplacian``
        ``-|xi|^gamma``; ``kappa = M = 1``.
    ``second_order``
        ``-a(t) xi . xi`` with ``a(t)`` piecewise constant; ``params['pieces']``
        holds scalars or ``dim x dim`` matrices.  Optional declared
        ``kappa``/``M`` are checked against the eigenvalues.
    ``relativistic``
        ``1 - (1 + |xi|^2)^(gamma/2)``.  For ``gamma < 2`` the ellipticity
        ratio vanishes at ``xi -> 0``, so ``kappa`` is taken at the lowest
        frequency ``params['xi_min']`` unless declared.
    ``oscillating_complex``
        ``-(1 + i rho (-1)^k) |xi|^gamma`` on piece ``k``.
    ``scaled_power``
        ``-c_k |xi|^gamma`` with complex ``c_k`` given in ``params['pieces']``
        (numbers or ``[re, im]`` pairs).
    """
    params = dict(params or {})
    gamma = float(params.get("gamma", 2.0))
    spec = {"kind": kind, **params}

    if kind == "fractional_laplacian":
        spec.update(gamma=gamma, kappa=1.0, M=1.0)
        return Symbol(gamma, 1.0, 1.0, f"fractional_laplacian({gamma:g})",
                      pieces=(lambda xi: -_abs_xi(xi) ** gamma,), spec=spec)

    if kind == "second_order":
        raw = params.get("pieces")
        if raw is None:
            raise ValueError("second_order needs 'pieces'")
        mats = []
        for a in raw:
            a = np.atleast_2d(np.asarray(a, dtype=float))
            if a.shape[0] != a.shape[1]:
                raise ValueError("second_order coefficients must be square")
            mats.append(0.5 * (a + a.T))
        eig = np.concatenate([np.linalg.eigvalsh(a) for a in mats])
        lo, hi = float(eig.min()), float(eig.max())
        if lo <= 0:
            raise ValueError(f"second_order coefficients are not positive definite (min eigenvalue {lo})")
        kappa = _check_declared("second_order", params.get("kappa"), lo, lower=True)
        M = _check_declared("second_order", params.get("M"), hi, lower=False)
        breaks, periodic = _partition(params, len(mats))

        def quad_form(a):
            def piece(xi):
                xi = np.asarray(xi, dtype=float)
                if xi.shape[0] != a.shape[0]:
                    raise ValueError(f"coefficient matrix is {a.shape[0]}-dimensional, xi is {xi.shape[0]}-dimensional")
                return -np.einsum("i...,ij,j...->...", xi, a, xi)
            return piece

        spec.update(gamma=2.0, kappa=kappa, M=M, time_partition=breaks.tolist(), periodic=periodic,
                    pieces=[m.tolist() for m in mats])
        return Symbol(2.0, kappa, M, "second_order", tuple(quad_form(a) for a in mats), breaks, periodic,
                      spec=spec)

    if kind == "relativistic":
        if not 0 < gamma <= 2:
            raise ValueError("relativistic symbol needs gamma in (0, 2]")
        kappa = params.get("kappa")
        if kappa is None:
            if gamma == 2:
                kappa = 1.0
            elif params.get("xi_min") is None:
                raise ValueError("relativistic symbol with gamma < 2 needs 'xi_min' or a declared 'kappa'")
            else:
                x = float(params["xi_min"])
                kappa = ((1 + x * x) ** (gamma / 2) - 1) / x**gamma
        spec.update(gamma=gamma, kappa=float(kappa), M=1.0)
        return Symbol(gamma, float(kappa), 1.0, f"relativistic({gamma:g})",
                      pieces=(lambda xi: 1.0 - (1.0 + _abs_xi(xi) ** 2) ** (gamma / 2),), spec=spec)

    if kind == "oscillating_complex":
        rho = float(params.get("rho", 0.5))
        if not math.isfinite(rho):
            raise ValueError("rho must be finite")
        n_pieces = int(params.get("n_pieces", 2))
        breaks, periodic = _partition(params, n_pieces)
        coeffs = [1.0 + 1j * rho * (-1) ** k for k in range(n_pieces)]
        M = math.hypot(1.0, rho)
        spec.update(gamma=gamma, kappa=1.0, M=M, rho=rho, time_partition=breaks.tolist(), periodic=periodic)
        pieces = tuple((lambda xi, c=c: -c * _abs_xi(xi) ** gamma) for c in coeffs)
        return Symbol(gamma, 1.0, M, f"oscillating_complex({gamma:g},{rho:g})", pieces, breaks, periodic,
                      spec=spec)

    if kind == "scaled_power":
        raw = params.get("pieces")
        if raw is None:
            raise ValueError("scaled_power needs 'pieces'")
        coeffs = [complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c) for c in raw]
        lo = min(c.real for c in coeffs)
        hi = max(abs(c) for c in coeffs)
        kappa = params.get("kappa")
        if kappa is None:
            if lo <= 0:
                raise ValueError("scaled_power has no positive ellipticity constant; declare 'kappa' to check it")
            kappa = lo
        M = float(params.get("M", hi))
        breaks, periodic = _partition(params, len(coeffs))
        spec.update(gamma=gamma, kappa=float(kappa), M=M, time_partition=breaks.tolist(), periodic=periodic,
                    pieces=[[c.real, c.imag] for c in coeffs])
        pieces = tuple((lambda xi, c=c: -c * _abs_xi(xi) ** gamma) for c in coeffs)
        return Symbol(gamma, float(kappa), M, "scaled_power", pieces, breaks, periodic, spec=spec)

    raise ValueError(f"unknown symbol kind {kind!r}")


def symbol_from_spec(spec: dict) -> Symbol:
    """Build a symbol from its JSON form ``{"kind": ..., "gamma": ..., ...}``."""
    spec = dict(spec)
    kind = spec.pop("kind")
    return builtin_symbol(kind, spec)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class SymbolReport:
    """Sampled ratios and verdicts for one symbol."""

    min_ellipticity_ratio: float | None = None
    max_derivative_ratios: dict = field(default_factory=dict)
    per_alpha: dict = field(default_factory=dict)
    samples_used: int = 0
    verdicts: dict = field(default_factory=dict)
    kappa_declared: float | None = None
    kappa_effective: float | None = None
    implied_M: float | None = None
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "min_ellipticity_ratio": self.min_ellipticity_ratio,
            "max_derivative_ratios": {str(k): v for k, v in self.max_derivative_ratios.items()},
            "per_alpha": {"".join(map(str, k)): v for k, v in self.per_alpha.items()},
            "samples_used": self.samples_used,
            "verdicts": dict(self.verdicts),
            "kappa_declared": self.kappa_declared,
            "kappa_effective": self.kappa_effective,
            "implied_M": self.implied_M,
            "warnings": list(self.warnings),
        }


def default_time_samples(symbol: Symbol, horizon: float | None = None) -> np.ndarray:
    """Partition endpoints and midpoints (plus GL nodes for smooth symbols)."""
    b = symbol.breaks
    if b.size == 1:
        b = np.array([0.0, 1.0 if horizon is None else float(horizon)])
    if horizon is not None and horizon > b[-1]:
        b = np.append(b, horizon)
    mids = 0.5 * (b[:-1] + b[1:])
    samples = [b, mids]
    if symbol.smooth is not None:
        for lo, hi in zip(b[:-1], b[1:]):
            samples.append(lo + 0.5 * (hi - lo) * (_GL8_NODES + 1.0))
    return np.unique(np.concatenate(samples))


def _nonzero_frequencies(grid: SpectralGrid, max_samples: int | None) -> np.ndarray:
    xi = grid.frequencies.reshape(grid.dim, -1)
    keep = np.sum(xi**2, axis=0) > 0
    xi = xi[:, keep]
    if max_samples is not None and xi.shape[1] > max_samples:
        stride = int(math.ceil(xi.shape[1] / max_samples))
        xi = xi[:, ::stride]
    return xi


def check_ellipticity(symbol: Symbol, grid: SpectralGrid, time_samples=None) -> SymbolReport:
    """Minimum over lattice ``xi != 0`` and time samples of ``Re[-psi] / |xi|^gamma``."""
    if time_samples is None:
        time_samples = default_time_samples(symbol)
    time_samples = np.atleast_1d(np.asarray(time_samples, dtype=float))
    xi = _nonzero_frequencies(grid, None)
    if xi.size == 0 or time_samples.size == 0:
        raise ValueError("need nonempty frequency and time samples")
    scale = _abs_xi(xi) ** symbol.gamma
    ratio = min(float(np.min(np.real(-symbol(t, xi)) / scale)) for t in time_samples)
    rep = SymbolReport(
        min_ellipticity_ratio=ratio,
        samples_used=int(xi.shape[1] * time_samples.size),
        kappa_declared=symbol.kappa,
        kappa_effective=symbol.kappa_effective,
    )
    rep.verdicts["elliptic"] = bool(ratio >= symbol.kappa * (1 - ELLIPTICITY_RTOL))
    if symbol.kappa > 1:
        rep.warnings.append(f"declared kappa {symbol.kappa} > 1; downstream bounds use kappa = 1")
    return rep


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices with ``|alpha| == order``, lexicographically descending."""
    out = [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) == order]
    return sorted(out, reverse=True)


def _central_difference(f, xi: np.ndarray, alpha: Sequence[int], eta: np.ndarray) -> np.ndarray:
    """``D^alpha f`` by composing first-order central differences of step ``eta``."""
    terms = [(1.0, np.zeros_like(xi))]
    for axis, k in enumerate(alpha):
        if k == 0:
            continue
        new = []
        for i in range(k + 1):
            c = (-1) ** i * math.comb(k, i)
            offset = float(k - 2 * i)
            for coef, shift in terms:
                s = shift.copy()
                s[axis] = s[axis] + offset * eta
                new.append((coef * c, s))
        terms = new
    total = sum(coef * np.asarray(f(xi + shift), dtype=complex) for coef, shift in terms)
    return total / (2.0 * eta) ** sum(alpha)


def _relative_step(order: int) -> float:
    # 1e-5 for first differences; higher orders would drown in roundoff at
    # that step, so they use the balanced step eps^(1/(order+2)).
    if order <= 1:
        return 1e-5
    return float(np.finfo(float).eps ** (1.0 / (order + 2)))


def check_regular_upper_bound(symbol: Symbol, n: int, grid: SpectralGrid, time_samples=None,
                              max_samples: int = 4096) -> SymbolReport:
    """Finite-difference certificate for ``|D^alpha psi| <= M |xi|^(gamma - |alpha|)``.

    Step ``eta = max(1e-5, 1e-5 |xi|)`` for first derivatives and
    ``max(1e-5, eps^(1/(k+2)) |xi|)`` for order ``k >= 2``.  For each ``|alpha| <= n`` the report
    holds ``max |D^alpha psi| |xi|^(|alpha| - gamma)``.  A warning is recorded
    when the estimated truncation plus roundoff error exceeds 1e-3 of a
    ratio.
    """
    if n < 0 or n > 4:
        raise ValueError("derivative order n must be in [0, 4]")
    if time_samples is None:
        time_samples = default_time_samples(symbol)
    time_samples = np.atleast_1d(np.asarray(time_samples, dtype=float))
    xi = _nonzero_frequencies(grid, max_samples)
    mod = _abs_xi(xi)
    rep = SymbolReport(kappa_declared=symbol.kappa, kappa_effective=symbol.kappa_effective,
                       samples_used=int(xi.shape[1] * time_samples.size))
    eps = np.finfo(float).eps
    for order in range(n + 1):
        best = 0.0
        for alpha in multi_indices(grid.dim, order):
            worst_err = 0.0
            ratio_alpha = 0.0
            eta = np.maximum(1e-5, _relative_step(order) * mod)
            for t in time_samples:
                f = lambda z, t=t: symbol(t, z)
                if order == 0:
                    d = np.abs(f(xi))
                    err = np.zeros_like(d)
                else:
                    d1 = _central_difference(f, xi, alpha, eta)
                    d2 = _central_difference(f, xi, alpha, 2 * eta)
                    fmax = np.abs(f(xi)) + 1e-300
                    roundoff = eps * fmax * 2.0**order / eta**order
                    err = np.abs(d1 - d2) / 3.0 + roundoff
                    d = np.abs(d1)
                weight = mod ** (order - symbol.gamma)
                r = d * weight
                k = int(np.argmax(r))
                ratio_alpha = max(ratio_alpha, float(r[k]))
                worst_err = max(worst_err, float(np.max(err * weight)))
            rep.per_alpha[tuple(alpha)] = ratio_alpha
            best = max(best, ratio_alpha)
            if order > 0 and worst_err > 1e-3 * max(ratio_alpha, symbol.M):
                msg = f"finite-difference conditioning poor for alpha={alpha}: error ~{worst_err:.2e} vs ratio {ratio_alpha:.3e}"
                rep.warnings.append(msg)
                warnings.warn(msg, RuntimeWarning, stacklevel=2)
        rep.max_derivative_ratios[order] = best
    rep.implied_M = max(rep.max_derivative_ratios.values())
    rep.verdicts["bounded"] = bool(rep.max_derivative_ratios[0] <= symbol.M * (1 + ELLIPTICITY_RTOL))
    return rep


def required_order(weight, p: float, dim: int) -> int:
    """Symbol differentiability ``floor(dim / R) + 2`` demanded by the weight."""
    R = weight.regularity_constant(p, dim)
    if isinstance(R, str) or R is None or not (1 < R <= 2):
        raise ValueError(f"regularity constant unavailable: {R}")
    return int(math.floor(dim / R + 1e-12)) + 2
