"""Borel measures on (0, inf): Laplace transforms, dyadic control and scaling constants.

A :class:`TimeMeasure` is a density part plus finitely many atoms, viewed
through a scale ``c``: the object represents ``mu(c dt)``, i.e.

    integral f(t) mu(c dt) = integral f(t / c) mu(dt).

All integrals against densities use composite 16-point Gauss-Legendre on
panels graded geometrically (ratio 2) toward ``t = 0`` and split at every
density breakpoint.  Laplace transforms are accumulated in the log domain,
so values far below the float range (atoms at large ``lambda``) stay exact
in ``log_laplace``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "Density",
    "TimeMeasure",
    "DyadicSequence",
    "LaplaceControl",
    "DoublingResult",
    "WeakScaling",
    "power_density",
    "power_sum_density",
    "ainfty_blocks_density",
    "lebesgue",
    "power_measure",
    "dirac",
    "measure_from_spec",
    "laplace",
    "log_laplace",
    "control_sequence",
    "doubling_constant",
    "weak_scaling_constants",
    "laplace_equivalence_check",
    "weighted_time_integral",
    "time_quadrature",
    "dyadic_interval_samples",
    "geometric_samples",
    "density_ap_constant",
]

_GL16_NODES, _GL16_WEIGHTS = np.polynomial.legendre.leggauss(16)
_LN2 = math.log(2.0)
_LAPLACE_REL = 1e-18
_HEAD_REL = 1e-17


# ---------------------------------------------------------------------------
# densities


@dataclass(frozen=True)
class Density:
    """Nonnegative density on (0, inf) with endpoint exponent ``e0`` (``rho ~ t^e0`` at 0)."""

    kind: str
    params: dict = field(default_factory=dict)
    tilt: float = 0.0
    factor: float = 1.0

    @property
    def e0(self) -> float:
        if self.kind == "power":
            base = self.params["a"]
        elif self.kind == "power_sum":
            base = min(self.params["exponents"])
        else:
            base = 0.0
        return base + self.tilt

    def log_pdf(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        lt = np.log(t)
        if self.kind == "power":
            out = self.params["a"] * lt
        elif self.kind == "power_sum":
            out = logsumexp(np.multiply.outer(self.params["exponents"], lt), axis=0)
        elif self.kind == "ainfty_blocks":
            vals = np.asarray(self.params["values"], dtype=float)
            k = np.floor(np.log2(t) + 1e-13).astype(np.int64)
            out = np.log(vals[np.mod(k, vals.size)])
        else:
            raise ValueError(f"unknown density kind {self.kind!r}")
        return out + self.tilt * lt + math.log(self.factor)

    def pdf(self, t) -> np.ndarray:
        return np.exp(self.log_pdf(t))

    def breakpoints(self, lo: float, hi: float) -> np.ndarray:
        """Points in ``(lo, hi)`` where the density is not smooth."""
        if self.kind != "ainfty_blocks" or hi <= lo:
            return np.empty(0)
        k0 = math.floor(math.log2(max(lo, 1e-300)))
        k1 = math.ceil(math.log2(hi))
        pts = 2.0 ** np.arange(k0, k1 + 1)
        return pts[(pts > lo) & (pts < hi)]

    def cdf(self, theta):
        """``integral_0^theta rho``; ``None`` when no closed form is available."""
        if self.tilt != 0.0 and self.kind != "power":
            return None
        theta = np.asarray(theta, dtype=float)
        if self.kind == "power":
            e = self.params["a"] + self.tilt
            return self.factor * np.where(theta > 0, np.abs(theta) ** (e + 1), 0.0) / (e + 1)
        if self.kind == "power_sum":
            return self.factor * sum(np.where(theta > 0, np.abs(theta) ** (b + 1), 0.0) / (b + 1)
                                     for b in self.params["exponents"])
        if self.kind == "ainfty_blocks":
            vals = np.asarray(self.params["values"], dtype=float)
            m = vals.size
            th = np.atleast_1d(theta)
            out = np.zeros_like(th)
            pos = th > 0
            K = np.floor(np.log2(th[pos]) + 1e-13).astype(np.int64)
            # complete blocks [2^k, 2^{k+1}) for k < K carry mass v_k 2^k
            full = np.zeros(K.shape)
            for i in range(1, 80):
                full += vals[np.mod(K - i, m)] * 2.0 ** (K - i).astype(float)
            out[pos] = full + vals[np.mod(K, m)] * (th[pos] - 2.0 ** K.astype(float))
            out = self.factor * out
            return out.reshape(np.shape(theta)) if np.ndim(theta) else float(out[0])
        return None

    def tilted(self, e: float, factor: float = 1.0) -> Density:
        return Density(self.kind, self.params, self.tilt + e, self.factor * factor)

    def to_spec(self) -> dict:
        out = {"kind": self.kind, **self.params}
        if self.tilt:
            out["tilt"] = self.tilt
        return out


def power_density(a: float) -> Density:
    if not a > -1:
        raise ValueError("density t^a is not locally integrable for a <= -1")
    return Density("power", {"a": float(a)})


def power_sum_density(exponents: Sequence[float]) -> Density:
    exps = [float(b) for b in exponents]
    if min(exps) <= -1:
        raise ValueError("density exponents must exceed -1")
    return Density("power_sum", {"exponents": exps})


def ainfty_blocks_density(values: Sequence[float] = (1.0, 2.0)) -> Density:
    """Density equal to ``values[k mod m]`` on the dyadic block ``[2^k, 2^(k+1))``."""
    vals = [float(v) for v in values]
    if min(vals) <= 0:
        raise ValueError("block values must be positive")
    return Density("ainfty_blocks", {"values": vals})


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class TimeMeasure:
    """``mu(c dt)`` for ``mu = rho dt + sum_i m_i delta_{t_i}``."""

    density: Density | None = None
    atoms: tuple = ()
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        atoms = tuple((float(t), float(m)) for t, m in self.atoms)
        for t, m in atoms:
            if not (t > 0 and m > 0):
                raise ValueError("atoms need positive location and mass")
        object.__setattr__(self, "atoms", atoms)
        if self.density is not None and not self.density.e0 > -1:
            raise ValueError(f"density endpoint exponent {self.density.e0} <= -1: mu((0, 1)) is infinite")
        if self.density is None and not atoms:
            raise ValueError("measure has neither density nor atoms")

    # effective view of mu(c dt)
    @property
    def e0(self) -> float:
        return self.density.e0 if self.density is not None else math.inf

    def effective_atoms(self) -> list[tuple[float, float]]:
        return [(t / self.scale, m) for t, m in self.atoms]

    def log_pdf(self, t) -> np.ndarray:
        return math.log(self.scale) + self.density.log_pdf(self.scale * np.asarray(t, dtype=float))

    def breakpoints(self, lo: float, hi: float) -> np.ndarray:
        if self.density is None:
            return np.empty(0)
        c = self.scale
        return self.density.breakpoints(c * lo, c * hi) / c

    def scaled(self, c: float) -> TimeMeasure:
        """``mu(c' dt) -> mu(c c' dt)``."""
        return TimeMeasure(self.density, self.atoms, self.scale * c)

    def tilted(self, e: float) -> TimeMeasure:
        """``t^e mu(c dt)`` as a new measure (same scale)."""
        c = self.scale
        dens = None if self.density is None else self.density.tilted(e, c ** (-e))
        atoms = tuple((t, m * (t / c) ** e) for t, m in self.atoms)
        return TimeMeasure(dens, atoms, c)

    def mass(self, lo: float, hi: float) -> float:
        """``mu(c dt)`` of the open interval ``(lo, hi)``."""
        if hi <= lo:
            return 0.0
        total = 0.0
        if self.density is not None:
            c = self.scale
            cdf_hi = self.density.cdf(c * hi)
            if cdf_hi is not None:
                total += float(cdf_hi - self.density.cdf(c * lo))
            else:
                nodes, weights = _graded_rule(self, lo, hi)
                total += float(np.sum(weights * np.exp(self.log_pdf(nodes))))
        total += sum(m for t, m in self.effective_atoms() if lo < t < hi)
        return total

    def to_spec(self) -> dict:
        return {
            "density": None if self.density is None else self.density.to_spec(),
            "atoms": [[t, m] for t, m in self.atoms],
            "scale": self.scale,
        }


def lebesgue() -> TimeMeasure:
    return TimeMeasure(power_density(0.0))


def power_measure(a: float) -> TimeMeasure:
    return TimeMeasure(power_density(a))


def dirac(t0: float, mass: float = 1.0) -> TimeMeasure:
    return TimeMeasure(None, ((t0, mass),))


def measure_from_spec(spec: dict) -> TimeMeasure:
    """``{"density": {...} | null, "atoms": [[t, m], ...], "scale": c}``."""
    dens = spec.get("density")
    density = None
    if dens is not None:
        kind = dens.get("kind")
        if kind == "power":
            density = power_density(dens.get("a", 0.0))
        elif kind == "lebesgue":
            density = power_density(0.0)
        elif kind == "power_sum":
            density = power_sum_density(dens["exponents"])
        elif kind == "ainfty_blocks":
            density = ainfty_blocks_density(dens.get("values", (1.0, 2.0)))
        else:
            raise ValueError(f"unknown density kind {kind!r}")
        if dens.get("tilt"):
            density = density.tilted(float(dens["tilt"]))
    return TimeMeasure(density, tuple(tuple(a) for a in spec.get("atoms", [])), float(spec.get("scale", 1.0)))


# ---------------------------------------------------------------------------
# quadrature


def _gl_on(edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    nodes = (a + half)[:, None] + half[:, None] * _GL16_NODES[None, :]
    weights = half[:, None] * _GL16_WEIGHTS[None, :]
    return nodes.ravel(), weights.ravel()


def _head_edges(measure: TimeMeasure, anchor: float, extra_tilt: float, log_ref: float) -> list[float]:
    """Geometric edges ``anchor, anchor/2, ...`` until the mass of ``(0, edge)`` is negligible."""
    e = measure.e0 + extra_tilt
    if not e > -1:
        raise ValueError(f"combined endpoint exponent {e} <= -1: integral diverges at 0")
    edges = [anchor]
    t = anchor
    for _ in range(4000):
        t = 0.5 * t
        edges.append(t)
        # mass of (0, t) ~ rho(t) t^(1 + tilt) / (e + 1)
        log_head = float(measure.log_pdf(t)) + (1.0 + extra_tilt) * math.log(t) - math.log(e + 1.0)
        if log_head < log_ref + math.log(_HEAD_REL) or t < 1e-300:
            break
    return edges[::-1]


def _graded_rule(measure: TimeMeasure, lo: float, hi: float, extra_tilt: float = 0.0, refine: int = 1):
    """Nodes/weights for ``integral_lo^hi`` of ``t^extra_tilt rho_c(t) dt`` (weights exclude rho).

    ``refine`` splits every panel into that many equal parts.
    """
    if lo > 0:
        n_levels = max(1, math.ceil(math.log2(hi / lo)))
        edges = np.geomspace(lo, hi, n_levels + 1)
    else:
        log_ref = float(measure.log_pdf(hi)) + (1.0 + extra_tilt) * math.log(hi)
        edges = np.array(_head_edges(measure, hi, extra_tilt, log_ref))
        edges = np.concatenate(([0.0], edges))
    edges = np.unique(np.concatenate((edges, measure.breakpoints(edges[0], edges[-1]))))
    if refine > 1:
        frac = np.arange(refine) / refine
        edges = np.append((edges[:-1, None] + np.diff(edges)[:, None] * frac[None, :]).ravel(), edges[-1])
    nodes, weights = _gl_on(edges)
    return nodes, weights * nodes**extra_tilt


def log_laplace(measure: TimeMeasure, lam: float) -> float:
    """``log integral e^(-lam t) mu(c dt)``, computed in the log domain."""
    if not lam > 0:
        raise ValueError(f"Laplace variable must be positive, got {lam}")
    terms = [-lam * t + math.log(m) for t, m in measure.effective_atoms()]
    if measure.density is not None:
        anchor = 1.0 / lam
        log_ref = float(measure.log_pdf(anchor)) + math.log(anchor) - 1.0
        head = _head_edges(measure, anchor, 0.0, log_ref)
        tail = [anchor]
        t = anchor
        for _ in range(4000):
            t = 2.0 * t
            tail.append(t)
            if float(measure.log_pdf(t)) + math.log(t) - lam * t < log_ref + math.log(_LAPLACE_REL):
                break
        edges = np.concatenate(([0.0], head, tail[1:]))
        edges = np.unique(np.concatenate((edges, measure.breakpoints(edges[0], edges[-1]))))
        nodes, weights = _gl_on(edges)
        terms.append(float(logsumexp(np.log(weights) + measure.log_pdf(nodes) - lam * nodes)))
    return float(logsumexp(terms))


def laplace(measure: TimeMeasure, lam: float) -> float:
    """``integral_0^inf e^(-lam t) mu(c dt)``."""
    return math.exp(log_laplace(measure, lam))


def time_quadrature(measure: TimeMeasure, a: float, scale_c: float, T: float,
                    extra_scale: bool = True, refine: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``integral_0^T g(t) t^a mu(c dt)``.

    Atoms of ``mu(c dt)`` inside ``(0, T]`` appear as nodes with weight
    ``m_i t_i^a``.  ``scale_c`` multiplies the measure's own scale.
    """
    if not T > 0:
        raise ValueError("horizon T must be positive")
    m = measure.scaled(scale_c) if extra_scale else measure
    nodes, weights = [], []
    if m.density is not None:
        x, w = _graded_rule(m, 0.0, T, extra_tilt=a, refine=refine)
        nodes.append(x)
        weights.append(w * np.exp(m.log_pdf(x)))
    for t, mass in m.effective_atoms():
        if t <= T:
            nodes.append(np.array([t]))
            weights.append(np.array([mass * t**a]))
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)


def weighted_time_integral(measure: TimeMeasure, a: float, scale_c: float, g: Callable, T: float) -> float:
    """``integral_0^T g(t) t^a mu(c dt)`` with ``g`` vectorized over time arrays."""
    nodes, weights = time_quadrature(measure, a, scale_c, T)
    if nodes.size == 0:
        return 0.0
    vals = np.asarray(g(nodes), dtype=float)
    return float(np.sum(weights * vals))


# ---------------------------------------------------------------------------
# dyadic sequences and control


@dataclass(frozen=True)
class DyadicSequence:
    """Values ``r(j)`` on the integer range ``[j_lo, j_hi]``."""

    j_lo: int
    j_hi: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.j_hi - self.j_lo + 1,):
            raise ValueError("values must cover j_lo..j_hi")
        if not np.all(np.isfinite(vals)):
            raise ValueError("sequence values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def linear(cls, slope: float, j_lo: int, j_hi: int, offset: float = 0.0) -> DyadicSequence:
        j = np.arange(j_lo, j_hi + 1)
        return cls(j_lo, j_hi, slope * j + offset)

    @classmethod
    def from_function(cls, func: Callable[[int], float], j_lo: int, j_hi: int) -> DyadicSequence:
        return cls(j_lo, j_hi, np.array([func(j) for j in range(j_lo, j_hi + 1)], dtype=float))

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.j_lo, self.j_hi + 1)

    def __call__(self, j: int) -> float:
        if not self.j_lo <= j <= self.j_hi:
            raise IndexError(f"j = {j} outside [{self.j_lo}, {self.j_hi}]")
        return float(self.values[j - self.j_lo])

    def covers(self, lo: int, hi: int) -> bool:
        return self.j_lo <= lo and hi <= self.j_hi

    @property
    def differences(self) -> np.ndarray:
        return np.diff(self.values)

    @property
    def diff_seminorm(self) -> float:
        d = self.differences
        return float(np.max(np.abs(d))) if d.size else 0.0

    def __add__(self, other: DyadicSequence) -> DyadicSequence:
        lo, hi = max(self.j_lo, other.j_lo), min(self.j_hi, other.j_hi)
        j = np.arange(lo, hi + 1)
        return DyadicSequence(lo, hi, self.values[j - self.j_lo] + other.values[j - other.j_lo])

    def __mul__(self, scalar: float) -> DyadicSequence:
        return DyadicSequence(self.j_lo, self.j_hi, self.values * scalar)

    __rmul__ = __mul__

    def __sub__(self, other: DyadicSequence) -> DyadicSequence:
        return self + (-1.0) * other

    def to_spec(self) -> dict:
        return {"kind": "table", "j_lo": self.j_lo, "values": self.values.tolist()}


@dataclass(frozen=True)
class LaplaceControl:
    gamma: float
    param_a: float
    sequence: DyadicSequence
    constant: float = 1.0
    log2_laplace: np.ndarray | None = field(default=None, compare=False)


def control_sequence(measure: TimeMeasure, gamma: float, a: float, j_range: tuple[int, int]) -> LaplaceControl:
    """``mu_a(j) = gamma j a - log2 L_mu(2^(gamma j))`` on ``j_range`` (``N = 1``)."""
    j_lo, j_hi = int(j_range[0]), int(j_range[1])
    js = np.arange(j_lo, j_hi + 1)
    log2_l = np.array([log_laplace(measure, 2.0 ** (gamma * j)) / _LN2 for j in js])
    if not np.all(np.isfinite(log2_l)):
        raise ValueError("Laplace transform not finite on the requested range")
    seq = DyadicSequence(j_lo, j_hi, gamma * js * a - log2_l)
    return LaplaceControl(gamma, a, seq, 1.0, log2_l)


# ---------------------------------------------------------------------------
# doubling and weak scaling


def geometric_samples(lo_exp: float = -20.0, hi_exp: float = 20.0, per_octave: int = 4) -> np.ndarray:
    n = int(round((hi_exp - lo_exp) * per_octave)) + 1
    return 2.0 ** np.linspace(lo_exp, hi_exp, n)


def dyadic_interval_samples(lo_exp: int = -20, hi_exp: int = 20, per_octave: int = 2) -> list[tuple[float, float]]:
    """Intervals ``(s, e)`` with ``s`` in ``{0} U ends``, ``e`` in ends, ``s < e``."""
    ends = geometric_samples(lo_exp, hi_exp, per_octave)
    starts = np.concatenate(([0.0], ends))
    return [(float(s), float(e)) for s in starts for e in ends if s < e]


@dataclass
class DoublingResult:
    value: float
    skipped: int
    infinite: bool
    argmax: tuple | None = None


def doubling_constant(measure: TimeMeasure, k: float, interval_samples=None) -> DoublingResult:
    """Sampled ``sup mu(kI) / mu(I)`` with ``kI = (ks, ke)`` for ``I = (s, e)``.

    Intervals with ``mu(I) = 0`` are skipped and counted; if any of them has
    ``mu(kI) > 0``, or a ratio exceeds 1e12, the result is flagged infinite.
    """
    if not k > 1:
        raise ValueError("k must exceed 1")
    if interval_samples is None:
        interval_samples = dyadic_interval_samples()
    best, arg, skipped, infinite = 0.0, None, 0, False
    for s, e in interval_samples:
        m_i = measure.mass(s, e)
        m_k = measure.mass(k * s, k * e)
        if m_i <= 0:
            skipped += 1
            if m_k > 0:
                infinite = True
            continue
        r = m_k / m_i
        if r > best:
            best, arg = r, (s, e)
    if best > 1e12:
        infinite = True
    return DoublingResult(math.inf if infinite else best, skipped, infinite, arg)


@dataclass
class WeakScaling:
    b_k: float
    B_k: float
    skipped: int

    @property
    def verdict(self) -> bool:
        return self.b_k > 0 and self.B_k < 1


def weak_scaling_constants(measure: TimeMeasure, k: float, theta_samples=None) -> WeakScaling:
    """``(min, max)`` over ``theta`` of ``mu((0, theta)) / mu((0, k theta))``."""
    if not k > 1:
        raise ValueError("k must exceed 1")
    if theta_samples is None:
        theta_samples = geometric_samples()
    ratios, skipped = [], 0
    for th in np.asarray(theta_samples, dtype=float):
        den = measure.mass(0.0, k * th)
        if den <= 0:
            skipped += 1
            continue
        ratios.append(measure.mass(0.0, th) / den)
    if not ratios:
        raise ValueError("every sampled interval had zero mass")
    return WeakScaling(float(min(ratios)), float(max(ratios)), skipped)


def laplace_equivalence_check(measure: TimeMeasure, a0: float, lambda_samples=None) -> tuple[float, float]:
    """``(min, max)`` over ``lambda`` of ``L_{t^-a0 mu}(lambda) / (lambda^a0 mu((0, 1/lambda)))``."""
    ws = weak_scaling_constants(measure, 2.0)
    if not ws.verdict:
        raise ValueError("measure fails the weak scaling property")
    upper = -math.log2(ws.B_k)
    if not 0 <= a0 < upper:
        raise ValueError(f"a0 = {a0} outside [0, {upper:.6g})")
    if lambda_samples is None:
        lambda_samples = 2.0 ** np.arange(-8, 9)
    tilted = measure.tilted(-a0)
    ratios = []
    for lam in np.asarray(lambda_samples, dtype=float):
        den = lam**a0 * measure.mass(0.0, 1.0 / lam)
        ratios.append(laplace(tilted, lam) / den)
    return float(min(ratios)), float(max(ratios))


def density_ap_constant(density: Density, nu: float, interval_samples=None) -> float:
    """Sampled ``A_nu`` constant of a density on (0, inf) over intervals (lower bound)."""
    if not nu > 1:
        raise ValueError("nu must exceed 1")
    if interval_samples is None:
        interval_samples = [(s, e) for s, e in dyadic_interval_samples(-10, 10, 2) if s > 0]
    m = TimeMeasure(density)
    best = 1.0
    for s, e in interval_samples:
        edges = np.geomspace(s, e, max(2, math.ceil(math.log2(e / s)) + 1))
        x, w = _gl_on(np.unique(np.concatenate((edges, m.breakpoints(s, e)))))
        rho = density.pdf(x)
        length = e - s
        avg_w = np.sum(w * rho) / length
        avg_dual = np.sum(w * rho ** (-1.0 / (nu - 1.0))) / length
        best = max(best, float(avg_w * avg_dual ** (nu - 1.0)))
    return best
