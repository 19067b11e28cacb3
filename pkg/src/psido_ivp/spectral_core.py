"""Periodic grids, the symmetric Fourier transform and weighted L_p norms.

Everything downstream computes on a :class:`SpectralGrid`, a uniform
lattice on the torus ``[-L, L)^d`` with frequencies ``xi_k = (pi / L) k``.
The discrete transform is scaled so that it approximates

    F[f](xi) = (2 pi)^(-d/2) * integral exp(-i xi.x) f(x) dx,

which makes the Gaussian ``exp(-|x|^2 / 2)`` a fixed point.

Spectra are stored in FFT order (zero frequency first), never shifted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "SpectralGrid",
    "SpectralField",
    "make_grid",
    "transform",
    "inverse_transform",
    "weighted_lp_norm",
    "write_field",
    "read_field",
]

_LOG_TOL = 1e-9


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic lattice on ``[-half_width, half_width)^dim``."""

    dim: int
    points_per_axis: int
    half_width: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        n = self.points_per_axis
        if n < 64 or n & (n - 1):
            raise ValueError(f"points_per_axis must be a power of two >= 64, got {n}")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        lo, hi = self.band
        if hi - lo < 3:
            raise ValueError(
                f"resolved dyadic band [{lo}, {hi}] is narrower than 3 levels; "
                "increase points_per_axis or half_width"
            )

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def freq_step(self) -> float:
        return math.pi / self.half_width

    @property
    def nyquist(self) -> float:
        return math.pi * self.points_per_axis / (2.0 * self.half_width)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def band(self) -> tuple[int, int]:
        """Resolved dyadic levels ``(j_min, j_max)``."""
        j_min = math.ceil(math.log2(self.freq_step) - _LOG_TOL) + 1
        j_max = math.floor(math.log2(self.nyquist) + _LOG_TOL) - 1
        return j_min, j_max

    @cached_property
    def axis_points(self) -> np.ndarray:
        m = np.arange(self.points_per_axis)
        return -self.half_width + m * self.spacing

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers ``k`` in FFT order."""
        n = self.points_per_axis
        return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)

    @cached_property
    def axis_frequencies(self) -> np.ndarray:
        return self.freq_step * self.axis_wavenumbers

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates, shape ``(dim, N, ..., N)``."""
        mesh = np.meshgrid(*([self.axis_points] * self.dim), indexing="ij")
        return np.stack(mesh)

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Lattice frequencies in FFT order, shape ``(dim, N, ..., N)``."""
        mesh = np.meshgrid(*([self.axis_frequencies] * self.dim), indexing="ij")
        return np.stack(mesh)

    @cached_property
    def abs_frequency(self) -> np.ndarray:
        return np.sqrt(np.sum(self.frequencies**2, axis=0))

    @cached_property
    def abs_position(self) -> np.ndarray:
        return np.sqrt(np.sum(self.points**2, axis=0))

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-i xi_k x_0) with x_0 = -L is (-1)^k per axis.
        sign = np.where(self.axis_wavenumbers % 2 == 0, 1.0, -1.0)
        out = np.ones(self.shape)
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = -1
            out = out * sign.reshape(shape)
        return out

    @property
    def origin_index(self) -> tuple[int, ...]:
        return (self.points_per_axis // 2,) * self.dim

    def to_dict(self) -> dict:
        return {"dim": self.dim, "n": self.points_per_axis, "half_width": self.half_width}


def make_grid(dim: int, points_per_axis: int, half_width: float) -> SpectralGrid:
    return SpectralGrid(int(dim), int(points_per_axis), float(half_width))


def transform(grid: SpectralGrid, values: np.ndarray) -> np.ndarray:
    """Scaled DFT approximating the symmetric continuous transform."""
    scale = grid.cell_volume * (2.0 * math.pi) ** (-grid.dim / 2.0)
    return scale * grid._phase * np.fft.fftn(values)


def inverse_transform(grid: SpectralGrid, spectrum: np.ndarray) -> np.ndarray:
    n_total = grid.points_per_axis**grid.dim
    scale = grid.freq_step**grid.dim * n_total * (2.0 * math.pi) ** (-grid.dim / 2.0)
    return scale * np.fft.ifftn(grid._phase * spectrum)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex samples on a grid together with their (lazily computed) spectrum.

    Build with :meth:`from_values` or :meth:`from_spectrum`; whichever side
    was not supplied is computed on first access and cached.
    """

    grid: SpectralGrid
    _values: np.ndarray | None = field(default=None, repr=False)
    _spectrum: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_values(cls, grid: SpectralGrid, values) -> SpectralField:
        arr = np.array(values, dtype=complex)
        if arr.shape != grid.shape:
            raise ValueError(f"values shape {arr.shape} does not match grid {grid.shape}")
        arr.flags.writeable = False
        return cls(grid, arr, None)

    @classmethod
    def from_spectrum(cls, grid: SpectralGrid, spectrum) -> SpectralField:
        arr = np.array(spectrum, dtype=complex)
        if arr.shape != grid.shape:
            raise ValueError(f"spectrum shape {arr.shape} does not match grid {grid.shape}")
        arr.flags.writeable = False
        return cls(grid, None, arr)

    @cached_property
    def values(self) -> np.ndarray:
        if self._values is not None:
            return self._values
        out = inverse_transform(self.grid, self._spectrum)
        out.flags.writeable = False
        return out

    @cached_property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is not None:
            return self._spectrum
        out = transform(self.grid, self._values)
        out.flags.writeable = False
        return out

    def multiply_spectrum(self, multiplier) -> SpectralField:
        return SpectralField.from_spectrum(self.grid, self.spectrum * multiplier)

    def __add__(self, other: SpectralField) -> SpectralField:
        return SpectralField.from_spectrum(self.grid, self.spectrum + other.spectrum)

    def __mul__(self, scalar) -> SpectralField:
        return SpectralField.from_spectrum(self.grid, self.spectrum * scalar)

    __rmul__ = __mul__


def weighted_lp_norm(field: SpectralField, p: float, weight=None) -> float:
    """Riemann-sum ``L_p(w dx)`` norm; ``p = inf`` gives the max-norm.

    ``weight`` is anything with a ``node_values(grid)`` method (see
    :class:`psido_ivp.weights.Weight`); ``None`` means the unit weight.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mod = np.abs(field.values)
    grid = field.grid
    if math.isinf(p):
        if weight is not None:
            mod = mod * (weight.node_values(grid) > 0)
        return float(mod.max())
    integrand = mod**p
    if weight is not None:
        w = weight.node_values(grid)
        if not np.all(np.isfinite(w)):
            raise ValueError("weight is not finite at every node")
        integrand = integrand * w
    return float((np.sum(integrand) * grid.cell_volume) ** (1.0 / p))


def write_field(path, field: SpectralField, kind: str = "values") -> None:
    """Dump a field as raw little-endian float64 ``(re, im)`` pairs plus a JSON sidecar."""
    if kind not in ("values", "spectrum"):
        raise ValueError("kind must be 'values' or 'spectrum'")
    path = Path(path)
    data = field.values if kind == "values" else field.spectrum
    inter = np.empty(data.shape + (2,), dtype="<f8")
    inter[..., 0] = data.real
    inter[..., 1] = data.imag
    path.write_bytes(inter.tobytes(order="C"))
    sidecar = dict(field.grid.to_dict(), kind=kind)
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar))


def read_field(path) -> SpectralField:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    grid = make_grid(meta["dim"], meta["n"], meta["half_width"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f8").reshape(grid.shape + (2,))
    data = raw[..., 0] + 1j * raw[..., 1]
    if meta["kind"] == "values":
        return SpectralField.from_values(grid, data)
    return SpectralField.from_spectrum(grid, data)
