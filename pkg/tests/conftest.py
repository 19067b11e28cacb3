import numpy as np
import pytest

from psido_ivp.spectral_core import SpectralField, make_grid


def band_limited(grid, rng, k_max=None, real=True):
    """Random field whose spectrum lives on wavenumbers |k| <= k_max."""
    k_max = grid.points_per_axis // 8 if k_max is None else k_max
    spec = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    mask = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.dim):
        k = np.abs(grid.axis_wavenumbers)
        shape = [1] * grid.dim
        shape[axis] = -1
        mask &= (k <= k_max).reshape(shape)
    f = SpectralField.from_spectrum(grid, spec * mask)
    return SpectralField.from_values(grid, f.values.real) if real else f


def smooth_random(grid, rng, n_modes=12, scale=1.0):
    """Grid-independent random trigonometric polynomial (same function at every N)."""
    k = rng.integers(1, n_modes + 1, size=n_modes)
    a = rng.standard_normal(n_modes)
    ph = rng.uniform(0, 2 * np.pi, n_modes)
    x = grid.points[0]
    vals = sum(ai * np.cos(grid.freq_step * ki * x * scale + pi) for ai, ki, pi in zip(a, k, ph))
    return SpectralField.from_values(grid, vals)


@pytest.fixture
def grid1():
    return make_grid(1, 1024, 32.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def record_acceptance(request):
    """Store ``(passed, detail)`` for an acceptance criterion and echo it."""
    table = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number, passed, detail):
        line = f"ACCEPTANCE {number:>2} {'PASS' if passed else 'FAIL'}: {detail}"
        table[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(_ACCEPTANCE, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        terminalreporter.write_line(table[number])
