"""Periodic grid, real FFTs, spectral derivatives and translations.

All spectra in this package use the real-FFT layout (``n // 2 + 1`` modes,
last one the Nyquist mode).
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError

SNAPSHOT_HEADER = struct.Struct("<qdd")  # n, L, time


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid x_j = j * L / n on [0, L)."""

    n: int = 1024
    length: float = 80.0

    def __post_init__(self):
        n = int(self.n)
        if n < 64 or n & (n - 1):
            raise DomainError(f"grid size must be a power of two >= 64, got {self.n}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise DomainError(f"domain length must be positive, got {self.length}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self):
        return self.length / self.n

    @cached_property
    def x(self):
        x = np.arange(self.n) * self.dx
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self):
        """Full table k_j = 2 pi j / L in standard FFT ordering."""
        k = 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        k.flags.writeable = False
        return k

    @cached_property
    def k(self):
        """Real-FFT wavenumbers 0 .. k_max."""
        k = 2 * np.pi * np.arange(self.n // 2 + 1) / self.length
        k.flags.writeable = False
        return k

    @cached_property
    def k_odd(self):
        """Wavenumbers for odd-order derivatives: Nyquist mode zeroed."""
        k = self.k.copy()
        k[-1] = 0.0
        k.flags.writeable = False
        return k

    @property
    def k_max(self):
        return np.pi * self.n / self.length

    def field(self, values):
        return Field(self, values)

    def sample(self, func):
        """Field of ``func(x)`` on the grid points."""
        return Field(self, func(np.asarray(self.x)))

    def zeros(self):
        return Field(self, np.zeros(self.n))


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of u on a grid. Values are copied and made read-only."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise DomainError(f"field has shape {v.shape}, grid needs ({self.grid.n},)")
        if not np.all(np.isfinite(v)):
            raise DomainError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def with_values(self, values):
        return Field(self.grid, values)

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, a):
        return self.with_values(self.values * a)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def _vals(f):
    return f.values if isinstance(f, Field) else np.asarray(f)


def same_grid(u, v):
    if u.grid != v.grid:
        raise DomainError("fields live on different grids")
    return u.grid


# -- transforms ------------------------------------------------------------

def transform(f):
    return np.fft.rfft(f.values)


def inverse_transform(grid, f_hat):
    return Field(grid, np.fft.irfft(f_hat, n=grid.n))


def derivative_values(grid, values, order=1):
    """Array-level spectral derivative used by the hot loops."""
    if order not in (1, 2, 3):
        raise DomainError(f"derivative order must be 1, 2 or 3, got {order}")
    k = grid.k_odd if order % 2 else grid.k
    return np.fft.irfft((1j * k) ** order * np.fft.rfft(values), n=grid.n)


def derivative(f, order=1):
    """Spectral derivative of the given order (Nyquist dropped for odd orders)."""
    return Field(f.grid, derivative_values(f.grid, f.values, order))


def translate_values(grid, values, tau):
    tau = tau % grid.length
    if tau == 0:
        return np.array(values, dtype=float)
    phase = np.exp(-1j * grid.k * tau)
    return np.fft.irfft(np.fft.rfft(values) * phase, n=grid.n)


def translate(f, tau):
    """Return u(x - tau), computed as a phase shift in transform space."""
    return Field(f.grid, translate_values(f.grid, f.values, tau))


def dealias(f_hat):
    """2/3 rule on a real-FFT spectrum: zero every mode with |j| > n/3."""
    f_hat = np.array(f_hat, copy=True)
    n = 2 * (len(f_hat) - 1)
    f_hat[np.arange(len(f_hat)) > n / 3] = 0.0
    return f_hat


def dealias_mask(grid):
    return np.arange(grid.n // 2 + 1) <= grid.n / 3


def project_band(f, k_cut):
    """Keep only modes with |k| <= k_cut."""
    f_hat = transform(f)
    f_hat[f.grid.k > k_cut] = 0.0
    return inverse_transform(f.grid, f_hat)


# -- serialization ---------------------------------------------------------

def write_field_csv(path, f):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u"])
        for x, u in zip(f.grid.x, f.values):
            w.writerow([repr(float(x)), repr(float(u))])


def read_field_csv(path, length=None):
    """Read an ``x,u`` CSV. The domain length defaults to n * (x1 - x0)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x, u = data[:, 0], data[:, 1]
    if length is None:
        length = len(x) * (x[1] - x[0])
    return Field(Grid(len(x), length), u)


def write_snapshot(path, f, time=0.0):
    """Binary snapshot: little-endian (int64 n, float64 L, float64 t) + n doubles."""
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_HEADER.pack(f.grid.n, f.grid.length, float(time)))
        fh.write(np.asarray(f.values, dtype="<f8").tobytes())


def read_snapshot(path):
    with open(path, "rb") as fh:
        n, length, time = SNAPSHOT_HEADER.unpack(fh.read(SNAPSHOT_HEADER.size))
        values = np.frombuffer(fh.read(8 * n), dtype="<f8")
    if values.size != n:
        raise DomainError(f"truncated snapshot {path}")
    return Field(Grid(n, length), values.astype(float)), time
