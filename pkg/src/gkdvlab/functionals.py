"""Conserved functionals, the H1 metric and the translation-orbit distance.

Quadratures are plain sums ``dx * sum(...)`` over the periodic grid, which
are spectrally accurate for smooth periodic integrands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import derivative_values, same_grid, translate

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Observables:
    energy: float
    charge: float
    hylenic_ratio: float
    h1_norm: float


def energy_values(grid, u, model):
    ux = derivative_values(grid, u, 1)
    return grid.dx * float(np.sum(0.5 * ux * ux + model.w(u)))


def energy(u, model):
    """E(u) = integral of (u_x**2 / 2 + W(u))."""
    return energy_values(u.grid, u.values, model)


def charge(u):
    """C(u) = integral of u**2 / 2."""
    return 0.5 * u.grid.dx * float(np.dot(u.values, u.values))


def mass(u):
    """NLS charge: integral of |u|**2 (no factor 1/2)."""
    return u.grid.dx * float(np.dot(u.values, u.values))


def l2_norm_values(grid, r):
    return math.sqrt(grid.dx * float(np.dot(r, r)))


def h1_norm(u):
    ux = derivative_values(u.grid, u.values, 1)
    return math.sqrt(u.grid.dx * float(np.dot(u.values, u.values) + np.dot(ux, ux)))


def h1_distance(u, v):
    same_grid(u, v)
    return h1_norm(u - v)


def hylenic_ratio(u, model):
    c = charge(u)
    return energy(u, model) / c if c > 0 else math.nan


def observables(u, model):
    e, c = energy(u, model), charge(u)
    return Observables(e, c, e / c if c > 0 else math.nan, h1_norm(u))


def energy_gradient_values(grid, u, model):
    """L2 gradient E'(u) = -u_xx + W'(u)."""
    return -derivative_values(grid, u, 2) + model.w_prime(u)


def eigen_residual(u, model, c):
    """L2 norm of -u_xx + W'(u) + c u (zero for a traveling wave of speed c)."""
    r = energy_gradient_values(u.grid, u.values, model) + c * u.values
    return l2_norm_values(u.grid, r)


# -- orbit distance --------------------------------------------------------

class _OrbitProblem:
    """H1 distance between u(x - tau) and v, evaluated by Parseval."""

    def __init__(self, u, v):
        grid = self.grid = same_grid(u, v)
        n = grid.n
        self.u, self.v = u.values, v.values
        self.u_hat = np.fft.rfft(self.u)
        self.v_hat = np.fft.rfft(self.v)
        k = grid.k
        # rfft modes 1..n/2-1 stand for two conjugate modes each
        mult = np.full(n // 2 + 1, 2.0)
        mult[0] = mult[-1] = 1.0
        self.weight = mult * (1.0 + grid.k_odd ** 2) * grid.length / n**2
        self.k = k

    def distance(self, tau):
        shifted = self.u_hat * np.exp(-1j * self.k * tau)
        shifted[-1] = shifted[-1].real
        d = shifted - self.v_hat
        return math.sqrt(float(np.sum(self.weight * (d.real**2 + d.imag**2))))

    def coarse(self, candidates=4):
        """Grid shifts at the largest local maxima of the H1 cross-correlation."""
        grid = self.grid
        full_u, full_v = np.fft.fft(self.u), np.fft.fft(self.v)
        k = grid.wavenumbers.copy()
        k[grid.n // 2] = 0.0
        corr = np.fft.fft((1.0 + k**2) * full_u * np.conj(full_v)).real
        peaks = np.flatnonzero((corr >= np.roll(corr, 1)) & (corr >= np.roll(corr, -1)))
        if peaks.size == 0:
            peaks = np.array([int(np.argmax(corr))])
        best = peaks[np.argsort(corr[peaks])[::-1][:candidates]]
        return [int(j) * grid.dx for j in best]

    def newton(self, tau):
        """Stationary point of the H1 cross-correlation near tau."""
        a = self.weight * (self.u_hat * np.conj(self.v_hat))
        for _ in range(8):
            e = a * np.exp(-1j * self.k * tau)
            d1 = float(np.sum((-1j * self.k * e).real))
            d2 = float(np.sum((-(self.k**2) * e).real))
            if d2 >= 0:
                break
            step = -d1 / d2
            if abs(step) > self.grid.dx:
                break
            tau += step
            if abs(step) < 1e-15 * self.grid.length:
                break
        return tau


def _golden(f, a, b, tol):
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2


def _wrap(tau, length):
    return (tau + length / 2) % length - length / 2


def orbital_distance(u, v, tol=1e-10):
    """Distance from v to the translation orbit of u.

    Returns ``(distance, tau)`` with ``tau`` minimizing
    ``h1_distance(translate(u, tau), v)``, wrapped to [-L/2, L/2).
    The search scans all grid shifts by cross-correlation, then refines the
    strongest few peaks by golden section to ``tol * L`` and a Newton polish
    on the smooth correlation.
    """
    prob = _OrbitProblem(u, v)
    L, dx = prob.grid.length, prob.grid.dx
    best, best_d = 0.0, math.inf
    for tau0 in prob.coarse():
        tau = _golden(prob.distance, tau0 - dx, tau0 + dx, tol * L)
        polished = prob.newton(tau)
        if prob.distance(polished) <= prob.distance(tau):
            tau = polished
        d = prob.distance(tau)
        if d < best_d:
            best, best_d = tau, d
    tau = _wrap(best, L)
    return h1_distance(translate(u, tau), v), tau
