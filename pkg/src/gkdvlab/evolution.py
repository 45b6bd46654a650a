"""Time integration of u_t + u_xxx - (W'(u))_x = 0 on a periodic grid.

The split is u_t = L u + N(u) with the linear symbol
L(k) = i (k**3 + 2 e0 k) (dispersion plus the quadratic part of W, both
exact) and N(u) = d/dx N'(u) evaluated pseudospectrally. Time stepping is
the fourth-order exponential Runge-Kutta scheme of Cox-Matthews in the
Kassam-Trefethen form.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, DomainError, InsufficientSamplesError
from .functionals import charge, energy, orbital_distance
from .model import check_assumptions
from .spectral import Field, dealias_mask


def _phi_coefficients(z, h, points=16, radius=1.0):
    """ETDRK4 weights for z = h L.

    Modes with |z| < 1 are averaged over a circle of ``points`` nodes around
    z to avoid the cancellation in the removable singularity at 0.
    """

    def formulas(w):
        ew = np.exp(w)
        q = (np.exp(w / 2) - 1) / w
        f1 = (-4 - w + ew * (4 - 3 * w + w * w)) / w**3
        f2 = (2 + w + ew * (w - 2)) / w**3
        f3 = (-4 - 3 * w - w * w + ew * (4 - w)) / w**3
        return q, f1, f2, f3

    small = np.abs(z) < 1.0
    out = [np.empty_like(z, dtype=complex) for _ in range(4)]
    big = ~small
    if big.any():
        for o, val in zip(out, formulas(z[big])):
            o[big] = val
    if small.any():
        roots = radius * np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
        w = z[small][:, None] + roots[None, :]
        for o, val in zip(out, formulas(w)):
            o[small] = val.mean(axis=1)
    return [h * o for o in out]


class ETDRK4:
    """Fixed-step exponential integrator acting on real-FFT coefficients."""

    def __init__(self, model, grid, dt, dealias=True, reverse=False):
        self.model, self.grid = model, grid
        h = -dt if reverse else dt
        k = grid.k_odd
        lin = 1j * (k**3 + 2.0 * model.e0 * k)
        z = h * lin
        self.exp_full = np.exp(z)
        self.exp_half = np.exp(z / 2)
        self.q, self.f1, self.f2, self.f3 = _phi_coefficients(z, h)
        mask = dealias_mask(grid) if dealias else np.ones(len(k), dtype=bool)
        self.nl_symbol = 1j * k * mask
        self._linear_only = model.family.value == "polynomial" and not any(model.coeffs)

    def nonlinear(self, v_hat):
        if self._linear_only:
            return np.zeros_like(v_hat)
        u = np.fft.irfft(v_hat, n=self.grid.n)
        return self.nl_symbol * np.fft.rfft(self.model.n_prime(u))

    def step(self, v):
        e2, q = self.exp_half, self.q
        nv = self.nonlinear(v)
        a = e2 * v + q * nv
        na = self.nonlinear(a)
        b = e2 * v + q * na
        nb = self.nonlinear(b)
        c = e2 * a + q * (2 * nb - nv)
        nc = self.nonlinear(c)
        return self.exp_full * v + self.f1 * nv + 2 * self.f2 * (na + nb) + self.f3 * nc


@dataclass
class EvolutionTrace:
    times: list = field(default_factory=list)
    energy_series: list = field(default_factory=list)
    charge_series: list = field(default_factory=list)
    orbital_distances: list | None = None
    best_taus: list | None = None
    snapshots: list = field(default_factory=list)
    final: Field | None = None
    well_posed: bool = True

    @staticmethod
    def _rel(series):
        if not series:
            return 0.0
        ref = series[0]
        scale = abs(ref) if ref != 0 else 1.0
        return max(abs(s - ref) for s in series) / scale

    @property
    def energy_drift(self):
        return self._rel(self.energy_series)

    @property
    def charge_drift(self):
        return self._rel(self.charge_series)

    @property
    def drift(self):
        return max(self.energy_drift, self.charge_drift)

    def rows(self):
        for i, t in enumerate(self.times):
            d = self.orbital_distances[i] if self.orbital_distances is not None else ""
            tau = self.best_taus[i] if self.best_taus is not None else ""
            yield [t, self.energy_series[i], self.charge_series[i], d, tau]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "E", "C", "orbital_distance", "best_tau"])
            for row in self.rows():
                w.writerow([repr(float(v)) if v != "" else "" for v in row])


def evolve(
    u0,
    model,
    dt,
    t_end,
    sample_stride=0.1,
    snapshot_stride=None,
    reference=None,
    dealias=True,
    reverse=False,
    blowup_threshold=1e8,
):
    """Integrate the gKdV equation from u0 up to t_end with step dt.

    Energy and charge are recorded every ``sample_stride`` time units; with a
    ``reference`` field the orbital distance to it and the best translation
    are recorded too. Raises :class:`BlowUpError` (carrying the partial
    trace) once the field stops being finite or exceeds ``blowup_threshold``.
    """
    if not (dt > 0):
        raise DomainError(f"time step must be positive, got {dt}")
    if t_end < 0:
        raise DomainError("t_end must be non-negative")
    grid = u0.grid
    n_steps = int(round(t_end / dt))
    every = max(1, int(round(sample_stride / dt))) if sample_stride else 1
    snap_every = max(1, int(round(snapshot_stride / dt))) if snapshot_stride else None

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        well_posed = check_assumptions(model).well_posed
    trace = EvolutionTrace(well_posed=well_posed)
    if reference is not None:
        trace.orbital_distances, trace.best_taus = [], []
    sign = -1.0 if reverse else 1.0

    def record(t, u):
        trace.times.append(t)
        trace.energy_series.append(energy(u, model))
        trace.charge_series.append(charge(u))
        if reference is not None:
            d, tau = orbital_distance(u, reference)
            trace.orbital_distances.append(d)
            trace.best_taus.append(tau)

    stepper = ETDRK4(model, grid, dt, dealias=dealias, reverse=reverse)
    v = np.fft.rfft(u0.values)
    record(0.0, u0)
    if snap_every:
        trace.snapshots.append((0.0, u0))
    u = u0
    for i in range(1, n_steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            v = stepper.step(v)
        t = sign * i * dt
        if not np.all(np.isfinite(v)):
            trace.final = u
            raise BlowUpError(f"blow-up detected at t={t:.6g}: non-finite field", t, trace)
        sample = i % every == 0 or i == n_steps
        snap = snap_every and i % snap_every == 0
        if sample or snap:
            values = np.fft.irfft(v, n=grid.n)
            peak = float(np.max(np.abs(values)))
            if peak > blowup_threshold:
                trace.final = u
                raise BlowUpError(f"blow-up detected at t={t:.6g}: max|u|={peak:.3e}", t, trace)
            u = Field(grid, values)
            if sample:
                record(t, u)
            if snap:
                trace.snapshots.append((t, u))
    trace.final = u if n_steps else u0
    return trace


# -- traveling-wave check -------------------------------------------------

@dataclass
class TravelReport:
    times: list
    distances: list
    taus: list
    max_orbital_distance: float
    measured_speed: float
    predicted_speed: float

    @property
    def relative_error(self):
        return abs(self.measured_speed - self.predicted_speed) / abs(self.predicted_speed)


def unwrap_taus(taus, length):
    """Remove the L-periodic jumps from best-translation samples."""
    out = [taus[0]]
    for tau in taus[1:]:
        out.append(tau + length * round((out[-1] - tau) / length))
    return out


def fit_speed(times, taus, length):
    """Speed c from u(t) = u0(x - c t): best_tau(t) = -c t, least squares."""
    if len(times) < 2:
        raise InsufficientSamplesError("speed fit needs at least two time samples")
    slope, _ = np.polyfit(np.asarray(times), np.asarray(unwrap_taus(taus, length)), 1)
    return -float(slope)


def predicted_speed(gs, model):
    """Traveling speed of a ground state in the frame of ``model``."""
    if model.shift_speed == gs.shift_speed:
        return gs.speed
    return gs.physical_speed - model.shift_speed


def travel_test(gs, model, t_end, dt=1e-3, sample_stride=0.1, dealias=True):
    """Evolve a ground state and compare its measured speed with -multiplier."""
    if not gs.converged:
        raise DomainError("travel_test needs a converged ground state")
    trace = evolve(gs.profile, model, dt, t_end, sample_stride=sample_stride,
                   reference=gs.profile, dealias=dealias)
    speed = fit_speed(trace.times, trace.best_taus, gs.profile.grid.length)
    return TravelReport(
        times=trace.times,
        distances=trace.orbital_distances,
        taus=trace.best_taus,
        max_orbital_distance=max(trace.orbital_distances),
        measured_speed=speed,
        predicted_speed=predicted_speed(gs, model),
    )
