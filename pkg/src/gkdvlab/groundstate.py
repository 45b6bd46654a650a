"""Ground states: energy minimizers at fixed charge.

The minimizer is a Sobolev-preconditioned projected gradient descent with
renormalization onto the charge sphere after every step and an Armijo
backtracking line search. The Lagrange multiplier of E'(u) = lam C'(u) gives
the traveling speed c = -lam for gKdV and the frequency omega = lam for NLS.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CollapseError, DomainError
from .functionals import (
    eigen_residual,
    energy,
    energy_values,
    l2_norm_values,
)
from .spectral import Field, translate

EPS = np.finfo(float).eps


class Mode(str, enum.Enum):
    GKDV = "gkdv"
    NLS = "nls"


@dataclass
class MinimizerOptions:
    tol: float = 1e-10
    max_iter: int = 100_000
    energy_floor: float = -1e6
    armijo: float = 1e-4
    sigma0: float = 1.0
    min_sigma: float = 2.0**-40
    record_energies: bool = False


@dataclass
class GroundState:
    profile: Field
    charge_target: float
    energy: float
    multiplier: float
    speed: float
    residual: float
    iterations: int
    converged: bool
    mode: Mode = Mode.GKDV
    shift_speed: float = 0.0
    energy_history: list = field(default_factory=list, repr=False)

    @property
    def physical_speed(self):
        """Speed in the frame of the unshifted equation (gKdV mode)."""
        return self.speed + self.shift_speed

    def manifest(self):
        return {
            "mode": self.mode.value,
            "charge": self.charge_target,
            "energy": self.energy,
            "multiplier": self.multiplier,
            "speed": self.speed,
            "shift_speed": self.shift_speed,
            "physical_speed": self.physical_speed if self.mode is Mode.GKDV else None,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
        }


class _Radial:
    """W(psi) = F(|psi|) restricted to real fields, as used by the NLS."""

    def __init__(self, model):
        self.model = model

    def w(self, s):
        return self.model.w(np.abs(s))

    def w_prime(self, s):
        return np.sign(s) * self.model.w_prime(np.abs(s))


def _descend(model, grid, c0, opts, resid_factor):
    """Minimize E on {charge = c0}; returns (u, iterations, converged, history)."""
    x, dx, L = grid.x, grid.dx, grid.length
    k2 = grid.k**2
    precond = 1.0 / (1.0 + k2)

    def retract(v):
        return v * math.sqrt(c0 / (0.5 * dx * float(np.dot(v, v))))

    u = retract(np.exp(-((x - L / 2) ** 2) / 4.0))
    e = energy_values(grid, u, model)
    history = [e] if opts.record_energies else []
    converged = False
    it = 0
    for it in range(opts.max_iter + 1):
        u_hat = np.fft.rfft(u)
        g = np.fft.irfft(k2 * u_hat, n=grid.n) + model.w_prime(u)
        lam = float(np.dot(g, u) / np.dot(u, u))
        # half the tolerance leaves room for the recentering roundoff
        if resid_factor * l2_norm_values(grid, g - lam * u) < 0.5 * opts.tol:
            converged = True
            break
        if it == opts.max_iter:
            break
        gp = np.fft.irfft(precond * np.fft.rfft(g), n=grid.n)
        up = np.fft.irfft(precond * u_hat, n=grid.n)
        d = gp - (np.dot(u, gp) / np.dot(u, up)) * up
        slope = dx * float(np.dot(g, d))
        slack = 64 * EPS * dx * float(np.sum(np.abs(model.w(u)))) + 64 * EPS * abs(e)
        sigma = opts.sigma0
        while sigma >= opts.min_sigma:
            trial = retract(u - sigma * d)
            e_trial = energy_values(grid, trial, model)
            if not math.isfinite(e_trial):
                raise CollapseError("energy became non-finite during descent", e_trial, it)
            if e_trial <= e - opts.armijo * sigma * slope + slack:
                break
            sigma /= 2
        else:
            # no admissible step: roundoff floor reached
            break
        u, e = trial, e_trial
        if opts.record_energies:
            history.append(e)
        if e < opts.energy_floor:
            raise CollapseError(
                f"supercritical collapse: energy {e:.3e} below floor {opts.energy_floor:.3e}",
                e,
                it,
            )
    return u, it, converged, history


def _peak_position(grid, u):
    """Sub-grid location of max |u| by Newton on the trigonometric interpolant."""
    j = int(np.argmax(np.abs(u)))
    u_hat = np.fft.rfft(u)
    mult = np.full(len(u_hat), 2.0)
    mult[0] = mult[-1] = 1.0
    a = mult * u_hat / grid.n
    k = grid.k
    x = grid.x[j]
    for _ in range(10):
        e = a * np.exp(1j * k * x)
        d1 = float(np.sum((1j * k * e).real))
        d2 = float(np.sum((-(k**2) * e).real))
        if d2 == 0:
            break
        step = -d1 / d2
        if abs(step) > grid.dx:
            break
        x += step
        if abs(step) < 1e-14 * grid.length:
            break
    return x


def _normalize(grid, u, model, c0):
    """Center the peak of |u| at L/2 and make u(L/2) > 0 when W is even."""
    shifted = translate(Field(grid, u), grid.length / 2 - _peak_position(grid, u)).values
    if model.is_even and shifted[grid.n // 2] < 0:
        shifted = -shifted
    return shifted * math.sqrt(c0 / (0.5 * grid.dx * float(np.dot(shifted, shifted))))


def minimize_energy_at_charge(model, grid, charge_target, opts=None):
    """Constrained minimizer of E on {C(u) = charge_target} (gKdV mode).

    Raises :class:`DomainError` for a non-positive charge and
    :class:`CollapseError` if the energy runs below ``opts.energy_floor``.
    """
    opts = opts or MinimizerOptions()
    if not (charge_target > 0) or not math.isfinite(charge_target):
        raise DomainError(f"charge target must be positive, got {charge_target}")
    u, its, converged, history = _descend(model, grid, charge_target, opts, 1.0)
    prof = grid.field(_normalize(grid, u, model, charge_target))
    g = -_second(grid, prof.values) + model.w_prime(prof.values)
    lam = float(np.dot(g, prof.values) / np.dot(prof.values, prof.values))
    res = eigen_residual(prof, model, -lam)
    return GroundState(
        profile=prof,
        charge_target=charge_target,
        energy=energy(prof, model),
        multiplier=lam,
        speed=-lam,
        residual=res,
        iterations=its,
        converged=converged and res <= opts.tol,
        mode=Mode.GKDV,
        shift_speed=model.shift_speed,
        energy_history=history,
    )


def _second(grid, u):
    return np.fft.irfft(-(grid.k**2) * np.fft.rfft(u), n=grid.n)


def nls_residual(u, model, omega):
    """L2 norm of -u_xx/2 + W'(u)/2 - omega u for a real profile."""
    w = _Radial(model)
    r = -0.5 * _second(u.grid, u.values) + 0.5 * w.w_prime(u.values) - omega * u.values
    return l2_norm_values(u.grid, r)


def nls_ground_state(model, grid, mass_target, opts=None):
    """Real positive NLS ground state with integral of u**2 equal to mass_target."""
    opts = opts or MinimizerOptions()
    if not (mass_target > 0) or not math.isfinite(mass_target):
        raise DomainError(f"mass target must be positive, got {mass_target}")
    radial = _Radial(model)
    c0 = mass_target / 2
    u, its, converged, history = _descend(radial, grid, c0, opts, 0.5)
    u = _normalize(grid, u, model, c0)
    if u[grid.n // 2] < 0:
        u = -u
    prof = grid.field(u)
    g = -_second(grid, u) + radial.w_prime(u)
    omega = float(np.dot(g, u) / (2 * np.dot(u, u)))
    res = nls_residual(prof, model, omega)
    return GroundState(
        profile=prof,
        charge_target=mass_target,
        energy=energy_values(grid, u, radial),
        multiplier=omega,
        speed=omega,
        residual=res,
        iterations=its,
        converged=converged and res <= opts.tol,
        mode=Mode.NLS,
        shift_speed=model.shift_speed,
        energy_history=history,
    )


def standing_wave_residual(gs, model, t=0.0):
    """L2 norm of i psi_t - (-psi_xx/2 + W'(psi)/2) for psi = u exp(-i omega t)."""
    u = gs.profile.values
    grid = gs.profile.grid
    omega = gs.speed
    psi = u * np.exp(-1j * omega * t)
    psi_t = -1j * omega * psi
    psi_xx = np.fft.ifft(-(grid.wavenumbers**2) * np.fft.fft(psi))
    r = np.abs(psi)
    phase = np.divide(psi, r, out=np.zeros_like(psi), where=r > 0)
    w_prime = model.w_prime(r) * phase
    res = 1j * psi_t - (-0.5 * psi_xx + 0.5 * w_prime)
    return math.sqrt(grid.dx * float(np.sum(np.abs(res) ** 2)))


# -- charge sweeps ---------------------------------------------------------

@dataclass
class CurveRow:
    charge: float
    speed: float = math.nan
    physical_speed: float = math.nan
    energy: float = math.nan
    residual: float = math.nan
    converged: bool = False
    error: str | None = None


def speed_charge_curve(model, grid, charges, opts=None, jobs=1):
    """One minimization per charge; rows returned in input order."""
    charges = [float(c) for c in charges]
    if not charges or any(c <= 0 for c in charges):
        raise DomainError("charges must be positive")
    if any(b <= a for a, b in zip(charges, charges[1:])):
        raise DomainError("charges must be strictly increasing")

    def one(c):
        try:
            gs = minimize_energy_at_charge(model, grid, c, opts)
        except (CollapseError, DomainError) as exc:
            return CurveRow(c, error=str(exc))
        return CurveRow(c, gs.speed, gs.physical_speed, gs.energy, gs.residual, gs.converged)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(one, charges))
    return [one(c) for c in charges]
