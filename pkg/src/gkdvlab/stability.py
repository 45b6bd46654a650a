"""Orbital-stability experiments around computed ground states."""

from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BlowUpError, DomainError
from .evolution import evolve
from .functionals import h1_norm, orbital_distance
from .groundstate import minimize_energy_at_charge


class Kind(str, enum.Enum):
    SCALE = "scale"
    BUMP = "bump"
    NOISE = "noise"


@dataclass(frozen=True)
class PerturbationSpec:
    """How to perturb a profile.

    SCALE: u -> (1 + eps) u.
    BUMP:  u -> u + eps * exp(-(x - x_b)**2 / width**2), x_b = L/2 + offset
           measured periodically.
    NOISE: u -> u + eps * r, r random with modes |k| <= k_max/4 and unit H1
           norm, drawn from ``seed``.
    """

    kind: Kind
    epsilon: float
    offset: float = 10.0
    width: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not (self.epsilon >= 0):
            raise DomainError(f"epsilon must be non-negative, got {self.epsilon}")

    def label(self):
        return f"{self.kind.value}:{self.epsilon:g}"


def bump(grid, offset=10.0, width=1.0):
    center = grid.length / 2 + offset
    d = (grid.x - center + grid.length / 2) % grid.length - grid.length / 2
    return grid.field(np.exp(-(d**2) / width**2))


def band_limited_noise(grid, seed, k_cut=None):
    """Random field with unit H1 norm and modes 1 <= |k| <= k_cut."""
    k_cut = grid.k_max / 4 if k_cut is None else k_cut
    rng = np.random.default_rng(seed)
    m = grid.n // 2 + 1
    coeffs = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    coeffs[0] = 0.0
    coeffs[grid.k > k_cut] = 0.0
    r = grid.field(np.fft.irfft(coeffs, n=grid.n))
    return r * (1.0 / h1_norm(r))


def perturb(u, spec):
    eps = spec.epsilon
    if eps == 0:
        return u
    if spec.kind is Kind.SCALE:
        return u * (1.0 + eps)
    if spec.kind is Kind.BUMP:
        return u + eps * bump(u.grid, spec.offset, spec.width)
    return u + eps * band_limited_noise(u.grid, spec.seed)


@dataclass
class StabilityRow:
    spec: PerturbationSpec
    initial_distance: float = math.nan
    max_distance: float = math.nan
    stable: bool = False
    error: str | None = None
    times: list = field(default_factory=list, repr=False)
    distances: list = field(default_factory=list, repr=False)


@dataclass
class StabilityReport:
    rows: list
    ratio: float
    abs_tol: float
    well_posed: bool = True

    @property
    def epsilons(self):
        return [r.spec.epsilon for r in self.rows]

    @property
    def initial_distances(self):
        return [r.initial_distance for r in self.rows]

    @property
    def max_orbital_distances(self):
        return [r.max_distance for r in self.rows]

    @property
    def all_stable(self):
        return all(r.stable for r in self.rows)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kind", "epsilon", "initial_distance", "max_orbital_distance", "ratio", "stable", "error"])
            for r in self.rows:
                ratio = r.max_distance / r.initial_distance if r.initial_distance > 0 else math.nan
                w.writerow([r.spec.kind.value, repr(r.spec.epsilon), repr(r.initial_distance),
                            repr(r.max_distance), repr(ratio), int(r.stable), r.error or ""])

    def summary(self):
        return {
            "ratio_threshold": self.ratio,
            "abs_tol": self.abs_tol,
            "well_posed": self.well_posed,
            "all_stable": self.all_stable,
            "rows": [
                {"perturbation": r.spec.label(), "initial_distance": r.initial_distance,
                 "max_orbital_distance": r.max_distance, "stable": r.stable, "error": r.error}
                for r in self.rows
            ],
        }


def stability_experiment(gs, model, specs, t_end=20.0, dt=1e-3, sample_stride=0.1,
                         ratio=10.0, abs_tol=1e-6, jobs=1):
    """Perturb, evolve and track the distance to the ground-state orbit.

    A row is stable when the largest orbital distance over [0, t_end] stays
    below ``ratio`` times the initial one or below ``abs_tol``.
    """
    if not gs.converged:
        raise DomainError("stability_experiment needs a converged ground state")
    ref = gs.profile

    def one(spec):
        row = StabilityRow(spec)
        start = perturb(ref, spec)
        row.initial_distance = orbital_distance(start, ref)[0]
        try:
            trace = evolve(start, model, dt, t_end, sample_stride=sample_stride, reference=ref)
        except BlowUpError as exc:
            row.error = str(exc)
            return row, True
        row.times, row.distances = trace.times, trace.orbital_distances
        row.max_distance = max(trace.orbital_distances)
        # abs_tol covers unperturbed rows whose initial distance is roundoff
        row.stable = row.max_distance <= max(ratio * row.initial_distance, abs_tol)
        return row, trace.well_posed

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(one, specs))
    else:
        results = [one(s) for s in specs]
    return StabilityReport([r for r, _ in results], ratio, abs_tol,
                           well_posed=all(wp for _, wp in results))


# -- hylomorphy diagnostics ------------------------------------------------

@dataclass
class SubadditivityReport:
    c1: float
    c2: float
    e1: float
    e2: float
    e12: float
    margin: float

    @property
    def gap(self):
        return self.e1 + self.e2 - self.e12

    @property
    def strict(self):
        return self.e12 < self.e1 + self.e2 - self.margin


def subadditivity_check(model, grid, c1, c2, opts=None, margin=0.0):
    """Compare e(c1 + c2) with e(c1) + e(c2) for the minimal energies."""
    e1 = minimize_energy_at_charge(model, grid, c1, opts).energy
    e2 = minimize_energy_at_charge(model, grid, c2, opts).energy
    e12 = minimize_energy_at_charge(model, grid, c1 + c2, opts).energy
    return SubadditivityReport(c1, c2, e1, e2, e12, margin)


def hylomorphy_ratio(gs):
    """e0 / c0 for a converged ground state."""
    if not gs.converged or not (gs.charge_target > 0):
        raise DomainError("hylomorphy_ratio needs a converged ground state with positive charge")
    return gs.energy / gs.charge_target
