"""Nonlinearities W(s) for the generalized KdV equation.

A model is split as ``W(s) = e0 * s**2 + N(s)``: the quadratic part is kept
explicitly (it is linear in the PDE and handled exactly by the integrator),
``N`` carries the genuinely nonlinear family.

Families
--------
``mkdv(k)``       W(s) = -s**(k+2) / ((k+2)(k+1))
``abs_power(k)``  W(s) = -|s|**(k+2)
``polynomial(c)`` W(s) = c[0] s**2 + c[1] s**3 + ...
"""

from __future__ import annotations

import dataclasses
import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DomainError

ASSUMPTION_NAMES = ("Wa", "Wb", "W1", "Wp", "W0", "base")


class Family(str, enum.Enum):
    MKDV = "mkdv"
    ABS_POWER = "abs_power"
    POLYNOMIAL = "polynomial"


def _check_finite(s):
    arr = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("W evaluated at a non-finite argument")
    return arr


def _ipow(s, p):
    # repeated products: libm pow has slow paths for tiny arguments
    out = s.copy() if p else np.ones_like(s)
    for _ in range(p - 1):
        out *= s
    return out


@dataclass(frozen=True)
class NonlinearityModel:
    """Immutable description of W.

    ``coeffs`` holds the coefficients of s**3, s**4, ... for the polynomial
    family and is empty otherwise. ``shift_speed`` is nonzero only after
    :func:`gauge_shift`; a solution v of the shifted equation maps back to
    the original one through u(t, x) = v(t, x - shift_speed * t).
    """

    family: Family
    k: float | None = None
    coeffs: tuple = ()
    e0: float = 0.0
    shift_speed: float = 0.0

    def __post_init__(self):
        if self.family in (Family.MKDV, Family.ABS_POWER):
            if self.k is None or not (self.k > 0) or not math.isfinite(self.k):
                raise DomainError(f"{self.family.value} needs a positive exponent k, got {self.k}")
        if not math.isfinite(self.e0):
            raise DomainError("e0 must be finite")
        if any(not math.isfinite(c) for c in self.coeffs):
            raise DomainError("polynomial coefficients must be finite")

    # -- nonlinear part N ------------------------------------------------

    @property
    def _integer_k(self):
        return self.k is not None and float(self.k).is_integer()

    def _poly(self, deriv=0):
        c = np.concatenate([np.zeros(3), np.asarray(self.coeffs, dtype=float)])
        return P.polyder(c, deriv) if deriv else c

    def n(self, s):
        s = np.asarray(s, dtype=float)
        k = self.k
        if self.family is Family.MKDV:
            norm = (k + 2) * (k + 1)
            if self._integer_k:
                return -_ipow(s, int(k + 2)) / norm
            return -np.abs(s) ** (k + 1) * s / norm
        if self.family is Family.ABS_POWER:
            return -np.abs(s) ** (k + 2)
        return P.polyval(s, self._poly())

    def n_prime(self, s):
        s = np.asarray(s, dtype=float)
        k = self.k
        if self.family is Family.MKDV:
            if self._integer_k:
                return -_ipow(s, int(k + 1)) / (k + 1)
            return -np.abs(s) ** (k + 1) / (k + 1)
        if self.family is Family.ABS_POWER:
            return -(k + 2) * np.abs(s) ** k * s
        return P.polyval(s, self._poly(1))

    def n_second(self, s):
        s = np.asarray(s, dtype=float)
        k = self.k
        if self.family is Family.MKDV:
            if self._integer_k:
                return -_ipow(s, int(k))
            return -np.sign(s) * np.abs(s) ** k
        if self.family is Family.ABS_POWER:
            return -(k + 2) * (k + 1) * np.abs(s) ** k
        return P.polyval(s, self._poly(2))

    # -- full W ----------------------------------------------------------

    def w(self, s):
        s = np.asarray(s, dtype=float)
        return self.e0 * s * s + self.n(s)

    def w_prime(self, s):
        s = np.asarray(s, dtype=float)
        return 2.0 * self.e0 * s + self.n_prime(s)

    def w_second(self, s):
        s = np.asarray(s, dtype=float)
        return 2.0 * self.e0 + self.n_second(s)

    @property
    def is_even(self):
        """True when W(-s) = W(s), so -u is a ground state whenever u is."""
        if self.family is Family.ABS_POWER:
            return True
        if self.family is Family.MKDV:
            return self._integer_k and int(self.k) % 2 == 0
        # coeffs[0] multiplies s**3
        return all(c == 0 for c in self.coeffs[0::2])

    @property
    def is_shifted(self):
        return self.shift_speed != 0.0

    def unshifted(self):
        """The model before any gauge shift."""
        if not self.is_shifted:
            return self
        return dataclasses.replace(self, e0=self.e0 - self.shift_speed / 2.0, shift_speed=0.0)

    def describe(self):
        d = {"family": self.family.value, "e0": self.e0, "shift_speed": self.shift_speed}
        if self.k is not None:
            d["k"] = self.k
        if self.family is Family.POLYNOMIAL:
            d["coeffs"] = [self.e0, *self.coeffs]
        return d


# -- factories -----------------------------------------------------------

def mkdv(k, e0=0.0):
    return NonlinearityModel(Family.MKDV, k=float(k), e0=float(e0))


def abs_power(k, e0=0.0):
    return NonlinearityModel(Family.ABS_POWER, k=float(k), e0=float(e0))


def polynomial(coeffs):
    """W(s) = coeffs[0] s**2 + coeffs[1] s**3 + ..."""
    coeffs = [float(c) for c in coeffs]
    if not coeffs:
        raise DomainError("polynomial model needs at least the s**2 coefficient")
    return NonlinearityModel(Family.POLYNOMIAL, coeffs=tuple(coeffs[1:]), e0=coeffs[0])


def kdv():
    """W(s) = -s**3, i.e. u_t + u_xxx + 6 u u_x = 0."""
    return polynomial([0.0, -1.0])


def from_config(cfg):
    """Build a model from ``{"family", "k", "coeffs", "auto_gauge_shift"}``."""
    allowed = {"family", "k", "coeffs", "auto_gauge_shift"}
    unknown = set(cfg) - allowed
    if unknown:
        raise DomainError(f"unknown model keys: {sorted(unknown)}")
    family = cfg.get("family")
    if family == "mkdv":
        model = mkdv(_require(cfg, "k"))
    elif family == "abs_power":
        model = abs_power(_require(cfg, "k"))
    elif family == "polynomial":
        model = polynomial(_require(cfg, "coeffs"))
    else:
        raise DomainError(f"unknown model family {family!r}")
    if cfg.get("auto_gauge_shift", True):
        model, _ = gauge_shift(model)
    return model


def _require(cfg, key):
    if key not in cfg:
        raise DomainError(f"model config needs {key!r}")
    return cfg[key]


# -- public operations ---------------------------------------------------

def eval_w(model, s):
    return model.w(_check_finite(s))


def eval_w_prime(model, s):
    return model.w_prime(_check_finite(s))


def eval_w_second(model, s):
    return model.w_second(_check_finite(s))


def gauge_shift(model):
    """Make W''(0) = 2 by adding a quadratic term.

    Returns ``(shifted_model, speed)``. Models with W''(0) > 0 are returned
    unchanged with speed 0. Otherwise ``a = 1 - e0`` is added to the s**2
    coefficient and the frame speed is ``2a``.
    """
    if model.e0 > 0:
        return model, 0.0
    a = 1.0 - model.e0
    speed = 2.0 * a
    shifted = dataclasses.replace(model, e0=1.0, shift_speed=model.shift_speed + speed)
    return shifted, speed


# -- assumption checker --------------------------------------------------

@dataclass
class AssumptionResult:
    name: str
    passed: bool
    witness: dict


@dataclass
class AssumptionReport:
    results: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def __getitem__(self, name):
        return self.results[name]

    @property
    def all_passed(self):
        return all(r.passed for r in self.results.values())

    @property
    def well_posed(self):
        """Global well-posedness is only guaranteed when `base` holds."""
        return self.results["base"].passed

    def rows(self):
        return [(r.name, r.passed, r.witness) for r in self.results.values()]


def check_assumptions(model, sample_range=(-100.0, 100.0), samples=10_000):
    """Check the growth/sign hypotheses on W used by the existence theory."""
    lo, hi = map(float, sample_range)
    if not (lo < hi) or not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError(f"empty sample range {sample_range}")
    if samples < 100:
        raise DomainError("check_assumptions needs at least 100 samples")

    report = AssumptionReport()
    add = lambda name, ok, **w: report.results.__setitem__(name, AssumptionResult(name, bool(ok), w))

    w0, wp0 = float(model.w(0.0)), float(model.w_prime(0.0))
    add("Wa", w0 == 0.0 and wp0 == 0.0, s=0.0, W=w0, W_prime=wp0)
    add("Wb", model.e0 > 0, s=0.0, W_second=2.0 * model.e0)

    # W1: one s0 > 0 with N(s0) < 0
    if hi > 0:
        s = np.geomspace(hi * 1e-8, hi, 10_000)
        ns = model.n(s)
        neg = np.flatnonzero(ns < 0)
        if neg.size:
            i = neg[0]
            add("W1", True, s=float(s[i]), N=float(ns[i]))
        else:
            i = int(np.argmin(ns))
            add("W1", False, s=float(s[i]), N=float(ns[i]))
    else:
        add("W1", False, s=hi, N=float(model.n(hi)))

    amax = max(abs(lo), abs(hi))
    mags = np.geomspace(amax * 1e-6, amax, samples)
    _check_wp(model, mags, add)
    _check_w0(model, mags, add, report)
    _check_base(model, lo, hi, add)

    for msg in report.warnings:
        warnings.warn(msg, stacklevel=2)
    return report


def _fit_exponent(s, y):
    keep = (y > 0) & np.isfinite(y)
    if keep.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(s[keep]), np.log(y[keep]), 1)
    return float(slope)


def _check_wp(model, mags, add):
    both = np.concatenate([-mags, mags])
    absn = np.abs(model.n_prime(both))
    absm = np.abs(both)
    if model.family is Family.MKDV:
        r = q = model.k + 2
        c1, c2 = 1.0 / (model.k + 1), 0.0
    elif model.family is Family.ABS_POWER:
        r = q = model.k + 2
        c1, c2 = model.k + 2, 0.0
    else:
        if not np.any(model.coeffs):
            add("Wp", True, r=3.0, q=3.0, c1=0.0, c2=0.0, s=float(mags[-1]))
            return
        small = np.geomspace(1e-4, 1e-2, 50)
        large = mags[-50:]
        slopes_r = [_fit_exponent(small, np.abs(model.n_prime(sg * small))) for sg in (-1, 1)]
        slopes_q = [_fit_exponent(large, np.abs(model.n_prime(sg * large))) for sg in (-1, 1)]
        slopes_r = [x for x in slopes_r if x is not None]
        slopes_q = [x for x in slopes_q if x is not None]
        r = min(slopes_r) + 1 if slopes_r else 3.0
        q = max(slopes_q) + 1 if slopes_q else 3.0
        bound = absm ** (r - 1) + absm ** (q - 1)
        c1 = c2 = float(np.max(absn / bound))
    bound = c1 * absm ** (r - 1) + c2 * absm ** (q - 1)
    slack = 1e-9 * np.maximum(bound, 1e-300)
    viol = absn - bound - slack
    i = int(np.argmax(viol))
    ok = r > 2 and q > 2 and viol[i] <= 0 and math.isfinite(c1) and math.isfinite(c2)
    add("Wp", ok, r=float(r), q=float(q), c1=float(c1), c2=float(c2), s=float(both[i]))


def _check_w0(model, mags, add, report):
    large = mags[-max(50, len(mags) // 10):]
    both = np.concatenate([-large, large])
    ns = model.n(both)
    if model.family is Family.MKDV:
        p, c = model.k + 2, 1.0 / ((model.k + 2) * (model.k + 1))
    elif model.family is Family.ABS_POWER:
        p, c = model.k + 2, 1.0
    else:
        negs = [_fit_exponent(large, -model.n(sg * large)) for sg in (-1, 1)
                if np.all(model.n(sg * large[-10:]) < 0)]
        if negs:
            p = max(negs)
            c = float(np.max(-ns / np.abs(both) ** p))
        else:
            p, c = 3.0, 0.0
    lower = -c * np.abs(both) ** p
    slack = 1e-9 * np.abs(lower) + 1e-300
    viol = lower - ns - slack
    i = int(np.argmax(viol))
    ok = p > 2 and c >= 0 and viol[i] <= 0
    add("W0", ok, p=float(p), c=float(c), s=float(both[i]))
    if p >= 6:
        report.warnings.append(f"(W0) growth exponent p={p:g} is not below 6")


def _check_base(model, lo, hi, add):
    def ratio(s):
        return float(-model.w_second(s) / s ** 4)

    if model.family in (Family.MKDV, Family.ABS_POWER):
        s = hi if abs(hi) >= abs(lo) else lo
        add("base", model.k < 4, s=s, ratio=ratio(s), k=model.k)
        return
    worst = None
    ok = True
    for end in (lo, hi):
        if end == 0:
            continue
        r1, r2 = ratio(end / 2), ratio(end)
        side_ok = r2 <= 0 or r2 <= 0.75 * r1
        if worst is None or not side_ok:
            worst = (end, r2)
        ok &= side_ok
    add("base", ok, s=worst[0], ratio=worst[1])
