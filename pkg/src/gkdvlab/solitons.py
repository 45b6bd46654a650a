"""Closed-form solitary waves used as references.

For W(s) = -s**(k+2)/((k+2)(k+1)) the profile of speed c solving
u'' = c u - u**(k+1)/(k+1) is

    u(x) = A sech(B x)**(2/k),  A**k = (k+1)(k+2) c / 2,  B = k sqrt(c) / 2.
"""

import math

import numpy as np


def mkdv_amplitude(k, c):
    return ((k + 1) * (k + 2) * c / 2.0) ** (1.0 / k)


def _sech(y):
    # 2 e^-|y| / (1 + e^-2|y|) stays finite where cosh overflows
    e = np.exp(-np.abs(y))
    return 2.0 * e / (1.0 + e * e)


def mkdv_profile(x, k, c, center=0.0):
    k = float(k)
    a = mkdv_amplitude(k, c)
    b = k * math.sqrt(c) / 2.0
    return a * _sech(b * (np.asarray(x) - center)) ** (2.0 / k)


def mkdv_soliton(grid, k, c, center=None):
    """The speed-c soliton sampled on ``grid``, centered at L/2 by default."""
    center = grid.length / 2 if center is None else center
    return grid.field(mkdv_profile(grid.x, k, c, center))


def _sech_power_integral(p):
    # integral over R of sech(y)**p = B(p/2, 1/2)
    return math.gamma(p / 2) * math.gamma(0.5) / math.gamma((p + 1) / 2)


def mkdv_charge(k, c):
    """C = (1/2) integral of u**2 for the speed-c soliton on the whole line."""
    a = mkdv_amplitude(k, c)
    b = k * math.sqrt(c) / 2.0
    return 0.5 * a * a / b * _sech_power_integral(4.0 / k)


def mkdv_speed_from_charge(k, charge):
    """Invert C(c) = C(1) c**(2/k - 1/2)."""
    expo = 2.0 / k - 0.5
    return (charge / mkdv_charge(k, 1.0)) ** (1.0 / expo)


def kdv_profile(x, c, center=0.0):
    """Soliton of u_t + u_xxx + 6 u u_x = 0: (c/2) sech^2(sqrt(c) (x - x0) / 2)."""
    return 0.5 * c * _sech(math.sqrt(c) * (np.asarray(x) - center) / 2) ** 2
