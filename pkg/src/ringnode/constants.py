"""Physical constants (CODATA 2018) and unit helpers.

Rates are carried internally as angular frequencies in rad/s. Anything a user
types or reads as "GHz" is the ordinary frequency nu = omega / 2pi.
"""

import math

HBAR = 1.054571817e-34  # J s
H_PLANCK = 6.62607015e-34  # J s
E_CHARGE = 1.602176634e-19  # C
C_LIGHT = 299792458.0  # m/s
EPSILON_0 = 8.8541878128e-12  # F/m
DEBYE = 3.33564e-30  # C m

FLUX_QUANTUM = H_PLANCK / E_CHARGE  # h/e, Wb

TWO_PI = 2.0 * math.pi


def ghz_to_rad_s(nu_ghz):
    """Ordinary frequency in GHz -> angular frequency in rad/s."""
    return TWO_PI * 1e9 * nu_ghz


def rad_s_to_ghz(omega):
    return omega / (TWO_PI * 1e9)
