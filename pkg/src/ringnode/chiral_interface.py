"""Chiral evanescent field, dipole selection rules and coupling-rate estimates.

Polarizations are complex 2-vectors in the local (radial x, tangential z)
basis.  The circulating modes use the convention CW ~ x + i r z and
CCW ~ x - i r z, with ``r = kappa / k`` the confinement ratio; at ``r = 1``
this gives the selection-rule table sigma+ <-> CW, sigma- <-> CCW.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .constants import DEBYE, EPSILON_0, HBAR, TWO_PI


class Direction(enum.Enum):
    CW = "CW"
    CCW = "CCW"


@dataclass(frozen=True)
class ChiralField:
    direction: Direction
    confinement_ratio: float
    polarization: np.ndarray


@dataclass(frozen=True)
class DipoleMoment:
    """sigma+ (helicity +1) or sigma- (helicity -1) transition dipole."""

    helicity: int
    d0: float = 1.0

    def __post_init__(self):
        if self.helicity not in (1, -1):
            raise ValueError(f"helicity must be +1 or -1, got {self.helicity}")
        if not self.d0 > 0:
            raise ValueError("dipole magnitude must be positive")

    @property
    def unit_vector(self) -> np.ndarray:
        return np.array([1.0, 1j * self.helicity]) / math.sqrt(2.0)


SIGMA_PLUS = DipoleMoment(+1)
SIGMA_MINUS = DipoleMoment(-1)


@dataclass(frozen=True)
class CouplingGeometry:
    """Inputs of the vacuum-coupling estimate (SI units, dipole in Debye)."""

    dipole_debye: float
    omega_c: float
    eps_r: float
    V_mode: float
    x: float
    L_d: float

    def __post_init__(self):
        for name in ("dipole_debye", "omega_c", "eps_r", "V_mode", "L_d"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.x < 0:
            raise ValueError(f"emitter separation must be >= 0, got {self.x}")


@dataclass(frozen=True)
class FiberCoupler:
    """Geometric parameters of the side-coupled fiber (SI units).

    ``xi`` absorbs polarization and phase mismatch together with the order-unity
    coupled-mode prefactor.  The optimal overlap volume is taken as the ring
    mode volume ``2 pi R A_cnt`` and the fiber volume as ``L_int A_fiber``.
    """

    xi: float
    A_cnt: float
    A_fiber: float
    L_int: float
    R: float
    omega_c: float

    def __post_init__(self):
        if not 0 <= self.xi <= 1:
            raise ValueError(f"overlap factor xi must lie in [0, 1], got {self.xi}")
        for name in ("A_cnt", "A_fiber", "L_int", "R", "omega_c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def cnt_mode_volume(self) -> float:
        return TWO_PI * self.R * self.A_cnt

    @property
    def fiber_mode_volume(self) -> float:
        return self.L_int * self.A_fiber


def field_polarization(direction: Direction | str, r: float) -> ChiralField:
    direction = Direction(direction)
    if r < 0:
        raise ValueError(f"confinement ratio must be >= 0, got {r}")
    sign = 1.0 if direction is Direction.CW else -1.0
    pol = np.array([1.0, 1j * sign * r]) / math.sqrt(1.0 + r * r)
    return ChiralField(direction, float(r), pol)


def transition_overlap(dipole: DipoleMoment, field: ChiralField) -> float:
    """Normalized |d . E*|^2 between unit dipole and unit field vectors."""
    amp = np.dot(dipole.unit_vector, np.conj(field.polarization))
    return float(abs(amp) ** 2)


def directionality(r: float) -> float:
    """(|M+,CW|^2 - |M+,CCW|^2) / (|M+,CW|^2 + |M+,CCW|^2) = 2r / (1 + r^2)."""
    if r < 0:
        raise ValueError(f"confinement ratio must be >= 0, got {r}")
    return 2.0 * r / (1.0 + r * r)


def vacuum_coupling(geom: CouplingGeometry) -> float:
    """Single-photon vacuum Rabi coupling g in rad/s."""
    d = geom.dipole_debye * DEBYE
    e_vac = math.sqrt(HBAR * geom.omega_c / (2.0 * EPSILON_0 * geom.eps_r * geom.V_mode))
    return d / HBAR * e_vac * math.exp(-geom.x / geom.L_d)


def max_outcoupling(coupler: FiberCoupler) -> tuple[float, bool]:
    """Upper-bound fiber outcoupling rate kappa_R (rad/s).

    The value is not clamped; the flag reports whether it exceeds omega_c,
    past which the scaling law stops being meaningful.
    """
    kappa = (
        coupler.xi**2
        * coupler.omega_c
        * coupler.cnt_mode_volume
        / coupler.fiber_mode_volume
    )
    return kappa, kappa > coupler.omega_c
