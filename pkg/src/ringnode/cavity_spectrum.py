"""Luttinger-liquid ring cavity: zero modes, oscillator modes and flux tuning.

The charge sector of a metallic nanotube ring is a bosonized liquid with
velocity ``v_c = v_F / K_c``.  Periodic boundary conditions give oscillator
modes ``omega_m = v_c |m| / R`` and a topological zero-mode sector labelled by
integers ``(N_c, J_c)``.  A perpendicular flux enters only through the
combination ``J_c + 4 Phi / Phi_0`` (fourfold spin-valley degeneracy).

The oscillator zero-point sum is dropped from all reported energies; only
energy differences enter the resonance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .constants import C_LIGHT, FLUX_QUANTUM, HBAR, TWO_PI


@dataclass(frozen=True)
class RingParameters:
    """Geometry and Luttinger parameters of the ring (SI units)."""

    R: float
    K_c: float
    v_F: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"ring radius must be positive, got R={self.R}")
        if not self.v_F > 0:
            raise ValueError(f"Fermi velocity must be positive, got v_F={self.v_F}")
        if not 0 < self.K_c <= 1:
            raise ValueError(
                f"invalid Luttinger parameter K_c={self.K_c}; need 0 < K_c <= 1"
            )

    @property
    def L(self) -> float:
        """Circumference 2 pi R."""
        return TWO_PI * self.R

    @property
    def v_c(self) -> float:
        return charge_velocity(self)


@dataclass(frozen=True)
class ChargeState:
    N_c: int = 0
    J_c: int = 0

    def __post_init__(self):
        for name in ("N_c", "J_c"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))


@dataclass(frozen=True)
class FluxConfig:
    """Magnetic flux through the ring.

    Give exactly one of ``flux`` (Wb) or ``field`` (T).  With a field the flux
    is derived as ``pi R^2 B`` for whichever ring it is applied to.
    """

    flux: Optional[float] = None
    field: Optional[float] = None
    flux_quantum: float = FLUX_QUANTUM

    def __post_init__(self):
        if (self.flux is None) == (self.field is None):
            raise ValueError("FluxConfig needs exactly one of flux or field")

    @classmethod
    def from_flux_quanta(cls, n_phi0: float) -> "FluxConfig":
        return cls(flux=n_phi0 * FLUX_QUANTUM)

    def flux_through(self, ring: RingParameters) -> float:
        if self.flux is not None:
            return self.flux
        return math.pi * ring.R**2 * self.field

    def reduced(self, ring: RingParameters) -> float:
        """Phi / Phi_0."""
        return self.flux_through(ring) / self.flux_quantum


ZERO_FLUX = FluxConfig(flux=0.0)


@dataclass(frozen=True)
class SpectrumPoint:
    m: int
    branch: int
    flux_wb: float
    flux_over_phi0: float
    omega_c: float
    zero_mode_energy: float

    @property
    def f_c_ghz(self) -> float:
        return self.omega_c / TWO_PI / 1e9


def charge_velocity(ring: RingParameters) -> float:
    """Renormalized charge-mode velocity v_F / K_c (m/s)."""
    if not 0 < ring.K_c <= 1:
        raise ValueError(f"invalid Luttinger parameter K_c={ring.K_c}")
    return ring.v_F / ring.K_c


def _zero_mode_prefactor(ring: RingParameters) -> float:
    return math.pi * HBAR * charge_velocity(ring) / (2.0 * ring.L)


def zero_mode_energy(
    ring: RingParameters, charge: ChargeState, flux: FluxConfig = ZERO_FLUX
) -> float:
    """Topological zero-mode energy in joules, including the flux shift."""
    winding = charge.J_c + 4.0 * flux.reduced(ring)
    return _zero_mode_prefactor(ring) * (
        charge.N_c**2 / ring.K_c + ring.K_c * winding**2
    )


def mode_frequency(ring: RingParameters, m: int) -> float:
    """Angular frequency of oscillator mode ``m`` (rad/s)."""
    if m == 0:
        raise ValueError(
            "zero-mode index is handled by zero_mode_energy, not the oscillator branch"
        )
    return charge_velocity(ring) / ring.R * abs(m)


def mode_spacing(ring: RingParameters) -> float:
    """Fundamental mode frequency omega_1 / 2pi = v_c / L in Hz."""
    return charge_velocity(ring) / ring.L


def telecom_mode_index(spacing_hz: float, target_hz: float = 193e12) -> int:
    """Nearest azimuthal index bringing ``|m| * spacing`` to ``target_hz``."""
    if spacing_hz <= 0:
        raise ValueError("mode spacing must be positive")
    return round(target_hz / spacing_hz)


def effective_wavelength(ring: RingParameters, nu: float) -> tuple[float, float]:
    """Plasmonic wavelength v_c / nu and the compression ratio c / v_c.

    Returns ``(lambda_eff, compression)``.
    """
    if not nu > 0:
        raise ValueError(f"frequency must be positive, got {nu}")
    v_c = charge_velocity(ring)
    return v_c / nu, C_LIGHT / v_c


def cavity_resonance(
    ring: RingParameters,
    charge: ChargeState,
    flux: FluxConfig,
    m: int,
    branch: int = +1,
) -> SpectrumPoint:
    """Flux-dependent resonance for an excitation that shifts J_c by ``branch``.

    hbar omega_c = E_zero(J_c + branch) - E_zero(J_c) + hbar omega_m, which is
    affine in the flux at fixed branch.
    """
    if branch not in (1, -1):
        raise ValueError(f"branch must be +1 or -1, got {branch}")
    omega_m = mode_frequency(ring, m)
    phi = flux.flux_through(ring)
    winding = charge.J_c + 4.0 * phi / flux.flux_quantum
    shift = _zero_mode_prefactor(ring) * ring.K_c * (2.0 * branch * winding + 1.0)
    omega_c = shift / HBAR + omega_m
    return SpectrumPoint(
        m=int(m),
        branch=branch,
        flux_wb=phi,
        flux_over_phi0=phi / flux.flux_quantum,
        omega_c=omega_c,
        zero_mode_energy=zero_mode_energy(ring, charge, flux),
    )


def flux_slope_per_quantum(ring: RingParameters) -> float:
    """d(omega_c / 2pi) / d(Phi / Phi_0) in Hz, for the +1 branch."""
    return 2.0 * charge_velocity(ring) * ring.K_c / ring.L
