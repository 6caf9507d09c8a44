"""Tripod Raman transfer with two chiral cavity modes, as an open system.

The state space is the single-excitation sector plus the destinations of the
irreversible jumps, in this fixed order::

    0  |0, vac>          initial spin state, cavity empty
    1  |A2, vac>         optically excited state
    2  |-1, 1+, 0->      photon in the CW mode
    3  |+1, 0+, 1->      photon in the CCW mode
    4  |-1, vac>         after the CW photon has left the cavity
    5  |+1, vac>         after the CCW photon has left the cavity
    6  |sink, vac>       lumped destination of the parasitic A2 decay

Internally every rate is an angular frequency in rad/s and hbar = 1.  The
integrator works in nanoseconds to keep the numbers O(1); all public times
are in seconds.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .constants import ghz_to_rad_s
from .odeint import IntegrationError, integrate_adaptive  # noqa: F401  (re-export)

log = logging.getLogger(__name__)

N_LEVELS = 7
GROUND, EXCITED, PHOTON_PLUS, PHOTON_MINUS, SPIN_M1, SPIN_P1, SINK = range(N_LEVELS)
LEVEL_LABELS = (
    "0vac",
    "A2vac",
    "m1_ph",
    "p1_ph",
    "m1_vac",
    "p1_vac",
    "sink",
)

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8

_NS = 1e-9


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class RateSet:
    """Coherent and dissipative rates, all angular frequencies in rad/s."""

    g: float = 0.0
    Delta: float = 0.0
    delta: float = 0.0
    kappa_ex: float = 0.0
    kappa_0: float = 0.0
    gamma: float = 0.0
    gamma_phi: float = 0.0
    omega_L: float = 0.0
    omega_zfs: float = 0.0
    recycle_to_ground: float = 0.0

    def __post_init__(self):
        for name in ("g", "kappa_ex", "kappa_0", "gamma", "gamma_phi"):
            if getattr(self, name) < 0:
                raise ValueError(f"rate {name} must be >= 0, got {getattr(self, name)}")
        if not 0.0 <= self.recycle_to_ground <= 1.0:
            raise ValueError("recycle_to_ground must be a fraction in [0, 1]")

    @classmethod
    def from_ghz(cls, **values) -> "RateSet":
        """Build from ordinary frequencies in GHz (omega / 2pi)."""
        converted = {
            k: (v if k == "recycle_to_ground" else ghz_to_rad_s(v))
            for k, v in values.items()
        }
        return cls(**converted)

    @property
    def kappa_tot(self) -> float:
        return self.kappa_ex + self.kappa_0


# Illustrative operating point: g, kappa_ex, kappa_0, gamma, gamma_phi in GHz,
# resonant pump and cavity.
REFERENCE_RATES_GHZ = dict(
    g=20.0, kappa_ex=30.0, kappa_0=0.1, gamma=0.05, gamma_phi=10.0, Delta=0.0, delta=0.0
)


def reference_rates(**overrides) -> RateSet:
    values = dict(REFERENCE_RATES_GHZ)
    values.update(overrides)
    return RateSet.from_ghz(**values)


# ---------------------------------------------------------------------------
# pump pulse
# ---------------------------------------------------------------------------

PULSE_KINDS = ("sin2", "tanh", "constant")


@dataclass(frozen=True)
class PulseShape:
    """Pump Rabi frequency envelope Omega_p(t) (rad/s, times in s).

    ``sin2``: zero before ``t_on``, rises as sin^2 over ``t_rise``, then holds.
    ``tanh``: zero before ``t_on``, then ``omega_max * tanh((t - t_on) / t_rise)``.
    ``constant``: ``omega_max`` at all times.
    """

    kind: str = "sin2"
    omega_max: float = 0.0
    t_on: float = 0.0
    t_rise: float = 1e-9
    t_total: float = 5e-9

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}; expected one of {PULSE_KINDS}")
        if self.omega_max < 0:
            raise ValueError("omega_max must be >= 0")
        if self.t_rise <= 0 or self.t_total <= 0 or self.t_on < 0:
            raise ValueError("pulse times must be positive (t_on >= 0)")

    def omega(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.omega_max)
        s = (t - self.t_on) / self.t_rise
        if self.kind == "sin2":
            ramp = np.sin(0.5 * np.pi * np.clip(s, 0.0, 1.0)) ** 2
        else:
            ramp = np.tanh(np.clip(s, 0.0, None))
        return self.omega_max * ramp

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(t)
        s = (t - self.t_on) / self.t_rise
        inside = s >= 0.0
        if self.kind == "sin2":
            inside &= s <= 1.0
            d = 0.5 * np.pi * np.sin(np.pi * np.clip(s, 0.0, 1.0))
        else:
            d = 1.0 / np.cosh(np.clip(s, 0.0, 50.0)) ** 2
        return np.where(inside, self.omega_max * d / self.t_rise, 0.0)

    def omega_at(self, t: float) -> float:
        """Scalar fast path of :meth:`omega` for the integrator."""
        if self.kind == "constant":
            return self.omega_max
        s = (t - self.t_on) / self.t_rise
        if s <= 0.0:
            return 0.0
        if self.kind == "sin2":
            return self.omega_max * (math.sin(0.5 * math.pi * s) ** 2 if s < 1.0 else 1.0)
        return self.omega_max * math.tanh(s)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        if self.kind == "sin2":
            return (self.t_on, self.t_on + self.t_rise)
        if self.kind == "tanh":
            return (self.t_on,)
        return ()


# ---------------------------------------------------------------------------
# Hamiltonian, dark state, dissipator
# ---------------------------------------------------------------------------


def build_hamiltonian(rates: RateSet, omega_p: float) -> np.ndarray:
    """7x7 Hamiltonian (rad/s, hbar = 1) at pump Rabi frequency ``omega_p``."""
    H = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    H[EXCITED, EXCITED] = rates.Delta
    H[PHOTON_PLUS, PHOTON_PLUS] = rates.Delta - rates.delta
    H[PHOTON_MINUS, PHOTON_MINUS] = rates.Delta - rates.delta
    H[GROUND, EXCITED] = H[EXCITED, GROUND] = 0.5 * omega_p
    H[EXCITED, PHOTON_PLUS] = H[PHOTON_PLUS, EXCITED] = rates.g
    H[EXCITED, PHOTON_MINUS] = H[PHOTON_MINUS, EXCITED] = rates.g
    return H


def mixing_angle(omega_p: float, g: float) -> float:
    """Dark-state mixing angle, tan(theta) = Omega_p / (2 sqrt(2) g)."""
    if g < 0 or omega_p < 0:
        raise ValueError("omega_p and g must be non-negative")
    if g == 0 and omega_p > 0:
        warnings.warn("g = 0: mixing angle pinned to the pi/2 limit", RuntimeWarning)
    return math.atan2(omega_p, 2.0 * math.sqrt(2.0) * g)


def dark_state(theta: float) -> np.ndarray:
    """cos(theta)|0,vac> - sin(theta)(|-1,1+,0-> + |+1,0+,1->)/sqrt(2)."""
    if not -1e-15 <= theta <= 0.5 * math.pi + 1e-15:
        raise ValueError(f"theta must lie in [0, pi/2], got {theta}")
    psi = np.zeros(N_LEVELS, dtype=complex)
    psi[GROUND] = math.cos(theta)
    psi[PHOTON_PLUS] = psi[PHOTON_MINUS] = -math.sin(theta) / math.sqrt(2.0)
    return psi


def _jump(to: int, frm: int) -> np.ndarray:
    op = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    op[to, frm] = 1.0
    return op


def collapse_operators(rates: RateSet) -> list[np.ndarray]:
    """The six jump channels (L5 possibly split in two by recycling)."""
    photon_plus_out = _jump(SPIN_M1, PHOTON_PLUS)
    photon_minus_out = _jump(SPIN_P1, PHOTON_MINUS)
    ops = [
        math.sqrt(rates.kappa_ex) * photon_plus_out,
        math.sqrt(rates.kappa_ex) * photon_minus_out,
        math.sqrt(rates.kappa_0) * photon_plus_out,
        math.sqrt(rates.kappa_0) * photon_minus_out,
    ]
    f = rates.recycle_to_ground
    ops.append(math.sqrt(rates.gamma * (1.0 - f)) * _jump(SINK, EXCITED))
    if f > 0:
        ops.append(math.sqrt(rates.gamma * f) * _jump(GROUND, EXCITED))
    ops.append(math.sqrt(rates.gamma_phi) * _jump(EXCITED, EXCITED))
    return ops


def lindblad_rhs(rho: np.ndarray, H: np.ndarray, rates: RateSet) -> np.ndarray:
    """-i[H, rho] + sum_m D[L_m] rho."""
    out = -1j * (H @ rho - rho @ H)
    for L in collapse_operators(rates):
        Ld = L.conj().T
        LdL = Ld @ L
        out += L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def liouvillian(H: np.ndarray, collapse_ops) -> np.ndarray:
    """Superoperator acting on row-major ``rho.ravel()``."""
    eye = np.eye(H.shape[0])
    sup = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for L in collapse_ops:
        LdL = L.conj().T @ L
        sup += np.kron(L, L.conj()) - 0.5 * (np.kron(LdL, eye) + np.kron(eye, LdL.T))
    return sup


# ---------------------------------------------------------------------------
# density matrices and diagnostics
# ---------------------------------------------------------------------------


def pure_state(index: int) -> np.ndarray:
    rho = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    rho[index, index] = 1.0
    return rho


def check_density_matrix(rho: np.ndarray) -> None:
    rho = np.asarray(rho)
    if rho.shape != (N_LEVELS, N_LEVELS):
        raise ValueError(f"density matrix must be {N_LEVELS}x{N_LEVELS}, got {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > HERMITICITY_TOL:
        raise ValueError(f"density matrix is not Hermitian (max deviation {herm:.3g})")
    tr = abs(np.trace(rho) - 1.0)
    if tr > TRACE_TOL:
        raise ValueError(f"density matrix trace deviates from 1 by {tr:.3g}")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam < -POSITIVITY_TOL:
        raise ValueError(f"density matrix has negative eigenvalue {lam:.3g}")


def adiabaticity_monitor(pulse: PulseShape, rates: RateSet, t):
    """|d theta / dt| divided by the dark-bright gap sqrt(Omega_p^2 + 8 g^2) / 2."""
    if not rates.g > 0:
        raise ValueError("adiabaticity needs g > 0")
    omega = pulse.omega(t)
    domega = pulse.derivative(t)
    g8 = 8.0 * rates.g**2
    dtheta = 2.0 * math.sqrt(2.0) * rates.g * domega / (g8 + omega**2)
    gap = 0.5 * np.sqrt(omega**2 + g8)
    return np.abs(dtheta) / gap


def max_adiabaticity(pulse: PulseShape, rates: RateSet, n: int = 4001) -> float:
    if pulse.kind == "constant":
        return 0.0
    t = pulse.t_on + pulse.t_rise * np.linspace(0.0, 1.0 if pulse.kind == "sin2" else 10.0, n)
    return float(np.max(adiabaticity_monitor(pulse, rates, t)))


def rise_time_for(rates: RateSet, omega_max: float, target: float = 0.1, kind: str = "sin2") -> float:
    """Shortest ramp time whose peak adiabaticity equals ``target``.

    The ramp shapes are self-similar in ``(t - t_on) / t_rise``, so the peak
    of A(t) scales exactly as 1 / t_rise.
    """
    probe = PulseShape(kind=kind, omega_max=omega_max, t_on=0.0, t_rise=1.0, t_total=1.0)
    return max_adiabaticity(probe, rates, n=20001) / target


def default_pulse(
    rates: RateSet,
    omega_max: float | None = None,
    adiabaticity: float = 0.1,
    t_on: float = 0.0,
    hold: float | None = None,
) -> PulseShape:
    """sin^2 ramp to 8 g, paced so the peak adiabaticity is ``adiabaticity``.

    The plateau after the ramp lasts ``hold`` seconds (default: forty cavity
    lifetimes or 2 ns, whichever is longer), long enough for the photon to
    leave the cavity.
    """
    if omega_max is None:
        omega_max = 8.0 * rates.g
    # 1% margin keeps the grid-sampled maximum safely below the target
    t_rise = 1.01 * rise_time_for(rates, omega_max, adiabaticity)
    if hold is None:
        lifetime = 1.0 / rates.kappa_tot if rates.kappa_tot > 0 else 0.0
        hold = max(40.0 * lifetime, 2e-9)
    return PulseShape("sin2", omega_max, t_on, t_rise, t_on + t_rise + hold)


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimulationTrace:
    """Time series of one master-equation run.  Times in seconds."""

    times: np.ndarray
    populations: np.ndarray
    n_plus: np.ndarray
    n_minus: np.ndarray
    p_fiber_plus: np.ndarray
    p_fiber_minus: np.ndarray
    p_int_plus: np.ndarray
    p_int_minus: np.ndarray
    trace_err: np.ndarray
    min_eigenvalue: np.ndarray
    hermiticity_err: np.ndarray
    adiabaticity: np.ndarray
    rates: RateSet
    pulse: PulseShape
    rho_final: np.ndarray
    n_steps: int = 0
    tolerances: tuple[float, float] = (1e-10, 1e-8)
    bookkeeping_err: float = 0.0
    states: np.ndarray | None = None

    @property
    def max_pop_excited(self) -> float:
        return float(self.populations[:, EXCITED].max())

    @property
    def max_adiabaticity(self) -> float:
        return float(self.adiabaticity.max())

    @property
    def max_trace_drift(self) -> float:
        return float(self.trace_err.max())

    @property
    def min_eig(self) -> float:
        return float(self.min_eigenvalue.min())

    @property
    def p_fiber_total(self) -> float:
        return float(self.p_fiber_plus[-1] + self.p_fiber_minus[-1])

    @property
    def p_intrinsic_total(self) -> float:
        return float(self.p_int_plus[-1] + self.p_int_minus[-1])

    def invariant_report(self) -> dict:
        inc = [
            np.min(np.diff(a)) if a.size > 1 else 0.0
            for a in (self.p_fiber_plus, self.p_fiber_minus, self.p_int_plus, self.p_int_minus)
        ]
        closure = np.abs(self.populations.sum(axis=1) - 1.0)
        return {
            "max_trace_drift": self.max_trace_drift,
            "min_eigenvalue": self.min_eig,
            "max_hermiticity_err": float(self.hermiticity_err.max()),
            "max_adiabaticity": self.max_adiabaticity,
            "max_pop_A2": self.max_pop_excited,
            "bookkeeping_err": self.bookkeeping_err,
            "min_emission_increment": float(min(inc)),
            "population_closure_err": float(closure.max()),
            "trace_ok": self.max_trace_drift <= TRACE_TOL,
            "positivity_ok": self.min_eig >= -POSITIVITY_TOL,
            "hermiticity_ok": float(self.hermiticity_err.max()) <= HERMITICITY_TOL,
            "monotone_emission_ok": min(inc) >= -POSITIVITY_TOL,
        }

    def verify(self) -> dict:
        """Raise ``InvariantViolation`` unless every run invariant holds."""
        report = self.invariant_report()
        failed = [k for k, v in report.items() if k.endswith("_ok") and not v]
        if failed:
            raise InvariantViolation(f"run invariants violated: {', '.join(failed)}; {report}")
        return report


def _projector(dim: int):
    n2 = dim * dim

    def project(y):
        rho = y[:n2].reshape(dim, dim)
        rho = 0.5 * (rho + rho.conj().T)
        y = y.copy()
        y[:n2] = rho.ravel()
        # emission integrals are real
        y[n2:] = y[n2:].real
        return y

    return project


def _generators(rates: RateSet) -> tuple[np.ndarray, np.ndarray]:
    """Augmented generators (pump-free part, per-unit-pump part) in 1/ns.

    The state vector is ``rho.ravel()`` followed by the two time integrals of
    the mode occupations n+ and n-.
    """
    n2 = N_LEVELS * N_LEVELS
    H0 = build_hamiltonian(rates, 0.0)
    H1 = build_hamiltonian(replace(rates, g=0.0, Delta=0.0, delta=0.0), 1.0)
    M0 = np.zeros((n2 + 2, n2 + 2), dtype=complex)
    M1 = np.zeros_like(M0)
    M0[:n2, :n2] = liouvillian(H0, collapse_operators(rates))
    M1[:n2, :n2] = liouvillian(H1, [])
    M0[n2, PHOTON_PLUS * N_LEVELS + PHOTON_PLUS] = 1.0
    M0[n2 + 1, PHOTON_MINUS * N_LEVELS + PHOTON_MINUS] = 1.0
    # the integral rows are in units of 1/ns because of the time rescaling
    M0[:n2, :] *= _NS
    M1 *= _NS
    return M0, M1


def integrate(
    initial: np.ndarray | None,
    pulse: PulseShape,
    rates: RateSet,
    t_grid=None,
    atol: float = 1e-10,
    rtol: float = 1e-8,
    n_points: int = 401,
    store_states: bool = False,
) -> SimulationTrace:
    """Integrate the master equation and return the sampled trace.

    ``initial`` defaults to |0,vac><0,vac|; ``t_grid`` (seconds) defaults to
    ``n_points`` uniform samples over ``[0, pulse.t_total]``.  With
    ``store_states`` the full density matrices are kept on the trace.
    """
    rho0 = pure_state(GROUND) if initial is None else np.array(initial, dtype=complex)
    check_density_matrix(rho0)
    if t_grid is None:
        t_grid = np.linspace(0.0, pulse.t_total, n_points)
    t_grid = np.asarray(t_grid, dtype=float)

    M0, M1 = _generators(rates)
    n2 = N_LEVELS * N_LEVELS
    y0 = np.concatenate([rho0.ravel(), np.zeros(2, dtype=complex)])
    omega = pulse.omega_at

    def rhs(t_ns, y):
        return M0 @ y + omega(t_ns * _NS) * (M1 @ y)

    breaks = [b / _NS for b in pulse.breakpoints]
    ys, n_steps = integrate_adaptive(
        rhs,
        y0,
        t_grid / _NS,
        atol=atol,
        rtol=rtol,
        project=_projector(N_LEVELS),
        breakpoints=breaks,
    )

    rhos = ys[:, :n2].reshape(-1, N_LEVELS, N_LEVELS)
    integrals = ys[:, n2:].real * _NS  # back to seconds
    pops = np.real(np.einsum("tii->ti", rhos))
    trace_err = np.abs(np.einsum("tii->t", rhos) - 1.0)
    herm = np.max(np.abs(rhos - np.conj(np.transpose(rhos, (0, 2, 1)))), axis=(1, 2))
    min_eig = np.linalg.eigvalsh(rhos).min(axis=1)

    k_ex, k_0 = rates.kappa_ex, rates.kappa_0
    p_fp, p_fm = k_ex * integrals[:, 0], k_ex * integrals[:, 1]
    p_ip, p_im = k_0 * integrals[:, 0], k_0 * integrals[:, 1]
    # the accumulated emission must equal the population parked in |+-1, vac>
    book = max(
        np.max(np.abs(p_fp + p_ip - pops[:, SPIN_M1])),
        np.max(np.abs(p_fm + p_im - pops[:, SPIN_P1])),
    )
    adia = (
        adiabaticity_monitor(pulse, rates, t_grid) if rates.g > 0 else np.zeros_like(t_grid)
    )
    trace = SimulationTrace(
        times=t_grid,
        populations=pops,
        n_plus=pops[:, PHOTON_PLUS],
        n_minus=pops[:, PHOTON_MINUS],
        p_fiber_plus=p_fp,
        p_fiber_minus=p_fm,
        p_int_plus=p_ip,
        p_int_minus=p_im,
        trace_err=trace_err,
        min_eigenvalue=min_eig,
        hermiticity_err=herm,
        adiabaticity=adia,
        rates=rates,
        pulse=pulse,
        rho_final=rhos[-1],
        n_steps=n_steps,
        tolerances=(atol, rtol),
        bookkeeping_err=float(book),
        states=rhos if store_states else None,
    )
    log.debug("integration finished: %d steps, %s", n_steps, trace.invariant_report())
    return trace


# ---------------------------------------------------------------------------
# emitted photon
# ---------------------------------------------------------------------------


def emitted_frequency(rates: RateSet) -> float:
    """omega_out = omega_L - omega_ZFS (rad/s)."""
    return rates.omega_L - rates.omega_zfs


def is_two_photon_resonant(rates: RateSet, omega_c: float, rel_tol: float = 1e-12) -> bool:
    """True when Delta == delta; then the emitted photon sits at omega_c.

    Resonance ties the cavity to the Raman difference frequency,
    omega_c = omega_L - omega_ZFS; a mismatch raises ``ValueError``.
    """
    if not math.isclose(rates.Delta, rates.delta, rel_tol=rel_tol, abs_tol=0.0):
        return False
    w_out = emitted_frequency(rates)
    if not math.isclose(w_out, omega_c, rel_tol=rel_tol):
        raise ValueError(
            f"two-photon resonance requires omega_out == omega_c, got {w_out} vs {omega_c}"
        )
    return True


def resonant_rates(rates: RateSet, omega_c: float) -> RateSet:
    """Copy of ``rates`` with the laser set so that omega_L - omega_ZFS = omega_c."""
    return replace(rates, omega_L=omega_c + rates.omega_zfs, delta=rates.Delta)
