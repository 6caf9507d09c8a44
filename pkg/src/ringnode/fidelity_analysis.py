"""Closed-form efficiency estimates and their cross-check against dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .tripod_dynamics import RateSet, SimulationTrace

GAP_THRESHOLD = 0.02


class InfiniteCooperativity(ValueError):
    """gamma = 0: the cooperativity has no finite value."""


@dataclass(frozen=True)
class FidelityReport:
    eta_ext: float
    C_tripod: float | None
    eta_int: float
    F_total_analytic: float
    F_total_expansion: float
    dephasing_bound: str
    F_numeric: float | None = None
    abs_gap: float | None = None
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def gap_exceeded(self) -> bool:
        return "gap_exceeded" in self.flags


def extraction_efficiency(kappa_ex: float, kappa_0: float) -> float:
    """Fraction of cavity decay that goes into the fiber."""
    if kappa_ex < 0 or kappa_0 < 0:
        raise ValueError("cavity rates must be non-negative")
    total = kappa_ex + kappa_0
    if total == 0:
        raise ValueError("extraction efficiency undefined for kappa_ex = kappa_0 = 0")
    return kappa_ex / total


def cooperativity(g: float, kappa_tot: float, gamma: float) -> float:
    """Effective tripod cooperativity 2 g^2 / (kappa_tot gamma).

    Raises :class:`InfiniteCooperativity` for gamma = 0 (unless g = 0 as well).
    """
    if not kappa_tot > 0:
        raise ValueError("kappa_tot must be positive")
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if gamma == 0:
        if g == 0:
            return 0.0
        raise InfiniteCooperativity("gamma = 0 gives unbounded cooperativity")
    return 2.0 * g * g / (kappa_tot * gamma)


def internal_efficiency(C: float) -> float:
    if C < 0:
        raise ValueError("cooperativity must be non-negative")
    if math.isinf(C):
        return 1.0
    return C / (C + 1.0)


def _require_detuning(Delta):
    if Delta == 0:
        raise ValueError(
            "large-detuning rate formulas are undefined at Delta = 0; "
            "integrate the master equation instead"
        )


def effective_raman(omega_p: float, g: float, Delta: float) -> float:
    _require_detuning(Delta)
    return omega_p * g / (2.0 * Delta)


def transfer_rate(omega_p: float, g: float, Delta: float, kappa_tot: float) -> float:
    """Raman transfer rate into both cavity channels after eliminating A2."""
    return 2.0 * effective_raman(omega_p, g, Delta) ** 2 / kappa_tot


def loss_rate(omega_p: float, Delta: float, gamma: float) -> float:
    _require_detuning(Delta)
    return (omega_p / (2.0 * Delta)) ** 2 * gamma


def total_fidelity(rates: RateSet) -> FidelityReport:
    """Analytic success probability eta_ext * eta_int and its expansion.

    The dephasing correction carries no known coefficient, so it is reported
    as an order-of-magnitude string rather than subtracted.
    """
    flags = []
    eta_ext = extraction_efficiency(rates.kappa_ex, rates.kappa_0)
    try:
        C = cooperativity(rates.g, rates.kappa_tot, rates.gamma)
        eta_int = internal_efficiency(C)
    except InfiniteCooperativity:
        C = None
        eta_int = 1.0
        flags.append("infinite_cooperativity")

    k_loss = rates.kappa_0 / rates.kappa_ex if rates.kappa_ex > 0 else math.inf
    if rates.gamma == 0:
        coop_term = 0.0
    elif rates.g == 0:
        coop_term = math.inf
    else:
        coop_term = rates.kappa_tot * rates.gamma / (2.0 * rates.g**2)
    if math.isfinite(k_loss) and math.isfinite(coop_term):
        expansion = (1.0 - k_loss) * (1.0 - coop_term)
    else:
        expansion = math.nan
    if rates.kappa_ex > 0 and rates.kappa_0 > 0.1 * rates.kappa_ex:
        flags.append("not_overcoupled")

    if rates.Delta == 0:
        bound = "O(gamma_phi Omega_eff^2 / Delta^2): undefined at Delta = 0"
    else:
        bound = (
            f"O(gamma_phi Omega_eff^2 / Delta^2), gamma_phi = {rates.gamma_phi:.6g} rad/s, "
            f"Delta = {rates.Delta:.6g} rad/s"
        )
    return FidelityReport(
        eta_ext=eta_ext,
        C_tripod=C,
        eta_int=eta_int,
        F_total_analytic=eta_ext * eta_int,
        F_total_expansion=expansion,
        dephasing_bound=bound,
        flags=tuple(flags),
    )


def compare_analytic_numeric(trace: SimulationTrace, rates: RateSet) -> FidelityReport:
    """Attach the integrated fiber emission probability to the analytic report."""
    if trace.rates != rates:
        raise ValueError("trace was produced with a different RateSet")
    report = total_fidelity(rates)
    f_num = trace.p_fiber_total
    gap = abs(f_num - report.F_total_analytic)
    flags = report.flags + (("gap_exceeded",) if gap > GAP_THRESHOLD else ())
    return replace(report, F_numeric=f_num, abs_gap=gap, flags=flags)
