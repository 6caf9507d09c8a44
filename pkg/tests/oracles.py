"""Independent reference calculations used by the tests.

Nothing here imports the package under test; every value is recomputed from
scratch with plain floats or cmath.
"""

import cmath
import math

HBAR = 1.054571817e-34
H = 6.62607015e-34
E = 1.602176634e-19
C = 299792458.0
EPS0 = 8.8541878128e-12
DEBYE = 3.33564e-30


def zero_mode_energy(R, K_c, v_F, N_c, J_c, phi_over_phi0):
    v_c = v_F / K_c
    L = 2 * math.pi * R
    pref = math.pi * HBAR * v_c / (2 * L)
    return pref * (N_c * N_c / K_c + K_c * (J_c + 4 * phi_over_phi0) ** 2)


def resonance_hz(R, K_c, v_F, J_c, phi_over_phi0, m, branch):
    """Difference of zero-mode energies plus the oscillator quantum, in Hz."""
    e_up = zero_mode_energy(R, K_c, v_F, 0, J_c + branch, phi_over_phi0)
    e_lo = zero_mode_energy(R, K_c, v_F, 0, J_c, phi_over_phi0)
    v_c = v_F / K_c
    return (e_up - e_lo) / H + v_c * abs(m) / R / (2 * math.pi)


def vacuum_coupling_ghz(d_debye, f_c_hz, eps_r, V, x, L_d):
    omega = 2 * math.pi * f_c_hz
    e_vac = math.sqrt(HBAR * omega / (2 * EPS0 * eps_r * V))
    g = d_debye * DEBYE * e_vac / HBAR * math.exp(-x / L_d)
    return g / (2 * math.pi) / 1e9


def kappa_r_ghz(wavelength, xi, A_cnt, A_fiber, L_int, R):
    omega = 2 * math.pi * C / wavelength
    v_cnt = 2 * math.pi * R * A_cnt
    v_fib = L_int * A_fiber
    return xi * xi * omega * v_cnt / v_fib / (2 * math.pi) / 1e9


def overlap(helicity, direction_sign, r):
    """|d . E*|^2 written out component by component."""
    n = math.sqrt(1 + r * r)
    d = (1 / math.sqrt(2), 1j * helicity / math.sqrt(2))
    e = (1 / n, 1j * direction_sign * r / n)
    amp = d[0] * e[0].conjugate() + d[1] * e[1].conjugate()
    return abs(amp) ** 2


def damped_rabi(t, omega, Delta, gamma):
    """Populations of |0>, |A2>, sink for a constant drive with A2 -> sink decay.

    The sink never feeds back, so the {|0>, |A2>} block follows the
    non-Hermitian Hamiltonian [[0, W/2], [W/2, Delta - i gamma/2]] exactly.
    """
    a = Delta - 0.5j * gamma
    s = cmath.sqrt(a * a + omega * omega)
    ph = cmath.exp(-0.5j * a * t)
    if abs(s) < 1e-300:
        c0 = ph * (1 + 0.5j * a * t)
        c1 = -0.5j * ph * omega * t
    else:
        c0 = ph * (cmath.cos(s * t / 2) + 1j * a * cmath.sin(s * t / 2) / s)
        c1 = -1j * ph * omega * cmath.sin(s * t / 2) / s
    p0, p1 = abs(c0) ** 2, abs(c1) ** 2
    return p0, p1, 1 - p0 - p1


def weak_drive_branching(g, kappa_tot, gamma):
    """Fraction of A2 excitations that end as a cavity photon (Delta = delta = 0).

    Steady-state amplitudes of the no-jump dynamics: each photon amplitude is
    -2i g c_A2 / kappa_tot, so the two photon channels empty at 8 g^2 / kappa_tot
    against the parasitic decay gamma.
    """
    out = 8 * g * g / kappa_tot
    return out / (out + gamma)
