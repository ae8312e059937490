"""Ramsey spectroscopy with noisy partitioned GHZ probes versus the
noiseless one-axis-twisting (OAT) squeezed-state bound.

A GHZ group of size s = n/m is read out through the parity-style signal
P0 = 1/2 + c(t) cos(s w t) / 2, where the contrast c(t) combines the
preparation and readout errors with dephasing.  Loss is handled by
post-selection, which removes a fraction 1 - exp(-s eta t) of the runs.
Everything that involves 2^s or k^s goes through logs.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, golden

from ._numerics import log_abs_diff_exp, log_pow2_minus
from .noise_models import DomainError, NoiseParams, log_visibility

DEGENERATE_SIN = 1e-12


@dataclass(frozen=True)
class SqueezingState:
    n: int
    phi: float
    xi2: float


@dataclass(frozen=True)
class RamseyScenario:
    params: NoiseParams
    n: float
    m: float = 1.0
    omega: float = 0.0
    gamma: float = 0.0
    eta: float = 0.0
    T: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.omega):
            raise DomainError("omega must be real and finite")
        if self.T <= 0:
            raise DomainError("T must be positive")
        if self.gamma < 0 or self.eta < 0:
            raise DomainError("gamma and eta must be non-negative")
        if not 1 <= self.m <= self.n:
            raise DomainError("need 1 <= m <= n")


# --- one-axis twisting -----------------------------------------------------

def _xi_core(n, phi):
    """xi_S^2 for 0 <= Re(phi) < pi/2; analytic, so it accepts complex phi."""
    A = -np.expm1((n - 2) * np.log(np.cos(phi)))  # 1 - cos^(n-2) phi
    B = 16 * np.sin(phi / 2) ** 2 * np.exp((2 * n - 4) * np.log(np.cos(phi / 2)))
    root = np.sqrt(A * A + B)
    # sqrt(A^2 + B) - A rewritten to avoid cancellation; A >= 0 on this range
    C = B / (root + A)
    return 1 - (n - 1) * C / 4


def xi_s_squared(n, phi):
    """Kitagawa-Ueda squeezing parameter of the OAT state at twisting angle phi.

    Accepts scalars or arrays of phi in [0, pi].
    """
    if n < 2:
        raise DomainError("n must be >= 2")
    phi = np.asarray(phi, dtype=float)
    if np.any((phi < 0) | (phi > np.pi)) or np.any(np.isnan(phi)):
        raise DomainError("phi must lie in [0, pi]")
    c = np.cos(phi)
    with np.errstate(divide="ignore", invalid="ignore"):
        # cos^(n-2) phi with its sign kept explicitly once phi > pi/2
        mag = np.where(c == 0, 0.0, np.exp((n - 2) * np.log(np.abs(c))))
        sgn = np.where(c < 0, (-1.0) ** (n - 2), 1.0)
        cpow = 1.0 if n == 2 else sgn * mag
        A = np.where(c > 0, -np.expm1((n - 2) * np.log(np.where(c > 0, c, 1.0))), 1 - cpow)
        ch = np.maximum(np.cos(phi / 2), 0.0)
        chpow = 1.0 if n == 2 else np.where(ch > 0, np.exp((2 * n - 4) * np.log(np.where(ch > 0, ch, 1.0))), 0.0)
        B = 16 * np.sin(phi / 2) ** 2 * chpow
        root = np.sqrt(A * A + B)
        # sqrt(A^2 + B) - A rewritten to avoid cancellation; A >= 0 throughout
        C = np.where(root + A > 0, B / np.where(root + A > 0, root + A, 1.0), 0.0)
    out = 1 - (n - 1) * C / 4
    return float(out) if out.ndim == 0 else out


def dxi_dphi(n, phi, h=1e-30):
    """Complex-step derivative of xi_S^2 (valid for 0 < phi < pi/2)."""
    return float(np.imag(_xi_core(n, phi + 1j * h)) / h)


def _first_window(n, npts=4000):
    """Grid bracket (a, b, c) around the first local minimum of xi_S^2."""
    grid = np.geomspace(1e-6, np.pi / 2 * (1 - 1e-9), npts)
    vals = _xi_core(n, grid)
    rising = np.nonzero(np.diff(vals) > 0)[0]
    if len(rising) == 0:
        raise DomainError("no interior minimum of xi_S^2 below pi/2")
    i = int(rising[0])
    return grid[max(i - 1, 0)], grid[i], grid[i + 1]


def minimize_xi_s(n):
    """First non-trivial minimum of xi_S^2(phi).

    Golden-section search on the first window, then the stationary point is
    polished with brentq on the complex-step derivative so |d xi/d phi| sits
    at rounding level.
    """
    if n < 3:
        raise DomainError("n must be >= 3")
    a, b, c = _first_window(n)
    x = golden(lambda p: float(_xi_core(n, p)), brack=(a, b, c), tol=1e-12)
    lo, hi = a, c
    if dxi_dphi(n, lo) < 0 < dxi_dphi(n, hi):
        x = brentq(lambda p: dxi_dphi(n, p), lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return SqueezingState(int(n), float(x), xi_s_squared(n, x))


def var_omega_oat(n, xi2, t, T):
    """Noiseless OAT Ramsey variance bound xi2 / (n t T)."""
    if min(n, xi2, t, T) <= 0:
        raise DomainError("n, xi2, t and T must be positive")
    return xi2 / (n * t * T)


# --- noisy GHZ Ramsey --------------------------------------------------------

def log_contrast0(F, k, s):
    """(log|c0|, sign) of the t = 0 contrast c0 = F k^(s-1) V(s).

    Equivalently c0 = F k^(s-2) (F (2k)^s - k) / (2^s - 1).
    """
    NoiseParams(F, k)
    lv, sgn = log_visibility(F, k, s)
    return np.log(F) + (s - 1) * np.log(k) + lv, sgn


def p0_ghz(F, k, n, omega, gamma, t):
    """Probability of outcome 0 for an n-qubit noisy GHZ Ramsey cycle.

    omega may be complex (used for complex-step derivatives).
    """
    if t < 0 or gamma < 0:
        raise DomainError("t and gamma must be non-negative")
    lc, sgn = log_contrast0(F, k, n)
    c = sgn * np.exp(lc - n * gamma * t)
    return 0.5 + 0.5 * c * np.cos(n * omega * t)


def var_omega_ghz(F, k, n, m, omega, gamma, eta, t, T):
    """Error-propagated variance of the frequency estimate.

    Each of the m groups of size s = n/m runs T/t cycles and keeps the
    exp(-s eta t) fraction with no detected loss.  omega and t broadcast.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or T <= 0:
        raise DomainError("t and T must be positive")
    if gamma < 0 or eta < 0:
        raise DomainError("gamma and eta must be non-negative")
    s = n / m
    ph = s * np.asarray(omega, dtype=float) * t
    sn = np.sin(ph)
    if np.any(np.abs(sn) < DEGENERATE_SIN):
        raise DomainError("degenerate operating point: sin(n omega t / m) = 0")
    lc, _ = log_contrast0(F, k, s)
    # e^{2 s gamma t}/c0^2 - cos^2 written as expm1(...) + sin^2
    excess = np.expm1(2 * s * gamma * t - 2 * lc) + sn * sn
    out = np.exp(s * eta * t) * excess / (s * s * sn * sn * t * T * m)
    return float(out) if out.ndim == 0 else out


def var_omega_ghz_propagation(F, k, n, m, omega, gamma, eta, t, T, h=1e-20):
    """Same variance from P0(1 - P0) / (mu |dP0/d omega|^2).

    Independent route: the slope comes from a complex step through p0_ghz.
    """
    s = n / m
    P = float(np.real(p0_ghz(F, k, s, omega, gamma, t)))
    dP = float(np.imag(p0_ghz(F, k, s, omega + 1j * h, gamma, t)) / h)
    mu = m * (T / t) * np.exp(-s * eta * t)
    return P * (1 - P) / (mu * dP * dP)


def optimal_operating_point(n, m, omega_phase=np.pi / 2, gamma=0.0, eta=0.0):
    """(t, omega) with s(2 gamma + eta) t = 1 and s omega t = pi/2."""
    r = 2 * gamma + eta
    if r <= 0:
        raise DomainError("2 gamma + eta must be positive")
    s = n / m
    t = 1 / (s * r)
    return t, omega_phase / (s * t)


def var_omega_ghz_optimal(F, k, n, m, gamma, eta, T):
    """Variance at the optimal operating point: e (2 gamma + eta) / (c0^2 n T)."""
    r = 2 * gamma + eta
    if r <= 0:
        raise DomainError("2 gamma + eta must be positive")
    if T <= 0:
        raise DomainError("T must be positive")
    lc, _ = log_contrast0(F, k, n / m)
    return float(np.exp(1 + np.log(r) - 2 * lc - np.log(n * T)))


def log_crossing_time(F, k, n, m, xi2):
    """log of the scaled crossing time s c0^2 xi2 / e."""
    s = n / m
    lc, _ = log_contrast0(F, k, s)
    return np.log(s) + 2 * lc + np.log(xi2) - 1


def crossing_time(F, k, n, m, xi2, gamma=None, eta=None):
    """Scaled crossing time n (2 gamma + eta) t_cross / m.

    Expanded: n F^2 k^(2s-4) (F (2k)^s - k)^2 xi2 / (e m (2^s - 1)^2), s = n/m.
    GHZ Ramsey beats the noiseless OAT bound at its optimum iff this is >= 1.
    The rates cancel in the scaled form; they are accepted for symmetry with
    crossing_time_raw.
    """
    if min(n, m, xi2) <= 0:
        raise DomainError("n, m and xi2 must be positive")
    return float(np.exp(log_crossing_time(F, k, n, m, xi2)))


def crossing_time_expanded(F, k, n, m, xi2):
    """Crossing time straight from the expanded expression (log domain)."""
    s = n / m
    lx = log_abs_diff_exp(np.log(F) + s * np.log(2 * k), np.log(k))
    lv = (np.log(n) + 2 * np.log(F) + (2 * s - 4) * np.log(k) + 2 * lx + np.log(xi2)
          - 1 - np.log(m) - 2 * log_pow2_minus(s))
    return float(np.exp(lv))


def crossing_time_raw(F, k, n, m, xi2, gamma, eta):
    """Unscaled t_cross in the time units of the rates."""
    r = 2 * gamma + eta
    if r <= 0:
        raise DomainError("2 gamma + eta must be positive")
    return crossing_time(F, k, n, m, xi2) * m / (n * r)


@dataclass(frozen=True)
class CrossingRow:
    m: int
    scaled_cross_time: float
    advantage: bool


def crossing_table(F, k, n, m_list, xi2):
    return [CrossingRow(int(m), c, c >= 1) for m in m_list for c in [crossing_time(F, k, n, m, xi2)]]


def ramsey_information(F, k, n, m, gamma, eta, t, T):
    """Best Ramsey information 1/Var over the phase at a fixed cycle time t."""
    s = n / m
    lc, _ = log_contrast0(F, k, s)
    return float(np.exp(2 * lc - s * (2 * gamma + eta) * t) * s * s * t * T * m)


__all__ = [
    "SqueezingState", "RamseyScenario", "xi_s_squared", "dxi_dphi", "minimize_xi_s", "var_omega_oat",
    "log_contrast0", "p0_ghz", "var_omega_ghz", "var_omega_ghz_propagation", "optimal_operating_point",
    "var_omega_ghz_optimal", "crossing_time", "crossing_time_expanded", "crossing_time_raw",
    "crossing_table", "CrossingRow", "ramsey_information",
]
