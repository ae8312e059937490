"""Static noise parameters and the elementary probabilities they induce.

F is the initialization fidelity, k the fidelity of each entangling gate,
p the survival probability of a sensor and q the probability that a sensor
is not phase flipped.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from ._numerics import DIRECT_MAX_EXPONENT, LN2, log_abs_diff_exp, log_pow2_minus


class DomainError(ValueError):
    """Raised when a parameter lies outside its physical range."""


def _check_fidelity(name, x):
    if not np.all((np.asarray(x) > 0) & (np.asarray(x) <= 1)):
        raise DomainError(f"{name} must lie in (0, 1], got {x}")


def _check_prob(name, x, lo=0.0, hi=1.0):
    if not np.all((np.asarray(x) >= lo) & (np.asarray(x) <= hi)):
        raise DomainError(f"{name} must lie in [{lo}, {hi}], got {x}")


def _check_n(n, integer=False):
    if not np.all(np.asarray(n) >= 1):
        raise DomainError(f"n must be >= 1, got {n}")
    if integer and not np.all(np.asarray(n) == np.round(n)):
        raise DomainError(f"n must be an integer, got {n}")


@dataclass(frozen=True)
class NoiseParams:
    F: float = 1.0
    k: float = 1.0
    p: float = 1.0
    q: float = 1.0

    def __post_init__(self):
        _check_fidelity("F", self.F)
        _check_fidelity("k", self.k)
        _check_prob("p", self.p)
        _check_prob("q", self.q, 0.5, 1.0)


@dataclass(frozen=True)
class RateParams:
    eta: float = 0.0
    gamma: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        for name in ("eta", "gamma"):
            v = getattr(self, name)
            if not v >= 0:
                raise DomainError(f"{name} must be non-negative, got {v}")
        if not np.isfinite(self.omega):
            raise DomainError(f"omega must be finite, got {self.omega}")

    @property
    def total(self):
        """Combined decay rate 2*gamma + eta."""
        return 2.0 * self.gamma + self.eta


def log_ghz_fidelity(F, k, n):
    return (np.asarray(n, dtype=float) - 1.0) * np.log(k) + np.log(F)


def ghz_fidelity(F, k, n):
    """Fidelity k**(n-1) * F of an n-qubit GHZ state built with n-1 gates."""
    _check_fidelity("F", F)
    _check_fidelity("k", k)
    _check_n(n)
    return np.exp(log_ghz_fidelity(F, k, n))


def log_visibility(F, k, n):
    """Return (log|V|, sign V) for the depolarized GHZ visibility."""
    n = np.asarray(n, dtype=float)
    la = n * LN2 + log_ghz_fidelity(F, k, n)  # log(2^n F(n))
    num = log_abs_diff_exp(la, 0.0)
    sign = np.sign(la)
    return num - log_pow2_minus(n), sign


def visibility(F, k, n):
    """V(n) = (2^n F(n) - 1) / (2^n - 1), weight of the pure GHZ component."""
    _check_fidelity("F", F)
    _check_fidelity("k", k)
    _check_n(n)
    if np.all(np.asarray(n) <= DIRECT_MAX_EXPONENT):
        N = 2.0 ** np.asarray(n, dtype=float)
        return (N * ghz_fidelity(F, k, n) - 1.0) / (N - 1.0)
    lv, sign = log_visibility(F, k, n)
    return sign * np.exp(lv)


def no_flip_survival(q, n):
    """Probability that an even number of n qubits got phase flipped."""
    _check_prob("q", q, 0.5, 1.0)
    _check_n(n)
    return 0.5 * (1.0 + (2.0 * np.asarray(q, dtype=float) - 1.0) ** np.asarray(n, dtype=float))


def even_binomial_sum(q, n):
    """Literal sum over even flip counts; kept as an independent check."""
    _check_prob("q", q)
    _check_n(n, integer=True)
    n = int(n)
    if n > 60:
        raise OverflowError("even_binomial_sum is limited to n <= 60")
    return sum(comb(n, j) * q ** (n - j) * (1.0 - q) ** j for j in range(0, n + 1, 2))


def loss_eigenvalue_shift(p, n):
    """delta_lambda = [(1+p)^n - (2p)^n] / 2^(n+1).

    This keeps the convention that every loss pattern leaves 2^-(m+1) on the
    GHZ projector, including the all-lost pattern.
    """
    _check_prob("p", p)
    _check_n(n)
    n = np.asarray(n, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.all(n <= DIRECT_MAX_EXPONENT):
        return ((1.0 + p) ** n - (2.0 * p) ** n) / 2.0 ** (n + 1)
    with np.errstate(divide="ignore"):
        lg = log_abs_diff_exp(n * np.log1p(p), n * np.log(2.0 * p))
    return np.exp(lg - (n + 1) * LN2)


def survival_prob(eta, t):
    """p(t) = exp(-eta t)."""
    if eta < 0 or np.any(np.asarray(t) < 0):
        raise DomainError("eta and t must be non-negative")
    return np.exp(-eta * np.asarray(t, dtype=float))


def dephasing_no_flip(gamma, t):
    """q(t) = (1 + exp(-gamma t)) / 2."""
    if gamma < 0 or np.any(np.asarray(t) < 0):
        raise DomainError("gamma and t must be non-negative")
    return 0.5 * (1.0 + np.exp(-gamma * np.asarray(t, dtype=float)))


def hypergeometric_form(q, n):
    """q^n * 2F1(1/2 - n/2, -n/2; 1/2; ((1-q)/q)^2), defined for real n."""
    from scipy.special import hyp2f1

    z = ((1.0 - q) / q) ** 2
    return q**n * hyp2f1(0.5 - n / 2.0, -n / 2.0, 0.5, z)
