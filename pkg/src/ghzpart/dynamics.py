"""QFI for frequency estimation as the probe evolves in time.

The frequency QFI after an evolution of duration t is t^2 times the phase
QFI of the static model evaluated at p = exp(-eta t) and
q = (1 + exp(-gamma t)) / 2.  Sensors are split equally into m groups and
n/m is treated as a real number.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import golden

from .allocator import Unbounded
from .noise_models import DomainError, NoiseParams, RateParams, dephasing_no_flip, survival_prob
from .qfi_core import COMBINED, DEPHASING, LOSS1, LOSS2, QfiValue, log_qfi, normalize_scenario, qfi_value

DYNAMIC_SCENARIOS = (LOSS1, LOSS2, DEPHASING, COMBINED)


@dataclass(frozen=True)
class DynamicsScenario:
    scenario: str
    F: float = 1.0
    k: float = 1.0
    n: float = 1.0
    m: float = 1.0
    eta: float = 0.0
    gamma: float = 0.0
    model: str = "exact"  # loss-without-detection model, see qfi_core

    def __post_init__(self):
        sc = normalize_scenario(self.scenario)
        if sc not in DYNAMIC_SCENARIOS:
            raise DomainError(f"dynamics scenario must be one of {DYNAMIC_SCENARIOS}")
        object.__setattr__(self, "scenario", sc)
        NoiseParams(self.F, self.k)
        RateParams(self.eta, self.gamma)
        if not 1 <= self.m <= self.n:
            raise DomainError("need 1 <= m <= n")

    @property
    def detection(self):
        return self.scenario != LOSS1

    @property
    def s(self):
        return self.n / self.m

    @property
    def rate(self):
        """The decay rate that sets the natural time unit of the scenario."""
        if self.scenario in (LOSS1, LOSS2):
            return self.eta
        if self.scenario == DEPHASING:
            return self.gamma
        return 2 * self.gamma + self.eta

    def probs(self, t):
        """(p(t), q(t)) seen by this scenario; unused channels stay at 1."""
        p = survival_prob(self.eta, t) if self.scenario in (LOSS1, LOSS2, COMBINED) else 1.0
        q = dephasing_no_flip(self.gamma, t) if self.scenario in (DEPHASING, COMBINED) else 1.0
        return p, q


def qfi_t(sc: DynamicsScenario, t):
    """Frequency QFI t^2 * m * QFI(n/m) at time t (same path as the static QFI)."""
    if t < 0:
        raise DomainError("t must be non-negative")
    if t == 0:
        return QfiValue(0.0, -np.inf, sc.scenario, extra={"kind": "frequency"})
    p, q = sc.probs(t)
    static = sc.m * qfi_value(sc.scenario, sc.F, sc.k, float(p), float(q), sc.s, sc.model)
    return QfiValue.from_value(t * t * static, scenario=sc.scenario, extra={"kind": "frequency", "t": t})


def log_qfi_t(sc: DynamicsScenario, t):
    """Vectorised log of qfi_t over an array of times."""
    t = np.asarray(t, dtype=float)
    p, q = sc.probs(t)
    with np.errstate(divide="ignore"):
        return 2 * np.log(t) + np.log(sc.m) + log_qfi(sc.scenario, sc.F, sc.k, p, q, sc.s, sc.model)


def peak_time_closed(sc: DynamicsScenario):
    """Closed-form peak time of qfi_t.

    Exact for detected loss, dephasing and the combination; for undetected
    loss it is a first-order small-time approximation.
    """
    n, m, F, k = sc.n, sc.m, sc.F, sc.k
    if sc.rate == 0:
        raise Unbounded("no decay: the QFI grows as t^2 without a peak")
    if sc.scenario == LOSS2:
        return 2 * m / (n * sc.eta)
    if sc.scenario == DEPHASING:
        return m / (n * sc.gamma)
    if sc.scenario == COMBINED:
        return 2 * m / (n * (2 * sc.gamma + sc.eta))
    s = n / m
    ks = k**s
    root = np.sqrt(4 * F * F * m * m * k ** (2 * s) + 4 * F * (2 * n - m) * n * k ** ((m + n) / m) + k * k * n * n)
    x = 2 * m / n * (k * n - 2 * F * (2 * n + m) * ks + root) / (4 * (k * n - ks * F * (n + m)))
    return x / sc.eta


def _maximize(f_log, lo, hi, npts=400):
    """Golden-section maximisation of a log objective seeded by a log grid."""
    grid = np.geomspace(lo, hi, npts)
    vals = f_log(grid)
    i = int(np.argmax(vals))
    if i == 0 or i == npts - 1:
        return float(grid[i])  # maximum sits on the search boundary
    x = golden(lambda t: -float(f_log(t)), brack=(grid[i - 1], grid[i], grid[i + 1]), tol=1e-12)
    return float(x)


def peak_time_numeric(sc: DynamicsScenario, hi=None):
    """Maximiser of qfi_t on (0, hi], hi defaults to 10x the closed form."""
    t0 = peak_time_closed(sc)
    hi = hi or 10 * t0
    return _maximize(lambda t: log_qfi_t(sc, t), hi * 1e-6, hi)


@dataclass(frozen=True)
class PeakReport:
    closed_form: float
    numeric: float
    rel_diff: float
    qfi_at_numeric: QfiValue


def peak_time(sc: DynamicsScenario):
    """Closed-form peak time next to its golden-section refinement."""
    c = peak_time_closed(sc)
    x = peak_time_numeric(sc)
    return PeakReport(c, x, abs(c - x) / x, qfi_t(sc, x))


@dataclass(frozen=True)
class PeakQfi:
    t_star: float
    exact: float
    approx: float


def peak_qfi_combined(F, k, n, m, gamma, eta):
    """Peak of the combined (detected loss + dephasing) QFI.

    The approximation 4 F k^(n/m) m / (e^2 k (2 gamma + eta)^2) keeps only
    the leading exponential terms.
    """
    r = 2 * gamma + eta
    if r <= 0:
        raise Unbounded("2 gamma + eta must be positive")
    sc = DynamicsScenario(COMBINED, F, k, n, m, eta, gamma)
    t = peak_time_closed(sc)
    approx = 4 * F * k ** (n / m) * m / (np.e**2 * k * r * r)
    return PeakQfi(t, qfi_t(sc, t).value, float(approx))


def short_time_slope(F, k, n, m):
    """Coefficient c of dQFI/dt ~ c t as t -> 0: (2F/k) k^(n/m) n^2 / m."""
    return 2 * F / k * k ** (n / m) * n * n / m


def short_time_slope_exact(F, k, n, m):
    """Exact coefficient 2 m QFI(n/m) of the same limit."""
    return 2 * m * qfi_value("state_prep", F, k, 1.0, 1.0, n / m)


def qfi_per_time(sc: DynamicsScenario, t):
    """QFI per unit evolution time; 0 at t = 0."""
    if t == 0:
        return 0.0
    return qfi_t(sc, t).value / t


def per_time_peak_closed(F, k, n, m, gamma, eta):
    """(t~*, approximate peak of QFI/t) for the combined scenario."""
    r = 2 * gamma + eta
    if r <= 0:
        raise Unbounded("2 gamma + eta must be positive")
    return m / (n * r), F * k ** (n / m) * n / (np.e * k * r)


def optimal_partition_sequential(k, n, gamma, eta, t):
    """m~*(t) = n (2 gamma + eta) t - n ln k."""
    return n * (2 * gamma + eta) * t - n * np.log(k)


def _log_info_rate(F, k, n, m, r, t):
    """log of QFI(t)/t for the combined scenario with rate r = 2 gamma + eta."""
    m = np.asarray(m, dtype=float)
    t = np.asarray(t, dtype=float)
    s = n / m
    return np.log(t) + np.log(m) - s * r * t + log_qfi("state_prep", F, k, 1.0, 1.0, s)


@dataclass(frozen=True)
class SequentialPlan:
    m: int
    t: float
    info: float  # T * QFI(t) / t
    m_tilde: Optional[float]
    info_limit: float  # F n T / (e (2 gamma + eta))
    notes: dict = field(default_factory=dict)


def sequential_plan(F, k, n, gamma, eta, T, t_th=None, m_fixed=None):
    """Best (m, t) for repeated cycles within a total time T.

    For each m the per-cycle time is min(t_th, m / (n r)), the maximiser of
    QFI(t)/t below the cap.  Candidates are scanned over 1..min(n, 4 m~* + 3).
    """
    r = 2 * gamma + eta
    if r <= 0:
        raise Unbounded("2 gamma + eta must be positive")
    if T <= 0 or (t_th is not None and t_th <= 0):
        raise DomainError("T and t_th must be positive")
    NoiseParams(F, k)
    m_tilde = optimal_partition_sequential(k, n, gamma, eta, t_th) if t_th is not None else None
    if m_fixed is not None:
        ms = np.array([int(m_fixed)])
    elif t_th is None:
        ms = np.arange(1, int(n) + 1)
    else:
        hi = int(min(n, np.ceil(4 * m_tilde) + 3))
        ms = np.arange(1, max(hi, 1) + 1)
    t_free = ms / (n * r)
    ts = t_free if t_th is None else np.minimum(t_th, t_free)
    vals = _log_info_rate(F, k, n, ms, r, ts)
    i = int(np.argmax(vals))
    return SequentialPlan(int(ms[i]), float(ts[i]), float(T * np.exp(vals[i])), m_tilde,
                          float(F * n * T / (np.e * r)), {"ladder_l": None if t_th is None else int(np.floor(n * r * t_th))})


def monolithic_sequential_limit(F, k, gamma, eta, T, n_max=None):
    """Best info with m = 1, optimising n: returns (n, info, approx).

    approx = -F T / (e^2 k ln k (2 gamma + eta)).
    """
    r = 2 * gamma + eta
    lk = np.log(k)
    if lk == 0:
        raise Unbounded("k = 1: the monolithic information grows without bound")
    n_max = n_max or int(np.ceil(-20 / lk))
    ns = np.arange(1, n_max + 1, dtype=float)
    lv = log_qfi("state_prep", F, k, 1.0, 1.0, ns) - 1 - np.log(ns * r)
    i = int(np.argmax(lv))
    return int(ns[i]), float(T * np.exp(lv[i])), float(-F * T / (np.e**2 * k * lk * r))


def detection_gap_formula(F, k, n, m, eta, t):
    """QFI_loss2(t) / QFI_loss1(t) - 1 in closed form (for the published loss model)."""
    s = n / m
    return k * (1 - 2.0**-s) * ((1 + np.exp(eta * t)) ** s - 2.0**s) / (F * (2.0**s - 2) * k**s + k)
