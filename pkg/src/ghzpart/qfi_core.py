"""Closed-form quantum Fisher information for noisy GHZ probes.

Every scenario is available in two flavours: a vectorised log-domain
function (``log_qfi``) used by scans and optimizers, and scalar wrappers
returning a ``QfiValue``.  Small exponents use direct float arithmetic so
that, e.g., the ideal GHZ state gives exactly n**2.

Loss without detection has two models:

* ``"exact"`` (default): lost qubits are replaced by I/2 and every loss
  pattern is weighted exactly.  This is what the brute-force oracle in
  :mod:`ghzpart.spectrum_oracle` produces.
* ``"published"``: the published closed form, whose loss term assigns weight
  2^-(j+1) to the GHZ projector for every pattern with j lost qubits and
  ignores the mixed part of the prepared state.  The approximations for
  optimal sizes, detection advantage and peak times were derived from it.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._numerics import DIRECT_MAX_EXPONENT, LN2, log1mexp, log_abs_diff_exp, log_pow2_minus, signed_logsumexp
from .noise_models import DomainError, NoiseParams, log_ghz_fidelity, log_visibility, visibility

STATE_PREP = "state_prep"
LOSS1 = "loss1"
LOSS2 = "loss2"
DEPHASING = "dephasing"
COMBINED = "combined"
SCENARIOS = (STATE_PREP, LOSS1, LOSS2, DEPHASING, COMBINED)
LOSS1_MODELS = ("exact", "published")

_ALIASES = {
    "state-prep": STATE_PREP, "stateprep": STATE_PREP, "sp": STATE_PREP,
    "loss-1": LOSS1, "loss-2": LOSS2, "dp": DEPHASING, "dephase": DEPHASING,
}


def normalize_scenario(s):
    s = str(s).lower()
    s = _ALIASES.get(s, s)
    if s not in SCENARIOS:
        raise DomainError(f"unknown scenario {s!r}; expected one of {SCENARIOS}")
    return s


def _check_model(model):
    if model not in LOSS1_MODELS:
        raise DomainError(f"unknown loss model {model!r}; expected one of {LOSS1_MODELS}")


@dataclass(frozen=True)
class Allocation:
    """n sensors split into sub-ensembles of the given sizes."""

    n: int
    m: int
    sizes: tuple

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise DomainError("n and m must be positive")
        if len(self.sizes) != self.m or sum(self.sizes) != self.n:
            raise DomainError(f"sizes {self.sizes} do not sum to n={self.n} in m={self.m} parts")
        if any(int(x) != x or x < 1 for x in self.sizes):
            raise DomainError("sizes must be positive integers")

    @classmethod
    def equal(cls, n, m):
        """Sizes differ by at most one: n mod m parts get the ceiling."""
        n, m = int(n), int(m)
        if not 1 <= m <= n:
            raise DomainError(f"need 1 <= m <= n, got n={n}, m={m}")
        lo, extra = divmod(n, m)
        return cls(n, m, tuple([lo] * (m - extra) + [lo + 1] * extra))

    @classmethod
    def from_sizes(cls, sizes):
        sizes = tuple(int(x) for x in sizes)
        return cls(sum(sizes), len(sizes), sizes)


@dataclass(frozen=True)
class QfiValue:
    """A non-negative QFI with its natural log (-inf encodes zero)."""

    value: float
    log_value: float
    scenario: str = STATE_PREP
    params: Optional[NoiseParams] = None
    allocation: Optional[Allocation] = None
    extra: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_log(cls, log_value, **kw):
        log_value = float(log_value)
        return cls(float(np.exp(log_value)), log_value, **kw)

    @classmethod
    def from_value(cls, value, **kw):
        value = float(value)
        with np.errstate(divide="ignore"):
            return cls(value, float(np.log(value)) if value > 0 else -np.inf, **kw)

    def __float__(self):
        return self.value


# ------------------------------------------------------------ log-domain forms

def _log_lambda_sum(F, k, s):
    """log(lambda_+ + lambda_-) of the GHZ pair, = log[(k + F(2^s-2)k^s) / (k(2^s-1))]."""
    lk = np.log(k)
    with np.errstate(divide="ignore"):
        t2 = np.log(F) + log_pow2_minus(s, 2.0) + s * lk
    return np.logaddexp(lk, t2) - lk - log_pow2_minus(s)


def log_qfi_state_prep(F, k, s):
    s = np.asarray(s, dtype=float)
    lk = np.log(k)
    # |F(2k)^s - k|, without forming (2k)^s
    lx = log_abs_diff_exp(np.log(F) + s * np.log(2.0 * k), lk)
    with np.errstate(divide="ignore"):
        t2 = np.log(F) + log_pow2_minus(s, 2.0) + s * lk
        return 2 * lx + 2 * np.log(s) - lk - log_pow2_minus(s) - np.logaddexp(lk, t2)


def log_qfi_loss1_exact(F, k, p, s):
    s = np.asarray(s, dtype=float)
    p = np.asarray(p, dtype=float)
    lv, sv = log_visibility(F, k, s)
    with np.errstate(divide="ignore"):
        lp = np.log(p)
        lq = np.log1p(-p)
        # 1 - V = 2^s (1 - F(s)) / (2^s - 1)
        l1mv = s * LN2 + log1mexp(log_ghz_fidelity(F, k, s)) - log_pow2_minus(s)
    la = np.logaddexp(s * np.log1p(p), s * lq)
    ld, _ = signed_logsumexp(
        np.stack(np.broadcast_arrays(lv + la, LN2 + l1mv)),
        np.stack(np.broadcast_arrays(sv * np.ones_like(la), np.ones_like(la))),
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 2 * np.log(s) + 2 * lv + 2 * s * lp + s * LN2 - ld
    return np.where(np.isneginf(lp) | np.isneginf(lv), -np.inf, out)


def log_qfi_loss1_published(F, k, p, s):
    s = np.asarray(s, dtype=float)
    p = np.asarray(p, dtype=float)
    lv, _ = log_visibility(F, k, s)
    with np.errstate(divide="ignore"):
        lp = np.log(p)
        ldelta = log_abs_diff_exp(s * np.log1p(p), s * np.log(2.0 * p)) - s * LN2
    ld = np.logaddexp(s * lp + _log_lambda_sum(F, k, s), ldelta)
    with np.errstate(invalid="ignore"):
        out = 2 * np.log(s) + 2 * lv + 2 * s * lp - ld
    return np.where(np.isneginf(lp) | np.isneginf(lv), -np.inf, out)


def _log_dephasing_factor(q, s):
    with np.errstate(divide="ignore"):
        return 2 * np.asarray(s, dtype=float) * np.log(np.abs(2.0 * np.asarray(q, dtype=float) - 1.0))


def log_qfi(scenario, F=1.0, k=1.0, p=1.0, q=1.0, s=1.0, model="exact"):
    """Vectorised log QFI of a single sub-ensemble of (real) size s."""
    scenario = normalize_scenario(scenario)
    s = np.asarray(s, dtype=float)
    if scenario == STATE_PREP:
        return log_qfi_state_prep(F, k, s)
    if scenario == LOSS1:
        _check_model(model)
        return (log_qfi_loss1_exact if model == "exact" else log_qfi_loss1_published)(F, k, p, s)
    with np.errstate(divide="ignore"):
        lp = s * np.log(p)
    if scenario == LOSS2:
        return lp + log_qfi_state_prep(F, k, s)
    if scenario == DEPHASING:
        return _log_dephasing_factor(q, s) + log_qfi_state_prep(F, k, s)
    return lp + _log_dephasing_factor(q, s) + log_qfi_state_prep(F, k, s)


def log_qfi_partitioned(scenario, F=1.0, k=1.0, p=1.0, q=1.0, n=1.0, m=1.0, model="exact"):
    """log of m * QFI(n/m): the continuous equal split."""
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    return np.log(m) + log_qfi(scenario, F, k, p, q, n / m, model)


# ------------------------------------------------------------- direct forms

def _direct_state_prep(F, k, s):
    x = F * (2.0 * k) ** s - k
    N = 2.0**s
    return s * s * (x / (k * (N - 1.0))) * (x / (k + F * (N - 2.0) * k**s))


def _direct_loss1_exact(F, k, p, s):
    V = visibility(F, k, s)
    N = 2.0**s
    den = V * ((1.0 + p) ** s + (1.0 - p) ** s) + 2.0 * (1.0 - V)
    return s * s * V * V * p ** (2 * s) * N / den


def _direct_loss1_published(F, k, p, s):
    V = visibility(F, k, s)
    N = 2.0**s
    lam_sum = (k + F * (N - 2.0) * k**s) / (k * (N - 1.0))
    den = p**s * lam_sum + ((1.0 + p) ** s - (2.0 * p) ** s) / N
    return s * s * V * V * p ** (2 * s) / den


def _validate(F, k, p, q, s):
    NoiseParams(F, k, p, q)
    if s < 1:
        raise DomainError(f"sub-ensemble size must be >= 1, got {s}")


def qfi_value(scenario, F=1.0, k=1.0, p=1.0, q=1.0, s=1.0, model="exact"):
    """Scalar QFI of one sub-ensemble, direct arithmetic when s is small."""
    scenario = normalize_scenario(scenario)
    _validate(F, k, p, q, s)
    if s > DIRECT_MAX_EXPONENT:
        return float(np.exp(log_qfi(scenario, F, k, p, q, s, model)))
    if scenario == LOSS1:
        _check_model(model)
        if p == 0:
            return 0.0
        return float(_direct_loss1_exact(F, k, p, s) if model == "exact" else _direct_loss1_published(F, k, p, s))
    v = _direct_state_prep(F, k, s)
    if scenario in (LOSS2, COMBINED):
        v *= p**s
    if scenario in (DEPHASING, COMBINED):
        v *= (2.0 * q - 1.0) ** (2 * s)
    return float(v)


def _wrap(scenario, F, k, p, q, s, model, alloc=None):
    v = qfi_value(scenario, F, k, p, q, s, model)
    return QfiValue.from_value(v, scenario=normalize_scenario(scenario), params=NoiseParams(F, k, p, q),
                               allocation=alloc, extra={"model": model} if normalize_scenario(scenario) == LOSS1 else {})


# ------------------------------------------------------------- public scalars

def qfi_state_prep(F, k, n):
    """QFI of a depolarized n-qubit GHZ state; equals n**2 for F = k = 1."""
    return _wrap(STATE_PREP, F, k, 1.0, 1.0, n, "exact")


def qfi_loss_no_detection(F, k, p, n, model="exact"):
    """QFI when lost sensors are not detected (each replaced by I/2)."""
    return _wrap(LOSS1, F, k, p, 1.0, n, model)


def qfi_loss_with_detection(F, k, p, n):
    """Post-selected loss: p**n times the state-preparation QFI."""
    return _wrap(LOSS2, F, k, p, 1.0, n, "exact")


def qfi_dephasing(F, k, q, n):
    """(2q-1)**(2n) times the state-preparation QFI; zero at q = 1/2."""
    return _wrap(DEPHASING, F, k, 1.0, q, n, "exact")


def qfi_combined(F, k, p, q, n):
    """Detected loss together with dephasing."""
    return _wrap(COMBINED, F, k, p, q, n, "exact")


def qfi_partitioned(scenario, params: NoiseParams, alloc: Allocation, continuous=False, model="exact"):
    """Sum of sub-ensemble QFIs.

    With ``continuous=True`` the equal split m * QFI(n/m) is used instead
    of the integer sizes (the form used when n/m is treated as real).
    """
    scenario = normalize_scenario(scenario)
    F, k, p, q = params.F, params.k, params.p, params.q
    if continuous:
        v = alloc.m * qfi_value(scenario, F, k, p, q, alloc.n / alloc.m, model)
    else:
        # group equal sizes so [n] reproduces the monolithic value exactly
        sizes, counts = np.unique(alloc.sizes, return_counts=True)
        v = sum(int(c) * qfi_value(scenario, F, k, p, q, float(sz), model) for sz, c in zip(sizes, counts))
    return QfiValue.from_value(v, scenario=scenario, params=params, allocation=alloc,
                               extra={"model": model, "continuous": continuous})


# ------------------------------------------------------------ detection ratio

@dataclass(frozen=True)
class DetectionRatio:
    exact: float
    approx: float
    approx_high_loss: float
    model: str


def loss_detection_ratio(F, k, p, n, m=1, model="exact"):
    """QFI with loss detection over QFI without, for n sensors in m parts.

    ``approx`` is 1 + (k/F) k^-s [((1+p)/(2p))^s - 1] and
    ``approx_high_loss`` drops the -1, with s = n/m.  Both approximate
    the ``"published"`` loss model.
    """
    _check_model(model)
    NoiseParams(F, k, p, 1.0)
    s = n / m
    if p == 1:
        return DetectionRatio(1.0, 1.0, 1.0 + k / F * k**-s, model)
    l2 = log_qfi(LOSS2, F, k, p, 1.0, s)
    l1 = log_qfi(LOSS1, F, k, p, 1.0, s, model)
    exact = float(np.exp(l2 - l1))
    lr = s * (np.log1p(p) - np.log(2 * p))  # log((1+p)/(2p))^s
    approx = 1.0 + k / F * float(np.exp(-s * np.log(k)) * np.expm1(lr))
    approx_hl = 1.0 + k / F * float(np.exp(lr - s * np.log(k)))
    return DetectionRatio(exact, approx, approx_hl, model)


def low_loss_ratio_expansion(F, k, n, m=1, order=2):
    """Coefficients (1, c1, c2) of the ratio expanded in (1 - p)."""
    s = n / m
    pref = k * n * np.expm1(s * LN2) / (k + F * (2.0**s - 2.0) * k**s) if s <= 1000 else \
        float(np.exp(np.log(k * n) + log_pow2_minus(s) - np.logaddexp(np.log(k), np.log(F) + log_pow2_minus(s, 2.0) + s * np.log(k))))
    c1 = float(pref / (2.0 * m))
    c2 = float(pref * (3.0 * m + n) / (8.0 * m * m))
    if order == 1:
        return (1.0, c1)
    return (1.0, c1, c2)


def eval_expansion(coeffs, p):
    x = 1.0 - np.asarray(p, dtype=float)
    return sum(c * x**i for i, c in enumerate(coeffs))
