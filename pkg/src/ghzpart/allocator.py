"""How many sensors per GHZ state, and how many GHZ states.

Closed-form optima come from setting the derivative of the large-n
approximation QFI ~ m (n/m)^2 F k^(n/m - 1) to zero; every closed form
here is an approximation and is reported next to an exhaustive integer
search of the exact QFI.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .noise_models import DomainError, NoiseParams
from .qfi_core import (COMBINED, DEPHASING, LOSS1, LOSS2, STATE_PREP, Allocation, QfiValue,
                       log_qfi, normalize_scenario, qfi_partitioned)


class Unbounded(DomainError):
    """The optimum runs off to infinity (no noise in the relevant channel)."""


def log_rate(scenario, params: NoiseParams):
    """Effective log-decay per sensor: ln k, plus ln p and/or 2 ln(2q-1)."""
    scenario = normalize_scenario(scenario)
    L = np.log(params.k)
    if scenario in (LOSS2, COMBINED):
        L += np.log(params.p) if params.p > 0 else -np.inf
    if scenario in (DEPHASING, COMBINED):
        L += 2 * np.log(2 * params.q - 1) if params.q > 0.5 else -np.inf
    if scenario == LOSS1:
        raise DomainError("loss1 has no explicit closed form; use opt_implicit_loss1")
    return float(L)


def opt_n_closed(scenario, params: NoiseParams, m=1):
    """Approximate optimal total size at fixed m: -2m / L."""
    L = log_rate(scenario, params)
    if L == 0:
        raise Unbounded("all error parameters equal 1: the optimal n is unbounded")
    return -2.0 * m / L


def opt_m_closed(scenario, params: NoiseParams, n):
    """Approximate optimal number of partitions at fixed n: -n L."""
    L = log_rate(scenario, params)
    if L == 0:
        raise Unbounded("all error parameters equal 1: monolithic is optimal, m* -> 0")
    return -n * L


def implicit_loss1_residual(x, which, params: NoiseParams, fixed):
    """First-order condition for undetected loss, divided by k(1+p)^(n/m).

    ``which='n'``: x is n, fixed is m, bracket coefficient c = 2.
    ``which='m'``: x is m, fixed is n, c = 1.
    """
    F, k, p = params.F, params.k, params.p
    if which == "n":
        n, m, c = x, fixed, 2.0
    elif which == "m":
        n, m, c = fixed, x, 1.0
    else:
        raise DomainError("which must be 'n' or 'm'")
    s = n / m
    lp, lk = np.log(p), np.log(k)
    l1p = np.log1p(p)
    a = F / k * np.exp(s * (np.log(2 * k * p) - l1p))
    b = np.exp(s * (np.log(2 * p) - l1p))
    return (a * (c * m + n * (lk + lp))
            - b * (c * m + n * (2 * lk + lp))
            + (c * m + n * (np.log(2.0) + 2 * lk + 2 * lp - l1p)))


def opt_implicit_loss1(which, params: NoiseParams, fixed, xtol=1e-12):
    """Root of the undetected-loss first-order condition by bisection.

    The bracket is [g/10, 10 g] around the detected-loss closed form g.
    """
    if which == "n":
        guess = opt_n_closed(LOSS2, params, fixed)
    else:
        guess = opt_m_closed(LOSS2, params, fixed)
    lo, hi = guess / 10.0, guess * 10.0
    f = lambda x: implicit_loss1_residual(x, which, params, fixed)
    flo, fhi = f(lo), f(hi)
    if np.sign(flo) == np.sign(fhi):
        raise DomainError(f"no bracket: residual has the same sign on [{lo}, {hi}]")
    return bisect(f, lo, hi, xtol=xtol * guess, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class OptimumReport:
    which: str
    closed_form: Optional[float]
    integer_optimum: int
    qfi_at_integer: QfiValue
    neighbors: tuple  # (QFI at opt-1, QFI at opt+1); None at a range boundary
    note: str = ""


def _scan_log_qfi(scenario, params, n, m, model, sizes):
    """log QFI for arrays of (n, m); equal continuous split or integer sizes."""
    F, k, p, q = params.F, params.k, params.p, params.q
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    if sizes == "continuous":
        return np.log(m) + log_qfi(scenario, F, k, p, q, n / m, model)
    lo = np.floor(n / m)
    extra = n - lo * m
    l_lo = log_qfi(scenario, F, k, p, q, lo, model)
    l_hi = log_qfi(scenario, F, k, p, q, lo + 1, model)
    with np.errstate(divide="ignore"):
        return np.logaddexp(np.log(m - extra) + l_lo, np.log(extra) + l_hi)


def integer_optimum(scenario, params: NoiseParams, n=None, m=None, which="m", search_range=None,
                    model="exact", sizes="continuous", mode="exhaustive", m_cap=10**5):
    """Exhaustive integer argmax of the partitioned QFI.

    which='m': scan m at fixed n (range 1..min(n, m_cap) by default).
    which='n': scan n at fixed m over ``search_range`` (required).
    Ties go to the smaller value.  ``sizes`` is 'continuous' (m QFI(n/m))
    or 'integer' (sizes differing by at most one).  mode='ternary' is a
    faster search that assumes unimodality.
    """
    scenario = normalize_scenario(scenario)
    if which == "m":
        if n is None:
            raise DomainError("n is required when scanning m")
        lo, hi = search_range or (1, min(int(n), m_cap))
        grid = np.arange(lo, hi + 1)
        fn = lambda x: _scan_log_qfi(scenario, params, n, x, model, sizes)
    elif which == "n":
        if m is None or search_range is None:
            raise DomainError("m and search_range are required when scanning n")
        lo, hi = search_range
        grid = np.arange(max(lo, int(m)), hi + 1)
        fn = lambda x: _scan_log_qfi(scenario, params, x, m, model, sizes)
    else:
        raise DomainError("which must be 'n' or 'm'")

    if mode == "ternary":
        a, b = 0, len(grid) - 1
        while b - a > 2:
            c1 = a + (b - a) // 3
            c2 = b - (b - a) // 3
            if fn(grid[c1]) >= fn(grid[c2]):
                b = c2
            else:
                a = c1
        sub = grid[a:b + 1]
        idx = a + int(np.argmax(fn(sub)))
        vals = None
    else:
        vals = fn(grid)
        idx = int(np.argmax(vals))  # first maximum -> smaller value wins ties
    best = int(grid[idx])

    def at(i):
        if i < 0 or i >= len(grid):
            return None
        lv = vals[i] if vals is not None else fn(grid[i])
        return QfiValue.from_log(lv, scenario=scenario, params=params)

    closed = None
    note = ""
    try:
        if scenario == LOSS1:
            closed = opt_implicit_loss1(which, params, m if which == "n" else n)
            note = "closed form is the root of the implicit first-order condition (approximation)"
        elif which == "m":
            closed = opt_m_closed(scenario, params, n)
        else:
            closed = opt_n_closed(scenario, params, m)
    except Unbounded as e:
        note = f"unbounded: {e}"
    except DomainError as e:
        note = str(e)

    alloc = Allocation.equal(n, best) if which == "m" else Allocation.equal(best, m) if best >= m else None
    qv = at(idx)
    qv = QfiValue(qv.value, qv.log_value, scenario, params, alloc, {"model": model, "sizes": sizes})
    return OptimumReport(which, closed, best, qv, (at(idx - 1), at(idx + 1)), note)


def unequal_partition_qfi(scenario, params: NoiseParams, sizes, model="exact"):
    """Sum of monolithic QFIs over the given sub-ensemble sizes."""
    return qfi_partitioned(scenario, params, Allocation.from_sizes(sizes), model=model)


def concavity_interval(k):
    """Sizes between which the state-prep QFI is concave in n (large-n form)."""
    if not 0 < k < 1:
        raise Unbounded("concavity interval needs 0 < k < 1")
    lk = np.log(k)
    return (-(2 - np.sqrt(2)) / lk, -(2 + np.sqrt(2)) / lk)


def gradient_field(params: NoiseParams, n, m, scenario=STATE_PREP, rel_step=1e-5, model="exact"):
    """(dQFI/dm, dQFI/dn) of m QFI(n/m) by central differences of log QFI."""
    F, k, p, q = params.F, params.k, params.p, params.q

    def lq(nn, mm):
        return float(np.log(mm) + log_qfi(scenario, F, k, p, q, nn / mm, model))

    val = np.exp(lq(n, m))
    hm, hn = rel_step * m, rel_step * n
    dm = (lq(n, m + hm) - lq(n, m - hm)) / (2 * hm)
    dn = (lq(n + hn, m) - lq(n - hn, m)) / (2 * hn)
    return val * dm, val * dn


def continuous_m_optimum(scenario, params: NoiseParams, n, model="exact"):
    """Real m in [1, n] maximising m QFI(n/m), by bounded scalar search."""
    F, k, p, q = params.F, params.k, params.p, params.q
    f = lambda mm: -float(np.log(mm) + log_qfi(scenario, F, k, p, q, n / mm, model))
    grid = np.unique(np.geomspace(1, n, 200))
    vals = [f(x) for x in grid]
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if a == b:
        return float(a)
    res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-10 * b})
    return float(res.x) if res.fun <= vals[i] else float(grid[i])


def continuous_n_optimum(scenario, params: NoiseParams, m=1, n_max=None, model="exact"):
    """Real n >= m maximising m QFI(n/m) at fixed m."""
    F, k, p, q = params.F, params.k, params.p, params.q
    if n_max is None:
        n_max = 20 * opt_n_closed(scenario, params, m)
    f = lambda nn: -float(np.log(m) + log_qfi(scenario, F, k, p, q, nn / m, model))
    grid = np.geomspace(m, n_max, 400)
    vals = [f(x) for x in grid]
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(f, bounds=(a, b), method="bounded", options={"xatol": 1e-10 * b})
    return float(res.x)


@dataclass(frozen=True)
class AdvantageRatios:
    partition_exact: float  # QFI(n, m*) / QFI(n, 1)
    partition_approx: float  # -e^(-nL) / (e n L)
    allocation_exact: float  # QFI(n, m*) / QFI(n*, 1)
    allocation_approx: float  # -e L n / 4
    dqfi_dk_exact: float  # d/dk of QFI(n, m*) at the optimum m*
    dqfi_dk_approx: float  # (1/e)(1 + ln k) / (k^2 ln^2 k) F n
    m_star: float
    n_star: float


def advantage_ratios(scenario, params: NoiseParams, n, model="exact", dk=1e-7):
    """Gains from partitioning at fixed n, and from growing n at the optimum."""
    scenario = normalize_scenario(scenario)
    if scenario == LOSS1:
        raise DomainError("advantage ratios are defined for state_prep, loss2, dephasing, combined")
    L = log_rate(scenario, params)
    if L == 0:
        raise Unbounded("no noise: partitioning gives no advantage and n* is unbounded")
    F, k, p, q = params.F, params.k, params.p, params.q

    def best_log(prm):
        ms = continuous_m_optimum(scenario, prm, n, model)
        return ms, float(np.log(ms) + log_qfi(scenario, prm.F, prm.k, prm.p, prm.q, n / ms, model))

    m_star, l_best = best_log(params)
    l_mono = float(log_qfi(scenario, F, k, p, q, n, model))
    n_star = continuous_n_optimum(scenario, params, 1, model=model)
    l_nstar = float(log_qfi(scenario, F, k, p, q, n_star, model))

    kp, km = min(k + dk, 1.0), k - dk
    up = np.exp(best_log(NoiseParams(F, kp, p, q))[1])
    dn = np.exp(best_log(NoiseParams(F, km, p, q))[1])
    lk = np.log(k)
    return AdvantageRatios(
        partition_exact=float(np.exp(l_best - l_mono)),
        partition_approx=float(np.exp(-n * L - 1 - np.log(n) - np.log(-L))),
        allocation_exact=float(np.exp(l_best - l_nstar)),
        allocation_approx=float(-np.e * L * n / 4),
        dqfi_dk_exact=float((up - dn) / (kp - km)),
        dqfi_dk_approx=float((1 + lk) / (k * k * lk * lk) * F * n / np.e),
        m_star=m_star,
        n_star=n_star,
    )
