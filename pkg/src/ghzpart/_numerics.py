"""Small log-domain helpers shared by the closed-form modules."""

import numpy as np

LN2 = np.log(2.0)

# powers with exponents above this go through exp/log
DIRECT_MAX_EXPONENT = 50.0


def log1mexp(x):
    """log(1 - exp(x)) for x <= 0, accurate near both ends."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > -LN2, np.log(-np.expm1(x)), np.log1p(-np.exp(x)))
    return out[()] if out.ndim == 0 else out


def log_abs_diff_exp(a, b):
    """log|exp(a) - exp(b)|; -inf when a == b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    hi = np.maximum(a, b)
    lo = np.minimum(a, b)
    with np.errstate(invalid="ignore"):
        d = np.where(np.isneginf(hi), -np.inf, lo - hi)
    out = hi + log1mexp(np.minimum(d, 0.0))
    out = np.where(np.isneginf(hi), -np.inf, out)
    return out[()] if out.ndim == 0 else out


def log_pow2_minus(s, c=1.0):
    """log(2**s - c) for 2**s > c (c = 1 or 2 in practice)."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        out = s * LN2 + log1mexp(np.log(c) - s * LN2)
    return out[()] if np.ndim(out) == 0 else out


def signed_logsumexp(logs, signs):
    """Return (log|sum|, sign) of sum_i signs[i] * exp(logs[i]) along axis 0."""
    logs = np.asarray(logs, dtype=float)
    signs = np.asarray(signs, dtype=float)
    m = np.max(logs, axis=0)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(over="ignore"):
        tot = np.sum(signs * np.exp(logs - m), axis=0)
    with np.errstate(divide="ignore"):
        return m + np.log(np.abs(tot)), np.sign(tot)
