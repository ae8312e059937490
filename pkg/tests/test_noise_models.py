import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ghzpart.noise_models import (DomainError, NoiseParams, RateParams, dephasing_no_flip, even_binomial_sum,
                                  ghz_fidelity, hypergeometric_form, log_ghz_fidelity, loss_eigenvalue_shift,
                                  no_flip_survival, survival_prob, visibility)

# extended-precision product 0.999 * 0.995**99 (mpmath, 40 digits)
FID_0999_0995_100 = 0.6082056945268718469108975893445


def test_params_validation():
    NoiseParams(1, 1, 0, 0.5)
    for bad in [dict(F=0), dict(F=1.1), dict(k=-0.1), dict(p=1.2), dict(q=0.4)]:
        with pytest.raises(DomainError):
            NoiseParams(**bad)
    with pytest.raises(DomainError, match="gamma"):
        RateParams(0.1, -1)
    assert RateParams(0.2, 0.4).total == pytest.approx(1.0)


def test_fidelity_examples():
    assert ghz_fidelity(1, 1, 50) == 1
    assert ghz_fidelity(1, 0.99, 3) == pytest.approx(0.9801, rel=1e-15)
    assert ghz_fidelity(0.999, 0.995, 100) == pytest.approx(FID_0999_0995_100, rel=1e-13)


def test_fidelity_log_multiplicative():
    F, k, n1, n2 = 0.97, 0.993, 17, 40
    lhs = log_ghz_fidelity(F, k, n1 + n2 - 1)
    rhs = (n2 - 1) * np.log(k) + log_ghz_fidelity(F, k, n1)
    assert lhs == pytest.approx(rhs, rel=1e-15)


def test_visibility_examples():
    assert visibility(1, 1, 4) == 1
    assert visibility(1, 0.99, 3) == pytest.approx((8 * 0.9801 - 1) / 7, rel=1e-14)
    # F(n) -> 0 leaves the maximally mixed state: V = -1/(2^n - 1)
    assert visibility(1e-300, 1, 5) == pytest.approx(-1 / 31, rel=1e-12)


def test_visibility_direct_and_log_paths_agree_at_switch():
    for n in (49.0, 50.0, 50.5, 51.0):
        direct = (2.0**n * ghz_fidelity(0.99, 0.999, n) - 1) / (2.0**n - 1)
        assert visibility(0.99, 0.999, n) == pytest.approx(direct, rel=1e-13)


def test_no_flip_and_even_sum_examples():
    assert no_flip_survival(1, 7) == 1
    assert no_flip_survival(0.5, 5) == 0.5
    assert no_flip_survival(0.9, 3) == pytest.approx(0.756, rel=1e-14)
    assert even_binomial_sum(0.9, 3) == pytest.approx(0.729 + 0.027, rel=1e-14)
    assert even_binomial_sum(1, 10) == 1
    assert even_binomial_sum(0.5, 4) == pytest.approx(0.5, rel=1e-15)
    with pytest.raises(DomainError):
        even_binomial_sum(0.9, 3.5)
    with pytest.raises(OverflowError):
        even_binomial_sum(0.9, 61)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 1.0), st.integers(1, 60))
def test_even_sum_identity(q, n):
    assert abs(even_binomial_sum(q, n) - no_flip_survival(q, n)) < 1e-13


@settings(max_examples=100, deadline=None)
@given(st.floats(0.55, 1.0), st.integers(1, 40))
def test_hypergeometric_identity_integer_n(q, n):
    assert hypergeometric_form(q, n) == pytest.approx(no_flip_survival(q, n), rel=1e-10)


def test_hypergeometric_noninteger_spot_check():
    # numerical spot check only; no exactness claimed for real n
    for q in (0.8, 0.95, 0.999):
        for n in (2.5, 7.3, 12.9):
            assert hypergeometric_form(q, n) == pytest.approx(no_flip_survival(q, n), rel=1e-8)


def test_loss_shift_examples():
    assert loss_eigenvalue_shift(1, 12) == 0
    assert loss_eigenvalue_shift(0.9, 2) == pytest.approx(0.04625, rel=1e-14)
    assert loss_eigenvalue_shift(0.0, 3) == pytest.approx(1 / 16, rel=1e-15)


def test_loss_shift_matches_pattern_sum():
    p, n = 0.83, 7
    ref = sum(math.comb(n, j) * p ** (n - j) * (1 - p) ** j * 2.0 ** -(j + 1) for j in range(1, n + 1))
    assert loss_eigenvalue_shift(p, n) == pytest.approx(ref, rel=1e-13)


def test_loss_shift_paths_agree_at_switch():
    p = 0.97
    for n in (50.0, 50.0001):
        ref = ((1 + p) ** n - (2 * p) ** n) / 2 ** (n + 1)
        assert loss_eigenvalue_shift(p, n) == pytest.approx(ref, rel=1e-12)


def _shift_turning_point(n):
    # d/dp [(1+p)^n - (2p)^n] = 0  <=>  (1+p)/(2p) = 2^(1/(n-1))
    return 0.0 if n == 1 else 1.0 / (2.0 ** (n / (n - 1)) - 1.0)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 200), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_loss_shift_monotone_above_turning_point(n, u, v):
    p0 = _shift_turning_point(n)
    a, b = sorted((p0 + (1 - p0) * u, p0 + (1 - p0) * v))
    if b - a > 1e-6:
        assert loss_eigenvalue_shift(b, n) < loss_eigenvalue_shift(a, n)


def test_loss_shift_rises_below_turning_point():
    # the shift is not monotone on all of (0, 1) once n >= 2
    for n in (2, 3, 10, 200):
        p0 = _shift_turning_point(n)
        assert loss_eigenvalue_shift(0.5 * p0, n) < loss_eigenvalue_shift(p0, n)


def test_time_dependent_probabilities():
    assert survival_prob(0, 123.0) == 1
    assert dephasing_no_flip(1.0, math.log(2)) == pytest.approx(0.75, rel=1e-15)
    assert survival_prob(0.01, 100) == pytest.approx(math.exp(-1), rel=1e-15)
    with pytest.raises(DomainError):
        survival_prob(-1, 1)
