"""Acceptance criteria 1-9, at their stated tolerances.

Each test records one PASS/FAIL line (printed in the terminal summary)
before asserting, so a failing criterion still reports its numbers.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from ghzpart.allocator import (concavity_interval, integer_optimum, opt_implicit_loss1, opt_m_closed,
                               opt_n_closed, unequal_partition_qfi)
from ghzpart.dynamics import (DynamicsScenario, log_qfi_t, optimal_partition_sequential, peak_time,
                              peak_time_closed, sequential_plan, _log_info_rate)
from ghzpart.noise_models import NoiseParams, even_binomial_sum, no_flip_survival
from ghzpart.qfi_core import (Allocation, eval_expansion, log_qfi, loss_detection_ratio, low_loss_ratio_expansion,
                              qfi_partitioned, qfi_value)
from ghzpart.ramsey_compare import crossing_time, minimize_xi_s, optimal_operating_point, var_omega_ghz
from ghzpart.spectrum_oracle import (apply_dephasing_channel, apply_loss_channel, build_depolarized_ghz,
                                     oracle_qfi)

SCENARIOS = ("state_prep", "loss1", "loss2", "dephasing", "combined")


def report(num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[num] = line
    print(line)
    return ok


def test_criterion_1_worked_numbers():
    t0 = time.perf_counter()
    p999, p99 = NoiseParams(1, 0.999), NoiseParams(1, 0.99)
    cases = [
        ("F(1,0.999,1500,1)", qfi_partitioned("state_prep", p999, Allocation.equal(1500, 1)).value, 5.02e5),
        ("F(1,0.999,1500,2)", qfi_partitioned("state_prep", p999, Allocation.equal(1500, 2)).value, 5.32e5),
        ("F(1,0.99,350,4)", qfi_partitioned("state_prep", p99, Allocation.equal(350, 4), continuous=True).value,
         12838.7),
        ("F_87,87,88,88", unequal_partition_qfi("state_prep", p99, [87, 87, 88, 88]).value, 12838.5),
        ("F_175x2", unequal_partition_qfi("state_prep", p99, [175, 175]).value, 10656.9),
        ("F_70x5", unequal_partition_qfi("state_prep", p99, [70] * 5).value, 12246.0),
        ("F_50x7", unequal_partition_qfi("state_prep", p99, [50] * 7).value, 10694.6),
    ]
    elapsed = time.perf_counter() - t0
    devs = {name: abs(v - ref) / ref for name, v, ref in cases}
    worst = max(devs, key=devs.get)
    ok = all(d <= 5e-4 for d in devs.values()) and elapsed < 1.0
    report(1, ok, f"worst rel dev {devs[worst]:.2e} ({worst}), {elapsed:.3f}s")
    assert ok


def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst = (0.0, None)
    count = 0
    for sc in SCENARIOS:
        for n in range(2, 9):
            for _ in range(50):
                F, k = rng.uniform(0.5, 1.0, 2)
                p, q = rng.uniform(0.3, 1.0), rng.uniform(0.6, 1.0)
                closed = qfi_value(sc, F, k, p, q, n)
                spec = oracle_qfi(sc, F, k, p, q, n, path="spectrum").value
                # the dense route rebuilds the state as a matrix, applies each
                # channel qubit by qubit and diagonalises for the SLD
                sld = oracle_qfi(sc, F, k, p, q, n, path="dense").value
                for ref in (spec, sld):
                    d = abs(closed - ref) / max(abs(ref), 1e-300)
                    if d > worst[0]:
                        worst = (d, (sc, n, F, k, p, q))
                count += 1
    elapsed = time.perf_counter() - t0
    ok = worst[0] <= 1e-9 and elapsed < 60
    report(2, ok, f"{count} draws x 2 routes, worst rel dev {worst[0]:.2e}, {elapsed:.1f}s")
    assert ok


def test_criterion_3_optimizer_fidelity():
    t0 = time.perf_counter()
    bad = []
    checks = 0
    families = [("state_prep", lambda k: NoiseParams(1, k)),
                ("loss2", lambda k: NoiseParams(1, k, 0.998)),
                ("dephasing", lambda k: NoiseParams(1, k, 1.0, 0.999))]
    for sc, mk in families:
        for k in (0.99, 0.995, 0.999):
            prm = mk(k)
            for n in (200, 500, 1000, 2000, 5000):
                closed = opt_m_closed(sc, prm, n)
                best = integer_optimum(sc, prm, n=n).integer_optimum
                checks += 1
                if abs(max(round(closed), 1) - best) > 1:
                    bad.append((sc, k, n, closed, best))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 10
    report(3, ok, f"{checks} (scenario, k, n) cells, {len(bad)} outside +-1, {elapsed:.2f}s")
    assert ok, bad


def _argmax_n(prm, m, model, n_hi=4000):
    return integer_optimum("loss1", prm, m=m, which="n", search_range=(m, n_hi), model=model).integer_optimum


def test_criterion_4_implicit_loss1_roots():
    prm = NoiseParams(1, 0.995, 0.995)
    bad = []
    for m in range(1, 11):
        root = opt_implicit_loss1("n", prm, m)
        arg = _argmax_n(prm, m, "published")
        n2 = opt_n_closed("loss2", prm, m)
        n2_int = integer_optimum("loss2", prm, m=m, which="n", search_range=(m, 4000)).integer_optimum
        if abs(root - arg) > 3:
            bad.append(("n*", m, root, arg))
        if not (root < n2 and arg < n2_int):
            bad.append(("n1<n2", m, root, n2))
    for n in range(200, 1001, 100):
        root = opt_implicit_loss1("m", prm, n)
        arg = integer_optimum("loss1", prm, n=n, model="published").integer_optimum
        m2 = opt_m_closed("loss2", prm, n)
        m2_int = integer_optimum("loss2", prm, n=n).integer_optimum
        if abs(root - arg) > 3:
            bad.append(("m*", n, root, arg))
        if not (root > m2 and arg > m2_int):
            bad.append(("m1>m2", n, root, m2))
    ok = not bad
    report(4, ok, f"10 n* roots + 9 m* roots vs argmax of the published undetected-loss form; {len(bad)} misses")
    assert ok, bad


def test_criterion_5_detection_advantage():
    rng = np.random.default_rng(5)
    below = 0
    for _ in range(1000):
        F, k = rng.uniform(0.5, 1, 2)
        p = rng.uniform(0.01, 1)
        n = rng.integers(1, 2000)
        m = rng.integers(1, n + 1)
        for model in ("exact", "published"):
            if loss_detection_ratio(F, k, p, n, m, model).exact < 1 - 1e-12:
                below += 1
    at_one = all(loss_detection_ratio(F, k, 1.0, n, 1, model).exact == 1.0
                 for F, k, n in [(1, 0.99, 1000), (0.9, 0.95, 7)] for model in ("exact", "published"))
    # the ratio approximation and expansion are built on the published undetected-loss form
    one_minus_p = np.geomspace(1e-4, 0.2, 200)
    worst_approx = max(abs(r.approx / r.exact - 1) for r in
                       (loss_detection_ratio(1, 0.99, 1 - x, 1000, 10, "published") for x in one_minus_p))
    coeffs = low_loss_ratio_expansion(1, 0.99, 1000, 10)
    worst_exp = max(abs(eval_expansion(coeffs, 1 - x) / loss_detection_ratio(1, 0.99, 1 - x, 1000, 10, "published").exact - 1)
                    for x in np.geomspace(1e-7, 1e-3, 50))
    phys = max(abs(r.approx / r.exact - 1) for r in
               (loss_detection_ratio(1, 0.99, 1 - x, 1000, 10, "exact") for x in one_minus_p))
    ok = below == 0 and at_one and worst_approx <= 0.01 and worst_exp <= 1e-3
    report(5, ok, f"ratio<1 count {below}; approx dev {worst_approx:.2e}; expansion dev {worst_exp:.2e} "
                  f"(vs physical loss model the approx deviates up to {phys:.2f})")
    assert ok


FIG_LOSS1 = [(k, n) for k in (0.99, 0.995, 0.999) for n in (200, 300, 400)]


def test_criterion_6_dynamics_peaks():
    t0 = time.perf_counter()
    exact_dev = 0.0
    for n in (200, 300, 400, 600):
        for m in (1, 2, 4, 6):
            for name, kw in [("loss2", dict(eta=1.0)), ("dephasing", dict(gamma=0.7)),
                             ("combined", dict(eta=0.2, gamma=0.4))]:
                sc = DynamicsScenario(name, 1.0, 0.995, n, m, **kw)
                exact_dev = max(exact_dev, peak_time(sc).rel_diff)
    loss1_devs = {}
    for k, n in FIG_LOSS1:
        sc = DynamicsScenario("loss1", 1.0, k, n, 2, eta=1.0, model="published")
        loss1_devs[(k, n)] = peak_time(sc).rel_diff
    # unimodality and k-monotonicity
    shape_ok = True
    ks = np.linspace(0.98, 1.0, 20)
    ts = np.geomspace(1e-4, 0.05, 20)
    for name, kw in [("loss1", dict(eta=1.0)), ("loss2", dict(eta=1.0)), ("dephasing", dict(gamma=1.0))]:
        grid = np.array([log_qfi_t(DynamicsScenario(name, 1.0, k, 300, 2, **kw), ts) for k in ks])
        shape_ok &= bool(np.all(np.diff(grid, axis=0) >= -1e-12))
        sc = DynamicsScenario(name, 1.0, 0.995, 300, 2, **kw)
        t0p = peak_time_closed(sc)
        d = np.diff(log_qfi_t(sc, np.arange(1, 20001) * 1e-3 * t0p))
        shape_ok &= int(np.count_nonzero(np.diff(np.sign(d)) != 0)) == 1
    elapsed = time.perf_counter() - t0
    misses = {kn: d for kn, d in loss1_devs.items() if d > 0.02}
    ok = exact_dev <= 1e-6 and not misses and shape_ok and elapsed < 30
    detail = (f"exact peaks max rel dev {exact_dev:.1e}; loss1 closed form within 2% for "
              f"{len(FIG_LOSS1) - len(misses)}/{len(FIG_LOSS1)} sets")
    if misses:
        detail += " (misses: " + ", ".join(f"k={k} n={n}: {d:.1%}" for (k, n), d in sorted(misses.items())) + ")"
    report(6, ok, detail + f"; shape checks {'ok' if shape_ok else 'FAILED'}; {elapsed:.1f}s")
    assert ok


def test_criterion_7_sequential():
    n, k, r = 600, 0.995, 1.0
    worst = 0
    for x in (0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1):
        t = x / (n * r)
        ms = np.arange(1, n + 1)
        best = int(ms[int(np.argmax(_log_info_rate(1.0, k, n, ms, r, t)))])
        worst = max(worst, abs(optimal_partition_sequential(k, n, 0.25, 0.5, t) - best))
    plan = sequential_plan(1.0, 1.0, n, 0.25, 0.5, 100.0)
    limit = n * 100.0 / (math.e * r)
    dev = abs(plan.info / limit - 1)
    ok = worst <= 2 and dev <= 1e-3
    report(7, ok, f"max |m~* - argmax| = {worst:.2f}; k=1 plan info rel dev {dev:.1e}")
    assert ok


def test_criterion_8_squeezing_comparison():
    st = minimize_xi_s(600)
    xi_ok = abs(st.xi2 / 0.01464 - 1) <= 0.01 and abs(st.phi / 0.0335 - 1) <= 0.02
    futuristic = {m: crossing_time(0.9999, 0.999, 600, m, st.xi2) for m in (1, 2)}
    modest = {m: crossing_time(0.999, 0.99, 600, m, st.xi2) for m in range(1, 9)}
    best = {m: crossing_time(0.99999, 0.9999, 600, m, st.xi2) for m in range(1, 13)}
    above = [m for m, v in best.items() if v >= 1]
    threshold = max(above) + 1 if above else 1
    pattern_ok = (all(v < 1 for m, v in best.items() if m >= threshold)
                  and all(np.diff([best[m] for m in sorted(best)]) < 0))
    fut_ok = all(v >= 1 for v in futuristic.values())
    modest_ok = all(v < 1 for v in modest.values())
    # variance grid minimum vs analytic optimum
    rng = np.random.default_rng(8)
    grid_ok = True
    for _ in range(10):
        F, k = rng.uniform(0.99, 1), rng.uniform(0.99, 1)
        n, m = int(rng.integers(10, 600)), int(rng.integers(1, 5))
        g, e = rng.uniform(0.05, 1), rng.uniform(0.05, 1)
        s = n / m
        t_opt, _ = optimal_operating_point(n, m, gamma=g, eta=e)
        ts = np.linspace(0.2, 3, 400) * t_opt
        phases = np.linspace(0, np.pi, 402)[1:-1]
        T, P = np.meshgrid(ts, phases, indexing="ij")
        V = var_omega_ghz(F, k, n, m, P / (s * T), g, e, T, 1.0)
        i, j = np.unravel_index(np.argmin(V), V.shape)
        grid_ok &= abs(ts[i] - t_opt) <= ts[1] - ts[0] and abs(phases[j] - np.pi / 2) <= phases[1] - phases[0]
    ok = xi_ok and fut_ok and modest_ok and pattern_ok and grid_ok
    report(8, ok, f"xi2={st.xi2:.6f} phi={st.phi:.6f}; (0.9999,0.999) m=1,2 -> "
                  f"{futuristic[1]:.4f}, {futuristic[2]:.4f} (need >= 1); (0.999,0.99) max "
                  f"{max(modest.values()):.4f}; (0.99999,0.9999) >= 1 for m < {threshold}, declining: {pattern_ok}; "
                  f"grid optimum {'ok' if grid_ok else 'off'}")
    assert ok


def test_criterion_9_identities():
    rng = np.random.default_rng(9)
    worst = 0.0
    for n in range(1, 61):
        for q in rng.uniform(0.5, 1, 100):
            worst = max(worst, abs(even_binomial_sum(q, n) - no_flip_survival(q, n)))
    commute = True
    for n in range(2, 9):
        for _ in range(5):
            F, k = rng.uniform(0.6, 1, 2)
            p, q = rng.uniform(0.5, 1), rng.uniform(0.5, 1)
            s = build_depolarized_ghz(F, k, n)
            a = apply_dephasing_channel(apply_loss_channel(s, p), q)
            b = apply_loss_channel(apply_dephasing_channel(s, q), p)
            commute &= np.allclose(a.plus, b.plus, rtol=1e-12, atol=1e-16) and \
                np.allclose(a.minus, b.minus, rtol=1e-12, atol=1e-16)
    k = 0.99
    lo, hi = concavity_interval(k)
    jensen = True
    for _ in range(100):
        m = int(rng.integers(2, 8))
        sizes = rng.uniform(lo, hi, m)
        n = sizes.sum()
        unequal = sum(qfi_value("state_prep", 1, k, 1, 1, x) for x in sizes)
        jensen &= m * qfi_value("state_prep", 1, k, 1, 1, n / m) >= unequal * (1 - 1e-12)
    heis = all(qfi_value("state_prep", 1.0, 1.0, 1.0, 1.0, n) == n * n for n in range(1, 31))
    ok = worst < 1e-13 and commute and jensen and heis
    report(9, ok, f"even-sum max dev {worst:.1e}; commutation {commute}; Jensen {jensen}; n^2 exact {heis}")
    assert ok
