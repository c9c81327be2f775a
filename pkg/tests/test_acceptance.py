"""Acceptance gate.

Each test prints one ``[ACCEPT n] PASS|FAIL ...`` line and then asserts. The
lines are also collected and repeated in the terminal summary of any pytest run.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from ordexp.bounds import choose_order, exponential_budget, make_plan, qk_bounds, segment_count
from ordexp.cli import main as cli_main
from ordexp.evaluator import (
    kappa_from_catalog,
    kappa_integral,
    normalized_apply,
    segmented_apply,
    symmetry_defect,
)
from ordexp.harness import FIG1_GRID, appendix_b_demo, bound_sweep, log_grid, order_study
from ordexp.matrix_core import random_unitary, spectral_norm
from ordexp.operators import BUILTIN_SYSTEMS, SmoothnessError, build_system, estimate_lambda
from ordexp.oracle import ordered_exp, truncation_bound_check
from ordexp.schedule import lts_schedule, q_max

SEEDS = range(10)
K3_GRID = log_grid(-1.0, -0.4, 12)  # k=3 errors fall under the noise floor on the k=2 grid


def report(n: int, ok: bool, detail: str) -> None:
    line = f"[ACCEPT {n:2d}] {'PASS' if ok else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def _slope_from_csv(text: str) -> float:
    for line in text.splitlines():
        if line.startswith("# slope="):
            return float(line.split("=", 1)[1])
    raise AssertionError("no slope line in order-study output")


def _cli_order_study(tmp_path, system: str) -> tuple[float, float, int]:
    out = tmp_path / f"{system}.csv"
    t0 = time.perf_counter()
    code = cli_main(["order-study", "--system", system, "--k", "2", "--out", str(out)])
    elapsed = time.perf_counter() - t0
    return _slope_from_csv(out.read_text()), elapsed, code


def test_1_fig1b_slope(tmp_path):
    slope, elapsed, code = _cli_order_study(tmp_path, "fig1b")
    ok = code == 0 and abs(slope - 5.0) <= 0.3 and elapsed < 30
    report(1, ok, f"fig1b k=2 slope={slope:.3f} (5.0 +- 0.3), {elapsed:.1f}s (< 30s)")
    assert ok


def test_2_fig1a_slope(tmp_path):
    slope, elapsed, code = _cli_order_study(tmp_path, "fig1a")
    ok = code == 0 and abs(slope - 4.0) <= 0.3 and elapsed < 60
    report(2, ok, f"fig1a k=2 slope={slope:.3f} (4.0 +- 0.3), {elapsed:.1f}s (< 60s)")
    assert ok


def test_3_order_ladder():
    grids = {1: FIG1_GRID, 2: FIG1_GRID, 3: K3_GRID}
    slopes = {k: order_study("fig1b", k, dt_grid=g).fitted_slope for k, g in grids.items()}
    ok = all(abs(slopes[k] - (2 * k + 1)) <= 0.3 for k in slopes)
    report(3, ok, "fig1b slopes " + ", ".join(f"k={k}: {s:.3f}" for k, s in slopes.items())
           + " (3/5/7 +- 0.3)")
    assert ok


def test_4_qk_bracket():
    rows = []
    for k in range(1, 11):
        qk = q_max(lts_schedule(1, k))
        lo, hi = qk_bounds(k)
        rows.append((k, lo <= qk <= hi))
    q1 = q_max(lts_schedule(1, 1))
    ok = all(inside for _, inside in rows) and abs(q1 - 0.5) <= 1e-15
    bad = [k for k, inside in rows if not inside]
    report(4, ok, f"Q_k in [1.5/3^k, 2k/3^k] for k=1..10 (outside: {bad or 'none'}), Q_1={q1!r}")
    assert ok


def test_5_schedule_structure():
    worst_count, worst_sum = 0, 0.0
    for m in range(1, 5):
        for k in range(1, 6):
            s = lts_schedule(m, k)
            worst_count = max(worst_count, abs(len(s) - 2 * m * 5 ** (k - 1)))
            worst_sum = max(worst_sum, max(abs(w - 1) for w in s.weight_sums()))
    ok = worst_count == 0 and worst_sum <= 1e-12
    report(5, ok, f"m<=4, k<=5: count mismatches={worst_count}, max |weight sum - 1|={worst_sum:.2e}")
    assert ok


def test_6_symmetry():
    worst = 0.0
    for key in BUILTIN_SYSTEMS:
        ts = build_system(key, interval=(0.0, 0.3))
        for k in (1, 2, 3):
            worst = max(worst, symmetry_defect(lts_schedule(ts.m, k), ts, 0.0, 0.3))
    ok = worst <= 1e-10
    report(6, ok, f"max symmetry defect over built-ins, k<=3, dt=0.3: {worst:.2e} (<= 1e-10)")
    assert ok


def test_7_single_step_bound():
    grids = {1: log_grid(-3, -0.3, 10), 2: log_grid(-3, -0.8, 10)}
    checked, violations, min_margin = 0, 0, math.inf
    for k, grid in grids.items():
        sweep = bound_sweep("random-antihermitian", k, 0.0, grid, seeds=SEEDS, dim=4, m=2)
        valid = [r for r in sweep.rows if r.valid and not r.excluded]
        checked += len(valid)
        violations += len(sweep.violations)
        min_margin = min([min_margin] + [r.margin for r in valid])
    ok = violations == 0 and checked > 0
    report(7, ok, f"10 seeds, k=1,2: {checked} valid rows, {violations} violations, "
                  f"min bound/error={min_margin:.3g}")
    assert ok


def test_8_segment_count():
    checked, violations, worst = 0, 0, 0.0
    mu, dt = 0.0, 1.0
    for seed in SEEDS:
        ts = build_system("random-antihermitian", interval=(mu, mu + dt), seed=seed, dim=4, m=2)
        ref = ordered_exp(ts, mu, dt).U
        for k in (1, 2):
            lam = estimate_lambda(ts, (mu, mu + dt), 2 * k).Lambda
            s = lts_schedule(ts.m, k)
            for eps in (1e-3, 1e-5):
                r, _ = segment_count(k, lam, dt, eps)
                err = spectral_norm(segmented_apply(s, ts, mu, dt, r) - ref)
                checked += 1
                violations += err > eps
                worst = max(worst, err / eps)
    ok = violations == 0
    report(8, ok, f"{checked} cases, {violations} with error > eps, max error/eps={worst:.3g}")
    assert ok


def test_9_product_perturbation():
    rng = np.random.default_rng(20240609)
    worst = 0.0
    violations = 0
    for _ in range(200):
        P = int(rng.integers(1, 65))
        delta = float(rng.uniform(0.0, 0.5))
        dim = int(rng.integers(2, 5))
        A = [random_unitary(rng, dim) for _ in range(P)]
        B = []
        for a in A:
            c = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            c *= rng.uniform(0, 1) / spectral_norm(c)
            B.append(a + (delta / P) * c)
        pa, pb = np.eye(dim), np.eye(dim)
        for a, b in zip(A, B):
            pa, pb = a @ pa, b @ pb
        dev = spectral_norm(pa - pb)
        violations += dev > 2 * delta
        if delta > 0:
            worst = max(worst, dev / (2 * delta))
    ok = violations == 0
    report(9, ok, f"200 instances, {violations} with deviation > 2 delta, max ratio={worst:.3f}")
    assert ok


def _truncation_cases():
    for key in BUILTIN_SYSTEMS:
        for P in (1, 2):
            # fig1a is only once-differentiable at 0; the P=2 remainder needs H'' there
            mu = 0.5 if key == "fig1a" and P == 2 else 0.0
            for dt in (0.05, 0.1, 0.2):
                yield key, P, mu, dt


def test_10_truncation_remainder():
    failures, worst = [], 0.0
    for key, P, mu, dt in _truncation_cases():
        ts = build_system(key, interval=(mu, mu + dt))
        lhs, rhs = truncation_bound_check(ts, mu, dt, P)
        worst = max(worst, lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf))
        if lhs > rhs:
            failures.append((key, P, dt))
    rejected = False
    try:
        truncation_bound_check(build_system("fig1a", interval=(0.0, 0.1)), 0.0, 0.1, 2)
    except SmoothnessError:
        rejected = True
    ok = not failures and rejected
    report(10, ok, f"lhs <= rhs on built-ins, P=1,2, dt in {{0.05,0.1,0.2}}: failures={failures or 'none'}, "
                   f"max lhs/rhs={worst:.3g}; fig1a P=2 at 0 rejected={rejected}")
    assert ok


def test_11_planner_arithmetic():
    n = exponential_budget(1, 1, 1.0, 1.0, 0.1)[0]
    r = segment_count(1, 1.0, 1.0, 0.01)[0]
    base = 25 / 3
    picks = {P: (choose_order(1.0, 1.0, base**-2, P), choose_order(1.0, 1.0, base**-8, P))
             for P in (1, 2, 3, math.inf)}
    picks_ok = all(a == min(P, 1) and b == min(P, 2) for P, (a, b) in picks.items())
    eps = base**-8
    k_hi = choose_order(1.0, 1.0, eps)
    per_dt = [make_plan(2, 1.0, 1.0, eps, k=k).N / 1.0 for k in (1, k_hi)]
    budget = [exponential_budget(2, k, 1.0, 1.0, eps)[0] for k in (1, k_hi)]
    ok = n == 54 and r == 37 and picks_ok and per_dt[1] < per_dt[0] and budget[1] < budget[0]
    report(11, ok, f"budget={n} (54), r={r} (37), choose_order ok={picks_ok}, "
                   f"N/dt k=1 -> k={k_hi}: {per_dt[0]:.0f} -> {per_dt[1]:.0f}")
    assert ok


def test_12_sign_flip_and_normalisation():
    rep = appendix_b_demo(0.01, 2.0)
    worst_trip, worst_k = 0.0, 0.0
    for key, kw in (("pauli-flip", {}), ("random-antihermitian", {"seed": 1})):
        ts = build_system(key, interval=(0.0, 1.0), **kw)
        s = lts_schedule(ts.m, 2)
        for c in ("const:1", "const:-0.5"):
            norm = kappa_from_catalog(c)
            shifted, K = normalized_apply(s, ts, norm, 0.0, 1.0, 4)
            restored = math.exp(kappa_integral(norm, 0.0, 1.0)) * shifted
            worst_trip = max(worst_trip, float(np.max(np.abs(restored - segmented_apply(s, ts, 0.0, 1.0, 4)))))
            worst_k = max(worst_k, abs(K - 1))
    ok = rep.max_entry_error <= 1e-12 and worst_trip <= 1e-12 and worst_k <= 1e-12
    report(12, ok, f"sign-flip matrix max entry error={rep.max_entry_error:.2e}, "
                   f"kappa round trip={worst_trip:.2e}, |K-1|={worst_k:.2e}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
