# Choosing an order and a segment count for a target accuracy.
import numpy as np

from ordexp.bounds import choose_order, exponential_budget, make_plan, segment_count
from ordexp.evaluator import segmented_apply
from ordexp.matrix_core import spectral_norm
from ordexp.operators import build_system, estimate_lambda
from ordexp.oracle import ordered_exp
from ordexp.schedule import lts_schedule

# Two hand-checkable numbers.
print("segment_count(k=1, Lambda=1, dt=1, eps=0.01) =", segment_count(1, 1.0, 1.0, 0.01))
print("exponential_budget(m=1, k=1, Lambda=1, dt=1, eps=0.1) =", exponential_budget(1, 1, 1.0, 1.0, 0.1))

# The preferred order grows slowly with Lambda dt / eps.
for ratio in (1e2, 1e6, 1e10, 1e16, 1e24):
    print(f"Lambda dt / eps = {ratio:.0e}  ->  k = {choose_order(1.0, 1.0, 1 / ratio)}")

# A real system: a random unitary evolution with two terms.
mu, dt = 0.0, 2.0
ts = build_system("random-antihermitian", interval=(mu, mu + dt), seed=4)
exact = ordered_exp(ts, mu, dt).U
for eps in (1e-3, 1e-6):
    lam = estimate_lambda(ts, (mu, mu + dt), 6).Lambda
    plan = make_plan(ts.m, lam, dt, eps)
    approx = segmented_apply(lts_schedule(ts.m, plan.k), ts, mu, dt, plan.r)
    err = spectral_norm(approx - exact)
    print(f"eps={eps:.0e}: k={plan.k}, r={plan.r}, N={plan.N} (budget {plan.N_bound}), "
          f"error={err:.2e}, conditions={plan.conditions_ok}")

# Holding the order fixed at 1 costs far more exponentials.
eps = 1e-6
lam = estimate_lambda(ts, (mu, mu + dt), 2).Lambda
print("k=1 plan N:", make_plan(ts.m, lam, dt, eps, k=1).N)
print("unitarity of the planned product:",
      np.allclose(approx.conj().T @ approx, np.eye(ts.dim)))
