# Building product-formula schedules and looking at their weights.
import numpy as np

from ordexp.bounds import qk_bounds
from ordexp.schedule import lts_schedule, merge_adjacent, q_max, s_coefficient

# The base symmetric formula for three terms: forward sweep, then backward,
# every factor at the midpoint with half weight.
base = lts_schedule(3, 1)
for f in base.factors:
    print(f"  j={f.term_index}  v={f.offset:.3f}  q={f.weight:+.3f}")

# Each recursion step glues five scaled copies together. The middle copy runs
# backwards in the parameter (negative weight).
print("s_1 =", s_coefficient(1), " middle width 1 - 4 s_1 =", 1 - 4 * s_coefficient(1))
second = lts_schedule(2, 2)
print("k=2, m=2:", len(second), "factors, weight sums", second.weight_sums())
print("smallest weight", min(f.weight for f in second.factors))

# Adjacent identical factors can be fused; the product does not change but
# the factor count drops.
print("after merging:", len(merge_adjacent(second)), "factors")

# Largest |q| shrinks roughly like 3^-k and stays inside its bracket.
for k in range(1, 8):
    lo, hi = qk_bounds(k)
    print(f"k={k}  Q_k={q_max(lts_schedule(1, k)):.6f}  bracket=[{lo:.6f}, {hi:.6f}]")

# Offsets cover [0, 1] and are symmetric about 1/2.
offs = np.array([f.offset for f in lts_schedule(1, 3).factors])
print("offset range", offs.min(), offs.max(), " mirror check", np.allclose(offs + offs[::-1], 1))
