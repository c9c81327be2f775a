# Why an unnormalised bound cannot hold for a non-contractive H.
#
# H = sigma_z on the first half of the step and -sigma_z on the second: the
# exact evolution is the identity. A tiny rotation slipped in at the midpoint
# gets stretched by e^dt.
import math

from ordexp.evaluator import kappa_from_catalog, kappa_integral, normalized_apply, segmented_apply
from ordexp.harness import appendix_b_demo
from ordexp.operators import build_system
from ordexp.schedule import lts_schedule

for dt in (1.0, 2.0, 4.0, 8.0):
    rep = appendix_b_demo(0.01, dt)
    print(f"dt={dt}: error={rep.error_norm:.3e}, doubling dt multiplies it by "
          f"{rep.growth_ratio:.2f} (e^dt={math.exp(dt):.2f}), closed form matched={rep.matches}")

# Shifting every term by kappa/m makes the problem contractive; the scalar K
# restores the original normalisation exactly.
ts = build_system("pauli-flip", interval=(0.0, 1.0))
s = lts_schedule(1, 2)
for key in ("const:1", "linear"):
    norm = kappa_from_catalog(key)
    shifted, K = normalized_apply(s, ts, norm, 0.0, 1.0, r=8)
    back = math.exp(kappa_integral(norm, 0.0, 1.0)) * shifted
    diff = abs(back - K * segmented_apply(s, ts, 0.0, 1.0, 8)).max()
    print(f"kappa={key}: K={K:.12f}, round-trip difference {diff:.1e}")
