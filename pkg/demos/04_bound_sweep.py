# Measured single-step errors against the closed-form bound.
#
# The bound only applies to contractive evolutions and below a step-size
# threshold; rows outside it are listed with valid=0.
from ordexp.harness import bound_sweep, log_grid, validity_threshold

for k in (1, 2):
    sweep = bound_sweep("random-antihermitian", k, 0.0, log_grid(-3, -0.3, 8), seeds=(0, 1, 2))
    lam = sweep.rows[0].Lambda
    print(f"k={k}: validity threshold for seed 0 is dt <= {validity_threshold(k, lam):.3f}")
    for r in sweep.rows:
        if r.seed == 0:
            print(f"   dt={r.dt:.3e}  error={r.error:.3e}  bound={r.bound:.3e}  "
                  f"valid={int(r.valid)}  bound/error={r.margin:.3g}")
    print(f"   violations across seeds: {len(sweep.violations)}")

# A Hermitian sign-flip is not contractive. Shifting by kappa = 1 makes it so.
sweep = bound_sweep("pauli-flip", 1, 0.0, log_grid(-2, -1, 4), allow_noncontractive=True, kappa="unit")
print("pauli-flip with kappa shift, violations:", len(sweep.violations))
