# Empirical order of the k-th order formula on two scalar test problems.
#
# fig1b: H(u) = cos(u) I is smooth, so the single-step error should fall like
# dt^(2k+1). fig1a: H(u) = u^3 sin(1/u) I has only one continuous derivative
# at u = 0, and starting there the k=2 formula drops to dt^4.
from ordexp.harness import FIG1_GRID, log_grid, order_study

for system in ("fig1b", "fig1a"):
    rep = order_study(system, 2, dt_grid=FIG1_GRID)
    print(f"{system}: slope {rep.fitted_slope:.3f} +- {rep.slope_stderr:.3f} "
          f"over dt in [{rep.fit_range[0]:.4g}, {rep.fit_range[1]:.4g}]")
    for s in rep.samples:
        flag = "  (below noise floor)" if s.excluded else ""
        print(f"   dt={s.dt:.4e}  error={s.error:.3e}{flag}")

# The ladder k = 1, 2, 3 on the smooth problem. Third order needs larger steps
# because its errors reach rounding level quickly.
for k, grid in ((1, FIG1_GRID), (2, FIG1_GRID), (3, log_grid(-1, -0.4, 12))):
    print(f"k={k}: slope {order_study('fig1b', k, dt_grid=grid).fitted_slope:.3f} (expect {2 * k + 1})")

# The CSV form carries the grid and the fitted slope with it.
print(order_study("fig1b", 1).to_csv())
