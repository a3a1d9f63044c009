"""
Where early exercise is optimal
===============================

Snapshot the surface half-way to maturity and mark the nodes where the
payoff equals the value.  The put on the minimum keeps time value along
the diagonal, so the region splits along X = Y near the strike.
"""
import numpy as np

from bimerton import Payoff, price
from bimerton.harness import CASES, case_grid
from bimerton.pricer import exercise_region, export_mask_csv, export_mask_pgm

case = CASES["CaseI"]
payoff = Payoff("put_on_min", case.strike)
grid = case_grid(case, (90, 90), level=0)
half = grid.M // 2
res = price(case.params, payoff, grid, snapshot_steps=(half, grid.M))

for m in (half, grid.M):
    mask = exercise_region(res.snapshots[m], payoff)
    print(f"tau={m * grid.dtau:.2f}: {mask.mean():.1%} of interior nodes exercised")

# exercise boundary along the diagonal X = Y
ix, iy = grid.interior
X = np.exp(grid.x_nodes[ix])
diag = np.diag(mask)
print(f"largest diagonal spot exercised at maturity: {X[diag].max() if diag.any() else 'none'}")

export_mask_csv(mask, grid, "exercise_region.csv")
export_mask_pgm(mask, "exercise_region.pgm")
print("wrote exercise_region.csv and exercise_region.pgm")
