"""
Pricing a two-asset American put
================================

Case I parameters, put on the minimum of the two assets, both spots at 90.
The level-0 grid has 256 x 256 interior intervals and 50 timesteps.
"""
from bimerton import Payoff, price, value_at
from bimerton.harness import CASES, case_grid

case = CASES["CaseI"]
payoff = Payoff("put_on_min", case.strike)
grid = case_grid(case, (90, 90), level=0)
print(f"grid: N={grid.N} J={grid.J} M={grid.M} dx={grid.dx:.5f} dtau={grid.dtau}")

american = price(case.params, payoff, grid)
european = price(case.params, payoff, grid, mode="european")
print(f"American {american.price:.6f}  (series terms K={american.K})")
print(f"European {european.price:.6f}")
print(f"early-exercise premium {american.price - european.price:.6f}")
print("timings:", {k: round(v, 3) for k, v in american.timings.items()})

# off-node spots are interpolated from the same surface
print(f"value at (95, 85): {value_at(american.surface, 95, 85):.6f}")
