"""
Sensitivity to the size of the computational domain
===================================================

Doubling the log-price half-width (with the mesh width held fixed) barely
moves the price, while halving it cuts into the region the density reaches.
"""
from bimerton.harness import domain_study

for scale in ("double", "half"):
    rep = domain_study("CaseI", "put_on_min", (90, 90), scale, levels=(0,))
    row = rep.rows[0]
    print(f"{scale:>6}: N={row.N:4d}  price={row.price:.8f}  |change|={row.change:.2e}")
