"""
A grid of spot prices
=====================

Every (X0, Y0) pair gets its own grid centred on that spot.  Level 0 keeps
the run short; the published tables were produced on much finer grids, so
expect agreement to about two decimals here.
"""
import sys

from bimerton.harness import comprehensive_table, format_table

level = int(sys.argv[1]) if len(sys.argv) > 1 else 0
for case, kind in [("CaseII", "put_on_min"), ("CaseIII", "put_on_average")]:
    table = comprehensive_table(case, kind, level=level)
    print(format_table(table))
    if table.mi is not None:
        print(f"max |price - other method| = {table.max_diff_mi:.3e}\n")
