"""
Grid refinement study
=====================

Each level doubles N and J and doubles M.  The change between levels
should roughly halve, so the ratio column sits near 2.  Pass the highest
level as an argument (level 2 takes a couple of minutes).
"""
import sys

from bimerton.harness import convergence_study, emit_report, format_report, timing_slope

top = int(sys.argv[1]) if len(sys.argv) > 1 else 1
for kind, spot in [("put_on_min", (90, 90)), ("put_on_average", (100, 100))]:
    report = convergence_study("CaseI", kind, spot, levels=range(top + 1))
    print(format_report(report))
    slope = timing_slope(report.rows)
    if slope is not None:
        print(f"runtime slope against M*N*J*log(NJ): {slope:.2f}\n")

emit_report(report, "convergence_put_on_average.csv")
print("wrote convergence_put_on_average.csv")
