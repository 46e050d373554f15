"""
Convergence on a disc-shaped discontinuity
==========================================

Refine uniform and Halton node sets, tune the shape parameter with the
level, and fit the algebraic rate of the RMSE against the fill distance.
"""

import mlsvsdk as mv

for kind in ("uniform", "halton"):
    for variant in ("classic", "vsdk"):
        spec = mv.reference_spec(f"f2_{kind}_wendland_c2", variant)
        report = mv.run_experiment(spec)
        print(f"\n{kind} nodes, {variant}")
        print("     N        h        rmse       mae")
        for r in report.rows:
            print(f"{r.N:6d}  {r.h:.3e}  {r.rmse:.3e}  {r.mae:.3e}")
        print(f"rate vs h: {report.rate_h:.2f}   rate vs N^(-1/2): {report.rate_n:.2f}")

###############################################################################
# Reports are plain CSV, ready for plotting elsewhere.

print(report.to_csv_text())
