"""Small Monte Carlo comparison across estimators.

Runs the benchmark engine on a reduced grid (two corruption levels, ten
repetitions) and prints the aggregate table.  The full-size analogue of
this run is `robustfit simulate` with the default 200 repetitions.
"""

import csv
import tempfile

from robustfit import ExperimentPlan, run_plan

METHODS = ("SARM", "TSSARM", "OLS", "IRLS", "LAD", "AROSI", "Oracle")


def main():
    out_dir = tempfile.mkdtemp(prefix="robustfit_demo_")
    plan = ExperimentPlan(type_id="T1", m=256, n=8, p_grid=(0.1, 0.3),
                          methods=METHODS, repetitions=10, base_seed=0,
                          out_dir=out_dir)
    trials_path, agg_path = run_plan(plan)
    print(f"per-trial rows: {trials_path}")
    print(f"aggregates:     {agg_path}\n")

    with open(agg_path) as fh:
        rows = list(csv.DictReader(fh))
    print(f"{'p':>5} {'method':8} {'mean error':>11} {'std':>9} "
          f"{'mean iters':>10}")
    for row in rows:
        print(f"{float(row['p']):5.2f} {row['method']:8} "
              f"{float(row['mean_error']):11.4f} "
              f"{float(row['std_error']):9.4f} "
              f"{float(row['mean_iterations']):10.1f}")

    print("\nreading the table: OLS error grows with the corruption level "
          "while the robust fits stay at the level of the outlier-aware "
          "reference (Oracle).")


if __name__ == "__main__":
    main()
