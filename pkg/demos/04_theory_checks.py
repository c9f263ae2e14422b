"""Numerical verification of the solver's structural guarantees.

Four claims are checked on random data: the objective never increases
across iterations, the z-step is bounded by twice the w-step, the
analytic gradient matches central finite differences, and the
closed-form z-update attains the grid-search minimum of its scalar
subproblem.  The same sweep backs `robustfit verify`.
"""

import numpy as np

from robustfit import precondition, prox_z, run_theory_sweep, smooth_s
from robustfit.diagnostics import prox_grid_gap


def main():
    print("running sweep (20 fits, 50 gradient instances, 2000 prox pairs)")
    report = run_theory_sweep(n_fits=20, seed=0, fd_instances=50,
                              prox_pairs=2000)
    print(f"  descent violations:        {report.descent_violations}")
    print(f"  z-step bound violations:   {report.zstep_bound_violations}")
    print(f"  max gradient error vs FD:  {report.max_fd_gradient_error:.2e}")
    print(f"  tail convergence ratio:    "
          f"{report.tail_convergence_ratio:.3f} (linear rate)")
    print(f"  max prox gap vs grid:      {report.prox_oracle_max_gap:.2e}")

    # the z-update in one picture: kill small residuals, shrink large ones
    print("\nz-update on a few residuals (delta = 1):")
    for r in (0.3, 0.9, 1.0, 1.5, 4.0, -4.0):
        z = prox_z(r, 1.0)
        gap = prox_grid_gap(r, 1.0)
        print(f"  r = {r:+.1f}  ->  z = {z:+.4f}   S(r) = "
              f"{smooth_s(r, 1.0):.4f}   grid gap = {gap:.1e}")

    # preconditioning makes the working design orthonormal
    rng = np.random.default_rng(3)
    X = rng.standard_normal((200, 12))
    Xp, _ = precondition(X)
    defect = float(np.max(np.abs(Xp.T @ Xp - np.eye(12))))
    print(f"\npreconditioned Gram defect on a random 200x12 design: "
          f"{defect:.2e}")


if __name__ == "__main__":
    main()
