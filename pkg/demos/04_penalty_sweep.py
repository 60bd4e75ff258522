"""How the penalty scale controls the recovered column count.

One instance, one solver, a grid of penalty scales c (lambda = c * ||X0||
with X0 = A*(b)). Too small a c prunes nothing and the solver interpolates
the data with all kappa columns; a well-scaled c recovers exactly rank-many
columns and the true matrix; too large a c kills everything.

The same sweep is available from the command line:

    l20factor experiment fig3 --m 60 --n 60 --r 2 --kappa 4 \
        --sample-ratio 0.4 --max-iters 1500 \
        --c-values 0.05,1,28,500 --out-dir sweep_out

Run: python3 demos/04_penalty_sweep.py
"""

import tempfile
from pathlib import Path

from l20factor import ExperimentConfig, run_fig3


def main():
    cfg = ExperimentConfig(m=60, n=60, r=2, kappa=4, sample_ratio=0.4,
                           operator_kind="mask", model="l20", mu_tilde=1e-3,
                           max_iters=1500, seed=0)
    c_values = [0.05, 1.0, 28.0, 500.0]

    with tempfile.TemporaryDirectory() as out:
        bundle = run_fig3(cfg, c_values, out_dir=out)
        print(f"{'c':>8} {'lambda':>10} {'stop':>10} {'iters':>6} "
              f"{'nnz U':>6} {'rel error':>11}")
        for row in bundle["runs"]:
            print(f"{row['c']:>8g} {row['lambda']:>10.3f} "
                  f"{row['reason']:>10} {row['iterations']:>6} "
                  f"{row['nnz_u']:>6} {row['rel_error']:>11.3e}")
        lines = Path(out, "sweep.csv").read_text().splitlines()
        print(f"\nsweep.csv written with {len(lines) - 1} rows; header:")
        print(f"  {lines[0]}")

    print("\nreading the table: with c too small every column survives "
          "(count = kappa = 4)\nand the fit memorizes the observed entries "
          "without recovering M; around c = 28\nthe count drops to the true "
          "rank 2 and the relative error collapses; far past\nthat the "
          "penalty wipes out all columns and the output is the zero matrix.")


if __name__ == "__main__":
    main()
