"""Bias of the uncorrected Jarzynski estimator against detection efficiency.

Exact values come from the tilted two-state chain; the corrected Monte-Carlo
estimator is shown for a few efficiencies.
"""
from __future__ import annotations

import argparse

import numpy as np

from qtraj import finite_eff as fe
from qtraj.experiments import finite_eta_spec


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--traj", type=int, default=10_000)
    ap.add_argument("--fict", type=int, default=1_000)
    ap.add_argument("--seed", type=int, default=1)
    a = ap.parse_args()
    spec = finite_eta_spec(1.0, 9.0, 1.0)
    print(f"{'eta':>5} {'exact uncorrected':>18}")
    for eta in np.linspace(0, 1, 11):
        print(f"{eta:5.2f} {fe.exact_uncorrected_je(spec, eta):18.6f}")
    print(f"\n{'eta':>5} {'uncorrected':>22} {'corrected':>22}")
    for eta in (1.0, 0.3, 0.1):
        r = fe.finite_efficiency_experiment(spec, eta, a.traj, a.fict, a.seed)
        print(f"{eta:5.2f} {r.uncorrected.mean:12.6f} ± {r.uncorrected.std_error:.2g} "
              f"{r.corrected.mean:12.6f} ± {r.corrected.std_error:.2g}", flush=True)


if __name__ == "__main__":
    main()
