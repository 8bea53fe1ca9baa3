"""Run registered experiments through the CLI and emit plot data for their figures.

    python scripts/run_experiments.py --out runs                  # everything at default size
    python scripts/run_experiments.py stark-je rabi-je --traj 20000
"""
from __future__ import annotations

import argparse
import sys

from qtraj.cli import main as qtraj
from qtraj.experiments import REGISTRY


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("names", nargs="*", choices=sorted(REGISTRY), metavar="experiment")
    ap.add_argument("--out", default="runs")
    ap.add_argument("--traj", type=int, help="override n_traj of Monte-Carlo experiments")
    ap.add_argument("--seed", type=int, default=1)
    a = ap.parse_args()
    status = 0
    for name in a.names or list(REGISTRY):
        exp = REGISTRY[name]
        argv = ["run", name, "--out", a.out, "--seed", str(a.seed)]
        if a.traj and exp.n_traj > 0:
            argv += ["--traj", str(a.traj)]
        print(f"== {name}", flush=True)
        rc = qtraj(argv)
        status = status or rc
        if rc:
            continue
        for fig in exp.figures:
            status = status or qtraj(["plot", f"{a.out}/{name}_seed{a.seed}", "--figure", fig])
    return status


if __name__ == "__main__":
    sys.exit(main())
