"""Command-line entry point: run experiments, rerun manifests, emit plot data."""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, build_config, load_config_file
from .experiments import REGISTRY, defaults, write_compare_csv
from .output import read_manifest, sha256, write_manifest

EXIT_USAGE = 2


def run_dir_for(cfg: ExperimentConfig) -> Path:
    return cfg.out_dir / f"{cfg.experiment}_seed{cfg.seed}"


def run_experiment(cfg: ExperimentConfig, run_dir: Path | None = None, quiet: bool = False) -> dict:
    """Execute one experiment, write its outputs and manifest, return the manifest."""
    exp = REGISTRY[cfg.experiment]
    run_dir = run_dir or run_dir_for(cfg)
    run_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    res = exp.run(cfg, run_dir)
    wall = time.perf_counter() - t0
    if not quiet:
        for line in res.lines:
            print(line)
    write_manifest(run_dir, cfg.resolved(), __version__, wall, res.files)
    man = read_manifest(run_dir / "manifest.json")
    if not quiet:
        print(f"wrote {len(res.files)} files to {run_dir} in {wall:.1f} s")
    return man


def config_from_manifest(man: dict, out_dir: Path) -> ExperimentConfig:
    c = man["config"]
    params = {k: tuple(v) if isinstance(v, list) else v for k, v in c["params"].items()}
    return ExperimentConfig(c["experiment"], params, int(c["n_traj"]), int(c["seed"]), out_dir, int(c["threads"]))


def _kv(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qtraj", description=__doc__)
    ap.add_argument("--version", action="version", version=f"qtraj {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment")
    r.add_argument("experiment")
    r.add_argument("--config", help="flat key = value file")
    r.add_argument("--set", action="append", default=[], type=_kv, metavar="KEY=VAL")
    r.add_argument("--traj", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--threads", type=int)
    r.add_argument("--out", help="output root (default $QTRAJ_OUT or ./runs)")

    rr = sub.add_parser("rerun", help="rerun from a manifest and compare checksums")
    rr.add_argument("manifest")
    rr.add_argument("--out", help="directory for the rerun (default <run_dir>/rerun)")

    p = sub.add_parser("plot", help="write plot data and a gnuplot script for a figure")
    p.add_argument("run_dir")
    p.add_argument("--figure", required=True)

    c = sub.add_parser("compare-fme-obe", help="steady-state sweep of both descriptions")
    c.add_argument("--sweep", choices=("theta",), default="theta")
    c.add_argument("--out", required=True, help="CSV path")
    c.add_argument("--points", type=int, default=20)

    sub.add_parser("list", help="list experiments and their parameters")
    return ap


def _cmd_run(a) -> int:
    if a.experiment not in REGISTRY:
        print(f"unknown experiment {a.experiment!r}; valid experiments: {', '.join(REGISTRY)}", file=sys.stderr)
        return EXIT_USAGE
    try:
        overrides = load_config_file(a.config) if a.config else {}
        for k, v in a.set:
            overrides[k] = v
        cfg = build_config(a.experiment, defaults(a.experiment), overrides, a.traj, a.seed, a.out, a.threads)
        if cfg.n_traj < 0 or (REGISTRY[a.experiment].n_traj > 0 and cfg.n_traj < 2):
            raise ConfigError("n_traj must be at least 2 for Monte-Carlo experiments")
        if cfg.threads < 1:
            raise ConfigError("threads must be positive")
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        run_experiment(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_rerun(a) -> int:
    path = Path(a.manifest)
    if path.is_dir():
        path = path / "manifest.json"
    man = read_manifest(path)
    out = Path(a.out) if a.out else path.parent / "rerun"
    cfg = config_from_manifest(man, out.parent)
    new = run_experiment(cfg, run_dir=out, quiet=True)
    bad = [f for f, h in man["files"].items() if new["files"].get(f) != h]
    for f in man["files"]:
        print(f"{'MATCH' if f not in bad else 'DIFFER'} {f}")
    return 1 if bad else 0


def _cmd_plot(a) -> int:
    from .plotting import PlotError, emit_plot_data

    try:
        files = emit_plot_data(Path(a.run_dir), a.figure)
    except PlotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for f in files:
        print(f)
    return 0


def _cmd_compare(a) -> int:
    from .fme_obe import compare_sweep

    out = write_compare_csv(Path(a.out), compare_sweep(a.points))
    print(f"{out} sha256={sha256(out)}")
    return 0


def _cmd_list(_a) -> int:
    for name, e in REGISTRY.items():
        keys = ", ".join(f"{k}={v}" for k, v in e.params.items())
        print(f"{name}: {e.about} [n_traj={e.n_traj}; {keys}]")
    return 0


def main(argv: list[str] | None = None) -> int:
    a = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "rerun": _cmd_rerun, "plot": _cmd_plot, "compare-fme-obe": _cmd_compare,
               "list": _cmd_list}[a.command]
    return handler(a)


if __name__ == "__main__":
    sys.exit(main())
