"""Plot data: whitespace-separated columns plus a gnuplot script per figure."""
from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path
from typing import Callable, Sequence

from .output import read_columns


class PlotError(ValueError):
    pass


def safe_name(figure: str) -> str:
    return figure.replace(":", "_")


def _write_dat(path: Path, header: Sequence[str], cols: Sequence[Sequence[str]]) -> Path:
    lines = ["# " + " ".join(header)]
    lines += [" ".join(vals) for vals in zip(*cols)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _columns(run_dir: Path, name: str, required: Sequence[str]) -> dict[str, list[str]]:
    path = run_dir / name
    if not path.exists():
        raise PlotError(f"{run_dir} has no {name}; run the matching experiment first")
    try:
        return read_columns(path, required)
    except ValueError as exc:
        raise PlotError(str(exc)) from None


def _script(path: Path, title: str, panels: list[str]) -> Path:
    body = [f"# {title}", "set terminal pngcairo size 900,600", f"set output '{path.stem}.png'"]
    if len(panels) > 1:
        rows = (len(panels) + 1) // 2
        body.append(f"set multiplot layout {rows},2")
    body += panels
    if len(panels) > 1:
        body.append("unset multiplot")
    path.write_text("\n".join(body) + "\n", encoding="utf-8")
    return path


def _groups(c: dict[str, list[str]], key: str) -> dict[str, list[int]]:
    g: dict[str, list[int]] = defaultdict(list)
    for i, v in enumerate(c[key]):
        g[v].append(i)
    return g


def fig_stark(run_dir: Path, out: Path, stem: str) -> list[Path]:
    c = _columns(run_dir, "summary.csv", ("mu_over_gamma", "hw_over_kT", "ift_mean", "ift_err",
                                          "mean_entropy", "entropy_err"))
    files = []
    plots_je, plots_s = [], []
    for hw, idx in _groups(c, "hw_over_kT").items():
        f = _write_dat(out / f"{stem}_hw{hw}.dat", ("mu_over_gamma", "ift_mean", "ift_err", "mean_entropy",
                                                    "entropy_err"),
                       [[c[k][i] for i in idx] for k in ("mu_over_gamma", "ift_mean", "ift_err", "mean_entropy",
                                                         "entropy_err")])
        files.append(f)
        plots_je.append(f"'{f.name}' u 1:2:3 w yerr t 'hw/kT={hw}'")
        plots_s.append(f"'{f.name}' u 1:4:5 w yerr t 'hw/kT={hw}'")
    h = _columns(run_dir, "entropy_histogram.csv", ("bin_lo", "bin_hi", "count"))
    files.append(_write_dat(out / f"{stem}_hist.dat", ("mu_over_gamma", "hw_over_kT", "bin_lo", "bin_hi", "count"),
                            [h[k] for k in ("mu_over_gamma", "hw_over_kT", "bin_lo", "bin_hi", "count")]))
    files.append(_script(out / f"{stem}.gp", "Jarzynski test of the Stark ramp", [
        "set logscale x; set xlabel 'mu/Gamma_-'; set ylabel '<exp(-s)>'; plot " + ", ".join(plots_je),
        "set ylabel '<s>'; plot " + ", ".join(plots_s),
    ]))
    return files


def fig_finite_eff(run_dir: Path, out: Path, stem: str) -> list[Path]:
    cols = ("eta", "uncorrected_mean", "uncorrected_err", "corrected_mean", "corrected_err")
    c = _columns(run_dir, "finite_eta.csv", cols)
    f = _write_dat(out / f"{stem}.dat", cols, [c[k] for k in cols])
    return [f, _script(out / f"{stem}.gp", "Jarzynski test at finite detection efficiency", [
        f"set xlabel 'eta'; plot '{f.name}' u 1:2:3 w yerr t 'uncorrected', '' u 1:4:5 w yerr t 'corrected', 1 t ''",
    ])]


def fig_rabi(run_dir: Path, out: Path, stem: str) -> list[Path]:
    cols = ("g_over_gamma", "ift_mean", "ift_err", "mean_entropy", "entropy_err")
    c = _columns(run_dir, "summary.csv", cols)
    f = _write_dat(out / f"{stem}.dat", cols, [c[k] for k in cols])
    return [f, _script(out / f"{stem}.gp", "Jarzynski test of the driven qubit", [
        f"set logscale x; set xlabel 'g/Gamma_-'; plot '{f.name}' u 1:2:3 w yerr t '<exp(-s)>'",
        f"plot '{f.name}' u 1:4:5 w yerr t '<s>'",
    ])]


def fig_comparison(run_dir: Path, out: Path, stem: str) -> list[Path]:
    panels = {
        "a_re_s": ("re_s", "re_s_obe"),
        "b_im_s": ("im_s_fme", "im_s_obe"),
        "c_Pe": ("Pe_fme", "Pe_obe"),
        "d_flows": ("PL_fme", "PL_obe", "Pres_fme", "Pres_obe"),
    }
    need = {"theta"} | {k for v in panels.values() for k in v}
    c = _columns(run_dir, "comparison.csv", sorted(need))
    files, gp = [], []
    for tag, keys in panels.items():
        f = _write_dat(out / f"{stem}_{tag}.dat", ("theta",) + keys, [c["theta"]] + [c[k] for k in keys])
        files.append(f)
        gp.append(f"set xlabel 'theta'; plot " + ", ".join(f"'{f.name}' u 1:{j + 2} w l t '{k}'"
                                                             for j, k in enumerate(keys)))
    files.append(_script(out / f"{stem}.gp", "Floquet versus Bloch steady states", gp))
    return files


def fig_conversion(run_dir: Path, out: Path, stem: str) -> list[Path]:
    cols = ("p_i", "W", "dU_m", "Q", "dS_VN", "entropy_produced", "W_rev")
    c = _columns(run_dir, "quarter.csv", cols)
    files = [_write_dat(out / f"{stem}_quarter.dat", cols, [c[k] for k in cols])]
    gp = [f"set logscale x; set xlabel 'p_i'; plot '{files[0].name}' u 1:2 t 'W', '' u 1:3 t 'dU_m', '' u 1:7 t 'W_rev'",
          f"plot '{files[0].name}' u 1:6 t 'entropy produced'",
          f"unset logscale x; set xlabel 'dS_VN'; plot '{files[0].name}' u 5:4 t 'Q'"]
    if (run_dir / "damping.csv").exists():
        d = _columns(run_dir, "damping.csv", ("t", "U_m_avg"))
        files.append(_write_dat(out / f"{stem}_damping.dat", ("t", "U_m_avg"), [d["t"], d["U_m_avg"]]))
        gp.append(f"set xlabel 't'; plot '{files[-1].name}' u 1:2 w l t 'U_m averaged'")
    files.append(_script(out / f"{stem}.gp", "Information-to-energy conversion", gp))
    return files


def fig_gamopt_av(run_dir: Path, out: Path, stem: str) -> list[Path]:
    s = _columns(run_dir, "noise_spectrum.csv", ("delta", "re_S0"))
    c = _columns(run_dir, "optomech.csv", ("t", "x", "p", "V_X", "V_P", "C_XP", "Gamma_opt"))
    files = [_write_dat(out / f"{stem}_spectrum.dat", ("delta", "re_S0"), [s["delta"], s["re_S0"]])]
    keys = ("t", "x", "p", "V_X", "V_P", "C_XP", "Gamma_opt")
    files.append(_write_dat(out / f"{stem}_moments.dat", keys, [c[k] for k in keys]))
    m = files[1].name
    files.append(_script(out / f"{stem}.gp", "Qubit-induced heating rate", [
        f"set xlabel 'delta'; plot '{files[0].name}' u 1:2 w l t 'Re S(0)'",
        f"set xlabel 't'; plot '{m}' u 1:7 w l t 'Gamma_opt'",
        f"plot '{m}' u 1:4 w l t 'V_X', '' u 1:5 w l t 'V_P', '' u 1:6 w l t 'C_XP'",
        f"set xlabel 'x'; plot '{m}' u 2:3 w l t 'phase space'",
    ]))
    return files


def fig_gamopt_traj(run_dir: Path, out: Path, stem: str) -> list[Path]:
    keys = ("t", "x", "p", "V_X", "V_P", "C_XP")
    c = _columns(run_dir, "optomech.csv", keys)
    w = _columns(run_dir, "wigner.csv", ("t", "a", "b", "c", "x", "p"))
    files = [_write_dat(out / f"{stem}_traj.dat", keys, [c[k] for k in keys]),
             _write_dat(out / f"{stem}_wigner.dat", ("t", "a", "b", "c", "x", "p"),
                        [w[k] for k in ("t", "a", "b", "c", "x", "p")])]
    m = files[0].name
    files.append(_script(out / f"{stem}.gp", "Monitored oscillator trajectory", [
        f"set xlabel 't'; plot '{m}' u 1:4 w l t 'V_X', '' u 1:5 w l t 'V_P', '' u 1:6 w l t 'C_XP'",
        f"set xlabel 'x'; plot '{m}' u 2:3 w l t 'phase space'",
    ]))
    return files


def fig_drift(run_dir: Path, out: Path, stem: str) -> list[Path]:
    keys = ("t", "U_m", "P_e", "Gamma_opt")
    c = _columns(run_dir, "drift.csv", keys)
    f = _write_dat(out / f"{stem}.dat", keys, [c[k] for k in keys])
    return [f, _script(out / f"{stem}.gp", "Long-time drift", [
        f"set xlabel 't'; plot '{f.name}' u 1:{j + 2} w lp t '{k}'" for j, k in enumerate(keys[1:])
    ])]


FIGURES: dict[str, tuple[str, Callable[[Path, Path, str], list[Path]]]] = {
    "f2:StarkShift": ("stark-je", fig_stark),
    "f2:FiniteEff": ("finite-eta", fig_finite_eff),
    "f3:JE": ("rabi-je", fig_rabi),
    "f3:Comparison": ("fme-obe-compare", fig_comparison),
    "f4:Conversion": ("landauer", fig_conversion),
    "f4:GamOptAv": ("optomech-semicl", fig_gamopt_av),
    "f4:GamOptTraj": ("optomech-noise", fig_gamopt_traj),
    "f4:DriftMO": ("optomech-noise", fig_drift),
}


def emit_plot_data(run_dir: Path, figure: str) -> list[Path]:
    """Write the figure's data files and gnuplot script into ``run_dir/plots``."""
    if figure not in FIGURES:
        raise PlotError(f"unknown figure {figure!r}; supported figures: {', '.join(FIGURES)}")
    exp, builder = FIGURES[figure]
    run_dir = Path(run_dir)
    man = run_dir / "manifest.json"
    if man.exists():
        got = json.loads(man.read_text(encoding="utf-8"))["config"]["experiment"]
        if got != exp:
            raise PlotError(f"figure {figure} needs a {exp} run, {run_dir} holds {got}")
    out = run_dir / "plots"
    out.mkdir(parents=True, exist_ok=True)
    return builder(run_dir, out, safe_name(figure))
