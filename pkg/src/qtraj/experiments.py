"""Registry of runnable experiments.

Each experiment takes a resolved :class:`ExperimentConfig` and a run directory,
writes its tables there and returns the written files, a JSON-able summary and
one human-readable line per headline metric. Outputs depend only on the config,
so a rerun reproduces them byte for byte.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import finite_eff as fe
from . import fme_obe, optomech as om
from .config import ExperimentConfig
from .core import thermal_occupation
from .ledger import mean_estimate
from .output import write_csv, write_json
from .protocols import (
    FeedbackParams, MPEParams, feedback_protocol, mpe_closed_forms, mpe_cycle_simulate, mpe_efficiency,
    run_protocol, spont_no_jump_quantum_heat, spontaneous_emission_protocol, spontaneous_emission_stats,
    stark_shift_protocol,
)

OPTOMECH_COLUMNS = ("t", "x", "p", "V_X", "V_P", "C_XP", "P_e", "re_s", "im_s", "Gamma_opt",
                    "U_m", "W_cum", "Q_cum", "S_VN")
FINITE_ETA_COLUMNS = ("eta", "uncorrected_mean", "uncorrected_err", "corrected_mean", "corrected_err",
                      "n_traj", "n_fict")
JE_COLUMNS = ("ift_mean", "ift_err", "mean_entropy", "entropy_err", "mean_W", "mean_Qcl", "mean_Qq")


@dataclass(slots=True)
class ExperimentOutput:
    files: list[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)


@dataclass(frozen=True, slots=True)
class Experiment:
    name: str
    run: Callable[[ExperimentConfig, Path], ExperimentOutput]
    params: dict
    n_traj: int
    figures: tuple[str, ...] = ()
    about: str = ""


def pm(est) -> str:
    return f"{est.mean:.6g} ± {est.std_error:.2g}"


def _je_row(ens) -> tuple:
    ift = ens.ift()
    ent = mean_estimate(ens.entropy)
    return (ift.mean, ift.std_error, ent.mean, ent.std_error,
            float(np.mean(ens.W)), float(np.mean(ens.Q_cl)), float(np.mean(ens.Q_q)))


def _histogram(values: np.ndarray, bins: int) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(values, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        hi = lo + 1.0
    return np.histogram(v, bins=bins, range=(lo, hi))


# ---------------------------------------------------------------------------


def run_stark(cfg: ExperimentConfig, out: Path) -> ExperimentOutput:
    p = cfg.params
    res = ExperimentOutput()
    rows, hist_rows, summaries = [], [], []
    for hw in p["hw_over_kT"]:
        T = p["omega_0"] / hw
        g_minus = p["gamma_q"] * (thermal_occupation(p["omega_0"], T) + 1)
        for r in p["mu_over_gamma"]:
            spec = stark_shift_protocol(r * g_minus, T, t_f=p["t_f_gamma"] / g_minus, gamma_q=p["gamma_q"],
                                        omega_0=p["omega_0"], dt=p["dt"] or None)
            ens = run_protocol(spec, cfg.n_traj, cfg.seed, threads=cfg.threads)
            row = _je_row(ens)
            rows.append((r, hw) + row)
            s = ens.summary() | {"mu_over_gamma": r, "hw_over_kT": hw}
            summaries.append(s)
            counts, edges = _histogram(ens.entropy, p["bins"])
            hist_rows += [(r, hw, edges[i], edges[i + 1], int(c)) for i, c in enumerate(counts)]
            res.lines.append(f"stark-je mu/G-={r:g} hw/kT={hw:g}: ift_mean={row[0]:.6f} ± {row[1]:.2g} "
                             f"mean_entropy={row[2]:.6g} ± {row[3]:.2g}")
    res.files.append(write_csv(out / "summary.csv", ("mu_over_gamma", "hw_over_kT") + JE_COLUMNS, rows))
    res.files.append(write_csv(out / "entropy_histogram.csv",
                               ("mu_over_gamma", "hw_over_kT", "bin_lo", "bin_hi", "count"), hist_rows))
    res.files.append(write_json(out / "summary.json", summaries))
    res.summary = {"runs": summaries}
    return res


def run_rabi(cfg: ExperimentConfig, out: Path) -> ExperimentOutput:
    p = cfg.params
    res = ExperimentOutput()
    rows, summaries = [], []
    for r in p["g_over_gamma"]:
        spec = fme_obe.rabi_je_protocol(r, p["hw_over_kT"], p["gamma_minus"], p["omega_0"], p["delta"],
                                        p["n_rabi"], dt=p["dt"] or None)
        ens = run_protocol(spec, cfg.n_traj, cfg.seed, threads=cfg.threads)
        row = _je_row(ens)
        rows.append((r,) + row)
        summaries.append(ens.summary() | {"g_over_gamma": r})
        res.lines.append(f"rabi-je g/G-={r:g}: ift_mean={row[0]:.6f} ± {row[1]:.2g} "
                         f"mean_entropy={row[2]:.6g} ± {row[3]:.2g}")
    res.files.append(write_csv(out / "summary.csv", ("g_over_gamma",) + JE_COLUMNS, rows))
    res.files.append(write_json(out / "summary.json", summaries))
    res.summary = {"runs": summaries}
    return res


def run_spont(cfg: ExperimentConfig, out: Path) -> ExperimentOutput:
    p = cfg.params
    spec = spontaneous_emission_protocol(p["gamma_q"], p["t_f"], p["omega_0"], dt=p["dt"] or None)
    ens = run_protocol(spec, cfg.n_traj, cfg.seed, threads=cfg.threads)
    st = spontaneous_emission_stats(ens, p["gamma_q"], p["t_f"])
    qq0 = float(np.mean(st.Qq_no_jump)) if len(st.Qq_no_jump) else math.nan
    exact_qq0 = spont_no_jump_quantum_heat(p["gamma_q"], p["t_f"], p["omega_0"])
    rows = [
        ("jump_fraction", st.jump_fraction.mean, st.jump_fraction.std_error, st.p_jump_exact),
        ("no_jump_Qq", qq0, 0.0, exact_qq0),
        ("no_jump_Qq_limit", exact_qq0, 0.0, -p["omega_0"] / 2),
        ("boundary_entropy", st.boundary_mean.mean, st.boundary_mean.std_error, st.boundary_exact),
        ("boundary_entropy_limit", st.boundary_exact, 0.0, math.log(2.0)),
    ]
    res = ExperimentOutput()
    res.files.append(write_csv(out / "summary.csv", ("quantity", "estimate", "stderr", "reference"), rows))
    res.summary = {r[0]: {"estimate": r[1], "stderr": r[2], "reference": r[3]} for r in rows}
    res.files.append(write_json(out / "summary.json", res.summary))
    res.lines = [
        f"spont-em jump_fraction={pm(st.jump_fraction)} exact={st.p_jump_exact:.6g}",
        f"spont-em no_jump_Qq={qq0:.9g} (limit {-p['omega_0'] / 2:g})",
        f"spont-em boundary_entropy={pm(st.boundary_mean)} (ln2={math.log(2):.6g})",
    ]
    return res


AXES = {"x": (math.pi / 2, 0.0), "y": (math.pi / 2, math.pi / 2), "z": (0.0, 0.0), "xz": (math.pi / 4, 0.0)}


def run_mpe(cfg: ExperimentConfig, out: Path) -> ExperimentOutput:
    p = cfg.params
    res = ExperimentOutput()
    rows = []
    for ax in p["axes"]:
        if ax not in AXES:
            raise ValueError(f"unknown axis {ax!r}; choose from {', '.join(AXES)}")
        for th in p["theta"]:
            par = MPEParams(n_axis=AXES[ax], rabi_angle=th, omega_0=p["omega_0"], T_C=p["T_C"],
                            tau_m=p["tau_m"], tau_fb=p["tau_fb"], g=p["g"])
            cyc = mpe_cycle_simulate(par, cfg.n_traj, cfg.seed)
            cf = mpe_closed_forms(par)
            w = mean_estimate(cyc.W_ext)
            q = mean_estimate(cyc.Q_q)
            net = mean_estimate(cyc.net_work)
            pmin = mean_estimate(~cyc.outcome_plus)
            rows.append((ax, th, w.mean, w.std_error, cf["W_ext"], q.mean, q.std_error, cf["mean_Qq"],
                         net.mean, net.std_error, cf["net_work"], pmin.mean, pmin.std_error, cf["p_minus"],
                         cf["power"], cf["power_real"]))
            res.lines.append(f"mpe n={ax} theta={th:.4g}: net_work={pm(net)} closed_form={cf['net_work']:.6g}")
    eta_x = [(th, mpe_efficiency(th, p["omega_0"], p["T_C"])) for th in p["theta"]]
    res.files.append(write_csv(out / "cycles.csv", (
        "axis", "theta", "W_ext_mean", "W_ext_err", "W_ext_exact", "Qq_mean", "Qq_err", "Qq_exact",
        "net_mean", "net_err", "net_exact", "p_minus_mean", "p_minus_err", "p_minus_exact",
        "power", "power_real"), rows))
    res.files.append(write_csv(out / "efficiency.csv", ("theta", "efficiency"), eta_x))
    res.summary = {"efficiency": dict((f"{th:.6g}", e) for th, e in eta_x), "rows": len(rows)}
    res.files.append(write_json(out / "summary.json", res.summary))
    return res


def run_feedback(cfg: ExperimentConfig, out: Path) -> ExperimentOutput:
    p = cfg.params
    par = FeedbackParams(p["target_theta"], p["gamma_meas"], p["w_cutoff"], p["duration"], p["omega_0"],
                         dt=p["dt"] or None)
    r = feedback_protocol(par, cfg.n_traj, cfg.seed)
    rows = list(zip(range(cfg.n_traj), r.final_theta, r.cum_heat, r.cum_work))
    res = ExperimentOutput()
    res.files.append(write_csv(out / "trajectories.csv", ("traj_id", "final_theta", "Q_q", "W_fb"), rows))
    heat = mean_estimate(r.cum_heat)
    work = mean_estimate(r.cum_work)
    res.summary = {"fidelity": r.fidelity, "fidelity_err": r.fidelity_stderr, "mean_Qq": heat.mean,
                   "mean_W_fb": work.mean}
    res.files.append(write_json(out / "summary.json", res.summary))
    res.lines = [f"feedback fidelity={r.fidelity:.6g} ± {r.fidelity_stderr:.2g} "
                 f"mean_Qq={pm(heat)} mean_W_fb={pm(work)}"]
    return res


def run_compare(cfg: ExperimentConfig, out: Path) -> ExperimentOutput:
    p = cfg.params
    rows = fme_obe.compare_sweep(p["n_points"], p["delta"], p["gamma_q"], p["hw_over_kT"], p["omega_L"],
                                 p["g_max"])
    res = ExperimentOutput()
    res.files.append(write_compare_csv(out / "comparison.csv", rows))
    bal = max(max(abs(r["PL_obe"] + r["Pres_obe"]), abs(r["PL_fme"] + r["Pres_fme"])) for r in rows)
    rel = lambda a, b: abs(a - b) / max(abs(a), abs(b), 1e-300)
    dev = {k: max(rel(r[f"{k}_obe"], r[f"{k}_fme"]) for r in rows) for k in ("Pe", "im_s", "PL")}
    res.summary = {"max_balance": bal, "max_rel_dev": dev, "max_abs_re_s_fme": max(abs(r["re_s"]) for r in rows)}
    res.files.append(write_json(out / "summary.json", res.summary))
    res.lines = [f"fme-obe-compare max|P_L+P_res|={bal:.3g} "
                 + " ".join(f"max_rel_dev[{k}]={v:.3g}" for k, v in dev.items())]
    return res


def write_compare_csv(path: Path, rows: list[dict]) -> Path:
    return write_csv(path, fme_obe.COMPARE_COLUMNS, [[r[c] for c in fme_obe.COMPARE_COLUMNS] for r in rows])


def finite_eta_spec(hw_over_kT: float, mu_over_gamma: float, t_f_gamma: float, gamma_q: float = 1.0,
                    omega_0: float = 1.0, dt: float | None = None):
    """Low-temperature Stark ramp used for the detection-efficiency study."""
    T = omega_0 / hw_over_kT
    g_minus = gamma_q * (thermal_occupation(omega_0, T) + 1)
    return stark_shift_protocol(mu_over_gamma * g_minus, T, t_f=t_f_gamma / g_minus, gamma_q=gamma_q,
                                omega_0=omega_0, dt=dt)


def run_finite_eta(cfg: ExperimentConfig, out: Path) -> ExperimentOutput:
    p = cfg.params
    spec = finite_eta_spec(p["hw_over_kT"], p["mu_over_gamma"], p["t_f_gamma"], p["gamma_q"], p["omega_0"],
                           p["dt"] or None)
    res = ExperimentOutput()
    rows = []
    for eta in p["eta"]:
        r = fe.finite_efficiency_experiment(spec, eta, cfg.n_traj, p["n_fict"], cfg.seed)
        rows.append((eta, r.uncorrected.mean, r.uncorrected.std_error, r.corrected.mean, r.corrected.std_error,
                     cfg.n_traj, p["n_fict"]))
        res.lines.append(f"finite-eta eta={eta:g}: uncorrected={pm(r.uncorrected)} corrected={pm(r.corrected)}")
    res.files.append(write_csv(out / "finite_eta.csv", FINITE_ETA_COLUMNS, rows))
    res.summary = {f"{r[0]:g}": dict(zip(FINITE_ETA_COLUMNS, r)) for r in rows}
    res.files.append(write_json(out / "summary.json", res.summary))
    return res


def _om_params(p: dict, prefix: str = "") -> om.OptomechParams:
    return om.OptomechParams(omega_0=p[prefix + "omega_0"], Omega_m=p[prefix + "Omega_m"], g_m=p[prefix + "g_m"],
                             g=p[prefix + "g"], gamma_q=p["gamma_q"], T=p[prefix + "T"])


def run_semicl(cfg: ExperimentConfig, out: Path) -> ExperimentOutput:
    """Semiclassical hybrid run plus the Gaussian ensemble moments driven by Gamma_opt(x(t))."""
    p = cfg.params
    par = _om_params(p)
    period = 2 * math.pi / par.Omega_m
    beta0 = complex(p["beta_re"], p["beta_im"])
    dt_q = 0.01 / par.gamma_q
    stride = max(1, int(round(0.01 / par.Omega_m / dt_q)))
    run = om.semiclassical_run(om.thermal_start(par, beta0), par, p["periods"] * period, dt=dt_q, stride=stride)
    gam = np.array([max(om.gamma_opt(par.detuning(x), par), 0.0) for x in run.x])
    st = om.GaussianMOState.coherent(beta0)
    mom = [st.as_array()]
    for i in range(len(run.t) - 1):
        st = om.gaussian_ensemble_step(st, gam[i], par.Omega_m, run.t[i + 1] - run.t[i])
        mom.append(st.as_array())
    mom = np.array(mom)
    W = run.W - run.W[0]
    Q = run.U_q - run.U_q[0] - W
    rows = [(run.t[i], run.x[i], run.p[i], mom[i, 2], mom[i, 3], mom[i, 4], run.P_e[i], run.s[i].real,
             run.s[i].imag, gam[i], run.U_m[i], W[i], Q[i], run.S_vn[i]) for i in range(len(run.t))]
    res = ExperimentOutput()
    res.files.append(write_csv(out / "optomech.csv", OPTOMECH_COLUMNS, rows))
    dgrid = np.linspace(-p["delta_span"], p["delta_span"], p["n_delta"])
    n = par.occupation(0.0)
    spec_rows = [(d, om.population_noise(d, par.g, par.gamma_q, n).real, om.gamma_opt(d, par)) for d in dgrid]
    res.files.append(write_csv(out / "noise_spectrum.csv", ("delta", "re_S0", "Gamma_opt"), spec_rows))
    res.summary = {"mean_Gamma_opt": float(gam.mean()), "final_V_X": float(mom[-1, 2]),
                   "final_V_P": float(mom[-1, 3]), "W": float(W[-1]), "dU_m": float(run.U_m[-1] - run.U_m[0])}
    res.files.append(write_json(out / "summary.json", res.summary))
    res.lines = [f"optomech-semicl mean_Gamma_opt={gam.mean():.4g} V_X(t_f)={mom[-1, 2]:.4g} "
                 f"V_P(t_f)={mom[-1, 3]:.4g}"]
    return res


def run_noise(cfg: ExperimentConfig, out: Path) -> ExperimentOutput:
    """One monitored (QSD) trajectory of the oscillator and the long-time energy drift."""
    p = cfg.params
    par = _om_params(p)
    period = 2 * math.pi / par.Omega_m
    beta0 = complex(p["beta_re"], p["beta_im"])
    traj = om.long_time_run(par, p["periods"] * period, cfg.seed, beta0, average_periods=1).raw
    res = ExperimentOutput()
    rows = []
    for t, x, pp, vx, vp, c, pe, g in traj:
        n = par.occupation(x)
        _, s = fme_obe.obe_steady_state(par.g, par.detuning(x), par.gamma_q, n) if par.g else (pe, 0j)
        rows.append((t, x, pp, vx, vp, c, pe, s.real, s.imag, g, par.Omega_m * (x * x + pp * pp + vx + vp - 2) / 4,
                     math.nan, math.nan, float(om.shannon(pe))))
    res.files.append(write_csv(out / "optomech.csv", OPTOMECH_COLUMNS, rows))
    every = max(1, int(round(period / (traj[1, 0] - traj[0, 0]))))
    wig = [(t, *om.GaussianMOState(x, pp, vx, vp, c).wigner_parameters(), x, pp)
           for t, x, pp, vx, vp, c, _, _ in traj[::every]]
    res.files.append(write_csv(out / "wigner.csv", ("t", "a", "b", "c", "x", "p"), wig))
    dpar = _om_params(p, "drift_") if p["drift_periods"] > 0 else None
    vx = traj[:, 3]
    res.summary = {"V_X_min": float(vx.min()), "V_X_max": float(vx.max()), "mean_C_XP": float(traj[:, 5].mean())}
    res.lines = [f"optomech-noise V_X in [{vx.min():.4g}, {vx.max():.4g}] mean C_XP={traj[:, 5].mean():.4g}"]
    if dpar is not None:
        dper = 2 * math.pi / dpar.Omega_m
        d = om.long_time_run(dpar, p["drift_periods"] * dper, cfg.seed, 1j * p["drift_beta"],
                             average_periods=p["average_periods"])
        res.files.append(write_csv(out / "drift.csv", ("t", "U_m", "P_e", "Gamma_opt"),
                                   list(zip(d.t, d.U_m, d.P_e, d.Gamma_opt))))
        res.summary |= {"drift_U_m_first": float(d.U_m[0]), "drift_U_m_last": float(d.U_m[-1]),
                        "drift_P_e_first": float(d.P_e[0]), "drift_P_e_last": float(d.P_e[-1])}
        res.lines.append(f"optomech-noise drift U_m {d.U_m[0]:.4g} -> {d.U_m[-1]:.4g}, "
                         f"P_e {d.P_e[0]:.4g} -> {d.P_e[-1]:.4g}")
    res.files.append(write_json(out / "summary.json", res.summary))
    return res


def run_landauer(cfg: ExperimentConfig, out: Path) -> ExperimentOutput:
    """First-quarter thermodynamics against initial momentum, and the slow damping of the oscillator."""
    p = cfg.params
    par = _om_params(p)
    period = 2 * math.pi / par.Omega_m
    res = ExperimentOutput()
    rows = []
    for p_i in p["p_i"]:
        beta = 0.5j * p_i
        run = om.semiclassical_run(om.thermal_start(par, beta), par, period, stride=p["stride"])
        m = om.landauer_cycle_metrics(run)
        x_f = run.x[np.argmin(np.abs(run.t - period / 4))]
        w_rev = om.reversible_work(x_f, par.omega_0, par.g_m, par.T)
        w, du = om.battery_work_check(run)
        rows.append((p_i, m.W[0], m.dU_m[0], m.Q[0], m.dS_vn[0], m.entropy_produced[0], w_rev,
                     abs(w + du) / max(abs(w), 1e-300)))
    cols = ("p_i", "W", "dU_m", "Q", "dS_VN", "entropy_produced", "W_rev", "battery_rel_err")
    res.files.append(write_csv(out / "quarter.csv", cols, rows))
    res.lines += [f"landauer p_i={r[0]:g}: W={r[1]:.6g} W_rev={r[6]:.6g} Q/(T dS)={r[3] / (par.T * r[4]):.6g} "
                  f"|W+dU_m|/|W|={r[7]:.2g}" for r in rows]
    if p["damping_periods"] > 0:
        dpar = _om_params(p, "damping_")
        dper = 2 * math.pi / dpar.Omega_m
        beta = 0.5j * p["damping_p_i"]
        run = om.semiclassical_run(om.thermal_start(dpar, beta), dpar, p["damping_periods"] * dper,
                                   stride=p["stride"])
        win = max(1, int(round(p["average_periods"] * dper / (run.t[1] - run.t[0]))))
        nw = len(run.t) // win
        tm = run.t[: nw * win].reshape(nw, win).mean(axis=1)
        um = run.U_m[: nw * win].reshape(nw, win).mean(axis=1)
        res.files.append(write_csv(out / "damping.csv", ("t", "U_m_avg"), list(zip(tm, um))))
        res.lines.append(f"landauer damping U_m {um[0]:.6g} -> {um[-1]:.6g} over {p['damping_periods']:g} periods")
    res.summary = {"quarters": [dict(zip(cols, r)) for r in rows]}
    res.files.append(write_json(out / "summary.json", res.summary))
    return res


_OM_BASE = dict(omega_0=1e4, Omega_m=0.05, g_m=0.1, g=5.0, T=0.0, gamma_q=1.0, beta_re=0.0, beta_im=20.0)

REGISTRY: dict[str, Experiment] = {e.name: e for e in (
    Experiment("stark-je", run_stark, dict(mu_over_gamma=(0.1, 1.0, 10.0), hw_over_kT=(0.3, 3.0), gamma_q=1.0,
                                           omega_0=1.0, t_f_gamma=10.0, bins=60, dt=0.0),
               100_000, ("f2:StarkShift",), "Jarzynski test of a linear frequency ramp under thermalization"),
    Experiment("rabi-je", run_rabi, dict(g_over_gamma=(0.01, 0.1, 1.0, 10.0, 100.0), hw_over_kT=3.0,
                                         gamma_minus=1e-3, omega_0=1.0, delta=0.0, n_rabi=2.0, dt=0.0),
               100_000, ("f3:JE",), "Jarzynski test of a resonantly driven qubit"),
    Experiment("spont-em", run_spont, dict(gamma_q=1.0, t_f=10.0, omega_0=1.0, dt=0.0), 100_000, (),
               "Emission of |+> into a zero-temperature bath"),
    Experiment("mpe", run_mpe, dict(theta=(0.1, math.pi / 4, math.pi / 2), axes=("x", "z", "y", "xz"),
                                    omega_0=1.0, T_C=0.1, tau_m=0.0, tau_fb=0.0, g=1.0),
               100_000, (), "Measurement-powered engine cycles"),
    Experiment("feedback", run_feedback, dict(target_theta=math.pi / 2, gamma_meas=0.1, w_cutoff=math.inf,
                                              duration=200.0, omega_0=1.0, dt=0.0),
               1000, (), "Diffusive readout with restoring feedback"),
    Experiment("fme-obe-compare", run_compare, dict(n_points=20, delta=1e-2, gamma_q=1e-3, hw_over_kT=10.0,
                                                    omega_L=1.0, g_max=0.1),
               0, ("f3:Comparison",), "Steady states of the Floquet and Bloch descriptions"),
    Experiment("finite-eta", run_finite_eta, dict(eta=(1.0, 0.3, 0.1), hw_over_kT=1.0, mu_over_gamma=9.0,
                                                  t_f_gamma=1.0, gamma_q=1.0, omega_0=1.0, n_fict=10_000, dt=0.0),
               10_000, ("f2:FiniteEff",), "Jarzynski test with missed detections"),
    Experiment("optomech-semicl", run_semicl, _OM_BASE | dict(periods=10.0, delta_span=20.0, n_delta=201),
               0, ("f4:GamOptAv",), "Semiclassical qubit-oscillator run with ensemble moments"),
    Experiment("optomech-noise", run_noise, _OM_BASE | dict(
        periods=10.0, drift_omega_0=1e4, drift_Omega_m=0.05, drift_g_m=0.3, drift_g=1.0, drift_T=0.0,
        drift_beta=2.0, drift_periods=300.0, average_periods=20.0),
               0, ("f4:GamOptTraj", "f4:DriftMO"), "Monitored oscillator trajectory and long-time drift"),
    Experiment("landauer", run_landauer, dict(
        omega_0=1e4, Omega_m=0.01, g_m=0.1, g=0.0, T=3e4, gamma_q=1.0, p_i=(100.0, 1000.0, 3000.0, 10000.0),
        stride=100, damping_omega_0=1e3, damping_Omega_m=0.01, damping_g_m=0.1, damping_g=0.0, damping_T=10.0,
        damping_p_i=9900.0, damping_periods=100.0, average_periods=20.0),
               0, ("f4:Conversion",), "Work and heat of an oscillator-driven qubit frequency modulation"),
)}


def defaults(name: str) -> dict:
    e = REGISTRY[name]
    return {"params": dict(e.params), "n_traj": e.n_traj}
