from __future__ import annotations

import json

import pytest

from qtraj.cli import main
from qtraj.experiments import REGISTRY
from qtraj.output import read_columns
from qtraj.plotting import FIGURES

SMALL_STARK = ["--set", "mu_over_gamma=1", "--set", "hw_over_kT=1,3", "--set", "t_f_gamma=1", "--set", "bins=10"]


@pytest.fixture
def stark_run(tmp_path):
    assert main(["run", "stark-je", "--traj", "300", "--seed", "1", "--threads", "1", "--out", str(tmp_path)]
                + SMALL_STARK) == 0
    return tmp_path / "stark-je_seed1"


def test_unknown_experiment_lists_names(tmp_path, capsys):
    assert main(["run", "nope", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert all(name in err for name in REGISTRY)


def test_bad_override_is_a_usage_error(tmp_path, capsys):
    assert main(["run", "stark-je", "--set", "mu=1", "--out", str(tmp_path)]) == 2
    assert "valid keys" in capsys.readouterr().err


def test_too_few_trajectories(tmp_path):
    assert main(["run", "stark-je", "--traj", "1", "--out", str(tmp_path)]) == 2


def test_histogram_counts_every_trajectory(stark_run):
    h = read_columns(stark_run / "entropy_histogram.csv", ("mu_over_gamma", "hw_over_kT", "count"))
    totals: dict[tuple[str, str], int] = {}
    for r, hw, c in zip(h["mu_over_gamma"], h["hw_over_kT"], h["count"]):
        totals[(r, hw)] = totals.get((r, hw), 0) + int(c)
    assert len(totals) == 2
    assert set(totals.values()) == {300}


def test_manifest_records_resolved_config(stark_run):
    man = json.loads((stark_run / "manifest.json").read_text(encoding="utf-8"))
    assert man["config"]["n_traj"] == 300
    assert man["config"]["params"]["hw_over_kT"] == [1.0, 3.0]
    assert set(man["files"]) == {"summary.csv", "entropy_histogram.csv", "summary.json"}


def test_rerun_reproduces_checksums(stark_run, capsys):
    capsys.readouterr()
    assert main(["rerun", str(stark_run / "manifest.json")]) == 0
    out = capsys.readouterr().out.split("\n")
    assert [l for l in out if l] and all(l.startswith("MATCH") for l in out if l)


def test_rerun_detects_tampering(stark_run, capsys):
    p = stark_run / "summary.csv"
    p.write_bytes(p.read_bytes() + b"x")
    man = json.loads((stark_run / "manifest.json").read_text(encoding="utf-8"))
    man["files"]["summary.csv"] = "0" * 64
    (stark_run / "manifest.json").write_text(json.dumps(man), encoding="utf-8")
    assert main(["rerun", str(stark_run)]) == 1
    assert "DIFFER summary.csv" in capsys.readouterr().out


def test_plot_stark(stark_run):
    assert main(["plot", str(stark_run), "--figure", "f2:StarkShift"]) == 0
    assert (stark_run / "plots" / "f2_StarkShift.gp").exists()


def test_plot_wrong_run_kind(stark_run, capsys):
    assert main(["plot", str(stark_run), "--figure", "f3:JE"]) == 2
    assert "rabi-je" in capsys.readouterr().err


def test_unknown_figure_lists_supported(stark_run, capsys):
    assert main(["plot", str(stark_run), "--figure", "f9:Nope"]) == 2
    err = capsys.readouterr().err
    assert all(f in err for f in FIGURES)


def test_comparison_figure_has_four_panels(tmp_path):
    assert main(["run", "fme-obe-compare", "--out", str(tmp_path)]) == 0
    run = tmp_path / "fme-obe-compare_seed1"
    assert main(["plot", str(run), "--figure", "f3:Comparison"]) == 0
    dats = sorted(p.name for p in (run / "plots").glob("*.dat"))
    assert dats == [f"f3_Comparison_{t}.dat" for t in ("a_re_s", "b_im_s", "c_Pe", "d_flows")]


def test_compare_command(tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    assert main(["compare-fme-obe", "--sweep", "theta", "--out", str(out), "--points", "5"]) == 0
    assert "sha256=" in capsys.readouterr().out
    assert len(read_columns(out)["theta"]) == 5


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert all(out.count(f"{name}:") >= 1 for name in REGISTRY)
