"""CLI exit codes, emitted artifacts, and the plot rendering path."""

import json
import os
from dataclasses import replace

import pytest

from spectralopt.cli import main
from spectralopt.diagnostics import erank, kappa_g, q_nd, rho_g
from spectralopt.experiments import ExperimentConfig, run_experiment, save_experiment_config
from spectralopt.lowpass import FitConfig, fit, save_fit_result_json
from spectralopt.matrix import save_matrix_json
from spectralopt.rng import STREAM_FIXTURE, stream


def test_inspect_filter_emits_grid(tmp_path, capsys):
    out = tmp_path / "profile.csv"
    assert main(["inspect-filter", "--out", str(out), "--grid-points", "21"]) == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 22
    assert lines[0].startswith("sigma,muon_ns_t1")
    assert str(out) in capsys.readouterr().out


def test_inspect_filter_rejects_bad_kp(tmp_path):
    assert main(["inspect-filter", "--kp", "7", "--out", str(tmp_path / "x.csv")]) == 2
    assert not (tmp_path / "x.csv").exists()


def test_inspect_filter_plot_renders_png(tmp_path):
    out = tmp_path / "profile.csv"
    assert main(["inspect-filter", "--out", str(out), "--grid-points", "41", "--plot"]) == 0
    png = tmp_path / "profile.png"
    assert png.exists()
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_run_usage_errors(tmp_path):
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == 2
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"experiment": "warp_drive"}))
    assert main(["run", "--config", str(wrong)]) == 2


def test_run_executes_config(tmp_path, capsys):
    cfg = ExperimentConfig(
        "erank_demo", seeds=(0,), steps=3, output=str(tmp_path / "er.csv")
    )
    cfg_path = tmp_path / "cfg.json"
    save_experiment_config(cfg_path, cfg)
    assert main(["run", "--config", str(cfg_path)]) == 0
    assert (tmp_path / "er.csv").exists()
    assert str(tmp_path / "er.csv") in capsys.readouterr().out


def test_run_reports_write_failure_as_experiment_error(tmp_path):
    cfg = ExperimentConfig(
        "filter_profile", grid_points=5,
        output=str(tmp_path / "no_such_dir" / "out.csv"),
    )
    cfg_path = tmp_path / "cfg.json"
    save_experiment_config(cfg_path, cfg)
    assert main(["run", "--config", str(cfg_path)]) == 1


def test_diagnose_erank(tmp_path, capsys):
    rng = stream(90, STREAM_FIXTURE)
    a = rng.standard_normal((9, 4))
    m = a @ a.T  # rank 4 gram
    path = tmp_path / "m.json"
    save_matrix_json(path, m)
    assert main(["diagnose", "--input", str(path), "--erank"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["rows"] == 9 and report["cols"] == 9
    assert report["erank"] == pytest.approx(erank(m).erank, rel=1e-12)
    assert len(report["sigmas"]) == 4

    assert main(["diagnose", "--input", str(path)]) == 2
    assert main(["diagnose", "--input", str(tmp_path / "nope.json"), "--erank"]) == 2


def test_snr_model_output_matches_library(capsys):
    argv = [
        "snr-model", "--g", "8", "--p", "0.2", "--T", "512",
        "--sigma-s-sq", "2.0", "--sbar-sq", "1.0", "--delta-sq", "1e-5",
        "--alpha", "0.2",
    ]
    assert main(argv) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["q_nd"] == pytest.approx(q_nd(8, 0.2), rel=1e-15)
    assert out["rho_g"] == pytest.approx(rho_g(8, 0.2), rel=1e-15)
    assert out["kappa_g"] == pytest.approx(kappa_g(8, 0.2), rel=1e-15)
    assert out["snr_sft"] == pytest.approx(8 * 512 * 1.0 / 2.0, rel=1e-12)


def test_snr_model_usage_errors():
    base = [
        "snr-model", "--p", "0.2", "--T", "512",
        "--sigma-s-sq", "2.0", "--sbar-sq", "1.0", "--delta-sq", "1e-5",
    ]
    # group statistics need g >= 2
    assert main(base + ["--g", "1"]) == 2
    assert main(["snr-model", "--g", "8", "--p", "1.5", "--T", "512",
                 "--sigma-s-sq", "2.0", "--sbar-sq", "1.0", "--delta-sq", "1e-5"]) == 2


def test_plotters_render_all_artifacts(tmp_path):
    from spectralopt.plotting import plot_fit_result, plot_for_experiment

    tiny = [
        ExperimentConfig("filter_profile", grid_points=31),
        ExperimentConfig("lowrank_stream", rows=12, cols=12, seeds=(0,), steps=6),
        ExperimentConfig("noisy_quadratic", rows=8, cols=8, seeds=(0,), steps=6),
        ExperimentConfig("erank_demo", seeds=(0,), steps=2),
        ExperimentConfig("headvar_demo", seeds=(0,)),
    ]
    for cfg in tiny:
        csv_path = str(tmp_path / f"{cfg.experiment}.csv")
        run_experiment(replace(cfg, output=csv_path))
        png_path = str(tmp_path / f"{cfg.experiment}.png")
        plot_for_experiment(cfg.experiment, csv_path, png_path)
        assert os.path.getsize(png_path) > 0

    res = fit(FitConfig(tau=0.9, seed=2, restarts=1))
    fit_path = str(tmp_path / "fit.json")
    save_fit_result_json(fit_path, res)
    plot_fit_result(fit_path, str(tmp_path / "fit.png"))
    assert os.path.getsize(str(tmp_path / "fit.png")) > 0
