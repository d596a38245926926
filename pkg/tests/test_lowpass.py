"""Low-pass fitting: bands, batched loss, gradient, and the solver wrapper."""

import numpy as np
import pytest

import spectralopt.lowpass as lowpass
from spectralopt.errors import ConfigurationError, FitFailureError
from spectralopt.filters import PROMOTION, QuinticOdd
from spectralopt.lowpass import (
    FitConfig,
    build_bands,
    compose_batch,
    fit,
    fit_loss,
    flatten_theta,
    load_fit_result_json,
    loss_and_grad,
    polish_reference_row,
    reference_row,
    reference_table,
    save_fit_result_json,
    theta_steps,
    warm_start,
)
from spectralopt.rng import STREAM_FIXTURE, stream


def test_fit_config_validation():
    with pytest.raises(ConfigurationError):
        FitConfig(tau=0.0)
    with pytest.raises(ConfigurationError):
        FitConfig(tau=1.0)
    with pytest.raises(ConfigurationError):
        FitConfig(tau=0.03)  # pass band collapses below the 0.01 floor
    with pytest.raises(ConfigurationError):
        FitConfig(tau=0.5, delta=-0.01)


def test_band_construction_midrange():
    cfg = FitConfig(tau=0.5)
    grid = build_bands(cfg)
    assert grid.pass_positive.size == 250
    assert grid.stop_positive.size == 250
    assert grid.pass_positive[0] == pytest.approx(0.01)
    assert grid.pass_positive[-1] == pytest.approx(0.47)
    assert grid.stop_positive[0] == pytest.approx(0.53)
    assert grid.stop_positive[-1] == pytest.approx(1.0)
    # mirrored grids hold the negated points too
    assert grid.pass_points.size == 500
    assert grid.stop_points.size == 500
    assert grid.pass_points.min() == pytest.approx(-0.47)


def test_band_construction_short_stop_band():
    grid = build_bands(FitConfig(tau=0.9))  # stop band [0.93, 1.0] is short
    assert grid.pass_positive.size == 50
    assert grid.stop_positive.size == 50
    grid_low = build_bands(FitConfig(tau=0.1))  # short pass band this time
    assert grid_low.pass_positive.size == 50


def test_band_construction_rejects_empty_stop_band():
    with pytest.raises(ConfigurationError):
        build_bands(FitConfig(tau=0.98))


def test_flatten_theta_accepts_equivalent_forms():
    steps = warm_start()
    flat = flatten_theta(steps)
    assert flat.shape == (15,)
    assert np.array_equal(flatten_theta(flat), flat)
    assert theta_steps(flat) == steps
    with pytest.raises(ConfigurationError):
        flatten_theta(np.zeros(14))


def test_warm_start_layout():
    steps = warm_start()
    assert steps[0] == QuinticOdd(1.0, 0.0, 0.0)
    assert steps[1:] == (PROMOTION,) * 4


def test_identity_schedule_loss_matches_direct_sum():
    cfg = FitConfig(tau=0.5)
    grid = build_bands(cfg)
    flat = flatten_theta((QuinticOdd(1.0, 0.0, 0.0),) * 5)
    # f(x) = x: no overshoot, no negativity; only band errors remain
    expected = 3.0 * np.mean((grid.pass_positive - 1.0) ** 2) + 8.0 * np.mean(
        grid.stop_positive**2
    )
    assert fit_loss(flat, grid, cfg) == pytest.approx(expected, rel=1e-12)


def test_composition_is_odd_and_clipped():
    rng = stream(70, STREAM_FIXTURE)
    thetas = rng.standard_normal((4, 15)) * 2.0
    x = np.linspace(0.01, 1.0, 37)
    fwd = compose_batch(thetas, x, clip_bound=1e3)
    bwd = compose_batch(thetas, -x, clip_bound=1e3)
    assert np.array_equal(fwd, -bwd)
    blow_up = np.zeros((1, 15))
    blow_up[0, 0] = 1e4  # first step alone exceeds the clip bound
    out = compose_batch(blow_up, x, clip_bound=1e3)
    assert np.abs(out).max() <= 1e3


def test_gradient_matches_coarser_finite_difference():
    cfg = FitConfig(tau=0.5)
    grid = build_bands(cfg)
    flat = flatten_theta(warm_start()) + 0.01
    loss, grad = loss_and_grad(flat, grid, cfg)
    assert loss == pytest.approx(fit_loss(flat, grid, cfg), rel=1e-12)
    assert grad.shape == (15,)
    h = 1e-5
    for i in (0, 4, 9, 14):
        probe = flat.copy()
        probe[i] += h
        up = fit_loss(probe, grid, cfg)
        probe[i] -= 2 * h
        down = fit_loss(probe, grid, cfg)
        assert grad[i] == pytest.approx((up - down) / (2 * h), abs=1e-5)


def test_fit_is_deterministic_and_ranked(tmp_path):
    cfg = FitConfig(tau=0.9, seed=5, restarts=2)
    res_a = fit(cfg)
    res_b = fit(cfg)
    assert res_a.loss == res_b.loss
    assert res_a.steps == res_b.steps
    assert len(res_a.restart_losses) == 2
    finite = [x for x in res_a.restart_losses if np.isfinite(x)]
    assert res_a.loss == min(finite)
    assert res_a.restart_losses[res_a.best_index] == res_a.loss

    path = tmp_path / "fit.json"
    save_fit_result_json(path, res_a)
    back = load_fit_result_json(path)
    assert back.steps == res_a.steps
    assert back.loss == res_a.loss
    assert back.tau == res_a.tau
    assert back.seed == res_a.seed


def test_fit_raises_when_every_restart_diverges(monkeypatch):
    monkeypatch.setattr(lowpass, "_diverged", lambda res: True)
    with pytest.raises(FitFailureError):
        fit(FitConfig(tau=0.9, seed=0, restarts=2))


def test_reference_table_shape():
    table = reference_table()
    assert len(table) == 9
    assert [row.tau for row in table] == pytest.approx(np.arange(0.1, 0.95, 0.1))
    for row in table:
        assert len(row.steps) == 5
        assert row.loss > 0.0
    with pytest.raises(ConfigurationError):
        reference_row(0.35)


def test_polish_stays_inside_display_rounding_box():
    steps, raw, polished = polish_reference_row(0.5)
    printed = flatten_theta(reference_row(0.5).steps)
    assert np.abs(flatten_theta(steps) - printed).max() <= 5e-4 + 1e-12
    assert polished <= raw
