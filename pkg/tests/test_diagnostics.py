"""Effective rank, empirical SNR, and the analytic group-sampling model."""

import math

import numpy as np
import pytest

from spectralopt.diagnostics import (
    RlvrSnrParams,
    empirical_snr,
    erank,
    head_norm_variance,
    kappa_g,
    q_nd,
    rho_g,
    snr_grpo,
    snr_ratio_full,
    snr_sft,
)
from spectralopt.errors import (
    ConfigurationError,
    DegenerateInputError,
    DegenerateVarianceError,
)
from spectralopt.rng import STREAM_FIXTURE, stream


def test_erank_exact_cases():
    assert erank(np.eye(5)).erank == pytest.approx(5.0, rel=1e-12)
    assert erank(np.diag([0.5, 0.5, 0.0])).erank == pytest.approx(2.0, rel=1e-12)
    rng = stream(80, STREAM_FIXTURE)
    rank1 = np.outer(rng.standard_normal(6), rng.standard_normal(9))
    assert erank(rank1).erank == pytest.approx(1.0, rel=1e-12)


def test_erank_is_scale_invariant_and_bounded():
    rng = stream(81, STREAM_FIXTURE)
    x = rng.standard_normal((10, 7))
    rep = erank(x)
    assert erank(100.0 * x).erank == pytest.approx(rep.erank, rel=1e-12)
    assert 1.0 <= rep.erank <= 7.0
    assert rep.probs.sum() == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DegenerateInputError):
        erank(np.zeros((3, 3)))


def test_empirical_snr_validation():
    rng = stream(82, STREAM_FIXTURE)
    a = rng.standard_normal((3, 3))
    with pytest.raises(ConfigurationError):
        empirical_snr([a])
    with pytest.raises(ConfigurationError):
        empirical_snr([a, rng.standard_normal((2, 3))])
    with pytest.raises(DegenerateVarianceError):
        empirical_snr([a, a.copy(), a.copy()])


def test_empirical_snr_small_monte_carlo():
    mu = np.full((4, 4), 0.8)
    noise = stream(83, STREAM_FIXTURE)
    samples = [mu + 0.5 * noise.standard_normal((4, 4)) for _ in range(600)]
    est = empirical_snr(samples)
    closed = float(np.linalg.norm(mu)) ** 2 / (16 * 0.25)
    assert est.snr == pytest.approx(closed, rel=0.15)
    assert est.sample_count == 600


def test_group_constants_exact_values():
    assert q_nd(2, 0.5) == 0.5
    assert rho_g(2, 0.5) == 0.5
    assert kappa_g(2, 0.5) == 0.125
    # one non-degenerate split for g=2: q = 2 p (1-p)
    for p in (0.1, 0.3, 0.7):
        assert q_nd(2, p) == pytest.approx(2.0 * p * (1.0 - p), rel=1e-14)


def test_group_constants_validation():
    for bad_g in (1, 0, True, 2.0):
        with pytest.raises(ConfigurationError):
            kappa_g(bad_g, 0.5)
    for bad_p in (0.0, 1.0, -0.2):
        with pytest.raises(ConfigurationError):
            q_nd(2, bad_p)


def test_binomial_tail_paths_agree():
    # g = 170 uses exact comb, g = 171 switches to the log-gamma path;
    # kappa is smooth in g near the p(1-p) limit so adjacent values align
    lo, hi = kappa_g(170, 0.3), kappa_g(171, 0.3)
    assert hi == pytest.approx(lo, rel=1e-3)
    assert q_nd(171, 0.5) == pytest.approx(1.0, abs=1e-12)


def test_snr_sft_closed_form():
    unit = RlvrSnrParams(g=1, p=0.5, T=1.0, sigma_s_sq=1.0, sbar_sq=1.0, delta_sq=1.0)
    assert snr_sft(unit) == 1.0
    scaled = RlvrSnrParams(
        g=8, p=0.5, T=512.0, sigma_s_sq=1.0, sbar_sq=0.0016, delta_sq=1.0
    )
    assert snr_sft(scaled) == pytest.approx(6.5536, rel=1e-12)
    with pytest.raises(DegenerateVarianceError):
        snr_sft(
            RlvrSnrParams(g=1, p=0.5, T=1.0, sigma_s_sq=0.0, sbar_sq=1.0, delta_sq=1.0)
        )


def test_snr_grpo_matches_direct_binomial_sum():
    g, p = 8, 0.2
    q = 1.0 - p**g - (1.0 - p) ** g
    rho = sum(
        math.sqrt((k / g) * (1.0 - k / g))
        * math.comb(g, k)
        * p**k
        * (1.0 - p) ** (g - k)
        for k in range(1, g)
    ) / q
    kappa = q * rho * rho
    params = RlvrSnrParams(
        g=g, p=p, T=512.0, sigma_s_sq=2.0, sbar_sq=1.0, delta_sq=1e-5
    )
    assert kappa_g(g, p) == pytest.approx(kappa, rel=1e-13)
    assert snr_grpo(params) == pytest.approx(g * 512.0 * kappa * 1e-5 / 2.0, rel=1e-13)


def test_snr_ratio_balance_and_penalties():
    g, p = 4, 0.5
    kappa = kappa_g(g, p)
    base = dict(g=g, p=p, T=100.0, sigma_s_sq=1.0, delta_sq=0.01)
    balanced = RlvrSnrParams(sbar_sq=kappa * 0.01, **base)
    assert snr_ratio_full(balanced) == pytest.approx(1.0, rel=1e-12)
    clipped = RlvrSnrParams(sbar_sq=kappa * 0.01, alpha=0.5, **base)
    assert snr_ratio_full(clipped) == pytest.approx(2.0, rel=1e-12)
    noisy_tokens = RlvrSnrParams(sbar_sq=kappa * 0.01, chi_sq=3.0, **base)
    assert snr_ratio_full(noisy_tokens) == pytest.approx(4.0, rel=1e-12)
    with pytest.raises(DegenerateVarianceError):
        snr_ratio_full(RlvrSnrParams(sbar_sq=1.0, **{**base, "delta_sq": 0.0}))


def test_head_norm_variance():
    ones = [np.array([[1.0]]), np.array([[3.0]])]
    assert head_norm_variance(ones) == pytest.approx(1.0, rel=1e-15)
    doubled = [2.0 * b for b in ones]
    assert head_norm_variance(doubled) == pytest.approx(4.0, rel=1e-15)
    same = [np.ones((2, 2)), np.ones((2, 2))]
    assert head_norm_variance(same) == 0.0
    with pytest.raises(ConfigurationError):
        head_norm_variance([np.ones((2, 2))])
