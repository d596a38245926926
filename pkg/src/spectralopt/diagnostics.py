"""Spectral and statistical diagnostics.

Three families:

- Effective rank of a matrix from the entropy of its normalized singular
  value spectrum. Scale-invariant; 1 for rank one, min(m, n) for a flat
  spectrum.
- Empirical gradient signal-to-noise: squared Frobenius norm of the sample
  mean over the population variance of a batch of gradient matrices.
- The analytic group-sampling SNR model for supervised vs. grouped-reward
  fine-tuning. The key object is kappa_g(p) = q_nd * rho_g(p)^2, where q_nd
  is the probability a size-g group of Bernoulli(p) rewards is non-degenerate
  (not all 0 or all 1) and rho_g is the expected per-sample advantage scale
  over non-degenerate groups. kappa tends to p(1-p) for large g.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ConfigurationError, DegenerateInputError, DegenerateVarianceError
from .matrix import frobenius_norm, require_matrix, singular_values

VARIANCE_FLOOR = 1e-30
EXACT_BINOMIAL_MAX_G = 170


@dataclass(frozen=True)
class SpectrumReport:
    sigmas: np.ndarray
    probs: np.ndarray
    entropy: float
    erank: float


def erank(m) -> SpectrumReport:
    """Effective rank: exp of the entropy of the normalized spectrum."""
    a = require_matrix(m)
    sig = singular_values(a)
    total = float(np.sum(sig))
    if total <= 0.0 or not np.any(a):
        raise DegenerateInputError("erank undefined for the zero matrix")
    probs = sig / total
    nz = probs[probs > 0.0]
    entropy = float(-np.sum(nz * np.log(nz)))
    return SpectrumReport(sigmas=sig, probs=probs, entropy=entropy, erank=float(np.exp(entropy)))


@dataclass(frozen=True)
class SnrEstimate:
    mean_sq_norm: float
    variance: float
    snr: float
    sample_count: int


def empirical_snr(samples) -> SnrEstimate:
    """||sample mean||_F^2 over the population variance of the batch."""
    mats = [require_matrix(s) for s in samples]
    if len(mats) < 2:
        raise ConfigurationError(f"need at least 2 samples, got {len(mats)}")
    shape = mats[0].shape
    for g in mats[1:]:
        if g.shape != shape:
            raise ConfigurationError(f"sample shapes differ: {g.shape} vs {shape}")
    stack = np.stack(mats)
    mean = stack.mean(axis=0)
    variance = float(np.mean(np.sum((stack - mean) ** 2, axis=(1, 2))))
    if variance < VARIANCE_FLOOR:
        raise DegenerateVarianceError(
            f"gradient batch variance {variance} below floor {VARIANCE_FLOOR}"
        )
    mean_sq = frobenius_norm(mean) ** 2
    return SnrEstimate(
        mean_sq_norm=mean_sq,
        variance=variance,
        snr=mean_sq / variance,
        sample_count=len(mats),
    )


# -- analytic group-sampling SNR model ---------------------------------------


@dataclass(frozen=True)
class RlvrSnrParams:
    g: int
    p: float
    T: float
    sigma_s_sq: float
    sbar_sq: float
    delta_sq: float
    chi_sq: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        # g = 1 is allowed here because the supervised SNR needs no group
        # statistics; anything touching kappa/rho/q_nd requires g >= 2.
        if not isinstance(self.g, (int, np.integer)) or isinstance(self.g, bool) or self.g < 1:
            raise ConfigurationError(f"group size g must be a positive integer, got {self.g}")
        if not 0.0 < self.p < 1.0:
            raise ConfigurationError(f"success probability p must be in (0, 1), got {self.p}")
        if self.T <= 0:
            raise ConfigurationError(f"length T must be positive, got {self.T}")
        for name in ("sigma_s_sq", "sbar_sq", "delta_sq", "chi_sq"):
            if getattr(self, name) < 0.0:
                raise ConfigurationError(f"{name} must be >= 0")
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigurationError(f"clip fraction alpha must be in [0, 1), got {self.alpha}")


def _binom_pmf(g: int, k: np.ndarray, p: float) -> np.ndarray:
    # math.comb is exact but overflows float conversion above g ~ 1000; the
    # log-gamma path holds full double precision for any desk-scale g.
    if g <= EXACT_BINOMIAL_MAX_G:
        coef = np.array([math.comb(g, int(kk)) for kk in k], dtype=np.float64)
        return coef * p**k * (1.0 - p) ** (g - k)
    logpmf = (
        gammaln(g + 1)
        - gammaln(k + 1)
        - gammaln(g - k + 1)
        + k * np.log(p)
        + (g - k) * np.log1p(-p)
    )
    return np.exp(logpmf)


def q_nd(g: int, p: float) -> float:
    """Probability a size-g Bernoulli(p) reward group is not all-0 or all-1."""
    _validate_group(g, p)
    return float(1.0 - p**g - (1.0 - p) ** g)


def rho_g(g: int, p: float) -> float:
    """Mean advantage scale sqrt(K/g (1 - K/g)) over non-degenerate groups."""
    _validate_group(g, p)
    k = np.arange(1, g, dtype=np.float64)
    frac = k / g
    weights = _binom_pmf(g, k, p)
    return float(np.sum(np.sqrt(frac * (1.0 - frac)) * weights) / q_nd(g, p))


def kappa_g(g: int, p: float) -> float:
    """Effective reward-signal factor; approaches p(1-p) for large g."""
    return q_nd(g, p) * rho_g(g, p) ** 2


def _validate_group(g, p) -> None:
    if not isinstance(g, (int, np.integer)) or isinstance(g, bool) or g < 2:
        raise ConfigurationError(f"group size g must be an integer >= 2, got {g}")
    if not 0.0 < p < 1.0:
        raise ConfigurationError(f"success probability p must be in (0, 1), got {p}")


def snr_sft(params: RlvrSnrParams) -> float:
    """Supervised fine-tuning SNR: g * T * sbar_sq / sigma_s_sq."""
    if params.sigma_s_sq == 0.0:
        raise DegenerateVarianceError("sigma_s_sq = 0 makes the SNR undefined")
    return params.g * params.T * params.sbar_sq / params.sigma_s_sq


def snr_grpo(params: RlvrSnrParams) -> float:
    """Grouped-reward SNR: g * T * kappa_g(p) * delta_sq / sigma_s_sq."""
    if params.sigma_s_sq == 0.0:
        raise DegenerateVarianceError("sigma_s_sq = 0 makes the SNR undefined")
    return params.g * params.T * kappa_g(params.g, params.p) * params.delta_sq / params.sigma_s_sq


def snr_ratio_full(params: RlvrSnrParams) -> float:
    """SFT/GRPO SNR ratio with off-policy and clipping corrections.

    (sbar_sq / (kappa * delta_sq)) * (1 + chi_sq) / (1 - alpha).
    """
    if params.delta_sq == 0.0:
        raise DegenerateVarianceError("delta_sq = 0 makes the ratio undefined")
    kappa = kappa_g(params.g, params.p)
    return (params.sbar_sq / (kappa * params.delta_sq)) * (1.0 + params.chi_sq) / (
        1.0 - params.alpha
    )


def head_norm_variance(blocks) -> float:
    """Population variance of per-head Frobenius norms."""
    if len(blocks) < 2:
        raise ConfigurationError(f"need at least 2 head blocks, got {len(blocks)}")
    norms = np.array([frobenius_norm(require_matrix(b)) for b in blocks])
    return float(np.var(norms))
