"""Odd-quintic spectral filters and their schedules.

A single step maps a matrix X to a1*X + a3*X(X^T X) + a5*X(X^T X)^2. Because
the polynomial is odd, the map factors through the SVD: if X = U S V^T then
the step returns U f(S) V^T with f(s) = a1*s + a3*s^3 + a5*s^5, so a schedule
of steps composes the scalar maps left to right while leaving singular
subspaces untouched. That single identity is what every test in this module
leans on.

Three canonical steps:

- MUON_NS (3.4445, -4.7750, 2.0315): the aggressive whitening step; five of
  them push every singular value above ~0.1 into a band around 1.
- PROMOTION (1.875, -1.25, 0.375): monotone on [0, 1], fixes 1, and has the
  steepest admissible slope at the origin subject to f(1) = 1, f'(1) = 0 and
  monotonicity; it promotes mid-sized values toward 1.
- SUPPRESSION (0, 2.5, -1.5): zero slope at the origin, fixes 1; it crushes
  small values while preserving the top of the band.

Running k_p PROMOTION steps then 5 - k_p SUPPRESSION steps yields the
five-step high-pass family indexed by k_p in {0..5}; k_p = 2 is the default
operating point.

PROMOTION and SUPPRESSION are derived (exactly, in rational arithmetic) from
their defining constraints at import time rather than written down as magic
numbers.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigurationError, DegenerateInputError
from .matrix import frobenius_norm, require_matrix

PION_TOTAL_STEPS = 5
DEFAULT_EPS = 1e-7


@dataclass(frozen=True)
class QuinticOdd:
    """Coefficients of f(s) = a1*s + a3*s^3 + a5*s^5."""

    a1: float
    a3: float
    a5: float

    def __post_init__(self):
        for name in ("a1", "a3", "a5"):
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ConfigurationError(f"coefficient {name} must be finite, got {v}")

    def as_tuple(self) -> tuple:
        return (self.a1, self.a3, self.a5)


@dataclass(frozen=True)
class FilterSchedule:
    """An ordered, immutable list of quintic steps applied left to right."""

    steps: tuple
    label: str

    def __post_init__(self):
        if len(self.steps) < 1:
            raise ConfigurationError("a filter schedule needs at least one step")
        if not all(isinstance(s, QuinticOdd) for s in self.steps):
            raise ConfigurationError("schedule steps must be QuinticOdd instances")

    def __len__(self) -> int:
        return len(self.steps)


def _solve3_exact(rows, rhs) -> tuple:
    """Solve a 3x3 rational linear system exactly; returns floats.

    The canonical coefficient triples are dyadic rationals, so Gaussian
    elimination over Fraction reproduces them bit-exactly.
    """
    a = [[Fraction(x) for x in row] for row in rows]
    b = [Fraction(x) for x in rhs]
    n = 3
    for col in range(n):
        piv = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        b[col] = b[col] * inv
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] = b[r] - f * b[col]
    return tuple(float(x) for x in b)


def derive_promotion() -> QuinticOdd:
    """Solve for the promotion step from its defining constraints.

    f(1) = 1 and f'(1) = 0 pin two coefficients; the family that remains is
    monotone on [0, 1] exactly while f''(1) <= 0, and the origin slope a1
    grows as f''(1) rises, so the maximal-slope member sits at f''(1) = 0.
    """
    a1, a3, a5 = _solve3_exact(
        [[1, 1, 1], [1, 3, 5], [0, 6, 20]],  # f(1)=1, f'(1)=0, f''(1)=0
        [1, 0, 0],
    )
    lo, hi = promotion_slope_range()
    if not (lo <= a1 <= hi):
        raise ConfigurationError(f"derived promotion slope {a1} outside [{lo}, {hi}]")
    return QuinticOdd(a1, a3, a5)


def derive_suppression() -> QuinticOdd:
    """Solve for the suppression step: f(1) = 1, f'(1) = 0, f'(0) = 0."""
    a1, a3, a5 = _solve3_exact(
        [[1, 1, 1], [1, 3, 5], [1, 0, 0]],  # f(1)=1, f'(1)=0, a1=0
        [1, 0, 0],
    )
    return QuinticOdd(a1, a3, a5)


def promotion_slope_range() -> tuple:
    """Feasible origin slopes for the promotion family, derived exactly.

    With f(1) = 1 and f'(1) = 0, the family is parameterized by a5: solving
    the two equalities gives a1 = (3 + 2*a5)/2. The slope ceiling comes from
    f''(1) = 0 (a5 = 3/8) and the floor from a1 = 0 (a5 = -3/2).
    """
    ceiling = _solve3_exact([[1, 1, 1], [1, 3, 5], [0, 6, 20]], [1, 0, 0])[0]
    floor = _solve3_exact([[1, 1, 1], [1, 3, 5], [1, 0, 0]], [1, 0, 0])[0]
    return (floor, ceiling)


MUON_NS = QuinticOdd(3.4445, -4.7750, 2.0315)
PROMOTION = derive_promotion()
SUPPRESSION = derive_suppression()


def muon_schedule() -> FilterSchedule:
    """Five whitening steps; the classic msign approximation."""
    return FilterSchedule(steps=(MUON_NS,) * PION_TOTAL_STEPS, label="muon_ns")


def high_pass_schedule(k_p: int = 2) -> FilterSchedule:
    """k_p promotion steps followed by 5 - k_p suppression steps."""
    if not isinstance(k_p, (int, np.integer)) or isinstance(k_p, bool):
        raise ConfigurationError(f"k_p must be an integer, got {k_p!r}")
    if not 0 <= k_p <= PION_TOTAL_STEPS:
        raise ConfigurationError(f"k_p must be in 0..{PION_TOTAL_STEPS}, got {k_p}")
    steps = (PROMOTION,) * k_p + (SUPPRESSION,) * (PION_TOTAL_STEPS - k_p)
    return FilterSchedule(steps=steps, label=f"pion_kp{k_p}")


def eval_scalar(step: QuinticOdd, sigma):
    """Evaluate f(sigma) elementwise; scalar in, scalar out."""
    x = np.asarray(sigma, dtype=np.float64)
    x2 = x * x
    out = x * (step.a1 + x2 * (step.a3 + x2 * step.a5))
    return float(out) if out.ndim == 0 else out


def eval_derivative(step: QuinticOdd, sigma):
    """Analytic f'(sigma) = a1 + 3*a3*sigma^2 + 5*a5*sigma^4."""
    x = np.asarray(sigma, dtype=np.float64)
    x2 = x * x
    out = step.a1 + x2 * (3.0 * step.a3 + x2 * (5.0 * step.a5))
    return float(out) if out.ndim == 0 else out


def eval_schedule(schedule: FilterSchedule, sigma):
    """Compose the schedule's scalar maps left to right."""
    x = np.asarray(sigma, dtype=np.float64)
    for step in schedule.steps:
        x2 = x * x
        x = x * (step.a1 + x2 * (step.a3 + x2 * step.a5))
    return float(x) if x.ndim == 0 else x


def ns_matrix_step(x, step: QuinticOdd) -> np.ndarray:
    """One matrix step a1*X + a3*X G + a5*X G^2 with G the thin-side Gram.

    For wide inputs the Gram is formed on the row side instead; both
    orientations realize the same spectral map U f(S) V^T.
    """
    a = require_matrix(x)
    a1, a3, a5 = step.a1, step.a3, step.a5
    if a.shape[0] >= a.shape[1]:
        g = a.T @ a
        return a1 * a + a3 * (a @ g) + a5 * (a @ g @ g)
    g = a @ a.T
    return a1 * a + a3 * (g @ a) + a5 * (g @ g @ a)


def apply_filter(m, schedule: FilterSchedule, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Normalize by (Frobenius norm + eps), then run the schedule.

    eps > 0 keeps the zero matrix harmless (it just maps to zero); with
    eps = 0 a zero matrix cannot be normalized and is rejected.
    """
    a = require_matrix(m)
    if eps < 0.0:
        raise ConfigurationError(f"eps must be >= 0, got {eps}")
    norm = frobenius_norm(a)
    if norm == 0.0 and eps == 0.0:
        raise DegenerateInputError("cannot filter an all-zero matrix with eps = 0")
    x = a / (norm + eps)
    for step in schedule.steps:
        x = ns_matrix_step(x, step)
    return x
