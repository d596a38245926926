"""Matrix-aware optimizer steps built on the spectral filters.

All matrix steppers share the same skeleton: fold the gradient into a plain
heavy-ball momentum buffer, turn the buffer into a direction X, then apply
param <- param - lr * scale * X. They differ only in how X is produced:

- muon: five whitening steps (approximate polar factor of the momentum).
- pion_default: the five-step high-pass schedule (k_p promotions then
  suppressions) on the whole matrix.
- pion_per_head: same filter, but applied independently to each head block
  of the matrix, with each block normalized by its own Frobenius norm. With
  a single head this is bit-for-bit the default mode.
- lrmuon: exact truncated polar factor U_k V_k^T from the compact SVD, with
  k clamped to the numerical rank of the buffer.
- lpmuon: an arbitrary fitted schedule (the low-pass coefficients) through
  the same matrix path as pion_default.
- adamw: standard elementwise AdamW with decoupled weight decay; the
  router for anything that is not a spectral matrix update.

Matrix steppers apply no weight decay and no dimension-dependent step-size
rescaling; an optional `scale` factor (default 1) is the only knob. A zero
momentum buffer makes the direction undefined, which inside a training loop
is treated as a no-op step with a RuntimeWarning rather than an error.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError
from .filters import (
    DEFAULT_EPS,
    FilterSchedule,
    QuinticOdd,
    apply_filter,
    high_pass_schedule,
    muon_schedule,
)
from .matrix import (
    matrix_from_json_dict,
    matrix_to_json_dict,
    require_matrix,
    svd_compact,
)

ALGORITHMS = ("adamw", "muon", "pion_default", "pion_per_head", "lrmuon", "lpmuon")
HEAD_AXES = ("rows", "cols")


@dataclass(frozen=True)
class HeadLayout:
    """How a projection matrix splits into attention-head blocks.

    `axis` says which dimension is divided into `num_heads` equal blocks:
    "rows" for stacked output projections of Q/K/V style weights, "cols" for
    the input side of an output projection. The divided extent must be an
    exact multiple of num_heads.
    """

    num_heads: int
    axis: str = "rows"

    def __post_init__(self):
        if not isinstance(self.num_heads, (int, np.integer)) or self.num_heads < 1:
            raise ConfigurationError(f"num_heads must be a positive integer, got {self.num_heads}")
        if self.axis not in HEAD_AXES:
            raise ConfigurationError(f"axis must be one of {HEAD_AXES}, got {self.axis!r}")

    def block_extent(self, shape) -> int:
        extent = shape[0] if self.axis == "rows" else shape[1]
        if extent % self.num_heads != 0:
            raise ShapeError(
                f"{self.axis} extent {extent} not divisible by num_heads={self.num_heads}"
            )
        return extent // self.num_heads


def per_head_split(m, layout: HeadLayout):
    """Split a matrix into its head blocks (views, in head order)."""
    a = require_matrix(m)
    layout.block_extent(a.shape)
    axis = 0 if layout.axis == "rows" else 1
    return np.split(a, layout.num_heads, axis=axis)


def per_head_merge(blocks, layout: HeadLayout) -> np.ndarray:
    """Inverse of per_head_split."""
    if len(blocks) != layout.num_heads:
        raise ShapeError(f"expected {layout.num_heads} blocks, got {len(blocks)}")
    axis = 0 if layout.axis == "rows" else 1
    return np.concatenate([require_matrix(b) for b in blocks], axis=axis)


@dataclass
class MomentumState:
    buffer: np.ndarray
    mu: float


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0


@dataclass
class OptimizerState:
    momentum: MomentumState | None = None
    adam: AdamState | None = None


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str
    lr: float = 0.02
    mu: float = 0.95
    k_p: int = 2
    rank: int = 1
    eps: float = DEFAULT_EPS
    scale: float = 1.0
    head_layout: HeadLayout | None = None
    schedule: FilterSchedule | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.0
    label: str = ""

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"unknown algorithm {self.algorithm!r}")
        if not (self.lr > 0.0 and np.isfinite(self.lr)):
            raise ConfigurationError(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.mu < 1.0:
            raise ConfigurationError(f"mu must be in [0, 1), got {self.mu}")
        if self.eps < 0.0:
            raise ConfigurationError(f"eps must be >= 0, got {self.eps}")
        if self.algorithm == "lrmuon" and self.rank < 1:
            raise ConfigurationError(f"lrmuon needs rank >= 1, got {self.rank}")
        if self.algorithm == "pion_per_head" and self.head_layout is None:
            raise ConfigurationError("pion_per_head needs a head_layout")
        if self.algorithm == "lpmuon" and self.schedule is None:
            raise ConfigurationError("lpmuon needs a fitted schedule")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ConfigurationError("adam betas must be in [0, 1)")
        if self.label == "":
            object.__setattr__(self, "label", self.algorithm)

    def direction_schedule(self) -> FilterSchedule | None:
        if self.algorithm == "muon":
            return muon_schedule()
        if self.algorithm in ("pion_default", "pion_per_head"):
            return high_pass_schedule(self.k_p)
        if self.algorithm == "lpmuon":
            return self.schedule
        return None


def init_state(cfg: OptimizerConfig, shape) -> OptimizerState:
    zeros = np.zeros(shape, dtype=np.float64)
    if cfg.algorithm == "adamw":
        return OptimizerState(adam=AdamState(m=zeros.copy(), v=zeros.copy()))
    return OptimizerState(momentum=MomentumState(buffer=zeros, mu=cfg.mu))


def momentum_update(state: MomentumState, grad) -> np.ndarray:
    """buffer <- mu * buffer + grad; returns the updated buffer."""
    g = require_matrix(grad)
    if g.shape != state.buffer.shape:
        raise ShapeError(f"gradient shape {g.shape} != buffer shape {state.buffer.shape}")
    state.buffer = state.mu * state.buffer + g
    return state.buffer


def update_direction(buffer: np.ndarray, cfg: OptimizerConfig) -> np.ndarray | None:
    """Direction X for the current momentum buffer, or None when degenerate."""
    if not np.any(buffer):
        return None
    if cfg.algorithm == "lrmuon":
        res = svd_compact(buffer)
        k = min(cfg.rank, res.rank)
        return res.u[:, :k] @ res.v[:, :k].T
    if cfg.algorithm == "pion_per_head":
        blocks = per_head_split(buffer, cfg.head_layout)
        sched = cfg.direction_schedule()
        out = [
            apply_filter(b, sched, cfg.eps) if np.any(b) else np.zeros_like(b) for b in blocks
        ]
        return per_head_merge(out, cfg.head_layout)
    return apply_filter(buffer, cfg.direction_schedule(), cfg.eps)


def _momentum_step(param, grad, state: OptimizerState, cfg: OptimizerConfig) -> np.ndarray:
    p = require_matrix(param)
    buf = momentum_update(state.momentum, grad)
    direction = update_direction(buf, cfg)
    if direction is None:
        warnings.warn(
            f"{cfg.algorithm}: zero momentum buffer, skipping update", RuntimeWarning
        )
        return p.copy()
    return p - cfg.lr * cfg.scale * direction


def muon_step(param, grad, state: OptimizerState, cfg: OptimizerConfig) -> np.ndarray:
    if cfg.algorithm != "muon":
        raise ConfigurationError(f"muon_step called with algorithm {cfg.algorithm!r}")
    return _momentum_step(param, grad, state, cfg)


def pion_step(param, grad, state: OptimizerState, cfg: OptimizerConfig) -> np.ndarray:
    if cfg.algorithm not in ("pion_default", "pion_per_head"):
        raise ConfigurationError(f"pion_step called with algorithm {cfg.algorithm!r}")
    return _momentum_step(param, grad, state, cfg)


def lrmuon_step(param, grad, state: OptimizerState, cfg: OptimizerConfig) -> np.ndarray:
    if cfg.algorithm != "lrmuon":
        raise ConfigurationError(f"lrmuon_step called with algorithm {cfg.algorithm!r}")
    return _momentum_step(param, grad, state, cfg)


def lpmuon_step(param, grad, state: OptimizerState, cfg: OptimizerConfig) -> np.ndarray:
    if cfg.algorithm != "lpmuon":
        raise ConfigurationError(f"lpmuon_step called with algorithm {cfg.algorithm!r}")
    return _momentum_step(param, grad, state, cfg)


def adamw_step(param, grad, state: OptimizerState, cfg: OptimizerConfig) -> np.ndarray:
    if cfg.algorithm != "adamw":
        raise ConfigurationError(f"adamw_step called with algorithm {cfg.algorithm!r}")
    p = np.asarray(param, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    if g.shape != p.shape:
        raise ShapeError(f"gradient shape {g.shape} != param shape {p.shape}")
    st = state.adam
    st.step += 1
    st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * g
    st.v = cfg.beta2 * st.v + (1.0 - cfg.beta2) * g * g
    m_hat = st.m / (1.0 - cfg.beta1**st.step)
    v_hat = st.v / (1.0 - cfg.beta2**st.step)
    return p * (1.0 - cfg.lr * cfg.weight_decay) - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)


_STEP_FUNCS = {
    "adamw": adamw_step,
    "muon": muon_step,
    "pion_default": pion_step,
    "pion_per_head": pion_step,
    "lrmuon": lrmuon_step,
    "lpmuon": lpmuon_step,
}


def step(param, grad, state: OptimizerState, cfg: OptimizerConfig) -> np.ndarray:
    """Dispatch one optimizer step by cfg.algorithm."""
    return _STEP_FUNCS[cfg.algorithm](param, grad, state, cfg)


# -- serialization ----------------------------------------------------------


def config_to_dict(cfg: OptimizerConfig) -> dict:
    out = {
        "algorithm": cfg.algorithm,
        "lr": cfg.lr,
        "mu": cfg.mu,
        "k_p": cfg.k_p,
        "rank": cfg.rank,
        "eps": cfg.eps,
        "scale": cfg.scale,
        "beta1": cfg.beta1,
        "beta2": cfg.beta2,
        "adam_eps": cfg.adam_eps,
        "weight_decay": cfg.weight_decay,
        "label": cfg.label,
    }
    if cfg.head_layout is not None:
        out["head_layout"] = {"num_heads": cfg.head_layout.num_heads, "axis": cfg.head_layout.axis}
    if cfg.schedule is not None:
        out["schedule"] = {
            "label": cfg.schedule.label,
            "steps": [s.as_tuple() for s in cfg.schedule.steps],
        }
    return out


def config_from_dict(obj: dict) -> OptimizerConfig:
    kwargs = dict(obj)
    layout = kwargs.pop("head_layout", None)
    sched = kwargs.pop("schedule", None)
    if layout is not None:
        kwargs["head_layout"] = HeadLayout(num_heads=int(layout["num_heads"]), axis=layout["axis"])
    if sched is not None:
        kwargs["schedule"] = FilterSchedule(
            steps=tuple(QuinticOdd(*map(float, s)) for s in sched["steps"]),
            label=sched.get("label", "fitted"),
        )
    try:
        return OptimizerConfig(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"bad optimizer config: {exc}") from exc


def state_to_dict(state: OptimizerState) -> dict:
    out = {}
    if state.momentum is not None:
        out["momentum"] = {
            "mu": state.momentum.mu,
            "buffer": matrix_to_json_dict(state.momentum.buffer),
        }
    if state.adam is not None:
        out["adam"] = {
            "step": state.adam.step,
            "m": matrix_to_json_dict(state.adam.m),
            "v": matrix_to_json_dict(state.adam.v),
        }
    return out


def state_from_dict(obj: dict) -> OptimizerState:
    momentum = None
    adam = None
    if "momentum" in obj:
        momentum = MomentumState(
            buffer=matrix_from_json_dict(obj["momentum"]["buffer"]),
            mu=float(obj["momentum"]["mu"]),
        )
    if "adam" in obj:
        adam = AdamState(
            m=matrix_from_json_dict(obj["adam"]["m"]),
            v=matrix_from_json_dict(obj["adam"]["v"]),
            step=int(obj["adam"]["step"]),
        )
    return OptimizerState(momentum=momentum, adam=adam)


def save_state_json(path, state: OptimizerState) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(state_to_dict(state), fh)
        fh.write("\n")


def load_state_json(path) -> OptimizerState:
    with open(path, "r", encoding="utf-8") as fh:
        return state_from_dict(json.load(fh))
