"""Config-driven synthetic experiments at desk scale.

Every experiment is a pure function of (config, seeds): RNG comes only from
named counter-based streams, outputs carry no timestamps or wall times, and
floats are printed with 17 significant digits, so repeated runs produce
byte-identical files.

Experiments:

- filter_profile: scalar filter responses on a sigma grid (whitening steps,
  promotion/suppression prefixes, the high-pass family).
- lowrank_stream: fixed low-rank signal plus fresh Gaussian noise each step;
  records how well each optimizer's update aligns with the signal's polar
  factor, and the update's effective rank.
- noisy_quadratic: convex quadratic with gradient noise; loss trajectories.
- erank_demo: effective rank of synthetic gradients with planted ranks;
  the runner itself asserts the high > medium > low ordering every step.
- headvar_demo: a momentum fixture whose head-block energies are exactly
  balanced, so whole-matrix filtering provably equalizes per-head update
  norms while per-head filtering does not; the runner asserts the gap.
- lpmuon_fit: wraps the low-pass coefficient fit, emitting its JSON result.
"""

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from .diagnostics import erank, head_norm_variance
from .errors import ConfigurationError, ExperimentError
from .filters import (
    MUON_NS,
    PION_TOTAL_STEPS,
    PROMOTION,
    SUPPRESSION,
    FilterSchedule,
    eval_schedule,
    high_pass_schedule,
)
from .lowpass import FitConfig, fit, save_fit_result_json
from .matrix import FLOAT_FORMAT, frobenius_norm, msign_exact
from .optim import (
    HeadLayout,
    OptimizerConfig,
    config_from_dict,
    config_to_dict,
    init_state,
    momentum_update,
    per_head_split,
    step,
    update_direction,
)
from .rng import (
    STREAM_FIXTURE,
    STREAM_INIT,
    STREAM_NOISE,
    STREAM_SIGNAL,
    STREAM_SPECTRUM,
    stream,
)

EXPERIMENTS = (
    "filter_profile",
    "lowrank_stream",
    "noisy_quadratic",
    "erank_demo",
    "headvar_demo",
    "lpmuon_fit",
)
OUTPUT_DIR_ENV = "SPECTRALOPT_OUTDIR"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    optimizers: tuple = ()
    rows: int = 32
    cols: int = 32
    signal_rank: int = 2
    noise_scale: float | None = None
    steps: int = 200
    seeds: tuple = (0,)
    num_heads: int = 4
    ranks: tuple = (24, 8, 2)
    grid_points: int = 1001
    tau: float = 0.5
    output: str = ""

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}")
        if len(self.seeds) == 0:
            raise ConfigurationError("seeds must be nonempty")
        if self.steps < 1:
            raise ConfigurationError(f"steps must be >= 1, got {self.steps}")
        if self.noise_scale is not None and self.noise_scale < 0.0:
            raise ConfigurationError(f"noise_scale must be >= 0, got {self.noise_scale}")
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError("rows and cols must be positive")
        if self.grid_points < 2:
            raise ConfigurationError("grid_points must be >= 2")
        object.__setattr__(self, "optimizers", tuple(self.optimizers))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "ranks", tuple(int(r) for r in self.ranks))

    def default_output(self) -> str:
        ext = "json" if self.experiment == "lpmuon_fit" else "csv"
        return f"{self.experiment}.{ext}"


def experiment_config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "experiment": cfg.experiment,
        "optimizers": [config_to_dict(oc) for oc in cfg.optimizers],
        "rows": cfg.rows,
        "cols": cfg.cols,
        "signal_rank": cfg.signal_rank,
        "noise_scale": cfg.noise_scale,
        "steps": cfg.steps,
        "seeds": list(cfg.seeds),
        "num_heads": cfg.num_heads,
        "ranks": list(cfg.ranks),
        "grid_points": cfg.grid_points,
        "tau": cfg.tau,
        "output": cfg.output,
    }


def experiment_config_from_dict(obj: dict) -> ExperimentConfig:
    kwargs = dict(obj)
    if "optimizers" in kwargs:
        kwargs["optimizers"] = tuple(config_from_dict(d) for d in kwargs["optimizers"])
    for key in ("seeds", "ranks"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"bad experiment config: {exc}") from exc


def save_experiment_config(path, cfg: ExperimentConfig) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(experiment_config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def load_experiment_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return experiment_config_from_dict(json.load(fh))


@dataclass(frozen=True)
class RunRecord:
    step: int
    metrics: dict
    wall_time: float = 0.0  # informational only, never serialized


def write_csv(path, fieldnames, records) -> None:
    """Comma-separated, header row, %.17g floats, LF endings."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(fieldnames) + "\n")
        for rec in records:
            cells = []
            for name in fieldnames:
                val = rec.metrics[name]
                if isinstance(val, str):
                    cells.append(val)
                elif isinstance(val, (bool, np.bool_)):
                    cells.append(str(bool(val)))
                elif isinstance(val, (int, np.integer)):
                    cells.append(str(int(val)))
                else:
                    cells.append(FLOAT_FORMAT % float(val))
            fh.write(",".join(cells) + "\n")


def _check_finite(records) -> None:
    for rec in records:
        for name, val in rec.metrics.items():
            if isinstance(val, (str, bool)):
                continue
            if not np.isfinite(val):
                raise ExperimentError(f"non-finite metric {name}={val} at step {rec.step}")


# -- filter_profile ----------------------------------------------------------


def run_filter_profile(cfg: ExperimentConfig):
    sigmas = np.linspace(0.0, 1.0, cfg.grid_points)
    columns = {"sigma": sigmas}
    for name, quintic in (("muon_ns", MUON_NS), ("promotion", PROMOTION), ("suppression", SUPPRESSION)):
        for t in range(1, PION_TOTAL_STEPS + 1):
            columns[f"{name}_t{t}"] = eval_schedule(FilterSchedule((quintic,) * t, name), sigmas)
    for k_p in range(PION_TOTAL_STEPS + 1):
        columns[f"pion_kp{k_p}"] = eval_schedule(high_pass_schedule(k_p), sigmas)
    fieldnames = list(columns)
    records = [
        RunRecord(step=i, metrics={name: columns[name][i] for name in fieldnames})
        for i in range(cfg.grid_points)
    ]
    return fieldnames, records


# -- lowrank_stream ----------------------------------------------------------


def default_stream_optimizers() -> tuple:
    return (
        OptimizerConfig("muon", label="muon"),
        OptimizerConfig("pion_default", k_p=2, label="pion_kp2"),
        OptimizerConfig("lrmuon", rank=5, label="lrmuon_k5"),
    )


def planted_signal(seed: int, rows: int, cols: int, rank: int):
    """Unit-norm rank-r signal with equal singular values, plus its polar factor."""
    rng = stream(seed, STREAM_SIGNAL)
    left = msign_exact(rng.standard_normal((rows, rank)))
    right = msign_exact(rng.standard_normal((cols, rank)))
    polar = left @ right.T
    return polar / np.sqrt(rank), polar


def run_lowrank_stream(cfg: ExperimentConfig):
    if cfg.signal_rank >= min(cfg.rows, cfg.cols):
        raise ConfigurationError(
            f"signal_rank {cfg.signal_rank} must be below min(rows, cols) "
            f"= {min(cfg.rows, cfg.cols)}"
        )
    noise = cfg.noise_scale
    if noise is None:
        noise = 0.05 / np.sqrt(cfg.rows * cfg.cols)
    opts = cfg.optimizers or default_stream_optimizers()
    polar_norm = np.sqrt(cfg.signal_rank)
    records = []
    for seed in sorted(cfg.seeds):
        signal, polar = planted_signal(seed, cfg.rows, cfg.cols, cfg.signal_rank)
        rng_noise = stream(seed, STREAM_NOISE)
        states = [init_state(oc, (cfg.rows, cfg.cols)) for oc in opts]
        for t in range(cfg.steps):
            t0 = time.perf_counter()
            grad = signal + noise * rng_noise.standard_normal((cfg.rows, cfg.cols))
            for oc, st in zip(opts, states):
                buf = momentum_update(st.momentum, grad)
                direction = update_direction(buf, oc)
                alignment = float(
                    np.sum(direction * polar) / (frobenius_norm(direction) * polar_norm)
                )
                records.append(
                    RunRecord(
                        step=t,
                        metrics={
                            "seed": seed,
                            "step": t,
                            "optimizer": oc.label,
                            "alignment": alignment,
                            "update_erank": erank(direction).erank,
                        },
                        wall_time=time.perf_counter() - t0,
                    )
                )
    fieldnames = ["seed", "step", "optimizer", "alignment", "update_erank"]
    return fieldnames, records


# -- noisy_quadratic ---------------------------------------------------------


def default_quadratic_optimizers() -> tuple:
    return (
        OptimizerConfig("adamw", lr=0.05, label="adamw"),
        OptimizerConfig("muon", lr=0.01, label="muon"),
        OptimizerConfig("pion_default", k_p=2, lr=0.01, label="pion_kp2"),
    )


def run_noisy_quadratic(cfg: ExperimentConfig):
    noise = 1e-3 if cfg.noise_scale is None else cfg.noise_scale
    opts = cfg.optimizers or default_quadratic_optimizers()
    records = []
    for seed in sorted(cfg.seeds):
        rng_init = stream(seed, STREAM_INIT)
        rng_noise = stream(seed, STREAM_NOISE)
        basis = msign_exact(rng_init.standard_normal((cfg.rows, cfg.rows)))
        curvature = basis @ np.diag(np.linspace(0.5, 1.5, cfg.rows)) @ basis.T
        target = rng_init.standard_normal((cfg.rows, cfg.cols))
        target /= frobenius_norm(target)
        params = [np.zeros((cfg.rows, cfg.cols)) for _ in opts]
        states = [init_state(oc, (cfg.rows, cfg.cols)) for oc in opts]
        for t in range(cfg.steps):
            t0 = time.perf_counter()
            xi = rng_noise.standard_normal((cfg.rows, cfg.cols))
            for i, (oc, st) in enumerate(zip(opts, states)):
                residual = curvature @ (params[i] - target)
                grad = curvature.T @ residual + noise * xi
                params[i] = step(params[i], grad, st, oc)
                loss = 0.5 * frobenius_norm(curvature @ (params[i] - target)) ** 2
                records.append(
                    RunRecord(
                        step=t,
                        metrics={"seed": seed, "step": t, "optimizer": oc.label, "loss": loss},
                        wall_time=time.perf_counter() - t0,
                    )
                )
    return ["seed", "step", "optimizer", "loss"], records


# -- erank_demo --------------------------------------------------------------


def synthetic_gradient(rng, rows: int, cols: int, rank: int, noise_scale: float):
    """Planted-rank gradient sample; rank 0 is pure noise."""
    if rank == 0:
        return rng.standard_normal((rows, cols))
    signal = (
        rng.standard_normal((rows, rank)) @ rng.standard_normal((rank, cols)) / np.sqrt(rank)
    )
    if noise_scale > 0.0:
        signal = signal + noise_scale * rng.standard_normal((rows, cols))
    return signal


def run_erank_demo(cfg: ExperimentConfig):
    ranks = cfg.ranks
    if len(ranks) < 2 or any(r < 1 for r in ranks) or any(
        ranks[i] <= ranks[i + 1] for i in range(len(ranks) - 1)
    ):
        raise ConfigurationError(f"ranks must be strictly decreasing positive ints, got {ranks}")
    noise = 0.01 if cfg.noise_scale is None else cfg.noise_scale
    records = []
    for seed in sorted(cfg.seeds):
        rng = stream(seed, STREAM_SPECTRUM)
        for t in range(cfg.steps):
            t0 = time.perf_counter()
            eranks = []
            for rank in ranks:
                g = synthetic_gradient(rng, cfg.rows, cfg.cols, rank, noise)
                eranks.append(erank(g).erank)
            for rank, er in zip(ranks, eranks):
                records.append(
                    RunRecord(
                        step=t,
                        metrics={"seed": seed, "step": t, "generator": f"rank{rank}", "erank": er},
                        wall_time=time.perf_counter() - t0,
                    )
                )
            for i in range(len(ranks) - 1):
                if not eranks[i] > eranks[i + 1]:
                    raise ExperimentError(
                        f"erank ordering violated at seed {seed} step {t}: "
                        f"rank{ranks[i]} gives {eranks[i]:.3f} vs rank{ranks[i + 1]} "
                        f"gives {eranks[i + 1]:.3f}"
                    )
    return ["seed", "step", "generator", "erank"], records


# -- headvar_demo ------------------------------------------------------------


def balanced_head_basis(rng, rows: int, rank: int, num_heads: int, iters: int = 300):
    """Orthonormal-ish basis whose head-block column energies are exactly 1/H.

    Alternating projection: polar-orthonormalize, then rescale every head
    block of every column to energy 1/H. The rescale runs last, so the energy
    balance is exact and orthonormality is off by a vanishing residual.
    """
    if rows % num_heads != 0:
        raise ConfigurationError(f"rows {rows} not divisible by num_heads {num_heads}")
    block = rows // num_heads
    u = rng.standard_normal((rows, rank))
    for _ in range(iters):
        u = msign_exact(u)
        for h in range(num_heads):
            seg = u[h * block : (h + 1) * block]
            energy = np.sqrt(np.sum(seg**2, axis=0))
            u[h * block : (h + 1) * block] = seg / (energy * np.sqrt(num_heads))
    return u


HEAD_PARAM_NORMS = (1.0, 2.0, 4.0, 8.0)


def heterogeneous_head_param(rng, rows: int, cols: int, num_heads: int):
    """Parameter whose head blocks have norms 1, 2, 4, ... (doubling)."""
    block = rows // num_heads
    parts = []
    for h in range(num_heads):
        raw = rng.standard_normal((block, cols))
        target = HEAD_PARAM_NORMS[h] if h < len(HEAD_PARAM_NORMS) else 2.0**h
        parts.append(raw * (target / frobenius_norm(raw)))
    return np.concatenate(parts, axis=0)


def run_headvar_demo(cfg: ExperimentConfig):
    layout = HeadLayout(num_heads=cfg.num_heads, axis="rows")
    mode_cfgs = {
        "default": OptimizerConfig("pion_default", k_p=2, label="default"),
        "per_head": OptimizerConfig(
            "pion_per_head", k_p=2, head_layout=layout, label="per_head"
        ),
    }
    records = []
    for seed in sorted(cfg.seeds):
        rng = stream(seed, STREAM_FIXTURE)
        basis = balanced_head_basis(rng, cfg.rows, cfg.signal_rank, cfg.num_heads)
        spectrum = np.geomspace(1.0, 0.15, cfg.signal_rank)
        right = msign_exact(rng.standard_normal((cfg.cols, cfg.signal_rank)))
        momentum_fixture = basis @ np.diag(spectrum) @ right.T
        param = heterogeneous_head_param(rng, cfg.rows, cfg.cols, cfg.num_heads)
        param_blocks = per_head_split(param, layout)
        param_var = head_norm_variance(param_blocks) if cfg.num_heads > 1 else 0.0
        variances = {}
        for mode, oc in mode_cfgs.items():
            t0 = time.perf_counter()
            state = init_state(oc, momentum_fixture.shape)
            buf = momentum_update(state.momentum, momentum_fixture)
            direction = update_direction(buf, oc)
            blocks = per_head_split(direction, layout)
            norms = [frobenius_norm(b) for b in blocks]
            # A single head has no cross-head spread; report zero rather than
            # rejecting the degenerate-but-valid layout.
            variances[mode] = head_norm_variance(blocks) if cfg.num_heads > 1 else 0.0
            records.append(
                RunRecord(
                    step=0,
                    metrics={
                        "layer": seed,
                        "mode": mode,
                        "update_norm_variance": variances[mode],
                        "update_norm_mean": float(np.mean(norms)),
                        "param_norm_variance": param_var,
                    },
                    wall_time=time.perf_counter() - t0,
                )
            )
        if cfg.num_heads > 1 and not variances["per_head"] > variances["default"]:
            raise ExperimentError(
                f"per-head variance {variances['per_head']} not above default "
                f"variance {variances['default']} at seed {seed}"
            )
    fieldnames = [
        "layer",
        "mode",
        "update_norm_variance",
        "update_norm_mean",
        "param_norm_variance",
    ]
    return fieldnames, records


# -- dispatch ----------------------------------------------------------------

_RUNNERS = {
    "filter_profile": run_filter_profile,
    "lowrank_stream": run_lowrank_stream,
    "noisy_quadratic": run_noisy_quadratic,
    "erank_demo": run_erank_demo,
    "headvar_demo": run_headvar_demo,
}


def resolve_output_path(cfg: ExperimentConfig) -> str:
    out = cfg.output or cfg.default_output()
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(out):
        out = os.path.join(base, out)
    return out


def run_experiment(cfg: ExperimentConfig) -> str:
    """Run one experiment and write its artifact; returns the output path."""
    path = resolve_output_path(cfg)
    if cfg.experiment == "lpmuon_fit":
        result = fit(FitConfig(tau=cfg.tau, seed=cfg.seeds[0]))
        save_fit_result_json(path, result)
        return path
    fieldnames, records = _RUNNERS[cfg.experiment](cfg)
    _check_finite(records)
    write_csv(path, fieldnames, records)
    return path
