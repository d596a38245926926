"""Optional figure rendering for experiment artifacts.

Plots are generated strictly from the emitted CSV/JSON files, never from
in-memory state, so a saved artifact can always be re-plotted later. PNG
bytes are not part of the reproducibility contract; the delimited files are.
"""

import csv
import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .errors import ConfigurationError
from .filters import FilterSchedule, QuinticOdd, eval_schedule


def read_csv_columns(path) -> dict:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        columns = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name, val in row.items():
                columns[name].append(val)
    return columns


def _floats(values) -> np.ndarray:
    return np.array([float(v) for v in values])


def plot_filter_profile(csv_path, png_path, highlight_kp: int = 2) -> str:
    cols = read_csv_columns(csv_path)
    sigma = _floats(cols["sigma"])
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    axes[0].plot(sigma, _floats(cols["muon_ns_t5"]), label="whitening t=5")
    axes[0].plot(sigma, _floats(cols["promotion_t5"]), label="promotion t=5")
    axes[0].plot(sigma, _floats(cols["suppression_t5"]), label="suppression t=5")
    axes[0].set_xlabel("sigma")
    axes[0].set_ylabel("f(sigma)")
    axes[0].legend(fontsize=8)
    for k in range(6):
        name = f"pion_kp{k}"
        width = 2.0 if k == highlight_kp else 0.8
        axes[1].plot(sigma, _floats(cols[name]), label=name, linewidth=width)
    axes[1].set_xlabel("sigma")
    axes[1].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path


def _grouped_series(cols, group_key, x_key, y_key):
    series = {}
    for group, x, y in zip(cols[group_key], cols[x_key], cols[y_key]):
        series.setdefault(group, {}).setdefault(int(x), []).append(float(y))
    out = {}
    for group, byx in series.items():
        xs = sorted(byx)
        out[group] = (np.array(xs), np.array([np.mean(byx[x]) for x in xs]))
    return out


def plot_lowrank_stream(csv_path, png_path) -> str:
    cols = read_csv_columns(csv_path)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for key, ax in (("alignment", axes[0]), ("update_erank", axes[1])):
        for label, (xs, ys) in sorted(
            _grouped_series(cols, "optimizer", "step", key).items()
        ):
            ax.plot(xs, ys, label=label)
        ax.set_xlabel("step")
        ax.set_ylabel(f"mean {key}")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path


def plot_noisy_quadratic(csv_path, png_path) -> str:
    cols = read_csv_columns(csv_path)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, (xs, ys) in sorted(_grouped_series(cols, "optimizer", "step", "loss").items()):
        ax.semilogy(xs, ys, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("mean loss")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path


def plot_erank_demo(csv_path, png_path) -> str:
    cols = read_csv_columns(csv_path)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, (xs, ys) in sorted(_grouped_series(cols, "generator", "step", "erank").items()):
        ax.plot(xs, ys, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("mean erank")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path


def plot_headvar_demo(csv_path, png_path) -> str:
    cols = read_csv_columns(csv_path)
    modes = sorted(set(cols["mode"]))
    layers = sorted(set(cols["layer"]), key=int)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    width = 0.8 / len(modes)
    for i, mode in enumerate(modes):
        vals = []
        for layer in layers:
            for lay, mod, var in zip(cols["layer"], cols["mode"], cols["update_norm_variance"]):
                if lay == layer and mod == mode:
                    vals.append(float(var))
        pos = np.arange(len(layers)) + i * width
        ax.bar(pos, np.maximum(vals, 1e-40), width=width, label=mode)
    ax.set_yscale("log")
    ax.set_xticks(np.arange(len(layers)) + 0.4 - width / 2)
    ax.set_xticklabels([f"layer {la}" for la in layers])
    ax.set_ylabel("update norm variance")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path


def plot_fit_result(json_path, png_path) -> str:
    with open(json_path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    sched = FilterSchedule(
        steps=tuple(QuinticOdd(*map(float, s)) for s in obj["steps"]), label="fitted"
    )
    sigma = np.linspace(-1.0, 1.0, 801)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(sigma, eval_schedule(sched, sigma))
    ax.axvline(obj["tau"], color="gray", linestyle=":")
    ax.axvline(-obj["tau"], color="gray", linestyle=":")
    ax.set_xlabel("sigma")
    ax.set_ylabel("f(sigma)")
    ax.set_title(f"tau={obj['tau']}, loss={obj['loss']:.5f}")
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path


_PLOTTERS = {
    "filter_profile": plot_filter_profile,
    "lowrank_stream": plot_lowrank_stream,
    "noisy_quadratic": plot_noisy_quadratic,
    "erank_demo": plot_erank_demo,
    "headvar_demo": plot_headvar_demo,
    "lpmuon_fit": plot_fit_result,
}


def plot_for_experiment(experiment: str, artifact_path, png_path, **kwargs) -> str:
    if experiment not in _PLOTTERS:
        raise ConfigurationError(f"no plotter for experiment {experiment!r}")
    return _PLOTTERS[experiment](artifact_path, png_path, **kwargs)
