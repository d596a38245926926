"""argparse front end.

Subcommands: inspect-filter, fit-lpmuon, run, diagnose, snr-model, verify.
Exit codes: 0 success, 1 experiment or check failure, 2 usage error
(unknown flags, missing or malformed inputs, invalid parameter values).
Figures are opt-in via --plot and are rendered from the written artifact,
not from memory.
"""

import argparse
import json
import os
import sys

from .diagnostics import (
    RlvrSnrParams,
    erank,
    kappa_g,
    q_nd,
    rho_g,
    snr_grpo,
    snr_ratio_full,
    snr_sft,
)
from .errors import ConfigurationError, ExperimentError, SpectralOptError
from .experiments import ExperimentConfig, load_experiment_config, run_experiment
from .filters import high_pass_schedule
from .lowpass import FitConfig, fit, save_fit_result_json
from .matrix import load_matrix_json

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectralopt",
        description="Matrix-aware optimizer toolkit: spectral filters, "
        "fitting, diagnostics, and synthetic experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect-filter", help="emit scalar filter responses on a sigma grid")
    p.add_argument("--kp", type=int, default=2, help="promotion step count to highlight")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--grid-points", type=int, default=1001)
    p.add_argument("--plot", action="store_true", help="also render a PNG next to the CSV")

    p = sub.add_parser("fit-lpmuon", help="fit the 15 low-pass coefficients")
    p.add_argument("--tau", type=float, default=0.5, help="cutoff in (0, 1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSON path")
    p.add_argument("--plot", action="store_true")

    p = sub.add_parser("run", help="run an experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--plot", action="store_true")

    p = sub.add_parser("diagnose", help="spectral diagnostics for a stored matrix")
    p.add_argument("--input", required=True, help="matrix JSON path")
    p.add_argument("--erank", action="store_true", help="report the effective rank")

    p = sub.add_parser("snr-model", help="analytic group-sampling SNR model")
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--sigma-s-sq", type=float, required=True)
    p.add_argument("--sbar-sq", type=float, required=True)
    p.add_argument("--delta-sq", type=float, required=True)
    p.add_argument("--chi-sq", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=0.0)

    sub.add_parser("verify", help="run the full self-check suite")
    return parser


def _png_path(artifact_path: str) -> str:
    return os.path.splitext(artifact_path)[0] + ".png"


def cmd_inspect_filter(args) -> int:
    high_pass_schedule(args.kp)  # validates the range before any work
    cfg = ExperimentConfig(
        experiment="filter_profile", grid_points=args.grid_points, output=args.out
    )
    path = run_experiment(cfg)
    if args.plot:
        from .plotting import plot_filter_profile

        plot_filter_profile(path, _png_path(path), highlight_kp=args.kp)
    print(path)
    return EXIT_OK


def cmd_fit_lpmuon(args) -> int:
    result = fit(FitConfig(tau=args.tau, seed=args.seed))
    save_fit_result_json(args.out, result)
    if args.plot:
        from .plotting import plot_fit_result

        plot_fit_result(args.out, _png_path(args.out))
    print(f"{args.out} loss={result.loss:.6g} best_restart={result.best_index}")
    return EXIT_OK


def cmd_run(args) -> int:
    if not os.path.exists(args.config):
        print(f"error: config not found: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_experiment_config(args.config)
    except (json.JSONDecodeError, KeyError, TypeError, ConfigurationError) as exc:
        print(f"error: malformed config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    path = run_experiment(cfg)
    if args.plot:
        from .plotting import plot_for_experiment

        plot_for_experiment(cfg.experiment, path, _png_path(path))
    print(path)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    if not args.erank:
        print("error: nothing to do (pass --erank)", file=sys.stderr)
        return EXIT_USAGE
    if not os.path.exists(args.input):
        print(f"error: input not found: {args.input}", file=sys.stderr)
        return EXIT_USAGE
    try:
        m = load_matrix_json(args.input)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: malformed matrix file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = erank(m)
    print(
        json.dumps(
            {
                "rows": int(m.shape[0]),
                "cols": int(m.shape[1]),
                "erank": report.erank,
                "entropy": report.entropy,
                "sigmas": list(report.sigmas),
                "probs": list(report.probs),
            }
        )
    )
    return EXIT_OK


def cmd_snr_model(args) -> int:
    params = RlvrSnrParams(
        g=args.g,
        p=args.p,
        T=args.T,
        sigma_s_sq=args.sigma_s_sq,
        sbar_sq=args.sbar_sq,
        delta_sq=args.delta_sq,
        chi_sq=args.chi_sq,
        alpha=args.alpha,
    )
    print(
        json.dumps(
            {
                "q_nd": q_nd(params.g, params.p),
                "rho_g": rho_g(params.g, params.p),
                "kappa_g": kappa_g(params.g, params.p),
                "snr_sft": snr_sft(params),
                "snr_grpo": snr_grpo(params),
                "snr_ratio_full": snr_ratio_full(params),
            }
        )
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import verify_all

    results = verify_all()
    failures = 0
    for name, passed, detail in results:
        if passed:
            print(f"ok {name}")
        else:
            failures += 1
            print(f"FAIL {name}: {detail}")
    print(f"{len(results) - failures}/{len(results)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_FAILURE


_COMMANDS = {
    "inspect-filter": cmd_inspect_filter,
    "fit-lpmuon": cmd_fit_lpmuon,
    "run": cmd_run,
    "diagnose": cmd_diagnose,
    "snr-model": cmd_snr_model,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SpectralOptError, ExperimentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
