"""Command-line interface.

Every subcommand reads its settings from, in increasing priority: built-in
defaults, a JSON ``--config`` file, and explicit flags.  The seed falls back
to ``$FCPD_SEED`` when neither the file nor the flags set it.

Exit codes: 0 success (no rejection), 3 rejection at the configured level
(``test`` and ``dist-test``), 1 data error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .charfunc import char_transform, dist_change_test, estimate_pca
from .data import FunctionalSample, descriptive_stats, load_sample, sample_variance, save_sample
from .detection import DetectionConfig, mean_change_test, null_model
from .energy import estimate_breakdate, export_process, full_process
from .errors import ConfigError, DegenerateError, FcpdError
from .longrun import KernelSpec, estimate_longrun
from .nulldist import breakdate_ci, simulate_xi_alpha
from .segmentation import ThresholdRule, binary_segment, summarize_segment
from .simulation import DgpSpec, generate, run_segmentation_study, run_size_power_study
from .spectral import export_eigenvalues

EXIT_OK = 0
EXIT_DATA = 1
EXIT_CONFIG = 2
EXIT_REJECT = 3

DEFAULTS: dict[str, Any] = {
    "format": None,
    "components": 1,
    "alpha": 0.5,
    "kernel": "parzen",
    "bandwidth": None,
    "demeaning": "full_sample",
    "cpv": 0.95,
    "n_reps": 500,
    "n_grid": None,
    "seed": 0,
    "level": 0.05,
    "threads": 1,
    "output": None,
    "process_csv": None,
    "eigen_csv": None,
    # confidence interval
    "ci": False,
    "ci_level": 0.95,
    "ci_demeaning": "split_at_khat",
    "xi_reps": 10_000,
    # segmentation
    "rule": None,
    "rule_level": 0.05,
    "tau": None,
    "cov_policy": "per_segment",
    "min_segment": 5,
    "allow_alpha_zero": False,
    "dist": False,
    # distributional test
    "d": 1,
    "char_points": 64,
    "raw_scores": False,
    # simulation
    "spec": None,
    "study": "size_power",
    "alphas": None,
    "mc_reps": 1000,
    "mode": "mean",
    "samples_dir": None,
    "save_samples": 0,
    "records_csv": None,
}


def _level(x: str) -> float:
    v = float(x)
    if not (0.0 < v < 1.0):
        raise argparse.ArgumentTypeError(f"{x} is not in (0, 1)")
    return v


def _add_common(p: argparse.ArgumentParser, data: bool = True) -> None:
    p.add_argument("--config", type=Path, help="JSON file with option values (flags override it)")
    if data:
        p.add_argument("input", type=Path, help="CSV or JSON sample file")
        p.add_argument("--format", choices=["csv_rows", "json"], default=argparse.SUPPRESS)
        p.add_argument("--components", type=int, default=argparse.SUPPRESS, help="curve components r in CSV rows")
    p.add_argument("--alpha", type=float, default=argparse.SUPPRESS, help="weight exponent in [0, 1)")
    p.add_argument("--kernel", choices=["parzen", "bartlett", "flat_top_truncated"], default=argparse.SUPPRESS)
    p.add_argument("--bandwidth", type=float, default=argparse.SUPPRESS, help="override the plug-in bandwidth")
    p.add_argument("--demeaning", choices=["full_sample", "split_at_khat"], default=argparse.SUPPRESS)
    p.add_argument("--cpv", type=float, default=argparse.SUPPRESS, help="CPV threshold in (0, 1]")
    p.add_argument("--n-reps", dest="n_reps", type=int, default=argparse.SUPPRESS, help="null simulation reps")
    p.add_argument("--n-grid", dest="n_grid", type=int, default=argparse.SUPPRESS, help="null simulation grid")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--level", type=_level, default=argparse.SUPPRESS, help="nominal level for decisions")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads (results unchanged)")
    p.add_argument("--output", "-o", type=Path, default=argparse.SUPPRESS, help="JSON report path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fcpd", description="Changepoint tests for functional time series.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="test for a change in the mean")
    _add_common(p)
    p.add_argument("--ci", action="store_const", const=True, default=argparse.SUPPRESS, help="add a breakdate CI")
    p.add_argument("--ci-level", dest="ci_level", type=_level, default=argparse.SUPPRESS)
    p.add_argument("--xi-reps", dest="xi_reps", type=int, default=argparse.SUPPRESS)
    p.add_argument("--process-csv", dest="process_csv", type=Path, default=argparse.SUPPRESS)
    p.add_argument("--eigen-csv", dest="eigen_csv", type=Path, default=argparse.SUPPRESS)

    p = sub.add_parser("dist-test", help="test for a change in distribution (scalar curves)")
    _add_common(p)
    p.add_argument("--d", type=int, default=argparse.SUPPRESS, help="principal components (1..3)")
    p.add_argument("--char-points", dest="char_points", type=int, default=argparse.SUPPRESS)
    p.add_argument("--raw-scores", dest="raw_scores", action="store_const", const=True, default=argparse.SUPPRESS)

    p = sub.add_parser("ci", help="breakdate estimate with confidence interval")
    _add_common(p)
    p.add_argument("--ci-level", dest="ci_level", type=_level, default=argparse.SUPPRESS)
    p.add_argument("--ci-demeaning", dest="ci_demeaning", choices=["full_sample", "split_at_khat"],
                   default=argparse.SUPPRESS)
    p.add_argument("--xi-reps", dest="xi_reps", type=int, default=argparse.SUPPRESS)

    p = sub.add_parser("segment", help="binary segmentation for multiple changes")
    _add_common(p)
    p.add_argument("--rule", choices=["cv_sqrt_log", "cv_loglog", "cv_log", "fixed"], default=argparse.SUPPRESS)
    p.add_argument("--rule-level", dest="rule_level", type=_level, default=argparse.SUPPRESS)
    p.add_argument("--tau", type=float, default=argparse.SUPPRESS, help="threshold for the fixed rule")
    p.add_argument("--cov-policy", dest="cov_policy", choices=["per_segment", "global"], default=argparse.SUPPRESS)
    p.add_argument("--min-segment", dest="min_segment", type=int, default=argparse.SUPPRESS)
    p.add_argument("--allow-alpha-zero", dest="allow_alpha_zero", action="store_const", const=True,
                   default=argparse.SUPPRESS)
    p.add_argument("--dist", action="store_const", const=True, default=argparse.SUPPRESS,
                   help="segment characteristic-function curves (distributional changes)")
    p.add_argument("--d", type=int, default=argparse.SUPPRESS)
    p.add_argument("--char-points", dest="char_points", type=int, default=argparse.SUPPRESS)

    p = sub.add_parser("simulate", help="Monte Carlo size/power or segmentation study")
    _add_common(p, data=False)
    p.add_argument("--spec", type=Path, default=argparse.SUPPRESS, help="JSON DGP specification")
    p.add_argument("--study", choices=["size_power", "segmentation"], default=argparse.SUPPRESS)
    p.add_argument("--alphas", type=float, nargs="+", default=argparse.SUPPRESS)
    p.add_argument("--mc-reps", dest="mc_reps", type=int, default=argparse.SUPPRESS)
    p.add_argument("--mode", choices=["mean", "dist"], default=argparse.SUPPRESS)
    p.add_argument("--rule", choices=["cv_sqrt_log", "cv_loglog", "cv_log", "fixed"], default=argparse.SUPPRESS)
    p.add_argument("--rule-level", dest="rule_level", type=_level, default=argparse.SUPPRESS)
    p.add_argument("--tau", type=float, default=argparse.SUPPRESS)
    p.add_argument("--d", type=int, default=argparse.SUPPRESS)
    p.add_argument("--char-points", dest="char_points", type=int, default=argparse.SUPPRESS)
    p.add_argument("--samples-dir", dest="samples_dir", type=Path, default=argparse.SUPPRESS)
    p.add_argument("--save-samples", dest="save_samples", type=int, default=argparse.SUPPRESS,
                   help="number of generated samples to write to --samples-dir")
    p.add_argument("--records-csv", dest="records_csv", type=Path, default=argparse.SUPPRESS)

    p = sub.add_parser("report", help="descriptive summary of a sample")
    _add_common(p)
    p.add_argument("--eigen-csv", dest="eigen_csv", type=Path, default=argparse.SUPPRESS)
    return parser


def resolve_options(args: argparse.Namespace) -> dict[str, Any]:
    """Defaults, then the config file, then explicit flags; ``$FCPD_SEED`` fills a missing seed."""
    opts = dict(DEFAULTS)
    given = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    from_file: dict[str, Any] = {}
    if getattr(args, "config", None) is not None:
        try:
            from_file = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(from_file, dict):
            raise ConfigError("config file must hold a JSON object")
        from_file = {k.replace("-", "_"): v for k, v in from_file.items()}
        unknown = sorted(set(from_file) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        opts.update(from_file)
    opts.update(given)
    if "seed" not in given and "seed" not in from_file and os.environ.get("FCPD_SEED"):
        try:
            opts["seed"] = int(os.environ["FCPD_SEED"])
        except ValueError as exc:
            raise ConfigError("FCPD_SEED must be an integer") from exc
    _validate(opts)
    return opts


def _validate(o: dict[str, Any]) -> None:
    if not (0.0 <= float(o["alpha"]) < 1.0):
        raise ConfigError("alpha must lie in [0, 1)")
    if int(o["threads"]) < 1:
        raise ConfigError("threads must be >= 1")
    if int(o["seed"]) < 0 or int(o["seed"]) >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if int(o["components"]) < 1:
        raise ConfigError("components must be >= 1")
    if int(o["xi_reps"]) < 100:
        raise ConfigError("xi_reps must be >= 100")
    if int(o["mc_reps"]) < 1:
        raise ConfigError("mc_reps must be >= 1")
    if not (0.0 < float(o["ci_level"]) < 1.0) or not (0.0 < float(o["rule_level"]) < 1.0):
        raise ConfigError("levels must lie in (0, 1)")


def detection_config(o: dict[str, Any]) -> DetectionConfig:
    return DetectionConfig(
        kernel=o["kernel"],
        bandwidth=o["bandwidth"],
        demeaning=o["demeaning"],
        cpv_threshold=float(o["cpv"]),
        n_reps=int(o["n_reps"]),
        n_grid=o["n_grid"],
        seed=int(o["seed"]),
        level=float(o["level"]),
        workers=int(o["threads"]),
    )


def _load(o: dict[str, Any]) -> FunctionalSample:
    return load_sample(o["input"], o["format"], n_components=int(o["components"]))


def _emit(report: dict, o: dict[str, Any]) -> None:
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if o.get("output"):
        Path(o["output"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _ci(sample: FunctionalSample, process, o: dict[str, Any]) -> dict:
    cov = estimate_longrun(
        sample,
        KernelSpec(o["kernel"]),
        o["bandwidth"],
        o["ci_demeaning"],
        process.argmax_k if o["ci_demeaning"] == "split_at_khat" else None,
    )
    est = estimate_breakdate(sample, process, cov)
    xi = simulate_xi_alpha(process.alpha, est.theta_hat, int(o["xi_reps"]), int(o["seed"]), workers=int(o["threads"]))
    ci = breakdate_ci(est, xi, float(o["ci_level"]))
    return {**est.to_dict(), **ci.to_dict(), "xi_boundary_fraction": xi.boundary_fraction}


def cmd_test(o: dict[str, Any]) -> int:
    sample = _load(o)
    res = mean_change_test(sample, float(o["alpha"]), detection_config(o))
    report = {"command": "test", "n_obs": sample.n_obs, **res.to_dict()}
    if o["ci"]:
        try:
            report["ci"] = _ci(sample, res.process, o)
        except DegenerateError as exc:
            report["ci"] = None
            report["ci_error"] = str(exc)
    if o["process_csv"]:
        export_process(res.process, o["process_csv"])
    if o["eigen_csv"]:
        export_eigenvalues(res.spectral, o["eigen_csv"])
    _emit(report, o)
    return EXIT_REJECT if res.rejected else EXIT_OK


def cmd_dist_test(o: dict[str, Any]) -> int:
    sample = _load(o)
    res = dist_change_test(
        sample, int(o["d"]), float(o["alpha"]), detection_config(o),
        n_points=int(o["char_points"]), centered=not o["raw_scores"],
    )
    report = {"command": "dist-test", "d": int(o["d"]), "char_points": int(o["char_points"]), **res.to_dict()}
    _emit(report, o)
    return EXIT_REJECT if res.rejected else EXIT_OK


def cmd_ci(o: dict[str, Any]) -> int:
    sample = _load(o)
    sample.require_min_obs()
    process = full_process(sample, float(o["alpha"]))
    report = {"command": "ci", "alpha": float(o["alpha"]), "n_obs": sample.n_obs, **_ci(sample, process, o)}
    _emit(report, o)
    return EXIT_OK


def _rule(o: dict[str, Any], dist: bool) -> ThresholdRule:
    kind = o["rule"] or ("fixed" if o["tau"] is not None else ("cv_sqrt_log" if dist else "cv_loglog"))
    return ThresholdRule(kind, float(o["rule_level"]), None if o["tau"] is None else float(o["tau"]))


def cmd_segment(o: dict[str, Any]) -> int:
    sample = _load(o)
    dist = bool(o["dist"])
    data = char_transform(estimate_pca(sample, int(o["d"])), int(o["char_points"])) if dist else sample
    res = binary_segment(
        data,
        float(o["alpha"]),
        _rule(o, dist),
        detection_config(o),
        cov_policy=o["cov_policy"],
        min_segment=int(o["min_segment"]),
        allow_alpha_zero=bool(o["allow_alpha_zero"]),
    )
    report = {"command": "segment", "dist": dist, **res.to_dict()}
    if dist:
        # regime summaries describe the original curves, not their transforms
        bounds = (0, *res.changepoints, sample.n_obs)
        report["segments"] = [
            summarize_segment(sample, a, b).to_dict() for a, b in zip(bounds[:-1], bounds[1:])
        ]
    _emit(report, o)
    return EXIT_OK


def cmd_simulate(o: dict[str, Any]) -> int:
    if o["spec"] is None:
        raise ConfigError("simulate needs --spec (a JSON DGP specification)")
    spec_src = o["spec"]
    if isinstance(spec_src, dict):
        spec_dict = spec_src
    else:
        try:
            spec_dict = json.loads(Path(spec_src).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read DGP specification: {exc}") from exc
    spec = DgpSpec.from_dict(spec_dict)
    if "seed" not in spec_dict:
        spec = replace(spec, seed=int(o["seed"]))
    cfg = detection_config(o)
    workers = int(o["threads"])
    if o["study"] == "size_power":
        alphas = o["alphas"] or [float(o["alpha"])]
        rep = run_size_power_study(
            spec, alphas, cfg, int(o["mc_reps"]), mode=o["mode"], d=int(o["d"]),
            n_char_points=int(o["char_points"]), workers=workers,
        )
    else:
        rep = run_segmentation_study(
            spec, float(o["alpha"]), _rule(o, o["mode"] == "dist"), cfg, int(o["mc_reps"]), mode=o["mode"],
            d=int(o["d"]), n_char_points=int(o["char_points"]), cov_policy=o["cov_policy"],
            min_segment=int(o["min_segment"]), workers=workers,
        )
    if o["samples_dir"] and int(o["save_samples"]) > 0:
        out = Path(o["samples_dir"])
        out.mkdir(parents=True, exist_ok=True)
        for i in range(min(int(o["save_samples"]), rep.n_reps)):
            save_sample(generate(spec, i), out / f"sample_{i:04d}.csv")
    if o["records_csv"]:
        rep.save_records(o["records_csv"])
    _emit({"command": "simulate", "study": o["study"], **rep.to_dict()}, o)
    return EXIT_OK


def cmd_report(o: dict[str, Any]) -> int:
    sample = _load(o)
    sample.require_min_obs()
    cfg = detection_config(o)
    cov, model = null_model(sample, cfg)
    stats: dict[str, Any]
    try:
        stats = descriptive_stats(sample).to_dict()
    except DegenerateError as exc:
        stats = {"sigma2": exc.partial.get("variance", sample_variance(sample)), "skewness": None, "kurtosis": None}
    if o["eigen_csv"]:
        export_eigenvalues(model, o["eigen_csv"])
    report = {
        "command": "report",
        "n_obs": sample.n_obs,
        "n_components": sample.n_components,
        "n_points": sample.n_points,
        "grid": sample.grid.to_dict(),
        "descriptive": stats,
        "bandwidth": cov.bandwidth,
        "kernel": cov.kernel.name,
        "sigma0_sq": cov.sigma0_sq,
        "m_hat": model.m_hat,
        "eigenvalues": [float(x) for x in model.eigenvalues[:10]],
        "cpv": [float(x) for x in model.cpv()[:10]],
    }
    _emit(report, o)
    return EXIT_OK


COMMANDS = {
    "test": cmd_test,
    "dist-test": cmd_dist_test,
    "ci": cmd_ci,
    "segment": cmd_segment,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        return COMMANDS[args.command](opts)
    except ConfigError as exc:
        print(f"fcpd: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FcpdError, ValueError, IndexError, ArithmeticError, OSError) as exc:
        print(f"fcpd: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
