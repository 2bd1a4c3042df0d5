"""Command-line front end: estimate curves from a CSV, run the simulation
study, or emit the setting truth curves. Every run writes its outputs plus
a manifest into --out-dir; data files are byte-stable given the seed.
"""

import argparse
import dataclasses
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .curve import INVERSE_GRID
from .data import StudyConfig, load_dataset_csv
from .errors import PredcurveError, UnknownSetting, ValidationError, ZeroGhatAtDeterminable
from .perturb import curve_with_ci
from .simgen import (
    DEFAULT_P_POINTS,
    DEFAULT_V_POINTS,
    run_sim_study,
    true_curve_setting1,
    true_curve_setting2,
)
from .data import rng_from_seed
from .perturb import STREAM_TRUTH

EXIT_BAD_INPUT = 2
EXIT_ESTIMATION = 3


def _fmt(x) -> str:
    return format(float(x), ".6g")


def _add_config_flags(p: argparse.ArgumentParser, need_tau: bool):
    p.add_argument("--config", help="JSON file with StudyConfig fields; flags override it")
    p.add_argument("--tau", type=float, required=False, default=None,
                   help="prediction horizon" + ("" if need_tau else " (default 4)"))
    p.add_argument("--param", choices=["glm", "rcs"], default=None)
    p.add_argument("--knots", type=int, choices=[3, 4, 5], default=None)
    p.add_argument("--nu0", type=float, default=None)
    p.add_argument("--nu1", type=float, default=None)
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--cv-repeats", type=int, default=None)
    p.add_argument("--E", type=int, default=None, help="perturbation replicates")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-dir", default=".")


_FLAG_TO_FIELD = {
    "tau": "tau", "param": "parameterization", "knots": "knots_q",
    "nu0": "grid_lo", "nu1": "grid_hi", "grid_step": "grid_step",
    "cv_repeats": "cv_repeats", "E": "perturb_e", "seed": "seed",
}


def _build_config(args, default_tau=None) -> StudyConfig:
    fields = {}
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        valid = {f.name for f in dataclasses.fields(StudyConfig) if f.init}
        bad = set(loaded) - valid
        if bad:
            raise ValidationError(f"unknown config keys: {sorted(bad)}")
        fields.update(loaded)
    for flag, field in _FLAG_TO_FIELD.items():
        val = getattr(args, flag)
        if val is not None:
            fields[field] = val
    if "tau" not in fields:
        if default_tau is None:
            raise ValidationError("--tau is required (or supply it via --config)")
        fields["tau"] = default_tau
    return StudyConfig(**fields)


def _config_dict(cfg: StudyConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg) if f.init}


def _manifest(out_dir, command, cfg_dict, seed, outputs, extra=None, warnings=None,
              wall_clock=None):
    payload = {"tool": {"name": "predcurve", "version": __version__},
               "command": command, "config": cfg_dict, "seed": seed,
               "outputs": sorted(outputs)}
    if extra:
        payload.update(extra)
    manifest_id = hashlib.sha256(
        json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()[:16]
    payload["manifest_id"] = manifest_id
    payload["warnings"] = warnings or {}
    payload["wall_clock_seconds"] = round(wall_clock, 3) if wall_clock is not None else None
    path = f"{out_dir}/manifest.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return manifest_id


def _write_table(path, manifest_id, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# manifest_id={manifest_id}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def cmd_estimate(args) -> int:
    t0 = time.monotonic()
    dataset, covariates = load_dataset_csv(args.data)
    cfg = _build_config(args)
    if cfg.tau > float(dataset.y.max()):
        raise ZeroGhatAtDeterminable(
            f"tau={cfg.tau} exceeds the last observed time {dataset.y.max():.6g}; "
            "the censoring survivor estimate vanishes there, lower tau")
    result = curve_with_ci(dataset, cfg, level=args.level, workers=args.threads)

    cfg_dict = _config_dict(cfg)
    manifest_id = _manifest(
        args.out_dir, "estimate", cfg_dict, cfg.seed,
        ["curve.csv", "inverse.csv"],
        extra={"input": {"path": args.data, "sha256": _file_sha256(args.data)},
               "covariates": covariates, "level": args.level},
        warnings={"point_repetitions_failed": result.curve.reps_failed,
                  "perturbation_replicates_failed": result.e_failed},
        wall_clock=time.monotonic() - t0)

    c = result.curve
    _write_table(f"{args.out_dir}/curve.csv", manifest_id,
                 ["v", "r_hat", "se", "ci_lo", "ci_hi"],
                 [[_fmt(c.v_grid[i]), _fmt(c.r_hat[i]), _fmt(c.se[i]),
                   _fmt(c.ci_lo[i]), _fmt(c.ci_hi[i])] for i in range(c.v_grid.size)])
    inv = result.inverse
    _write_table(f"{args.out_dir}/inverse.csv", manifest_id,
                 ["p", "proportion", "se", "ci_lo", "ci_hi"],
                 [[_fmt(inv.p_grid[i]), _fmt(inv.proportion[i]), _fmt(inv.se[i]),
                   _fmt(inv.ci_lo[i]), _fmt(inv.ci_hi[i])] for i in range(inv.p_grid.size)])
    print(f"wrote curve.csv, inverse.csv, manifest.json to {args.out_dir} "
          f"(E used: {result.e_used}, failed: {result.e_failed})")
    return 0


def cmd_simulate(args) -> int:
    t0 = time.monotonic()
    if args.setting not in (1, 2):
        raise UnknownSetting(f"setting must be 1 or 2, got {args.setting}")
    cfg = _build_config(args, default_tau=4.0)
    v_points = [float(v) for v in args.v_points.split(",")] if args.v_points else list(DEFAULT_V_POINTS)
    p_points = [float(p) for p in args.p_points.split(",")] if args.p_points else list(DEFAULT_P_POINTS)
    report = run_sim_study(args.setting, args.n, args.replicates, cfg,
                           v_points=v_points, p_points=p_points, metric=args.metric,
                           level=args.level, workers=args.threads,
                           mc_size=args.mc_size, mc_rounds=args.mc_rounds)
    cfg_dict = _config_dict(cfg)
    manifest_id = _manifest(
        args.out_dir, "simulate", cfg_dict, cfg.seed, ["report.csv"],
        extra={"setting": args.setting, "n": args.n, "replicates": args.replicates,
               "metric": args.metric, "v_points": v_points, "p_points": p_points,
               "level": args.level},
        warnings={"replicates_failed": report.replicates_failed},
        wall_clock=time.monotonic() - t0)
    _write_table(f"{args.out_dir}/report.csv", manifest_id,
                 ["setting", "param", "n", "metric", "point", "true",
                  "bias", "ese", "ase", "cp", "replicates_used"],
                 [[str(r.setting), r.parameterization, str(r.n), r.metric, _fmt(r.point),
                   _fmt(r.true), _fmt(r.bias), _fmt(r.ese), _fmt(r.ase), _fmt(r.cp),
                   str(r.replicates_used)] for r in report.rows])
    print(f"wrote report.csv, manifest.json to {args.out_dir} "
          f"(replicates failed: {report.replicates_failed})")
    return 0


def cmd_true_curve(args) -> int:
    t0 = time.monotonic()
    if args.setting not in (1, 2):
        raise UnknownSetting(f"setting must be 1 or 2, got {args.setting}")
    tau = args.tau if args.tau is not None else 4.0
    seed = args.seed if args.seed is not None else 20240
    grid = INVERSE_GRID
    if args.setting == 1:
        r_true = true_curve_setting1(grid, tau)
    else:
        tc = true_curve_setting2(grid, mc_size=args.mc_size,
                                 rng=rng_from_seed(seed, STREAM_TRUTH),
                                 tau=tau, rounds=args.mc_rounds)
        r_true = tc.r_true
    manifest_id = _manifest(
        args.out_dir, "true-curve", {"tau": tau}, seed, ["true_curve.csv"],
        extra={"setting": args.setting, "mc_size": args.mc_size,
               "mc_rounds": args.mc_rounds},
        wall_clock=time.monotonic() - t0)
    _write_table(f"{args.out_dir}/true_curve.csv", manifest_id, ["v", "r_true"],
                 [[_fmt(grid[i]), _fmt(r_true[i])] for i in range(grid.size)])
    print(f"wrote true_curve.csv, manifest.json to {args.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="predcurve",
        description="Predictiveness curves for competing-risks prediction models")
    parser.add_argument("--version", action="version", version=f"predcurve {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="estimate the curve and its inverse from a CSV")
    p_est.add_argument("--data", required=True, help="CSV with header time,status,<covariates...>")
    _add_config_flags(p_est, need_tau=True)
    p_est.set_defaults(func=cmd_estimate)

    p_sim = sub.add_parser("simulate", help="run the Monte-Carlo study")
    p_sim.add_argument("--setting", type=int, required=True)
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--replicates", type=int, required=True)
    p_sim.add_argument("--metric", choices=["rv", "rinv", "both"], default="rv")
    p_sim.add_argument("--v-points", default=None, help="comma list, default 0.1,0.3,0.5,0.7")
    p_sim.add_argument("--p-points", default=None, help="comma list, default 0.2,0.3,0.4,0.5")
    p_sim.add_argument("--mc-size", type=int, default=10 ** 6)
    p_sim.add_argument("--mc-rounds", type=int, default=4)
    _add_config_flags(p_sim, need_tau=False)
    p_sim.set_defaults(func=cmd_simulate)

    p_true = sub.add_parser("true-curve", help="emit the setting truth curve")
    p_true.add_argument("--setting", type=int, required=True)
    p_true.add_argument("--tau", type=float, default=None)
    p_true.add_argument("--mc-size", type=int, default=10 ** 6)
    p_true.add_argument("--mc-rounds", type=int, default=4)
    p_true.add_argument("--seed", type=int, default=None)
    p_true.add_argument("--threads", type=int, default=1)
    p_true.add_argument("--out-dir", default=".")
    p_true.set_defaults(func=cmd_true_curve)
    return parser


def _exit_code_for(exc: Exception) -> int:
    e = exc
    while e is not None:
        if isinstance(e, ValidationError):
            return EXIT_BAD_INPUT
        e = e.__cause__
    return EXIT_ESTIMATION


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PredcurveError as exc:
        code = _exit_code_for(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
