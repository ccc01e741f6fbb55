"""Command-line surface: run, verify and export every part of the package.

Subcommands
    evolve     exact ensemble fields over a time horizon
    sample     Monte Carlo link counts (envelope or eve construction)
    residuals  one-step difference-equation residual series over checkpoints
    slope      log-log least-squares fit of a stored residual series
    contour    full (t, z) grid export of one field index, exact or sampled
    dirac      matrix algebra + dispersion report (JSON)
    converge   continuum-limit order estimate + rescaled-norm drift (JSON)
    oracle     exhaustive path enumeration, optionally compared against evolve

Every command accepts ``--config FILE`` (flat ``key = value`` lines, ``#``
comments) supplying defaults; explicit flags win.  The worker count resolves
flag > ENTWINE_WORKERS > config > 1.  All randomness flows from ``--seed``;
nothing is ever seeded from the clock, and rerunning a command with the same
flags produces byte-identical files.  After its data files, each command
writes ``<out stem>.manifest.json`` listing the effective configuration and
every file created; the manifest timestamp is null unless ``--stamp`` is
given, because wall-clock text would break reproducibility.

Exit codes: 0 success, 2 invalid arguments or configuration, 3 file-system
errors, 4 failed internal checks (a written report that says "failed" also
exits 4).
"""

from __future__ import annotations

import argparse
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (DEFAULT_CHECKPOINTS, contour_grid, convergence_study,
                       fit_slope)
from .dirac import (dirac_matrix_checks, dispersion_check, scheme_convergence,
                    u_norm_drift)
from .errors import InternalCheckError
from .evolver import evolve
from .fieldio import (read_series_csv, write_contour_csv, write_fields_csv,
                      write_fit_csv, write_json, write_series_csv)
from .lattice import MODES, SAMPLERS, SimConfig, normalize
from .oracle import enumerate_exact
from .rng import test_vector_hash
from .sampler import sample_ensemble

__all__ = ["main"]


def _parse_config_file(path: str) -> dict:
    values = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise ValueError(f"config file not found: {path}")
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


class _Merged:
    """Flag / environment / config-file / default resolution for one command."""

    _CASTS = {
        "alpha": float,
        "steps": int,
        "t_ret": int,
        "pairs": int,
        "mode": str,
        "sampler": str,
        "seed": int,
        "workers": int,
        "checkpoints": _int_list,
        "t": _int_list,
        "i": int,
        "mass": float,
        "a": float,
        "t_final": float,
        "out": str,
        "series": str,
        "trace": str,
        "compare": str,
    }

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._file = _parse_config_file(args.config) if args.config else {}

    def get(self, key: str, default=None, env: str | None = None):
        flag = self._args.get(key)
        if flag is not None:
            return flag
        if env is not None and os.environ.get(env) not in (None, ""):
            try:
                return self._CASTS[key](os.environ[env])
            except (ValueError, argparse.ArgumentTypeError):
                raise ValueError(f"invalid {env} value {os.environ[env]!r}")
        if key in self._file:
            try:
                return self._CASTS[key](self._file[key])
            except (ValueError, argparse.ArgumentTypeError):
                raise ValueError(f"invalid config value {key} = {self._file[key]!r}")
        return default


def _require(merged: _Merged, key: str, env: str | None = None):
    value = merged.get(key, None, env)
    if value is None:
        raise ValueError(f"missing required option --{key.replace('_', '-')}")
    return value


def _manifest(command: str, out: str, effective: dict, outputs: list,
              stamp: bool, rng_seed: int | None) -> Path:
    path = Path(out)
    manifest_file = path.with_name(path.stem + ".manifest.json")
    write_json(manifest_file, {
        "command": command,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat() if stamp else None,
        "config": effective,
        "outputs": [str(p) for p in outputs],
        "rng_test_vector": None if rng_seed is None else test_vector_hash(rng_seed),
    })
    return manifest_file


def _cmd_evolve(args) -> int:
    merged = _Merged(args)
    alpha = merged.get("alpha", 0.5)
    steps = merged.get("steps", 16)
    out = merged.get("out", "evolve.csv")
    config = SimConfig(alpha=alpha, t_ret=steps)
    fields = evolve(config)
    outputs = write_fields_csv(out, fields, {
        "alpha": alpha, "steps": steps, "source": "evolve"})
    _manifest("evolve", out, {"alpha": alpha, "steps": steps, "out": out},
              outputs, args.stamp, None)
    return 0


def _sampling_config(merged: _Merged) -> SimConfig:
    return SimConfig(
        alpha=merged.get("alpha", 0.5),
        t_ret=merged.get("t_ret", 16),
        n_pairs=merged.get("pairs", 1024),
        mode=merged.get("mode", "iid"),
        seed=merged.get("seed", 0),
        workers=merged.get("workers", 1, env="ENTWINE_WORKERS"),
        sampler=merged.get("sampler", "envelope"),
    )


def _sample_meta(config: SimConfig, pairs: int) -> dict:
    return {
        "alpha": config.alpha, "t_ret": config.t_ret, "n_pairs": pairs,
        "mode": config.mode, "seed": config.seed, "workers": config.workers,
        "sampler": config.sampler, "source": "sample",
    }


def _cmd_sample(args) -> int:
    merged = _Merged(args)
    config = _sampling_config(merged)
    out = merged.get("out", "sample.csv")
    checkpoints = merged.get("checkpoints")
    trace = merged.get("trace")
    outputs = []
    if trace:
        outputs.append(Path(trace))
    if checkpoints:
        snaps = sample_ensemble(config, checkpoints=checkpoints, trace_file=trace)
        stem, suffix = Path(out).stem, Path(out).suffix or ".csv"
        for n in sorted(snaps):
            target = Path(out).with_name(f"{stem}_n{n}{suffix}")
            outputs += write_fields_csv(target, snaps[n], _sample_meta(config, n))
    else:
        sample = sample_ensemble(config, trace_file=trace)
        outputs += write_fields_csv(out, sample, _sample_meta(config, config.n_pairs))
    effective = {**config.to_dict(), "checkpoints": checkpoints, "out": out,
                 "trace": trace}
    _manifest("sample", out, effective, outputs, args.stamp, config.seed)
    return 0


def _cmd_residuals(args) -> int:
    merged = _Merged(args)
    config = _sampling_config(merged)
    out = merged.get("out", "residuals.csv")
    times = merged.get("t", [2, 8, 16])
    checkpoints = merged.get("checkpoints")
    if checkpoints is None:
        checkpoints = [n for n in DEFAULT_CHECKPOINTS if n <= config.n_pairs]
    series = convergence_study(config, checkpoints=checkpoints, times=times)
    outputs = write_series_csv(out, series)
    effective = {**config.to_dict(), "t": times, "checkpoints": checkpoints,
                 "out": out}
    _manifest("residuals", out, effective, outputs, args.stamp, config.seed)
    return 0


def _cmd_slope(args) -> int:
    merged = _Merged(args)
    series_path = _require(merged, "series")
    t = _require(merged, "t")
    i = merged.get("i", 4)
    out = merged.get("out", "slope.csv")
    if len(t) != 1:
        raise ValueError(f"slope fits one time slice, got --t {t}")
    series = read_series_csv(series_path)
    fit = fit_slope(series, t[0], i)
    outputs = write_fit_csv(out, fit)
    _manifest("slope", out, {"series": str(series_path), "t": t[0], "i": i,
                             "out": out}, outputs, args.stamp, None)
    return 0


def _cmd_contour(args) -> int:
    merged = _Merged(args)
    i = merged.get("i", 3)
    out = merged.get("out", "contour.csv")
    pairs = merged.get("pairs")
    if pairs is None:
        alpha = merged.get("alpha", 0.5)
        steps = merged.get("steps", merged.get("t_ret", 24))
        fields = evolve(SimConfig(alpha=alpha, t_ret=steps))
        effective = {"alpha": alpha, "steps": steps, "i": i, "out": out,
                     "source": "evolve"}
        seed = None
    else:
        config = _sampling_config(merged)
        fields = normalize(sample_ensemble(config))
        effective = {**config.to_dict(), "i": i, "out": out, "source": "sample"}
        seed = config.seed
    outputs = write_contour_csv(out, contour_grid(fields, i))
    _manifest("contour", out, effective, outputs, args.stamp, seed)
    return 0


def _cmd_dirac(args) -> int:
    merged = _Merged(args)
    mass = merged.get("mass", 1.0)
    out = merged.get("out", "dirac.json")
    report = {
        "matrix": dirac_matrix_checks(mass),
        "dispersion": dispersion_check(mass),
    }
    report["passed"] = report["matrix"]["passed"] and report["dispersion"]["passed"]
    write_json(out, report)
    _manifest("dirac", out, {"mass": mass, "out": out}, [Path(out)],
              args.stamp, None)
    if not report["passed"]:
        raise InternalCheckError(f"matrix/dispersion checks failed, see {out}")
    return 0


def _cmd_converge(args) -> int:
    merged = _Merged(args)
    a = merged.get("a", 1.0)
    t_final = merged.get("t_final", 1.0)
    out = merged.get("out", "converge.json")
    report = {
        "scheme": scheme_convergence(a=a, t_final=t_final),
        "u_norm": u_norm_drift(),
    }
    report["passed"] = report["scheme"]["passed"] and report["u_norm"]["passed"]
    write_json(out, report)
    _manifest("converge", out, {"a": a, "t_final": t_final, "out": out},
              [Path(out)], args.stamp, None)
    if not report["passed"]:
        raise InternalCheckError(f"continuum-limit checks failed, see {out}")
    return 0


def _cmd_oracle(args) -> int:
    merged = _Merged(args)
    alpha = merged.get("alpha", 0.5)
    steps = merged.get("steps", 8)
    out = merged.get("out", "oracle.csv")
    compare = merged.get("compare")
    fields = enumerate_exact(alpha, steps)
    outputs = write_fields_csv(out, fields, {
        "alpha": alpha, "steps": steps, "source": "oracle"})
    max_diff = None
    if compare is not None:
        if compare != "evolve":
            raise ValueError(f"--compare only supports 'evolve', got {compare!r}")
        reference = evolve(SimConfig(alpha=alpha, t_ret=steps))
        max_diff = float(np.abs(fields.data - reference.data).max())
        report_path = Path(out).with_name(Path(out).stem + ".compare.json")
        write_json(report_path, {
            "check": "oracle_vs_evolve_max_abs_diff",
            "value": max_diff,
            "tolerance": 1e-12,
            "passed": max_diff <= 1e-12,
        })
        outputs.append(report_path)
    _manifest("oracle", out, {"alpha": alpha, "steps": steps, "out": out,
                              "compare": compare}, outputs, args.stamp, None)
    if max_diff is not None and max_diff > 1e-12:
        raise InternalCheckError(
            f"enumeration disagrees with evolver: max diff {max_diff:g}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entwine",
        description="Lattice transport model: exact evolution, Monte Carlo "
                    "sampling, residual analysis and continuum-limit checks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value defaults file")
        p.add_argument("--out", help="primary output file")
        p.add_argument("--stamp", action="store_true",
                       help="record a wall-clock timestamp in the manifest "
                            "(breaks byte-identical reruns)")

    def sampling(p):
        p.add_argument("--alpha", type=float)
        p.add_argument("--t-ret", dest="t_ret", type=_positive_int)
        p.add_argument("--pairs", dest="pairs", type=_positive_int)
        p.add_argument("--mode", choices=MODES)
        p.add_argument("--sampler", choices=SAMPLERS)
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=_positive_int)
        p.add_argument("--checkpoints", type=_int_list,
                       help="comma-separated cumulative pair counts")

    p = sub.add_parser("evolve", help="exact ensemble fields")
    common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--steps", type=_positive_int)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("sample", help="Monte Carlo link counts")
    common(p)
    sampling(p)
    p.add_argument("--trace", help="JSONL per-pair geometry log (eve sampler only)")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("residuals", help="difference-equation residual series")
    common(p)
    sampling(p)
    p.add_argument("--t", type=_int_list, help="time slices, e.g. 2,8,16")
    p.set_defaults(func=_cmd_residuals)

    p = sub.add_parser("slope", help="log-log fit of a residual series")
    common(p)
    p.add_argument("--series", help="series CSV produced by `residuals`")
    p.add_argument("--t", type=_int_list, help="time slice to fit")
    p.add_argument("--i", type=int, help="field index 1..4")
    p.set_defaults(func=_cmd_slope)

    p = sub.add_parser("contour", help="full (t, z) grid of one field index")
    common(p)
    sampling(p)
    p.add_argument("--steps", type=_positive_int,
                   help="horizon for the exact grid (no --pairs)")
    p.add_argument("--i", type=int, help="field index 1..4")
    p.set_defaults(func=_cmd_contour)

    p = sub.add_parser("dirac", help="matrix algebra and dispersion report")
    common(p)
    p.add_argument("--mass", type=float)
    p.set_defaults(func=_cmd_dirac)

    p = sub.add_parser("converge", help="continuum order and norm-drift report")
    common(p)
    p.add_argument("--a", type=float, help="physical rate (mass)")
    p.add_argument("--t-final", dest="t_final", type=float)
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("oracle", help="exhaustive path enumeration")
    common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--steps", type=_positive_int)
    p.add_argument("--compare", help="recompute with 'evolve' and diff")
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 3
    except InternalCheckError as exc:
        print(f"internal check failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
