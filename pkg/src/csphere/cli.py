"""Command-line front end: config validation, experiment dispatch, report
persistence and cache management.

Exit codes: 0 when every declared tolerance holds, 2 on a tolerance
failure, 1 on usage, configuration or domain errors.  No computation starts
before the full configuration has validated.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cache import CacheDir, default_cache_root
from .experiments import (
    ExperimentReport,
    run_bernstein,
    run_cesaro_norms,
    run_jackson,
    run_kernel_norms,
    run_kolmogorov,
    run_levy,
    run_mterm,
    run_nikolskii,
    run_selftest,
)
from .geometry import RandomSource, SphereContext
from .spectral import eigenspace_dim, space_dim

__all__ = ["RunConfig", "main", "write_report", "cache_admin"]


class ConfigError(ValueError):
    pass


def _parse_p(text):
    if str(text).lower() in ("inf", "infinity", "oo"):
        return np.inf
    return float(text)


def _parse_int_list(text):
    return [int(tok) for tok in str(text).replace(";", ",").split(",") if tok]


def _parse_float_list(text):
    return [float(tok) for tok in str(text).replace(";", ",").split(",") if tok]


def _parse_p_list(text):
    return [_parse_p(tok) for tok in str(text).replace(";", ",").split(",") if tok]


def _parse_str_list(text):
    return [tok for tok in str(text).replace(";", ",").split(",") if tok]


def _parse_omegas(text):
    """Omega grammar: comma-separated specs, each a union of '+'-joined
    parts, where a part is a level or an 'a-b' range: '0-4,1+3+5'."""
    omegas = []
    for spec in str(text).replace(";", ",").split(","):
        if not spec:
            continue
        levels = []
        for part in spec.split("+"):
            if "-" in part:
                a, b = part.split("-")
                levels.extend(range(int(a), int(b) + 1))
            else:
                levels.append(int(part))
        omegas.append(tuple(sorted(set(levels))))
    if not omegas:
        raise ConfigError("empty omega specification")
    return omegas


# schema: per-experiment parameter names -> (parser, default)
_COMMON = {
    "d": (int, 3),
    "seed": (int, 0),
    "outdir": (str, "reports"),
    "cache_dir": (str, None),
    "format": (str, "both"),
    "threads": (int, 1),
}

_SCHEMAS = {
    "dims": {"k": (int, 5)},
    "kernels": {
        "gamma": (_parse_float_list, [2.0, 3.0]),
        "q2n": (_parse_int_list, [8, 16, 32, 64]),
        "n": (_parse_int_list, [16, 32, 64, 128]),
    },
    "cesaro": {
        "delta": (_parse_float_list, [0.0, 1.0, 2.0]),
        "n": (_parse_int_list, [16, 32, 64, 128, 256]),
    },
    "jackson": {
        "gamma": (float, 2.0),
        "p": (_parse_p, 2.0),
        "n": (_parse_int_list, [16, 32, 64, 128]),
        "kinds": (_parse_str_list, ["zonal-extremal"]),
        "trials": (int, 2),
    },
    "bernstein": {
        "gamma": (float, 1.0),
        "p": (_parse_p, 2.0),
        "q": (_parse_p, 2.0),
        "n": (_parse_int_list, [4, 8, 16, 32]),
        "trials": (int, 3),
    },
    "nikolskii": {
        "p": (_parse_p, None),
        "q": (_parse_p, None),
        "omega_samples": (int, 50),
        "trials": (int, 20),
        "max_degree": (int, 12),
    },
    "kolmogorov": {
        "alpha": (float, 1.0),
        "beta": (float, 2.0),
        "p": (_parse_p, 2.0),
        "trials": (int, 100),
        "n": (_parse_int_list, [8, 10, 12, 14, 16]),
    },
    "levy": {
        "p": (_parse_p_list, [2.0, 4.0, 8.0, 16.0]),
        "omega": (_parse_omegas, [(0, 1, 2, 3, 4)]),
        "samples": (int, 500),
    },
    "mterm": {
        "gamma": (float, 2.0),
        "p": (_parse_p, 2.0),
        "q": (_parse_p, 2.0),
        "m": (_parse_int_list, [10, 18, 32, 56, 100, 178, 316, 562, 1000]),
        "strategy": (str, "l2-threshold"),
        "targets": (_parse_str_list, ["zonal-extremal"]),
        "dict_degree": (int, 20),
        "trials": (int, 1),
    },
    "selftest": {},
    "cache": {"action": (str, "status"), "k": (int, 16)},
}


@dataclass
class RunConfig:
    """Validated run configuration: context parameters plus the experiment's
    own numeric knobs, exactly as consumed by the driver."""

    experiment: str
    d: int
    seed: int
    outdir: str
    cache_dir: str | None
    format: str
    threads: int
    params: dict = field(default_factory=dict)

    def describe(self) -> dict:
        out = {"experiment": self.experiment, "d": self.d, "seed": self.seed,
               "format": self.format, "threads": self.threads}
        for k, v in self.params.items():
            out[k] = v
        return out


def load_config_file(path) -> dict:
    """Flat KEY=VALUE file; '#' starts a comment."""
    out = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected KEY=VALUE")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def build_config(experiment: str, cli_values: dict, file_values: dict) -> RunConfig:
    schema = dict(_COMMON)
    schema.update(_SCHEMAS[experiment])
    unknown = set(file_values) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config keys for {experiment}: {sorted(unknown)}")
    merged = {}
    for key, (parser, default) in schema.items():
        if cli_values.get(key) is not None:
            merged[key] = cli_values[key]
        elif key in file_values:
            try:
                merged[key] = parser(file_values[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from exc
        else:
            merged[key] = default
    if merged["format"] not in ("csv", "json", "both"):
        raise ConfigError("format must be csv, json or both")
    if merged["threads"] < 1:
        raise ConfigError("threads must be positive")
    if merged["d"] % 2 == 0 or merged["d"] < 3:
        raise ConfigError("d must be odd and at least 3")
    params = {k: merged[k] for k in _SCHEMAS[experiment]}
    return RunConfig(experiment=experiment, d=merged["d"], seed=merged["seed"],
                     outdir=merged["outdir"], cache_dir=merged["cache_dir"],
                     format=merged["format"], threads=merged["threads"],
                     params=params)


def _add_experiment_flags(sub, name):
    sub.add_argument("--config", default=None, help="KEY=VALUE config file")
    for key, (parser, default) in dict(_COMMON, **_SCHEMAS[name]).items():
        flag = "--" + key.replace("_", "-")
        sub.add_argument(flag, dest=key, type=parser if parser is not str else str,
                         default=None, help=f"default: {default}")


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="csphere",
        description="zonal harmonic analysis experiments on complex spheres")
    subs = ap.add_subparsers(dest="experiment", required=True)
    for name in _SCHEMAS:
        _add_experiment_flags(subs.add_parser(name), name)
    return ap


def write_report(report: ExperimentReport, config: RunConfig):
    """CSV and JSON summary, written atomically; filenames embed the
    experiment, dimension, seed and a UTC timestamp."""
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stamp = datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%dT%H%M%S%f")
    stem = f"{report.name}_d{config.d}_s{config.seed}_{stamp}"
    paths = []
    if config.format in ("csv", "both"):
        path = outdir / f"{stem}.csv"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(report.to_csv())
        os.replace(tmp, path)
        paths.append(path)
    if config.format in ("json", "both"):
        summary = report.summary_dict()
        summary["config"] = _jsonable(config.describe())
        summary["timestamp"] = stamp
        path = outdir / f"{stem}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(summary, indent=1, sort_keys=True))
        os.replace(tmp, path)
        paths.append(path)
    return paths


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and np.isinf(obj):
        return "inf"
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def cache_admin(action: str, config: RunConfig) -> str:
    cache = CacheDir(config.cache_dir or default_cache_root())
    if action == "status":
        st = cache.status()
        lines = [f"cache root: {st['root']}"]
        lines.append(f"rules: {len(st['rules'])}")
        lines.extend(f"  {name}" for name in st["rules"])
        lines.append(f"bases: {len(st['bases'])}")
        lines.extend(f"  {name}" for name in st["bases"])
        return "\n".join(lines)
    if action == "clear":
        removed = cache.clear()
        return f"removed {removed} cache entries"
    if action == "warm":
        ctx = SphereContext(config.d)
        built = cache.warm(ctx, config.params["k"])
        rebuilt = [k for k, v in built.items() if v]
        return "warmed: rebuilt " + (", ".join(rebuilt) if rebuilt else "nothing (all hits)")
    raise ConfigError(f"unknown cache action {action!r}")


def _run_dims(ctx: SphereContext, config: RunConfig) -> ExperimentReport:
    kmax = config.params["k"]
    report = ExperimentReport(
        name="dims", params={"d": ctx.d, "k": kmax},
        columns=["k", "eigenvalue", "dim", "cumulative_dim"], seed=config.seed)
    for k in range(kmax + 1):
        report.rows.append((k, float(k * (k + ctx.d - 1)),
                            eigenspace_dim(k, ctx), space_dim(k, ctx)))
    return report


def _dispatch(config: RunConfig) -> ExperimentReport:
    ctx = SphereContext(config.d)
    rng = RandomSource(config.seed)
    p = config.params
    name = config.experiment
    if name == "dims":
        return _run_dims(ctx, config)
    if name == "kernels":
        return run_kernel_norms(ctx, gamma_list=p["gamma"], q2n_list=p["q2n"],
                                tail_list=p["n"])
    if name == "cesaro":
        return run_cesaro_norms(ctx, p["delta"], p["n"])
    if name == "jackson":
        return run_jackson(ctx, p["gamma"], p["p"], p["n"], rng,
                           target_kinds=tuple(p["kinds"]), trials=p["trials"])
    if name == "bernstein":
        return run_bernstein(ctx, p["gamma"], p["p"], p["q"], p["n"],
                             p["trials"], rng)
    if name == "nikolskii":
        return run_nikolskii(ctx, p["p"], p["q"], p["omega_samples"],
                             p["trials"], rng, max_degree=p["max_degree"])
    if name == "kolmogorov":
        return run_kolmogorov(ctx, p["alpha"], p["beta"], p["p"], p["trials"],
                              rng, n_list=tuple(p["n"]))
    if name == "levy":
        return run_levy(ctx, p["p"], p["omega"], p["samples"], rng)
    if name == "mterm":
        return run_mterm(ctx, p["gamma"], p["p"], p["q"], p["m"],
                         p["strategy"], rng, targets=tuple(p["targets"]),
                         dict_degree=p["dict_degree"], trials=p["trials"])
    if name == "selftest":
        return run_selftest(ctx, rng)
    raise ConfigError(f"unknown experiment {name!r}")


def _print_summary(report: ExperimentReport):
    print(f"experiment: {report.name}  rows: {len(report.rows)}")
    for s in report.slopes:
        status = "----" if s.passed is None else ("PASS" if s.passed else "FAIL")
        rel = "<=" if s.kind == "upper" else "vs"
        tol = "" if s.tol is None else f" +- {s.tol:g}"
        print(f"  [{status}] slope {s.name}: {s.slope:+.4f} (se {s.stderr:.4f}) "
              f"{rel} {s.theory:+.4f}{tol}")
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"  [{status}] {c.name}: value {c.value:.6g} bound {c.bound:.6g}")
    print(f"result: {'PASS' if report.passed else 'FAIL'}")


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cli_values = {k: v for k, v in vars(args).items()
                      if k not in ("experiment", "config")}
        config = build_config(args.experiment, cli_values, file_values)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if config.experiment == "cache":
        try:
            print(cache_admin(config.params["action"], config))
            return 0
        except (ConfigError, OSError) as exc:
            print(f"cache error: {exc}", file=sys.stderr)
            return 1
    try:
        report = _dispatch(config)
    except (ValueError, ArithmeticError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 1
    paths = write_report(report, config)
    for path in paths:
        print(f"wrote {path}")
    _print_summary(report)
    return 0 if report.passed else 2


if __name__ == "__main__":
    sys.exit(main())
