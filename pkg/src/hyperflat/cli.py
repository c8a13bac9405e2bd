"""Command-line front end: ``hyperflat <subcommand> [flags]``.

Exit status is 0 on success, 1 on a configuration error and 2 when an
experiment leaves its acceptance band (or too many replicates failed).
Every file written carries the tool version, the config hash and the master
seed, and re-running with the same inputs reproduces it byte for byte.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path

from . import closed_forms as cf
from . import inference as inf
from . import montecarlo as mc
from . import statistics as st
from ._version import __version__
from .montecarlo import ConfigError, ExperimentConfig
from .sampling import SeedContract, sample_hyperplane_process
from .voronoi import extract_vertices, sample_voronoi_nuclei, write_vertices_csv

EXIT_OK, EXIT_CONFIG, EXIT_BAND = 0, 1, 2

_DEFAULT_REPS = {"simulate": 100, "clt": 2000, "coverage": 1000, "planar": 2000, "voronoi": 500}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int, nargs="+")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int, help="master seed (default: $HYPERFLAT_SEED or 0)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hyperflat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hyperflat {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("tables", help="closed-form constants for d <= d_max")
    p.add_argument("--d-max", type=int, default=None)
    _common(p)

    p = sub.add_parser("simulate", help="replicate statistics and summarise them")
    _common(p)
    p.add_argument("--stat", nargs="+", default=None, help="statistic names (see montecarlo)")

    p = sub.add_parser("clt", help="CLT check of the standardised count and volume")
    _common(p)
    p.add_argument("--tol", type=float, default=0.15, help="relative variance band")
    p.add_argument("--bins", type=int, default=40)

    p = sub.add_parser("estimate", help="interval estimate from one sample")
    _common(p)
    p.add_argument("--method", choices=("I", "J"), default="J")

    p = sub.add_parser("test", help="two-sided planar intensity test on one sample")
    _common(p)
    p.add_argument("--lambda-star", dest="lambda_star", type=float, default=None)

    p = sub.add_parser("coverage", help="interval coverage experiment")
    _common(p)
    p.add_argument("--method", choices=("I", "J", "road", "pvt"), default="J")
    p.add_argument("--band", type=float, nargs=2, default=None, metavar=("LO", "HI"))

    p = sub.add_parser("planar", help="marked planar CLT for the angle rectangle B(a, b)")
    _common(p)
    p.add_argument("--a", type=float, default=math.pi / 2)
    p.add_argument("--b", type=float, default=math.pi)
    p.add_argument("--tol", type=float, default=0.15)

    p = sub.add_parser("voronoi", help="planar Poisson-Voronoi vertex CLT")
    _common(p)
    p.add_argument("--guard", type=float, default=None)
    p.add_argument("--var-band", type=float, nargs=2, default=(0.8, 1.2), metavar=("LO", "HI"))
    return parser


# ----------------------------------------------------------------------------
# config assembly

def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HYPERFLAT_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError("env.HYPERFLAT_SEED", f"not an integer: {env!r}") from None


def _config(args, **overrides) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from exc
        data = json.loads(text) if text.strip() else {}
        if not isinstance(data, dict):
            raise ConfigError("config", "must be a JSON object")
    flags = {"d": args.d, "k": args.k, "lam": args.lam, "r": args.r, "alpha": args.alpha,
             "replicates": args.reps}
    data.update({key: val for key, val in flags.items() if val is not None})
    if args.seed is not None or "master_seed" not in data:
        data["master_seed"] = _seed(args)
    data.setdefault("replicates", _DEFAULT_REPS.get(args.command, 100))
    for key, val in overrides.items():
        if val is not None:
            data[key] = val
    return ExperimentConfig.from_dict(data)


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    path = Path(args.out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("--out", str(exc)) from exc
    if not os.access(path, os.W_OK):
        raise ConfigError("--out", f"directory {path} is not writable")
    return path


def _provenance(cfg_hash: str, seed: int) -> dict:
    return {"hyperflat_version": __version__, "config_hash": cfg_hash, "master_seed": seed}


def _csv_text(header: dict, columns: list[str], rows) -> str:
    buf = io.StringIO()
    for key, val in header.items():
        buf.write(f"# {key}={val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _dump_json(obj) -> str:
    return json.dumps(mc._jsonable(obj), sort_keys=True, indent=2) + "\n"


def _emit(args, name: str, text: str, stdout: bool) -> None:
    out = _out_dir(args)
    if out is not None:
        (out / name).write_text(text)
    if stdout:
        sys.stdout.write(text)


def _write_experiment(args, table: mc.ReplicateTable, report: mc.ExperimentReport) -> None:
    _emit(args, "report.json", report.to_json(), args.format == "json")
    _emit(args, "replicates.csv", table.to_csv(), args.format == "csv")


def _stamp(obj: dict, cfg: ExperimentConfig) -> dict:
    obj = dict(obj)
    obj.update({"version": __version__, "config_hash": cfg.config_hash,
                "master_seed": int(cfg.master_seed), "config": cfg.to_dict()})
    return obj


# ----------------------------------------------------------------------------
# subcommands

def cmd_tables(args) -> int:
    d_max = args.d_max if args.d_max is not None else (args.d if args.d is not None else 4)
    if not 2 <= d_max <= 6:
        raise ConfigError("--d-max", f"must lie in [2, 6], got {d_max}")
    rows = []
    for d in range(1, d_max + 1):
        for k in range(d):
            m = d - k
            rows += [
                (d, k, "", "lambda_k_factor", cf.intensity_lambda_k(d, k, 1.0), "intensity_lambda_k"),
                (d, k, "", "a_dk", cf.stabilizer_a(d, k), "stabilizer_a"),
                (d, k, "", "b_d_minus_k", cf.stabilizer_b(m), "stabilizer_b (re-derived form)"),
                (d, k, "", "sigma_chi", cf.sigma_chi(d, k), "sigma_chi"),
                (d, k, "", "sigma_nu", cf.sigma_nu(d, k), "sigma_nu"),
            ]
            for l in range(d):
                rows += [
                    (d, k, l, "sigma_chi_mixed", cf.sigma_chi_mixed(d, k, l), "sigma_chi_mixed"),
                    (d, k, l, "sigma_nu_mixed", cf.sigma_nu_mixed(d, k, l), "sigma_nu_mixed"),
                ]
        if d >= 2:
            rows.append((d, "", "", "c_d", cf.pvt_vertex_constant(d), "pvt_vertex_constant"))
    cfg_hash = hashlib.sha256(f"tables:d_max={d_max}".encode()).hexdigest()[:16]
    seed = _seed(args)
    cols = ["d", "k", "l", "quantity", "value", "provenance"]
    if args.format == "csv":
        text = _csv_text(_provenance(cfg_hash, seed), cols, rows)
        _emit(args, "tables.csv", text, True)
    else:
        obj = dict(_provenance(cfg_hash, seed), rows=[dict(zip(cols, r)) for r in rows])
        _emit(args, "tables.json", _dump_json(obj), True)
    return EXIT_OK


def cmd_simulate(args) -> int:
    stats = tuple(args.stat) if args.stat else None
    cfg = _config(args, statistics=stats)
    table, report = mc.run_experiment(cfg, threads=args.threads)
    _write_experiment(args, table, report)
    print(f"elapsed {table.elapsed:.2f}s", file=sys.stderr)
    return EXIT_OK if report.batch_ok else EXIT_BAND


def _band_checks(report: mc.ExperimentReport, names, tol: float) -> list[str]:
    bad = []
    for name in names:
        e = report[name]
        ref = e.get("analytic_variance")
        if ref is None:
            continue
        if abs(e["variance"] - ref) > tol * ref:
            bad.append(f"{name}: variance {e['variance']:.5g} outside {tol:.0%} of {ref:.5g}")
        if "ks_statistic" in e and e["ks_statistic"] >= e["ks_critical_1pct"]:
            bad.append(f"{name}: KS {e['ks_statistic']:.4g} >= critical {e['ks_critical_1pct']:.4g}")
    return bad


def _finish(report, bad) -> int:
    for msg in bad:
        print(f"band violation: {msg}", file=sys.stderr)
    if not report.batch_ok:
        print("batch failed: too many replicate failures", file=sys.stderr)
        return EXIT_BAND
    return EXIT_BAND if bad else EXIT_OK


def cmd_clt(args) -> int:
    cfg = _config(args, statistics=("Z_chi", "Z_nu"))
    table, report = mc.run_experiment(cfg, threads=args.threads)
    _write_experiment(args, table, report)
    header = _provenance(cfg.config_hash, cfg.master_seed)
    for name in table.names:
        var = report[name]["analytic_variance"]
        z = table.ok_column(name) / math.sqrt(var)
        q, x = mc.qq_data(z)
        _emit(args, f"qq_{name}.csv", _csv_text(header, ["normal_quantile", "standardized_value"],
                                                 zip(q.tolist(), x.tolist())), False)
        c, dens = mc.histogram_data(z, bins=args.bins)
        _emit(args, f"hist_{name}.csv", _csv_text(header, ["bin_centre", "density"],
                                                   zip(c.tolist(), dens.tolist())), False)
    print(f"elapsed {table.elapsed:.2f}s", file=sys.stderr)
    return _finish(report, _band_checks(report, table.names, args.tol))


def cmd_estimate(args) -> int:
    cfg = _config(args, replicates=2)
    k = cfg.k[0]
    sample = sample_hyperplane_process(cfg.lam, cfg.r, cfg.orientation_law(),
                                       seed=SeedContract(cfg.master_seed, 0))
    lam_hat = st.intensity_estimators(sample, k)[0]
    m = cfg.d - k
    if args.method == "I":
        ci = inf.ci_I(lam_hat, cfg.d, k, cfg.r, cfg.alpha)
        point = lam_hat
    else:
        ci = inf.ci_J(lam_hat, cfg.d, k, cfg.r, cfg.alpha)
        point = (lam_hat / cf.stabilizer_a(cfg.d, k)) ** (1.0 / m)
    obj = {"estimate": point, "lower": ci.lower, "upper": ci.upper, "level": ci.level,
           "method": ci.method, "target": ci.target, "lambda_hat": lam_hat, "k": k}
    _emit(args, "estimate.json", _dump_json(_stamp(obj, cfg)), True)
    return EXIT_OK


def cmd_test(args) -> int:
    cfg = _config(args, replicates=2)
    if cfg.d != 2:
        raise ConfigError("--d", "the intensity test is planar (d = 2)")
    lam_star = args.lambda_star if args.lambda_star is not None else cfg.lam
    if not lam_star > 0:
        raise ConfigError("--lambda-star", "must be positive")
    sample = sample_hyperplane_process(cfg.lam, cfg.r, cfg.orientation_law(),
                                       seed=SeedContract(cfg.master_seed, 0))
    lam_hat = st.intensity_estimators(sample, 0)[0]
    res = inf.test_lambda(lam_hat, lam_star, cfg.r, cfg.alpha)
    obj = dict(res.to_dict(), lambda_star=lam_star)
    _emit(args, "test.json", _dump_json(_stamp(obj, cfg)), True)
    return EXIT_OK


def cmd_coverage(args) -> int:
    overrides = {}
    if args.method == "pvt":
        overrides = {"statistics": ("pvt_count",), "lam": args.lam if args.lam is not None else 100.0}
    cfg = _config(args, **overrides)
    try:
        res = mc.coverage_experiment(cfg, args.method, threads=args.threads)
    except ValueError as exc:
        raise ConfigError("--method", str(exc)) from exc
    lo, hi = args.band if args.band else ((0.90, 0.98) if args.method == "pvt" else (0.92, 0.97))
    obj = dict(res.to_dict(), band=[lo, hi], inside_band=lo <= res.fraction <= hi)
    _emit(args, "coverage.json", _dump_json(_stamp(obj, cfg)), args.format == "json")
    print(f"coverage {res.fraction:.4f} +- {res.se:.4f} (binomial SE, {res.replicates} replicates)",
          file=sys.stderr if args.format == "json" else sys.stdout)
    return EXIT_OK if obj["inside_band"] else EXIT_BAND


def cmd_planar(args) -> int:
    cfg = _config(args, d=2, k=(0,), a=args.a, b=args.b,
                  statistics=("planar_count", "planar_marked_Z", "planar_Z"))
    table, report = mc.run_experiment(cfg, threads=args.threads)
    _write_experiment(args, table, report)
    print(f"elapsed {table.elapsed:.2f}s", file=sys.stderr)
    return _finish(report, _band_checks(report, ["planar_Z"], args.tol))


def cmd_voronoi(args) -> int:
    cfg = _config(args, d=2, k=(0,), lam=args.lam if args.lam is not None else 100.0,
                  guard=args.guard, statistics=("pvt_count", "pvt_Z", "pvt_lambda_hat"))
    table, report = mc.run_experiment(cfg, threads=args.threads)
    _write_experiment(args, table, report)
    nuclei = sample_voronoi_nuclei(cfg.lam, delta=cfg.guard, seed=SeedContract(cfg.master_seed, 0))
    text = write_vertices_csv(extract_vertices(nuclei), header=_provenance(cfg.config_hash, cfg.master_seed))
    _emit(args, "vertices_replicate0.csv", text, False)
    print(f"elapsed {table.elapsed:.2f}s", file=sys.stderr)
    bad = []
    e = report["pvt_Z"]
    lo, hi = args.var_band
    if not lo <= e["variance"] <= hi:
        bad.append(f"pvt_Z: variance {e['variance']:.4g} outside [{lo}, {hi}]")
    if e.get("ks_statistic", 0.0) >= e.get("ks_critical_1pct", math.inf):
        bad.append(f"pvt_Z: KS {e['ks_statistic']:.4g} >= critical {e['ks_critical_1pct']:.4g}")
    return _finish(report, bad)


COMMANDS = {"tables": cmd_tables, "simulate": cmd_simulate, "clt": cmd_clt,
            "estimate": cmd_estimate, "test": cmd_test, "coverage": cmd_coverage,
            "planar": cmd_planar, "voronoi": cmd_voronoi}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise ConfigError("arguments", "a subcommand is required: " + ", ".join(COMMANDS))
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except json.JSONDecodeError as exc:
        print(f"configuration error: config: invalid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
