"""Command-line entry point: ``callpair {generate,train-eval,analyze,simulate,report}``.

Settings come from an optional JSON config file; command-line flags win.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 invariant or
cross-check failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import pipeline as pl
from . import report as rpt
from .datagen import GenConfig
from .domain import ConfigError, ConfusionCounts, DataError, InvariantError, TimingParams
from .io import dumps
from .models.config import KINDS, default_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INVARIANT = 4


def _formats(values):
    out = []
    for v in values or []:
        out += [f.strip() for f in v.split(",") if f.strip()]
    return tuple(dict.fromkeys(out))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--scale", type=float, help="population scale relative to full size")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--data-dir", metavar="DIR", help="dataset directory (default OUT/data)")
    common.add_argument(
        "--format", action="append", metavar="FMT",
        help="report formats: json,csv,table,svg (repeatable or comma separated)",
    )
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="callpair", description="Customer-to-department call routing experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="write synthetic train/validation/test splits")

    te = sub.add_parser("train-eval", parents=[common], help="train every configured model and report metrics")
    te.add_argument("--n-runs", type=int, help="repetitions per model (default 20)")
    te.add_argument("--models", help=f"comma separated subset of {','.join(KINDS)}")

    an = sub.add_parser("analyze", parents=[common], help="total-time, break-even and savings analysis")
    an.add_argument("--counts", metavar="TN,FP,FN,TP", help="confusion counts of the prediction policy")
    an.add_argument("--rules-counts", metavar="TN,FP,FN,TP", help="confusion counts of the rule-based policy")
    an.add_argument("--reference", action="store_true",
                    help="use the reference rule-based and MLP counts of the 60,785-call test month")
    an.add_argument("--from", dest="source", metavar="PATH",
                    help="train-eval or simulate JSON report to take counts from")
    an.add_argument("--model", default="mlp", help="policy to analyze from a report (default mlp)")
    an.add_argument("--timing", metavar="T1,T2,TPRED", help="stage durations in seconds")

    si = sub.add_parser("simulate", parents=[common], help="simulate the call flow per policy and cross-check")
    si.add_argument("--timing", metavar="T1,T2,TPRED", help="stage durations in seconds")
    si.add_argument("--policies", help="comma separated, e.g. traditional,rules,mlp")
    si.add_argument("--stochastic", action="store_true", help="also run jittered Monte Carlo replications")
    si.add_argument("--jitter", type=float, help="coefficient of variation of stage durations")
    si.add_argument("--n-seeds", type=int, help="Monte Carlo replications (default 200)")

    sub.add_parser("report", parents=[common], help="re-render tables and charts from saved JSON reports")
    return p


def resolve_config(args) -> pl.ExperimentConfig:
    d = pl.load_config(args.config) if args.config else {}
    cfg = pl.ExperimentConfig.from_dict(d)
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.out:
        kw["out_dir"] = args.out
    if args.data_dir:
        kw["data_dir"] = args.data_dir
    fmts = _formats(args.format)
    if fmts:
        kw["formats"] = fmts
    if args.scale is not None:
        gen = cfg.generation.to_dict()
        gen.update(scale=args.scale, n_customers=None)
        kw["generation"] = GenConfig.from_dict(gen)
    if getattr(args, "n_runs", None) is not None:
        kw["n_runs"] = args.n_runs
    if getattr(args, "models", None):
        kinds = [k.strip() for k in args.models.split(",") if k.strip()]
        kw["models"] = {k: cfg.models[k] if k in cfg.models else _default(k) for k in kinds}
    if getattr(args, "timing", None):
        kw["timing"] = TimingParams.parse(args.timing)
    if getattr(args, "policies", None):
        kw["policies"] = tuple(p.strip() for p in args.policies.split(",") if p.strip())
    sim = {}
    if getattr(args, "stochastic", False):
        sim["stochastic"] = True
    if getattr(args, "jitter", None) is not None:
        sim["duration_jitter"] = args.jitter
    if getattr(args, "n_seeds", None) is not None:
        sim["n_seeds"] = args.n_seeds
    if sim:
        kw["simulation"] = replace(cfg.simulation, **sim)
    return replace(cfg, **kw) if kw else cfg


def _default(kind):
    if kind not in KINDS:
        raise ConfigError(f"unknown model kind {kind!r}")
    return default_config(kind)


def _counts_flag(flag, text):
    if not text:
        return None
    try:
        return ConfusionCounts.parse(text)
    except DataError as exc:
        # a malformed flag is a usage problem, not bad data
        raise ConfigError(f"{flag}: {exc}") from exc


def _show(cfg, table_text, result):
    if "table" in cfg.formats:
        sys.stdout.write(table_text)
    else:
        sys.stdout.write(dumps(result))


def run(args) -> int:
    cfg = resolve_config(args)
    cmd = args.command
    if cmd == "generate":
        res = pl.cmd_generate(cfg)
        _show(cfg, rpt.dataset_table(res["splits"]), res)
    elif cmd == "train-eval":
        res = pl.cmd_train_eval(cfg)
        _show(cfg, pl.train_eval_text(res), res)
    elif cmd == "analyze":
        counts = _counts_flag("--counts", args.counts)
        rules = _counts_flag("--rules-counts", args.rules_counts)
        model = args.model
        if args.reference:
            if counts is not None or args.source:
                raise ConfigError("--reference cannot be combined with --counts or --from")
            counts, rules, model = pl.REFERENCE_COUNTS["mlp"], pl.REFERENCE_COUNTS["rules"], "mlp"
        res = pl.cmd_analyze(cfg, counts, rules, source=args.source, model=model)
        _show(cfg, rpt.analysis_text(res), res)
    elif cmd == "simulate":
        try:
            res = pl.cmd_simulate(cfg)
        except InvariantError:
            path = cfg.reports_path / "simulation.txt"
            if path.exists():
                sys.stdout.write(path.read_text(encoding="utf-8"))
            raise
        _show(cfg, rpt.simulation_text(res), res)
    elif cmd == "report":
        for path in pl.cmd_report(cfg):
            print(path)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"config error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
