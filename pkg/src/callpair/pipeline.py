"""Experiment orchestration: generate, train and evaluate, analyze, simulate, report.

Every command reads an :class:`ExperimentConfig`, writes its artifacts
atomically under ``out_dir`` and returns the JSON-able result it wrote.
Reports embed the resolved configuration (minus filesystem paths) and all
seeds, so identical configs give byte-identical files.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import report as rpt
from .datagen import GenConfig, build_datasets, read_datasets, write_datasets
from .domain import CallPairError, ConfigError, ConfusionCounts, DataError, InvariantError, TimingParams
from .io import dumps, read_json, write_json, write_text
from .models.config import KINDS, config_from_dict, default_config
from .models.core import fit, load_model, repeat_runs, save_model
from .simulator import IvrConfig, Policy, analytic_delta, monte_carlo, simulate
from .timing import (
    NeverBeneficialError,
    binary_form,
    break_even_between,
    compare_forms,
    total_predicted_binary,
    total_traditional,
    traditional_form,
)

logger = logging.getLogger(__name__)

FORMATS = ("table", "json", "csv", "svg")
_EXT = {"table": "txt", "json": "json", "csv": "csv", "svg": "svg"}

# Confusion counts (tn, fp, fn, tp) of the reference 1-month test set.
REFERENCE_COUNTS = {
    "rules": ConfusionCounts(41675, 17732, 301, 1077),
    "mlp": ConfusionCounts(58308, 1099, 579, 799),
}
# The reference time analysis plugs tp = 877 into the rule-based total.
REFERENCE_RULES_TP_QUOTED = 877


@dataclass(frozen=True)
class SimSettings:
    stochastic: bool = False
    duration_jitter: float = 0.2
    n_seeds: int = 200
    n_options_j: int = 5

    def __post_init__(self):
        if int(self.n_seeds) < 1:
            raise ConfigError("simulation.n_seeds must be positive")
        if not self.duration_jitter >= 0:
            raise ConfigError("simulation.duration_jitter must be >= 0")

    def to_dict(self) -> dict:
        return {
            "stochastic": self.stochastic,
            "duration_jitter": self.duration_jitter,
            "n_seeds": self.n_seeds,
            "n_options_j": self.n_options_j,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved settings for a full experiment.

    ``seed`` is the single source of randomness: it overrides the generator
    seed and every model's seed.
    """

    out_dir: str = "callpair-out"
    data_dir: str | None = None
    seed: int = 0
    generation: GenConfig = field(default_factory=GenConfig)
    models: dict = field(default_factory=lambda: {k: default_config(k) for k in KINDS})
    timing: TimingParams = field(default_factory=TimingParams)
    n_runs: int = 20
    policies: tuple = ("traditional", "rules", "mlp")
    formats: tuple = FORMATS
    tune_threshold: bool = True
    simulation: SimSettings = field(default_factory=SimSettings)

    def __post_init__(self):
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if int(self.n_runs) < 1:
            raise ConfigError("n_runs must be at least 1")
        if not self.policies:
            raise ConfigError("at least one policy is required")
        for p in self.policies:
            if p != "traditional" and p not in KINDS:
                raise ConfigError(f"unknown policy {p!r}")
        if not self.models:
            raise ConfigError("at least one model is required")
        for k in self.models:
            if k not in KINDS:
                raise ConfigError(f"unknown model kind {k!r}")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad or not self.formats:
            raise ConfigError(f"formats must be drawn from {FORMATS}, got {list(self.formats)}")
        # one seed drives everything
        object.__setattr__(self, "generation", replace(self.generation, seed=int(self.seed)))
        ordered = {k: self.models[k].with_seed(int(self.seed)) for k in KINDS if k in self.models}
        object.__setattr__(self, "models", ordered)

    @property
    def data_path(self) -> Path:
        return Path(self.data_dir) if self.data_dir else Path(self.out_dir) / "data"

    @property
    def reports_path(self) -> Path:
        return Path(self.out_dir) / "reports"

    @property
    def models_path(self) -> Path:
        return Path(self.out_dir) / "models"

    def to_dict(self) -> dict:
        """Everything except filesystem paths."""
        return {
            "seed": self.seed,
            "generation": self.generation.to_dict(),
            "models": {k: c.to_dict() for k, c in self.models.items()},
            "timing": self.timing.to_dict(),
            "n_runs": self.n_runs,
            "policies": list(self.policies),
            "formats": list(self.formats),
            "tune_threshold": self.tune_threshold,
            "simulation": self.simulation.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {
            "out_dir", "data_dir", "seed", "generation", "models", "timing", "n_runs",
            "policies", "formats", "tune_threshold", "simulation",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for key in ("out_dir", "data_dir", "seed", "n_runs", "tune_threshold"):
            if key in d:
                kw[key] = d[key]
        if "generation" in d:
            kw["generation"] = GenConfig.from_dict(d["generation"])
        if "models" in d:
            models = d["models"]
            if isinstance(models, list):
                models = {k: {} for k in models}
            if not isinstance(models, dict):
                raise ConfigError("models must be a list of kinds or a mapping kind -> hyperparameters")
            kw["models"] = {k: config_from_dict(k, v or {}) for k, v in models.items()}
        if "timing" in d:
            kw["timing"] = _timing(d["timing"])
        if "policies" in d:
            kw["policies"] = tuple(d["policies"])
        if "formats" in d:
            kw["formats"] = tuple(d["formats"])
        if "simulation" in d:
            sim = d["simulation"]
            try:
                kw["simulation"] = SimSettings(**sim)
            except TypeError as exc:
                raise ConfigError(f"bad simulation settings: {exc}") from exc
        return cls(**kw)


def _timing(v) -> TimingParams:
    if isinstance(v, TimingParams):
        return v
    if isinstance(v, str):
        return TimingParams.parse(v)
    if isinstance(v, dict):
        try:
            return TimingParams(**v)
        except TypeError as exc:
            raise ConfigError(f"bad timing: {exc}") from exc
    raise ConfigError(f"bad timing {v!r}")


def load_config(path) -> dict:
    try:
        d = read_json(path)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except ValueError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config file must hold a JSON object")
    return d


def _write_formats(cfg: ExperimentConfig, stem: str, renderings: dict) -> dict:
    """Write ``reports/<stem>.<ext>`` for each requested format that has a rendering."""
    out = {}
    for fmt in cfg.formats:
        if fmt in renderings:
            out[fmt] = write_text(cfg.reports_path / f"{stem}.{_EXT[fmt]}", renderings[fmt])
    return out


# generate


def cmd_generate(cfg: ExperimentConfig) -> dict:
    datasets = build_datasets(cfg.generation)
    try:
        write_datasets(datasets, cfg.generation, cfg.data_path)
    except OSError as exc:
        raise ConfigError(f"cannot write datasets to {cfg.data_path}: {exc}") from exc
    summaries = {}
    for ds, months in zip(datasets, cfg.generation.months):
        s = ds.summary()
        s["months"] = months
        summaries[ds.split_tag] = s
    result = {"config": cfg.to_dict(), "splits": summaries}
    _write_formats(
        cfg,
        "dataset_summary",
        {
            "table": rpt.dataset_table(summaries),
            "csv": rpt.dataset_csv(summaries),
            "json": dumps(result),
        },
    )
    return result


def _load_splits(cfg: ExperimentConfig):
    if not (cfg.data_path / "schema.json").exists():
        raise DataError(f"no datasets in {cfg.data_path}; run 'generate' first")
    return read_datasets(cfg.data_path)


# train + evaluate


def cmd_train_eval(cfg: ExperimentConfig) -> dict:
    """Repeated training per model; failures are recorded per model and do not stop the others."""
    train, val, test = _load_splits(cfg)
    results = {}
    failures = {}
    for kind, mcfg in cfg.models.items():
        models = []
        try:
            summary = repeat_runs(
                kind, mcfg, train, {"validation": val, "test": test},
                n_runs=cfg.n_runs, tune_on=val if cfg.tune_threshold else None, models_out=models,
            )
        except CallPairError as exc:
            logger.warning("training %s failed: %s", kind, exc)
            failures[kind] = str(exc)
            continue
        save_model(models[0], cfg.models_path / f"{kind}.json")
        res = summary.to_dict()
        res["saved_model"] = {
            "seed": summary.runs[0]["seed"],
            "threshold": models[0].threshold,
            "test_counts": summary.runs[0]["test"]["counts"],
        }
        results[kind] = res
    schema = read_json(cfg.data_path / "schema.json")
    result = {
        "config": cfg.to_dict(),
        "dataset": schema.get("generation_config"),
        "models": results,
        "failures": failures,
    }
    write_json(cfg.reports_path / "train_eval.json", result)
    render_train_eval(cfg, result)
    if not results:
        raise DataError("every model failed to train: " + "; ".join(f"{k}: {v}" for k, v in failures.items()))
    return result


def _ordered(models: dict) -> dict:
    # JSON round trips sort keys; tables follow the roster order
    return {k: models[k] for k in KINDS if k in models}


def render_train_eval(cfg: ExperimentConfig, result: dict) -> dict:
    res = _ordered(result["models"])
    fail = rpt.failures_text(result.get("failures", {}))
    n = result["config"]["n_runs"]
    written = {}
    for stem, target, title in (
        ("validation_metrics", "validation", f"Validation set, mean ± std over {n} runs"),
        ("test_metrics", "test", f"Test set, mean ± std over {n} runs"),
    ):
        written[stem] = _write_formats(
            cfg,
            stem,
            {
                "table": title + "\n\n" + rpt.metrics_table(res, target) + fail,
                "csv": rpt.metrics_csv(res, target),
                "svg": rpt.metrics_svg(res, target, title),
            },
        )
    return written


def train_eval_text(result: dict) -> str:
    n = result["config"]["n_runs"]
    fail = rpt.failures_text(result.get("failures", {}))
    return (
        f"Validation set, mean ± std over {n} runs\n\n"
        + rpt.metrics_table(_ordered(result["models"]), "validation")
        + f"\nTest set, mean ± std over {n} runs\n\n"
        + rpt.metrics_table(_ordered(result["models"]), "test")
        + fail
    )


# analyze


def _break_even(a, b, p: TimingParams) -> dict:
    try:
        be = break_even_between(a, b)
    except NeverBeneficialError as exc:
        return {"never_beneficial": True, "reason": str(exc)}
    d = be.to_dict()
    d["satisfied"] = be.satisfied_at(p)
    return d


def _saving(a, b, p: TimingParams) -> dict:
    s = compare_forms(a, b, p)
    return {"seconds": s, "hours": s / 3600.0}


def analyze_counts(model_cm: ConfusionCounts, timing: TimingParams, rules_cm: ConfusionCounts | None = None,
                   model_name: str = "mlp") -> dict:
    """Total-time scenarios, break-even conditions and pairwise savings."""
    if model_cm.total == 0:
        raise DataError("confusion counts are all zero")
    if rules_cm is not None and rules_cm.total != model_cm.total:
        raise DataError(f"counts cover different call totals ({rules_cm.total} vs {model_cm.total})")
    n = model_cm.total
    forms = {"traditional": traditional_form(n)}
    counts = {}
    if rules_cm is not None:
        forms["rules"] = binary_form(rules_cm)
        counts["rules"] = rules_cm.to_dict()
    forms[model_name] = binary_form(model_cm)
    counts[model_name] = model_cm.to_dict()

    scenarios = {"traditional": total_traditional(n, timing).to_dict()}
    for name, cm in (("rules", rules_cm), (model_name, model_cm)):
        if cm is not None:
            scenarios[name] = total_predicted_binary(cm, timing).to_dict()

    names = list(forms)
    break_even = {}
    savings = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            break_even[f"{b}_vs_{a}"] = _break_even(forms[a], forms[b], timing)
            savings[f"{a}_minus_{b}"] = _saving(forms[a], forms[b], timing)

    out = {
        "timing": timing.to_dict(),
        "n_calls": n,
        "counts": counts,
        "scenarios": scenarios,
        "break_even": break_even,
        "savings": savings,
        "notes": [],
    }
    if rules_cm == REFERENCE_COUNTS["rules"]:
        out["quoted_tp_variant"] = _quoted_variant(rules_cm, model_cm, model_name, timing)
        v = out["quoted_tp_variant"]
        out["notes"].append(
            f"the reference time analysis uses tp = {REFERENCE_RULES_TP_QUOTED} for the rule-based policy, "
            f"while its confusion counts give tp = {rules_cm.tp}. With tp = {rules_cm.tp} the rule-based "
            f"policy loses {savings[f'rules_minus_{model_name}']['seconds']:,.0f} s "
            f"({savings[f'rules_minus_{model_name}']['hours']:.2f} h) to {model_name}; with tp = "
            f"{REFERENCE_RULES_TP_QUOTED} it loses {v['savings_seconds']:,.0f} s ({v['savings_hours']:.2f} h) "
            f"and the break-even becomes {v['break_even']['condition']}."
        )
    return out


def _quoted_variant(rules_cm, model_cm, model_name, timing) -> dict:
    n = rules_cm.total
    form = replace(binary_form(rules_cm), stage1_calls=n - REFERENCE_RULES_TP_QUOTED)
    s = _saving(form, binary_form(model_cm), timing)
    return {
        "rules_tp": REFERENCE_RULES_TP_QUOTED,
        "rules_total": form.totals(timing).to_dict(),
        "savings_seconds": s["seconds"],
        "savings_hours": s["hours"],
        "break_even": _break_even(form, binary_form(model_cm), timing),
        "comparison": f"rules_minus_{model_name}",
    }


def counts_from_source(path, model: str = "mlp") -> tuple:
    """``(model_counts, rules_counts_or_None)`` from a train-eval or simulate report."""
    try:
        d = read_json(path)
    except FileNotFoundError as exc:
        raise DataError(f"counts source not found: {path}") from exc
    except ValueError as exc:
        raise DataError(f"counts source {path} is not valid JSON") from exc
    if "models" in d:
        table = {k: v["saved_model"]["test_counts"] for k, v in d["models"].items()}
    elif "policies" in d:
        table = {k: v["confusion_counts"] for k, v in d["policies"].items()}
    else:
        raise DataError(f"{path} is neither a train-eval nor a simulate report")
    if model not in table:
        raise DataError(f"{path} has no counts for {model!r} (available: {sorted(table)})")
    rules = ConfusionCounts.from_dict(table["rules"]) if "rules" in table and model != "rules" else None
    return ConfusionCounts.from_dict(table[model]), rules


def cmd_analyze(cfg: ExperimentConfig, counts: ConfusionCounts | None = None,
                rules_counts: ConfusionCounts | None = None, source=None, model: str = "mlp") -> dict:
    origin = "literal"
    if counts is None:
        if source is None:
            source = cfg.reports_path / "train_eval.json"
        counts, found_rules = counts_from_source(source, model)
        rules_counts = rules_counts or found_rules
        origin = Path(source).name
    a = analyze_counts(counts, cfg.timing, rules_counts, model)
    a["counts_source"] = origin
    _write_formats(
        cfg,
        "analysis",
        {
            "table": rpt.analysis_text(a),
            "json": dumps(a),
            "csv": rpt.analysis_csv(a),
            "svg": rpt.totals_svg(a["scenarios"], "Total call time by policy"),
        },
    )
    return a


# simulate


def _policy(cfg: ExperimentConfig, name: str, workload) -> Policy:
    if name == "traditional":
        return Policy.traditional()
    path = cfg.models_path / f"{name}.json"
    if path.exists():
        return Policy.from_model(load_model(path))
    if name == "rules":
        return Policy.from_model(fit("rules", cfg.models.get("rules") or default_config("rules"), workload))
    raise DataError(f"no trained {name} model at {path}; run 'train-eval' first")


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    """Simulate each policy on the test split and cross-check against the closed form.

    Raises :class:`InvariantError` (after writing the report) if any
    deterministic total differs from the closed form.
    """
    _, _, test = _load_splits(cfg)
    sim = cfg.simulation
    det_cfg = IvrConfig(n_options_j=sim.n_options_j, n_departments=cfg.generation.n_departments, timing=cfg.timing)
    policies = {}
    failed = []
    for name in cfg.policies:
        policy = _policy(cfg, name, test)
        rep = simulate(policy, test, det_cfg, cfg.seed)
        delta = analytic_delta(rep)
        entry = rep.to_dict()
        entry["analytic_total"] = total_predicted_binary(rep.cm, cfg.timing).total_seconds
        entry["analytic_delta"] = delta
        if delta != 0.0:
            failed.append(name)
        if sim.stochastic:
            sto_cfg = replace(det_cfg, stochastic=True, duration_jitter=sim.duration_jitter)
            seeds = range(cfg.seed, cfg.seed + sim.n_seeds)
            mc = monte_carlo(lambda s, p=policy: simulate(p, test, sto_cfg, s), seeds)
            mc["analytic_total"] = entry["analytic_total"]
            se = mc["standard_error"]
            diff = mc["mean_total"] - mc["analytic_total"]
            mc["z_score"] = diff / se if se > 0 else 0.0
            mc["within_3se"] = abs(diff) <= 3.0 * se
            entry["monte_carlo"] = mc
        policies[name] = entry
        write_json(Path(cfg.out_dir) / "sim" / f"{name}.json", entry)
        write_text(Path(cfg.out_dir) / "sim" / f"{name}_calls.csv", rep.per_call_csv())
    result = {"config": cfg.to_dict(), "policies": policies, "cross_check_passed": not failed}
    _write_formats(
        cfg,
        "simulation",
        {
            "table": rpt.simulation_text(result),
            "json": dumps(result),
            "csv": rpt.simulation_csv(result),
            "svg": rpt.totals_svg({k: v["totals"] for k, v in policies.items()}, "Simulated total call time"),
        },
    )
    if failed:
        raise InvariantError(f"simulated totals differ from the closed form for: {', '.join(failed)}")
    return result


# report


def cmd_report(cfg: ExperimentConfig) -> list:
    """Re-render every JSON report found under ``reports/`` in the requested formats."""
    written = []
    rp = cfg.reports_path
    found = False
    if (rp / "dataset_summary.json").exists():
        found = True
        summaries = read_json(rp / "dataset_summary.json")["splits"]
        summaries = {k: summaries[k] for k in ("train", "validation", "test") if k in summaries}
        written += list(_write_formats(cfg, "dataset_summary", {
            "table": rpt.dataset_table(summaries),
            "csv": rpt.dataset_csv(summaries),
        }).values())
    if (rp / "train_eval.json").exists():
        found = True
        for paths in render_train_eval(cfg, read_json(rp / "train_eval.json")).values():
            written += list(paths.values())
    if (rp / "analysis.json").exists():
        found = True
        a = read_json(rp / "analysis.json")
        written += list(_write_formats(cfg, "analysis", {
            "table": rpt.analysis_text(a),
            "csv": rpt.analysis_csv(a),
            "svg": rpt.totals_svg(a["scenarios"], "Total call time by policy"),
        }).values())
    if (rp / "simulation.json").exists():
        found = True
        s = read_json(rp / "simulation.json")
        written += list(_write_formats(cfg, "simulation", {
            "table": rpt.simulation_text(s),
            "csv": rpt.simulation_csv(s),
            "svg": rpt.totals_svg({k: v["totals"] for k, v in s["policies"].items()}, "Simulated total call time"),
        }).values())
    if not found:
        raise DataError(f"no reports found in {rp}")
    return written
