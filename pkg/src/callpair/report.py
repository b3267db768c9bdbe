"""Rendering of experiment results as text tables, CSV and SVG bar charts.

Text tables show metrics as percentages with two decimals; CSV and JSON keep
full precision.
"""

from __future__ import annotations

import csv
import io
from xml.sax.saxutils import escape

from .timing import TimeTotals

TABLE_METRICS = ("f1", "gm", "f1_gm")
METRIC_LABELS = {
    "precision": "Precision",
    "recall": "Recall",
    "specificity": "Specificity",
    "f1": "F1",
    "gm": "GM",
    "f1_gm": "F1-GM",
}
MODEL_LABELS = {
    "rules": "Rule-based",
    "lr": "Logistic regression",
    "dt": "Decision tree",
    "rf": "Random forest",
    "gbt": "Gradient boosting",
    "mlp": "MLP",
    "traditional": "Traditional (no prediction)",
}


_POLICY_ORDER = ("traditional", "rules", "lr", "dt", "rf", "gbt", "mlp")


def _rank(name: str) -> tuple:
    return (_POLICY_ORDER.index(name), name) if name in _POLICY_ORDER else (len(_POLICY_ORDER), name)


def ordered(d: dict, pair_sep: str | None = None, reverse_pair: bool = False) -> dict:
    """Policies in roster order, so JSON round trips (sorted keys) render the same.

    With ``pair_sep`` keys name two policies (``a_minus_b``, ``b_vs_a``).
    """
    def key(k):
        if pair_sep is None or pair_sep not in k:
            return (_rank(k),)
        a, b = k.split(pair_sep, 1)
        if reverse_pair:
            a, b = b, a
        return (_rank(a), _rank(b))

    return {k: d[k] for k in sorted(d, key=key)}


def pct(x: float) -> str:
    return f"{100.0 * x:.2f}"


def format_table(header, rows, align=None) -> str:
    """Plain fixed-width table; first column left aligned, the rest right."""
    cells = [list(map(str, header))] + [list(map(str, r)) for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    align = align or ["<"] + [">"] * (len(header) - 1)
    out = []
    for k, r in enumerate(cells):
        out.append("  ".join(f"{c:{a}{w}}" for c, a, w in zip(r, align, widths)).rstrip())
        if k == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


# dataset summary


def dataset_rows(summaries: dict):
    """``summaries`` maps split name to ``LabeledDataset.summary()`` output."""
    rows = []
    for split, s in summaries.items():
        months = s.get("months", "")
        rows.append(
            [split, s.get("window_start", "")[:10], s.get("window_end", "")[:10], months,
             s["unique_callers"], s["service_a_calls"], s["other_calls"], s["total_calls"]]
        )
    return rows


DATASET_HEADER = ["split", "start", "end", "months", "unique callers", "SERVICE_A", "OTHER", "total"]


def dataset_table(summaries: dict) -> str:
    return format_table(DATASET_HEADER, dataset_rows(summaries))


def dataset_csv(summaries: dict) -> str:
    return to_csv(DATASET_HEADER, dataset_rows(summaries))


# metric tables


def metrics_rows(results: dict, target: str, metrics=TABLE_METRICS):
    """Rows of (kind, mean_1, std_1, ...) for every model that has ``target``."""
    rows = []
    for kind, res in ordered(results).items():
        t = res.get("targets", {}).get(target)
        if t is None:
            continue
        row = [kind]
        for m in metrics:
            row += [t["mean"][m], t["std"][m]]
        rows.append(row)
    return rows


def metrics_table(results: dict, target: str, metrics=TABLE_METRICS) -> str:
    header = ["model"] + [METRIC_LABELS[m] + " (%)" for m in metrics]
    rows = []
    for r in metrics_rows(results, target, metrics):
        cells = [MODEL_LABELS.get(r[0], r[0])]
        for i in range(len(metrics)):
            cells.append(f"{pct(r[1 + 2 * i])} ± {pct(r[2 + 2 * i])}")
        rows.append(cells)
    return format_table(header, rows)


def metrics_csv(results: dict, target: str, metrics=TABLE_METRICS) -> str:
    header = ["model"]
    for m in metrics:
        header += [f"{m}_mean", f"{m}_std"]
    return to_csv(header, metrics_rows(results, target, metrics))


def failures_text(failures: dict) -> str:
    return "".join(f"{kind}: FAILED ({msg})\n" for kind, msg in failures.items())


# time analysis


def totals_rows(scenarios: dict):
    rows = []
    for name, t in ordered(scenarios).items():
        t = t if isinstance(t, dict) else t.to_dict()
        b = t["breakdown"]
        rows.append(
            [name, t["n_calls"], b["pred_seconds"], b["stage1_seconds"], b["stage2_seconds"], t["total_seconds"]]
        )
    return rows


TOTALS_HEADER = ["policy", "calls", "prediction (s)", "stage 1 (s)", "stage 2 (s)", "total (s)"]


def _secs(x: float) -> str:
    return f"{x:,.2f}" if x != int(x) else f"{int(x):,}"


def analysis_text(a: dict) -> str:
    """Text rendering of the output of :func:`callpair.pipeline.analyze_counts`."""
    t = a["timing"]
    lines = [
        f"timing: t_stage1={t['t_stage1']:g} s, t_stage2={t['t_stage2']:g} s, t_pred={t['t_pred']:g} s",
        "",
    ]
    rows = [
        [MODEL_LABELS.get(r[0], r[0])] + [f"{r[1]:,}"] + [_secs(v) for v in r[2:]]
        for r in totals_rows(a["scenarios"])
    ]
    lines.append(format_table(TOTALS_HEADER, rows).rstrip("\n"))
    lines += ["", "break-even:"]
    for name, be in ordered(a["break_even"], "_vs_", reverse_pair=True).items():
        if be.get("never_beneficial"):
            lines.append(f"  {name}: never beneficial ({be['reason']})")
        else:
            ok = "holds" if be["satisfied"] else "does not hold"
            lines.append(f"  {name}: {be['condition']} ({ok} at current timing)")
    lines += ["", "savings (positive = second policy faster):"]
    for name, s in ordered(a["savings"], "_minus_").items():
        lines.append(f"  {name}: {_secs(s['seconds'])} s ({s['hours']:.2f} h)")
    for note in a.get("notes", []):
        lines += ["", "note: " + note]
    return "\n".join(lines) + "\n"


def analysis_csv(a: dict) -> str:
    return to_csv(["policy", "n_calls", "pred_seconds", "stage1_seconds", "stage2_seconds", "total_seconds"],
                  totals_rows(a["scenarios"]))


# simulation


def simulation_text(sim: dict) -> str:
    rows = []
    policies = ordered(sim["policies"])
    for name, r in policies.items():
        t = r["totals"]
        pc = r["path_counts"]
        rows.append(
            [MODEL_LABELS.get(name, name), _secs(t["total_seconds"]), _secs(t["breakdown"]["pred_seconds"]),
             pc["bypass"], pc["reject_then_ivr"], pc["ivr_only"], repr(r["analytic_delta"])]
        )
    header = ["policy", "total (s)", "prediction (s)", "bypass", "reject_then_ivr", "ivr_only", "delta vs analytic"]
    out = format_table(header, rows)
    for name, r in policies.items():
        mc = r.get("monte_carlo")
        if mc:
            out += (
                f"{name}: stochastic mean {mc['mean_total']:.2f} s over {mc['n_seeds']} seeds, "
                f"SE {mc['standard_error']:.2f}, analytic {mc['analytic_total']:.2f} "
                f"({mc['z_score']:+.2f} SE)\n"
            )
    return out


def simulation_csv(sim: dict) -> str:
    rows = []
    for name, r in ordered(sim["policies"]).items():
        t = r["totals"]
        b = t["breakdown"]
        rows.append([name, t["total_seconds"], b["pred_seconds"], b["stage1_seconds"], b["stage2_seconds"],
                     r["analytic_delta"]])
    return to_csv(["policy", "total_seconds", "pred_seconds", "stage1_seconds", "stage2_seconds", "analytic_delta"],
                  rows)


# SVG


def bar_chart_svg(title: str, categories, series: dict, unit: str = "", errors: dict | None = None) -> str:
    """Grouped vertical bar chart; ``series`` maps a legend label to one value per category."""
    palette = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948")
    categories = list(categories)
    names = list(series)
    errors = errors or {}
    width, height = 640, 360
    left, right, top, bottom = 70, 20, 40, 70
    plot_w = width - left - right
    plot_h = height - top - bottom
    vmax = 0.0
    for n in names:
        for i, v in enumerate(series[n]):
            e = errors.get(n, [0.0] * len(categories))[i]
            vmax = max(vmax, v + e)
    vmax = vmax * 1.1 if vmax > 0 else 1.0
    group_w = plot_w / max(len(categories), 1)
    bar_w = group_w * 0.8 / max(len(names), 1)

    def y(v):
        return top + plot_h * (1.0 - v / vmax)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="#333"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="#333"/>',
    ]
    for k in range(5):
        v = vmax * k / 4
        parts.append(
            f'<text x="{left - 6}" y="{y(v) + 4:.1f}" text-anchor="end">{v:.3g}{escape(unit)}</text>'
        )
    for i, cat in enumerate(categories):
        gx = left + i * group_w + group_w * 0.1
        for j, n in enumerate(names):
            v = series[n][i]
            x = gx + j * bar_w
            parts.append(
                f'<rect x="{x:.1f}" y="{y(v):.1f}" width="{bar_w:.1f}" height="{y(0) - y(v):.1f}" '
                f'fill="{palette[j % len(palette)]}"><title>{escape(n)}: {v:.4g}</title></rect>'
            )
            if n in errors:
                e = errors[n][i]
                cx = x + bar_w / 2
                parts.append(
                    f'<line x1="{cx:.1f}" y1="{y(v + e):.1f}" x2="{cx:.1f}" y2="{y(max(v - e, 0.0)):.1f}" '
                    f'stroke="#000"/>'
                )
        parts.append(
            f'<text x="{left + (i + 0.5) * group_w:.1f}" y="{top + plot_h + 16}" '
            f'text-anchor="middle">{escape(str(cat))}</text>'
        )
    for j, n in enumerate(names):
        lx = left + j * 140
        ly = height - 20
        parts.append(f'<rect x="{lx}" y="{ly - 9}" width="10" height="10" fill="{palette[j % len(palette)]}"/>')
        parts.append(f'<text x="{lx + 14}" y="{ly}">{escape(n)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def metrics_svg(results: dict, target: str, title: str) -> str:
    kinds = [k for k in ordered(results) if target in results[k].get("targets", {})]
    series = {}
    errors = {}
    for m in TABLE_METRICS:
        label = METRIC_LABELS[m]
        series[label] = [100.0 * results[k]["targets"][target]["mean"][m] for k in kinds]
        errors[label] = [100.0 * results[k]["targets"][target]["std"][m] for k in kinds]
    return bar_chart_svg(title, kinds, series, unit="%", errors=errors)


def totals_svg(scenarios: dict, title: str) -> str:
    scenarios = ordered(scenarios)
    hours = []
    for t in scenarios.values():
        d = t.to_dict() if isinstance(t, TimeTotals) else t
        hours.append(d["total_seconds"] / 3600.0)
    return bar_chart_svg(title, list(scenarios), {"total time (h)": hours}, unit="h")
