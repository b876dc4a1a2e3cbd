"""Render run results as segmentation-delta tables (markdown and CSV).

Each dataset gets one table per metric with a row per model and columns
``No Seg`` / ``Seg`` / ``Δ Seg``.  Values print with three decimals; the best
value in each of the two variant columns is bolded.  Deltas are always
recomputed here from the two displayed (rounded) values, never read from the
results payload, so a table can never disagree with itself.

Delta sign convention: an explicit ``+`` for gains and U+2212 (minus sign,
not hyphen) for losses; a delta that rounds to zero prints as ``+0.000``.

CSV columns: ``dataset,model,metric,no_seg,seg,delta`` -- one row per
(dataset, model, metric), empty fields where a variant is missing.
"""

from __future__ import annotations

import csv
import io

MINUS = "−"

# metric key in a cell payload -> human heading
_METRICS = [
    (("kmeans", "ari_mean"), "K-means ARI"),
    (("kmeans", "v_mean"), "K-means V-measure"),
    (("knn", "accuracy"), "KNN accuracy"),
    (("probe", "mean_accuracy"), "Probe accuracy"),
]
_METRIC_SLUGS = {
    "K-means ARI": "kmeans_ari",
    "K-means V-measure": "kmeans_v",
    "KNN accuracy": "knn_accuracy",
    "Probe accuracy": "probe_accuracy",
}


def format_delta(delta: float) -> str:
    """``+0.275`` / ``−0.024`` style, with ``+0.000`` for a zero-rounded delta."""
    magnitude = f"{abs(delta):.3f}"
    if delta < 0 and magnitude != "0.000":
        return MINUS + magnitude
    return "+" + magnitude


def _cell_value(cell: dict | None, path: tuple[str, str]) -> float | None:
    if not cell or cell.get("status") != "ok":
        return None
    group, key = path
    return cell[group][key]


def _grid(dataset: dict) -> list[tuple[str, dict | None, dict | None]]:
    """Rows of (model, no_seg cell, seg cell), models sorted by name."""
    variants: dict[str, dict[str, dict]] = {}
    for cell_key, cell in dataset["cells"].items():
        model, _, variant = cell_key.rpartition("/")
        variants.setdefault(model, {})[variant] = cell
    return [
        (model, variants[model].get("NoSeg"), variants[model].get("Seg"))
        for model in sorted(variants)
    ]


def _round3(value: float) -> float:
    return round(value, 3)


def _metric_rows(
    dataset: dict, path: tuple[str, str]
) -> list[tuple[str, float | None, float | None]]:
    return [
        (model, _cell_value(no_seg, path), _cell_value(seg, path))
        for model, no_seg, seg in _grid(dataset)
    ]


def _markdown_table(rows: list[tuple[str, float | None, float | None]]) -> list[str]:
    present_no = [_round3(v) for _, v, _ in rows if v is not None]
    present_seg = [_round3(v) for _, _, v in rows if v is not None]
    best_no = max(present_no) if present_no else None
    best_seg = max(present_seg) if present_seg else None

    def fmt(value: float | None, best: float | None) -> str:
        if value is None:
            return "-"
        text = f"{value:.3f}"
        return f"**{text}**" if _round3(value) == best else text

    lines = [
        "| Model | No Seg | Seg | Δ Seg |",
        "| --- | --- | --- | --- |",
    ]
    for model, no_seg, seg in rows:
        if no_seg is None or seg is None:
            delta = "-"
        else:
            delta = format_delta(_round3(seg) - _round3(no_seg))
        lines.append(
            f"| {model} | {fmt(no_seg, best_no)} | {fmt(seg, best_seg)} | {delta} |"
        )
    return lines


def render_report(results: dict) -> str:
    """Markdown report over all datasets, deterministic for a given payload."""
    lines = ["# Segmentation delta report", ""]
    for tag in sorted(results["datasets"]):
        dataset = results["datasets"][tag]
        lines.append(
            f"## {tag} ({dataset['n_samples']} samples, "
            f"{dataset['n_classes']} classes)"
        )
        lines.append("")
        missing = sorted(
            key
            for key, cell in dataset["cells"].items()
            if cell.get("status") != "ok"
        )
        if missing:
            lines.append(
                "Missing cells (skipped during the run): " + ", ".join(missing)
            )
            lines.append("")
        for path, heading in _METRICS:
            rows = _metric_rows(dataset, path)
            if all(v is None and s is None for _, v, s in rows):
                continue
            lines.append(f"### {heading}")
            lines.append("")
            lines.extend(_markdown_table(rows))
            lines.append("")
    return "\n".join(lines)


def render_csv(results: dict) -> str:
    """CSV flattening of the same tables: dataset,model,metric,no_seg,seg,delta."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["dataset", "model", "metric", "no_seg", "seg", "delta"])
    for tag in sorted(results["datasets"]):
        dataset = results["datasets"][tag]
        for path, heading in _METRICS:
            slug = _METRIC_SLUGS[heading]
            for model, no_seg, seg in _metric_rows(dataset, path):
                if no_seg is None and seg is None:
                    continue
                if no_seg is None or seg is None:
                    delta = ""
                else:
                    delta = format_delta(_round3(seg) - _round3(no_seg))
                writer.writerow(
                    [
                        tag,
                        model,
                        slug,
                        "" if no_seg is None else f"{no_seg:.3f}",
                        "" if seg is None else f"{seg:.3f}",
                        delta,
                    ]
                )
    return buffer.getvalue()
