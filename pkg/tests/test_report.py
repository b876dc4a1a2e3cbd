"""Delta rendering: sign conventions, bolding, CSV layout, self-consistency."""

from __future__ import annotations

import csv
import io

import pytest

from formbench.report import MINUS, format_delta, render_csv, render_report


def _cell(ari, v, knn, probe):
    return {
        "status": "ok",
        "kmeans": {"ari_mean": ari, "v_mean": v},
        "knn": {"accuracy": knn},
        "probe": {"mean_accuracy": probe},
    }


def _results():
    return {
        "schema_version": 1,
        "datasets": {
            "french": {
                "n_samples": 591,
                "n_classes": 14,
                "cells": {
                    "CLIP-B/32/NoSeg": _cell(0.833, 0.9, 0.8, 0.85),
                    "CLIP-B/32/Seg": _cell(0.809, 0.91, 0.82, 0.86),
                    "ResNet50/NoSeg": _cell(0.0, 0.5, 0.6, 0.7),
                    "ResNet50/Seg": _cell(0.275, 0.52, 0.63, 0.72),
                    "GhostNet/NoSeg": {"status": "missing", "path": "x.femb"},
                    "GhostNet/Seg": _cell(0.4, 0.4, 0.4, 0.4),
                },
            }
        },
    }


def test_format_delta_signs():
    assert format_delta(0.275) == "+0.275"
    assert format_delta(-0.024) == MINUS + "0.024"
    assert format_delta(0.0) == "+0.000"
    assert format_delta(-0.0004) == "+0.000"  # rounds to zero: positive form
    assert format_delta(0.0004) == "+0.000"
    assert format_delta(-0.0005) == MINUS + "0.001"
    assert MINUS == "−"
    assert "-" not in format_delta(-1.5)  # never an ASCII hyphen


def test_report_tables_recompute_deltas_from_rounded_values():
    text = render_report(_results())
    # headline cases: displayed deltas agree with the displayed three-decimal
    # values, not with hidden full-precision ones
    assert f"| CLIP-B/32 | **0.833** | **0.809** | {MINUS}0.024 |" in text
    assert "| ResNet50 | 0.000 | 0.275 | +0.275 |" in text


def test_report_bolds_best_per_variant_column():
    text = render_report(_results())
    ari_table = text.split("### K-means ARI")[1].split("###")[0]
    assert "**0.833**" in ari_table  # best NoSeg ARI
    assert "**0.809**" in ari_table  # best Seg ARI
    assert "**0.275**" not in ari_table
    # model with a missing variant renders a dash and no delta
    assert "| GhostNet | - | 0.400 | - |" in ari_table


def test_report_lists_missing_cells():
    text = render_report(_results())
    assert "GhostNet/NoSeg" in text
    assert "591 samples, 14 classes" in text


def test_report_bolds_ties_together():
    results = _results()
    cells = results["datasets"]["french"]["cells"]
    cells["ResNet50/NoSeg"]["kmeans"]["ari_mean"] = 0.8331  # rounds to 0.833 too
    text = render_report(results)
    ari_table = text.split("### K-means ARI")[1].split("###")[0]
    assert ari_table.count("**0.833**") == 2


def test_csv_layout_and_values():
    rows = list(csv.reader(io.StringIO(render_csv(_results()))))
    assert rows[0] == ["dataset", "model", "metric", "no_seg", "seg", "delta"]
    by_key = {(r[1], r[2]): r for r in rows[1:]}
    clip_ari = by_key[("CLIP-B/32", "kmeans_ari")]
    assert clip_ari[3:] == ["0.833", "0.809", MINUS + "0.024"]
    resnet_ari = by_key[("ResNet50", "kmeans_ari")]
    assert resnet_ari[3:] == ["0.000", "0.275", "+0.275"]
    ghost = by_key[("GhostNet", "kmeans_ari")]
    assert ghost[3:] == ["", "0.400", ""]  # missing variant: empty fields
    # every metric appears for every model present in the dataset
    assert len(rows) - 1 == 3 * 4


def test_csv_delta_always_consistent_with_columns():
    rows = list(csv.reader(io.StringIO(render_csv(_results()))))
    for row in rows[1:]:
        no_seg, seg, delta = row[3], row[4], row[5]
        if not no_seg or not seg:
            assert delta == ""
            continue
        recomputed = round(float(seg) - float(no_seg), 3)
        rendered = float(delta.replace(MINUS, "-"))
        assert rendered == pytest.approx(recomputed, abs=1e-9), row


def test_report_is_deterministic_for_reordered_payload():
    a = _results()
    b = _results()
    # same content, different dict insertion order
    b["datasets"]["french"]["cells"] = dict(
        reversed(list(b["datasets"]["french"]["cells"].items()))
    )
    assert render_report(a) == render_report(b)
    assert render_csv(a) == render_csv(b)
