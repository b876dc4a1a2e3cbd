"""Experiment driver: TOML config in, deterministic results JSON out.

A run walks every (dataset, model, variant) embedding cell, reduces it to each
target dimension, scores k-means (ARI, V-measure) and leave-one-out KNN on the
reductions, and cross-validates the linear probe on the full embeddings.  All
stage seeds derive from one master seed, so rerunning a config produces
byte-identical output files.

The output directory holds:

* ``results.json``       -- versioned, sorted-key metrics payload
* ``manifest.json``      -- config hash plus sha256 of every input file read
* ``cache/``             -- reduced coordinates keyed by input digest + params

Resuming into an existing output directory is allowed only when the manifest
agrees: a changed config or a changed input file digest is a hard error rather
than a silently mixed result set.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .cluster import kmeans_eval, knn_eval
from .dataset import (
    CellSpec,
    DatasetSpec,
    ProbeConfig,
    RunConfig,
    UmapParams,
    Variant,
    align,
    load_embeddings,
    load_labels,
)
from .probe import cross_validate
from .seeding import seed_derive
from .umap import ReducedSet, reduce_embeddings

RESULTS_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Malformed run configuration."""


class RunError(RuntimeError):
    """Run cannot proceed (for example a resume against changed inputs)."""


def _check_keys(section: str, table: dict, allowed: set[str]) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"[{section}] has unknown keys: {', '.join(unknown)}")


def _parse_cell(tag: str, index: int, table: dict) -> CellSpec:
    section = f"dataset {tag!r} cell {index}"
    _check_keys(section, table, {"model", "variant", "embeddings"})
    for key in ("model", "variant", "embeddings"):
        if key not in table:
            raise ConfigError(f"{section}: missing key {key!r}")
    try:
        variant = Variant(table["variant"])
    except ValueError:
        names = ", ".join(v.value for v in Variant)
        raise ConfigError(
            f"{section}: variant must be one of {names}, got {table['variant']!r}"
        ) from None
    return CellSpec(
        model_tag=str(table["model"]),
        variant=variant,
        embeddings_path=str(table["embeddings"]),
    )


def _parse_dataset(table: dict) -> DatasetSpec:
    tag = table.get("tag")
    if not tag:
        raise ConfigError("[[dataset]] entries need a non-empty 'tag'")
    _check_keys(f"dataset {tag!r}", table, {"tag", "labels", "cell"})
    if "labels" not in table:
        raise ConfigError(f"dataset {tag!r}: missing 'labels' path")
    cells = table.get("cell", [])
    if not cells:
        raise ConfigError(f"dataset {tag!r}: needs at least one [[dataset.cell]]")
    return DatasetSpec(
        tag=str(tag),
        labels_path=str(table["labels"]),
        cells=tuple(_parse_cell(tag, i, c) for i, c in enumerate(cells)),
    )


def parse_run_config(text: str) -> RunConfig:
    """Parse a TOML run configuration; unknown keys are errors, not typos."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    _check_keys(
        "top level", raw, {"run", "umap", "knn", "kmeans", "probe", "dataset"}
    )

    run = raw.get("run", {})
    _check_keys("run", run, {"master_seed", "reduced_dims"})
    umap_raw = raw.get("umap", {})
    _check_keys(
        "umap",
        umap_raw,
        {
            "n_neighbors",
            "min_dist",
            "spread",
            "n_epochs",
            "negative_sample_rate",
            "learning_rate",
        },
    )
    knn = raw.get("knn", {})
    _check_keys("knn", knn, {"k"})
    kmeans = raw.get("kmeans", {})
    _check_keys("kmeans", kmeans, {"k", "trials"})
    probe_raw = raw.get("probe", {})
    _check_keys(
        "probe",
        probe_raw,
        {
            "epochs",
            "batch_size",
            "base_lr",
            "weight_decay",
            "beta1",
            "beta2",
            "folds",
        },
    )
    datasets = [_parse_dataset(d) for d in raw.get("dataset", [])]
    if not datasets:
        raise ConfigError("config defines no [[dataset]] entries")

    try:
        return RunConfig(
            datasets=datasets,
            reduced_dims=[int(d) for d in run.get("reduced_dims", [10, 20, 30])],
            knn_k=int(knn.get("k", 10)),
            kmeans_trials=int(kmeans.get("trials", 3)),
            kmeans_k=int(kmeans["k"]) if "k" in kmeans else None,
            umap=UmapParams(**umap_raw),
            probe=ProbeConfig(**probe_raw),
            master_seed=int(run.get("master_seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        return parse_run_config(path.read_text(encoding="utf-8"))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def config_fingerprint(config: RunConfig) -> str:
    """sha256 over the canonical JSON form of the parsed configuration."""
    payload = dataclasses.asdict(config)
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _digest_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _resolve(base_dir: Path, rel: str) -> Path:
    p = Path(rel)
    return p if p.is_absolute() else base_dir / p


def digest_inputs(config: RunConfig, base_dir: Path) -> dict[str, str]:
    """Digest every input file that exists; missing embedding cells are skipped."""
    inputs: dict[str, str] = {}
    for ds in config.datasets:
        labels_path = _resolve(base_dir, ds.labels_path)
        if not labels_path.is_file():
            raise RunError(f"dataset {ds.tag!r}: label file not found: {labels_path}")
        inputs[ds.labels_path] = _digest_file(labels_path)
        for cell in ds.cells:
            path = _resolve(base_dir, cell.embeddings_path)
            if path.is_file():
                inputs[cell.embeddings_path] = _digest_file(path)
    return inputs


def check_manifest(out_dir: Path, fingerprint: str, inputs: dict[str, str]) -> None:
    """Refuse to resume over results produced from different config or inputs."""
    manifest_path = out_dir / "manifest.json"
    if not manifest_path.is_file():
        return
    stored = json.loads(manifest_path.read_text(encoding="utf-8"))
    if stored.get("config_hash") != fingerprint:
        raise RunError(
            f"{manifest_path}: existing run used a different configuration "
            f"(hash {stored.get('config_hash')}, this config {fingerprint}); "
            "use a fresh output directory"
        )
    for rel, digest in stored.get("inputs", {}).items():
        if rel in inputs and inputs[rel] != digest:
            raise RunError(
                f"{manifest_path}: input {rel} changed since the recorded run "
                f"({digest} -> {inputs[rel]}); use a fresh output directory"
            )


def write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _cache_key(embedding_digest: str, params: UmapParams, d: int) -> str:
    tail = hashlib.sha256(f"{params.key()}|d={d}".encode()).hexdigest()[:16]
    return f"{embedding_digest[:16]}-{tail}-d{d}"


def _reduced_with_cache(
    embeddings, dims: list[int], params: UmapParams, digest: str, cache_dir: Path
) -> list[ReducedSet]:
    """Reduce to each dim, reusing coordinates cached under the input digest."""
    cached: dict[int, ReducedSet] = {}
    missing: list[int] = []
    for d in dims:
        path = cache_dir / f"{_cache_key(digest, params, d)}.npy"
        if path.is_file():
            coords = np.load(path)
            per_dim = replace(params, seed=seed_derive(params.seed, "umap-dim", d))
            cached[d] = ReducedSet(
                ids=embeddings.ids, coords=coords, d=d, params=per_dim
            )
        else:
            missing.append(d)
    if missing:
        for red in reduce_embeddings(embeddings, missing, params):
            path = cache_dir / f"{_cache_key(digest, params, red.d)}.npy"
            np.save(path, red.coords)
            cached[red.d] = red
    return [cached[d] for d in dims]


def _cell_seed(config: RunConfig, stage: str, ds: DatasetSpec, cell: CellSpec) -> int:
    scope = f"{stage}:{ds.tag}:{cell.model_tag}:{cell.variant.value}"
    return seed_derive(config.master_seed, scope)


def _evaluate_cell(
    config: RunConfig,
    ds: DatasetSpec,
    cell: CellSpec,
    labels,
    path: Path,
    digest: str,
    cache_dir: Path,
) -> dict:
    embeddings = load_embeddings(path, model_tag=cell.model_tag, variant=cell.variant)
    data, label_vec = align(embeddings, labels)
    k = config.kmeans_k if config.kmeans_k is not None else labels.n_classes

    params = replace(config.umap, seed=_cell_seed(config, "umap", ds, cell))
    reduced = _reduced_with_cache(
        embeddings, config.reduced_dims, params, digest, cache_dir
    )

    scores = kmeans_eval(
        reduced,
        label_vec,
        k,
        trials=config.kmeans_trials,
        seed=_cell_seed(config, "kmeans", ds, cell),
    )
    knn_accuracy, knn_results = knn_eval(reduced, label_vec, config.knn_k)
    probe_config = replace(config.probe, seed=_cell_seed(config, "probe", ds, cell))
    evaluation = cross_validate(data, label_vec, probe_config)

    return {
        "status": "ok",
        "embeddings_digest": digest,
        "n_samples": embeddings.n_samples,
        "dim": embeddings.dim,
        "kmeans": {
            "k": k,
            "trials": config.kmeans_trials,
            "ari_mean": scores.ari_mean,
            "ari_std": scores.ari_std,
            "v_mean": scores.v_mean,
            "v_std": scores.v_std,
            "per_run": scores.per_run,
        },
        "knn": {
            "k": config.knn_k,
            "accuracy": knn_accuracy,
            "per_dim": [
                {"dim": d, "accuracy": r.accuracy}
                for d, r in zip(config.reduced_dims, knn_results)
            ],
        },
        "probe": {
            "folds": probe_config.folds,
            "mean_accuracy": evaluation.mean_accuracy,
            "fold_accuracies": evaluation.fold_accuracies,
        },
    }


def run(config: RunConfig, out_dir: str | Path, base_dir: str | Path = ".") -> dict:
    """Execute the full grid and write results, manifest and cache files.

    Missing embedding files are reported and skipped so a partial grid still
    produces results for the cells that exist.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cache_dir = out / "cache"
    cache_dir.mkdir(exist_ok=True)
    base = Path(base_dir)

    fingerprint = config_fingerprint(config)
    inputs = digest_inputs(config, base)
    check_manifest(out, fingerprint, inputs)

    datasets: dict[str, dict] = {}
    for ds in config.datasets:
        labels = load_labels(_resolve(base, ds.labels_path))
        cells: dict[str, dict] = {}
        for cell in ds.cells:
            cell_key = f"{cell.model_tag}/{cell.variant.value}"
            path = _resolve(base, cell.embeddings_path)
            if not path.is_file():
                print(
                    f"note: {ds.tag}: {cell_key}: no embeddings at "
                    f"{cell.embeddings_path}, skipping",
                    file=sys.stderr,
                )
                cells[cell_key] = {"status": "missing", "path": cell.embeddings_path}
                continue
            cells[cell_key] = _evaluate_cell(
                config, ds, cell, labels, path, inputs[cell.embeddings_path], cache_dir
            )
        datasets[ds.tag] = {
            "n_samples": labels.n_samples,
            "n_classes": labels.n_classes,
            "cells": cells,
        }

    results = {
        "schema_version": RESULTS_SCHEMA_VERSION,
        "config_hash": fingerprint,
        "master_seed": config.master_seed,
        "reduced_dims": list(config.reduced_dims),
        "datasets": datasets,
    }
    write_json(
        out / "manifest.json",
        {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "config_hash": fingerprint,
            "inputs": inputs,
        },
    )
    write_json(out / "results.json", results)
    return results
