"""Command line front end.

Verbs:

* ``mask-apply``  -- paint away unwanted content classes in document scans
* ``reduce``      -- embed a ``.femb`` file down to low-dimensional ``.femb`` files
* ``eval``        -- k-means + KNN scores for already-reduced embeddings
* ``probe``       -- cross-validated linear probe on full embeddings
* ``run``         -- drive the full grid from a TOML config
* ``report``      -- render delta tables from a run's ``results.json``
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import pipeline, report
from .cluster import kmeans_eval, knn_eval
from .dataset import (
    DatasetError,
    EmbeddingSet,
    MaskClass,
    ProbeConfig,
    UmapParams,
    align,
    load_embeddings,
    load_labels,
    save_embeddings,
)
from .mask import (
    COLOR_MARGIN,
    COLOR_MIN_CHANNEL,
    DEFAULT_KEEP,
    MaskError,
    apply_mask,
    read_gray_png,
    read_mask_png,
    write_gray_png,
)
from .probe import cross_validate
from .umap import ReducedSet, reduce_embeddings

_KEEP_DEFAULT = "printed_text,form_elements"


def _parse_keep(text: str) -> frozenset[MaskClass]:
    names = {c.name.lower(): c for c in MaskClass}
    keep = set()
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        if part not in names:
            raise argparse.ArgumentTypeError(
                f"unknown mask class {part!r}; choose from {', '.join(names)}"
            )
        keep.add(names[part])
    if not keep:
        raise argparse.ArgumentTypeError("keep list is empty")
    return frozenset(keep)


def _parse_dims(text: str) -> list[int]:
    try:
        dims = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}") from None
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError("dims must be positive integers")
    return dims


def _cmd_mask_apply(args: argparse.Namespace) -> int:
    images = sorted(Path(args.images).glob("*.png"))
    if not images:
        print(f"no .png images under {args.images}", file=sys.stderr)
        return 2
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    masks_dir = Path(args.masks)
    for image_path in images:
        mask_path = masks_dir / image_path.name
        if not mask_path.is_file():
            print(f"{image_path.name}: no matching mask, skipping", file=sys.stderr)
            continue
        image = read_gray_png(image_path)
        mask = read_mask_png(mask_path)
        masked = apply_mask(image, mask, keep=args.keep, fill=args.fill)
        write_gray_png(masked, out_dir / image_path.name)
        print(f"{image_path.name}: wrote {out_dir / image_path.name}")
    return 0


def _cmd_reduce(args: argparse.Namespace) -> int:
    embeddings = load_embeddings(args.embeddings)
    params = UmapParams(
        n_neighbors=args.n_neighbors,
        min_dist=args.min_dist,
        n_epochs=args.n_epochs,
        seed=args.seed,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.embeddings).stem
    for red in reduce_embeddings(embeddings, args.dims, params):
        out_path = out_dir / f"{stem}.d{red.d}.femb"
        save_embeddings(
            EmbeddingSet(red.ids, red.coords.astype(np.float32)), out_path
        )
        print(f"d={red.d}: wrote {out_path}")
    return 0


def _load_reduced(paths: list[str]) -> list[ReducedSet]:
    reduced = []
    placeholder = UmapParams()
    for path in paths:
        emb = load_embeddings(path)
        reduced.append(
            ReducedSet(
                ids=emb.ids,
                coords=emb.data.astype(np.float64),
                d=emb.dim,
                params=placeholder,
            )
        )
    return reduced


def _cmd_eval(args: argparse.Namespace) -> int:
    labels = load_labels(args.labels)
    reduced = _load_reduced(args.reduced)
    for red in reduced[1:]:
        if red.ids != reduced[0].ids:
            print("reduced files disagree on sample ids/order", file=sys.stderr)
            return 2
    index_of = labels.index_of()
    missing = [s for s in reduced[0].ids if s not in index_of]
    if missing:
        print(
            f"{len(missing)} reduced ids missing from label table: "
            + ", ".join(missing[:10]),
            file=sys.stderr,
        )
        return 2
    label_vec = np.array([index_of[s] for s in reduced[0].ids], dtype=np.int64)
    if args.kmeans_k == "auto":
        k = labels.n_classes
    else:
        try:
            k = int(args.kmeans_k)
        except ValueError:
            print("--kmeans-k must be an integer or 'auto'", file=sys.stderr)
            return 2
    scores = kmeans_eval(reduced, label_vec, k, trials=args.trials, seed=args.seed)
    knn_accuracy, knn_results = knn_eval(reduced, label_vec, args.knn_k)
    payload = {
        "kmeans": {
            "k": k,
            "trials": args.trials,
            "ari_mean": scores.ari_mean,
            "ari_std": scores.ari_std,
            "v_mean": scores.v_mean,
            "v_std": scores.v_std,
            "per_run": scores.per_run,
        },
        "knn": {
            "k": args.knn_k,
            "accuracy": knn_accuracy,
            "per_dim": [
                {"dim": red.d, "accuracy": r.accuracy}
                for red, r in zip(reduced, knn_results)
            ],
        },
    }
    pipeline.write_json(Path(args.out), payload)
    print(f"wrote {args.out}")
    return 0


def _cmd_probe(args: argparse.Namespace) -> int:
    labels = load_labels(args.labels)
    embeddings = load_embeddings(args.embeddings)
    data, label_vec = align(embeddings, labels)
    config = ProbeConfig(epochs=args.epochs, folds=args.folds, seed=args.seed)
    evaluation = cross_validate(data, label_vec, config)
    payload = {
        "folds": config.folds,
        "mean_accuracy": evaluation.mean_accuracy,
        "fold_accuracies": evaluation.fold_accuracies,
    }
    pipeline.write_json(Path(args.out), payload)
    print(f"wrote {args.out}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    config = pipeline.load_run_config(config_path)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    pipeline.run(config, args.out, base_dir=config_path.parent)
    print(f"wrote {Path(args.out) / 'results.json'}")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    results = json.loads(Path(args.results).read_text(encoding="utf-8"))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.md").write_text(report.render_report(results), encoding="utf-8")
    (out_dir / "report.csv").write_text(report.render_csv(results), encoding="utf-8")
    print(f"wrote {out_dir / 'report.md'}")
    print(f"wrote {out_dir / 'report.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="formbench",
        description="Measure how segmentation-masked inputs change embedding quality.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "mask-apply",
        help="apply segmentation masks to grayscale document scans",
        description=(
            "For every image under --images, find the same-named mask under "
            "--masks, keep only the chosen content classes and paint every "
            "other pixel with --fill. Color-coded masks assign a pixel to the "
            "strongest channel when that channel is at least "
            f"{COLOR_MIN_CHANNEL} and beats the median channel by at least "
            f"{COLOR_MARGIN}; anything weaker is background."
        ),
    )
    p.add_argument("--images", required=True, help="directory of input .png scans")
    p.add_argument("--masks", required=True, help="directory of same-named mask .pngs")
    p.add_argument("--out", required=True, help="directory for masked images")
    p.add_argument(
        "--keep",
        type=_parse_keep,
        default=_parse_keep(_KEEP_DEFAULT),
        help=f"comma list of classes to keep (default: {_KEEP_DEFAULT})",
    )
    p.add_argument(
        "--fill",
        type=int,
        default=255,
        help="gray value painted over dropped pixels (default: 255)",
    )
    p.set_defaults(func=_cmd_mask_apply)

    p = sub.add_parser(
        "reduce", help="reduce a .femb file to low-dimensional .femb files"
    )
    p.add_argument("--embeddings", required=True, help="input .femb file")
    p.add_argument(
        "--dims",
        type=_parse_dims,
        default=[10, 20, 30],
        help="comma list of target dimensions (default: 10,20,30)",
    )
    p.add_argument("--n-neighbors", type=int, default=15)
    p.add_argument("--min-dist", type=float, default=0.1)
    p.add_argument("--n-epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--out", required=True, help="directory for <stem>.d<dim>.femb outputs"
    )
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser(
        "eval", help="k-means and KNN scores for already-reduced embeddings"
    )
    p.add_argument(
        "--reduced", required=True, nargs="+", help="reduced .femb files, one per dim"
    )
    p.add_argument("--labels", required=True, help="label CSV (id,label_index,label_name)")
    p.add_argument("--knn-k", type=int, default=10)
    p.add_argument(
        "--kmeans-k",
        default="auto",
        help="cluster count, or 'auto' for the number of label classes",
    )
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("probe", help="cross-validated linear probe on embeddings")
    p.add_argument("--embeddings", required=True, help="input .femb file")
    p.add_argument("--labels", required=True, help="label CSV (id,label_index,label_name)")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSON path")
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("run", help="run the full grid from a TOML config")
    p.add_argument("--config", required=True, help="TOML run configuration")
    p.add_argument(
        "--seed", type=int, default=None, help="override the config's master seed"
    )
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="render delta tables from results.json")
    p.add_argument("--results", required=True, help="results.json from a run")
    p.add_argument("--out", required=True, help="directory for report.md/report.csv")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, MaskError, pipeline.ConfigError, pipeline.RunError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
