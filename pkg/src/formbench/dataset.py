"""Shared domain types and on-disk interchange formats.

Two formats cross the component boundary:

* ``.femb`` embedding files -- a 64-byte header (magic ``FEMB``, version,
  row/column counts) followed by a float32 little-endian row-major matrix and
  one newline-terminated UTF-8 id per row.
* label CSV files with header ``id,label_index,label_name``.

Sample ids are file stems of the source images; the released census datasets
do not ship an explicit id scheme, so the stem convention is documented here
and relied on throughout.
"""

from __future__ import annotations

import csv
import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FEMB_MAGIC = b"FEMB"
FEMB_VERSION = 1
_HEADER = struct.Struct("<4sHHQQ40x")  # magic, version, reserved, N, D, pad to 64

# Embedding width each known backbone produces; enforced when the tag matches.
KNOWN_MODEL_DIMS = {
    "ResNet50": 2048,
    "ResNet18": 512,
    "MAE": 768,
    "MAE-448": 768,
    "DiT": 768,
    "DiT-Base": 768,
    "DiT-Large": 768,
    "CLIP-B/32": 512,
    "CLIP-ViT-B/32": 512,
}


class Variant(str, enum.Enum):
    """Whether embeddings came from raw or mask-applied images."""

    NO_SEG = "NoSeg"
    SEG = "Seg"


class MaskClass(enum.IntEnum):
    """Per-pixel content classes of a document segmentation mask."""

    BACKGROUND = 0
    HANDWRITING = 1
    PRINTED_TEXT = 2
    FORM_ELEMENTS = 3


class DatasetError(ValueError):
    """Malformed or inconsistent dataset input."""


@dataclass(frozen=True)
class LabelTable:
    """Per-sample class labels with a contiguous 0..K-1 index space."""

    ids: tuple[str, ...]
    indices: tuple[int, ...]
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.ids) != len(self.indices) or len(self.ids) != len(self.names):
            raise DatasetError("ids, indices and names must be parallel")
        seen: set[str] = set()
        for sample_id in self.ids:
            if not sample_id:
                raise DatasetError("empty sample id")
            if sample_id in seen:
                raise DatasetError(f"duplicate sample id: {sample_id!r}")
            seen.add(sample_id)
        counts: dict[int, int] = {}
        name_of: dict[int, str] = {}
        for idx, name in zip(self.indices, self.names):
            if idx < 0:
                raise DatasetError(f"negative label index {idx}")
            counts[idx] = counts.get(idx, 0) + 1
            if name_of.setdefault(idx, name) != name:
                raise DatasetError(
                    f"label index {idx} maps to both {name_of[idx]!r} and {name!r}"
                )
        k = len(counts)
        if k < 2:
            raise DatasetError(f"need at least 2 classes, got {k}")
        if sorted(counts) != list(range(k)):
            raise DatasetError(
                f"label indices must cover 0..{k - 1}, got {sorted(counts)}"
            )
        for idx in sorted(counts):
            if counts[idx] < 2:
                raise DatasetError(
                    f"class has fewer than 2 members: {idx} ({name_of[idx]!r})"
                )

    @property
    def n_samples(self) -> int:
        return len(self.ids)

    @property
    def n_classes(self) -> int:
        return len(set(self.indices))

    def index_of(self) -> dict[str, int]:
        return dict(zip(self.ids, self.indices))


@dataclass(frozen=True)
class EmbeddingSet:
    """N x D float32 feature matrix with parallel sample ids."""

    ids: tuple[str, ...]
    data: np.ndarray
    model_tag: str = ""
    variant: Variant | None = None

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 2:
            raise DatasetError(f"embedding matrix must be 2-D, got {data.ndim}-D")
        if data.shape[0] != len(self.ids):
            raise DatasetError(
                f"{len(self.ids)} ids but {data.shape[0]} matrix rows"
            )
        if data.shape[1] <= 0:
            raise DatasetError("embedding dimension must be positive")
        bad = ~np.isfinite(data)
        if bad.any():
            row = int(np.nonzero(bad.any(axis=1))[0][0])
            raise DatasetError(f"non-finite embedding value in row {row}")
        expected = KNOWN_MODEL_DIMS.get(self.model_tag)
        if expected is not None and data.shape[1] != expected:
            raise DatasetError(
                f"{self.model_tag} produces {expected}-d embeddings, "
                f"file has {data.shape[1]}"
            )
        object.__setattr__(self, "data", data)

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class SegMask:
    """Per-pixel content class map over a document image."""

    classes: np.ndarray  # uint8, H x W, values in MaskClass

    def __post_init__(self) -> None:
        classes = np.asarray(self.classes, dtype=np.uint8)
        if classes.ndim != 2 or classes.size == 0:
            raise DatasetError("mask must be a non-empty 2-D class map")
        if classes.max(initial=0) > max(MaskClass):
            raise DatasetError(
                f"mask class value {int(classes.max())} outside 0..{max(MaskClass)}"
            )
        object.__setattr__(self, "classes", classes)

    @property
    def height(self) -> int:
        return self.classes.shape[0]

    @property
    def width(self) -> int:
        return self.classes.shape[1]


@dataclass
class UmapParams:
    """Knobs of the manifold reduction stage."""

    n_neighbors: int = 15
    min_dist: float = 0.1
    spread: float = 1.0
    n_epochs: int | None = None  # auto: 500 below 10k points, 200 above
    negative_sample_rate: int = 5
    learning_rate: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_neighbors < 2:
            raise ValueError("n_neighbors must be at least 2")
        if not 0 < self.min_dist <= self.spread:
            raise ValueError("need 0 < min_dist <= spread")
        if self.n_epochs is not None and self.n_epochs < 1:
            raise ValueError("n_epochs must be positive")
        if self.negative_sample_rate < 0:
            raise ValueError("negative_sample_rate must be non-negative")

    def key(self) -> str:
        """Stable string identity used for on-disk reduction caching."""
        return (
            f"nn={self.n_neighbors};md={self.min_dist!r};sp={self.spread!r};"
            f"ep={self.n_epochs};neg={self.negative_sample_rate};"
            f"lr={self.learning_rate!r};seed={self.seed}"
        )


@dataclass
class ProbeConfig:
    """Linear-probe training schedule."""

    epochs: int = 100
    batch_size: int = 64
    base_lr: float = 1e-3
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    folds: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if self.base_lr <= 0:
            raise ValueError("base_lr must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


@dataclass
class RunConfig:
    """Full experiment description driving a deterministic run."""

    datasets: list[DatasetSpec]
    reduced_dims: list[int] = field(default_factory=lambda: [10, 20, 30])
    knn_k: int = 10
    kmeans_trials: int = 3
    kmeans_k: int | None = None  # None: use K from the label table
    umap: UmapParams = field(default_factory=UmapParams)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    master_seed: int = 0

    def __post_init__(self) -> None:
        if not self.reduced_dims or any(d < 1 for d in self.reduced_dims):
            raise ValueError("reduced_dims must be positive")
        if self.knn_k < 1:
            raise ValueError("knn_k must be positive")
        if self.kmeans_trials < 1:
            raise ValueError("kmeans_trials must be positive")
        if self.kmeans_k is not None and self.kmeans_k < 1:
            raise ValueError("kmeans_k must be positive")


@dataclass(frozen=True)
class DatasetSpec:
    """One dataset with its label file and (model, variant) embedding cells."""

    tag: str
    labels_path: str
    cells: tuple[CellSpec, ...]


@dataclass(frozen=True)
class CellSpec:
    """One (model, variant) embedding file inside a dataset grid."""

    model_tag: str
    variant: Variant
    embeddings_path: str


def load_labels(path: str | Path) -> LabelTable:
    """Read a label CSV (``id,label_index,label_name``) preserving file order."""
    path = Path(path)
    ids: list[str] = []
    indices: list[int] = []
    names: list[str] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "label_index", "label_name"]:
            raise DatasetError(
                f"{path}: expected header 'id,label_index,label_name', got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DatasetError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            sample_id, raw_index, name = row
            try:
                index = int(raw_index)
            except ValueError:
                raise DatasetError(
                    f"{path}:{lineno}: label_index {raw_index!r} is not an integer"
                ) from None
            ids.append(sample_id)
            indices.append(index)
            names.append(name)
    try:
        return LabelTable(tuple(ids), tuple(indices), tuple(names))
    except DatasetError as exc:
        raise DatasetError(f"{path}: {exc}") from None


def save_embeddings(embeddings: EmbeddingSet, path: str | Path) -> None:
    """Write a ``.femb`` file; ``load_embeddings`` round-trips it bit-exactly."""
    path = Path(path)
    n, d = embeddings.data.shape
    payload = np.ascontiguousarray(embeddings.data, dtype="<f4").tobytes()
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(FEMB_MAGIC, FEMB_VERSION, 0, n, d))
        fh.write(payload)
        for sample_id in embeddings.ids:
            fh.write(sample_id.encode("utf-8") + b"\n")


def load_embeddings(
    path: str | Path,
    model_tag: str = "",
    variant: Variant | None = None,
) -> EmbeddingSet:
    """Read a ``.femb`` file, rejecting truncation and non-finite values."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise DatasetError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, _reserved, n, d = _HEADER.unpack_from(raw)
    if magic != FEMB_MAGIC:
        raise DatasetError(f"{path}: bad magic {magic!r}")
    if version != FEMB_VERSION:
        raise DatasetError(f"{path}: unsupported version {version}")
    matrix_bytes = n * d * 4
    if len(raw) < _HEADER.size + matrix_bytes:
        raise DatasetError(
            f"{path}: payload truncated, header declares {n}x{d} float32"
        )
    data = np.frombuffer(
        raw, dtype="<f4", count=n * d, offset=_HEADER.size
    ).reshape(n, d)
    tail = raw[_HEADER.size + matrix_bytes :]
    lines = tail.split(b"\n")
    if lines and lines[-1] == b"":
        lines = lines[:-1]
    if len(lines) != n:
        raise DatasetError(f"{path}: expected {n} id lines, found {len(lines)}")
    ids = tuple(line.decode("utf-8") for line in lines)
    try:
        return EmbeddingSet(ids, data.copy(), model_tag=model_tag, variant=variant)
    except DatasetError as exc:
        raise DatasetError(f"{path}: {exc}") from None


def align(
    embeddings: EmbeddingSet, labels: LabelTable
) -> tuple[np.ndarray, np.ndarray]:
    """Pair embedding rows with label indices, ordered by the embedding ids."""
    index_of = labels.index_of()
    missing = [sample_id for sample_id in embeddings.ids if sample_id not in index_of]
    if missing:
        raise DatasetError(
            f"{len(missing)} embedding ids missing from label table: "
            + ", ".join(missing[:10])
            + ("..." if len(missing) > 10 else "")
        )
    label_vec = np.array([index_of[s] for s in embeddings.ids], dtype=np.int64)
    return embeddings.data, label_vec
