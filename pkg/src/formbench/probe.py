"""Linear separability probe: batch-normalized linear classifier on embeddings.

The classifier is a single fully connected layer on batch-normalized inputs
(no affine rescale after normalization, following the usual linear-probe
convention), trained with decoupled weight decay (AdamW-style moments, decay
on the weight matrix only) under a step-decayed learning rate, and evaluated
by stratified k-fold cross-validation on the full-dimension embeddings.

All statistics and moments accumulate in float64.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import ProbeConfig
from .seeding import seed_derive

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.1
ADAM_EPSILON = 1e-8
_MIN_PARTIAL_BATCH = 4


@dataclass
class ProbeModel:
    """Running BN statistics plus the linear layer's parameters."""

    bn_mean: np.ndarray  # (D,)
    bn_var: np.ndarray  # (D,)
    weights: np.ndarray  # (D, K)
    bias: np.ndarray  # (K,)
    epsilon: float = BN_EPSILON

    @classmethod
    def zeros(cls, dim: int, n_classes: int) -> ProbeModel:
        return cls(
            bn_mean=np.zeros(dim),
            bn_var=np.ones(dim),
            weights=np.zeros((dim, n_classes)),
            bias=np.zeros(n_classes),
        )


def forward(model: ProbeModel, batch: np.ndarray, training: bool = False) -> np.ndarray:
    """Logits for a batch; batch statistics in training mode, running in eval."""
    batch = np.asarray(batch, dtype=np.float64)
    if training:
        mean = batch.mean(axis=0)
        var = batch.var(axis=0)
    else:
        mean = model.bn_mean
        var = model.bn_var
    normalized = (batch - mean) / np.sqrt(var + model.epsilon)
    return normalized @ model.weights + model.bias


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_and_grads(
    model: ProbeModel, batch: np.ndarray, labels: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy and analytic gradients for W, b and the batch inputs.

    Training-mode forward: the batch is normalized by its own statistics, and
    the input gradient flows back through them (full batch-norm backward).
    """
    batch = np.asarray(batch, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = batch.shape[0]

    mean = batch.mean(axis=0)
    var = batch.var(axis=0)
    inv_std = 1.0 / np.sqrt(var + model.epsilon)
    normalized = (batch - mean) * inv_std
    logits = normalized @ model.weights + model.bias

    # stable mean cross-entropy via log-sum-exp
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    loss = float(np.mean(log_z - shifted[np.arange(n), labels]))

    probs = softmax(logits)
    d_logits = probs.copy()
    d_logits[np.arange(n), labels] -= 1.0
    d_logits /= n

    d_weights = normalized.T @ d_logits
    d_bias = d_logits.sum(axis=0)
    d_normalized = d_logits @ model.weights.T
    d_batch = (
        inv_std
        / n
        * (
            n * d_normalized
            - d_normalized.sum(axis=0)
            - normalized * (d_normalized * normalized).sum(axis=0)
        )
    )
    return loss, {"weights": d_weights, "bias": d_bias, "batch": d_batch}


@dataclass
class _AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0


def _adamw_step(
    model: ProbeModel,
    grads: dict[str, np.ndarray],
    state: _AdamState,
    lr: float,
    config: ProbeConfig,
) -> None:
    state.t += 1
    bc1 = 1.0 - config.beta1**state.t
    bc2 = 1.0 - config.beta2**state.t
    for name in ("weights", "bias"):
        g = grads[name]
        state.m[name] = config.beta1 * state.m[name] + (1.0 - config.beta1) * g
        state.v[name] = config.beta2 * state.v[name] + (1.0 - config.beta2) * g * g
        m_hat = state.m[name] / bc1
        v_hat = state.v[name] / bc2
        param = getattr(model, name)
        param -= lr * (m_hat / (np.sqrt(v_hat) + ADAM_EPSILON))
        if name == "weights":  # decoupled decay on W only
            param -= lr * config.weight_decay * param


def _epoch_lr(config: ProbeConfig, epoch: int) -> float:
    lr = config.base_lr
    if epoch >= int(0.6 * config.epochs):
        lr *= 0.1
    if epoch >= int(0.8 * config.epochs):
        lr *= 0.1
    return lr


def _batch_slices(n: int, batch_size: int) -> list[tuple[int, int]]:
    """Contiguous batch bounds; a trailing batch under 4 merges into the previous."""
    bounds = list(range(0, n, batch_size)) + [n]
    slices = [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]
    if len(slices) > 1 and slices[-1][1] - slices[-1][0] < _MIN_PARTIAL_BATCH:
        last = slices.pop()
        prev = slices.pop()
        slices.append((prev[0], last[1]))
    return slices


def train_fold(
    train_x: np.ndarray,
    train_y: np.ndarray,
    n_classes: int,
    config: ProbeConfig,
    seed: int,
) -> ProbeModel:
    """Train one probe on a fold's training split, deterministic given the seed."""
    train_x = np.asarray(train_x, dtype=np.float64)
    train_y = np.asarray(train_y, dtype=np.int64)
    model = ProbeModel.zeros(train_x.shape[1], n_classes)
    state = _AdamState(
        m={"weights": np.zeros_like(model.weights), "bias": np.zeros_like(model.bias)},
        v={"weights": np.zeros_like(model.weights), "bias": np.zeros_like(model.bias)},
    )
    rng = np.random.default_rng(seed)
    for epoch in range(config.epochs):
        lr = _epoch_lr(config, epoch)
        order = rng.permutation(train_x.shape[0])
        for start, stop in _batch_slices(train_x.shape[0], config.batch_size):
            batch_idx = order[start:stop]
            batch = train_x[batch_idx]
            _, grads = loss_and_grads(model, batch, train_y[batch_idx])
            # running statistics: torch convention, unbiased var, momentum 0.1
            bsize = batch.shape[0]
            batch_mean = batch.mean(axis=0)
            batch_var = batch.var(axis=0)
            if bsize > 1:
                batch_var = batch_var * bsize / (bsize - 1)
            model.bn_mean = (1.0 - BN_MOMENTUM) * model.bn_mean + BN_MOMENTUM * batch_mean
            model.bn_var = (1.0 - BN_MOMENTUM) * model.bn_var + BN_MOMENTUM * batch_var
            _adamw_step(model, grads, state, lr, config)
    return model


def stratified_folds(labels: np.ndarray, folds: int, seed: int) -> np.ndarray:
    """Fold index per sample: each class dealt round-robin after a seeded shuffle.

    Class c starts dealing at fold (c mod folds) so small-class remainders
    spread across folds instead of piling onto fold 0.
    """
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    fold_of = np.full(labels.shape[0], -1, dtype=np.int64)
    for c in np.unique(labels):
        members = np.nonzero(labels == c)[0]
        members = members[rng.permutation(members.size)]
        for i, sample in enumerate(members):
            fold_of[sample] = (int(c) + i) % folds
    return fold_of


@dataclass
class ProbeEvaluation:
    mean_accuracy: float
    fold_accuracies: list[float]
    fold_of: np.ndarray | None = field(repr=False, default=None)


def cross_validate(
    data: np.ndarray,
    labels: np.ndarray,
    config: ProbeConfig,
) -> ProbeEvaluation:
    """Stratified k-fold cross-validation of the probe on full-dim embeddings."""
    data = np.asarray(data, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = int(labels.max()) + 1
    fold_of = stratified_folds(labels, config.folds, seed_derive(config.seed, "probe-folds"))

    accuracies = []
    for fold in range(config.folds):
        held_out = fold_of == fold
        if not held_out.any():
            raise ValueError(f"fold {fold} has no validation samples")
        model = train_fold(
            data[~held_out],
            labels[~held_out],
            n_classes,
            config,
            seed_derive(config.seed, "probe-fold", fold),
        )
        logits = forward(model, data[held_out], training=False)
        predictions = logits.argmax(axis=1)
        accuracies.append(float(np.mean(predictions == labels[held_out])))
    return ProbeEvaluation(
        mean_accuracy=float(np.mean(accuracies)),
        fold_accuracies=accuracies,
        fold_of=fold_of,
    )
