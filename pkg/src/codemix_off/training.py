"""Minibatch training with binary cross-entropy, Adam and early stopping on validation weighted F1."""

from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .corpus import Label
from .metrics import compute_metrics

logger = logging.getLogger(__name__)

CLAMP = 1e-7


class TrainError(RuntimeError):
    code = "train.TrainError"


class NonFiniteLoss(TrainError):
    code = "train.NonFiniteLoss"


class EmptyDataset(TrainError, ValueError):
    code = "train.EmptyDataset"


class LengthMismatch(TrainError, ValueError):
    code = "train.LengthMismatch"


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    max_len: int = 128
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    loss: str = "bce"
    max_epochs: int = 20
    early_stop_patience: int = 3
    seed: int = 0
    class_weighting: str = "none"  # or "inverse-frequency"

    def __post_init__(self):
        if self.optimizer != "adam":
            raise ValueError("only the adam optimizer is supported")
        if self.loss != "bce":
            raise ValueError("only binary cross-entropy is supported")
        if self.class_weighting not in ("none", "inverse-frequency"):
            raise ValueError(f"unknown class weighting {self.class_weighting!r}")
        if self.batch_size < 1 or self.max_epochs < 0 or self.early_stop_patience < 0:
            raise ValueError("batch_size must be positive; epochs and patience nonnegative")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_weighted_f1: float


@dataclass
class TrainHistory:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int | None = None

    def to_json(self) -> dict:
        return {"best_epoch": self.best_epoch, "epochs": [asdict(e) for e in self.epochs]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")


def bce_loss(p, y) -> float:
    """Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7]."""
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape:
        raise LengthMismatch(f"{p.shape} probabilities vs {y.shape} targets")
    if p.size == 0:
        raise EmptyDataset("empty batch")
    p = np.clip(p, CLAMP, 1 - CLAMP)
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1 - p))))


def bce_loss_torch(p: torch.Tensor, y: torch.Tensor, weights: torch.Tensor | None = None) -> torch.Tensor:
    p = p.clamp(CLAMP, 1 - CLAMP)
    per = -(y * torch.log(p) + (1 - y) * torch.log1p(-p))
    if weights is not None:
        per = per * weights
    return per.mean()


def _targets(samples) -> np.ndarray:
    labels = [s.label for s in samples]
    if any(lab is None for lab in labels):
        raise TrainError("training and validation samples must be labeled")
    return np.array([lab.as_int for lab in labels], dtype=np.float64)


def _featurize(model, samples, chunk: int = 256):
    feats = []
    with torch.no_grad():
        for i in range(0, len(samples), chunk):
            feats.extend(model.featurize(samples[i : i + chunk]))
    return feats


def _evaluate(model, feats, y, batch_size) -> tuple[float, float]:
    probs = []
    with torch.no_grad():
        for i in range(0, len(feats), batch_size):
            probs.append(model(*model.collate(feats[i : i + batch_size])))
    p = torch.cat(probs)
    loss = float(bce_loss_torch(p, torch.from_numpy(y)))
    preds = [Label.OFF if x > model.threshold else Label.NOT for x in p.tolist()]
    gold = [Label.OFF if t else Label.NOT for t in y]
    return loss, compute_metrics(preds, gold).weighted[2]


def train(model, train_samples: Sequence, val_samples: Sequence, config: TrainConfig = TrainConfig()):
    """Fit ``model`` in place and return ``(model, history)``.

    The best epoch maximises validation weighted F1, ties broken by lower
    validation loss; its parameters are restored before returning. Training
    stops after ``early_stop_patience`` epochs without improvement.
    """
    history = TrainHistory()
    if config.max_epochs == 0:
        return model, history
    if not train_samples or not val_samples:
        raise EmptyDataset("training and validation sets must be non-empty")

    y_train, y_val = _targets(train_samples), _targets(val_samples)
    sample_weights = None
    if config.class_weighting == "inverse-frequency":
        n, n_off = len(y_train), y_train.sum()
        counts = np.where(y_train == 1, n_off, n - n_off)
        sample_weights = n / (2.0 * counts)

    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    frozen = model.frozen_encoders
    train_feats = _featurize(model, list(train_samples)) if frozen else None
    val_feats = _featurize(model, list(val_samples))

    params = model.head_parameters() + [p for b in model.backends() if b.trainable for p in b.parameters()]
    optimizer = torch.optim.Adam(params, lr=config.learning_rate)

    best_key, best_state, stale = None, None, 0
    for epoch in range(1, config.max_epochs + 1):
        model.train(True)
        order = rng.permutation(len(train_samples))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            feats = (
                [train_feats[i] for i in idx] if frozen else model.featurize([train_samples[i] for i in idx])
            )
            probs = model(*model.collate(feats))
            w = None if sample_weights is None else torch.from_numpy(sample_weights[idx])
            loss = bce_loss_torch(probs, torch.from_numpy(y_train[idx]), w)
            if not torch.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss.item()} at epoch {epoch}, batch starting {start}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item() * len(idx)
        model.train(False)
        if not frozen:
            val_feats = _featurize(model, list(val_samples))
        val_loss, val_f1 = _evaluate(model, val_feats, y_val, config.batch_size)
        record = EpochRecord(epoch, total / len(order), val_loss, val_f1)
        history.epochs.append(record)
        logger.info(
            "epoch %d: train loss %.5f, val loss %.5f, val weighted F1 %.4f", epoch, record.train_loss, val_loss, val_f1
        )
        if not math.isfinite(val_loss):
            raise NonFiniteLoss(f"validation loss became {val_loss} at epoch {epoch}")

        key = (val_f1, -val_loss)
        if best_key is None or key > best_key:
            best_key, stale = key, 0
            history.best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
        else:
            stale += 1
            if stale >= config.early_stop_patience:
                logger.info("early stop after epoch %d (best %d)", epoch, history.best_epoch)
                break

    model.load_state_dict(best_state)
    return model, history
