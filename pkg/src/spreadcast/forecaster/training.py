"""AdamW training loop with lowest-validation-loss snapshot selection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..features import ModelSample, stack
from .model import ModelParams, batch_loss, loss_and_grad

log = logging.getLogger(__name__)

FULL_BATCH_LIMIT = 512
MINIBATCH = 64


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    epochs: int = 200
    patience: int = 20
    batch_size: int | None = None  # None: full batch up to FULL_BATCH_LIMIT, else MINIBATCH
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise ValueError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.epochs < 1 or self.patience < 1:
            raise ValueError("epochs and patience must be >= 1")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = -1

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch]

    @property
    def final_train_loss(self) -> float:
        return self.train_loss[-1]


class AdamW:
    """Adam moments with decoupled weight decay (``p -= lr * wd * p``)."""

    def __init__(self, params: ModelParams, lr: float, weight_decay: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.wd = lr, weight_decay
        self.b1, self.b2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.t = 0

    def step(self, params: ModelParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for k, p in params.arrays.items():
            g = grads[k]
            m, v = self.m[k], self.v[k]
            m *= self.b1
            m += (1 - self.b1) * g
            v *= self.b2
            v += (1 - self.b2) * g * g
            p *= 1.0 - self.lr * self.wd
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train(
    params: ModelParams,
    train_samples: Sequence[ModelSample],
    val_samples: Sequence[ModelSample],
    tcfg: TrainConfig,
) -> tuple[ModelParams, TrainHistory]:
    """Train a copy of ``params``; return the best-validation snapshot and history.

    ``train_loss[e]`` is the mean minibatch loss seen during epoch ``e``
    (dropout on); ``val_loss[e]`` is the eval-mode validation loss after
    it.  Without validation samples the selection falls back to train loss.
    Training stops after ``patience`` epochs without a new best.
    """
    if not train_samples:
        raise ValueError("empty training set")
    X, Y = stack(train_samples)
    Xv, Yv = stack(val_samples) if val_samples else (None, None)
    n = len(X)
    bs = tcfg.batch_size or (n if n <= FULL_BATCH_LIMIT else MINIBATCH)

    rng = np.random.default_rng(tcfg.seed)
    work = params.copy()
    opt = AdamW(work, tcfg.learning_rate, tcfg.weight_decay, tcfg.beta1, tcfg.beta2, tcfg.eps)
    hist = TrainHistory()
    best = work.copy()
    best_score = math.inf
    stale = 0

    for epoch in range(tcfg.epochs):
        order = rng.permutation(n) if bs < n else np.arange(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            seed = int(rng.integers(2**63 - 1))
            value, grads = loss_and_grad(work, X[idx], Y[idx], training=True, rng=seed)
            opt.step(work, grads)
            total += value * len(idx)
        hist.train_loss.append(total / n)
        score = batch_loss(work, Xv, Yv) if Xv is not None else hist.train_loss[-1]
        hist.val_loss.append(score)
        if not math.isfinite(score):
            log.warning("non-finite validation loss at epoch %d; stopping", epoch)
            break
        if score < best_score:
            best_score = score
            best = work.copy()
            hist.best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= tcfg.patience:
                break
    if hist.best_epoch < 0:
        raise FloatingPointError("training diverged before producing a finite validation loss")
    return best, hist
