"""Negative log-likelihood training with Adam, mini-batches and early stopping."""

from __future__ import annotations

import json
import logging
import sys
import time
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .config import ModelConfig, TrainConfig
from .corpus import Sentence, build_vocab
from .evaluate import decode_all, score_arguments
from .model import SRLModel
from .scorer import score_roles
from .tensor import Graph, Tensor, add, cross_entropy, scale

logger = logging.getLogger(__name__)


class PairPolicyError(ValueError):
    """A gold triplet is not among the pairs the enumeration policy scores."""


def gold_targets(sentence: Sentence, pairs: np.ndarray, vocab) -> np.ndarray:
    """Gold role id for every enumerated pair; 0 (null) where no triplet exists."""
    n = len(sentence)
    slot = np.full(n * n, -1, dtype=np.int64)
    slot[pairs[:, 0] * n + pairs[:, 1]] = np.arange(len(pairs))
    targets = np.zeros(len(pairs), dtype=np.int64)
    outside = []
    for t in sorted(sentence.gold):
        k = slot[(t.p - 1) * n + (t.a - 1)]
        if k < 0:
            outside.append(t)
            continue
        targets[k] = vocab.role_id(t.r)
    if outside:
        raise PairPolicyError(f"gold triplets outside the pair enumeration policy: {outside}")
    return targets


def _pair_loss(scores: Tensor, targets: np.ndarray, null_weight: float) -> Tensor:
    weights = None
    if null_weight != 1.0:
        weights = np.where(targets == 0, null_weight, 1.0)
    return cross_entropy(scores, targets, weights)


def sentence_loss(sentence: Sentence, model: SRLModel, iterations: int | None = None, H: Tensor | None = None,
                  null_weight: float = 1.0, deep_supervision: bool = False) -> Tensor:
    """``-log P(y|S)``: summed NLL of the gold role over every enumerated pair.

    ``H`` lets a caller pass an already-encoded token matrix (batched
    encoding).  With ``deep_supervision`` the first-order scores of every
    refinement iteration add their own NLL term.
    """
    if H is None:
        H = model.encode([sentence])[0]
    out = model.score(H, iterations)
    targets = gold_targets(sentence, out.pairs, model.vocab)
    loss = _pair_loss(out.scores, targets, null_weight)
    if deep_supervision:
        for it in out.history:
            aux = score_roles(it.V_p, it.V_a, it.scores, model.scorer)
            loss = add(loss, _pair_loss(aux, targets, null_weight))
    return loss


def batch_loss(batch: Sequence[Sentence], model: SRLModel, cfg: TrainConfig, iterations: int | None = None, rng=None) -> Tensor:
    """Mean over sentences of the per-sentence loss; encoder runs batched."""
    losses = [
        sentence_loss(s, model, iterations, H, cfg.null_weight, cfg.deep_supervision)
        for s, H in zip(batch, model.encode(batch, rng))
    ]
    total = losses[0]
    for extra in losses[1:]:
        total = add(total, extra)
    return scale(total, 1.0 / len(losses))


# ---------------------------------------------------------------- optimiser


@dataclass
class OptimizerState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def clip_grad_norm(params: dict[str, Tensor], max_norm: float) -> float:
    norm = float(np.sqrt(sum(float((p.grad.astype(np.float64) ** 2).sum()) for p in params.values() if p.grad is not None)))
    if max_norm > 0 and norm > max_norm:
        factor = max_norm / (norm + 1e-12)
        for p in params.values():
            if p.grad is not None:
                p.grad = p.grad * p.grad.dtype.type(factor)
    return norm


def adam_step(params: dict[str, Tensor], state: OptimizerState, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One bias-corrected Adam update of every parameter, in place."""
    for name, p in params.items():
        if p.grad is not None and not np.isfinite(p.grad).all():
            raise FloatingPointError(f"non-finite gradient in {name}")
    state.step += 1
    t = state.step
    c1, c2 = 1.0 - beta1 ** t, 1.0 - beta2 ** t
    for name, p in params.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * (g * g)
        p.data -= (lr * (m / c1) / (np.sqrt(v / c2) + eps)).astype(p.data.dtype)


# ---------------------------------------------------------------- training loop


class EarlyStopping:
    """Stop after ``patience`` epochs without a strictly better score."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_score: float | None = None
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch: int, score: float) -> bool:
        """Record an epoch; True when it is the new best."""
        if self.best_score is None or score > self.best_score:
            self.best_score, self.best_epoch, self.bad_epochs = score, epoch, 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.bad_epochs >= self.patience


@dataclass
class TrainingLog:
    records: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_f1: float = 0.0


def train(train_set: Sequence[Sentence], dev_set: Sequence[Sentence], model_cfg: ModelConfig, cfg: TrainConfig,
          model: SRLModel | None = None, word_vectors: np.ndarray | None = None,
          log_stream: IO[str] | None = sys.stdout, log_file: IO[str] | None = None) -> tuple[SRLModel, TrainingLog]:
    """Train and return the parameters of the best dev epoch plus the log.

    Each epoch record (epoch, loss, dev P/R/F1, time) is written as one
    JSON line to ``log_stream`` and ``log_file``.
    """
    if not train_set or not dev_set:
        raise ValueError("training and development corpora must be non-empty")
    cfg.validate()
    if model is None:
        vocab = build_vocab(train_set, cfg.min_freq)
        dtype = np.float64 if cfg.precision == "fp64" else np.float32
        model = SRLModel(model_cfg, vocab, seed=cfg.seed, dtype=dtype, word_vectors=word_vectors)
    if cfg.freeze_embeddings:
        model.encoder.word_emb.requires_grad = False
    params = model.trainable()
    state = OptimizerState()
    rng = np.random.default_rng(cfg.seed)
    stopper = EarlyStopping(cfg.patience)
    log = TrainingLog()
    best_state = model.state()

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_set))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_set[i] for i in order[start:start + cfg.batch_size]]
            for p in params.values():
                p.zero_grad()
            with Graph() as graph:
                loss = batch_loss(batch, model, cfg, rng=rng if model_cfg.lstm_dropout > 0 else None)
            graph.backward(loss, params.values())
            clip_grad_norm(params, cfg.clip_norm)
            adam_step(params, state, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps)
            losses.append(loss.item())
        dev = score_arguments(decode_all(dev_set, model), dev_set)
        if dev.no_data:
            logger.warning("epoch %d: no predicted and no gold dev arguments; F1 taken as 0", epoch)
        record = {"epoch": epoch, "loss": float(np.mean(losses)), "dev_p": dev.precision,
                  "dev_r": dev.recall, "dev_f1": dev.f1, "time": time.strftime("%Y-%m-%dT%H:%M:%S")}
        log.records.append(record)
        line = json.dumps(record)
        for stream in (log_stream, log_file):
            if stream is not None:
                stream.write(line + "\n")
                stream.flush()
        if stopper.update(epoch, dev.f1):
            best_state = model.state()
        if stopper.should_stop or (cfg.target_f1 is not None and dev.f1 >= cfg.target_f1):
            break

    model.load_state(best_state)
    for p in model.parameters().values():
        p.zero_grad()
    log.best_epoch, log.best_f1 = stopper.best_epoch, stopper.best_score or 0.0
    return model, log
