"""Finite-difference certification of the full loss on a small random instance."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .corpus import Sentence, Token, Triplet, Vocabulary, build_vocab
from .model import SRLModel, param_group
from .tensor import GradCheckReport, grad_check, inject_fault
from .trainer import sentence_loss

TOLERANCE = 1e-4
EPS = 1e-5


def random_instance(n: int = 3, n_roles: int = 4, iterations: int = 2, seed: int = 0,
                    dim: int = 3, gain: float = 1.0, bias: float = 0.1) -> tuple[SRLModel, Sentence]:
    """A float64 model with every parameter group active, plus one random sentence.

    Weights use the usual uniform init scaled by ``gain`` and biases are
    drawn from +-``bias`` so no unit starts exactly symmetric.
    """
    if n < 1 or n_roles < 2:
        raise ValueError("need n >= 1 and at least two roles (null plus one)")
    rng = np.random.default_rng(seed)
    roles = [f"A{i}" for i in range(n_roles - 1)]
    gold = {}
    for _ in range(max(1, n // 2 + 1)):
        p, a = (int(x) for x in rng.integers(1, n + 1, size=2))
        gold[(p, a)] = Triplet(p, a, roles[int(rng.integers(len(roles)))])
    preds = {p for p, _ in gold}
    tokens = tuple(
        Token(i + 1, "".join(rng.choice(list("abcd"), size=int(rng.integers(1, 4)))),
              f"P{int(rng.integers(2))}", "x.01" if i + 1 in preds else None)
        for i in range(n)
    )
    sentence = Sentence(tokens, frozenset(gold.values()))
    base = build_vocab([sentence], 1)
    vocab = Vocabulary(base.words, base.pos, base.chars, roles)
    cfg = ModelConfig(word_dim=dim, pos_dim=dim, char_dim=dim, char_filters=1, lstm_hidden=dim, lstm_layers=3,
                      ffn_hidden=dim, rep_dim=dim, score_dim=dim, attn_dim=dim, refine_hidden=dim,
                      iterations=iterations, init_scale=gain)
    model = SRLModel(cfg, vocab, seed=seed, dtype=np.float64)
    for name, t in model.parameters().items():
        if t.ndim == 1 and not name.endswith("w_u"):
            t.data = rng.uniform(-bias, bias, size=t.shape)
    return model, sentence


@dataclass
class GroupResult:
    group: str
    error: float
    parameter: str
    analytic: float
    numeric: float


def check_model_gradients(model: SRLModel, sentence: Sentence, eps: float = EPS, fault: str | None = None) -> tuple[GradCheckReport, list[GroupResult]]:
    """Grad-check ``sentence_loss`` and summarise the worst error per parameter group."""
    def loss():
        return sentence_loss(sentence, model)

    if fault:
        with inject_fault(fault):
            report = grad_check(loss, model.parameters(), eps)
    else:
        report = grad_check(loss, model.parameters(), eps)
    worst: dict[str, GroupResult] = {}
    for name, err in report.errors.items():
        g = param_group(name)
        if g not in worst or err > worst[g].error:
            a, num = report.worst_entries.get(name, (0.0, 0.0))
            worst[g] = GroupResult(g, err, name, a, num)
    order = defaultdict(lambda: 99, {g: i for i, g in enumerate(
        ("embeddings", "char_cnn", "bilstm", "ffn", "biaffine", "role", "attention"))})
    return report, sorted(worst.values(), key=lambda r: order[r.group])
