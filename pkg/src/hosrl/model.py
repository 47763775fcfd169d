"""The end-to-end labeler: encoder, optional refinement, biaffine role scoring."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .config import ModelConfig
from .corpus import Sentence, Vocabulary
from .encoder import Features, bilstm_encode_batch, embed_tokens, init_encoder
from .layers import named_tensors
from .refiner import Iteration, init_refiner, refine_iterate
from .scorer import PairScores, init_scorer, project, score_all_pairs, score_roles
from .tensor import Tensor

# parameter name prefix -> group reported by gradient checks
PARAM_GROUPS = (
    ("encoder.word_emb", "embeddings"),
    ("encoder.pos_emb", "embeddings"),
    ("encoder.char_emb", "embeddings"),
    ("encoder.conv", "char_cnn"),
    ("encoder.lstm", "bilstm"),
    ("scorer.pred_ffn", "ffn"),
    ("scorer.arg_ffn", "ffn"),
    ("refiner.ffn", "ffn"),
    ("scorer.W1", "biaffine"),
    ("scorer.W2", "biaffine"),
    ("scorer.b", "biaffine"),
    ("scorer.W_", "role"),
    ("refiner.W3", "attention"),
    ("refiner.W4", "attention"),
    ("refiner.w_u", "attention"),
)


def param_group(name: str) -> str:
    for prefix, group in PARAM_GROUPS:
        if name.startswith(prefix):
            return group
    return "other"


@dataclass
class Output:
    pairs: np.ndarray  # [K, 2] zero-based
    scores: Tensor  # [K, |R|]
    history: list[Iteration]
    pair_scores: PairScores


class SRLModel:
    def __init__(self, config: ModelConfig, vocab: Vocabulary, seed: int = 0, dtype=np.float32,
                 word_vectors: np.ndarray | None = None):
        config.validate()
        self.config = config
        self.vocab = vocab
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self.feature_hook: Callable[[Sentence], np.ndarray] | None = None
        rng = np.random.default_rng(seed)
        self.encoder = init_encoder(config, len(vocab.words), len(vocab.pos), len(vocab.chars), rng, dtype)
        self.scorer = init_scorer(config, vocab.n_roles, rng, dtype)
        self.refiner = init_refiner(config, rng, dtype)
        if word_vectors is not None:
            if word_vectors.shape != self.encoder.word_emb.shape:
                raise ValueError(f"word vectors {word_vectors.shape} do not match {self.encoder.word_emb.shape}")
            self.encoder.word_emb.data[...] = word_vectors

    def parameters(self) -> dict[str, Tensor]:
        named = {}
        for part in (self.encoder, self.scorer, self.refiner):
            for name, t in named_tensors(part):
                named[name] = t
        return named

    def trainable(self) -> dict[str, Tensor]:
        return {k: v for k, v in self.parameters().items() if v.requires_grad}

    def astype(self, dtype) -> "SRLModel":
        clone = copy.deepcopy(self)
        clone.dtype = np.dtype(dtype)
        for t in clone.parameters().values():
            t.data = t.data.astype(dtype)
            t.grad = None
        return clone

    def copy(self) -> "SRLModel":
        return self.astype(self.dtype)

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.data.copy() for k, v in self.parameters().items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = set(params) ^ set(state)
        if missing:
            raise KeyError(f"parameter sets differ: {sorted(missing)}")
        for k, t in params.items():
            if state[k].shape != t.shape:
                raise ValueError(f"{k}: shape {state[k].shape} != {t.shape}")
            t.data = np.array(state[k], dtype=self.dtype)

    # ------------------------------------------------------------ forward

    def featurize(self, sentence: Sentence) -> Features:
        v = self.vocab
        extra = None
        if self.config.extra_dim:
            if self.feature_hook is None:
                raise RuntimeError("extra_dim > 0 but no feature_hook is installed")
            extra = np.asarray(self.feature_hook(sentence))
            if extra.shape != (len(sentence), self.config.extra_dim):
                raise ValueError(f"feature hook returned {extra.shape}, expected {(len(sentence), self.config.extra_dim)}")
        return Features(
            np.array([v.word_id(t.form) for t in sentence.tokens], dtype=np.int64),
            np.array([v.pos_id(t.pos) for t in sentence.tokens], dtype=np.int64),
            [[v.char_id(c) for c in t.chars] for t in sentence.tokens],
            extra,
        )

    def encode(self, sentences: Sequence[Sentence], rng=None) -> list[Tensor]:
        """Contextual token matrices H (one [n, 2h] per sentence), batched through the BiLSTM."""
        xs = [embed_tokens(self.featurize(s), self.encoder) for s in sentences]
        dropout = self.config.lstm_dropout if rng is not None else 0.0
        return bilstm_encode_batch(xs, self.encoder.lstm, dropout, rng)

    def score(self, H: Tensor, iterations: int | None = None) -> Output:
        cfg = self.config
        n_iter = cfg.iterations if iterations is None else iterations
        history: list[Iteration] = []
        H = refine_iterate(H, self.scorer, self.refiner, n_iter, cfg.pair_policy, cfg.attention_scope, history)
        V_p, V_a = project(H, self.scorer)
        pair_scores = score_all_pairs(V_p, V_a, self.scorer, cfg.pair_policy)
        return Output(pair_scores.pairs, score_roles(V_p, V_a, pair_scores, self.scorer), history, pair_scores)

    def forward(self, sentences: Sequence[Sentence], iterations: int | None = None, rng=None) -> list[Output]:
        if not sentences:
            return []
        return [self.score(H, iterations) for H in self.encode(sentences, rng)]

    def baseline_scores(self, sentence: Sentence) -> Tensor:
        """First-order role scores with the refiner bypassed entirely."""
        H = self.encode([sentence])[0]
        V_p, V_a = project(H, self.scorer)
        pair_scores = score_all_pairs(V_p, V_a, self.scorer, self.config.pair_policy)
        return score_roles(V_p, V_a, pair_scores, self.scorer)
