"""Predicate/argument projections, biaffine pair scores, and per-role scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .layers import FFNParams, ffn, glorot, weight, zeros
from .tensor import (
    Tensor, add, add_bias, gather, matmul, narrow, relu, reshape, softmax, transpose,
)


@dataclass
class ScorerParams:
    pred_ffn: FFNParams
    arg_ffn: FFNParams
    W1: Tensor  # [d_r, d_s, d_r]
    W2: Tensor  # [d_s, 2 d_r]
    b: Tensor  # [d_s]
    W_p: Tensor  # [|R|, d_r]
    W_a: Tensor  # [|R|, d_r]
    W_s: Tensor  # [|R|, d_s]


def init_scorer(cfg: ModelConfig, n_roles: int, rng, dtype) -> ScorerParams:
    d_h, d_r, d_s, g = cfg.token_dim, cfg.rep_dim, cfg.score_dim, cfg.init_scale
    return ScorerParams(
        FFNParams.init(rng, d_h, cfg.ffn_hidden, d_r, dtype, "scorer.pred_ffn", g),
        FFNParams.init(rng, d_h, cfg.ffn_hidden, d_r, dtype, "scorer.arg_ffn", g),
        glorot(rng, (d_r, d_s, d_r), 2 * d_r, d_s, dtype, "scorer.W1", g),
        weight(rng, d_s, 2 * d_r, dtype, "scorer.W2", g),
        zeros(d_s, dtype, "scorer.b"),
        weight(rng, n_roles, d_r, dtype, "scorer.W_p", g),
        weight(rng, n_roles, d_r, dtype, "scorer.W_a", g),
        weight(rng, n_roles, d_s, dtype, "scorer.W_s", g),
    )


@dataclass
class PairScores:
    pairs: np.ndarray  # [K, 2] zero-based (predicate, argument), row-major order
    reps: Tensor  # [K, d_s]

    def __len__(self) -> int:
        return len(self.pairs)


def project(H: Tensor, params: ScorerParams) -> tuple[Tensor, Tensor]:
    return ffn(H, params.pred_ffn), ffn(H, params.arg_ffn)


def enumerate_pairs(n: int, policy: str = "ordered-all") -> np.ndarray:
    """Candidate (p, a) pairs, zero-based, row-major in (p, a)."""
    if n < 1:
        raise ValueError("cannot enumerate pairs of an empty sentence")
    p, a = np.divmod(np.arange(n * n), n)
    if policy == "ordered-all":
        keep = np.ones(n * n, dtype=bool)
    elif policy == "ordered-no-self":
        keep = p != a
    elif policy == "unordered":
        keep = p < a
    else:
        raise ValueError(f"unknown pair policy {policy!r}")
    return np.stack([p[keep], a[keep]], axis=1)


def biaffine(v_p: Tensor, v_a: Tensor, params: ScorerParams) -> Tensor:
    """Score representation of one pair: ``v_p W1 v_a + W2 [v_p; v_a] + b``."""
    d_r, d_s, _ = params.W1.shape
    vp, va = reshape(v_p, (1, d_r)), reshape(v_a, (1, d_r))
    left = reshape(matmul(vp, reshape(params.W1, (d_r, d_s * d_r))), (d_s, d_r))
    bilinear = reshape(matmul(left, transpose(va)), (1, d_s))
    lin = add(
        matmul(vp, transpose(narrow(params.W2, 1, 0, d_r))),
        matmul(va, transpose(narrow(params.W2, 1, d_r, 2 * d_r))),
    )
    return reshape(add_bias(add(bilinear, lin), params.b), (d_s,))


def score_all_pairs(V_p: Tensor, V_a: Tensor, params: ScorerParams, policy: str = "ordered-all") -> PairScores:
    n = V_p.shape[0]
    pairs = enumerate_pairs(n, policy)
    d_r, d_s, _ = params.W1.shape
    P, A = pairs[:, 0], pairs[:, 1]
    # bilinear term for every (p, a): [n, d_s*d_r] -> [n*d_s, n] -> [n*n, d_s]
    left = reshape(matmul(V_p, reshape(params.W1, (d_r, d_s * d_r))), (n * d_s, d_r))
    grid = reshape(matmul(left, transpose(V_a)), (n, d_s, n))
    bilinear = gather(reshape(transpose(grid, (0, 2, 1)), (n * n, d_s)), P * n + A)
    lin_p = matmul(V_p, transpose(narrow(params.W2, 1, 0, d_r)))
    lin_a = matmul(V_a, transpose(narrow(params.W2, 1, d_r, 2 * d_r)))
    lin = add(gather(lin_p, P), gather(lin_a, A))
    return PairScores(pairs, add_bias(add(bilinear, lin), params.b))


def role_scores(p: int, a: int, V_p: Tensor, V_a: Tensor, v_s: Tensor, params: ScorerParams) -> Tensor:
    """Unary scores of every role for pair (p, a) (zero-based indices)."""
    def term(W, v):
        return reshape(matmul(W, reshape(relu(v), (-1, 1))), (W.shape[0],))

    vp = reshape(gather(V_p, [p]), (V_p.shape[1],))
    va = reshape(gather(V_a, [a]), (V_a.shape[1],))
    return add(add(term(params.W_p, vp), term(params.W_a, va)), term(params.W_s, v_s))


def score_roles(V_p: Tensor, V_a: Tensor, scores: PairScores, params: ScorerParams) -> Tensor:
    """Role scores for every enumerated pair: [K, |R|]."""
    by_pred = matmul(relu(V_p), transpose(params.W_p))
    by_arg = matmul(relu(V_a), transpose(params.W_a))
    by_pair = matmul(relu(scores.reps), transpose(params.W_s))
    return add(add(gather(by_pred, scores.pairs[:, 0]), gather(by_arg, scores.pairs[:, 1])), by_pair)


def role_distribution(scores: Tensor) -> Tensor:
    if not np.isfinite(scores.data).all():
        raise FloatingPointError("role scores contain non-finite values")
    return softmax(scores)
