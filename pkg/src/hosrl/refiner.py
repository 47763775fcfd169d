"""High-order refinement: attention over all pair-score representations.

Each iteration rebuilds pair scores from the current token matrix, lets
every token attend over them, and rewrites the token as
``FFN([o_t ; h_t])``.  Parameters are shared across iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .layers import FFNParams, ffn, glorot, weight
from .scorer import PairScores, ScorerParams, project, score_all_pairs
from .tensor import (
    Tensor, add, concat, gather, matmul, reshape, softmax, tanh, transpose,
)


@dataclass
class RefinerParams:
    W3: Tensor  # [d_u, 2h]
    W4: Tensor  # [d_u, d_s]
    w_u: Tensor  # [d_u]; reduces tanh(W3 h + W4 v) to one logit per pair
    ffn: FFNParams  # (d_s + 2h) -> 2h


def init_refiner(cfg: ModelConfig, rng, dtype) -> RefinerParams:
    d_h, d_s, d_u, g = cfg.token_dim, cfg.score_dim, cfg.attn_dim, cfg.init_scale
    return RefinerParams(
        weight(rng, d_u, d_h, dtype, "refiner.W3", g),
        weight(rng, d_u, d_s, dtype, "refiner.W4", g),
        glorot(rng, (d_u,), d_u, 1, dtype, "refiner.w_u", g),
        FFNParams.init(rng, d_s + d_h, cfg.refine_hidden, d_h, dtype, "refiner.ffn", g),
    )


@dataclass
class Iteration:
    """What one refinement step saw, kept for analysis and auxiliary losses."""

    V_p: Tensor
    V_a: Tensor
    scores: PairScores
    alpha: Tensor  # [n, K]
    features: Tensor  # o_t rows, [n, d_s]


def token_mask(pairs: np.ndarray, n: int) -> np.ndarray:
    """[n, K] mask of the pairs that contain each token."""
    t = np.arange(n)[:, None]
    return (pairs[None, :, 0] == t) | (pairs[None, :, 1] == t)


def attend_all(H: Tensor, scores: PairScores, params: RefinerParams, scope: str = "all") -> tuple[Tensor, Tensor | None]:
    """High-order features for every token.  Returns (O [n, d_s], alpha [n, K])."""
    n, K = H.shape[0], len(scores)
    d_s = scores.reps.shape[1]
    if K == 0:
        return Tensor(np.zeros((n, d_s)), dtype=H.dtype), None
    d_u = params.w_u.shape[0]
    by_token = matmul(H, transpose(params.W3))
    by_pair = matmul(scores.reps, transpose(params.W4))
    u = tanh(add(gather(by_token, np.repeat(np.arange(n), K)), gather(by_pair, np.tile(np.arange(K), n))))
    logits = reshape(matmul(u, reshape(params.w_u, (d_u, 1))), (n, K))
    mask = token_mask(scores.pairs, n) if scope == "token" else None
    alpha = softmax(logits, mask)
    return matmul(alpha, scores.reps), alpha


def attend(h_t: Tensor, scores: PairScores, params: RefinerParams) -> Tensor:
    """High-order feature ``o_t`` for a single token representation."""
    d = h_t.shape[0]
    o, _ = attend_all(reshape(h_t, (1, d)), scores, params)
    return reshape(o, (o.shape[1],))


def refine_all(H: Tensor, O: Tensor, params: RefinerParams) -> Tensor:
    return ffn(concat([O, H], axis=1), params.ffn)


def refine_token(h_t: Tensor, o_t: Tensor, params: RefinerParams) -> Tensor:
    out = refine_all(reshape(h_t, (1, h_t.shape[0])), reshape(o_t, (1, o_t.shape[0])), params)
    return reshape(out, (out.shape[1],))


def refine_iterate(
    H0: Tensor,
    scorer: ScorerParams,
    refiner: RefinerParams,
    iterations: int,
    policy: str = "ordered-all",
    scope: str = "all",
    history: list[Iteration] | None = None,
) -> Tensor:
    """Run ``iterations`` refinement steps; zero returns ``H0`` itself."""
    if iterations < 0:
        raise ValueError(f"iteration count must be >= 0, got {iterations}")
    H = H0
    for _ in range(iterations):
        V_p, V_a = project(H, scorer)
        scores = score_all_pairs(V_p, V_a, scorer, policy)
        O, alpha = attend_all(H, scores, refiner, scope)
        if history is not None:
            history.append(Iteration(V_p, V_a, scores, alpha, O))
        H = refine_all(H, O, refiner)
    return H
