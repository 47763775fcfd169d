"""Token representations: word/POS/char-CNN inputs and a stacked BiLSTM."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .config import ModelConfig
from .corpus import PAD_ID
from .layers import glorot, weight, zeros
from .tensor import (
    Tensor, add, add_bias, concat, gather, linear, matmul, max_pool, mul, narrow,
    relu, reshape, row_scale, sigmoid, tanh, transpose,
)


class Features(NamedTuple):
    words: np.ndarray  # [n] word ids (UNK already substituted)
    pos: np.ndarray  # [n]
    chars: list[list[int]]  # per token, >= 1 id each
    extra: np.ndarray | None = None  # [n, extra_dim] external features


@dataclass
class LSTMParams:
    w_ih: Tensor  # [4h, d_in], gate order i, f, g, o
    w_hh: Tensor  # [4h, h]
    bias: Tensor  # [4h]

    @property
    def hidden(self) -> int:
        return self.w_hh.shape[1]


@dataclass
class EncoderParams:
    word_emb: Tensor
    pos_emb: Tensor
    char_emb: Tensor
    conv_filters: list[Tensor]  # one [width, d_ce, f] bank per kernel width
    conv_bias: list[Tensor]
    lstm: list[list[LSTMParams]]  # layers x (forward, backward)

    @property
    def kernel_sizes(self) -> list[int]:
        return [f.shape[0] for f in self.conv_filters]


def init_encoder(cfg: ModelConfig, n_words: int, n_pos: int, n_chars: int, rng, dtype) -> EncoderParams:
    g = cfg.init_scale

    def emb(n, d, name):
        t = glorot(rng, (n, d), n, d, dtype, name, g)
        t.data[PAD_ID] = 0.0
        return t

    filters, biases = [], []
    for w in cfg.kernel_sizes:
        filters.append(glorot(rng, (w, cfg.char_dim, cfg.char_filters), w * cfg.char_dim,
                              cfg.char_filters, dtype, f"encoder.conv{w}.filter", g))
        biases.append(zeros(cfg.char_filters, dtype, f"encoder.conv{w}.bias"))
    d_in = cfg.word_dim + cfg.pos_dim + cfg.char_filters * len(cfg.kernel_sizes) + cfg.extra_dim
    h = cfg.lstm_hidden
    layers = []
    for layer in range(cfg.lstm_layers):
        pair = []
        for direction in ("fwd", "bwd"):
            prefix = f"encoder.lstm{layer}.{direction}"
            bias = zeros(4 * h, dtype, f"{prefix}.bias")
            bias.data[h:2 * h] = 1.0  # forget gate
            pair.append(LSTMParams(
                weight(rng, 4 * h, d_in if layer == 0 else 2 * h, dtype, f"{prefix}.w_ih", g),
                weight(rng, 4 * h, h, dtype, f"{prefix}.w_hh", g),
                bias,
            ))
        layers.append(pair)
    return EncoderParams(
        emb(n_words, cfg.word_dim, "encoder.word_emb"),
        emb(n_pos, cfg.pos_dim, "encoder.pos_emb"),
        emb(n_chars, cfg.char_dim, "encoder.char_emb"),
        filters, biases, layers,
    )


def char_cnn(chars: Sequence[Sequence[int]], params: EncoderParams) -> Tensor:
    """Character CNN over each word: convolve, relu, max-pool, concat widths.

    Returns [len(chars), f * n_widths].  Words shorter than a kernel are
    padded with zero (PAD) embeddings up to that kernel's width.
    """
    lengths = np.array([len(c) for c in chars])
    if (lengths < 1).any():
        raise ValueError("every word needs at least one character")
    T = len(chars)
    L = max(int(lengths.max()), max(params.kernel_sizes))
    ids = np.full((T, L), PAD_ID, dtype=np.int64)
    for t, c in enumerate(chars):
        ids[t, : len(c)] = c
    flat = ids.reshape(-1)
    emb = row_scale(gather(params.char_emb, flat), flat != PAD_ID)
    d_ce = params.char_emb.shape[1]
    outs = []
    for filt, bias in zip(params.conv_filters, params.conv_bias):
        w, _, f = filt.shape
        S = L - w + 1
        window = (np.arange(T)[:, None, None] * L + np.arange(S)[None, :, None] + np.arange(w)[None, None, :])
        cols = reshape(gather(emb, window.reshape(-1)), (T * S, w * d_ce))
        conv = relu(add_bias(matmul(cols, reshape(filt, (w * d_ce, f))), bias))
        valid = np.maximum(lengths, w) - w + 1
        outs.append(max_pool(reshape(conv, (T, S, f)), valid))
    return concat(outs, axis=1)


def embed_tokens(feats: Features, params: EncoderParams) -> Tensor:
    """Rows ``[word ; pos ; char-CNN (; extra)]`` for each token."""
    parts = [gather(params.word_emb, feats.words), gather(params.pos_emb, feats.pos), char_cnn(feats.chars, params)]
    if feats.extra is not None:
        parts.append(Tensor(feats.extra, dtype=params.word_emb.dtype))
    return concat(parts, axis=1)


def _run_direction(X: Tensor, p: LSTMParams, B: int, n: int, mask: np.ndarray, reverse: bool) -> Tensor:
    """One LSTM direction over a time-major [n*B, d] input; returns [n*B, h]."""
    h_dim = p.hidden
    xw = linear(X, p.w_ih, p.bias)
    w_hh = transpose(p.w_hh)
    h = c = None
    outs: list[Tensor] = [None] * n  # type: ignore[list-item]
    for t in (range(n - 1, -1, -1) if reverse else range(n)):
        z = narrow(xw, 0, t * B, (t + 1) * B)
        if h is not None:
            z = add(z, matmul(h, w_hh))
        gates = sigmoid(z)
        i = narrow(gates, 1, 0, h_dim)
        f = narrow(gates, 1, h_dim, 2 * h_dim)
        o = narrow(gates, 1, 3 * h_dim, 4 * h_dim)
        g = tanh(narrow(z, 1, 2 * h_dim, 3 * h_dim))
        c = mul(i, g) if c is None else add(mul(f, c), mul(i, g))
        h = mul(o, tanh(c))
        if reverse and not mask[t].all():
            # padding precedes real tokens in reverse order: hold the state at zero
            h = row_scale(h, mask[t])
            c = row_scale(c, mask[t])
        outs[t] = h
    return concat(outs, axis=0)


def bilstm_encode_batch(xs: Sequence[Tensor], layers: list[list[LSTMParams]], dropout: float = 0.0, rng=None) -> list[Tensor]:
    """Encode several sentences at once; returns one [n_b, 2h] matrix each."""
    lengths = [x.shape[0] for x in xs]
    if min(lengths) < 1:
        raise ValueError("cannot encode an empty sentence")
    B, n = len(xs), max(lengths)
    d = xs[0].shape[1]
    offsets = np.concatenate([[0], np.cumsum(lengths)[:-1]])
    pad_row = sum(lengths)
    time_major = np.array([[offsets[b] + t if t < lengths[b] else pad_row for b in range(B)] for t in range(n)])
    mask = time_major != pad_row
    stacked = list(xs)
    if pad_row != n * B:
        stacked.append(Tensor(np.zeros((1, d)), dtype=xs[0].dtype))
    X = gather(concat(stacked, axis=0), time_major.reshape(-1))
    for fwd, bwd in layers:
        if dropout > 0 and rng is not None:
            keep = (rng.random(X.shape) >= dropout) / (1.0 - dropout)
            X = mul(X, Tensor(keep, dtype=X.dtype))
        X = concat([_run_direction(X, fwd, B, n, mask, False), _run_direction(X, bwd, B, n, mask, True)], axis=1)
    if B == 1:
        return [X]
    return [gather(X, np.arange(L) * B + b) for b, L in enumerate(lengths)]


def bilstm_encode(X: Tensor, params: EncoderParams) -> Tensor:
    return bilstm_encode_batch([X], params.lstm)[0]
