"""Small seeded models and sentences shared by the test modules."""

import numpy as np

from hosrl.config import ModelConfig
from hosrl.corpus import Sentence, Token, Triplet, Vocabulary, build_vocab
from hosrl.model import SRLModel

FORMS = ["ab", "c", "abc", "dd", "b", "cab", "a"]


def sentence(n, seed=0, roles=("A0", "A1", "A2"), n_gold=None):
    rng = np.random.default_rng(seed)
    gold = {}
    for _ in range(n_gold if n_gold is not None else max(1, n // 2)):
        p, a = (int(x) for x in rng.integers(1, n + 1, size=2))
        gold[(p, a)] = Triplet(p, a, str(rng.choice(roles)))
    preds = {p for p, _ in gold}
    tokens = tuple(Token(i + 1, str(rng.choice(FORMS)), str(rng.choice(["N", "V"])),
                         "x.01" if i + 1 in preds else None) for i in range(n))
    return Sentence(tokens, frozenset(gold.values()))


def tiny_config(dim=4, layers=2, iterations=2, **kw):
    base = dict(word_dim=dim, pos_dim=2, char_dim=3, char_filters=2, lstm_hidden=dim, lstm_layers=layers,
                ffn_hidden=dim, rep_dim=dim, score_dim=dim, attn_dim=dim, refine_hidden=dim,
                iterations=iterations)
    base.update(kw)
    return ModelConfig(**base)


def tiny_model(seed=0, dtype=np.float64, roles=("A0", "A1", "A2"), sentences=None, **kw):
    sentences = sentences or [sentence(5, s) for s in range(4)]
    base = build_vocab(sentences, 1)
    vocab = Vocabulary(base.words, base.pos, base.chars, list(roles))
    return SRLModel(tiny_config(**kw), vocab, seed=seed, dtype=dtype)


def randomize(model, seed, scale=0.3):
    """Overwrite every parameter (biases included) with seeded noise."""
    rng = np.random.default_rng(seed)
    for t in model.parameters().values():
        t.data = t.data + rng.normal(scale=scale, size=t.shape).astype(t.dtype)
    return model
