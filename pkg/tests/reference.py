"""Loop-level numpy re-implementation of the labeler, used as an oracle.

Shares nothing with the package except reading parameter arrays by name.
Everything is computed per token / per pair in float64.
"""

from __future__ import annotations

import numpy as np


def _relu(x):
    return np.maximum(x, 0.0)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _softmax(x):
    e = np.exp(x - x.max())
    return e / e.sum()


class Reference:
    def __init__(self, model):
        self.P = {k: np.asarray(v.data, dtype=np.float64) for k, v in model.parameters().items()}
        self.cfg = model.config
        self.vocab = model.vocab

    def ffn(self, prefix, x):
        P = self.P
        hid = _relu(P[f"{prefix}.w_in"] @ x + P[f"{prefix}.b_in"])
        return P[f"{prefix}.w_out"] @ hid + P[f"{prefix}.b_out"]

    def char_feature(self, word):
        P, cfg = self.P, self.cfg
        emb = np.array([P["encoder.char_emb"][self.vocab.char_id(c)] for c in word])
        feats = []
        for w in cfg.kernel_sizes:
            filt, bias = P[f"encoder.conv{w}.filter"], P[f"encoder.conv{w}.bias"]
            padded = np.zeros((max(len(word), w), emb.shape[1]))
            padded[: len(word)] = emb
            best = None
            for s in range(padded.shape[0] - w + 1):
                out = np.zeros(filt.shape[2])
                for j in range(w):
                    out += padded[s + j] @ filt[j]
                out = _relu(out + bias)
                best = out if best is None else np.maximum(best, out)
            feats.append(best)
        return np.concatenate(feats)

    def inputs(self, sentence):
        P, v = self.P, self.vocab
        return [np.concatenate([P["encoder.word_emb"][v.word_id(t.form)], P["encoder.pos_emb"][v.pos_id(t.pos)],
                                self.char_feature(t.form)]) for t in sentence.tokens]

    def lstm(self, prefix, xs):
        P = self.P
        w_ih, w_hh, b = P[f"{prefix}.w_ih"], P[f"{prefix}.w_hh"], P[f"{prefix}.bias"]
        h_dim = w_hh.shape[1]
        h, c, out = np.zeros(h_dim), np.zeros(h_dim), []
        for x in xs:
            z = w_ih @ x + w_hh @ h + b
            i, f, g, o = (z[k * h_dim:(k + 1) * h_dim] for k in range(4))
            c = _sigmoid(f) * c + _sigmoid(i) * np.tanh(g)
            h = _sigmoid(o) * np.tanh(c)
            out.append(h)
        return out

    def encode(self, sentence):
        xs = self.inputs(sentence)
        for layer in range(self.cfg.lstm_layers):
            fwd = self.lstm(f"encoder.lstm{layer}.fwd", xs)
            bwd = self.lstm(f"encoder.lstm{layer}.bwd", xs[::-1])[::-1]
            xs = [np.concatenate([a, b]) for a, b in zip(fwd, bwd)]
        return xs

    def pairs(self, n):
        policy = self.cfg.pair_policy
        return [(p, a) for p in range(n) for a in range(n)
                if policy == "ordered-all" or (policy == "ordered-no-self" and p != a) or (policy == "unordered" and p < a)]

    def pair_reps(self, H):
        P = self.P
        vp = [self.ffn("scorer.pred_ffn", h) for h in H]
        va = [self.ffn("scorer.arg_ffn", h) for h in H]
        reps = {}
        for p, a in self.pairs(len(H)):
            bil = np.einsum("i,isj,j->s", vp[p], P["scorer.W1"], va[a])
            reps[(p, a)] = bil + P["scorer.W2"] @ np.concatenate([vp[p], va[a]]) + P["scorer.b"]
        return vp, va, reps

    def refine(self, H):
        P = self.P
        _, _, reps = self.pair_reps(H)
        keys = list(reps)
        out, alphas, feats = [], [], []
        for h in H:
            u = np.array([P["refiner.w_u"] @ np.tanh(P["refiner.W3"] @ h + P["refiner.W4"] @ reps[k]) for k in keys])
            alpha = _softmax(u)
            o = sum(al * reps[k] for al, k in zip(alpha, keys))
            alphas.append(alpha)
            feats.append(o)
            out.append(self.ffn("refiner.ffn", np.concatenate([o, h])))
        return out, np.array(alphas), np.array(feats), np.array([reps[k] for k in keys])

    def scores(self, sentence, iterations=None):
        """Role score vector for each pair, keyed by zero-based (p, a)."""
        P = self.P
        H = self.encode(sentence)
        for _ in range(self.cfg.iterations if iterations is None else iterations):
            H = self.refine(H)[0]
        vp, va, reps = self.pair_reps(H)
        return {k: P["scorer.W_p"] @ _relu(vp[k[0]]) + P["scorer.W_a"] @ _relu(va[k[1]]) + P["scorer.W_s"] @ _relu(s)
                for k, s in reps.items()}

    def likelihood(self, sentence, iterations=None):
        """P(y | S) as the explicit product of per-pair role probabilities."""
        gold = {(t.p - 1, t.a - 1): self.vocab.role_id(t.r) for t in sentence.gold}
        prob = 1.0
        for k, s in self.scores(sentence, iterations).items():
            prob *= _softmax(s)[gold.get(k, 0)]
        return prob
