"""Seeded synthetic corpora for capacity and long-range checks."""

from __future__ import annotations

import numpy as np

from .corpus import Sentence, Token, Triplet

ROLES = ("A0", "A1", "A2")
FILLERS = tuple(f"w{i}" for i in range(12))


def _sentence(forms, tags, preds, triplets) -> Sentence:
    tokens = tuple(
        Token(i + 1, f, t, f"{f}.01" if (i + 1) in preds else None)
        for i, (f, t) in enumerate(zip(forms, tags))
    )
    return Sentence(tokens, frozenset(triplets))


def overfit_corpus(seed: int = 0, size: int = 20, max_len: int = 8, roles=ROLES) -> list[Sentence]:
    """Random small sentences whose roles are drawn at random (pure memorisation).

    |R| = len(roles) + 1 including the null label.
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(size):
        n = int(rng.integers(3, max_len + 1))
        forms = [str(rng.choice(FILLERS)) for _ in range(n)]
        tags = ["N"] * n
        n_pred = int(rng.integers(1, 3))
        preds = sorted(rng.choice(n, size=n_pred, replace=False) + 1)
        triplets = []
        for p in preds:
            forms[p - 1] = f"v{int(rng.integers(4))}"
            tags[p - 1] = "V"
        for p in preds:
            others = [a for a in range(1, n + 1) if a != p]
            k = int(rng.integers(1, min(3, len(others)) + 1))
            for a in rng.choice(others, size=k, replace=False):
                triplets.append(Triplet(int(p), int(a), str(rng.choice(roles))))
        out.append(_sentence(forms, tags, set(int(p) for p in preds), triplets))
    return out


def long_range_corpus(seed: int = 0, size: int = 200, min_len: int = 16, max_len: int = 20,
                      far: int = 7) -> list[Sentence]:
    """Planted long-range dependencies.

    Every sentence has one predicate ``pv``.  Near arguments (distance 1-3)
    are words ``n0..n2`` whose role is fixed by the word itself.  One far
    argument ``x`` sits at distance >= ``far`` from the predicate; its role
    is set by a marker token ``m0..m2`` placed at least ``far`` positions
    from both the predicate and the far argument.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < size:
        n = int(rng.integers(min_len, max_len + 1))
        p = int(rng.integers(1, n + 1))
        far_slots = [a for a in range(1, n + 1) if abs(a - p) >= far]
        if not far_slots:
            continue
        a_far = int(rng.choice(far_slots))
        marker_slots = [m for m in range(1, n + 1) if abs(m - p) >= far and abs(m - a_far) >= far]
        if not marker_slots:
            continue
        m = int(rng.choice(marker_slots))
        forms = [str(rng.choice(FILLERS)) for _ in range(n)]
        tags = ["X"] * n
        forms[p - 1], tags[p - 1] = "pv", "V"
        role_far = int(rng.integers(len(ROLES)))
        forms[m - 1], tags[m - 1] = f"m{role_far}", "M"
        forms[a_far - 1], tags[a_far - 1] = "x", "N"
        triplets = [Triplet(p, a_far, ROLES[role_far])]
        near_slots = [a for a in range(max(1, p - 3), min(n, p + 3) + 1)
                      if a not in (p, m, a_far)]
        for a in rng.choice(near_slots, size=min(2, len(near_slots)), replace=False):
            r = int(rng.integers(len(ROLES)))
            forms[a - 1], tags[a - 1] = f"n{r}", "N"
            triplets.append(Triplet(p, int(a), ROLES[r]))
        out.append(_sentence(forms, tags, {p}, triplets))
    return out
