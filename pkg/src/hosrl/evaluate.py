"""Decoding and labeled triplet metrics (arguments, predicates, distance buckets)."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Sentence, Triplet

logger = logging.getLogger(__name__)

BUCKETS = ("1", "2", "3", "4", "5", "6", ">=7")


@dataclass(frozen=True)
class PRF:
    correct: int
    predicted: int
    gold: int

    @property
    def precision(self) -> float:
        return self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def no_data(self) -> bool:
        return self.predicted == 0 and self.gold == 0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.correct + other.correct, self.predicted + other.predicted, self.gold + other.gold)


def _check_aligned(pred, gold) -> None:
    if len(pred) != len(gold):
        raise ValueError(f"{len(pred)} predicted vs {len(gold)} gold sentences")


def _gold_sets(gold) -> list[frozenset[Triplet]]:
    return [g.gold if isinstance(g, Sentence) else frozenset(g) for g in gold]


def score_arguments(pred: Sequence[Iterable[Triplet]], gold: Sequence) -> PRF:
    """Micro-averaged exact (p, a, r) match over all sentences."""
    _check_aligned(pred, gold)
    correct = predicted = total = 0
    for p, g in zip(pred, _gold_sets(gold)):
        p = set(p)
        correct += len(p & g)
        predicted += len(p)
        total += len(g)
    return PRF(correct, predicted, total)


def score_predicates(pred: Sequence[Iterable[Triplet]], gold: Sequence) -> PRF:
    """Predicate detection: predicted predicates are heads of emitted triplets.

    ``gold`` holds Sentences (their marked predicates) or sets of indices.
    """
    _check_aligned(pred, gold)
    correct = predicted = total = 0
    for p, g in zip(pred, gold):
        found = {t.p for t in p}
        marked = set(g.predicates) if isinstance(g, Sentence) else set(g)
        correct += len(found & marked)
        predicted += len(found)
        total += len(marked)
    return PRF(correct, predicted, total)


def bucket(t: Triplet) -> str:
    d = abs(t.p - t.a)
    if d == 0:
        return "1"
    return BUCKETS[min(d, 7) - 1]


def distance_report(pred: Sequence[Iterable[Triplet]], gold: Sequence) -> dict[str, PRF]:
    """Labeled P/R/F1 per surface-distance bucket; self pairs count as distance 1."""
    _check_aligned(pred, gold)
    correct, predicted, total = Counter(), Counter(), Counter()
    self_pairs = 0
    for p, g in zip(pred, _gold_sets(gold)):
        p = set(p)
        for t in p:
            predicted[bucket(t)] += 1
            self_pairs += t.p == t.a
            if t in g:
                correct[bucket(t)] += 1
        for t in g:
            total[bucket(t)] += 1
            self_pairs += t.p == t.a
    if self_pairs:
        logger.warning("distance_report: %d self-pair triplets placed in bucket 1", self_pairs)
    return {b: PRF(correct[b], predicted[b], total[b]) for b in BUCKETS}


def role_counts(pred: Sequence[Iterable[Triplet]], gold: Sequence) -> dict[str, PRF]:
    correct, predicted, total = Counter(), Counter(), Counter()
    for p, g in zip(pred, _gold_sets(gold)):
        p = set(p)
        for t in p:
            predicted[t.r] += 1
            correct[t.r] += t in g
        for t in g:
            total[t.r] += 1
    roles = sorted(set(predicted) | set(total))
    return {r: PRF(correct[r], predicted[r], total[r]) for r in roles}


@dataclass
class EvalReport:
    arguments: PRF
    predicates: PRF
    roles: dict[str, PRF]
    buckets: dict[str, PRF]
    sentences: int
    notes: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        def row(label, m: PRF):
            return (f"{label:<10} P={m.precision:.4f} R={m.recall:.4f} F1={m.f1:.4f}"
                    f"  (correct={m.correct} predicted={m.predicted} gold={m.gold})")

        lines = [f"sentences: {self.sentences}", row("arguments", self.arguments), row("predicates", self.predicates)]
        lines += [f"note: {n}" for n in self.notes]
        lines.append("distance buckets:")
        lines += [row(f"  d={b}", m) for b, m in self.buckets.items()]
        lines.append("roles:")
        lines += [row(f"  {r}", m) for r, m in self.roles.items()]
        return "\n".join(lines) + "\n"

    def records(self) -> list[dict]:
        """Flat records: one per metric and one per bucket/role."""
        out = []
        for kind, key, m in (
            [("metric", "arguments", self.arguments), ("metric", "predicates", self.predicates)]
            + [("bucket", b, m) for b, m in self.buckets.items()]
            + [("role", r, m) for r, m in self.roles.items()]
        ):
            out.append({"kind": kind, "name": key, "correct": m.correct, "predicted": m.predicted,
                        "gold": m.gold, "precision": m.precision, "recall": m.recall, "f1": m.f1})
        return out

    def to_tsv(self) -> str:
        cols = ["kind", "name", "correct", "predicted", "gold", "precision", "recall", "f1"]
        lines = ["\t".join(cols)]
        for rec in self.records():
            lines.append("\t".join(f"{rec[c]:.6f}" if isinstance(rec[c], float) else str(rec[c]) for c in cols))
        return "\n".join(lines) + "\n"


def evaluate(pred: Sequence[Iterable[Triplet]], gold: Sequence[Sentence]) -> EvalReport:
    pred = [set(p) for p in pred]
    args = score_arguments(pred, gold)
    notes = ["no data: no predicted and no gold arguments"] if args.no_data else []
    return EvalReport(args, score_predicates(pred, gold), role_counts(pred, gold),
                      distance_report(pred, gold), len(gold), notes)


# ---------------------------------------------------------------- decoding


def decode_scores(pairs: np.ndarray, scores: np.ndarray, roles: Sequence[str]) -> frozenset[Triplet]:
    """Argmax role per pair (lowest id wins ties); null-labeled pairs are dropped."""
    if len(pairs) == 0:
        return frozenset()
    best = scores.argmax(axis=1)
    return frozenset(
        Triplet(int(p) + 1, int(a) + 1, roles[r]) for (p, a), r in zip(pairs, best) if r != 0
    )


def decode_all(sentences: Sequence[Sentence], model, iterations: int | None = None, batch_size: int = 32) -> list[frozenset[Triplet]]:
    out = []
    for i in range(0, len(sentences), batch_size):
        for res in model.forward(sentences[i:i + batch_size], iterations):
            out.append(decode_scores(res.pairs, res.scores.data, model.vocab.roles))
    return out


def decode(sentence: Sentence, model, iterations: int | None = None) -> frozenset[Triplet]:
    return decode_all([sentence], model, iterations)[0]


# ---------------------------------------------------------------- analyses


@dataclass(frozen=True)
class SweepRow:
    iterations: int
    arguments: PRF
    predicates: PRF
    mode: str  # "shared" (one model at many N) or "per-N" (one model per N)


def iteration_sweep(models, dev: Sequence[Sentence], n_values: Iterable[int]) -> list[SweepRow]:
    """Evaluate on ``dev`` at each refinement count.

    ``models`` is either a single model (shared parameters evaluated at
    several N) or a mapping N -> model trained with that N.
    """
    n_values = sorted(set(n_values))
    if not n_values:
        raise ValueError("iteration sweep needs at least one N")
    rows = []
    for n in n_values:
        if isinstance(models, Mapping):
            model, mode = models[n], "per-N"
        else:
            model, mode = models, "shared"
        pred = decode_all(dev, model, n)
        rows.append(SweepRow(n, score_arguments(pred, dev), score_predicates(pred, dev), mode))
    return rows


def sweep_tsv(rows: Sequence[SweepRow]) -> str:
    lines = ["N\targ_p\targ_r\targ_f1\tprd_p\tprd_r\tprd_f1\tmode"]
    for r in rows:
        a, p = r.arguments, r.predicates
        lines.append(f"{r.iterations}\t{a.precision:.6f}\t{a.recall:.6f}\t{a.f1:.6f}"
                     f"\t{p.precision:.6f}\t{p.recall:.6f}\t{p.f1:.6f}\t{r.mode}")
    return "\n".join(lines) + "\n"


def distance_tsv(tables: Mapping[int, Mapping[str, PRF]]) -> str:
    lines = ["N\tbucket\tcorrect\tpredicted\tgold\tprecision\trecall\tf1"]
    for n, table in tables.items():
        for b, m in table.items():
            lines.append(f"{n}\t{b}\t{m.correct}\t{m.predicted}\t{m.gold}"
                         f"\t{m.precision:.6f}\t{m.recall:.6f}\t{m.f1:.6f}")
    return "\n".join(lines) + "\n"


def write_text(path: str | Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")
