"""CoNLL-2009 / Universal Proposition Bank readers, vocabularies, embeddings."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

logger = logging.getLogger(__name__)

PAD, UNK = "<pad>", "<unk>"
PAD_ID, UNK_ID = 0, 1
NULL_ROLE = "_"  # epsilon; never stored in gold sets
CONLL09_FIXED = 14
UPB_FIXED = 11


class CorpusError(ValueError):
    """Malformed corpus or embedding file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class Triplet(NamedTuple):
    p: int
    a: int
    r: str


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    pos: str
    sense: str | None = None  # predicate sense; None unless marked as predicate
    fields: tuple[str, ...] = ()  # original leading columns, kept for export

    @property
    def chars(self) -> tuple[str, ...]:
        return tuple(self.form) or (PAD,)

    @property
    def is_predicate(self) -> bool:
        return self.sense is not None


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    gold: frozenset[Triplet] = field(default_factory=frozenset)

    def __post_init__(self):
        n = len(self.tokens)
        seen = set()
        for t in self.gold:
            if not (1 <= t.p <= n and 1 <= t.a <= n):
                raise CorpusError(f"triplet {t} outside sentence of length {n}")
            if (t.p, t.a) in seen:
                raise CorpusError(f"duplicate predicate-argument pair ({t.p}, {t.a})")
            seen.add((t.p, t.a))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def predicates(self) -> tuple[int, ...]:
        return tuple(t.index for t in self.tokens if t.is_predicate)

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def with_triplets(self, triplets: Iterable[Triplet]) -> "Sentence":
        """Copy whose predicates and arguments come from ``triplets`` (prediction export)."""
        triplets = frozenset(triplets)
        preds = {t.p for t in triplets}
        tokens = tuple(
            replace(tok, sense=(tok.sense or "_") if tok.index in preds else None)
            for tok in self.tokens
        )
        return Sentence(tokens, triplets)


def _blocks(text: str):
    """Yield (first_line_number, [(line_number, line), ...]) per blank-line block."""
    block, start = [], None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if block:
                yield start, block
            block, start = [], None
            continue
        if start is None:
            start = no
        block.append((no, line))
    if block:
        yield start, block


def _split(line: str) -> list[str]:
    return line.split("\t") if "\t" in line else line.split()


def _triplets(rows, pred_rows, n_fixed):
    """Read APRED columns; ``rows`` are (line_no, index, cols)."""
    gold = set()
    k = len(pred_rows)
    for no, idx, cols in rows:
        args = cols[n_fixed:]
        if len(args) != k:
            raise CorpusError(f"expected {k} argument columns, found {len(args)}", no)
        for j, cell in enumerate(args):
            if cell != "_":
                gold.add(Triplet(pred_rows[j], idx, cell))
    return frozenset(gold)


def parse_conll09(text: str) -> list[Sentence]:
    """Parse CoNLL-2009 blocks.

    Columns: ID FORM LEMMA PLEMMA POS PPOS FEAT PFEAT HEAD PHEAD DEPREL
    PDEPREL FILLPRED PRED APRED1..APREDk.  The j-th FILLPRED=Y row owns
    APREDj.
    """
    sentences = []
    for _, block in _blocks(text):
        tokens, rows, preds = [], [], []
        for no, line in block:
            cols = _split(line)
            if len(cols) < CONLL09_FIXED:
                raise CorpusError(f"expected at least {CONLL09_FIXED} columns, found {len(cols)}", no)
            try:
                idx = int(cols[0])
            except ValueError:
                raise CorpusError(f"non-integer token id {cols[0]!r}", no) from None
            if idx != len(tokens) + 1:
                raise CorpusError(f"token id {idx} out of sequence", no)
            is_pred = cols[12] == "Y"
            tokens.append(
                Token(idx, cols[1], cols[4], cols[13] if is_pred else None, tuple(cols[:12]))
            )
            if is_pred:
                preds.append(idx)
            rows.append((no, idx, cols))
        sentences.append(Sentence(tuple(tokens), _triplets(rows, preds, CONLL09_FIXED)))
    return sentences


def serialize_conll09(sentences: Iterable[Sentence]) -> str:
    out = []
    for s in sentences:
        preds = s.predicates
        roles = {(t.p, t.a): t.r for t in s.gold}
        for tok in s.tokens:
            lead = list(tok.fields) if len(tok.fields) == 12 else _default_conll09(tok)
            lead[0], lead[1], lead[4] = str(tok.index), tok.form, tok.pos
            fill = ["Y", tok.sense] if tok.is_predicate else ["_", "_"]
            args = [roles.get((p, tok.index), "_") for p in preds]
            out.append("\t".join(lead + fill + args))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def _default_conll09(tok: Token) -> list[str]:
    return [str(tok.index), tok.form, tok.form, tok.form, tok.pos, tok.pos, "_", "_", "0", "0", "_", "_"]


def parse_upb(text: str) -> list[Sentence]:
    """Parse Universal Proposition Bank CoNLL-U files.

    Ten CoNLL-U columns, then the predicate sense ("_" for non-predicates),
    then one role column per predicate.  Comment lines, multiword ranges
    ("3-4") and empty nodes ("5.1") are not tokens; any role annotations on
    the latter two are dropped and counted in a warning.
    """
    sentences = []
    dropped = 0
    for _, block in _blocks(text):
        tokens, rows, preds, skipped = [], [], [], []
        for no, line in block:
            if line.startswith("#"):
                continue
            cols = _split(line)
            if len(cols) < UPB_FIXED:
                raise CorpusError(f"expected at least {UPB_FIXED} columns, found {len(cols)}", no)
            tid = cols[0]
            if "-" in tid or "." in tid:
                lo, _, hi = tid.replace(".", "-").partition("-")
                if not (lo.isdigit() and hi.isdigit()):
                    raise CorpusError(f"malformed token id {tid!r}", no)
                skipped.append(cols)
                continue
            if not tid.isdigit():
                raise CorpusError(f"malformed token id {tid!r}", no)
            idx = int(tid)
            if idx != len(tokens) + 1:
                raise CorpusError(f"token id {idx} out of sequence", no)
            is_pred = cols[10] != "_"
            tokens.append(Token(idx, cols[1], cols[3], cols[10] if is_pred else None, tuple(cols[:10])))
            if is_pred:
                preds.append(idx)
            rows.append((no, idx, cols))
        if not tokens:
            continue
        for cols in skipped:
            dropped += (cols[10] != "_") + sum(c != "_" for c in cols[UPB_FIXED:])
        sentences.append(Sentence(tuple(tokens), _triplets(rows, preds, UPB_FIXED)))
    if dropped:
        logger.warning("parse_upb: dropped %d annotations on multiword/empty-node lines", dropped)
    return sentences


def serialize_upb(sentences: Iterable[Sentence]) -> str:
    out = []
    for s in sentences:
        preds = s.predicates
        roles = {(t.p, t.a): t.r for t in s.gold}
        for tok in s.tokens:
            lead = list(tok.fields) if len(tok.fields) == 10 else [
                str(tok.index), tok.form, tok.form, tok.pos, "_", "_", "0", "_", "_", "_"
            ]
            lead[0], lead[1], lead[3] = str(tok.index), tok.form, tok.pos
            sense = "_"
            if tok.is_predicate:
                sense = tok.sense if tok.sense not in (None, "_") else "Y"
            args = [roles.get((p, tok.index), "_") for p in preds]
            out.append("\t".join(lead + [sense] + args))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


READERS = {"conll09": parse_conll09, "upb": parse_upb}
WRITERS = {"conll09": serialize_conll09, "upb": serialize_upb}


def read_corpus(path: str | Path, fmt: str) -> list[Sentence]:
    if fmt not in READERS:
        raise ValueError(f"unknown corpus format {fmt!r}; expected one of {sorted(READERS)}")
    return READERS[fmt](Path(path).read_text(encoding="utf-8"))


def write_corpus(path: str | Path, sentences: Iterable[Sentence], fmt: str) -> None:
    Path(path).write_text(WRITERS[fmt](sentences), encoding="utf-8")


# ---------------------------------------------------------------- vocabularies


class Vocabulary:
    """Id maps for words, POS tags, characters and roles.

    Words, tags and characters reserve 0 for padding and 1 for unknowns;
    role id 0 is always the null label.
    """

    def __init__(self, words: list[str], pos: list[str], chars: list[str], roles: list[str]):
        self.words = [PAD, UNK] + [w for w in words if w not in (PAD, UNK)]
        self.pos = [PAD, UNK] + [p for p in pos if p not in (PAD, UNK)]
        self.chars = [PAD, UNK] + [c for c in chars if c not in (PAD, UNK)]
        self.roles = [NULL_ROLE] + [r for r in roles if r != NULL_ROLE]
        self._word_ids = {w: i for i, w in enumerate(self.words)}
        self._pos_ids = {p: i for i, p in enumerate(self.pos)}
        self._char_ids = {c: i for i, c in enumerate(self.chars)}
        self._role_ids = {r: i for i, r in enumerate(self.roles)}

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.to_dict() == other.to_dict()

    def word_id(self, w: str) -> int:
        return self._word_ids.get(w, UNK_ID)

    def pos_id(self, p: str) -> int:
        return self._pos_ids.get(p, UNK_ID)

    def char_id(self, c: str) -> int:
        return self._char_ids.get(c, UNK_ID)

    def role_id(self, r: str) -> int:
        return self._role_ids[r]

    def role(self, i: int) -> str:
        return self.roles[i]

    @property
    def n_roles(self) -> int:
        return len(self.roles)

    def to_dict(self) -> dict:
        return {"words": self.words, "pos": self.pos, "chars": self.chars, "roles": self.roles}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(d["words"], d["pos"], d["chars"], d["roles"])


def _ranked(counts: Counter, min_freq: int = 1) -> list[str]:
    return [k for k, c in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])) if c >= min_freq]


def build_vocab(sentences: Iterable[Sentence], min_freq: int = 2) -> Vocabulary:
    """Frequency-ranked vocabularies (ties broken lexicographically)."""
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    words, pos, chars, roles = Counter(), Counter(), Counter(), Counter()
    empty = True
    for s in sentences:
        for tok in s.tokens:
            empty = False
            words[tok.form] += 1
            pos[tok.pos] += 1
            chars.update(tok.form)
        roles.update(t.r for t in s.gold)
    if empty:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    return Vocabulary(_ranked(words, min_freq), _ranked(pos), _ranked(chars), _ranked(roles))


def load_embeddings(path: str | Path, vocab: Vocabulary, dim: int, seed: int = 0, dtype=np.float32) -> np.ndarray:
    """Read a fastText ``.vec`` file into a [|V| x dim] matrix aligned to ``vocab``.

    Words missing from the file (and UNK) get seeded uniform(-0.05, 0.05)
    rows; the PAD row is zero.
    """
    rng = np.random.default_rng(seed)
    table = rng.uniform(-0.05, 0.05, size=(len(vocab.words), dim)).astype(dtype)
    table[PAD_ID] = 0.0
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            parts = raw.rstrip("\r\n").rstrip(" ").split(" ")
            if no == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                if int(parts[1]) != dim:
                    raise CorpusError(f"header declares dim {parts[1]}, expected {dim}", no)
                continue
            if len(parts) == 1 and not parts[0]:
                continue
            if len(parts) != dim + 1:
                raise CorpusError(f"expected {dim} values, found {len(parts) - 1}", no)
            idx = vocab._word_ids.get(parts[0])
            if idx is None or idx in (PAD_ID, UNK_ID):
                continue
            try:
                table[idx] = np.asarray(parts[1:], dtype=np.float64)
            except ValueError:
                raise CorpusError("non-numeric embedding value", no) from None
    return table
