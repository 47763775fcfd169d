import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hosrl.corpus import (
    PAD_ID, UNK_ID, CorpusError, Sentence, Token, Triplet, Vocabulary, build_vocab, load_embeddings,
    parse_conll09, parse_upb, serialize_conll09, serialize_upb,
)


def row09(i, form, pred=None, args=()):
    fill = ["Y", pred] if pred else ["_", "_"]
    return "\t".join([str(i), form, form, form, "NN", "NN", "_", "_", "0", "0", "_", "_"] + fill + list(args))


def rowupb(i, form, sense="_", args=()):
    return "\t".join([str(i), form, form, "NOUN", "_", "_", "0", "_", "_", "_", sense] + list(args))


# ---------------------------------------------------------------- CoNLL-2009


def test_conll09_single_predicate():
    text = "\n".join([row09(1, "eats", "eat.01", ["_"]), row09(2, "apples", None, ["A1"])]) + "\n"
    [s] = parse_conll09(text)
    assert s.gold == {Triplet(1, 2, "A1")}
    assert s.tokens[0].sense == "eat.01" and s.tokens[1].sense is None


def test_conll09_no_predicates():
    [s] = parse_conll09(row09(1, "a") + "\n" + row09(2, "b") + "\n")
    assert s.gold == frozenset() and s.predicates == ()


def test_conll09_two_blocks_and_crlf():
    text = "\r\n".join([row09(1, "a"), row09(2, "b"), "", row09(1, "c"), ""])
    sents = parse_conll09(text)
    assert [len(s) for s in sents] == [2, 1]


def test_conll09_ragged_row_reports_line():
    text = "\n".join([row09(1, "v", "v.01", ["_"]), row09(2, "x", None, [])])
    with pytest.raises(CorpusError) as err:
        parse_conll09(text)
    assert err.value.line == 2


def test_conll09_non_integer_id():
    with pytest.raises(CorpusError, match="non-integer") as err:
        parse_conll09(row09("x", "a"))
    assert err.value.line == 1


def test_conll09_too_few_columns():
    with pytest.raises(CorpusError):
        parse_conll09("1\ta\tb\n")


# ---------------------------------------------------------------- UPB


def test_upb_minimal_block_with_comment():
    text = "\n".join(["# sent_id = 1", rowupb(1, "He", "_", ["ARG0"]), rowupb(2, "ran", "run.01", ["_"])]) + "\n"
    [s] = parse_upb(text)
    assert s.gold == {Triplet(2, 1, "ARG0")}


def test_upb_range_and_empty_node_lines_skipped(caplog):
    text = "\n".join([
        rowupb(1, "a", "_", ["_"]),
        "\t".join(["2-3", "bc"] + ["_"] * 9 + ["A1"]),
        rowupb(2, "b", "v.01", ["_"]),
        rowupb(3, "c", "_", ["ARG1"]),
        "\t".join(["3.1", "e"] + ["_"] * 9 + ["_"]),
    ]) + "\n"
    with caplog.at_level(logging.WARNING):
        [s] = parse_upb(text)
    assert len(s) == 3 and s.gold == {Triplet(2, 3, "ARG1")}
    assert "dropped 1" in caplog.text


def test_upb_malformed_id():
    with pytest.raises(CorpusError) as err:
        parse_upb(rowupb(1, "a") + "\n" + rowupb("2x", "b") + "\n")
    assert err.value.line == 2


# ---------------------------------------------------------------- round trips


@st.composite
def sentences(draw):
    n = draw(st.integers(1, 6))
    forms = draw(st.lists(st.sampled_from(["a", "bb", "ccc", "día", "猫"]), min_size=n, max_size=n))
    preds = draw(st.sets(st.integers(1, n), max_size=n))
    gold = set()
    for p in sorted(preds):
        for a in draw(st.sets(st.integers(1, n), max_size=3)):
            gold.add(Triplet(p, a, draw(st.sampled_from(["A0", "A1", "AM-TMP"]))))
    tokens = tuple(Token(i + 1, f, draw(st.sampled_from(["N", "V"])), f"{f}.01" if i + 1 in preds else None)
                   for i, f in enumerate(forms))
    return Sentence(tokens, frozenset(gold))


def _structure(sents):
    return [([(t.form, t.pos, t.is_predicate) for t in s.tokens], s.gold) for s in sents]


@settings(max_examples=60, deadline=None)
@given(st.lists(sentences(), min_size=1, max_size=4))
def test_round_trip_conll09(sents):
    once = parse_conll09(serialize_conll09(sents))
    assert _structure(once) == _structure(sents)
    assert parse_conll09(serialize_conll09(once)) == once


@settings(max_examples=60, deadline=None)
@given(st.lists(sentences(), min_size=1, max_size=4))
def test_round_trip_upb(sents):
    once = parse_upb(serialize_upb(sents))
    assert _structure(once) == _structure(sents)
    assert parse_upb(serialize_upb(once)) == once


@settings(max_examples=60, deadline=None)
@given(st.lists(sentences(), min_size=1, max_size=4))
def test_parsed_triplets_index_valid_tokens(sents):
    for s in parse_conll09(serialize_conll09(sents)):
        assert all(1 <= t.p <= len(s) and 1 <= t.a <= len(s) for t in s.gold)


def test_sentence_rejects_bad_gold():
    toks = (Token(1, "a", "N"), Token(2, "b", "N"))
    with pytest.raises(CorpusError):
        Sentence(toks, frozenset({Triplet(1, 3, "A0")}))
    with pytest.raises(CorpusError):
        Sentence(toks, frozenset({Triplet(1, 2, "A0"), Triplet(1, 2, "A1")}))


# ---------------------------------------------------------------- vocabulary


def _sent(forms, gold=()):
    return Sentence(tuple(Token(i + 1, f, "N") for i, f in enumerate(forms)), frozenset(gold))


def test_min_freq_threshold():
    v = build_vocab([_sent(["a", "a", "a", "b"])], min_freq=2)
    assert v.word_id("a") > UNK_ID and v.word_id("b") == UNK_ID


def test_role_ids_null_first():
    v = build_vocab([_sent(["a", "b"], [Triplet(1, 2, "A1"), Triplet(2, 1, "A0")])])
    assert v.roles[0] == "_" and v.role_id("_") == 0
    assert v.roles[1:] == ["A0", "A1"]


def test_vocab_deterministic_and_permutation_insensitive():
    a = [_sent(["x", "y", "y"]), _sent(["z", "x", "x"], [Triplet(1, 2, "A0")])]
    assert build_vocab(a, 1) == build_vocab(a, 1)
    assert build_vocab(a, 1) == build_vocab(a[::-1], 1)


def test_vocab_reserved_and_round_trip():
    v = build_vocab([_sent(["ab", "c"])], 1)
    assert v.words[:2] == ["<pad>", "<unk>"] and v.char_id("?") == UNK_ID and v.pos_id("ZZ") == UNK_ID
    assert Vocabulary.from_dict(v.to_dict()) == v


def test_empty_corpus_rejected():
    with pytest.raises(ValueError):
        build_vocab([])


# ---------------------------------------------------------------- embeddings


def test_embeddings_header_and_copy(tmp_path):
    v = build_vocab([_sent(["cat", "dog"])], 1)
    f = tmp_path / "e.vec"
    f.write_text("2 3\ncat 1 2 3\ndog 4 5 6\n", encoding="utf-8")
    m = load_embeddings(f, v, 3)
    assert m[v.word_id("cat")].tolist() == [1, 2, 3] and m[v.word_id("dog")].tolist() == [4, 5, 6]
    assert not m[PAD_ID].any()


def test_embeddings_missing_words_seeded(tmp_path):
    v = build_vocab([_sent(["cat", "dog"])], 1)
    f = tmp_path / "e.vec"
    f.write_text("cat 1 2 3\n", encoding="utf-8")
    a, b = load_embeddings(f, v, 3, seed=5), load_embeddings(f, v, 3, seed=5)
    row = a[v.word_id("dog")]
    assert np.array_equal(a, b) and (np.abs(row) <= 0.05).all() and row.any()


def test_embeddings_dimension_mismatch_line(tmp_path):
    v = build_vocab([_sent(["cat"])], 1)
    f = tmp_path / "e.vec"
    f.write_text("cat 1 2 3\ndog 1 2\n", encoding="utf-8")
    with pytest.raises(CorpusError) as err:
        load_embeddings(f, v, 3)
    assert err.value.line == 2
