import json
import os
import subprocess
import sys

import numpy as np
import pytest

from builders import tiny_model
from hosrl.archive import save_model
from hosrl.cli import DATA_DIR, main
from hosrl.corpus import read_corpus

GOLD = DATA_DIR / "fixture_gold.conll09"
PRED = DATA_DIR / "fixture_pred.conll09"
SYNTH = DATA_DIR / "synthetic20.conll09"


@pytest.fixture
def small_cfg(tmp_path):
    text = (DATA_DIR / "desk.cfg").read_text() + "\nmax_epochs = 2\n"
    path = tmp_path / "small.cfg"
    path.write_text(text)
    return path


def test_eval_fixture(capsys):
    assert main(["eval", "--gold", str(GOLD), "--pred", str(PRED)]) == 0
    out = capsys.readouterr().out
    assert "arguments  P=0.5000 R=1.0000 F1=0.6667" in out
    assert "predicates P=0.6667 R=0.6667 F1=0.6667" in out


def test_eval_identity(capsys):
    assert main(["eval", "--gold", str(SYNTH), "--pred", str(SYNTH)]) == 0
    assert "arguments  P=1.0000 R=1.0000 F1=1.0000" in capsys.readouterr().out


def test_eval_count_mismatch(tmp_path, capsys):
    short = tmp_path / "short.conll09"
    short.write_text(GOLD.read_text().split("\n\n")[0] + "\n")
    assert main(["eval", "--gold", str(GOLD), "--pred", str(short)]) == 2
    assert "3" in capsys.readouterr().err


def test_missing_train_argument_is_usage_error(small_cfg, capsys):
    assert main(["train", str(small_cfg), "--dev", str(SYNTH), "--out", "x"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["predict", "--input", "x"])
    assert exc.value.code == 2


def test_unreadable_file_exit_2(tmp_path, small_cfg, capsys):
    missing = tmp_path / "nope.conll09"
    assert main(["train", str(small_cfg), "--train", str(missing), "--dev", str(SYNTH), "--out", str(tmp_path / "m")]) == 2
    assert str(missing) in capsys.readouterr().err


def test_bad_config_lists_keys(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("learning_rate = -1\nwhat = 3\n")
    assert main(["train", str(cfg), "--print-config"]) == 2
    err = capsys.readouterr().err
    assert "learning_rate" in err and "what" in err


def test_print_config_full_defaults(capsys, monkeypatch):
    monkeypatch.setenv("SRL_SEED", "42")
    assert main(["train", "--print-config"]) == 0
    out = capsys.readouterr().out
    assert "lstm_hidden = 350" in out and "seed = 42" in out and "learning_rate = 1e-05" in out


def test_train_predict_eval_pipeline(tmp_path, small_cfg, capsys):
    model = tmp_path / "m.srl"
    assert main(["train", str(small_cfg), "--train", str(SYNTH), "--dev", str(SYNTH), "--out", str(model)]) == 0
    log_rows = [json.loads(l) for l in (tmp_path / "m.srl.log").read_text().splitlines()]
    assert len(log_rows) >= 1 and "dev_f1" in log_rows[0]
    pred = tmp_path / "pred.conll09"
    assert main(["predict", "--model", str(model), "--input", str(SYNTH), "--out", str(pred)]) == 0
    capsys.readouterr()
    assert main(["eval", "--gold", str(SYNTH), "--pred", str(pred)]) == 0
    via_files = capsys.readouterr().out
    from hosrl.archive import load_model
    from hosrl.evaluate import decode_all, evaluate
    m, _, _ = load_model(model)
    gold = read_corpus(SYNTH, "conll09")
    assert via_files == evaluate(decode_all(gold, m), gold).to_text()


def test_predict_zero_iterations_is_baseline(tmp_path):
    m = tiny_model(dtype=np.float32, sentences=read_corpus(SYNTH, "conll09"))
    path = tmp_path / "m.srl"
    save_model(path, m)
    out = tmp_path / "p.conll09"
    assert main(["predict", "--model", str(path), "--input", str(SYNTH), "--iterations", "0", "--out", str(out)]) == 0
    from hosrl.evaluate import decode_scores
    gold = read_corpus(SYNTH, "conll09")
    expect = [decode_scores(o.pairs, m.baseline_scores(s).data, m.vocab.roles) for s, o in zip(gold, m.forward(gold, 0))]
    assert [s.gold for s in read_corpus(out, "conll09")] == expect


def test_predict_empty_input(tmp_path, caplog):
    path = tmp_path / "m.srl"
    save_model(path, tiny_model(dtype=np.float32))
    empty = tmp_path / "empty.conll09"
    empty.write_text("")
    out = tmp_path / "out.conll09"
    assert main(["predict", "--model", str(path), "--input", str(empty), "--out", str(out)]) == 0
    assert out.read_text() == "" and "no sentences" in caplog.text


def test_predict_version_mismatch_exit_3(tmp_path):
    path = tmp_path / "m.srl"
    save_model(path, tiny_model(dtype=np.float32), version=99)
    assert main(["predict", "--model", str(path), "--input", str(SYNTH)]) == 3


def test_analyze_writes_tables(tmp_path):
    path = tmp_path / "m.srl"
    save_model(path, tiny_model(dtype=np.float32, sentences=read_corpus(SYNTH, "conll09")))
    assert main(["analyze", "--model", str(path), "--dev", str(SYNTH), "--sweep", "0..3", "--out-dir", str(tmp_path)]) == 0
    sweep = (tmp_path / "sweep.tsv").read_text().splitlines()
    assert [r.split("\t")[0] for r in sweep[1:]] == ["0", "1", "2", "3"]
    dist = (tmp_path / "distance.tsv").read_text().splitlines()
    assert len(dist) == 1 + 4 * 7


def test_gradcheck_baseline_and_fault(capsys):
    assert main(["gradcheck", "--iterations", "0", "--size", "2"]) in (0, 1)
    out = capsys.readouterr().out
    for group in ("embeddings", "char_cnn", "bilstm", "ffn", "biaffine", "role", "attention"):
        assert group in out
    assert main(["gradcheck", "--inject-fault"]) == 1
    assert main(["gradcheck", "--size", "9"]) == 2


def test_synth_and_console_script(tmp_path):
    out = tmp_path / "lr.upb"
    assert main(["synth", "long-range", "--size", "5", "--format", "upb", "--out", str(out)]) == 0
    assert len(read_corpus(out, "upb")) == 5
    env = dict(os.environ, SRL_SEED="3")
    res = subprocess.run([sys.executable, "-m", "hosrl.cli", "synth", "overfit", "--out", str(tmp_path / "o.conll09")],
                         env=env, capture_output=True, text=True)
    assert res.returncode == 0
    from hosrl.synthetic import overfit_corpus
    got = read_corpus(tmp_path / "o.conll09", "conll09")
    assert [s.gold for s in got] == [s.gold for s in overfit_corpus(3)]


def test_bundled_corpus_is_the_seeded_generator():
    from hosrl.synthetic import overfit_corpus
    got = read_corpus(SYNTH, "conll09")
    want = overfit_corpus(0)
    assert [(s.forms, s.gold) for s in got] == [(s.forms, s.gold) for s in want]
    assert len(got) == 20 and max(len(s) for s in got) <= 8
    assert len({t.r for s in got for t in s.gold}) + 1 == 4
