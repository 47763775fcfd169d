import numpy as np
import pytest

from builders import randomize, sentence, tiny_model
from hosrl.archive import ArchiveError, ArchiveVersionError, load_model, read_header, save_model
from hosrl.config import ConfigError, ModelConfig, TrainConfig, format_config, load_config, parse_config
from hosrl.evaluate import decode_all


def test_parse_config_values_and_comments():
    m, t = parse_config("lstm_hidden = 20  # small\nkernel_sizes = 2, 3\nlearning_rate=0.5\ntarget_f1 = none\n")
    assert m.lstm_hidden == 20 and m.kernel_sizes == (2, 3) and t.learning_rate == 0.5 and t.target_f1 is None


def test_parse_config_collects_every_problem():
    with pytest.raises(ConfigError) as err:
        parse_config("bogus = 1\nlstm_hidden = many\nno equals sign\n")
    assert set(err.value.problems) == {"bogus", "lstm_hidden", "line 3"}


def test_validation_errors():
    with pytest.raises(ConfigError) as err:
        parse_config("learning_rate = 0\npatience = 0\npair_policy = diagonal\n")
    assert {"learning_rate", "patience", "pair_policy"} <= set(err.value.problems)


def test_format_config_round_trip():
    m, t = ModelConfig(lstm_hidden=7), TrainConfig(seed=9, target_f1=0.5)
    assert parse_config(format_config(m, t)) == (m, t)
    assert load_config(None) == (ModelConfig(), TrainConfig())


def test_paper_defaults():
    m, t = ModelConfig(), TrainConfig()
    assert (m.lstm_hidden, m.lstm_layers, m.kernel_sizes) == (350, 3, (3, 4, 5))
    assert t.learning_rate == 1e-5 and t.batch_size == 16 and t.clip_norm == 5.0


# ---------------------------------------------------------------- archive


def test_archive_round_trip_bit_identical(tmp_path):
    m = randomize(tiny_model(dtype=np.float32), 1, scale=1.0)
    sents = [sentence(n, n) for n in (3, 6, 4)]
    before = decode_all(sents, m)
    scores = [o.scores.data for o in m.forward(sents)]
    path = tmp_path / "m.srl"
    save_model(path, m, TrainConfig(seed=4), {"best_epoch": 3, "dev_f1": 0.5})
    loaded, cfg, meta = load_model(path)
    assert decode_all(sents, loaded) == before
    assert all(np.array_equal(a, o.scores.data) for a, o in zip(scores, loaded.forward(sents)))
    assert cfg.seed == 4 and meta["best_epoch"] == 3 and loaded.vocab == m.vocab


def test_archive_manifest_layout(tmp_path):
    m = tiny_model(dtype=np.float32)
    path = tmp_path / "m.srl"
    save_model(path, m)
    header, data = read_header(path)
    params = m.parameters()
    offset = 0
    for entry in header["manifest"]:
        arr = params[entry["name"]].data
        assert entry["offset"] == offset and tuple(entry["shape"]) == arr.shape
        chunk = np.frombuffer(data, dtype="<f4", count=arr.size, offset=offset)
        assert np.array_equal(chunk, arr.reshape(-1))
        offset += 4 * arr.size
    assert offset == len(data)


def test_archive_version_mismatch(tmp_path):
    path = tmp_path / "m.srl"
    save_model(path, tiny_model(dtype=np.float32), version=2)
    with pytest.raises(ArchiveVersionError):
        load_model(path)


def test_archive_garbage_and_truncation(tmp_path):
    bad = tmp_path / "bad.srl"
    bad.write_bytes(b"hello\n")
    with pytest.raises(ArchiveError):
        load_model(bad)
    path = tmp_path / "m.srl"
    save_model(path, tiny_model(dtype=np.float32))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ArchiveError):
        load_model(path)
