"""Command-line entry points: train, predict, eval, analyze, gradcheck, synth.

Exit codes: 0 success, 1 check failure, 2 usage or data error,
3 archive incompatibility.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .archive import ArchiveError, ArchiveVersionError, load_model, save_model
from .config import ConfigError, format_config, load_config
from .corpus import READERS, CorpusError, build_vocab, load_embeddings, read_corpus, write_corpus
from .evaluate import (decode_all, distance_report, distance_tsv, evaluate, iteration_sweep, sweep_tsv,
                       write_text)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_VERSION = 0, 1, 2, 3
MAX_GRADCHECK_SIZE = 6
DATA_DIR = Path(__file__).parent / "data"

logger = logging.getLogger("hosrl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(arg: int | None, default: int) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("SRL_SEED")
    if env is None:
        return default
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SRL_SEED must be an integer, got {env!r}") from None


def _read(path: str, fmt: str):
    if not Path(path).is_file():
        raise UsageError(f"cannot read {path}")
    return read_corpus(path, fmt)


def _sweep_range(text: str) -> list[int]:
    lo, sep, hi = text.partition("..")
    try:
        values = list(range(int(lo), int(hi) + 1)) if sep else [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --sweep {text!r}; use A..B or a comma list") from None
    if any(v < 0 for v in values):
        raise UsageError("--sweep values must be >= 0")
    return values


# ---------------------------------------------------------------- commands


def cmd_train(args) -> int:
    if args.config is not None and not Path(args.config).is_file():
        raise UsageError(f"cannot read {args.config}")
    model_cfg, train_cfg = load_config(args.config)
    train_cfg = dataclasses.replace(train_cfg, seed=_seed(args.seed, train_cfg.seed))
    if args.max_epochs is not None:
        train_cfg = dataclasses.replace(train_cfg, max_epochs=args.max_epochs)
    train_cfg.validate()
    if args.print_config:
        sys.stdout.write(format_config(model_cfg, train_cfg))
        return EXIT_OK
    if not args.train or not args.dev or not args.out:
        raise UsageError("train needs --train, --dev and --out")
    train_set, dev_set = _read(args.train, args.format), _read(args.dev, args.format)
    vectors = None
    if args.embeddings:
        if not Path(args.embeddings).is_file():
            raise UsageError(f"cannot read {args.embeddings}")
        # same vocabulary train() builds, so rows line up
        vocab = build_vocab(train_set, train_cfg.min_freq)
        dtype = np.float64 if train_cfg.precision == "fp64" else np.float32
        vectors = load_embeddings(args.embeddings, vocab, model_cfg.word_dim, train_cfg.seed, dtype)
    from .trainer import train
    log_path = Path(args.log) if args.log else Path(str(args.out) + ".log")
    started = time.time()
    with open(log_path, "w", encoding="utf-8") as log_file:
        model, log = train(train_set, dev_set, model_cfg, train_cfg, word_vectors=vectors,
                           log_stream=sys.stdout, log_file=log_file)
    save_model(args.out, model, train_cfg, {"best_epoch": log.best_epoch, "dev_f1": log.best_f1,
                                            "epochs": len(log.records)})
    print(f"best epoch {log.best_epoch} dev F1 {log.best_f1:.4f}; model written to {args.out}"
          f" ({time.time() - started:.1f}s)", file=sys.stderr)
    return EXIT_OK


def cmd_predict(args) -> int:
    model, _, _ = load_model(args.model)
    if args.iterations is not None and args.iterations < 0:
        raise UsageError("--iterations must be >= 0")
    sentences = _read(args.input, args.format)
    if not sentences:
        logger.warning("%s contains no sentences; writing empty output", args.input)
    pred = decode_all(sentences, model, args.iterations)
    out = [s.with_triplets(p) for s, p in zip(sentences, pred)]
    if args.out:
        write_corpus(args.out, out, args.format)
    else:
        from .corpus import WRITERS
        sys.stdout.write(WRITERS[args.format](out))
    return EXIT_OK


def _aligned(gold, pred, gold_path, pred_path):
    if len(gold) != len(pred):
        raise UsageError(f"sentence count mismatch: {gold_path} has {len(gold)}, {pred_path} has {len(pred)}")
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise UsageError(f"sentence {i + 1}: {len(g)} tokens in gold, {len(p)} in prediction")


def cmd_eval(args) -> int:
    gold, pred = _read(args.gold, args.format), _read(args.pred, args.format)
    _aligned(gold, pred, args.gold, args.pred)
    report = evaluate([p.gold for p in pred], gold)
    sys.stdout.write(report.to_text())
    if args.tsv:
        write_text(args.tsv, report.to_tsv())
    return EXIT_OK


def cmd_analyze(args) -> int:
    model, _, _ = load_model(args.model)
    dev = _read(args.dev, args.format)
    n_values = _sweep_range(args.sweep)
    rows = iteration_sweep(model, dev, n_values)
    tables = {n: distance_report(decode_all(dev, model, n), dev) for n in sorted(set(n_values))}
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_text(out / "sweep.tsv", sweep_tsv(rows))
    write_text(out / "distance.tsv", distance_tsv(tables))
    sys.stdout.write(sweep_tsv(rows))
    print(f"wrote {out / 'sweep.tsv'} and {out / 'distance.tsv'}", file=sys.stderr)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from .gradcheck import EPS, TOLERANCE, check_model_gradients, random_instance
    if not 1 <= args.size <= MAX_GRADCHECK_SIZE:
        raise UsageError(f"--size must be in 1..{MAX_GRADCHECK_SIZE}")
    if args.roles < 2 or args.iterations < 0:
        raise UsageError("--roles must be >= 2 and --iterations >= 0")
    started = time.time()
    model, sentence = random_instance(args.size, args.roles, args.iterations, _seed(args.seed, 0))
    report, rows = check_model_gradients(model, sentence, EPS, "tanh" if args.inject_fault else None)
    print(f"loss {report.loss:.6g}  eps {EPS:g}  difference resolution ~{report.noise_floor:.1e}")
    print(f"{'group':<12}{'max rel err':>14}  {'|analytic|':>11} {'|numeric|':>11}  parameter")
    failed = []
    for r in rows:
        mark = "ok" if r.error < TOLERANCE else "FAIL"
        print(f"{r.group:<12}{r.error:>14.3e}  {abs(r.analytic):>11.3e} {abs(r.numeric):>11.3e}  {r.parameter}  {mark}")
        if r.error >= TOLERANCE:
            failed.append(r.group)
    print(f"{len(report.errors)} parameters checked in {time.time() - started:.1f}s")
    if failed:
        print(f"gradient check failed for: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import long_range_corpus, overfit_corpus
    seed = _seed(args.seed, 0)
    data = overfit_corpus(seed, args.size) if args.kind == "overfit" else long_range_corpus(seed, args.size)
    write_corpus(args.out, data, args.format)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hosrl", description="End-to-end semantic role labeling with iterative pair refinement.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    formats = sorted(READERS)

    p = sub.add_parser("train", help="train a model and write an archive")
    p.add_argument("config", nargs="?", help="key = value config file (defaults when omitted)")
    p.add_argument("--train")
    p.add_argument("--dev")
    p.add_argument("--format", choices=formats, default="conll09")
    p.add_argument("--embeddings", help="word vectors in text format (random when omitted)")
    p.add_argument("--out", help="model archive path")
    p.add_argument("--log", help="training log path (default: <out>.log)")
    p.add_argument("--seed", type=int, help="overrides config; SRL_SEED env var is the fallback")
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--print-config", action="store_true", help="print the full effective config and exit")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="label a corpus with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=formats, default="conll09")
    p.add_argument("--iterations", type=int, help="refinement count (default: the trained value)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="score predictions against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--format", choices=formats, default="conll09")
    p.add_argument("--tsv", help="also write one record per metric, bucket and role")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="iteration sweep and distance tables")
    p.add_argument("--model", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--format", choices=formats, default="conll09")
    p.add_argument("--sweep", default="0..6", help="N values, A..B or comma list")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full loss")
    p.add_argument("--size", type=int, default=3)
    p.add_argument("--roles", type=int, default=4)
    p.add_argument("--iterations", type=int, default=2)
    p.add_argument("--seed", type=int)
    p.add_argument("--inject-fault", action="store_true", help="corrupt the tanh backward rule (negative control)")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth", help="write a seeded synthetic corpus")
    p.add_argument("kind", choices=["overfit", "long-range"])
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=formats, default="conll09")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ArchiveVersionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERSION
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ArchiveError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
