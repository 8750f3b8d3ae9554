"""Command-line surface: stats | train | predict | evaluate | synth.

Every output file starts with a '#seqtag' header carrying the tool version,
a hash of the resolved configuration, and the seed, so runs are auditable
and repeatable. Exit codes: 0 ok, 1 usage/config, 2 data error, 3 training
error.
"""

from __future__ import annotations

import argparse
import hashlib
import sys

from . import __version__
from . import corpus as corpus_mod
from . import detector as detector_mod
from . import metrics, pipeline, synth
from .embeddings import load_pretrained, random_embeddings
from .errors import (ConfigError, DomainError, ParseError, TrainingError,
                     VocabularyError)


def _config_hash(cfg: dict) -> str:
    blob = repr(sorted(cfg.items())).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


def _header(cfg: dict, seed) -> str:
    return f"#seqtag {__version__} config={_config_hash(cfg)} seed={seed}\n"


def _load(path, fmt):
    return corpus_mod.load_corpus(path, fmt)


def _embeddings(args, train_corpus):
    if args.emb:
        return load_pretrained(args.emb, args.dim)
    return random_embeddings(train_corpus, args.emb_random_dim, args.seed)


def _add_emb_args(p):
    p.add_argument("--emb", help="pretrained vector text file")
    p.add_argument("--dim", type=int, default=100, help="vector dimension for --emb")
    p.add_argument("--emb-random-dim", type=int, default=16,
                   help="dimension of seeded random embeddings when no --emb given")


def cmd_stats(args) -> int:
    c = _load(args.corpus, args.format)
    out = _header(vars(args), "-") + corpus_mod.stats_report(c)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0


def cmd_synth(args) -> int:
    spec = synth.SynthSpec(
        n_train=args.train, n_val=args.val, n_test=args.test,
        strong_weak_ratio=args.ratio, seed=args.seed,
    )
    train, val, test = synth.generate(spec)
    import os

    os.makedirs(args.out_dir, exist_ok=True)
    for name, c in (("train", train), ("val", val), ("test", test)):
        corpus_mod.write_corpus(c, os.path.join(args.out_dir, f"{name}.conll"))
    return 0


def cmd_train(args) -> int:
    train = _load(args.train, args.format)
    val = _load(args.val, args.format)
    # output locations do not affect the result, so they stay out of the
    # config hash and repeated runs produce byte-identical logs
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "out", "log")}
    if args.model == "tagger":
        emb = _embeddings(args, train)
        tcfg = pipeline.TaggerConfig(hidden=args.hidden, lr=args.lr, clip=args.clip,
                                     epochs=args.epochs, seed=args.seed)
        model, log_lines = pipeline.train_tagger(train, val, args.keep, tcfg, emb)
        pipeline.save_tagger(args.out, model, tcfg)
    else:
        train = corpus_mod.detector_labels(train)
        val = corpus_mod.detector_labels(val)
        emb = _embeddings(args, train)
        if args.balanced:
            train = corpus_mod.balanced_subsample(train, args.seed)
        dcfg = detector_mod.DetectorConfig(
            hidden=args.hidden, widths=tuple(args.widths), filters=args.filters,
            lr=args.lr, clip=args.clip, epochs=args.epochs, seed=args.seed,
            weighted=not args.unweighted, threshold=args.threshold,
        )
        params, log_lines = detector_mod.train_detector(train, val, emb, dcfg)
        pipeline.save_detector(args.out, params, emb, dcfg)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            fh.write(_header(cfg, args.seed))
            fh.write("\n".join(log_lines) + "\n")
    return 0


def cmd_predict(args) -> int:
    cfg = pipeline.load_pipeline_config(args.config) if args.config else {}
    # CLI flags override config-file values
    overrides = {
        "mode": args.mode,
        "single_checkpoint": args.single_ckpt,
        "strong_checkpoint": args.strong_ckpt,
        "weak_checkpoint": args.weak_ckpt,
        "detector_checkpoint": args.detector_ckpt,
        "threshold": args.threshold,
    }
    for key, value in overrides.items():
        if value is not None:
            cfg[key] = value
    pipe = pipeline.build_pipeline(cfg)
    c = _load(args.input, args.format)
    predictions = pipe.predict_corpus(c)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(_header(cfg, cfg.get("seed", "-")))
    with open(args.output, "a", encoding="utf-8") as fh:
        for sent, tags in zip(c.sentences, predictions):
            for tok, tag in zip(sent.tokens, tags):
                fh.write(f"{tok.surface}\t{tok.gold_tag}\t{tag}\n")
            fh.write("\n")
    return 0


def load_predictions(path):
    """Read conll-3col (surface, gold, predicted) back into two corpora."""
    gold_sents, pred_tags, cur, curp = [], [], [], []
    tags = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if line.startswith("#seqtag "):
                continue
            if not line.strip():
                if cur:
                    gold_sents.append(corpus_mod.Sentence(cur))
                    pred_tags.append(curp)
                    cur, curp = [], []
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            cur.append(corpus_mod.Token(parts[0], parts[1]))
            curp.append(parts[2])
            tags.update(parts[1:])
    if cur:
        gold_sents.append(corpus_mod.Sentence(cur))
        pred_tags.append(curp)
    labels = ["O"] + sorted(t for t in tags if t != "O")
    tagset = corpus_mod.TagSet(labels)
    gold = corpus_mod.Corpus(gold_sents, tagset)
    pred_sents = [
        corpus_mod.Sentence([corpus_mod.Token(t.surface, p) for t, p in zip(s.tokens, ps)])
        for s, ps in zip(gold_sents, pred_tags)
    ]
    pred = corpus_mod.Corpus(pred_sents, tagset)
    return pred, gold


def cmd_evaluate(args) -> int:
    if args.gold:
        pred_c = _load(args.pred, args.format)
        gold_c = _load(args.gold, args.format)
    else:
        pred_c, gold_c = load_predictions(args.pred)
    text, csv_text = metrics.report(pred_c, gold_c)
    out = _header(vars(args), "-") + text
    sys.stdout.write(out)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqtag")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="label histogram of a corpus")
    p.add_argument("corpus")
    p.add_argument("--format", choices=["conll-2col", "csv-sentence"], default="conll-2col")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="generate a synthetic imbalanced corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--train", type=int, default=5000)
    p.add_argument("--val", type=int, default=500)
    p.add_argument("--test", type=int, default=1000)
    p.add_argument("--ratio", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a tagger or the weak-class detector")
    p.add_argument("model", choices=["tagger", "detector"])
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--format", choices=["conll-2col", "csv-sentence"], default="conll-2col")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", help="training log CSV path")
    p.add_argument("--keep", choices=["all", "strong", "weak"], default="all")
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--clip", type=float, default=5.0)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--balanced", action="store_true",
                   help="detector: subsample negatives to match positives")
    p.add_argument("--unweighted", action="store_true",
                   help="detector: plain BCE instead of the weighted loss")
    p.add_argument("--widths", type=int, nargs="+", default=[2, 3, 4])
    p.add_argument("--filters", type=int, default=50)
    p.add_argument("--threshold", type=float, default=0.5)
    _add_emb_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="tag a corpus with a trained pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=["conll-2col", "csv-sentence"], default="conll-2col")
    p.add_argument("--config", help="key=value pipeline config file")
    p.add_argument("--mode", choices=["single", "double", "adaptive"])
    p.add_argument("--single-ckpt")
    p.add_argument("--strong-ckpt")
    p.add_argument("--weak-ckpt")
    p.add_argument("--detector-ckpt")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold tags")
    p.add_argument("pred", help="conll-3col prediction file (or 2col with --gold)")
    p.add_argument("--gold", help="gold conll-2col file when pred is 2col")
    p.add_argument("--format", choices=["conll-2col", "csv-sentence"], default="conll-2col")
    p.add_argument("--csv", help="write machine-readable report here")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ConfigError,) as exc:
        print(f"seqtag: config error: {exc}", file=sys.stderr)
        return 1
    except (ParseError, VocabularyError, DomainError, FileNotFoundError) as exc:
        print(f"seqtag: data error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"seqtag: training error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
