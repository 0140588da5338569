"""``atpl`` command line: every pipeline stage as a subcommand.

Metrics go to ``--report`` as ``metric,split,value`` CSV (standard output
when no report path is given); logs go to standard error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .autoencoder import (Autoencoder, AutoencoderConfig, extract_unbindings,
                          reconstruction_accuracy, train_autoencoder)
from .captioner import Captioner, CaptionerConfig, train_captioner
from .config import RunConfig, UsageError, resolve
from .corpus import (CaptionRecord, TagSet, UnbindingSequence, bleu_score, build_tagset,
                     build_vocab, caption_features, default_grammar, load_caption_dataset,
                     read_tagged, read_treebank, read_unbindings, serialize, synth_corpus,
                     write_caption_dataset, write_tagged, write_treebank, write_unbindings)
from .corpus.formats import read_sentences, write_sentences
from .errors import AtplError, ContractError, IngestionError
from .gradsuite import run_gradient_suite
from .parser import ConstituencyParser, ParserConfig, make_examples, parseval_score, train_parser
from .parser.layers import build_tree
from .tagger import TaggedExample, Tagger, TaggerConfig, eval_accuracy, train_tagger
from .training import TrainConfig

log = logging.getLogger("atpl")

Row = tuple[str, str, object]


# -- helpers -----------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_report(path: str | None, rows: Sequence[Row]) -> None:
    text = "metric,split,value\n" + "".join(f"{m},{s},{_fmt(v)}\n" for m, s, v in rows)
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _need(cfg: RunConfig, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError(f"{cfg.subcommand}: missing --{', --'.join(k.replace('_', '-') for k in missing)}")


def _check_inputs(cfg: RunConfig, *keys: str) -> None:
    for k in keys:
        path = cfg.get(k)
        if path is not None and not Path(path).exists():
            raise IngestionError(f"--{k}: {path} does not exist")


def _prepare_outputs(cfg: RunConfig, *keys: str) -> None:
    for k in keys:
        path = cfg.get(k)
        if path is None:
            continue
        parent = Path(path).parent
        parent.mkdir(parents=True, exist_ok=True)
        if Path(path).is_dir():
            raise IngestionError(f"--{k}: {path} is a directory")


def _validate(cfg: RunConfig, required: Sequence[str], inputs: Sequence[str],
              outputs: Sequence[str]) -> None:
    """All path checks happen here, before any model is built."""
    _need(cfg, *required)
    _check_inputs(cfg, *inputs)
    _prepare_outputs(cfg, *outputs, "report")


def _train_cfg(cfg: RunConfig) -> TrainConfig:
    return TrainConfig(epochs=cfg.get("epochs"), lr=cfg.get("lr"),
                       batch_size=cfg.get("batch_size"), clip_norm=cfg.get("clip_norm"))


def _unbindings_for(path, n: int) -> list[np.ndarray]:
    seqs = read_unbindings(path)
    if len(seqs) != n:
        raise IngestionError(f"{path} holds {len(seqs)} unbinding sequences, expected {n}")
    return [s.vectors for s in seqs]


def _tagged_examples(tagger: Tagger, sents, tags, us) -> list[TaggedExample]:
    out = []
    for i, (words, ts, u) in enumerate(zip(sents, tags, us), 1):
        if len(u) != len(words):
            raise IngestionError(f"sentence {i}: {len(u)} unbinding vectors for {len(words)} tokens")
        out.append(TaggedExample(tagger.vocab.encode(words), u, tagger.tagset.encode(ts)))
    return out


def _pos_for_parser(tagger: Tagger, parser: ConstituencyParser, words, u) -> list[int]:
    names = tagger.tagset.decode(tagger.predict(u, tagger.vocab.encode(words)))
    return parser.tagset.encode(names)


# -- subcommands -------------------------------------------------------------

def cmd_gen_corpus(cfg: RunConfig) -> list[Row]:
    _validate(cfg, ["out"], [], [])
    out = Path(cfg.get("out"))
    out.mkdir(parents=True, exist_ok=True)
    n_train, n_test = cfg.get("n"), cfg.get("test_size")
    if n_train < 1 or n_test < 1:
        raise ContractError("--n and --test-size must be positive")
    grammar = default_grammar()
    corpus = synth_corpus(grammar, n_train + n_test, cfg.seed, max_len=cfg.get("max_len"))
    rows: list[Row] = []
    feats = caption_features(corpus.sentences, grammar.words, cfg.get("context_dim"), cfg.seed)
    for split, lo, hi in (("train", 0, n_train), ("test", n_train, n_train + n_test)):
        trees, sents, tags = corpus.trees[lo:hi], corpus.sentences[lo:hi], corpus.tags[lo:hi]
        write_treebank(out / f"{split}.trees", trees)
        write_tagged(out / f"{split}.tagged", sents, tags)
        write_sentences(out / f"{split}.txt", sents)
        records = [CaptionRecord(f"{split}-{i + 1}", feats[lo + i], [s])
                   for i, s in enumerate(sents)]
        write_caption_dataset(out / f"captions_{split}.tsv", records)
        rows += [("sentences", split, len(sents)),
                 ("tokens", split, sum(len(s) for s in sents)),
                 ("max_length", split, max(len(s) for s in sents)),
                 ("max_height", split, max(t.height() for t in trees))]
    rows.append(("vocabulary", "all", len({w for s in corpus.sentences for w in s})))
    log.info("wrote corpus to %s", out)
    return rows


def cmd_train_autoencoder(cfg: RunConfig) -> list[Row]:
    _validate(cfg, ["corpus", "model"], ["corpus"], ["model"])
    sents = read_sentences(cfg.get("corpus"))
    vocab = build_vocab(sents)
    acfg = AutoencoderConfig(d=cfg.get("d"), hidden=cfg.get("hidden"),
                             context_dim=cfg.get("context_dim"), max_len=cfg.get("max_len"),
                             seed=cfg.seed)
    model, history = train_autoencoder(sents, vocab, acfg, _train_cfg(cfg),
                                       target_accuracy=cfg.get("target_accuracy"))
    model.save(cfg.get("model"))
    return [("epochs", "train", history[-1][0]),
            ("loss", "train", history[-1][1]),
            ("reconstruction_accuracy", "train", reconstruction_accuracy(model, sents)),
            ("vocabulary", "train", len(vocab))]


def cmd_extract_u(cfg: RunConfig) -> list[Row]:
    _validate(cfg, ["autoencoder", "corpus", "out"], ["autoencoder", "corpus"], ["out"])
    model = Autoencoder.load(cfg.get("autoencoder"))
    sents = read_sentences(cfg.get("corpus"))
    oov = sum(1 for s in sents for w in s if w not in model.vocab.index)
    if oov:
        log.warning("%d tokens are outside the autoencoder vocabulary", oov)
    seqs = [extract_unbindings(model, s, str(i), strict=False) for i, s in enumerate(sents, 1)]
    write_unbindings(cfg.get("out"), seqs)
    return [("sentences", "all", len(seqs)),
            ("tokens", "all", sum(s.length for s in seqs)),
            ("oov_tokens", "all", oov)]


def cmd_train_tagger(cfg: RunConfig) -> list[Row]:
    _validate(cfg, ["tagged", "unbindings", "autoencoder", "model"],
              ["tagged", "unbindings", "autoencoder"], ["model"])
    sents, tags = read_tagged(cfg.get("tagged"))
    us = _unbindings_for(cfg.get("unbindings"), len(sents))
    vocab = Autoencoder.load(cfg.get("autoencoder")).vocab
    model = Tagger(vocab, build_tagset(tags),
                   TaggerConfig(d=us[0].shape[1], hidden=cfg.get("hidden"),
                                inner=cfg.get("inner"), seed=cfg.seed))
    examples = _tagged_examples(model, sents, tags, us)
    history = train_tagger(model, examples, _train_cfg(cfg), cfg.get("target_accuracy"))
    model.save(cfg.get("model"))
    return [("epochs", "train", history[-1][0]),
            ("loss", "train", history[-1][1]),
            ("accuracy", "train", eval_accuracy(model, examples))]


def cmd_eval_tagger(cfg: RunConfig) -> list[Row]:
    _validate(cfg, ["model", "tagged", "unbindings"], ["model", "tagged", "unbindings"], [])
    model = Tagger.load(cfg.get("model"))
    sents, tags = read_tagged(cfg.get("tagged"))
    examples = _tagged_examples(model, sents, tags, _unbindings_for(cfg.get("unbindings"), len(sents)))
    return [("accuracy", "eval", eval_accuracy(model, examples)),
            ("tokens", "eval", sum(len(t) for t in tags))]


def cmd_train_parser(cfg: RunConfig) -> list[Row]:
    _validate(cfg, ["trees", "unbindings", "model"], ["trees", "unbindings"], ["model"])
    trees = read_treebank(cfg.get("trees"))
    us = _unbindings_for(cfg.get("unbindings"), len(trees))
    tagset = build_tagset(t.pos_tags() for t in trees)
    examples = make_examples(trees, us, tagset)
    pcfg = ParserConfig(d=us[0].shape[1], hidden=cfg.get("hidden"), inner=cfg.get("inner"),
                        max_layers=cfg.get("max_layers"), seed=cfg.seed)
    model, history = train_parser(examples, tagset, pcfg, _train_cfg(cfg))
    model.save(cfg.get("model"))
    gold = parseval_score([model.parse(ex.tokens, ex.u, ex.pos, ex.layers.codes)
                           for ex in examples], trees)
    return [("epochs", "train", history[-1][0]),
            ("loss", "train", history[-1][1]),
            ("f1_ground_truth_codes", "train", gold.f1)]


def _read_encodings(path) -> list[str]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            tokens, cats, codes = rec["tokens"], rec["categories"], rec["codes"]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise IngestionError(f"{path}: line {lineno}: bad encoding record ({e})") from None
        out.append(build_tree(tokens, cats, codes, len(cats)))
    return out


def cmd_parse(cfg: RunConfig) -> list[Row]:
    if cfg.get("encodings") is not None:
        _validate(cfg, [], ["encodings"], ["out"])
        lines = _read_encodings(cfg.get("encodings"))
    else:
        _validate(cfg, ["model", "tagger", "corpus", "unbindings"],
                  ["model", "tagger", "corpus", "unbindings"], ["out"])
        parser = ConstituencyParser.load(cfg.get("model"))
        tagger = Tagger.load(cfg.get("tagger"))
        sents = read_sentences(cfg.get("corpus"))
        us = _unbindings_for(cfg.get("unbindings"), len(sents))
        lines = [parser.parse(w, u, _pos_for_parser(tagger, parser, w, u))
                 for w, u in zip(sents, us)]
    text = "".join(line + "\n" for line in lines)
    if cfg.get("out") is None:
        sys.stdout.write(text)
    else:
        Path(cfg.get("out")).write_text(text, encoding="utf-8")
    return [("sentences", "all", len(lines))]


def cmd_eval_parse(cfg: RunConfig) -> list[Row]:
    _validate(cfg, ["model", "tagger", "trees", "unbindings"],
              ["model", "tagger", "trees", "unbindings"], [])
    parser = ConstituencyParser.load(cfg.get("model"))
    tagger = Tagger.load(cfg.get("tagger"))
    gold = read_treebank(cfg.get("trees"))
    examples = make_examples(gold, _unbindings_for(cfg.get("unbindings"), len(gold)), parser.tagset)
    predicted, ground_truth = [], []
    for ex in examples:
        predicted.append(parser.parse(ex.tokens, ex.u, _pos_for_parser(tagger, parser, ex.tokens, ex.u)))
        ground_truth.append(parser.parse(ex.tokens, ex.u, ex.pos, ex.layers.codes))
    rows: list[Row] = []
    for split, trees in (("predicted", predicted), ("ground_truth", ground_truth)):
        s = parseval_score(trees, gold)
        rows += [("precision", split, s.precision), ("recall", split, s.recall),
                 ("f1", split, s.f1)]
    rows.append(("exact_match", "predicted",
                 sum(p == serialize(g) for p, g in zip(predicted, gold)) / len(gold)))
    return rows


def cmd_train_captioner(cfg: RunConfig) -> list[Row]:
    _validate(cfg, ["captions", "model"], ["captions"], ["model"])
    records = load_caption_dataset(cfg.get("captions"))
    if not records:
        raise IngestionError(f"{cfg.get('captions')} holds no caption records")
    ccfg = CaptionerConfig(context_dim=records[0].features.shape[0], d=cfg.get("d"),
                           hidden=cfg.get("hidden"), max_len=cfg.get("max_len"), seed=cfg.seed)
    model, history = train_captioner(records, ccfg, _train_cfg(cfg))
    model.save(cfg.get("model"))
    return [("epochs", "train", history[-1][0]), ("loss", "train", history[-1][1])]


def cmd_caption(cfg: RunConfig) -> list[Row]:
    _validate(cfg, ["model", "captions"], ["model", "captions"], ["out"])
    model = Captioner.load(cfg.get("model"))
    records = load_caption_dataset(cfg.get("captions"))
    captions = [model.caption(r.features) for r in records]
    text = "".join(" ".join(c) + "\n" for c in captions)
    if cfg.get("out") is None:
        sys.stdout.write(text)
    else:
        Path(cfg.get("out")).write_text(text, encoding="utf-8")
    return [("captions", "all", len(captions)),
            ("empty_captions", "all", sum(1 for c in captions if not c))]


def cmd_eval_bleu(cfg: RunConfig) -> list[Row]:
    _validate(cfg, ["candidates", "captions"], ["candidates", "captions"], [])
    records = load_caption_dataset(cfg.get("captions"))
    with open(cfg.get("candidates"), encoding="utf-8") as fh:
        cands = [line.split() for line in fh.read().splitlines()]
    if len(cands) != len(records):
        raise IngestionError(f"{len(cands)} candidates for {len(records)} caption records")
    scores = bleu_score(cands, [r.references for r in records], max_n=4)
    return [(f"bleu{n}", "eval", s) for n, s in enumerate(scores, 1)]


def cmd_check_gradients(cfg: RunConfig) -> list[Row]:
    _validate(cfg, [], [], [])
    tol = cfg.get("tolerance")
    rows: list[Row] = []
    failed = []
    for name, rep in run_gradient_suite(cfg.seed, tolerance=tol):
        rows += [("max_rel_error", name, rep.max_error), ("passed", name, rep.passed)]
        if not rep.passed:
            failed.append(f"{name} ({rep.worst_param}[{rep.worst_index}] error {rep.max_error:.3g})")
    if failed:
        write_report(cfg.get("report"), rows)
        raise AtplError("gradient check failed: " + ", ".join(failed))
    return rows


# -- argument parsing --------------------------------------------------------

COMMON_DEFAULTS = {"d": 16, "hidden": 64, "context_dim": 128, "max_len": 20, "lr": 1e-3,
                   "epochs": 30, "batch_size": 4, "clip_norm": 5.0}

Command = tuple[Callable[[RunConfig], list[Row]], dict, str]
COMMANDS: dict[str, Command] = {
    "gen-corpus": (cmd_gen_corpus, {"n": 200, "test_size": 50, "max_len": 10},
                   "sample the synthetic treebank, tagged corpus and caption files"),
    "train-autoencoder": (cmd_train_autoencoder, {"lr": 3e-3, "epochs": 40,
                                                  "target_accuracy": 0.99},
                          "train the sentence autoencoder"),
    "extract-u": (cmd_extract_u, {}, "write unbinding vectors for a corpus"),
    "train-tagger": (cmd_train_tagger, {"hidden": 32, "inner": 64, "lr": 5e-3, "epochs": 15},
                     "train the POS tagger on unbinding vectors"),
    "eval-tagger": (cmd_eval_tagger, {}, "tagging accuracy on a tagged corpus"),
    "train-parser": (cmd_train_parser, {"hidden": 32, "inner": 32, "max_layers": 8,
                                        "lr": 5e-3, "epochs": 20},
                     "train the segmenters and classifiers"),
    "parse": (cmd_parse, {}, "parse sentences, or rebuild trees from layer encodings"),
    "eval-parse": (cmd_eval_parse, {}, "labeled PARSEVAL scores against gold trees"),
    "train-captioner": (cmd_train_captioner, {"lr": 3e-3},
                        "train a decoder-only captioner on feature vectors"),
    "caption": (cmd_caption, {}, "greedy captions for a caption file"),
    "eval-bleu": (cmd_eval_bleu, {}, "corpus BLEU-1..4 of candidates against references"),
    "check-gradients": (cmd_check_gradients, {"tolerance": 1e-4},
                        "finite-difference check of every trainable block"),
}

FLAGS = {
    "--seed": int, "--d": int, "--hidden": int, "--context-dim": int, "--inner": int,
    "--max-layers": int, "--max-len": int, "--n": int, "--test-size": int, "--epochs": int,
    "--batch-size": int, "--lr": float, "--clip-norm": float, "--target-accuracy": float,
    "--tolerance": float,
    "--out": str, "--report": str, "--corpus": str, "--tagged": str, "--trees": str,
    "--unbindings": str, "--captions": str, "--candidates": str, "--model": str,
    "--autoencoder": str, "--tagger": str, "--encodings": str,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atpl", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    for name, (_, _, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key = value run-config file")
        for flag, kind in FLAGS.items():
            p.add_argument(flag, type=kind, default=None)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.subcommand is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        force=True)
    fn, defaults, _ = COMMANDS[args.subcommand]
    flags = {k: v for k, v in vars(args).items()
             if k not in ("subcommand", "config", "verbose")}
    try:
        cfg = resolve(args.subcommand, flags, args.config, {**COMMON_DEFAULTS, **defaults})
        rows = fn(cfg)
        if args.subcommand not in ("parse", "caption") or cfg.get("report") is not None:
            write_report(cfg.get("report"), rows)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"atpl: error: {e}", file=sys.stderr)
        return 2
    except (AtplError, OSError) as e:
        print(f"atpl: error: {e}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
