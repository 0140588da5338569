"""Acceptance criteria, one test each. Every test prints a PASS/FAIL line
with the measured value and runtime, even when output capture is on.

Criteria 4 to 6 share one desk-scale run of the CLI on the shipped corpus
(default hyperparameters, seed 0); each criterion is timed on its own
stages.
"""
import csv
import time
from pathlib import Path

import numpy as np
import pytest

from atpl.cli import run
from atpl.corpus import bleu_score, default_grammar, parse_bracketed, serialize, synth_corpus
from atpl.gradsuite import run_gradient_suite
from atpl.parser import build_tree_from_encoding, derive_gold_layers
from atpl.tpr import bind_sequence, hadamard_basis, unbind

DATA = Path(__file__).resolve().parent.parent / "data" / "synthetic"
JOHN = "(S(NNP John)(VP(VBD hit)(NP(DT the)(NN ball))))"


@pytest.fixture
def verdict(capsys):
    def emit(n, name, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    return emit


def report(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return {(m, s): float(v) for m, s, v in rows[1:]}


def cli(*argv):
    code = run([str(a) for a in argv])
    assert code == 0, f"{argv[0]} exited with {code}"


def test_1_algebraic_exactness(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for d in (2, 8, 16, 32):
        U = hadamard_basis(d)
        for T_ in range(1, d + 1):
            F = rng.normal(size=(d, T_))
            S = bind_sequence([F[:, t] for t in range(T_)], [U[:, t] for t in range(T_)])
            for t in range(T_):
                worst = max(worst, np.abs(unbind(S, U[:, t]) - F[:, t]).max())
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < 1.0
    verdict(1, "TPR exactness d in {2,8,16,32}", ok, f"max abs error {worst:.2e}, {elapsed:.2f}s")
    assert ok


def test_2_gradient_suite(verdict):
    t0 = time.perf_counter()
    results = run_gradient_suite(seed=7, tolerance=1e-4)
    elapsed = time.perf_counter() - t0
    worst = max(r.max_error for _, r in results)
    failed = [n for n, r in results if not r.passed]
    ok = not failed and elapsed < 30
    verdict(2, "finite-difference gradient suite", ok,
             f"{len(results)} blocks, max rel error {worst:.2e}, failed {failed}, {elapsed:.2f}s")
    assert ok


def test_3_round_trip(verdict):
    t0 = time.perf_counter()
    trees = synth_corpus(default_grammar(), 500, seed=2024).trees
    good = sum(build_tree_from_encoding(t.leaves(), derive_gold_layers(t)) == serialize(t)
               for t in trees)
    john = parse_bracketed(JOHN)
    enc = derive_gold_layers(john)
    rebuilt = build_tree_from_encoding(john.leaves(), enc)
    elapsed = time.perf_counter() - t0
    ok = (good == 500 and rebuilt == JOHN and enc.code(2) == [0, 1, 0, 0]
          and enc.code(3) == [0, 1, 1, 1] and elapsed < 10)
    verdict(3, "layer-encoding round trip", ok,
            f"{good}/500 trees, worked example {rebuilt}, {elapsed:.2f}s")
    assert ok


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    """Run the shipped-corpus pipeline once and time each stage."""
    out = tmp_path_factory.mktemp("desk")
    times = {}

    def stage(name, *argv):
        t0 = time.perf_counter()
        cli(*argv, "--seed", 0)
        times[name] = times.get(name, 0.0) + time.perf_counter() - t0

    stage("autoencoder", "train-autoencoder", "--corpus", DATA / "train.txt",
          "--model", out / "ae.ckpt", "--report", out / "ae.csv")
    for split in ("train", "test"):
        stage("extract", "extract-u", "--autoencoder", out / "ae.ckpt",
              "--corpus", DATA / f"{split}.txt", "--out", out / f"{split}.u")
    stage("tagger", "train-tagger", "--tagged", DATA / "train.tagged",
          "--unbindings", out / "train.u", "--autoencoder", out / "ae.ckpt",
          "--model", out / "tagger.ckpt")
    stage("tagger", "eval-tagger", "--model", out / "tagger.ckpt", "--tagged", DATA / "test.tagged",
          "--unbindings", out / "test.u", "--report", out / "tagger.csv")
    stage("parser", "train-parser", "--trees", DATA / "train.trees", "--unbindings", out / "train.u",
          "--model", out / "parser.ckpt")
    stage("parser", "eval-parse", "--model", out / "parser.ckpt", "--tagger", out / "tagger.ckpt",
          "--trees", DATA / "test.trees", "--unbindings", out / "test.u",
          "--report", out / "parse.csv")
    return out, times


def test_4_autoencoder_reconstruction(desk, verdict):
    out, times = desk
    rows = report(out / "ae.csv")
    acc = rows[("reconstruction_accuracy", "train")]
    ok = acc >= 0.95 and times["autoencoder"] < 600
    verdict(4, "autoencoder reconstruction on 200 sentences", ok,
            f"accuracy {acc:.4f} after {int(rows[('epochs', 'train')])} epochs, "
            f"vocabulary {int(rows[('vocabulary', 'train')])}, {times['autoencoder']:.0f}s")
    assert ok


def test_5_pos_tagging(desk, verdict):
    out, times = desk
    acc = report(out / "tagger.csv")[("accuracy", "eval")]
    elapsed = times["tagger"] + times["extract"]
    ok = acc >= 0.99 and elapsed < 600
    verdict(5, "held-out POS accuracy", ok, f"accuracy {acc:.4f}, {elapsed:.0f}s")
    assert ok


def test_6_parser_ordering(desk, verdict):
    out, times = desk
    rows = report(out / "parse.csv")
    gt, pred = rows[("f1", "ground_truth")], rows[("f1", "predicted")]
    ok = gt >= pred and gt >= 0.90 and times["parser"] < 1200
    verdict(6, "parser F1 ground-truth codes >= predicted codes", ok,
            f"ground truth {gt:.4f}, predicted {pred:.4f}, {times['parser']:.0f}s")
    assert ok


def test_7_bleu_sanity(verdict):
    refs = [[s] for s in synth_corpus(default_grammar(), 50, seed=8).sentences]
    same = bleu_score([r[0] for r in refs], refs)
    disjoint = bleu_score([["zz"] * len(r[0]) for r in refs], refs, max_n=1)[0]
    ok = same == [1.0, 1.0, 1.0, 1.0] and disjoint <= 1e-6
    verdict(7, "BLEU sanity", ok, f"identity {same}, disjoint BLEU-1 {disjoint:.1e}")
    assert ok


def _full_pipeline(root: Path) -> dict[str, bytes]:
    """Every stage at the shipped corpus scale, with two training epochs
    per model to keep the double run short."""
    m = root / "models"
    r = root / "reports"
    fast = ["--epochs", 2]
    steps = [
        ("gen", ["gen-corpus", "--out", root / "corpus"]),
        ("ae", ["train-autoencoder", "--corpus", DATA / "train.txt", "--model", m / "ae", *fast]),
        ("u-train", ["extract-u", "--autoencoder", m / "ae", "--corpus", DATA / "train.txt",
                     "--out", m / "train.u"]),
        ("u-test", ["extract-u", "--autoencoder", m / "ae", "--corpus", DATA / "test.txt",
                    "--out", m / "test.u"]),
        ("tag-train", ["train-tagger", "--tagged", DATA / "train.tagged", "--unbindings",
                       m / "train.u", "--autoencoder", m / "ae", "--model", m / "tagger", *fast]),
        ("tag-test", ["eval-tagger", "--model", m / "tagger", "--tagged", DATA / "test.tagged",
                      "--unbindings", m / "test.u"]),
        ("parse-train", ["train-parser", "--trees", DATA / "train.trees", "--unbindings",
                         m / "train.u", "--model", m / "parser", *fast]),
        ("parse", ["parse", "--model", m / "parser", "--tagger", m / "tagger", "--corpus",
                   DATA / "test.txt", "--unbindings", m / "test.u", "--out", m / "test.parsed"]),
        ("parse-test", ["eval-parse", "--model", m / "parser", "--tagger", m / "tagger",
                        "--trees", DATA / "test.trees", "--unbindings", m / "test.u"]),
        ("cap-train", ["train-captioner", "--captions", DATA / "captions_train.tsv",
                       "--model", m / "cap", *fast]),
        ("caption", ["caption", "--model", m / "cap", "--captions", DATA / "captions_test.tsv",
                     "--out", m / "test.captions"]),
        ("bleu", ["eval-bleu", "--candidates", m / "test.captions",
                  "--captions", DATA / "captions_test.tsv"]),
        ("grad", ["check-gradients"]),
    ]
    for name, argv in steps:
        cli(*argv, "--seed", 11, "--report", r / f"{name}.csv")
    return {p.name: p.read_bytes() for p in sorted(r.iterdir())}


def test_8_determinism(tmp_path, verdict):
    t0 = time.perf_counter()
    a = _full_pipeline(tmp_path / "a")
    b = _full_pipeline(tmp_path / "b")
    elapsed = time.perf_counter() - t0
    differing = sorted(k for k in a if a[k] != b.get(k))
    ok = a.keys() == b.keys() and not differing
    verdict(8, "two identical pipeline runs give identical reports", ok,
            f"{len(a)} reports compared, differing {differing}, {elapsed:.0f}s")
    assert ok
