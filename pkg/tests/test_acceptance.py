"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they
complete. Everything here is oracle- or property-based on synthetic data;
tolerances are pinned in the asserts.
"""

from __future__ import annotations

import json
import math
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from phoneval.abx import ACROSS, WITHIN, abx_score, abx_summary
from phoneval.assignment import one_to_one
from phoneval.corpus import load_manifest
from phoneval.framesync import ContingencyTable
from phoneval.metrics import edit_alignment, match_boundaries, pnmi, segmentation_scores
from phoneval.runner import evaluate
from phoneval.synth import ChannelSpec, oracle_assignment, oracle_match, write_dataset

from conftest import make_inventory
from test_abx import _cluster_setup
from test_metrics_per import dp_distance
from test_metrics_pnmi import naive_pnmi_float, product_table, relabel_table

_SUITE_START = time.perf_counter()
REPO_ROOT = Path(__file__).resolve().parent.parent


@contextmanager
def criterion(num: int, desc: str):
    try:
        yield
    except BaseException:
        print(f"\n[criterion {num:2d}] FAIL - {desc}")
        raise
    print(f"\n[criterion {num:2d}] PASS - {desc}")


def run_cli(*argv):
    return subprocess.run([sys.executable, "-m", "phoneval", *map(str, argv)],
                          capture_output=True, text=True)


@pytest.fixture(scope="module")
def noiseless_cli_dataset(tmp_path_factory):
    """>= 100 utterances, zero noise, generated through the CLI itself."""
    root = tmp_path_factory.mktemp("accept_noiseless")
    from phoneval.inventory import write_inventory
    write_inventory(make_inventory("abcdefgh"), root / "inv.tsv")
    r = run_cli("synth-gen", "--inventory", root / "inv.tsv", "--out-dir", root / "data",
                "--utterances", 120, "--seed", 101, "--units-per-phone", 2)
    assert r.returncode == 0, r.stderr
    return root / "data"


def test_criterion_1_one_to_one_solver_exactness():
    rng = np.random.default_rng(1001)
    with criterion(1, "one-to-one solver objective equals brute-force enumeration "
                      "on 500 random tables (side <= 7) in < 10 s"):
        start = time.perf_counter()
        for _ in range(500):
            side = int(rng.integers(2, 8))
            counts = rng.integers(0, 25, size=(side, side))
            table = ContingencyTable(counts)
            solver = one_to_one(table)
            best, maps = oracle_assignment(table)
            assert solver.objective_counts == best
            assert np.array_equal(solver.map, maps[0])  # lex-smallest optimum
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"took {elapsed:.1f} s"


def test_criterion_2_pnmi_formula_equivalence():
    rng = np.random.default_rng(1002)
    with criterion(2, "PNMI matches the naive double-loop formula on 1000 tables "
                      "(1e-10); exactly 1 on relabelings, 0 on product tables (1e-12)"):
        for _ in range(1000):
            counts = rng.integers(0, 30, size=(int(rng.integers(2, 8)),
                                               int(rng.integers(2, 12))))
            counts[0, 0] += 1
            counts[1, min(1, counts.shape[1] - 1)] += 1
            value = pnmi(ContingencyTable(counts))
            assert abs(value - naive_pnmi_float(counts)) < 1e-10
        for _ in range(50):
            assert abs(pnmi(ContingencyTable(relabel_table(rng))) - 1.0) < 1e-12
            assert abs(pnmi(ContingencyTable(product_table(rng)))) < 1e-12


def test_criterion_3_per_oracle():
    rng = np.random.default_rng(1003)
    with criterion(3, "edit distance equals the quadratic DP oracle on 1000 pairs "
                      "and S+D+I always equals the distance"):
        for _ in range(1000):
            a = rng.integers(0, 40, size=int(rng.integers(0, 21))).tolist()
            b = rng.integers(0, 40, size=int(rng.integers(0, 21))).tolist()
            breakdown, _ = edit_alignment(a, b)
            oracle = dp_distance(a, b)
            assert breakdown.edits == oracle
            assert (breakdown.substitutions + breakdown.deletions
                    + breakdown.insertions) == oracle


def test_criterion_4_boundary_matching():
    rng = np.random.default_rng(1004)
    with criterion(4, "greedy boundary hits equal the exhaustive matching oracle on "
                      "1000 instances incl. midpoint-split windows; worked example = 1 hit"):
        assert match_boundaries([100_000, 130_000], [112_000]) == 1
        for _ in range(1000):
            gold = sorted(rng.choice(1500, size=int(rng.integers(0, 11)),
                                     replace=False).tolist())
            pred = sorted(rng.choice(1500, size=int(rng.integers(0, 11)),
                                     replace=False).tolist())
            gold = [t * 1000 for t in gold]
            pred = [t * 1000 for t in pred]
            assert match_boundaries(gold, pred) == oracle_match(gold, pred)


def test_criterion_5_end_to_end_identity(noiseless_cli_dataset, tmp_path):
    with criterion(5, "noiseless corpus (120 utterances) through the full CLI gives "
                      "PNMI 1.000, PER 0.00, F1 100.00, R-value 100.00"):
        out = tmp_path / "report.json"
        r = run_cli("evaluate", "--manifest", noiseless_cli_dataset / "manifest.txt",
                    "--out", out)
        assert r.returncode == 0, r.stderr
        payload = json.loads(out.read_text())
        assert payload["pnmi"] == 1.0
        assert payload["per"] == 0.0
        assert payload["f1"] == 100.0
        assert payload["r_value"] == 100.0


def test_criterion_6_planted_noise_recovery(tmp_path):
    with criterion(6, "substitution channel at 0.2 over >= 5000 segments: PER within "
                      "±0.03 of the planted expectation, confusion rows within 1% abs"):
        from phoneval.metrics import class_confusion, collapse, per_corpus
        from phoneval.assignment import apply_corpus, many_to_one
        from phoneval.framesync import build_contingency, gold_streams
        from phoneval.synth import generate

        inv = make_inventory("abcdefghijklmnop")
        spec = ChannelSpec(inventory=inv, substitution_rate=0.2, seed=1006)
        gold, units, record = generate(spec, 600)
        assert record.segments >= 5000
        table = build_contingency(gold, units, inv, spec.vocab_size)
        assigned = apply_corpus(many_to_one(table), units)
        streams = gold_streams(gold, units, inv)
        sil = inv.silence_index
        pairs = [(collapse(streams[u], sil), collapse(assigned[u], sil))
                 for u in sorted(streams)]
        total, subs = per_corpus(pairs)
        assert abs(total.per - record.expected_per) <= 0.03
        assert abs(total.per - 0.2) <= 0.03
        recovered = class_confusion(subs, inv)
        gap = np.abs(recovered.rates() - record.confusion_rates()).max()
        assert gap <= 1.0, f"confusion rows off by {gap:.3f}%"


def test_criterion_7_r_value_regimes(tmp_path):
    with criterion(7, "pred-empty point gives R ~= 29.29 exactly; insertion rate 0.9 "
                      "drives R-value negative while F1 stays positive"):
        degenerate = segmentation_scores(hits=0, gold_count=9, pred_count=0)
        assert degenerate.r_value == pytest.approx((1 - math.sqrt(2) / 2) * 100,
                                                   abs=1e-9)
        spec = ChannelSpec(inventory=make_inventory(), insertion_rate=0.9, seed=1007,
                           min_duration=0.08, max_duration=0.3)
        write_dataset(tmp_path / "overseg", spec, 80)
        report, _ = evaluate(load_manifest(tmp_path / "overseg" / "manifest.txt"))
        d = report.to_dict()
        assert d["r_value"] < 0.0, d["r_value"]
        assert d["f1"] > 0.0, d["f1"]


def test_criterion_8_abx_sanity():
    rng = np.random.default_rng(1008)
    with criterion(8, "ABX: separated clusters 0.0%, identical 50.0%, random 50±3%, "
                      "summary is the exact mean of the conditions"):
        items, store = _cluster_setup(rng)
        assert abx_score(items, store, WITHIN).error_rate == 0.0
        assert abx_score(items, store, ACROSS).error_rate == 0.0

        items, store = _cluster_setup(rng, mode="identical")
        assert abx_score(items, store, WITHIN).error_rate == 50.0
        assert abx_score(items, store, ACROSS).error_rate == 50.0

        items, store = _cluster_setup(rng, n_per_speaker=25, speakers=("s1",),
                                      mode="random")
        within = abx_score(items, store, WITHIN, seed=1008)
        assert abs(within.error_rate - 50.0) < 3.0

        items, store = _cluster_setup(rng, n_per_speaker=5, mode="random")
        w = abx_score(items, store, WITHIN, seed=2)
        a = abx_score(items, store, ACROSS, seed=2)
        assert abx_summary(w.error_rate, a.error_rate) == pytest.approx(
            (w.error_rate + a.error_rate) / 2, abs=1e-12)


def test_criterion_9_thread_determinism(noiseless_cli_dataset, tmp_path):
    import os
    with criterion(9, "reports are byte-identical across --threads {1, 4, max}"):
        payloads = []
        for k, threads in enumerate((1, 4, os.cpu_count() or 8)):
            out = tmp_path / f"run{k}" / "report.json"
            out.parent.mkdir()
            r = run_cli("evaluate", "--manifest", noiseless_cli_dataset / "manifest.txt",
                        "--out", out, "--threads", threads)
            assert r.returncode == 0, r.stderr
            payloads.append(out.read_bytes()
                            + out.with_suffix(".assignment.tsv").read_bytes())
        assert payloads[0] == payloads[1] == payloads[2]


def test_criterion_10_vocabulary_fairness():
    with criterion(10, "many-to-one PER strictly improves through |U| in "
                       "{8, 64, 256, 1024} on a fixed corpus (demo script output)"):
        r = subprocess.run([sys.executable, str(REPO_ROOT / "scripts/vocab_fairness.py"),
                            "--utterances", "120"], capture_output=True, text=True)
        assert r.returncode == 0, r.stderr
        values = []
        for line in r.stdout.splitlines():
            parts = line.split()
            if len(parts) == 2 and parts[0] in {"8", "64", "256", "1024"}:
                values.append(float(parts[1]))
        assert len(values) == 4, r.stdout
        for bigger_vocab_per, smaller_vocab_per in zip(values[1:], values):
            assert bigger_vocab_per < smaller_vocab_per, values


def test_zz_suite_runtime_budget():
    elapsed = time.perf_counter() - _SUITE_START
    print(f"\n[acceptance] total module time {elapsed:.1f} s")
    assert elapsed < 60.0, f"acceptance module took {elapsed:.1f} s"
