from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from phoneval.corpus import PhoneCorpus, UnitCorpus
from phoneval.errors import ValidationError
from phoneval.framesync import (ContingencyTable, build_contingency, expected_frames,
                                frame_label, merge, phone_stream, read_table_tsv,
                                write_table_tsv)

from conftest import make_utterance

RATE = Fraction(50)


def scan_label(utt, frame, rate, inv):
    """Independent interval-scan oracle for the frame-center rule."""
    center_us = Fraction(2 * frame + 1, 2 * rate) * 1_000_000
    for seg in utt.segments:
        if seg.onset_us <= center_us < seg.offset_us:
            return inv.index(seg.phone)
    return inv.silence_index


def test_frame_label_center_inside(toy_inventory):
    utt = make_utterance([("a", 0.0, 0.10)])
    assert frame_label(utt, 0, RATE, toy_inventory) == toy_inventory.index("a")


def test_frame_label_gap_silence(toy_inventory):
    utt = make_utterance([("a", 0.0, 0.10), ("b", 0.2, 0.3)])
    # frame 7 center = 150 ms, inside the gap
    assert frame_label(utt, 7, RATE, toy_inventory) == toy_inventory.silence_index


def test_frame_label_beyond_duration(toy_inventory):
    utt = make_utterance([("a", 0.0, 0.10)])
    with pytest.raises(ValidationError, match="beyond"):
        frame_label(utt, 5, RATE, toy_inventory)


def test_boundary_exactly_on_center_randomized(rng, toy_inventory):
    # boundaries snapped to frame centers: the later segment owns the frame
    for _ in range(50):
        n_segs = int(rng.integers(2, 5))
        # boundaries on the center grid: center of frame f is (f+0.5)/50
        cuts = np.sort(rng.choice(np.arange(1, 40), size=n_segs - 1, replace=False))
        edges = [0, *((2 * c + 1) * 10_000 for c in cuts), 900_000]
        phones = [toy_inventory.phonemes[int(rng.integers(0, 4))] for _ in range(n_segs)]
        utt = make_utterance([(p, on / 1e6, off / 1e6)
                              for p, on, off in zip(phones, edges, edges[1:])])
        n = expected_frames(utt.duration_us, RATE)
        for f in range(n):
            assert frame_label(utt, f, RATE, toy_inventory) == \
                scan_label(utt, f, RATE, toy_inventory)


def test_phone_stream_matches_scan_oracle(rng, toy_inventory):
    for _ in range(30):
        n_segs = int(rng.integers(1, 6))
        edges = np.sort(rng.integers(0, 1_000_000, size=2 * n_segs))
        spec = []
        for k in range(n_segs):
            on, off = int(edges[2 * k]), int(edges[2 * k + 1])
            if off > on:
                spec.append((toy_inventory.phonemes[int(rng.integers(0, 8))],
                             on / 1e6, off / 1e6))
        if not spec:
            continue
        utt = make_utterance(spec)
        n = expected_frames(utt.duration_us, RATE)
        stream = phone_stream(utt, n, RATE, toy_inventory)
        for f in range(n):
            assert stream[f] == scan_label(utt, f, RATE, toy_inventory)


def test_fractional_frame_rate_exactness(toy_inventory):
    rate = Fraction(49, 2)  # 24.5 Hz
    utt = make_utterance([("a", 0.0, 1.0)])
    n = expected_frames(utt.duration_us, rate)
    stream = phone_stream(utt, n, rate, toy_inventory)
    for f in range(n):
        assert stream[f] == scan_label(utt, f, rate, toy_inventory)


def _corpus_pair(toy_inventory):
    gold = PhoneCorpus(utterances={
        "u1": make_utterance([("a", 0.0, 0.04), ("b", 0.04, 0.06)]),
        "u2": make_utterance([("a", 0.0, 0.02)]),
    })
    units = UnitCorpus(frame_rate=RATE, utterances={
        "u1": np.array([0, 0, 1]),
        "u2": np.array([0]),
    })
    return gold, units


def test_build_contingency_direct_tally(toy_inventory):
    gold, units = _corpus_pair(toy_inventory)
    table = build_contingency(gold, units, toy_inventory, vocab_size=2)
    a, b = toy_inventory.index("a"), toy_inventory.index("b")
    assert table.counts[a, 0] == 3
    assert table.counts[b, 1] == 1
    assert table.total_frames == 4


def test_contingency_against_per_frame_oracle(rng, toy_inventory):
    from phoneval.synth import ChannelSpec, generate
    spec = ChannelSpec(inventory=toy_inventory, units_per_phone=2,
                       substitution_rate=0.1, seed=11)
    gold, units, _ = generate(spec, 12)
    vocab = spec.vocab_size
    table = build_contingency(gold, units, toy_inventory, vocab)
    oracle = np.zeros_like(table.counts)
    for utt_id, arr in units.utterances.items():
        utt = gold.utterances[utt_id]
        for f, unit in enumerate(arr.tolist()):
            oracle[scan_label(utt, f, RATE, toy_inventory), unit] += 1
    assert np.array_equal(table.counts, oracle)


def test_zero_frame_utterance_contributes_nothing(toy_inventory):
    gold = PhoneCorpus(utterances={"u1": make_utterance([("a", 0.0, 0.01)])})
    units = UnitCorpus(frame_rate=RATE, utterances={"u1": np.array([], dtype=np.int64)})
    table = build_contingency(gold, units, toy_inventory, vocab_size=4)
    assert table.total_frames == 0


def test_mismatch_tolerance_one_frame(toy_inventory):
    gold = PhoneCorpus(utterances={"u1": make_utterance([("a", 0.0, 0.1)])})
    # expected 5 frames; 6 passes (extra = silence), 7 errors
    ok = UnitCorpus(frame_rate=RATE, utterances={"u1": np.zeros(6, dtype=np.int64)})
    table = build_contingency(gold, ok, toy_inventory, vocab_size=1)
    assert table.counts[toy_inventory.silence_index, 0] == 1
    bad = UnitCorpus(frame_rate=RATE, utterances={"u1": np.zeros(7, dtype=np.int64)})
    with pytest.raises(ValidationError, match="tolerance"):
        build_contingency(gold, bad, toy_inventory, vocab_size=1)


def test_unit_id_exceeding_vocab(toy_inventory):
    gold = PhoneCorpus(utterances={"u1": make_utterance([("a", 0.0, 0.1)])})
    units = UnitCorpus(frame_rate=RATE, utterances={"u1": np.array([0, 1, 2, 9, 0])})
    with pytest.raises(ValidationError, match="vocabulary"):
        build_contingency(gold, units, toy_inventory, vocab_size=4)


def test_mismatched_utterance_sets_listed(toy_inventory):
    gold = PhoneCorpus(utterances={"u1": make_utterance([("a", 0.0, 0.1)]),
                                   "u3": make_utterance([("a", 0.0, 0.1)])})
    units = UnitCorpus(frame_rate=RATE, utterances={"u1": np.zeros(5, dtype=np.int64),
                                                    "u2": np.zeros(5, dtype=np.int64)})
    with pytest.raises(ValidationError) as err:
        build_contingency(gold, units, toy_inventory, vocab_size=4)
    assert "u2" in str(err.value) and "u3" in str(err.value)


def test_merge_identity_commutativity_and_split(rng, toy_inventory):
    from phoneval.synth import ChannelSpec, generate
    spec = ChannelSpec(inventory=toy_inventory, units_per_phone=2, seed=5)
    gold, units, _ = generate(spec, 20)
    vocab = spec.vocab_size
    full = build_contingency(gold, units, toy_inventory, vocab)
    zero = ContingencyTable(np.zeros_like(full.counts))
    assert np.array_equal(merge(full, zero).counts, full.counts)

    ids = sorted(gold.utterances)
    rng.shuffle(ids)
    chunks = np.array_split(np.array(ids), 10)
    partials = []
    for chunk in chunks:
        sub_gold = PhoneCorpus(utterances={i: gold.utterances[i] for i in chunk})
        sub_units = UnitCorpus(frame_rate=units.frame_rate,
                               utterances={i: units.utterances[i] for i in chunk})
        partials.append(build_contingency(sub_gold, sub_units, toy_inventory, vocab))
    acc = partials[0]
    for part in partials[1:]:
        acc = merge(acc, part)
    assert np.array_equal(acc.counts, full.counts)
    assert np.array_equal(merge(partials[0], partials[1]).counts,
                          merge(partials[1], partials[0]).counts)
    with pytest.raises(ValidationError, match="merge"):
        merge(full, ContingencyTable(np.zeros((2, 2), dtype=np.int64)))


def test_threaded_build_bit_identical(toy_inventory):
    from phoneval.synth import ChannelSpec, generate
    spec = ChannelSpec(inventory=toy_inventory, units_per_phone=3, seed=9)
    gold, units, _ = generate(spec, 15)
    t1 = build_contingency(gold, units, toy_inventory, spec.vocab_size, threads=1)
    t4 = build_contingency(gold, units, toy_inventory, spec.vocab_size, threads=4)
    assert np.array_equal(t1.counts, t4.counts)


def test_table_tsv_roundtrip(tmp_path, toy_inventory):
    counts = np.arange(18).reshape(9, 2)
    table = ContingencyTable(counts)
    path = tmp_path / "table.tsv"
    write_table_tsv(table, toy_inventory, path)
    labels, back = read_table_tsv(path)
    assert labels[-1] == "SIL"
    assert np.array_equal(back, counts)
