"""Synthetic corpora with planted ground truth, plus brute-force oracles.

The generator builds utterances of contiguous random phone segments and a
frame-synchronous unit stream in which every phone owns a dedicated block
of unit ids. Noise is injected per segment, never per frame:

* substitution: the whole segment emits a unit owned by another phone,
  costing exactly 1 S;
* deletion: the segment's frames adopt the neighboring run's unit,
  removing its token, costing exactly 1 D;
* insertion: the middle third of the segment flickers to a unit of a
  different phone, costing exactly 2 I (the spurious token plus the
  re-opened original).

Every target/flicker phone is chosen so tokens never merge with a
neighbor, and ops that would interact locally (a deletion next to a
flicker, a deletion chain closing the gap between two equal phones) are
skipped or canceled so each applied op keeps its nominal edit cost. The
planted record stores exactly what was applied, which makes its expected
PER analytically checkable: the measured corpus distance never exceeds the
planted count, is provably equal for insertion-only channels, and in
practice equals it elsewhere except when independently drawn substitution
targets happen to rebuild a shifted copy of the gold sequence (a cheaper
alignment then genuinely exists; at the benchmark-style rates this stays
far inside the acceptance tolerances).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .corpus import (MANY_TO_ONE, ONE_TO_ONE, US, Manifest, PhoneCorpus, PhoneSegment,
                     UnitCorpus, Utterance, write_gold, write_manifest, write_units)
from .errors import ValidationError
from .framesync import ContingencyTable, expected_frames, frame_range_for_interval
from .inventory import CLASS_ORDER, PhonemeInventory, write_inventory
from .metrics import N_CLASSES

_CLASS_INDEX = {cls: k for k, cls in enumerate(CLASS_ORDER)}


@dataclass
class ChannelSpec:
    inventory: PhonemeInventory
    units_per_phone: int = 1
    substitution_rate: float = 0.0
    deletion_rate: float = 0.0
    insertion_rate: float = 0.0
    min_duration: float = 0.06
    max_duration: float = 0.24
    frame_rate: int = 50
    seed: int = 0
    segments_per_utterance: tuple[int, int] = (6, 12)
    n_speakers: int = 4

    def __post_init__(self):
        for name in ("substitution_rate", "deletion_rate", "insertion_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise ValidationError(f"{name} must be in [0, 1), got {rate}")
        if self.substitution_rate + self.deletion_rate + self.insertion_rate > 1.0:
            raise ValidationError("noise rates must sum to at most 1")
        if self.min_duration > self.max_duration:
            raise ValidationError("min_duration > max_duration")
        if self.min_duration * self.frame_rate < 1.0:
            raise ValidationError("min_duration must cover at least one frame")
        if self.units_per_phone < 1:
            raise ValidationError("units_per_phone must be >= 1")
        if self.substitution_rate > 0 and len(self.inventory) < 5:
            raise ValidationError("substitution noise needs at least 5 phonemes")
        lo, hi = self.segments_per_utterance
        if lo < 1 or hi < lo:
            raise ValidationError("bad segments_per_utterance range")

    @property
    def vocab_size(self) -> int:
        return self.inventory.n_labels * self.units_per_phone


@dataclass
class PlantedRecord:
    """What the channel actually injected, for exact expectations."""

    ownership: dict[int, str]       # unit id -> owning phone symbol
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0             # edit-op count (2 per flicker event)
    insertion_events: int = 0
    gold_tokens: int = 0
    segments: int = 0
    utterances: int = 0
    seed: int = 0
    confusion_counts: np.ndarray = field(
        default_factory=lambda: np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64))

    @property
    def expected_per(self) -> float:
        return (self.substitutions + self.deletions + self.insertions) / self.gold_tokens

    def confusion_rates(self) -> np.ndarray:
        sup = self.confusion_counts.sum(axis=1)
        out = np.zeros_like(self.confusion_counts, dtype=np.float64)
        nz = sup > 0
        out[nz] = self.confusion_counts[nz] / sup[nz, None] * 100.0
        return out

    def to_dict(self) -> dict:
        return {
            "ownership": {str(k): v for k, v in sorted(self.ownership.items())},
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "insertion_events": self.insertion_events,
            "gold_tokens": self.gold_tokens,
            "segments": self.segments,
            "utterances": self.utterances,
            "seed": self.seed,
            "expected_per": self.expected_per,
            "confusion_counts": self.confusion_counts.tolist(),
        }


def _draw_phones(rng: np.random.Generator, inv: PhonemeInventory, count: int) -> list[int]:
    """Phone indices with p[i] distinct from the previous two, so collapsed
    gold tokens equal segments and deletion merges never cascade."""
    n = len(inv)
    phones: list[int] = []
    for _ in range(count):
        while True:
            p = int(rng.integers(0, n))
            if (not phones or p != phones[-1]) and (len(phones) < 2 or p != phones[-2]):
                phones.append(p)
                break
    return phones


def generate(spec: ChannelSpec, utterances: int) -> tuple[PhoneCorpus, UnitCorpus, PlantedRecord]:
    rng = np.random.default_rng(spec.seed)
    inv = spec.inventory
    rate = Fraction(spec.frame_rate)
    k = spec.units_per_phone
    min_us = int(round(spec.min_duration * US))
    max_us = int(round(spec.max_duration * US))
    sub_r, del_r, ins_r = spec.substitution_rate, spec.deletion_rate, spec.insertion_rate

    record = PlantedRecord(ownership={p * k + r: inv.symbol(p)
                                      for p in range(inv.n_labels) for r in range(k)},
                           seed=spec.seed, utterances=utterances)
    gold_utts: dict[str, Utterance] = {}
    unit_utts: dict[str, np.ndarray] = {}

    for u in range(utterances):
        utt_id = f"utt{u:05d}"
        speaker = f"spk{u % spec.n_speakers:02d}"
        lo, hi = spec.segments_per_utterance
        n_segs = int(rng.integers(lo, hi + 1))
        phones = _draw_phones(rng, inv, n_segs)
        durations = rng.integers(min_us, max_us + 1, size=n_segs)

        segments = []
        onset = 0
        for p, dur in zip(phones, durations.tolist()):
            segments.append(PhoneSegment(phone=inv.symbol(p), onset_us=onset,
                                         offset_us=onset + dur))
            onset += dur
        utt = Utterance(speaker=speaker, segments=tuple(segments), duration_us=onset)
        gold_utts[utt_id] = utt

        n_frames = expected_frames(onset, rate)
        frame_ranges = [frame_range_for_interval(s.onset_us, s.offset_us, rate)
                        for s in segments]

        base_units = [p * k + int(rng.integers(0, k)) for p in phones]
        # runs[i]: list of (unit, f0, f1) emitted for segment i; None marks a
        # leading deletion still waiting for a right neighbor to adopt from.
        runs: list[list[tuple[int, int, int]] | None] = [None] * n_segs
        kinds = ["keep"] * n_segs
        record.segments += n_segs

        def cancel_deletion_chain(j):
            """Convert the deletion chain immediately left of segment j back
            to kept segments (a chain whose carrier phone equals phones[j]
            would otherwise fuse with segment j's token, costing an edit
            more than planted)."""
            i = j - 1
            while i >= 0 and kinds[i] == "del":
                runs[i] = [(base_units[i], *frame_ranges[i])]
                kinds[i] = "keep"
                record.deletions -= 1
                i -= 1

        for i, (p, (f0, f1)) in enumerate(zip(phones, frame_ranges)):
            if i and kinds[i - 1] == "del" and runs[i - 1][-1][0] // k == p:
                cancel_deletion_chain(i)
            left_unit = runs[i - 1][-1][0] if i and runs[i - 1] else None
            draw = rng.random()
            if draw < sub_r:
                # The target must differ from both gold neighbors and from
                # the run to the left, so no token merges away or gets
                # absorbed by a cheaper alignment.
                excluded = {p, phones[i - 1] if i else -1,
                            phones[i + 1] if i + 1 < n_segs else -1}
                if left_unit is not None:
                    excluded.add(left_unit // k)
                choices = [q for q in range(len(inv)) if q not in excluded]
                q = int(choices[int(rng.integers(0, len(choices)))])
                runs[i] = [(q * k + int(rng.integers(0, k)), f0, f1)]
                kinds[i] = "sub"
                record.substitutions += 1
                record.confusion_counts[_CLASS_INDEX[inv.class_of_index(p)],
                                        _CLASS_INDEX[inv.class_of_index(q)]] += 1
            elif draw < sub_r + del_r:
                # Adopt the run to the left so the token vanishes. Skipped
                # after a flicker: the alignment could re-match around the
                # spurious token below the planted cost. Deletions at the
                # utterance start stay pending until a survivor exists.
                if i and runs[i - 1] is not None and kinds[i - 1] == "flicker":
                    runs[i] = [(base_units[i], f0, f1)]
                elif left_unit is not None:
                    runs[i] = [(left_unit, f0, f1)]
                    kinds[i] = "del"
                    record.deletions += 1
            elif (draw < sub_r + del_r + ins_r and f1 - f0 >= 3
                  and not (i and kinds[i - 1] == "del")):
                # Spurious token inside the segment: [p | q | p]. q must
                # differ from both gold neighbors, and the left neighbor
                # must not have been deleted; either would open an
                # alignment cheaper than the planted cost.
                cut1 = f0 + (f1 - f0) // 3
                cut2 = f0 + 2 * (f1 - f0) // 3
                excluded = {p, phones[i - 1] if i else -1,
                            phones[i + 1] if i + 1 < n_segs else -1}
                others = [q for q in range(len(inv)) if q not in excluded]
                q = int(others[int(rng.integers(0, len(others)))])
                runs[i] = [(base_units[i], f0, cut1),
                           (q * k + int(rng.integers(0, k)), cut1, cut2),
                           (base_units[i], cut2, f1)]
                kinds[i] = "flicker"
                record.insertions += 2
                record.insertion_events += 1
            else:
                runs[i] = [(base_units[i], f0, f1)]

        # Utterance-leading deletions adopt the first survivor to the
        # right, but only a plain kept one: vanishing into an edited token
        # would open alignments cheaper than the planted count.
        pending = [i for i in range(n_segs) if runs[i] is None]
        for i in pending:
            survivor = next((r for r in range(i + 1, n_segs)
                             if runs[r] is not None), None)
            f0, f1 = frame_ranges[i]
            if survivor is not None and kinds[survivor] == "keep":
                runs[i] = [(runs[survivor][0][0], f0, f1)]
                kinds[i] = "del"
                record.deletions += 1
            else:
                runs[i] = [(base_units[i], f0, f1)]

        stream = np.empty(n_frames, dtype=np.int64)
        for seg_runs in runs:
            for unit, f0, f1 in seg_runs:
                stream[f0:min(f1, n_frames)] = unit
        unit_utts[utt_id] = stream
        record.gold_tokens += n_segs

    gold = PhoneCorpus(utterances=gold_utts)
    units = UnitCorpus(frame_rate=rate, utterances=unit_utts)
    return gold, units, record


def write_dataset(out_dir: str | Path, spec: ChannelSpec, utterances: int,
                  track: str = MANY_TO_ONE, split: str = "dev",
                  language: str | None = None) -> Manifest:
    """Generate and write a complete dataset: inventory, gold alignments,
    units, manifest, and the planted truth record."""
    if track == ONE_TO_ONE and spec.units_per_phone != 1:
        raise ValidationError("one-to-one datasets need units_per_phone = 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    gold, units, record = generate(spec, utterances)
    inv = spec.inventory
    language = language or inv.language
    write_inventory(inv, out_dir / "inventory.tsv")
    write_gold(gold, out_dir / "gold.tsv")
    write_units(units, out_dir / "units.txt")
    vocab = spec.vocab_size
    manifest = Manifest(language=language, track=track, vocab_size=vocab,
                        inventory=(out_dir / "inventory.tsv").resolve(),
                        gold=(out_dir / "gold.tsv").resolve(),
                        units=(out_dir / "units.txt").resolve(), split=split)
    write_manifest(manifest, out_dir / "manifest.txt")
    (out_dir / "planted.json").write_text(
        json.dumps(record.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


def generate_quantized(gold: PhoneCorpus, inv: PhonemeInventory, vocab_size: int,
                       spread: float, seed: int, frame_rate: int = 50) -> UnitCorpus:
    """Units from uniform quantization of a noisy scalar phone axis: each
    run of equal gold frames draws one position near its phone's slot and
    emits the bin index. Larger vocabularies give purer bins, demonstrating
    how an unconstrained many-to-one mapping improves with vocabulary size
    on the same corpus."""
    rng = np.random.default_rng(seed)
    rate = Fraction(frame_rate)
    n_labels = inv.n_labels
    unit_utts: dict[str, np.ndarray] = {}
    for utt_id in sorted(gold.utterances):
        utt = gold.utterances[utt_id]
        n_frames = expected_frames(utt.duration_us, rate)
        stream = np.full(n_frames, inv.silence_index, dtype=np.int64)
        for seg in utt.segments:
            f0, f1 = frame_range_for_interval(seg.onset_us, seg.offset_us, rate)
            stream[f0:min(f1, n_frames)] = inv.index(seg.phone)
        units = np.empty(n_frames, dtype=np.int64)
        start = 0
        for end in itertools.chain((np.nonzero(stream[1:] != stream[:-1])[0] + 1).tolist(),
                                   [n_frames]):
            if end > start:
                pos = (stream[start] + 0.5 + rng.normal(0.0, spread)) % n_labels
                units[start:end] = min(int(pos / n_labels * vocab_size), vocab_size - 1)
                start = end
        unit_utts[utt_id] = units
    return UnitCorpus(frame_rate=rate, utterances=unit_utts)


def oracle_assignment(table: ContingencyTable) -> tuple[int, list[np.ndarray]]:
    """Optimal bijections by exhaustive permutation enumeration.

    Returns the best total matched count and every optimal assignment
    vector (lexicographically sorted), for tie audits. Limited to tables
    of side <= 8."""
    counts = table.counts
    n_labels, vocab = counts.shape
    if vocab != n_labels:
        raise ValidationError("oracle needs a square table")
    if n_labels > 8:
        raise ValidationError("oracle limited to 8 phones+silence")
    perms = np.array(list(itertools.permutations(range(n_labels))), dtype=np.int64)
    values = counts[perms, np.arange(vocab)].sum(axis=1)
    best = int(values.max())
    return best, [perm for perm in perms[values == best]]


def oracle_match(gold_b: list[int], pred_b: list[int],
                 tolerance_us: int = 20_000) -> int:
    """Maximum one-to-one boundary matching by exhaustive search under the
    split-window feasibility rule. Limited to 12 boundaries per side.

    Windows are recomputed here from the definition (inclusive tolerance,
    overlap split at the boundary midpoint, left side keeping the midpoint
    microsecond) so this stays independent of the metrics implementation."""
    if len(gold_b) > 12 or len(pred_b) > 12:
        raise ValidationError("oracle limited to 12 boundaries per side")
    windows = []
    for t in gold_b:
        windows.append([t - tolerance_us, t + tolerance_us])
    for left, right, (ta, tb) in zip(windows, windows[1:], zip(gold_b, gold_b[1:])):
        if left[1] >= right[0]:
            left[1] = (ta + tb) // 2
            right[0] = (ta + tb) // 2 + 1

    def best(w: int, used: frozenset) -> int:
        if w == len(windows):
            return 0
        skip = best(w + 1, used)
        lo, hi = windows[w]
        take = 0
        for pi, t in enumerate(pred_b):
            if pi not in used and lo <= t <= hi:
                take = max(take, 1 + best(w + 1, used | {pi}))
        return max(skip, take)

    return best(0, frozenset())
