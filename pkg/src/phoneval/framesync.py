"""Synchronize gold phones onto the unit frame grid and tally joint counts.

A frame ``f`` at rate ``r`` Hz is labeled by the phone whose segment covers
the frame center ``(f + 0.5) / r``; uncovered centers are silence. Segment
membership is half-open ``[onset, offset)``, so a boundary that falls
exactly on a frame center assigns the frame to the segment starting there.
All boundary computations are exact integer arithmetic (microseconds and
rational frame rates), never floats.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .corpus import US, PhoneCorpus, UnitCorpus, Utterance, check_matching_utterances
from .errors import ValidationError
from .inventory import PhonemeInventory


@dataclass
class ContingencyTable:
    """Joint (phone, unit) frame counts: rows are canonical phones plus a
    final silence row, columns are unit ids."""

    counts: np.ndarray  # (n_phones + 1, vocab_size) int64

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2:
            raise ValidationError("contingency table must be 2-dimensional")
        if (self.counts < 0).any():
            raise ValidationError("contingency table has negative counts")

    @property
    def total_frames(self) -> int:
        return int(self.counts.sum())

    def phone_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def unit_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def _first_frame_at_or_after(time_us: int, rate: Fraction) -> int:
    """Smallest f whose center (f+0.5)/rate is >= time_us microseconds."""
    p, q = rate.numerator, rate.denominator
    # (2f+1) * q * US >= 2 * p * time_us
    num = 2 * p * time_us - q * US
    den = 2 * q * US
    return max(0, -(-num // den))


def frame_range_for_interval(onset_us: int, offset_us: int, rate: Fraction) -> tuple[int, int]:
    """Half-open frame index range whose centers fall inside [onset, offset)."""
    return _first_frame_at_or_after(onset_us, rate), _first_frame_at_or_after(offset_us, rate)


def expected_frames(duration_us: int, rate: Fraction) -> int:
    """Number of frame centers strictly before the utterance end."""
    return _first_frame_at_or_after(duration_us, rate)


def frame_label(utt: Utterance, frame_index: int, rate: Fraction | int,
                inv: PhonemeInventory) -> int:
    """Phone index of one frame; silence where no segment covers the center."""
    rate = Fraction(rate)
    if frame_index < 0 or frame_index >= expected_frames(utt.duration_us, rate):
        raise ValidationError(f"frame {frame_index} beyond utterance duration")
    for seg in utt.segments:
        f0, f1 = frame_range_for_interval(seg.onset_us, seg.offset_us, rate)
        if f0 <= frame_index < f1:
            return inv.index(seg.phone)
    return inv.silence_index


def phone_stream(utt: Utterance, n_frames: int, rate: Fraction,
                 inv: PhonemeInventory, utt_id: str = "?") -> np.ndarray:
    """Frame-synchronous phone indices for one utterance, adjusted to exactly
    ``n_frames`` frames. A one-frame disagreement with the gold duration is
    absorbed (extra frames are silence); anything larger is an error."""
    exp = expected_frames(utt.duration_us, rate)
    if abs(n_frames - exp) > 1:
        raise ValidationError(
            f"utterance {utt_id!r}: {n_frames} unit frames but gold duration implies {exp} "
            f"(difference beyond the 1-frame tolerance)")
    stream = np.full(n_frames, inv.silence_index, dtype=np.int64)
    for seg in utt.segments:
        f0, f1 = frame_range_for_interval(seg.onset_us, seg.offset_us, rate)
        f0, f1 = min(f0, n_frames), min(f1, n_frames)
        if f0 < f1:
            stream[f0:f1] = inv.index(seg.phone)
    return stream


def gold_streams(gold: PhoneCorpus, units: UnitCorpus,
                 inv: PhonemeInventory, threads: int = 1) -> dict[str, np.ndarray]:
    """Frame-level gold phone streams matching the unit streams' lengths."""
    check_matching_utterances(gold, units)
    ids = sorted(gold.utterances)

    def build(utt_id: str) -> np.ndarray:
        return phone_stream(gold.utterances[utt_id], len(units.utterances[utt_id]),
                            units.frame_rate, inv, utt_id)

    if threads > 1 and len(ids) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            streams = dict(zip(ids, pool.map(build, ids)))
    else:
        streams = {utt_id: build(utt_id) for utt_id in ids}
    return streams


def tally_utterance(stream: np.ndarray, units_arr: np.ndarray, n_labels: int,
                    vocab_size: int, utt_id: str = "?") -> ContingencyTable:
    if units_arr.size and int(units_arr.max()) >= vocab_size:
        raise ValidationError(f"utterance {utt_id!r}: unit id {int(units_arr.max())} "
                              f">= vocabulary size {vocab_size}")
    counts = np.zeros((n_labels, vocab_size), dtype=np.int64)
    np.add.at(counts, (stream, units_arr), 1)
    return ContingencyTable(counts)


def tally_corpus(streams: dict[str, np.ndarray], units: UnitCorpus, n_labels: int,
                 vocab_size: int) -> ContingencyTable:
    """Fold per-utterance (phone, unit) frame pairs into one table, in
    sorted utterance order (fully deterministic)."""
    counts = np.zeros((n_labels, vocab_size), dtype=np.int64)
    for utt_id in sorted(streams):
        arr = units.utterances[utt_id]
        if arr.size and int(arr.max()) >= vocab_size:
            raise ValidationError(f"utterance {utt_id!r}: unit id {int(arr.max())} "
                                  f">= vocabulary size {vocab_size}")
        np.add.at(counts, (streams[utt_id], arr), 1)
    return ContingencyTable(counts)


def build_contingency(gold: PhoneCorpus, units: UnitCorpus, inv: PhonemeInventory,
                      vocab_size: int, threads: int = 1) -> ContingencyTable:
    """Corpus-level joint counts of (phone, unit) over all frames."""
    streams = gold_streams(gold, units, inv, threads=threads)
    return tally_corpus(streams, units, inv.n_labels, vocab_size)


def merge(a: ContingencyTable, b: ContingencyTable) -> ContingencyTable:
    if a.counts.shape != b.counts.shape:
        raise ValidationError(f"cannot merge tables of shapes {a.counts.shape} "
                              f"and {b.counts.shape}")
    return ContingencyTable(a.counts + b.counts)


def write_table_tsv(table: ContingencyTable, inv: PhonemeInventory, path: str | Path) -> None:
    """Debug dump: phone row labels, unit column ids."""
    n_labels, vocab = table.counts.shape
    lines = ["phone\t" + "\t".join(str(j) for j in range(vocab))]
    for i in range(n_labels):
        lines.append(inv.symbol(i) + "\t" + "\t".join(map(str, table.counts[i].tolist())))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_table_tsv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Inverse of :func:`write_table_tsv`; returns (row labels, counts)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    labels, rows = [], []
    for line in lines[1:]:
        parts = line.split("\t")
        labels.append(parts[0])
        rows.append([int(x) for x in parts[1:]])
    return labels, np.asarray(rows, dtype=np.int64)
