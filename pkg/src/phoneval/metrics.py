"""Scoring: PNMI, PER with error breakdown, class confusion, boundary F1/R-value.

All corpus-level metrics are folds over per-utterance partial results with
exact integer accumulators, so they are invariant to utterance processing
order and parallel splitting.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .corpus import US, Utterance
from .errors import ValidationError
from .framesync import ContingencyTable
from .inventory import CLASS_ORDER, PhonemeInventory

#: boundary matching tolerance, inclusive (±20 ms)
DEFAULT_TOLERANCE_US = 20_000

N_CLASSES = len(CLASS_ORDER)


def pnmi(table: ContingencyTable) -> float:
    """Fraction of phone entropy explained by the units: I(p;u) / H(p).

    Zero cells contribute nothing; the ratio is independent of the log base.
    Log arguments are formed as exact integer ratios, so structurally
    independent tables come out exactly 0 and deterministic relabelings
    exactly 1 (up to the final correctly-rounded sums).
    """
    counts = table.counts
    total = table.total_frames
    if total < 1:
        raise ValidationError("empty contingency table (T = 0)")
    row = counts.sum(axis=1)
    col = counts.sum(axis=0)
    if int((row > 0).sum()) < 2:
        raise ValidationError("phone entropy is zero (fewer than two phones observed); "
                              "PNMI undefined")
    entropy_terms = [r / total * math.log(total / r) for r in row.tolist() if r > 0]
    h_phone = math.fsum(entropy_terms)

    mi_terms = []
    nz_rows, nz_cols = np.nonzero(counts)
    for i, j in zip(nz_rows.tolist(), nz_cols.tolist()):
        c = int(counts[i, j])
        mi_terms.append(c / total * math.log(c * total / (int(row[i]) * int(col[j]))))
    mi = math.fsum(mi_terms)

    ratio = mi / h_phone
    if not -1e-9 < ratio < 1 + 1e-9:
        raise AssertionError(f"PNMI {ratio} outside [0,1] beyond rounding noise")
    return min(max(ratio, 0.0), 1.0)


def collapse(stream, silence_index: int | None = None) -> list[int]:
    """Run-length merge a frame-synchronous label stream into a token sequence.

    With ``silence_index`` given, leading and trailing silence tokens are
    dropped while internal silence stays a token.
    """
    tokens = [key.item() if hasattr(key, "item") else key
              for key, _ in itertools.groupby(stream)]
    if silence_index is not None:
        if tokens and tokens[0] == silence_index:
            tokens = tokens[1:]
        if tokens and tokens[-1] == silence_index:
            tokens = tokens[:-1]
    return tokens


@dataclass
class PerBreakdown:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    gold_length: int = 0

    @property
    def edits(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def per(self) -> float:
        if self.gold_length == 0:
            raise ValidationError("PER undefined: corpus-level gold length is 0")
        return self.edits / self.gold_length

    def add(self, other: "PerBreakdown") -> None:
        self.substitutions += other.substitutions
        self.deletions += other.deletions
        self.insertions += other.insertions
        self.gold_length += other.gold_length


def edit_alignment(gold, hyp) -> tuple[PerBreakdown, list[tuple]]:
    """Minimal-cost alignment of two token sequences under unit edit costs.

    Returns the error breakdown plus the list of substituted (gold, hyp)
    token pairs from one optimal alignment. Among equal-cost backtrace
    steps the preference is deletion, then substitution/match, then
    insertion.
    """
    gold = list(gold)
    hyp = list(hyp)
    n, m = len(gold), len(hyp)
    dist = np.zeros((n + 1, m + 1), dtype=np.int64)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        gi = gold[i - 1]
        row = dist[i]
        prev = dist[i - 1]
        for j in range(1, m + 1):
            row[j] = min(prev[j] + 1,
                         prev[j - 1] + (gi != hyp[j - 1]),
                         row[j - 1] + 1)

    subs = deletions = insertions = 0
    sub_pairs: list[tuple] = []
    i, j = n, m
    while i > 0 or j > 0:
        here = dist[i, j]
        if i > 0 and dist[i - 1, j] + 1 == here:
            deletions += 1
            i -= 1
        elif i > 0 and j > 0 and dist[i - 1, j - 1] + (gold[i - 1] != hyp[j - 1]) == here:
            if gold[i - 1] != hyp[j - 1]:
                subs += 1
                sub_pairs.append((gold[i - 1], hyp[j - 1]))
            i -= 1
            j -= 1
        else:
            insertions += 1
            j -= 1
    breakdown = PerBreakdown(substitutions=subs, deletions=deletions,
                             insertions=insertions, gold_length=n)
    assert breakdown.edits == int(dist[n, m])
    return breakdown, sub_pairs


def per(gold, hyp) -> PerBreakdown:
    """Phone error rate of one sequence pair: (S + D + I) / len(gold)."""
    breakdown, _ = edit_alignment(gold, hyp)
    if breakdown.gold_length == 0:
        raise ValidationError("PER undefined: gold sequence is empty")
    return breakdown


def per_corpus(pairs) -> tuple[PerBreakdown, list[tuple]]:
    """Micro-averaged PER over (gold, hyp) sequence pairs: sum of edits over
    sum of gold lengths, plus all substitution pairs for confusion analysis."""
    total = PerBreakdown()
    all_subs: list[tuple] = []
    for gold, hyp in pairs:
        breakdown, sub_pairs = edit_alignment(gold, hyp)
        total.add(breakdown)
        all_subs.extend(sub_pairs)
    if total.gold_length == 0:
        raise ValidationError("PER undefined: corpus-level gold length is 0")
    return total, all_subs


@dataclass
class ClassConfusion:
    """Substitution counts between phoneme classes (silence included).

    Rows are the gold class, columns the predicted class; ``rates`` are
    row-normalized percentages. Rows with no substitutions have zero
    support and undefined rates (reported as zeros)."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros((N_CLASSES, N_CLASSES),
                                                                dtype=np.int64))

    @property
    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def rates(self) -> np.ndarray:
        sup = self.support
        out = np.zeros_like(self.counts, dtype=np.float64)
        nz = sup > 0
        out[nz] = self.counts[nz] / sup[nz, None] * 100.0
        return out

    def add(self, other: "ClassConfusion") -> None:
        self.counts += other.counts


_CLASS_INDEX = {cls: k for k, cls in enumerate(CLASS_ORDER)}


def class_confusion(sub_pairs, inv: PhonemeInventory) -> ClassConfusion:
    """Tally substituted (gold, predicted) phone-index pairs by class."""
    confusion = ClassConfusion()
    for gold_idx, hyp_idx in sub_pairs:
        g = _CLASS_INDEX[inv.class_of_index(int(gold_idx))]
        h = _CLASS_INDEX[inv.class_of_index(int(hyp_idx))]
        confusion.counts[g, h] += 1
    return confusion


def _round_div(num: int, den: int) -> int:
    return (2 * num + den) // (2 * den)


def stream_boundaries(stream, rate: Fraction) -> list[int]:
    """Label-change times of a frame stream, in microseconds. A change at
    frame f happens at the frame onset f/rate. Utterance edges excluded."""
    arr = np.asarray(stream)
    change = np.nonzero(arr[1:] != arr[:-1])[0] + 1
    p, q = rate.numerator, rate.denominator
    return [_round_div(int(f) * US * q, p) for f in change.tolist()]


def segment_boundaries(utt: Utterance) -> list[int]:
    """Gold segment edges in microseconds, utterance start/end excluded.
    Contiguous segments contribute a single boundary; silence gaps count
    on both sides."""
    times: list[int] = []
    for seg in utt.segments:
        for t in (seg.onset_us, seg.offset_us):
            if 0 < t < utt.duration_us and (not times or times[-1] != t):
                times.append(t)
    return times


def boundary_windows(gold_b: list[int], tolerance_us: int = DEFAULT_TOLERANCE_US,
                     ) -> list[tuple[int, int]]:
    """Inclusive matching window around each gold boundary; overlapping
    neighbors are split at the midpoint between the two boundaries (the
    left window keeps the midpoint microsecond)."""
    windows = [[t - tolerance_us, t + tolerance_us] for t in gold_b]
    for k in range(len(windows) - 1):
        if windows[k][1] >= windows[k + 1][0]:
            mid = (gold_b[k] + gold_b[k + 1]) // 2
            windows[k][1] = mid
            windows[k + 1][0] = mid + 1
    return [(lo, hi) for lo, hi in windows]


def _check_sorted(name: str, values: list[int]) -> None:
    for a, b in zip(values, values[1:]):
        if b <= a:
            raise ValidationError(f"{name} boundaries must be strictly increasing")


def match_boundaries(gold_b: list[int], pred_b: list[int],
                     tolerance_us: int = DEFAULT_TOLERANCE_US) -> int:
    """Number of gold boundaries with a predicted boundary inside their
    (split) window. Windows are pairwise disjoint after splitting, so each
    predicted boundary can serve at most one window and greedy counting is
    the maximum matching."""
    _check_sorted("gold", gold_b)
    _check_sorted("predicted", pred_b)
    windows = boundary_windows(gold_b, tolerance_us)
    hits = 0
    k = 0
    for lo, hi in windows:
        while k < len(pred_b) and pred_b[k] < lo:
            k += 1
        if k < len(pred_b) and pred_b[k] <= hi:
            hits += 1
            k += 1
    return hits


@dataclass
class BoundaryScore:
    hits: int
    gold_count: int
    pred_count: int

    def __post_init__(self):
        if self.gold_count == 0:
            raise ValidationError("segmentation scores undefined: no gold boundaries")
        if self.hits > min(self.gold_count, self.pred_count):
            raise ValidationError("hits exceed boundary counts")

    @property
    def precision(self) -> float:
        """Percentage; defined 0 when nothing was predicted."""
        if self.pred_count == 0:
            return 0.0
        return self.hits / self.pred_count * 100.0

    @property
    def recall(self) -> float:
        return self.hits / self.gold_count * 100.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        if p + r == 0:
            return 0.0
        return 2 * p * r / (p + r)

    @property
    def over_segmentation(self) -> float:
        """OS = pred/gold - 1 (fraction), equal to recall/precision - 1
        whenever the latter is defined."""
        return self.pred_count / self.gold_count - 1.0

    @property
    def r_value(self) -> float:
        """Segmentation quality that penalizes over-segmentation more than
        F1; a percentage that can go negative."""
        hr = self.hits / self.gold_count
        os_ = self.over_segmentation
        r1 = math.hypot(1.0 - hr, os_)
        r2 = (-os_ + hr - 1.0) / math.sqrt(2.0)
        return (1.0 - (abs(r1) + abs(r2)) / 2.0) * 100.0


def segmentation_scores(hits: int, gold_count: int, pred_count: int) -> BoundaryScore:
    return BoundaryScore(hits=hits, gold_count=gold_count, pred_count=pred_count)
