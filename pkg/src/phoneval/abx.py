"""ABX discriminability over continuous frame representations or discrete units.

An item is one gold phone occurrence together with its left/right context
phones (the triphone). For a triple (A, B, X) where A and X realize the
same triphone and B realizes a minimally contrasting one (same context,
different center), the triple scores 1 when X is closer to A than to B,
0.5 on ties, 0 otherwise. Directed cell scores are averaged over triples,
the two directions of a phone pair are averaged together, and the global
score is the unweighted mean over cells; the reported number is the error
rate (1 - score) in percent.

Speaker conditions: within (A, B, X share one speaker) and across (A and B
share a speaker, X comes from a different one).
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .corpus import PhoneCorpus, UnitCorpus, format_seconds, parse_seconds
from .errors import ValidationError
from .framesync import frame_range_for_interval
from .inventory import PhonemeInventory

WITHIN = "within"
ACROSS = "across"
DEFAULT_TRIPLE_CAP = 5000


@dataclass(frozen=True)
class AbxItem:
    utterance: str
    onset_us: int
    offset_us: int
    phone: str
    prev: str
    next: str
    speaker: str


def extract_items(gold: PhoneCorpus, inv: PhonemeInventory) -> list[AbxItem]:
    """One item per utterance-internal gold phone (both neighbor segments
    exist). A silence gap next to the center contributes a silence context
    label. Items are emitted in sorted utterance order."""
    items: list[AbxItem] = []
    for utt_id in sorted(gold.utterances):
        utt = gold.utterances[utt_id]
        segs = utt.segments
        for k in range(1, len(segs) - 1):
            left, mid, right = segs[k - 1], segs[k], segs[k + 1]
            prev = left.phone if left.offset_us == mid.onset_us else inv.silence
            nxt = right.phone if mid.offset_us == right.onset_us else inv.silence
            items.append(AbxItem(utterance=utt_id, onset_us=mid.onset_us,
                                 offset_us=mid.offset_us, phone=mid.phone,
                                 prev=prev, next=nxt, speaker=utt.speaker))
    return items


ITEM_HEADER = "#file\tonset\toffset\t#phone\tprev-phone\tnext-phone\tspeaker"


def write_items(items: list[AbxItem], path: str | Path) -> None:
    lines = [ITEM_HEADER]
    for it in items:
        lines.append(f"{it.utterance}\t{format_seconds(it.onset_us)}\t"
                     f"{format_seconds(it.offset_us)}\t{it.phone}\t{it.prev}\t"
                     f"{it.next}\t{it.speaker}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_items(path: str | Path) -> list[AbxItem]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split("\t") != ITEM_HEADER.split("\t"):
        raise ValidationError(f"{path}: bad or missing item header row")
    items = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 7:
            raise ValidationError(f"{path}:{lineno}: expected 7 columns")
        items.append(AbxItem(utterance=parts[0], onset_us=parse_seconds(parts[1]),
                             offset_us=parse_seconds(parts[2]), phone=parts[3],
                             prev=parts[4], next=parts[5], speaker=parts[6]))
    return items


@dataclass
class RepresentationStore:
    """Per-utterance representations: ``continuous`` holds (frames x dims)
    float matrices at a fixed frame rate, ``discrete`` holds integer unit
    streams (compared after run-length collapsing)."""

    kind: str
    frame_rate: Fraction
    data: dict[str, np.ndarray]

    @classmethod
    def from_units(cls, units: UnitCorpus) -> "RepresentationStore":
        return cls(kind="discrete", frame_rate=units.frame_rate, data=units.utterances)

    @classmethod
    def from_directory(cls, path: str | Path) -> "RepresentationStore":
        """Continuous representations: a directory of <utterance>.npy files
        plus meta.json declaring {"frame_rate": ..., "dims": ...}."""
        path = Path(path)
        meta_path = path / "meta.json"
        if not meta_path.is_file():
            raise ValidationError(f"{path}: missing meta.json sidecar")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        try:
            rate = Fraction(str(meta["frame_rate"]))
            dims = int(meta["dims"])
        except (KeyError, ValueError) as exc:
            raise ValidationError(f"{meta_path}: need frame_rate and dims: {exc}") from None
        data = {}
        for f in sorted(path.glob("*.npy")):
            arr = np.load(f)
            if arr.ndim != 2 or arr.shape[1] != dims:
                raise ValidationError(f"{f}: expected a (frames x {dims}) matrix, "
                                      f"got shape {arr.shape}")
            data[f.stem] = arr.astype(np.float64)
        if not data:
            raise ValidationError(f"{path}: no .npy representation files")
        return cls(kind="continuous", frame_rate=rate, data=data)

    def item_representation(self, item: AbxItem) -> np.ndarray:
        try:
            arr = self.data[item.utterance]
        except KeyError:
            raise ValidationError(f"no representation for utterance {item.utterance!r}") from None
        f0, f1 = frame_range_for_interval(item.onset_us, item.offset_us, self.frame_rate)
        f0, f1 = max(f0, 0), min(f1, len(arr))
        if f0 >= f1:
            # degenerate span: fall back to the frame nearest the midpoint
            mid = (item.onset_us + item.offset_us) / 2 / 1e6
            idx = int(round(mid * float(self.frame_rate) - 0.5))
            f0 = min(max(idx, 0), len(arr) - 1)
            f1 = f0 + 1
        sliced = arr[f0:f1]
        if self.kind == "discrete":
            return np.asarray(_collapse_units(sliced), dtype=np.int64)
        return sliced


def _collapse_units(seq) -> list[int]:
    out: list[int] = []
    prev = None
    for v in (int(x) for x in seq):
        if v != prev:
            out.append(v)
            prev = v
    return out


def _representation_kind(x: np.ndarray) -> str:
    x = np.asarray(x)
    if x.ndim == 2:
        return "continuous"
    if x.ndim == 1 and np.issubdtype(x.dtype, np.integer):
        return "discrete"
    raise ValidationError(f"cannot infer representation kind from shape {x.shape} "
                          f"dtype {x.dtype}")


def angular_distances(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pairwise angular distance arccos(cosine similarity)/pi between frames.

    Computed through the chord length of the normalized vectors
    (2*arcsin(|u-v|/2) equals arccos(u.v) on the unit sphere), which is
    exact for identical frames instead of amplifying dot-product rounding
    through arccos near 1. Zero-norm frames sit at distance 0.5 from
    everything (the cosine-zero convention)."""
    xn = np.linalg.norm(x, axis=1)
    yn = np.linalg.norm(y, axis=1)
    x_unit = np.divide(x, xn[:, None], out=np.zeros_like(x, dtype=np.float64),
                       where=xn[:, None] > 0)
    y_unit = np.divide(y, yn[:, None], out=np.zeros_like(y, dtype=np.float64),
                       where=yn[:, None] > 0)
    chord = np.linalg.norm(x_unit[:, None, :] - y_unit[None, :, :], axis=2)
    dist = 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0)) / np.pi
    zero = (xn == 0)[:, None] | (yn == 0)[None, :]
    dist[zero] = 0.5
    return dist


def dtw_distance(x: np.ndarray, y: np.ndarray) -> float:
    """DTW alignment cost under steps {(1,0),(0,1),(1,1)}, normalized by the
    number of cells on the path. Among minimal-cost paths the shortest one
    is used, which keeps the distance exactly symmetric."""
    if len(x) == 0 or len(y) == 0:
        raise ValidationError("empty representation")
    local = angular_distances(x, y)
    n, m = local.shape
    inf = np.inf
    cost = np.full((n + 1, m + 1), inf)
    length = np.zeros((n + 1, m + 1), dtype=np.int64)
    cost[0, 0] = 0.0
    for i in range(1, n + 1):
        row_local = local[i - 1]
        for j in range(1, m + 1):
            best_cost = cost[i - 1, j - 1]
            best_len = length[i - 1, j - 1]
            if cost[i - 1, j] < best_cost or (cost[i - 1, j] == best_cost
                                              and length[i - 1, j] < best_len):
                best_cost = cost[i - 1, j]
                best_len = length[i - 1, j]
            if cost[i, j - 1] < best_cost or (cost[i, j - 1] == best_cost
                                              and length[i, j - 1] < best_len):
                best_cost = cost[i, j - 1]
                best_len = length[i, j - 1]
            cost[i, j] = best_cost + row_local[j - 1]
            length[i, j] = best_len + 1
    return float(cost[n, m] / length[n, m])


def _levenshtein(a: list[int], b: list[int]) -> int:
    if not a:
        return len(b)
    prev = list(range(len(b) + 1))
    for i, av in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, bv in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (av != bv))
        prev = cur
    return prev[-1]


def discrete_distance(a, b, strict: bool = False) -> float:
    """Normalized edit distance between run-length-collapsed unit sequences;
    strict mode scores 0 for identical collapsed sequences and 1 otherwise."""
    ca, cb = _collapse_units(a), _collapse_units(b)
    if not ca or not cb:
        raise ValidationError("empty representation")
    if strict:
        return 0.0 if ca == cb else 1.0
    return _levenshtein(ca, cb) / max(len(ca), len(cb))


def distance(x, y, strict: bool = False) -> float:
    """Dispatch on representation kind: DTW/angular for 2-D float matrices,
    normalized edit distance for 1-D integer sequences."""
    kx, ky = _representation_kind(x), _representation_kind(y)
    if kx != ky:
        raise ValidationError(f"representation kind mismatch: {kx} vs {ky}")
    if kx == "continuous":
        return dtw_distance(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    return discrete_distance(x, y, strict=strict)


@dataclass
class AbxCell:
    a: str
    b: str
    prev: str
    next: str
    condition: str
    score: float
    n_triples: int


@dataclass
class AbxResult:
    condition: str
    score: float
    n_cells: int
    n_triples: int
    cells: list[AbxCell]

    @property
    def error_rate(self) -> float:
        """Percent; 0 is perfect discrimination, 50 is chance."""
        return (1.0 - self.score) * 100.0


def _cell_seed(seed: int, key: tuple) -> int:
    return (seed + zlib.crc32("|".join(map(str, key)).encode("utf-8"))) & 0x7FFFFFFF


def _triple_blocks(condition: str, by_speaker_a: dict, by_speaker_b: dict):
    """Enumerate (A-list, B-list, X-list, block size) groups for one directed
    cell. X always shares A's triphone; A/X identity pairs are excluded by
    construction (within: index skip; across: different speakers)."""
    speakers = sorted(by_speaker_a)
    if condition == WITHIN:
        for spk in speakers:
            a_items = by_speaker_a[spk]
            b_items = by_speaker_b.get(spk, [])
            if len(a_items) >= 2 and b_items:
                size = len(a_items) * (len(a_items) - 1) * len(b_items)
                yield a_items, b_items, a_items, size
    else:
        for spk_ab in speakers:
            a_items = by_speaker_a[spk_ab]
            b_items = by_speaker_b.get(spk_ab, [])
            if not a_items or not b_items:
                continue
            for spk_x in speakers:
                if spk_x == spk_ab:
                    continue
                x_items = by_speaker_a[spk_x]
                if x_items:
                    yield a_items, b_items, x_items, len(a_items) * len(b_items) * len(x_items)


def _decode_within(idx: int, na: int, nb: int) -> tuple[int, int, int]:
    ai, rest = divmod(idx, (na - 1) * nb)
    xi, bi = divmod(rest, nb)
    if xi >= ai:
        xi += 1  # skip A == X
    return ai, bi, xi


def _decode_across(idx: int, nb: int, nx: int) -> tuple[int, int, int]:
    ai, rest = divmod(idx, nb * nx)
    bi, xi = divmod(rest, nx)
    return ai, bi, xi


def abx_score(items: list[AbxItem], store: RepresentationStore, condition: str,
              cap: int = DEFAULT_TRIPLE_CAP, seed: int = 0,
              strict: bool = False) -> AbxResult:
    """Score all valid cells of one speaker condition.

    Per directed cell, triples are enumerated exhaustively up to ``cap`` and
    uniformly subsampled (seeded per cell) beyond it, so results do not
    depend on scheduling.
    """
    if condition not in (WITHIN, ACROSS):
        raise ValidationError(f"condition must be {WITHIN!r} or {ACROSS!r}")

    groups: dict[tuple, dict[str, list[int]]] = {}
    for idx, item in enumerate(items):
        key = (item.prev, item.next, item.phone)
        groups.setdefault(key, {}).setdefault(item.speaker, []).append(idx)

    reps: dict[int, np.ndarray] = {}

    def rep(i: int) -> np.ndarray:
        if i not in reps:
            reps[i] = store.item_representation(items[i])
        return reps[i]

    dist_cache: dict[tuple[int, int], float] = {}

    def pair_distance(i: int, j: int) -> float:
        key = (i, j) if i <= j else (j, i)
        if key not in dist_cache:
            if store.kind == "continuous":
                dist_cache[key] = dtw_distance(rep(i), rep(j))
            else:
                dist_cache[key] = discrete_distance(rep(i), rep(j), strict=strict)
        return dist_cache[key]

    contexts: dict[tuple, list[str]] = {}
    for (prev, nxt, phone) in groups:
        contexts.setdefault((prev, nxt), []).append(phone)

    directed: dict[tuple, tuple[float, int]] = {}
    for ctx in sorted(contexts):
        phones = sorted(set(contexts[ctx]))
        for a in phones:
            for b in phones:
                if a == b:
                    continue
                by_spk_a = groups[(ctx[0], ctx[1], a)]
                by_spk_b = groups.get((ctx[0], ctx[1], b))
                if not by_spk_b:
                    continue
                blocks = list(_triple_blocks(condition, by_spk_a, by_spk_b))
                total = sum(size for *_, size in blocks)
                if total == 0:
                    continue
                if total > cap:
                    rng = np.random.default_rng(_cell_seed(seed, (condition, ctx[0],
                                                                  ctx[1], a, b)))
                    chosen = np.sort(rng.choice(total, size=cap, replace=False))
                else:
                    chosen = np.arange(total)
                score_sum = 0.0
                offset = 0
                block_iter = iter(blocks)
                a_items = b_items = x_items = None
                block_size = 0
                for flat in chosen.tolist():
                    while flat >= offset + block_size:
                        offset += block_size
                        a_items, b_items, x_items, block_size = next(block_iter)
                    local = flat - offset
                    if condition == WITHIN:
                        ai, bi, xi = _decode_within(local, len(a_items), len(b_items))
                    else:
                        ai, bi, xi = _decode_across(local, len(b_items), len(x_items))
                    ia, ib, ix = a_items[ai], b_items[bi], x_items[xi]
                    d_ax = pair_distance(ia, ix)
                    d_bx = pair_distance(ib, ix)
                    if d_ax < d_bx:
                        score_sum += 1.0
                    elif d_ax == d_bx:
                        score_sum += 0.5
                directed[(ctx, a, b)] = (score_sum / len(chosen), len(chosen))

    if not directed:
        raise ValidationError(f"no valid ABX cells for condition {condition!r}")

    cells: list[AbxCell] = []
    seen: set[tuple] = set()
    for (ctx, a, b) in sorted(directed):
        pair_key = (ctx, *sorted((a, b)))
        if pair_key in seen:
            continue
        seen.add(pair_key)
        entries = [directed[(ctx, a, b)]]
        reverse = directed.get((ctx, b, a))
        if reverse is not None:
            entries.append(reverse)
        score = sum(s for s, _ in entries) / len(entries)
        n_triples = sum(n for _, n in entries)
        cells.append(AbxCell(a=min(a, b), b=max(a, b), prev=ctx[0], next=ctx[1],
                             condition=condition, score=score, n_triples=n_triples))

    global_score = sum(c.score for c in cells) / len(cells)
    return AbxResult(condition=condition, score=global_score, n_cells=len(cells),
                     n_triples=sum(c.n_triples for c in cells), cells=cells)


def abx_summary(within_error: float, across_error: float) -> float:
    """Headline ABX number: arithmetic mean of the two conditions' error rates."""
    return (within_error + across_error) / 2.0


SPEAKER_CONVENTION = "A and B share a speaker; X from a different speaker"


def abx_report(items: list[AbxItem], store: RepresentationStore,
               cap: int = DEFAULT_TRIPLE_CAP, seed: int = 0,
               strict: bool = False) -> dict:
    """Both conditions plus their summary, as the serializable payload used
    by the CLI, the evaluation report, and the bindings."""
    within = abx_score(items, store, WITHIN, cap=cap, seed=seed, strict=strict)
    across = abx_score(items, store, ACROSS, cap=cap, seed=seed, strict=strict)
    return {
        "mode": store.kind,
        "strict": strict,
        "seed": seed,
        "within": round(within.error_rate, 2),
        "across": round(across.error_rate, 2),
        "summary": round(abx_summary(within.error_rate, across.error_rate), 2),
        "cells_within": within.n_cells,
        "cells_across": across.n_cells,
        "triples_within": within.n_triples,
        "triples_across": across.n_triples,
        "convention": SPEAKER_CONVENTION,
    }
