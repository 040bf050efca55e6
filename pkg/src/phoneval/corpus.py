"""Parsing and writing of gold alignments, unit transcriptions, and manifests.

File formats:

* gold alignment: UTF-8 TSV, one segment per line,
  ``utterance_id<TAB>speaker_id<TAB>phone<TAB>onset_sec<TAB>offset_sec``,
  sorted by utterance then onset. Stretches not covered by any segment are
  implicitly silence.
* units: a header line ``frame_rate: <Hz>`` followed by one line per
  utterance, ``utterance_id u1 u2 ... uT`` (space separated integers).
* manifest: ``key: value`` lines with the Manifest fields; relative paths
  resolve against the manifest's directory (or ``PHONEVAL_DATA_ROOT``).

All times are held internally as integer microseconds so comparisons are
exact.
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .inventory import PhonemeInventory, load_inventory, one_to_one_vocab_size

log = logging.getLogger(__name__)

US = 1_000_000

MANY_TO_ONE = "many-to-one"
ONE_TO_ONE = "one-to-one"
TRACKS = (MANY_TO_ONE, ONE_TO_ONE)

_SECONDS_RE = re.compile(r"^(\d+)(?:\.(\d+))?$")


def parse_seconds(text: str) -> int:
    """Parse a non-negative decimal seconds literal into microseconds.

    Exact up to six fractional digits; anything beyond is rounded half-up
    (microseconds are the storage resolution)."""
    m = _SECONDS_RE.match(text.strip())
    if m is None:
        raise ValidationError(f"bad time literal {text!r} (expected non-negative seconds)")
    whole, frac = m.group(1), m.group(2) or ""
    us = int(whole) * US + int(frac[:6].ljust(6, "0"))
    if len(frac) > 6 and frac[6] >= "5":
        us += 1
    return us


def format_seconds(us: int) -> str:
    return f"{us // US}.{us % US:06d}"


@dataclass(frozen=True)
class PhoneSegment:
    phone: str
    onset_us: int
    offset_us: int

    def __post_init__(self):
        if self.onset_us < 0:
            raise ValidationError(f"segment onset {self.onset_us} < 0")
        if self.offset_us <= self.onset_us:
            raise ValidationError(
                f"segment offset must exceed onset "
                f"({format_seconds(self.onset_us)} >= {format_seconds(self.offset_us)})")

    @property
    def onset(self) -> float:
        return self.onset_us / US

    @property
    def offset(self) -> float:
        return self.offset_us / US


@dataclass(frozen=True)
class Utterance:
    speaker: str
    segments: tuple[PhoneSegment, ...]
    duration_us: int

    def __post_init__(self):
        prev_off = -1
        for seg in self.segments:
            if seg.onset_us < prev_off:
                raise ValidationError(
                    f"overlapping/unsorted segments at {format_seconds(seg.onset_us)}")
            prev_off = seg.offset_us
        if self.segments and self.duration_us < self.segments[-1].offset_us:
            raise ValidationError("utterance duration shorter than last segment offset")


@dataclass
class PhoneCorpus:
    utterances: dict[str, Utterance]


@dataclass
class UnitCorpus:
    frame_rate: Fraction
    utterances: dict[str, np.ndarray]
    warnings: list[str] = field(default_factory=list)

    def max_unit(self) -> int:
        mx = -1
        for arr in self.utterances.values():
            if arr.size:
                mx = max(mx, int(arr.max()))
        return mx


@dataclass(frozen=True)
class Manifest:
    language: str
    track: str
    vocab_size: int
    inventory: Path
    gold: Path
    units: Path
    split: str = "dev"


def load_gold(path: str | Path, inv: PhonemeInventory) -> PhoneCorpus:
    path = Path(path)
    utterances: dict[str, Utterance] = {}
    cur_id = None
    cur_speaker = None
    cur_segments: list[PhoneSegment] = []

    def flush():
        if cur_id is None:
            return
        if cur_id in utterances:
            raise ValidationError(f"{path}: utterance {cur_id!r} appears in two separate blocks")
        utterances[cur_id] = Utterance(speaker=cur_speaker, segments=tuple(cur_segments),
                                       duration_us=cur_segments[-1].offset_us)

    with path.open(encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise ValidationError(f"{path}:{lineno}: expected 5 tab-separated fields, "
                                      f"got {len(parts)}")
            utt, speaker, phone, onset_s, offset_s = parts
            try:
                seg = PhoneSegment(phone=phone, onset_us=parse_seconds(onset_s),
                                   offset_us=parse_seconds(offset_s))
            except ValidationError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            if phone != inv.silence:
                inv.index(phone)  # raises on unknown symbols
            if utt != cur_id:
                flush()
                cur_id, cur_speaker, cur_segments = utt, speaker, []
            elif speaker != cur_speaker:
                raise ValidationError(f"{path}:{lineno}: utterance {utt!r} has two speakers "
                                      f"({cur_speaker!r}, {speaker!r})")
            if cur_segments and seg.onset_us < cur_segments[-1].offset_us:
                raise ValidationError(
                    f"{path}:{lineno}: segment overlaps previous "
                    f"(onset {onset_s} < previous offset "
                    f"{format_seconds(cur_segments[-1].offset_us)})")
            cur_segments.append(seg)
        flush()
    return PhoneCorpus(utterances=utterances)


def write_gold(corpus: PhoneCorpus, path: str | Path) -> None:
    lines = []
    for utt_id in sorted(corpus.utterances):
        utt = corpus.utterances[utt_id]
        for seg in utt.segments:
            lines.append(f"{utt_id}\t{utt.speaker}\t{seg.phone}\t"
                         f"{format_seconds(seg.onset_us)}\t{format_seconds(seg.offset_us)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_units(path: str | Path) -> UnitCorpus:
    path = Path(path)
    utterances: dict[str, np.ndarray] = {}
    warnings: list[str] = []
    frame_rate = None
    with path.open(encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if frame_rate is None:
                if not line.startswith("frame_rate:"):
                    raise ValidationError(f"{path}:{lineno}: missing 'frame_rate: <Hz>' header")
                value = line.split(":", 1)[1].strip()
                try:
                    frame_rate = Fraction(value)
                except (ValueError, ZeroDivisionError):
                    raise ValidationError(f"{path}:{lineno}: bad frame rate {value!r}") from None
                if frame_rate <= 0:
                    raise ValidationError(f"{path}:{lineno}: frame rate must be positive")
                continue
            tokens = line.split()
            utt = tokens[0]
            if utt in utterances:
                raise ValidationError(f"{path}:{lineno}: duplicate utterance id {utt!r}")
            units = np.empty(len(tokens) - 1, dtype=np.int64)
            for col, tok in enumerate(tokens[1:], start=2):
                try:
                    val = int(tok)
                except ValueError:
                    raise ValidationError(f"{path}:{lineno}: utterance {utt!r}, column {col}: "
                                          f"non-integer unit {tok!r}") from None
                if val < 0:
                    raise ValidationError(f"{path}:{lineno}: utterance {utt!r}, column {col}: "
                                          f"negative unit id {val}")
                units[col - 2] = val
            if units.size == 0:
                msg = f"{path}:{lineno}: utterance {utt!r} has 0 frames"
                warnings.append(msg)
                log.warning(msg)
            utterances[utt] = units
    if frame_rate is None:
        raise ValidationError(f"{path}: missing 'frame_rate: <Hz>' header")
    return UnitCorpus(frame_rate=frame_rate, utterances=utterances, warnings=warnings)


def _format_rate(rate: Fraction) -> str:
    if rate.denominator == 1:
        return str(rate.numerator)
    return str(float(rate))


def write_units(corpus: UnitCorpus, path: str | Path) -> None:
    lines = [f"frame_rate: {_format_rate(corpus.frame_rate)}"]
    for utt_id in sorted(corpus.utterances):
        arr = corpus.utterances[utt_id]
        lines.append(utt_id + ("" if arr.size == 0 else " " + " ".join(map(str, arr.tolist()))))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_MANIFEST_KEYS = {"language", "track", "vocab_size", "inventory", "gold", "units", "split"}


def load_manifest(path: str | Path, data_root: str | Path | None = None) -> Manifest:
    path = Path(path)
    raw: dict[str, str] = {}
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise ValidationError(f"{path}:{lineno}: expected 'key: value'")
            key, value = line.split(":", 1)
            key = key.strip()
            if key not in _MANIFEST_KEYS:
                raise ValidationError(f"{path}:{lineno}: unknown manifest key {key!r}")
            raw[key] = value.strip()
    missing = {"language", "track", "vocab_size", "inventory", "gold", "units"} - set(raw)
    if missing:
        raise ValidationError(f"{path}: missing manifest fields: {sorted(missing)}")
    track = raw["track"]
    if track not in TRACKS:
        raise ValidationError(f"{path}: track must be one of {TRACKS}, got {track!r}")
    try:
        vocab_size = int(raw["vocab_size"])
    except ValueError:
        raise ValidationError(f"{path}: vocab_size must be an integer") from None
    if vocab_size <= 0:
        raise ValidationError(f"{path}: vocab_size must be positive")

    if data_root is None:
        data_root = os.environ.get("PHONEVAL_DATA_ROOT")
    base = Path(data_root) if data_root else path.parent

    def resolve(p: str) -> Path:
        q = Path(p)
        return (q if q.is_absolute() else base / q).resolve()

    manifest = Manifest(language=raw["language"], track=track, vocab_size=vocab_size,
                        inventory=resolve(raw["inventory"]), gold=resolve(raw["gold"]),
                        units=resolve(raw["units"]), split=raw.get("split", "dev"))
    inv = load_inventory(manifest.inventory)
    if track == ONE_TO_ONE and vocab_size != one_to_one_vocab_size(inv):
        raise ValidationError(
            f"{path}: one-to-one track requires vocab_size "
            f"{one_to_one_vocab_size(inv)} (phonemes + silence), got {vocab_size}")
    return manifest


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    lines = [
        f"language: {manifest.language}",
        f"track: {manifest.track}",
        f"vocab_size: {manifest.vocab_size}",
        f"inventory: {manifest.inventory}",
        f"gold: {manifest.gold}",
        f"units: {manifest.units}",
        f"split: {manifest.split}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def diff_utterances(gold: PhoneCorpus, units: UnitCorpus) -> tuple[list[str], list[str]]:
    """Utterance ids missing on either side, each as a sorted complete list."""
    gold_ids = set(gold.utterances)
    unit_ids = set(units.utterances)
    return sorted(gold_ids - unit_ids), sorted(unit_ids - gold_ids)


def check_matching_utterances(gold: PhoneCorpus, units: UnitCorpus) -> None:
    missing_units, missing_gold = diff_utterances(gold, units)
    if missing_units or missing_gold:
        raise ValidationError(
            "utterance sets differ between gold and units; "
            f"missing in units: {missing_units}; missing in gold: {missing_gold}")
