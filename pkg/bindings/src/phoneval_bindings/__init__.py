"""Notebook-friendly bindings over the phoneval evaluation library.

Thin wrappers only: every computation delegates to the primary library, so
binding outputs match the CLI's JSON payloads field for field. Errors
surface as the same typed exceptions the CLI maps to exit codes
(ValidationError -> 1, OSError -> 2). The numeric kernels (NumPy/SciPy)
release the GIL internally during heavy sections; the wrappers add no
locking of their own.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from phoneval.abx import RepresentationStore, abx_report, extract_items
from phoneval.corpus import ONE_TO_ONE, TRACKS, Manifest
from phoneval.corpus import load_gold as _load_gold
from phoneval.corpus import load_units as _load_units
from phoneval.errors import PhonevalError, ValidationError
from phoneval.framesync import ContingencyTable
from phoneval.inventory import load_inventory, one_to_one_vocab_size
from phoneval.metrics import edit_alignment
from phoneval.metrics import pnmi as _pnmi
from phoneval.runner import evaluate as _evaluate

__all__ = ["evaluate", "pnmi", "per", "abx", "PhonevalError", "ValidationError"]

DEFAULT_MANY_TO_ONE_VOCAB = 256


def _require_file(path: str | Path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return path.resolve()


def evaluate(gold_path: str | Path, units_path: str | Path,
             inventory_path: str | Path, track: str,
             vocab_size: int | None = None, split: str = "dev",
             tolerance_ms: float = 20.0, threads: int = 1,
             abx_mode: str | None = None, abx_reps: str | Path | None = None,
             seed: int = 0, abx_strict: bool = False) -> dict:
    """Full evaluation over file paths; returns the mapping the CLI would
    write as report JSON (minus the assignment-dump file reference, since
    no files are written here)."""
    if track not in TRACKS:
        raise ValidationError(f"track must be one of {TRACKS}, got {track!r}")
    inventory_path = _require_file(inventory_path)
    inv = load_inventory(inventory_path)
    if vocab_size is None:
        vocab_size = (one_to_one_vocab_size(inv) if track == ONE_TO_ONE
                      else DEFAULT_MANY_TO_ONE_VOCAB)
    if track == ONE_TO_ONE and vocab_size != one_to_one_vocab_size(inv):
        raise ValidationError(f"one-to-one track requires vocab_size "
                              f"{one_to_one_vocab_size(inv)}, got {vocab_size}")
    manifest = Manifest(language=inv.language, track=track, vocab_size=vocab_size,
                        inventory=inventory_path, gold=_require_file(gold_path),
                        units=_require_file(units_path), split=split)
    report, _ = _evaluate(manifest, tolerance_us=int(round(tolerance_ms * 1000)),
                          threads=threads, abx_mode=abx_mode, abx_reps=abx_reps,
                          abx_seed=seed, abx_strict=abx_strict)
    return report.to_dict()


def pnmi(table) -> float:
    """PNMI of a 2-D integer contingency array (rows: phones + silence,
    columns: units)."""
    arr = np.asarray(table)
    if arr.ndim != 2:
        raise ValidationError(f"contingency table must be 2-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == np.floor(arr)):
            raise ValidationError("contingency table must hold integer counts")
        arr = arr.astype(np.int64)
    return _pnmi(ContingencyTable(arr))


def per(gold, hyp) -> dict:
    """Phone error rate of two token sequences, with the error breakdown."""
    breakdown, _ = edit_alignment(list(gold), list(hyp))
    return {
        "per": breakdown.per,
        "substitutions": breakdown.substitutions,
        "deletions": breakdown.deletions,
        "insertions": breakdown.insertions,
        "gold_length": breakdown.gold_length,
    }


def abx(gold_path: str | Path, inventory_path: str | Path, mode: str,
        units_path: str | Path | None = None, reps_dir: str | Path | None = None,
        cap: int = 5000, seed: int = 0, strict: bool = False) -> dict:
    """ABX discriminability payload, mirroring the `phoneval abx` subcommand."""
    inv = load_inventory(_require_file(inventory_path))
    gold = _load_gold(_require_file(gold_path), inv)
    items = extract_items(gold, inv)
    if mode == "discrete":
        if units_path is None:
            raise ValidationError("discrete ABX needs units_path")
        store = RepresentationStore.from_units(_load_units(_require_file(units_path)))
    elif mode == "continuous":
        if reps_dir is None:
            raise ValidationError("continuous ABX needs reps_dir")
        store = RepresentationStore.from_directory(reps_dir)
    else:
        raise ValidationError(f"mode must be 'continuous' or 'discrete', got {mode!r}")
    return abx_report(items, store, cap=cap, seed=seed, strict=strict)
