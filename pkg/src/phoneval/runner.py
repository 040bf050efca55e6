"""Full evaluation pipeline and report emission.

``evaluate`` runs frame synchronization, the track's unit-to-phoneme
assignment, and all metrics over one manifest, producing an EvalReport.
Reports serialize to JSON with a pinned schema version; floating point
fields are rounded only at serialization (percent-scaled fields to 2
decimals, the pnmi ratio to 4), and nothing time- or host-dependent is
written, so identical inputs give byte-identical reports.
"""

from __future__ import annotations

import csv
import glob as globmod
import io
import json
from dataclasses import dataclass
from pathlib import Path

from . import abx as abx_mod
from .assignment import Assignment, apply_corpus, many_to_one, one_to_one, write_assignment
from .corpus import ONE_TO_ONE, Manifest, load_gold, load_units
from .errors import ValidationError
from .framesync import gold_streams, tally_corpus, write_table_tsv
from .inventory import CLASS_ORDER, load_inventory
from .metrics import (DEFAULT_TOLERANCE_US, class_confusion, collapse, match_boundaries,
                      per_corpus, pnmi, segmentation_scores, stream_boundaries)

SCHEMA_VERSION = 1
SOLVER_ID = "scipy-linear-sum-assignment+lex-tiebreak"


@dataclass
class EvalReport:
    language: str
    track: str
    vocab_size: int
    split: str
    pnmi: float
    per: float                     # percent
    per_breakdown: dict            # sub/del/ins counts + gold_length
    f1: float                      # percent
    r_value: float                 # percent
    precision: float
    recall: float
    confusion: dict
    assignment: dict
    metadata: dict
    abx: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "language": self.language,
            "track": self.track,
            "vocab_size": self.vocab_size,
            "split": self.split,
            "pnmi": round(self.pnmi, 4),
            "per": round(self.per, 2),
            "per_breakdown": self.per_breakdown,
            "f1": round(self.f1, 2),
            "r_value": round(self.r_value, 2),
            "precision": round(self.precision, 2),
            "recall": round(self.recall, 2),
            "confusion": self.confusion,
            "assignment": self.assignment,
            "metadata": self.metadata,
        }
        if self.abx is not None:
            out["abx"] = self.abx
        return out


def report_json_bytes(report: EvalReport) -> bytes:
    return (json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n").encode("utf-8")


def _confusion_payload(confusion) -> dict:
    rates = confusion.rates()
    return {
        "classes": [c.value for c in CLASS_ORDER],
        "rates": [[round(x, 2) for x in row] for row in rates.tolist()],
        "support": confusion.support.tolist(),
    }


def evaluate(manifest: Manifest, tolerance_us: int = DEFAULT_TOLERANCE_US,
             threads: int = 1, abx_mode: str | None = None,
             abx_reps: str | Path | None = None, abx_seed: int = 0,
             abx_cap: int = abx_mod.DEFAULT_TRIPLE_CAP,
             abx_strict: bool = False,
             dump_table: str | Path | None = None) -> tuple[EvalReport, Assignment]:
    inv = load_inventory(manifest.inventory)
    gold = load_gold(manifest.gold, inv)
    units = load_units(manifest.units)

    streams = gold_streams(gold, units, inv, threads=threads)
    table = tally_corpus(streams, units, inv.n_labels, manifest.vocab_size)
    if dump_table is not None:
        write_table_tsv(table, inv, dump_table)

    if manifest.track == ONE_TO_ONE:
        assignment = one_to_one(table)
    else:
        assignment = many_to_one(table)
    assigned = apply_corpus(assignment, units)

    pnmi_value = pnmi(table)

    pairs = []
    hits = gold_count = pred_count = 0
    sil = inv.silence_index
    for utt_id in sorted(streams):
        gold_stream = streams[utt_id]
        hyp_stream = assigned[utt_id]
        pairs.append((collapse(gold_stream, sil), collapse(hyp_stream, sil)))
        gold_b = stream_boundaries(gold_stream, units.frame_rate)
        pred_b = stream_boundaries(hyp_stream, units.frame_rate)
        hits += match_boundaries(gold_b, pred_b, tolerance_us)
        gold_count += len(gold_b)
        pred_count += len(pred_b)

    breakdown, sub_pairs = per_corpus(pairs)
    confusion = class_confusion(sub_pairs, inv)
    boundary = segmentation_scores(hits, gold_count, pred_count)

    abx_payload = None
    if abx_mode is not None:
        items = abx_mod.extract_items(gold, inv)
        if abx_mode == "discrete":
            store = abx_mod.RepresentationStore.from_units(units)
        elif abx_mode == "continuous":
            if abx_reps is None:
                raise ValidationError("continuous ABX needs a representations directory")
            store = abx_mod.RepresentationStore.from_directory(abx_reps)
        else:
            raise ValidationError(f"abx mode must be 'continuous' or 'discrete', "
                                  f"got {abx_mode!r}")
        abx_payload = abx_mod.abx_report(items, store, cap=abx_cap, seed=abx_seed,
                                         strict=abx_strict)

    report = EvalReport(
        language=manifest.language,
        track=manifest.track,
        vocab_size=manifest.vocab_size,
        split=manifest.split,
        pnmi=pnmi_value,
        per=breakdown.per * 100.0,
        per_breakdown={
            "sub": breakdown.substitutions,
            "del": breakdown.deletions,
            "ins": breakdown.insertions,
            "gold_length": breakdown.gold_length,
        },
        f1=boundary.f1,
        r_value=boundary.r_value,
        precision=boundary.precision,
        recall=boundary.recall,
        confusion=_confusion_payload(confusion),
        assignment={
            "kind": assignment.kind,
            "objective": round(assignment.objective, 6),
            "ties": assignment.ties,
        },
        metadata={
            "schema_version": SCHEMA_VERSION,
            "solver": SOLVER_ID,
            "tolerance_us": tolerance_us,
            "frame_rate": str(units.frame_rate),
            "total_frames": table.total_frames,
            "utterances": len(gold.utterances),
            "boundary_hits": hits,
            "gold_boundaries": gold_count,
            "pred_boundaries": pred_count,
            "per_aggregation": "micro (corpus-level sum of edits over sum of gold lengths)",
            "unit_warnings": len(units.warnings),
        },
        abx=abx_payload,
    )
    return report, assignment


def write_report(report: EvalReport, assignment: Assignment, out_path: str | Path,
                 manifest: Manifest) -> Path:
    """Write the report JSON plus the assignment TSV next to it; the report
    records the dump's filename."""
    out_path = Path(out_path)
    dump_path = out_path.with_suffix(".assignment.tsv")
    inv = load_inventory(manifest.inventory)
    write_assignment(assignment, inv, dump_path)
    report.assignment["dump"] = dump_path.name
    out_path.write_bytes(report_json_bytes(report))
    return dump_path


AGGREGATE_METRICS = ("per", "r_value", "f1", "pnmi")


def aggregate(reports: list[dict], group: str) -> dict:
    """Unweighted per-metric mean over the reports of one split group."""
    selected = [r for r in reports if r.get("split") == group]
    if not selected:
        raise ValidationError(f"no reports with split {group!r}")
    tracks = {r.get("track") for r in selected}
    if len(tracks) > 1:
        raise ValidationError(f"cannot aggregate mixed tracks: {sorted(tracks)}")
    row: dict = {
        "group": group,
        "track": tracks.pop(),
        "languages": len(selected),
    }
    for metric in AGGREGATE_METRICS:
        values = [r[metric] for r in selected]
        digits = 4 if metric == "pnmi" else 2
        row[metric] = round(sum(values) / len(values), digits)
    abx_values = [r["abx"]["summary"] for r in selected if r.get("abx")]
    row["abx"] = round(sum(abx_values) / len(abx_values), 2) if len(abx_values) == len(selected) else ""
    return row


def aggregate_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["group", "track", "languages",
                                             "per", "r_value", "f1", "pnmi", "abx"])
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def load_reports(pattern: str) -> list[dict]:
    paths = sorted(globmod.glob(pattern))
    if not paths:
        raise ValidationError(f"no report files match {pattern!r}")
    reports = []
    for p in paths:
        with open(p, encoding="utf-8") as f:
            reports.append(json.load(f))
    return reports
