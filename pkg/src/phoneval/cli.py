"""Command line interface.

Subcommands: evaluate, abx, aggregate, synth-gen, dump-assignment.
Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import abx as abx_mod
from .assignment import many_to_one, one_to_one, write_assignment
from .corpus import MANY_TO_ONE, ONE_TO_ONE, TRACKS, load_gold, load_manifest, load_units
from .errors import ValidationError
from .framesync import build_contingency
from .inventory import load_inventory
from .runner import aggregate, aggregate_csv, evaluate, load_reports, write_report
from .synth import ChannelSpec, write_dataset


def _add_evaluate(sub):
    p = sub.add_parser("evaluate", help="run the full evaluation for one manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="report JSON output path")
    p.add_argument("--tolerance-ms", type=float, default=20.0,
                   help="boundary matching tolerance in milliseconds")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--abx-mode", choices=["continuous", "discrete"], default=None,
                   help="also compute ABX from the manifest inputs")
    p.add_argument("--abx-reps", default=None,
                   help="directory of .npy representations (continuous ABX)")
    p.add_argument("--abx-strict", action="store_true",
                   help="discrete ABX scores 0/1 on collapsed-sequence identity")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-table", default=None,
                   help="also write the contingency table as TSV")
    return p


def _add_abx(sub):
    p = sub.add_parser("abx", help="standalone ABX discriminability")
    p.add_argument("--gold", required=True)
    p.add_argument("--inventory", required=True)
    p.add_argument("--units", default=None, help="units file (discrete mode)")
    p.add_argument("--reps", default=None, help=".npy directory (continuous mode)")
    p.add_argument("--mode", choices=["continuous", "discrete"], required=True)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=abx_mod.DEFAULT_TRIPLE_CAP)
    p.add_argument("--out", default=None, help="JSON output (default stdout)")
    return p


def _add_aggregate(sub):
    p = sub.add_parser("aggregate", help="average report metrics per split group")
    p.add_argument("--glob", required=True, help="glob pattern of report JSON files")
    p.add_argument("--group", action="append", required=True,
                   help="split group to aggregate (repeatable)")
    p.add_argument("--out", default=None, help="CSV output (default stdout)")
    return p


def _add_synth(sub):
    p = sub.add_parser("synth-gen", help="generate a synthetic dataset with planted truth")
    p.add_argument("--inventory", required=True, help="inventory file path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--utterances", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--units-per-phone", type=int, default=1)
    p.add_argument("--sub-rate", type=float, default=0.0)
    p.add_argument("--del-rate", type=float, default=0.0)
    p.add_argument("--ins-rate", type=float, default=0.0)
    p.add_argument("--frame-rate", type=int, default=50)
    p.add_argument("--min-dur", type=float, default=0.06)
    p.add_argument("--max-dur", type=float, default=0.24)
    p.add_argument("--track", choices=list(TRACKS), default=MANY_TO_ONE)
    p.add_argument("--split", default="dev")
    return p


def _add_dump(sub):
    p = sub.add_parser("dump-assignment", help="compute and dump the unit-to-phone map")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phoneval",
                                     description="Evaluate discrete speech units "
                                                 "against gold phone alignments.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_evaluate(sub)
    _add_abx(sub)
    _add_aggregate(sub)
    _add_synth(sub)
    _add_dump(sub)
    return parser


def _cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    report, assignment = evaluate(
        manifest,
        tolerance_us=int(round(args.tolerance_ms * 1000)),
        threads=args.threads,
        abx_mode=args.abx_mode,
        abx_reps=args.abx_reps,
        abx_seed=args.seed,
        abx_strict=args.abx_strict,
        dump_table=args.dump_table,
    )
    write_report(report, assignment, args.out, manifest)
    print(f"wrote {args.out}")
    return 0


def _cmd_abx(args) -> int:
    inv = load_inventory(args.inventory)
    gold = load_gold(args.gold, inv)
    items = abx_mod.extract_items(gold, inv)
    if args.mode == "discrete":
        if args.units is None:
            raise ValidationError("discrete ABX needs --units")
        store = abx_mod.RepresentationStore.from_units(load_units(args.units))
    else:
        if args.reps is None:
            raise ValidationError("continuous ABX needs --reps")
        store = abx_mod.RepresentationStore.from_directory(args.reps)
    payload = abx_mod.abx_report(items, store, cap=args.cap, seed=args.seed,
                                 strict=args.strict)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_aggregate(args) -> int:
    reports = load_reports(args.glob)
    rows = [aggregate(reports, group) for group in args.group]
    text = aggregate_csv(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_synth(args) -> int:
    inv = load_inventory(args.inventory)
    spec = ChannelSpec(inventory=inv, units_per_phone=args.units_per_phone,
                       substitution_rate=args.sub_rate, deletion_rate=args.del_rate,
                       insertion_rate=args.ins_rate, min_duration=args.min_dur,
                       max_duration=args.max_dur, frame_rate=args.frame_rate,
                       seed=args.seed)
    manifest = write_dataset(args.out_dir, spec, args.utterances,
                             track=args.track, split=args.split)
    print(f"wrote dataset under {args.out_dir} (vocab {manifest.vocab_size})")
    return 0


def _cmd_dump(args) -> int:
    manifest = load_manifest(args.manifest)
    inv = load_inventory(manifest.inventory)
    gold = load_gold(manifest.gold, inv)
    units = load_units(manifest.units)
    table = build_contingency(gold, units, inv, manifest.vocab_size)
    assignment = one_to_one(table) if manifest.track == ONE_TO_ONE else many_to_one(table)
    write_assignment(assignment, inv, args.out)
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "evaluate": _cmd_evaluate,
    "abx": _cmd_abx,
    "aggregate": _cmd_aggregate,
    "synth-gen": _cmd_synth,
    "dump-assignment": _cmd_dump,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
