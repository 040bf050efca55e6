"""Unit-to-phoneme assignment for the two evaluation tracks.

Many-to-one maps every unit to the phone it co-occurs with most (ties go to
the earlier phone in canonical inventory order; never-observed units go to
silence). One-to-one finds the count-maximizing bijection between units and
phones-plus-silence; among all optimal bijections the lexicographically
smallest assignment vector (by unit id, then canonical phone order) is
returned, and the number of columns that had more than one optimal choice
is reported as ``ties``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .corpus import MANY_TO_ONE, ONE_TO_ONE, UnitCorpus
from .errors import ValidationError
from .framesync import ContingencyTable
from .inventory import PhonemeInventory


@dataclass
class Assignment:
    kind: str
    map: np.ndarray            # unit id -> phone index
    objective_counts: int      # sum of matched joint counts
    total_frames: int
    ties: int = 0

    @property
    def objective(self) -> float:
        """Sum of matched joint probabilities (counts / T)."""
        if self.total_frames == 0:
            return 0.0
        return self.objective_counts / self.total_frames


def many_to_one(table: ContingencyTable) -> Assignment:
    counts = table.counts
    total = table.total_frames
    if total < 1:
        raise ValidationError("empty contingency table (T = 0)")
    silence_index = counts.shape[0] - 1
    col_max = counts.max(axis=0)
    mapping = np.argmax(counts, axis=0)  # first max = canonical order
    zero_cols = counts.sum(axis=0) == 0
    mapping[zero_cols] = silence_index
    ties = int(((counts == col_max).sum(axis=0) >= 2)[~zero_cols].sum())
    return Assignment(kind=MANY_TO_ONE, map=mapping.astype(np.int64),
                      objective_counts=int(col_max.sum()), total_frames=total, ties=ties)


def _solve_max(matrix: np.ndarray) -> int:
    rows, cols = linear_sum_assignment(-matrix)
    return int(round(matrix[rows, cols].sum()))


def one_to_one(table: ContingencyTable) -> Assignment:
    """Optimal bijection by linear assignment, refined to the
    lexicographically smallest optimal assignment vector."""
    counts = table.counts
    n_labels, vocab = counts.shape
    if vocab != n_labels:
        raise ValidationError(
            f"one-to-one track needs exactly {n_labels} units "
            f"(phonemes + silence), table has {vocab} columns")
    total = table.total_frames
    if total < 1:
        raise ValidationError("empty contingency table (T = 0)")

    work = counts.astype(np.float64)
    penalty = float(counts.sum()) + 1.0
    best = _solve_max(work)

    # Fix columns left to right, always taking the smallest phone index that
    # still admits an optimal completion. Forbidding a cell subtracts enough
    # that any assignment through it scores strictly below the optimum, so
    # "still optimal" is an exact integer comparison.
    mapping = np.full(vocab, -1, dtype=np.int64)
    free_rows = sorted(range(n_labels))
    ties = 0
    for j in range(vocab):
        chosen = None
        saved = work[:, j].copy()
        extra_feasible = False
        for i in free_rows:
            work[:, j] = -penalty
            work[i, j] = saved[i]
            if _solve_max(work) == best:
                if chosen is None:
                    chosen = i
                else:
                    extra_feasible = True
                    break
        if chosen is None:
            raise ValidationError("assignment solver failed to complete a bijection")
        if extra_feasible:
            ties += 1
        mapping[j] = chosen
        free_rows.remove(chosen)
        work[:, j] = -penalty
        work[chosen, j] = saved[chosen]

    objective = int(counts[mapping, np.arange(vocab)].sum())
    assert objective == best
    return Assignment(kind=ONE_TO_ONE, map=mapping, objective_counts=objective,
                      total_frames=total, ties=ties)


def apply_assignment(assignment: Assignment, units: np.ndarray) -> np.ndarray:
    """Map one frame-synchronous unit stream to phone indices."""
    units = np.asarray(units)
    if units.size and int(units.max()) >= len(assignment.map):
        raise ValidationError(f"unit id {int(units.max())} not covered by the assignment "
                              f"(map has {len(assignment.map)} entries)")
    return assignment.map[units]


def apply_corpus(assignment: Assignment, units: UnitCorpus) -> dict[str, np.ndarray]:
    return {utt: apply_assignment(assignment, arr) for utt, arr in units.utterances.items()}


def write_assignment(assignment: Assignment, inv: PhonemeInventory, path: str | Path) -> None:
    lines = [
        f"# kind: {assignment.kind}",
        f"# objective: {assignment.objective:.6f}",
        f"# ties: {assignment.ties}",
    ]
    for unit_id, phone_index in enumerate(assignment.map.tolist()):
        lines.append(f"{unit_id}\t{inv.symbol(phone_index)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
