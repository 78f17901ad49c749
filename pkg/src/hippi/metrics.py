"""Ground-truth scoring and cycle-consistency verification.

Matching quality is scored at the pair level: every unordered cross-object
point pair predicted as matching counts once, and it is a true positive
exactly when both points carry the same non-outlier ground-truth label.
Cycle consistency is checked directly on the integer match maps, so all
counts are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hippi.core import PairwiseMatchingSet, UniverseAssignment, expand


@dataclass(frozen=True)
class MatchReport:
    """Pair-level precision/recall/f-score plus consistency and runtime."""

    precision: float
    recall: float
    fscore: float
    true_positives: int
    false_positives: int
    false_negatives: int
    cycle_error: float = 0.0
    runtime_seconds: float = 0.0

    def __post_init__(self):
        for name in ("precision", "recall", "fscore", "cycle_error"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        for name in ("true_positives", "false_positives", "false_negatives"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.runtime_seconds < 0:
            raise ValueError("runtime_seconds must be non-negative")
        denom = self.precision + self.recall
        expected = 2.0 * self.precision * self.recall / denom if denom > 0 else 0.0
        if abs(self.fscore - expected) > 1e-9:
            raise ValueError("fscore does not match 2pr/(p+r)")

    @classmethod
    def from_counts(
        cls, tp: int, fp: int, fn: int, cycle_error: float = 0.0, runtime_seconds: float = 0.0
    ) -> "MatchReport":
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        denom = precision + recall
        f = 2.0 * precision * recall / denom if denom > 0 else 0.0
        return cls(
            precision=precision,
            recall=recall,
            fscore=f,
            true_positives=int(tp),
            false_positives=int(fp),
            false_negatives=int(fn),
            cycle_error=cycle_error,
            runtime_seconds=runtime_seconds,
        )


@dataclass(frozen=True)
class CycleReport:
    """Violation entry counts for the three consistency conditions.

    Each constraint instance is counted once: identity per object, symmetry
    per unordered object pair, transitivity per composition ``i -> j -> l``
    with ``i <= l`` (the reversed orientation is the same constraint,
    transposed).
    """

    identity: int
    symmetry: int
    transitivity: int

    @property
    def total(self) -> int:
        return self.identity + self.symmetry + self.transitivity

    @property
    def ok(self) -> bool:
        return self.total == 0


def _compose(first: np.ndarray, then: np.ndarray) -> np.ndarray:
    """Follow two match maps; any unmatched hop yields -1."""
    out = np.full(first.shape, -1, dtype=np.int64)
    hit = first >= 0
    out[hit] = then[first[hit]]
    return out


def _inverse(mp: np.ndarray, target_size: int) -> np.ndarray:
    inv = np.full(target_size, -1, dtype=np.int64)
    src = np.flatnonzero(mp >= 0)
    inv[mp[src]] = src
    return inv


def verify_cycle_consistency(x: PairwiseMatchingSet) -> CycleReport:
    """Count identity, symmetry and transitivity violations exactly."""
    k = x.k
    sizes = x.index.sizes
    identity = 0
    for i in range(k):
        mp = x.block_map(i, i)
        on_diagonal = mp == np.arange(sizes[i])
        # A row matched elsewhere contributes two wrong entries (the missing
        # diagonal one and the spurious one); an unmatched row just one.
        identity += int(np.sum(~on_diagonal & (mp >= 0)) * 2)
        identity += int(np.sum(~on_diagonal & (mp < 0)))
    symmetry = 0
    for i in range(k):
        for j in range(i, k):
            forward = x.block_map(i, j)
            backward = _inverse(x.block_map(j, i), sizes[i])
            ones_f = int(np.sum(forward >= 0))
            ones_b = int(np.sum(backward >= 0))
            both = int(np.sum((forward >= 0) & (forward == backward)))
            symmetry += ones_f + ones_b - 2 * both
    transitivity = 0
    for i in range(k):
        for l in range(i, k):
            direct = x.block_map(i, l)
            for j in range(k):
                comp = _compose(x.block_map(i, j), x.block_map(j, l))
                transitivity += int(np.sum((comp >= 0) & (comp != direct)))
    return CycleReport(identity=identity, symmetry=symmetry, transitivity=transitivity)


def cycle_error(x: PairwiseMatchingSet) -> float:
    """Fraction of composed three-cycle matches that contradict the direct map.

    Over all ordered triples of distinct objects ``(i, j, l)``, the numerator
    counts composed matches ``i -> j -> l`` that land where the direct block
    has none, and the denominator counts all composed matches.  An input with
    no composed matches scores 0.
    """
    k = x.k
    violations = 0
    total = 0
    for i in range(k):
        for j in range(k):
            if j == i:
                continue
            for l in range(k):
                if l == i or l == j:
                    continue
                comp = _compose(x.block_map(i, j), x.block_map(j, l))
                hit = comp >= 0
                total += int(np.sum(hit))
                violations += int(np.sum(hit & (comp != x.block_map(i, l))))
    return violations / total if total > 0 else 0.0


def _as_matching_set(predicted) -> tuple[PairwiseMatchingSet, float]:
    """Normalise a prediction and pick its cycle error.

    Universe assignments are consistent by construction, so their cycle error
    is 0 without the cubic sweep.
    """
    if isinstance(predicted, UniverseAssignment):
        return expand(predicted), 0.0
    if isinstance(predicted, PairwiseMatchingSet):
        return predicted, cycle_error(predicted)
    if hasattr(predicted, "to_matching_set"):
        ms = predicted.to_matching_set()
        return ms, cycle_error(ms)
    raise TypeError(f"cannot score a {type(predicted).__name__} as a matching")


def fscore(predicted, truth, runtime_seconds: float = 0.0) -> MatchReport:
    """Score a predicted matching against per-object universe labels.

    ``predicted`` may be a :class:`PairwiseMatchingSet`, a
    :class:`UniverseAssignment`, or anything exposing ``to_matching_set()``.
    ``truth`` holds one integer label array per object; ``-1`` marks outliers,
    which never participate in true pairs.
    """
    if truth is None:
        raise ValueError("ground truth labels are required")
    ms, consistency = _as_matching_set(predicted)
    sizes = ms.index.sizes
    labels = [np.asarray(t, dtype=np.int64) for t in truth]
    if len(labels) != ms.k or any(t.shape != (s,) for t, s in zip(labels, sizes)):
        raise ValueError("ground truth does not match the objects' sizes")
    tp = fp = 0
    for i, p, j, q in ms.matched_pairs():
        a, b = labels[i][p], labels[j][q]
        if a >= 0 and a == b:
            tp += 1
        else:
            fp += 1
    true_total = 0
    all_labels = np.concatenate(labels) if labels else np.empty(0, dtype=np.int64)
    inliers = all_labels[all_labels >= 0]
    if inliers.size:
        counts = np.bincount(inliers)
        true_total += int((counts * (counts - 1) // 2).sum())
        for t in labels:  # discount same-object repeats, which form no pairs
            own = t[t >= 0]
            if own.size:
                c = np.bincount(own)
                true_total -= int((c * (c - 1) // 2).sum())
    fn = true_total - tp
    return MatchReport.from_counts(
        tp, fp, fn, cycle_error=consistency, runtime_seconds=runtime_seconds
    )
