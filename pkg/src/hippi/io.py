"""File formats: JSON documents for data, flat CSV for traces and reports.

All JSON is written with sorted keys and a fixed layout so that identical
inputs produce byte-identical files; floats go through Python's shortest
round-trip repr.  Trace CSVs carry only iteration numbers and objective
values — wall-clock times stay out of them on purpose, so reruns of the same
seeded configuration diff clean.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from hippi.core import BlockIndex, PairwiseMatchingSet, ProblemInstance, UniverseAssignment
from hippi.metrics import MatchReport
from hippi.solver import SolverTrace

PROBLEM_FORMAT = "multimatch-problem"
ASSIGNMENT_FORMAT = "multimatch-assignment"
PAIRWISE_FORMAT = "multimatch-pairwise"
FORMAT_VERSION = 1

REPORT_COLUMNS = (
    "method",
    "k",
    "m",
    "d",
    "iterations",
    "converged",
    "precision",
    "recall",
    "fscore",
    "true_positives",
    "false_positives",
    "false_negatives",
    "cycle_error",
    "runtime_seconds",
)


def _dump(document: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load(path, expected_format: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        document = json.load(fh)
    if not isinstance(document, dict):
        raise ValueError(f"{path}: expected a JSON object")
    if document.get("format") != expected_format:
        raise ValueError(
            f"{path}: format {document.get('format')!r}, expected {expected_format!r}"
        )
    if document.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {document.get('version')!r}")
    return document


def save_problem(p: ProblemInstance, path) -> None:
    document = {
        "format": PROBLEM_FORMAT,
        "version": FORMAT_VERSION,
        "sizes": list(p.sizes),
        "points": [pts.tolist() for pts in p.points],
        "features": [f.tolist() for f in p.features],
        "ground_truth": (
            None if p.ground_truth is None else [g.tolist() for g in p.ground_truth]
        ),
        "distances": (
            None if p.distances is None else [d.tolist() for d in p.distances]
        ),
        "seed": p.seed,
    }
    _dump(document, path)


def load_problem(path) -> ProblemInstance:
    doc = _load(path, PROBLEM_FORMAT)
    try:
        points = tuple(np.asarray(pts, dtype=np.float64) for pts in doc["points"])
        features = tuple(np.asarray(f, dtype=np.float64) for f in doc["features"])
        gt = doc.get("ground_truth")
        dist = doc.get("distances")
        return ProblemInstance(
            points=points,
            features=features,
            ground_truth=None if gt is None else tuple(np.asarray(g) for g in gt),
            distances=None if dist is None else tuple(np.asarray(x) for x in dist),
            seed=doc.get("seed"),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed problem document ({exc})") from exc


def save_assignment(u: UniverseAssignment, path) -> None:
    document = {
        "format": ASSIGNMENT_FORMAT,
        "version": FORMAT_VERSION,
        "sizes": list(u.index.sizes),
        "d": u.d,
        "assignment": u.assignment.tolist(),
    }
    _dump(document, path)


def load_assignment(path) -> UniverseAssignment:
    doc = _load(path, ASSIGNMENT_FORMAT)
    try:
        index = BlockIndex(sizes=tuple(int(s) for s in doc["sizes"]))
        return UniverseAssignment(
            assignment=np.asarray(doc["assignment"], dtype=np.int64),
            d=int(doc["d"]),
            index=index,
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed assignment document ({exc})") from exc


def save_pairwise(x: PairwiseMatchingSet, path) -> None:
    """Store the cross-object matches; diagonals are written as identities."""
    document = {
        "format": PAIRWISE_FORMAT,
        "version": FORMAT_VERSION,
        "sizes": list(x.index.sizes),
        "matches": [list(match) for match in x.matched_pairs()],
    }
    _dump(document, path)


def load_pairwise(path) -> PairwiseMatchingSet:
    """Rebuild a full matching set: mirrored cross blocks, identity diagonal."""
    doc = _load(path, PAIRWISE_FORMAT)
    try:
        index = BlockIndex(sizes=tuple(int(s) for s in doc["sizes"]))
        maps = [
            [np.full(index.sizes[i], -1, dtype=np.int64) for _ in range(index.k)]
            for i in range(index.k)
        ]
        for i in range(index.k):
            maps[i][i] = np.arange(index.sizes[i], dtype=np.int64)
        for entry in doc["matches"]:
            i, p, j, q = (int(v) for v in entry)
            if not (0 <= i < index.k and 0 <= j < index.k) or i == j:
                raise ValueError(f"match {entry} names an invalid object pair")
            if maps[i][j][p] not in (-1, q) or maps[j][i][q] not in (-1, p):
                raise ValueError(f"match {entry} conflicts with an earlier one")
            maps[i][j][p] = q
            maps[j][i][q] = p
        return PairwiseMatchingSet(
            maps=tuple(tuple(row) for row in maps), index=index
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"{path}: malformed pairwise document ({exc})") from exc


def save_trace(trace: SolverTrace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iteration,objective\n")
        for t, f in enumerate(trace.objectives.tolist()):
            fh.write(f"{t},{f!r}\n")


def load_trace(path) -> np.ndarray:
    """Objective values from a trace CSV, in iteration order."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["iteration", "objective"]:
            raise ValueError(f"{path}: not a trace CSV")
        return np.array([float(row["objective"]) for row in reader])


def save_report(
    report: MatchReport,
    path,
    *,
    method: str,
    index: BlockIndex,
    d: int,
    iterations: int,
    converged: bool,
) -> None:
    row = {
        "method": method,
        "k": index.k,
        "m": index.m,
        "d": d,
        "iterations": iterations,
        "converged": converged,
        "precision": report.precision,
        "recall": report.recall,
        "fscore": report.fscore,
        "true_positives": report.true_positives,
        "false_positives": report.false_positives,
        "false_negatives": report.false_negatives,
        "cycle_error": report.cycle_error,
        "runtime_seconds": report.runtime_seconds,
    }
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        writer.writerow(row)


def load_report(path) -> dict:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise ValueError(f"{path}: not a report CSV")
        rows = list(reader)
    if len(rows) != 1:
        raise ValueError(f"{path}: expected exactly one report row")
    return rows[0]
