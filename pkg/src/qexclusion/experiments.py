"""Monte Carlo test of the overlap threshold for antidistinguishing d states.

For every dimension ``d`` the scan draws sets of ``d`` Haar-random states,
solves the exclusion SDP and, for the sets that are not antidistinguishable,
records ``alpha = max_{i != j} |<rho_i|rho_j>|``. A set that is not
antidistinguishable although ``alpha <= (d-2)/(d-1)`` would refute the
threshold and is stored as a counterexample.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .antidist import DEFAULT_TOLERANCES, Status, Tolerances, exclusion_sdp
from .numerics import RngStream, haar_random_state

DEFAULT_TRIALS = 2000
BOUNDARY_MARGIN = 1e-9
CSV_HEADER = ["d", "n_trials", "n_antidist", "n_not_antidist", "n_indeterminate", "min_alpha", "threshold"]


@dataclass(frozen=True)
class ScanConfig:
    dims: tuple = (2, 3, 4, 5)
    trials_per_dim: int = DEFAULT_TRIALS
    seed: int = 0
    tolerances: Tolerances = DEFAULT_TOLERANCES
    output_path: str | None = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 2 for d in dims):
            raise ValueError("dims must be a non-empty list of integers >= 2")
        if self.trials_per_dim < 1:
            raise ValueError("trials_per_dim must be positive")
        object.__setattr__(self, "dims", dims)


@dataclass
class ScanRecord:
    d: int
    n_trials: int = 0
    n_antidist: int = 0
    n_not_antidist: int = 0
    n_indeterminate: int = 0
    min_alpha_not_antidist: float | None = None
    counterexamples: list = field(default_factory=list)
    boundary_cases: list = field(default_factory=list)
    indeterminate_sets: list = field(default_factory=list)

    @property
    def conjecture_threshold(self) -> float:
        return (self.d - 2) / (self.d - 1)

    def csv_row(self) -> list:
        return [
            str(self.d),
            str(self.n_trials),
            str(self.n_antidist),
            str(self.n_not_antidist),
            str(self.n_indeterminate),
            "" if self.min_alpha_not_antidist is None else repr(self.min_alpha_not_antidist),
            repr(self.conjecture_threshold),
        ]

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "n_trials": self.n_trials,
            "n_antidist": self.n_antidist,
            "n_not_antidist": self.n_not_antidist,
            "n_indeterminate": self.n_indeterminate,
            "min_alpha": self.min_alpha_not_antidist,
            "threshold": self.conjecture_threshold,
            "counterexamples": self.counterexamples,
            "boundary_cases": self.boundary_cases,
            "indeterminate_sets": self.indeterminate_sets,
        }


def trial_stream(seed: int, d: int, trial: int) -> RngStream:
    return RngStream(seed, (d, trial))


def max_overlap(states: np.ndarray) -> float:
    g = np.abs(states.conj() @ states.T)
    np.fill_diagonal(g, 0.0)
    return float(min(g.max(), 1.0))


def _serialize_states(states: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in v] for v in states]


def run_trial(args):
    """Solve one trial; returns ``(status, alpha, states_or_None)``."""
    seed, d, trial, tol = args
    gen = trial_stream(seed, d, trial).generator()
    states = np.array([haar_random_state(d, gen) for _ in range(d)])
    res = exclusion_sdp(states, tol)
    alpha = max_overlap(states)
    keep = res.status is not Status.ANTIDISTINGUISHABLE and (
        res.status is Status.INDETERMINATE or alpha <= (d - 2) / (d - 1) + BOUNDARY_MARGIN
    )
    return res.status.value, alpha, (_serialize_states(states) if keep else None)


def _aggregate(d: int, outcomes) -> ScanRecord:
    rec = ScanRecord(d)
    thr = rec.conjecture_threshold
    for trial, (status, alpha, states) in enumerate(outcomes):
        rec.n_trials += 1
        if status == Status.ANTIDISTINGUISHABLE.value:
            rec.n_antidist += 1
        elif status == Status.NOT_ANTIDISTINGUISHABLE.value:
            rec.n_not_antidist += 1
            if rec.min_alpha_not_antidist is None or alpha < rec.min_alpha_not_antidist:
                rec.min_alpha_not_antidist = alpha
            entry = {"trial": trial, "alpha": alpha, "states": states}
            if alpha < thr - BOUNDARY_MARGIN:
                rec.counterexamples.append(entry)
            elif alpha <= thr + BOUNDARY_MARGIN:
                rec.boundary_cases.append(entry)
        else:
            rec.n_indeterminate += 1
            rec.indeterminate_sets.append({"trial": trial, "alpha": alpha, "states": states})
    return rec


def conjecture_scan(cfg: ScanConfig, workers: int = 1) -> list:
    """Run the scan; results do not depend on ``workers``.

    Each trial draws its states from its own stream keyed by ``(d, trial)``
    and outcomes are aggregated in trial order.
    """
    records = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for d in cfg.dims:
            jobs = [(cfg.seed, d, t, cfg.tolerances) for t in range(cfg.trials_per_dim)]
            if pool is None:
                outcomes = [run_trial(j) for j in jobs]
            else:
                outcomes = list(pool.map(run_trial, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
            records.append(_aggregate(d, outcomes))
    finally:
        if pool is not None:
            pool.shutdown()
    if cfg.output_path:
        emit_records(records, cfg.output_path)
    return records


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        w.writerow(rec.csv_row())
    return buf.getvalue()


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def sidecar_payload(records) -> dict:
    return {
        "records": [
            {
                "d": r.d,
                "counterexamples": r.counterexamples,
                "boundary_cases": r.boundary_cases,
                "indeterminate_sets": r.indeterminate_sets,
            }
            for r in records
        ]
    }


def atomic_write(path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_records(records, path) -> None:
    """CSV summary at ``path`` plus a JSON sidecar (same stem, ``.json``)
    holding counterexample, boundary and indeterminate state sets."""
    path = Path(path)
    side = sidecar_path(path)
    if side == path:
        raise ValueError("CSV output path must not end in .json")
    atomic_write(path, records_to_csv(records))
    atomic_write(side, json.dumps(sidecar_payload(records), indent=1) + "\n")


def read_records(path) -> list:
    """Parse a CSV written by :func:`emit_records` (and its sidecar if present)."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header {rows[0] if rows else None}")
    extras = {}
    side = sidecar_path(path)
    if side.exists():
        for entry in json.loads(side.read_text())["records"]:
            extras[entry["d"]] = entry
    records = []
    for row in rows[1:]:
        d = int(row[0])
        ex = extras.get(d, {})
        records.append(
            ScanRecord(
                d=d,
                n_trials=int(row[1]),
                n_antidist=int(row[2]),
                n_not_antidist=int(row[3]),
                n_indeterminate=int(row[4]),
                min_alpha_not_antidist=float(row[5]) if row[5] else None,
                counterexamples=ex.get("counterexamples", []),
                boundary_cases=ex.get("boundary_cases", []),
                indeterminate_sets=ex.get("indeterminate_sets", []),
            )
        )
    return records
