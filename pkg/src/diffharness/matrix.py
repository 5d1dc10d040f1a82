"""Option-matrix replay: acceptance should not depend on the optimization level."""

from __future__ import annotations

import hashlib
import itertools
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .toolchain import HarnessError, OptionSet, Status, ToolProfile, Verdict, judge

MODES = ("full", "compromise", "minmax")

# baseline tie-break preference
STATUS_ORDER = (Status.ACCEPT, Status.REJECT, Status.CRASH, Status.TIMEOUT)


class MissingAxis(HarnessError):
    pass


def build_matrix(profile: ToolProfile, mode: str = "full") -> list[OptionSet]:
    """Option sets to replay for ``mode``.

    full is the Cartesian product of every axis.  compromise keeps the
    lowest and highest "opt" entries crossed with every "debug" entry;
    minmax keeps the same two opt entries with the first debug entry only.
    Any other axes stay at their first entry in the reduced modes.
    """
    if mode not in MODES:
        raise ValueError(f"unknown matrix mode {mode!r}; expected one of {MODES}")
    if mode == "full":
        return profile.all_options()
    axes = profile.axes
    for needed in ("opt", "debug"):
        if needed not in axes:
            raise MissingAxis(f"{profile.id}: mode {mode!r} needs an axis named {needed!r}")
    opt = axes["opt"]
    opts = [opt[0]] if len(opt) == 1 else [opt[0], opt[-1]]
    debugs = list(axes["debug"]) if mode == "compromise" else [axes["debug"][0]]
    return [profile.options(opt=o, debug=d) for o, d in itertools.product(opts, debugs)]


def modal_status(statuses) -> Status:
    counts = Counter(statuses)
    if not counts:
        raise ValueError("no statuses")
    best = max(counts.values())
    return next(s for s in STATUS_ORDER if counts.get(s) == best)


@dataclass
class MatrixReport:
    file: str
    file_hash: str
    profile_id: str
    cells: dict[str, Verdict]
    baseline_status: Status
    discrepancies: list[tuple[str, Status]] = field(default_factory=list)

    @classmethod
    def from_cells(cls, file, file_hash, profile_id, cells: dict[str, Verdict]):
        ordered = dict(sorted(cells.items()))
        baseline = modal_status(v.status for v in ordered.values())
        disc = [(k, v.status) for k, v in ordered.items() if v.status is not baseline]
        return cls(str(file), file_hash, profile_id, ordered, baseline, disc)

    def to_dict(self) -> dict:
        return {
            "file": self.file,
            "file_hash": self.file_hash,
            "profile_id": self.profile_id,
            "baseline_status": self.baseline_status.value,
            "cells": {k: v.status.value for k, v in self.cells.items()},
            "discrepancies": [
                {"cell": k, "status": s.value} for k, s in self.discrepancies
            ],
        }


def run_matrix(file, profile: ToolProfile, cells, jobs: int = 1) -> MatrixReport:
    """Invoke ``profile`` once per cell on ``file`` and flag deviating cells."""
    path = Path(file)
    digest = hashlib.sha256(path.read_bytes()).hexdigest()
    cells = list(cells)
    if jobs > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(lambda c: judge(profile, c, path), cells))
    else:
        verdicts = [judge(profile, c, path) for c in cells]
    return MatrixReport.from_cells(
        path, digest, profile.id, {c.canonical_key: v for c, v in zip(cells, verdicts)}
    )
