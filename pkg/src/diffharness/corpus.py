"""Corpus scanning, per-tool assessment, agreement partitioning and the ledger."""

from __future__ import annotations

import fnmatch
import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .toolchain import HarnessError, OptionSet, Status, ToolProfile, Verdict, judge

EXTENSION_TAGS = {
    ".c": "c",
    ".h": "c",
    ".i": "c",
    ".s": "asm",
    ".S": "asm",
    ".asm": "asm",
}

# directory names under a corpus root that mark the expected outcome
TAG_DIRS = ("expect-reject", "expect-warn")


class RootMissing(HarnessError):
    pass


class UniverseMismatch(HarnessError):
    pass


@dataclass(frozen=True)
class CandidateFile:
    path: str
    content_hash: str
    language_tag: str
    size_bytes: int
    tags: tuple[str, ...] = ()

    @classmethod
    def from_path(cls, path, root=None) -> "CandidateFile":
        p = Path(path)
        data = p.read_bytes()
        tags = ()
        if root is not None:
            parts = p.relative_to(root).parts[:-1]
            tags = tuple(t for t in TAG_DIRS if t in parts)
        return cls(
            path=str(p),
            content_hash=hashlib.sha256(data).hexdigest(),
            language_tag=EXTENSION_TAGS.get(p.suffix, "other"),
            size_bytes=len(data),
            tags=tags,
        )


def scan(root, extensions=None, ignore=()) -> list[CandidateFile]:
    """Recursively list candidate files under ``root`` in path order.

    Symlinked directories are never entered, which also rules out cycles.
    ``ignore`` globs are matched against the root-relative posix path and
    against the bare file name.
    """
    root = Path(root)
    if not root.is_dir():
        raise RootMissing(f"corpus root does not exist: {root}")
    exts = set(extensions) if extensions else None
    found = []
    for dirpath, dirnames, filenames in os.walk(root, followlinks=False):
        dirnames.sort()
        for name in filenames:
            full = Path(dirpath) / name
            if not full.is_file():
                # dangling or looping symlink
                continue
            if exts is not None and full.suffix not in exts:
                continue
            rel = full.relative_to(root).as_posix()
            if any(fnmatch.fnmatch(rel, g) or fnmatch.fnmatch(name, g) for g in ignore):
                continue
            found.append(full)
    found.sort(key=lambda p: p.relative_to(root).as_posix())
    return [CandidateFile.from_path(p, root) for p in found]


@dataclass(frozen=True)
class LedgerEntry:
    content_hash: str
    profile_id: str
    cell: str
    status: str
    diagnostics_digest: str
    timestamp: str
    path: str = ""

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


class Ledger:
    """Append-only JSON-lines record of verdicts.

    All appends go through one lock so concurrent assessors never interleave
    lines.  Timestamps are forced strictly increasing per writer, which keeps
    (hash, profile, cell, timestamp) unique.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._last_ns = 0

    def _stamp(self) -> str:
        now = time.time_ns()
        if now <= self._last_ns:
            now = self._last_ns + 1000
        self._last_ns = now
        secs, ns = divmod(now, 1_000_000_000)
        dt = datetime.fromtimestamp(secs, tz=timezone.utc)
        return dt.strftime("%Y-%m-%dT%H:%M:%S") + f".{ns // 1000:06d}Z"

    def append(self, cand: CandidateFile, verdict: Verdict) -> LedgerEntry:
        with self._lock:
            entry = LedgerEntry(
                content_hash=cand.content_hash,
                profile_id=verdict.profile_id,
                cell=verdict.cell,
                status=verdict.status.value,
                diagnostics_digest=hashlib.sha256(verdict.diagnostics.encode()).hexdigest(),
                timestamp=self._stamp(),
                path=cand.path,
            )
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(entry.to_json() + "\n")
            return entry

    def entries(self) -> list[LedgerEntry]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(LedgerEntry(**json.loads(line)))
        return out


def _as_candidates(files) -> list[CandidateFile]:
    return [f if isinstance(f, CandidateFile) else CandidateFile.from_path(f) for f in files]


def _fan_out(fn, items, jobs):
    """Map ``fn`` over ``items`` in order; the first exception aborts the rest."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, item) for item in items]
        try:
            return [f.result() for f in futures]
        except BaseException:
            for f in futures:
                f.cancel()
            raise


def assess(files, profile: ToolProfile, cell: OptionSet | None = None,
           ledger: Ledger | None = None, jobs: int = 1) -> dict[str, Verdict]:
    """One verdict per file, keyed by path.

    A missing tool raises :class:`ToolNotFound` once for the whole campaign.
    """
    cands = _as_candidates(files)
    cell = cell or profile.default_options()

    def one(cand):
        verdict = judge(profile, cell, cand.path)
        if ledger is not None:
            ledger.append(cand, verdict)
        return verdict

    verdicts = _fan_out(one, cands, jobs)
    return {c.path: v for c, v in zip(cands, verdicts)}


@dataclass
class CrashRecord:
    path: str
    tool: str
    cell: str
    status: str

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class Partition:
    both_accept: set = field(default_factory=set)
    both_reject: set = field(default_factory=set)
    ref_only_accept: set = field(default_factory=set)
    subject_only_accept: set = field(default_factory=set)
    any_crash: dict = field(default_factory=dict)

    def disagreements(self) -> set:
        return self.ref_only_accept | self.subject_only_accept

    def counts(self) -> dict:
        return {
            "both_accept": len(self.both_accept),
            "both_reject": len(self.both_reject),
            "ref_only_accept": len(self.ref_only_accept),
            "subject_only_accept": len(self.subject_only_accept),
            "any_crash": len(self.any_crash),
        }

    def to_dict(self) -> dict:
        return {
            "both_accept": sorted(self.both_accept),
            "both_reject": sorted(self.both_reject),
            "ref_only_accept": sorted(self.ref_only_accept),
            "subject_only_accept": sorted(self.subject_only_accept),
            "any_crash": {
                k: [r.to_dict() for r in v] for k, v in sorted(self.any_crash.items())
            },
        }


_FAILED = (Status.CRASH, Status.TIMEOUT)


def partition(ref_verdicts: dict, subject_verdicts: dict) -> Partition:
    """Split the file universe by reference/subject agreement.

    Crash or Timeout from either side puts the file in ``any_crash``; the
    file may additionally land in an accept set when the other side accepted.
    ``both_reject`` requires a plain Reject from both tools.
    """
    if set(ref_verdicts) != set(subject_verdicts):
        only_ref = sorted(set(ref_verdicts) - set(subject_verdicts))
        only_sub = sorted(set(subject_verdicts) - set(ref_verdicts))
        raise UniverseMismatch(f"ref-only files {only_ref}, subject-only files {only_sub}")
    part = Partition()
    for path in ref_verdicts:
        r, s = ref_verdicts[path], subject_verdicts[path]
        crashes = [
            CrashRecord(path, v.profile_id or side, v.cell, v.status.value)
            for side, v in (("ref", r), ("subject", s))
            if v.status in _FAILED
        ]
        if crashes:
            part.any_crash[path] = crashes
        r_acc = r.status is Status.ACCEPT
        s_acc = s.status is Status.ACCEPT
        if r_acc and s_acc:
            part.both_accept.add(path)
        elif r_acc:
            part.ref_only_accept.add(path)
        elif s_acc:
            part.subject_only_accept.add(path)
        elif r.status is Status.REJECT and s.status is Status.REJECT:
            part.both_reject.add(path)
    return part


@dataclass
class CrashHit:
    path: str
    cell: str
    verdict: Verdict

    def to_dict(self):
        return {
            "path": self.path,
            "cell": self.cell,
            "tool": self.verdict.profile_id,
            "status": self.verdict.status.value,
            "exit_code": self.verdict.exit_code,
            "terminated_by_signal": self.verdict.terminated_by_signal,
            "matched_pattern": self.verdict.matched_pattern,
        }


def crash_sweep(files, profile: ToolProfile, cells, ledger: Ledger | None = None,
                jobs: int = 1) -> list[CrashHit]:
    """Crash/Timeout hits over every file and cell; rejections are ignored."""
    cands = _as_candidates(files)
    cells = list(cells)
    work = [(c, cell) for c in cands for cell in cells]

    def one(item):
        cand, cell = item
        verdict = judge(profile, cell, cand.path)
        if ledger is not None:
            ledger.append(cand, verdict)
        return verdict

    verdicts = _fan_out(one, work, jobs)
    return [
        CrashHit(cand.path, cell.canonical_key, v)
        for (cand, cell), v in zip(work, verdicts)
        if v.status in _FAILED
    ]
