"""Delta debugging (ddmin) over lines or blank-line-separated blocks."""

from __future__ import annotations

import enum
import shlex
import shutil
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .toolchain import HarnessError, make_workdir


class Outcome(str, enum.Enum):
    FAIL = "fails"  # interesting: the failure reproduces
    PASS = "passes"
    UNRESOLVED = "unresolved"


class NotReproducible(HarnessError):
    pass


class BudgetExhausted(HarnessError):
    """Raised when the predicate budget runs out; ``best`` is the smallest
    failing subset found so far (not necessarily 1-minimal)."""

    def __init__(self, best, calls):
        super().__init__(f"predicate budget exhausted after {calls} calls")
        self.best = best
        self.calls = calls


@dataclass
class ReductionJob:
    units: list
    predicate: Callable[[list], Outcome]
    budget: int | None = None
    cache: dict = field(default_factory=dict)
    jobs: int = 1
    calls: int = 0

    def test(self, indices: tuple[int, ...]) -> Outcome:
        if indices in self.cache:
            return self.cache[indices]
        if self.budget is not None and self.calls >= self.budget:
            raise _OutOfBudget()
        self.calls += 1
        outcome = Outcome(self.predicate([self.units[i] for i in indices]))
        self.cache[indices] = outcome
        return outcome

    def test_many(self, candidates: list[tuple[int, ...]]) -> list[Outcome]:
        """Outcomes for a whole round; parallel when ``jobs`` > 1."""
        if self.jobs <= 1:
            return [self.test(c) for c in candidates]
        todo = [c for c in dict.fromkeys(candidates) if c not in self.cache]
        if self.budget is not None and self.calls + len(todo) > self.budget:
            todo = todo[: max(self.budget - self.calls, 0)]
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            results = list(pool.map(
                lambda c: Outcome(self.predicate([self.units[i] for i in c])), todo
            ))
        self.calls += len(todo)
        self.cache.update(zip(todo, results))
        return [self.test(c) for c in candidates]


class _OutOfBudget(Exception):
    pass


@dataclass
class ReductionResult:
    units: list
    indices: tuple[int, ...]
    calls: int
    minimal: bool = True


def split(indices: tuple[int, ...], n: int) -> list[tuple[int, ...]]:
    """``n`` contiguous chunks; the remainder goes to the last one."""
    size = len(indices) // n
    chunks = [indices[k * size:(k + 1) * size] for k in range(n - 1)]
    chunks.append(indices[(n - 1) * size:])
    return chunks


def ddmin(job: ReductionJob) -> ReductionResult:
    """Reduce ``job.units`` to a 1-minimal failing subset.

    Unresolved outcomes count as passes.  The empty subset is tried first;
    after the main loop every single-unit removal is re-checked (mostly from
    cache) so the result is 1-minimal by construction.
    """
    full = tuple(range(len(job.units)))
    best = full
    try:
        if job.test(full) is not Outcome.FAIL:
            raise NotReproducible("the full input does not reproduce the failure")
        if job.test(()) is Outcome.FAIL:
            return ReductionResult([], (), job.calls)
        current, n = full, 2
        while len(current) >= 2:
            n = min(n, len(current))
            chunks = split(current, n)
            outcomes = job.test_many(chunks)
            hit = next((c for c, o in zip(chunks, outcomes) if o is Outcome.FAIL), None)
            if hit is not None:
                current = best = hit
                n = 2
                continue
            if n > 2:
                complements = []
                for chunk in chunks:
                    drop = set(chunk)
                    complements.append(tuple(i for i in current if i not in drop))
                outcomes = job.test_many(complements)
                hit = next((c for c, o in zip(complements, outcomes) if o is Outcome.FAIL), None)
                if hit is not None:
                    current = best = hit
                    n = max(n - 1, 2)
                    continue
            if n >= len(current):
                # final check: no single unit can go
                removals = [current[:k] + current[k + 1:] for k in range(len(current))]
                outcomes = job.test_many(removals)
                hit = next((c for c, o in zip(removals, outcomes) if o is Outcome.FAIL), None)
                if hit is None:
                    break
                current = best = hit
                n = 2
                continue
            n = min(len(current), 2 * n)
    except _OutOfBudget:
        raise BudgetExhausted([job.units[i] for i in best], job.calls) from None
    return ReductionResult([job.units[i] for i in current], current, job.calls)


# ---------------------------------------------------------------------------
# files


def split_units(text: str, granularity: str = "line") -> list[str]:
    if granularity == "line":
        return text.splitlines(keepends=True)
    if granularity == "blank-line-block":
        blocks, cur = [], []
        for line in text.splitlines(keepends=True):
            cur.append(line)
            if not line.strip():
                blocks.append("".join(cur))
                cur = []
        if cur:
            blocks.append("".join(cur))
        return blocks
    raise ValueError(f"unknown granularity {granularity!r}")


class CommandPredicate:
    """Runs ``command`` on a candidate file; exit status 0 means interesting.

    The candidate path is appended as the last argument, or substituted for
    a ``{file}`` placeholder when the command contains one.  The candidate
    keeps the original file name so tools still see the right extension.
    """

    def __init__(self, command, file_name: str, timeout: float = 60.0):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.file_name = file_name
        self.timeout = timeout

    def __call__(self, units) -> Outcome:
        workdir = make_workdir("dh-reduce-")
        try:
            cand = workdir / self.file_name
            cand.write_text("".join(units), encoding="utf-8", errors="surrogateescape")
            if any("{file}" in a for a in self.argv):
                argv = [a.replace("{file}", str(cand)) for a in self.argv]
            else:
                argv = self.argv + [str(cand)]
            try:
                proc = subprocess.run(argv, cwd=workdir, capture_output=True,
                                      timeout=self.timeout)
            except subprocess.TimeoutExpired:
                return Outcome.UNRESOLVED
            except FileNotFoundError:
                raise HarnessError(f"predicate command not found: {argv[0]}") from None
            return Outcome.FAIL if proc.returncode == 0 else Outcome.PASS
        finally:
            shutil.rmtree(workdir, ignore_errors=True)


@dataclass
class FileReduction:
    output: Path
    original_units: int
    reduced_units: int
    original_bytes: int
    reduced_bytes: int
    calls: int
    minimal: bool

    @property
    def ratio(self) -> float:
        return self.reduced_bytes / self.original_bytes if self.original_bytes else 1.0

    def summary(self) -> str:
        flag = "" if self.minimal else " (budget exhausted; not 1-minimal)"
        return (
            f"reduced {self.original_units} -> {self.reduced_units} units, "
            f"{self.original_bytes} -> {self.reduced_bytes} bytes "
            f"(ratio {self.ratio:.3f}) in {self.calls} predicate calls{flag}"
        )


def reduce_file(path, predicate_command, granularity: str = "line", output=None,
                budget: int | None = None, jobs: int = 1, timeout: float = 60.0) -> FileReduction:
    """Reduce ``path`` and write the result (default ``<stem>.reduced<suffix>``)."""
    src = Path(path)
    text = src.read_text(encoding="utf-8", errors="surrogateescape")
    units = split_units(text, granularity)
    predicate = CommandPredicate(predicate_command, src.name, timeout)
    job = ReductionJob(units, predicate, budget=budget, jobs=jobs)
    minimal = True
    try:
        result = ddmin(job)
        kept = result.units
    except BudgetExhausted as exc:
        kept, minimal = exc.best, False
    out = Path(output) if output else src.with_name(f"{src.stem}.reduced{src.suffix}")
    reduced = "".join(kept)
    out.write_text(reduced, encoding="utf-8", errors="surrogateescape")
    return FileReduction(
        output=out,
        original_units=len(units),
        reduced_units=len(kept),
        original_bytes=len(text.encode("utf-8", "surrogateescape")),
        reduced_bytes=len(reduced.encode("utf-8", "surrogateescape")),
        calls=job.calls,
        minimal=minimal,
    )
