"""Expected-output embedding and execution comparison.

A reference build's stdout is appended to the test source inside a C
comment block::

    /* DIFFHARNESS-EXPECTED-OUTPUT v1
    :first line
    :second line
    DIFFHARNESS-EXPECTED-OUTPUT-END */

Flag lines (not starting with ``:``) may precede the payload: ``b64:`` when
the payload is base64, ``!noeol`` when the output lacks a final newline, and
``exit:N`` recording a nonzero reference exit status.
"""

from __future__ import annotations

import base64
import enum
from dataclasses import dataclass, field
from pathlib import Path

from .toolchain import (
    HarnessError,
    OptionSet,
    Status,
    ToolProfile,
    classify,
    invoke,
    run_binary,
)

BEGIN = "/* DIFFHARNESS-EXPECTED-OUTPUT v1"
END = "DIFFHARNESS-EXPECTED-OUTPUT-END */"
MARKER_STEM = "DIFFHARNESS-EXPECTED-OUTPUT"
B64_FLAG = "b64:"
NOEOL_FLAG = "!noeol"
EXIT_FLAG = "exit:"
B64_WIDTH = 76


class MarkerCollision(HarnessError):
    pass


class MalformedBlock(HarnessError):
    pass


class NoExpectedBlock(HarnessError):
    pass


class ReferenceBuildFailed(HarnessError):
    def __init__(self, message, diagnostics=""):
        super().__init__(message)
        self.diagnostics = diagnostics


class ReferenceRunTimeout(HarnessError):
    pass


class ReferenceRunFailed(HarnessError):
    pass


def _decode(data: bytes) -> str:
    return data.decode("utf-8", "surrogateescape")


def _encode(text: str) -> bytes:
    return text.encode("utf-8", "surrogateescape")


def _needs_base64(output: bytes) -> bool:
    try:
        text = output.decode("utf-8")
    except UnicodeDecodeError:
        return True
    if "*/" in text or "/*" in text:
        # would end the comment early or trip nested-comment warnings
        return True
    return any(ord(ch) < 32 and ch not in "\t\n" or ord(ch) == 127 for ch in text)


def render_block(output: bytes, exit_code: int | None = None) -> str:
    lines = [BEGIN]
    if exit_code:
        lines.append(f"{EXIT_FLAG}{exit_code}")
    if _needs_base64(output):
        lines.append(B64_FLAG)
        encoded = base64.b64encode(output).decode("ascii")
        lines.extend(":" + encoded[i:i + B64_WIDTH] for i in range(0, len(encoded), B64_WIDTH))
    elif output:
        text = output.decode("utf-8")
        if text.endswith("\n"):
            body = text[:-1].split("\n")
        else:
            lines.append(NOEOL_FLAG)
            body = text.split("\n")
        lines.extend(":" + line for line in body)
    lines.append(END)
    return "\n".join(lines) + "\n"


@dataclass
class ExpectedBlock:
    output: bytes
    exit_code: int | None = None
    base64: bool = False


@dataclass
class AnnotatedSource:
    body: str
    expected_output: bytes | None
    marker_block: str
    exit_code: int | None = None

    @property
    def text(self) -> str:
        sep = "" if not self.body or self.body.endswith("\n") else "\n"
        return self.body + sep + self.marker_block

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(_encode(self.text))
        return path


def embed_expected(source_text: str, output_bytes: bytes, exit_code: int | None = None) -> AnnotatedSource:
    """Append an expected-output block to ``source_text``."""
    if MARKER_STEM in source_text:
        raise MarkerCollision("source already contains expected-output markers")
    return AnnotatedSource(
        body=source_text,
        expected_output=bytes(output_bytes),
        marker_block=render_block(bytes(output_bytes), exit_code),
        exit_code=exit_code or None,
    )


def _find_block(lines: list[str]):
    begin = None
    for i in range(len(lines) - 1, -1, -1):
        if lines[i].rstrip("\r") == BEGIN:
            begin = i
            break
    if begin is None:
        return None
    for j in range(begin + 1, len(lines)):
        if lines[j].rstrip("\r") == END:
            return begin, j
    raise MalformedBlock("expected-output block has no end marker")


def parse_block(text: str) -> ExpectedBlock | None:
    lines = text.split("\n")
    span = _find_block(lines)
    if span is None:
        return None
    begin, end = span
    exit_code = None
    is_b64 = False
    noeol = False
    payload = []
    for raw in lines[begin + 1:end]:
        if raw.startswith(":"):
            payload.append(raw[1:])
            continue
        flag = raw.rstrip("\r")
        if flag == B64_FLAG:
            is_b64 = True
        elif flag == NOEOL_FLAG:
            noeol = True
        elif flag.startswith(EXIT_FLAG):
            try:
                exit_code = int(flag[len(EXIT_FLAG):])
            except ValueError:
                raise MalformedBlock(f"bad exit flag line {flag!r}") from None
        elif flag:
            raise MalformedBlock(f"unexpected line in expected-output block: {flag!r}")
    if is_b64:
        try:
            output = base64.b64decode("".join(payload), validate=True)
        except ValueError as exc:
            raise MalformedBlock(f"bad base64 payload: {exc}") from None
    elif not payload:
        output = b""
    else:
        joined = "\n".join(payload)
        output = _encode(joined if noeol else joined + "\n")
    return ExpectedBlock(output, exit_code, is_b64)


def read_text(file) -> str:
    if isinstance(file, (str, Path)) and Path(file).exists():
        return _decode(Path(file).read_bytes())
    raise FileNotFoundError(f"no such file: {file}")


def extract_expected(file) -> bytes | None:
    """Embedded expected output of ``file`` (a path), or None without a block."""
    block = parse_block(read_text(file))
    return None if block is None else block.output


def extract_from_text(text: str) -> bytes | None:
    block = parse_block(text)
    return None if block is None else block.output


def strip_block(text: str) -> str:
    """``text`` with any trailing expected-output block removed.

    Everything before the block's first line is kept, so stripping a freshly
    embedded source gives back the original when it ended in a newline.
    """
    lines = text.split("\n")
    span = _find_block(lines)
    if span is None:
        return text
    return "".join(line + "\n" for line in lines[:span[0]])


# ---------------------------------------------------------------------------
# comparison


def split_lines(data: bytes) -> tuple[list[bytes], bool]:
    if not data:
        return [], False
    if data.endswith(b"\n"):
        return data[:-1].split(b"\n"), True
    return data.split(b"\n"), False


def _is_text(data: bytes) -> bool:
    try:
        data.decode("utf-8")
    except UnicodeDecodeError:
        return False
    return True


@dataclass
class FirstDifference:
    line: int | None = None
    expected_line: str | None = None
    actual_line: str | None = None
    offset: int | None = None


def first_difference(expected: bytes, actual: bytes) -> FirstDifference | None:
    """Locate the first differing line (1-based), or byte offset for binary data.

    A line missing on one side is reported as None.  When all lines agree but
    only one side ends in a newline, the last line is reported with its
    newline kept so the two reported lines still differ.
    """
    if expected == actual:
        return None
    if not (_is_text(expected) and _is_text(actual)):
        n = min(len(expected), len(actual))
        off = next((i for i in range(n) if expected[i] != actual[i]), n)
        return FirstDifference(offset=off)
    exp, exp_eol = split_lines(expected)
    act, act_eol = split_lines(actual)
    for i in range(max(len(exp), len(act))):
        e = exp[i] if i < len(exp) else None
        a = act[i] if i < len(act) else None
        if e != a:
            return FirstDifference(
                line=i + 1,
                expected_line=None if e is None else e.decode("utf-8"),
                actual_line=None if a is None else a.decode("utf-8"),
            )
    # same lines, different final newline
    last = exp[-1].decode("utf-8")
    return FirstDifference(
        line=len(exp),
        expected_line=last + "\n" if exp_eol else last,
        actual_line=last + "\n" if act_eol else last,
    )


class DiffVerdict(str, enum.Enum):
    MATCH = "match"
    MISMATCH = "mismatch"
    BUILD_FAILURE = "build_failure"
    RUN_FAILURE = "run_failure"
    TIMEOUT = "timeout"


@dataclass
class DiffReport:
    verdict: DiffVerdict
    cell: str
    path: str = ""
    first_diff_line: int | None = None
    expected_line: str | None = None
    actual_line: str | None = None
    first_diff_offset: int | None = None
    diagnostics: str = ""
    exit_code: int | None = None
    expected_exit_code: int | None = None
    notes: list[str] = field(default_factory=list)
    quarantined: bool = False

    @property
    def ok(self) -> bool:
        return self.verdict is DiffVerdict.MATCH

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["verdict"] = self.verdict.value
        d["notes"] = list(self.notes)
        return d


def _build_and_run(path, compiler, runner, cell):
    """Compile ``path`` and run it; returns (verdict, ExecutionResult|None)."""
    rec = invoke(compiler, cell, path, keep=True)
    try:
        verdict = classify(rec, compiler)
        if verdict.status is not Status.ACCEPT:
            return verdict, None
        result = run_binary(rec.artifact, runner)
        return verdict, result
    finally:
        rec.cleanup()


def capture_reference(file, ref_compiler: ToolProfile, ref_runner: ToolProfile,
                      cell: OptionSet | None = None) -> AnnotatedSource:
    """Build ``file`` with the reference, run it, and embed its stdout.

    An existing expected block in ``file`` is replaced.  A nonzero exit with
    output is kept as ``exit:N`` metadata rather than treated as failure.
    """
    path = Path(file)
    body = strip_block(read_text(path))
    verdict, result = _build_and_run(path, ref_compiler, ref_runner, cell)
    if result is None:
        raise ReferenceBuildFailed(
            f"{ref_compiler.id} gave {verdict.status.value} on {path}", verdict.diagnostics
        )
    if result.timed_out:
        raise ReferenceRunTimeout(f"{path}: reference run exceeded {ref_runner.timeout_seconds}s")
    if result.terminated_by_signal:
        raise ReferenceRunFailed(f"{path}: reference run killed by signal {-result.exit_code}")
    return embed_expected(body, result.stdout_bytes, result.exit_code)


def verify(annotated_file, subject_compiler: ToolProfile, subject_runner: ToolProfile,
           cell: OptionSet | None = None, compare_exit: bool = False) -> DiffReport:
    """Build and run with the subject, then compare stdout to the embedded block."""
    path = Path(annotated_file)
    block = parse_block(read_text(path))
    if block is None:
        raise NoExpectedBlock(f"{path} has no expected-output block")
    cell = cell or subject_compiler.default_options()
    report = DiffReport(DiffVerdict.MATCH, cell.canonical_key, str(path),
                        expected_exit_code=block.exit_code or 0)
    verdict, result = _build_and_run(path, subject_compiler, subject_runner, cell)
    if result is None:
        report.verdict = DiffVerdict.BUILD_FAILURE
        report.diagnostics = verdict.diagnostics
        report.notes.append(f"compiler verdict {verdict.status.value}")
        return report
    report.exit_code = result.exit_code
    if result.timed_out:
        report.verdict = DiffVerdict.TIMEOUT
        return report
    if result.terminated_by_signal:
        report.verdict = DiffVerdict.RUN_FAILURE
        report.diagnostics = result.stderr_bytes.decode("utf-8", "replace")
        report.notes.append(f"killed by signal {-result.exit_code}")
        return report
    diff = first_difference(block.output, result.stdout_bytes)
    if diff is not None:
        report.verdict = DiffVerdict.MISMATCH
        report.first_diff_line = diff.line
        report.expected_line = diff.expected_line
        report.actual_line = diff.actual_line
        report.first_diff_offset = diff.offset
    if result.exit_code != report.expected_exit_code:
        if compare_exit:
            if report.verdict is DiffVerdict.MATCH:
                report.verdict = DiffVerdict.MISMATCH
            report.notes.append(
                f"exit status {result.exit_code} != expected {report.expected_exit_code}"
            )
        else:
            report.notes.append(
                f"exit status {result.exit_code} differs from expected "
                f"{report.expected_exit_code}; not compared"
            )
    elif result.exit_code:
        report.notes.append(f"nonzero exit status {result.exit_code} on both sides")
    return report


def self_check(annotated_file, ref_compiler: ToolProfile, ref_runner: ToolProfile,
               cell: OptionSet | None = None) -> DiffReport:
    """Verify a test against the toolchain that produced its expectation.

    Anything but a match means the test is nondeterministic or depends on its
    environment, so the report comes back quarantined.
    """
    report = verify(annotated_file, ref_compiler, ref_runner, cell)
    report.quarantined = not report.ok
    if report.quarantined:
        report.notes.append("quarantined: reference does not reproduce its own expectation")
    return report
