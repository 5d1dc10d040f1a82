"""Declarative tool profiles, sandboxed invocation and verdict classification.

A :class:`ToolProfile` says how to call one compiler, assembler or runner.
:func:`invoke` runs it in a fresh temporary directory and returns an
:class:`InvocationRecord`; :func:`classify` maps that record to a
:class:`Verdict`.  Nothing here keeps state between calls, so invocations
can be fanned out over threads freely.
"""

from __future__ import annotations

import enum
import itertools
import json
import os
import re
import shlex
import shutil
import signal
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path

DEFAULT_TIMEOUT = 60.0
DEFAULT_STDERR_CAP = 1 << 20
TMPDIR_ENV = "DIFFHARNESS_TMPDIR"

PLACEHOLDERS = ("{input}", "{output}", "{options}", "{support}")


class HarnessError(Exception):
    """Base class for errors raised by the harness itself."""


class ToolNotFound(HarnessError):
    pass


class RunnerNotFound(ToolNotFound):
    pass


class WorkdirError(HarnessError):
    pass


class ProfileError(HarnessError):
    """A tool profile or option set is malformed."""


class Kind(str, enum.Enum):
    COMPILER = "compiler"
    ASSEMBLER = "assembler"
    RUNNER = "runner"


class Status(str, enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"
    CRASH = "Crash"
    TIMEOUT = "Timeout"


@dataclass(frozen=True)
class ToolProfile:
    id: str
    kind: Kind
    command_template: tuple[str, ...]
    option_axes: tuple[tuple[str, tuple[str, ...]], ...] = ()
    crash_patterns: tuple[str, ...] = ()
    timeout_seconds: float = DEFAULT_TIMEOUT
    env: tuple[tuple[str, str], ...] = ()
    output_name: str = "a.out"
    stderr_cap: int = DEFAULT_STDERR_CAP
    version_command: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "command_template", tuple(self.command_template))
        object.__setattr__(
            self,
            "option_axes",
            tuple((name, tuple(values)) for name, values in self.option_axes),
        )
        object.__setattr__(self, "crash_patterns", tuple(self.crash_patterns))
        object.__setattr__(self, "env", tuple(sorted(dict(self.env).items())))
        object.__setattr__(self, "version_command", tuple(self.version_command))
        self.validate()

    def validate(self):
        n_input = sum(arg.count("{input}") for arg in self.command_template)
        if n_input != 1:
            raise ProfileError(
                f"{self.id}: command_template must contain {{input}} exactly once, found {n_input}"
            )
        names = [name for name, _ in self.option_axes]
        if len(set(names)) != len(names):
            raise ProfileError(f"{self.id}: duplicate axis names {names}")
        for name, values in self.option_axes:
            if not values:
                raise ProfileError(f"{self.id}: axis {name!r} has no entries")
        if not self.timeout_seconds > 0:
            raise ProfileError(f"{self.id}: timeout_seconds must be positive")
        for pat in self.crash_patterns:
            try:
                re.compile(pat)
            except re.error as exc:
                raise ProfileError(f"{self.id}: bad crash pattern {pat!r}: {exc}") from None

    @property
    def axes(self) -> dict[str, tuple[str, ...]]:
        return dict(self.option_axes)

    @property
    def axis_names(self) -> list[str]:
        return [name for name, _ in self.option_axes]

    def default_options(self) -> "OptionSet":
        return OptionSet(self, {name: values[0] for name, values in self.option_axes})

    def options(self, **choices: str) -> "OptionSet":
        """Option set using ``choices`` where given and the first entry elsewhere."""
        picked = {name: values[0] for name, values in self.option_axes}
        picked.update(choices)
        return OptionSet(self, picked)

    def all_options(self) -> list["OptionSet"]:
        names = self.axis_names
        grids = [self.axes[n] for n in names]
        return [OptionSet(self, dict(zip(names, combo))) for combo in itertools.product(*grids)]

    def with_changes(self, **kw) -> "ToolProfile":
        data = self.to_dict()
        data.update(kw)
        return ToolProfile.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "ToolProfile":
        try:
            axes = data.get("option_axes", {})
            if isinstance(axes, dict):
                axes = list(axes.items())
            return cls(
                id=data["id"],
                kind=Kind(data["kind"]),
                command_template=tuple(data["command_template"]),
                option_axes=tuple((name, tuple(vals)) for name, vals in axes),
                crash_patterns=tuple(data.get("crash_patterns", ())),
                timeout_seconds=float(data.get("timeout_seconds", DEFAULT_TIMEOUT)),
                env=tuple(dict(data.get("env", {})).items()),
                output_name=data.get("output_name", "a.out"),
                stderr_cap=int(data.get("stderr_cap", DEFAULT_STDERR_CAP)),
                version_command=tuple(data.get("version_command", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ProfileError):
                raise
            raise ProfileError(f"bad tool profile {data.get('id', '?')!r}: {exc}") from None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "command_template": list(self.command_template),
            "option_axes": {name: list(vals) for name, vals in self.option_axes},
            "crash_patterns": list(self.crash_patterns),
            "timeout_seconds": self.timeout_seconds,
            "env": dict(self.env),
            "output_name": self.output_name,
            "stderr_cap": self.stderr_cap,
            "version_command": list(self.version_command),
        }


def _escape_key_part(text: str) -> str:
    return text.replace("%", "%25").replace(";", "%3B").replace("=", "%3D")


def _unescape_key_part(text: str) -> str:
    return text.replace("%3D", "=").replace("%3B", ";").replace("%25", "%")


class OptionSet:
    """One chosen entry per option axis of a profile."""

    __slots__ = ("profile_id", "choices", "_order")

    def __init__(self, profile: ToolProfile, choices: dict[str, str]):
        axes = profile.axes
        if set(choices) != set(axes):
            raise ProfileError(
                f"{profile.id}: option set must choose every axis {sorted(axes)}, got {sorted(choices)}"
            )
        for name, value in choices.items():
            if value not in axes[name]:
                raise ProfileError(f"{profile.id}: {value!r} is not an entry of axis {name!r}")
        self.profile_id = profile.id
        self.choices = dict(choices)
        self._order = profile.axis_names

    @property
    def canonical_key(self) -> str:
        return ";".join(
            f"{_escape_key_part(name)}={_escape_key_part(self.choices[name])}"
            for name in sorted(self.choices)
        )

    def arguments(self) -> list[str]:
        """Command-line arguments, in the profile's axis order."""
        args = []
        for name in self._order:
            args.extend(shlex.split(self.choices[name]))
        return args

    @classmethod
    def parse(cls, profile: ToolProfile, key: str) -> "OptionSet":
        """Inverse of :attr:`canonical_key`; unspecified axes take their first entry."""
        choices = {}
        if key:
            for part in key.split(";"):
                if "=" not in part:
                    raise ProfileError(f"malformed option key part {part!r}")
                name, value = part.split("=", 1)
                choices[_unescape_key_part(name)] = _unescape_key_part(value)
        return profile.options(**choices)

    def __eq__(self, other):
        return (
            isinstance(other, OptionSet)
            and self.profile_id == other.profile_id
            and self.choices == other.choices
        )

    def __hash__(self):
        return hash((self.profile_id, self.canonical_key))

    def __repr__(self):
        return f"OptionSet({self.profile_id!r}, {self.canonical_key!r})"


@dataclass
class InvocationRecord:
    """Raw outcome of one tool run, before classification."""

    profile_id: str
    cell_key: str
    command: list[str]
    exit_code: int | None
    terminated_by_signal: bool
    timed_out: bool
    stdout: bytes
    stderr: bytes
    wall_time: float
    artifact_present: bool
    artifact: Path | None = None
    workdir: Path | None = None

    @property
    def diagnostics(self) -> str:
        return self.stderr.decode("utf-8", "replace")

    def cleanup(self):
        if self.workdir is not None and self.workdir.exists():
            shutil.rmtree(self.workdir, ignore_errors=True)


@dataclass(frozen=True)
class Verdict:
    status: Status
    exit_code: int | None
    terminated_by_signal: bool
    diagnostics: str
    wall_time: float
    cell: str
    profile_id: str = ""
    matched_pattern: str | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "exit_code": self.exit_code,
            "terminated_by_signal": self.terminated_by_signal,
            "diagnostics": self.diagnostics,
            "wall_time": round(self.wall_time, 6),
            "cell": self.cell,
            "profile_id": self.profile_id,
            "matched_pattern": self.matched_pattern,
        }


@dataclass
class ExecutionResult:
    exit_code: int | None
    terminated_by_signal: bool
    stdout_bytes: bytes
    stderr_bytes: bytes
    wall_time: float
    timed_out: bool


def load_profiles(path: str | os.PathLike) -> dict[str, ToolProfile]:
    """Read tool profiles from a JSON file.

    The file is either a list of profile objects or an object with a
    ``"tools"`` list (the campaign config layout).
    """
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ProfileError(f"cannot read tool configuration {path}: {exc}") from None
    entries = data.get("tools", []) if isinstance(data, dict) else data
    profiles = {}
    for entry in entries:
        prof = ToolProfile.from_dict(entry)
        if prof.id in profiles:
            raise ProfileError(f"duplicate profile id {prof.id!r}")
        profiles[prof.id] = prof
    return profiles


def temp_root() -> str | None:
    return os.environ.get(TMPDIR_ENV) or None


def make_workdir(prefix: str = "dh-") -> Path:
    try:
        return Path(tempfile.mkdtemp(prefix=prefix, dir=temp_root()))
    except OSError as exc:
        raise WorkdirError(f"cannot create working directory: {exc}") from None


def _expand(template, input_name, output_name, option_args, support_names):
    # without an explicit {support} slot, support files follow the input
    inline_support = "{support}" not in template
    argv = []
    for arg in template:
        if arg == "{options}":
            argv.extend(option_args)
        elif arg == "{support}":
            argv.extend(support_names)
        else:
            argv.append(
                arg.replace("{input}", input_name)
                .replace("{output}", output_name)
                .replace("{options}", " ".join(option_args))
            )
            if inline_support and "{input}" in arg:
                argv.extend(support_names)
    return argv


def _truncate(data: bytes, cap: int) -> bytes:
    if len(data) <= cap:
        return data
    return data[:cap] + f"\n[diffharness: truncated {len(data) - cap} bytes]\n".encode()


def _run(argv, cwd, env, timeout, stdin_bytes, missing_exc):
    full_env = dict(os.environ)
    full_env.update(env)
    start = time.monotonic()
    try:
        proc = subprocess.Popen(
            argv,
            cwd=cwd,
            env=full_env,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            start_new_session=True,
        )
    except FileNotFoundError:
        raise missing_exc(f"command not found: {argv[0]}") from None
    except PermissionError as exc:
        raise missing_exc(f"cannot execute {argv[0]}: {exc}") from None
    timed_out = False
    try:
        out, err = proc.communicate(stdin_bytes, timeout=timeout)
    except subprocess.TimeoutExpired:
        timed_out = True
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, err = proc.communicate()
    wall = time.monotonic() - start
    if timed_out:
        wall = max(wall, timeout)
    rc = proc.returncode
    return rc, out or b"", err or b"", wall, timed_out


def _resolve_program(argv, workdir):
    prog = argv[0]
    if os.sep in prog:
        path = prog if os.path.isabs(prog) else os.path.join(workdir, prog)
        return os.path.exists(path)
    return shutil.which(prog) is not None


def invoke(
    profile: ToolProfile,
    options: OptionSet | None,
    input_path: str | os.PathLike,
    *,
    keep: bool = False,
    support_files: tuple = (),
    stdin_bytes: bytes = b"",
) -> InvocationRecord:
    """Run ``profile`` on a copy of ``input_path`` inside a fresh temp dir.

    The workdir is deleted afterwards unless ``keep`` is set, in which case
    the caller owns it (``record.cleanup()``).  ``support_files`` are copied
    alongside the input and substituted for a ``{support}`` argument.
    """
    src = Path(input_path)
    if not src.is_file():
        raise FileNotFoundError(f"input does not exist: {src}")
    if options is None:
        options = profile.default_options()
    elif options.profile_id != profile.id:
        raise ProfileError(f"option set for {options.profile_id!r} used with {profile.id!r}")
    workdir = make_workdir()
    try:
        try:
            shutil.copy2(src, workdir / src.name)
            support_names = []
            for extra in support_files:
                extra = Path(extra)
                shutil.copy2(extra, workdir / extra.name)
                support_names.append(extra.name)
        except OSError as exc:
            raise WorkdirError(f"cannot stage inputs in {workdir}: {exc}") from None
        argv = _expand(
            profile.command_template, src.name, profile.output_name,
            options.arguments(), support_names,
        )
        if not _resolve_program(argv, workdir):
            raise ToolNotFound(f"{profile.id}: command not found: {argv[0]}")
        rc, out, err, wall, timed_out = _run(
            argv, workdir, dict(profile.env), profile.timeout_seconds, stdin_bytes, ToolNotFound
        )
        artifact = workdir / profile.output_name
        present = artifact.exists()
        rec = InvocationRecord(
            profile_id=profile.id,
            cell_key=options.canonical_key,
            command=argv,
            exit_code=None if timed_out else rc,
            terminated_by_signal=(not timed_out) and rc is not None and rc < 0,
            timed_out=timed_out,
            stdout=_truncate(out, profile.stderr_cap),
            stderr=_truncate(err, profile.stderr_cap),
            wall_time=wall,
            artifact_present=present,
            artifact=artifact if present else None,
            workdir=workdir,
        )
    except BaseException:
        shutil.rmtree(workdir, ignore_errors=True)
        raise
    if not keep:
        rec.cleanup()
        rec.workdir = None
        rec.artifact = None
    return rec


def match_crash_pattern(text: str, patterns) -> str | None:
    for pat in patterns:
        if re.search(pat, text):
            return pat
    return None


def classify(record: InvocationRecord, profile: ToolProfile) -> Verdict:
    """Map a raw record to a verdict.

    Timeout wins, then Crash (signal or crash pattern in stderr), then
    Accept (zero exit and the output artifact exists), else Reject.
    """
    diagnostics = record.diagnostics
    matched = None
    if record.timed_out:
        status = Status.TIMEOUT
    else:
        matched = match_crash_pattern(diagnostics, profile.crash_patterns)
        if record.terminated_by_signal or matched is not None:
            status = Status.CRASH
        elif record.exit_code == 0 and record.artifact_present:
            status = Status.ACCEPT
        else:
            status = Status.REJECT
    return Verdict(
        status=status,
        exit_code=record.exit_code,
        terminated_by_signal=record.terminated_by_signal,
        diagnostics=diagnostics,
        wall_time=record.wall_time,
        cell=record.cell_key,
        profile_id=record.profile_id,
        matched_pattern=matched,
    )


def judge(profile: ToolProfile, options: OptionSet | None, input_path) -> Verdict:
    """``classify(invoke(...))`` without keeping the workdir."""
    return classify(invoke(profile, options, input_path), profile)


def run_binary(
    binary: str | os.PathLike,
    runner: ToolProfile,
    stdin_bytes: bytes = b"",
    options: OptionSet | None = None,
) -> ExecutionResult:
    """Execute ``binary`` through a runner profile and capture its output.

    The binary is copied into a fresh directory first, so a program that
    prints its own location sees a different path on every run.
    """
    if runner.kind is not Kind.RUNNER:
        raise ProfileError(f"{runner.id} is a {runner.kind.value}, not a runner")
    src = Path(binary)
    if not src.is_file():
        raise FileNotFoundError(f"binary does not exist: {src}")
    if options is None:
        options = runner.default_options()
    workdir = make_workdir("dh-run-")
    try:
        try:
            staged = workdir / src.name
            shutil.copy2(src, staged)
        except OSError as exc:
            raise WorkdirError(str(exc)) from None
        argv = _expand(runner.command_template, str(staged), runner.output_name,
                       options.arguments(), [])
        if not _resolve_program(argv, workdir):
            raise RunnerNotFound(f"{runner.id}: command not found: {argv[0]}")
        rc, out, err, wall, timed_out = _run(
            argv, workdir, dict(runner.env), runner.timeout_seconds, stdin_bytes, RunnerNotFound
        )
    finally:
        shutil.rmtree(workdir, ignore_errors=True)
    return ExecutionResult(
        exit_code=None if timed_out else rc,
        terminated_by_signal=(not timed_out) and rc is not None and rc < 0,
        stdout_bytes=out,
        stderr_bytes=_truncate(err, runner.stderr_cap),
        wall_time=wall,
        timed_out=timed_out,
    )


def tool_version(profile: ToolProfile) -> str:
    """First line of the profile's version command output, or ``"unknown"``."""
    if not profile.version_command:
        return "unknown"
    try:
        proc = subprocess.run(
            list(profile.version_command), capture_output=True, timeout=30
        )
    except (OSError, subprocess.TimeoutExpired):
        return "unknown"
    text = (proc.stdout or proc.stderr).decode("utf-8", "replace").strip()
    return text.splitlines()[0] if text else "unknown"
