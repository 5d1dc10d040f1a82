"""Merge single-main tests into one program.

Each test's ``main`` becomes ``test_main_<basename>``; a header declares the
renamed entry points and a driver calls them in order, flushing stdout after
each call.  Symbol collisions between units are only detected (from linker
diagnostics), never repaired.
"""

from __future__ import annotations

import re
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from . import execdiff
from .toolchain import HarnessError, Status, classify, invoke, make_workdir, run_binary

HEADER_NAME = "units.h"
DRIVER_NAME = "driver.c"
EXPECTED_NAME = "expected.txt"
FAILED_MARKER = "UNIT-FAILED"


class UnitSkipped(HarnessError):
    """The input cannot be combined; ``str(exc)`` is the reason."""


class MainNotFound(UnitSkipped):
    pass


def unit_name_for(path) -> str:
    base = Path(path).name
    return "test_main_" + re.sub(r"[^0-9A-Za-z]", "_", base)


class UnitNamer:
    """Hands out unit names, suffixing ``_2``, ``_3``... on collisions."""

    def __init__(self):
        self._taken = set()
        self._by_path = {}

    def name_for(self, path) -> str:
        key = str(path)
        if key in self._by_path:
            return self._by_path[key]
        base = unit_name_for(path)
        name, n = base, 1
        while name in self._taken:
            n += 1
            name = f"{base}_{n}"
        self._taken.add(name)
        self._by_path[key] = name
        return name


# ---------------------------------------------------------------------------
# a small C tokenizer: enough to find file-scope identifiers outside
# comments, literals and preprocessor lines


@dataclass
class Token:
    kind: str  # ident, punct, other
    text: str
    start: int
    end: int


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"\.?[0-9](?:[eEpP][+-]|[0-9A-Za-z_.])*")


def _skip_literal(src, i, quote):
    n = len(src)
    i += 1
    while i < n:
        ch = src[i]
        if ch == "\\":
            i += 2
            continue
        if ch == quote or ch == "\n":
            return i + 1
        i += 1
    return n


def _skip_directive(src, i):
    """Index just past a preprocessor line, honouring line continuations."""
    n = len(src)
    while i < n:
        if src[i] == "\\" and src.startswith("\n", i + 1):
            i += 2
            continue
        if src.startswith("/*", i):
            end = src.find("*/", i + 2)
            i = n if end < 0 else end + 2
            continue
        if src[i] == "\n":
            return i + 1
        i += 1
    return n


_DIRECTIVE = re.compile(r"#\s*(\w+)\s*(.*)")


def tokenize(src: str) -> list[Token]:
    """Tokens of ``src``, dropping comments, literals and ``#if 0`` regions."""
    tokens = []
    i, n = 0, len(src)
    at_line_start = True
    disabled_depth = 0  # nesting depth inside an #if 0 region
    while i < n:
        ch = src[i]
        if ch == "\n":
            at_line_start = True
            i += 1
            continue
        if ch in " \t\r\f\v":
            i += 1
            continue
        if ch == "\\" and src.startswith("\n", i + 1):
            i += 2
            continue
        if src.startswith("/*", i):
            end = src.find("*/", i + 2)
            i = n if end < 0 else end + 2
            continue
        if src.startswith("//", i):
            end = src.find("\n", i)
            i = n if end < 0 else end
            continue
        if ch == "#" and at_line_start:
            end = _skip_directive(src, i)
            m = _DIRECTIVE.match(src[i:end])
            if m:
                word, rest = m.group(1), m.group(2).strip()
                if disabled_depth:
                    if word in ("if", "ifdef", "ifndef"):
                        disabled_depth += 1
                    elif word == "endif":
                        disabled_depth -= 1
                    elif word in ("else", "elif") and disabled_depth == 1:
                        disabled_depth = 0
                elif word == "if" and rest.split("/")[0].strip() == "0":
                    disabled_depth = 1
            i = end
            at_line_start = True
            continue
        at_line_start = False
        if disabled_depth:
            # skip the rest of the line inside #if 0
            end = src.find("\n", i)
            i = n if end < 0 else end
            continue
        if ch in "\"'":
            i = _skip_literal(src, i, ch)
            continue
        m = _IDENT.match(src, i)
        if m:
            # wide/unicode string or char prefixes
            if m.end() < n and src[m.end()] in "\"'" and m.group() in ("L", "u", "U", "u8"):
                i = _skip_literal(src, m.end(), src[m.end()])
                continue
            tokens.append(Token("ident", m.group(), i, m.end()))
            i = m.end()
            continue
        m = _NUMBER.match(src, i)
        if m:
            tokens.append(Token("other", m.group(), i, m.end()))
            i = m.end()
            continue
        tokens.append(Token("punct", ch, i, i + 1))
        i += 1
    return tokens


@dataclass
class MainDefinition:
    name_token: Token
    params: list[Token]
    close_paren: Token
    needs_int: bool


def find_main(src: str) -> MainDefinition:
    """Locate the file-scope definition of ``main``."""
    toks = tokenize(src)
    depth = 0
    for k, tok in enumerate(toks):
        if tok.kind == "punct":
            if tok.text == "{":
                depth += 1
            elif tok.text == "}":
                depth -= 1
            continue
        if depth != 0 or tok.text != "main" or tok.kind != "ident":
            continue
        if k + 1 >= len(toks) or toks[k + 1].text != "(":
            continue
        # matching close paren
        level, m = 0, k + 1
        while m < len(toks):
            if toks[m].text == "(":
                level += 1
            elif toks[m].text == ")":
                level -= 1
                if level == 0:
                    break
            m += 1
        if m >= len(toks):
            continue
        # a definition's parameter list is followed by "{" (or K&R declarations)
        rest = toks[m + 1] if m + 1 < len(toks) else None
        if rest is None or rest.text in (";", ","):
            continue
        prev = toks[k - 1] if k > 0 else None
        needs_int = prev is None or prev.text in (";", "}")
        return MainDefinition(tok, toks[k + 2:m], toks[m], needs_int)
    raise MainNotFound("no file-scope definition of main")


def rename_main(source_text: str, unit_name: str) -> str:
    """Rename the ``main`` definition (and any other uses of the identifier).

    ``int main()``/``int main(void)`` become ``int <unit_name>(void)``;
    a main taking parameters raises :class:`UnitSkipped`.
    """
    found = find_main(source_text)
    params = [t.text for t in found.params]
    if params and params != ["void"]:
        raise UnitSkipped("parameterized main")
    edits = []
    for tok in tokenize(source_text):
        if tok.kind == "ident" and tok.text == "main":
            edits.append((tok.start, tok.end, unit_name))
    # normalize the parameter list of the definition
    open_idx = source_text.index("(", found.name_token.end)
    edits.append((open_idx, found.close_paren.end, "(void)"))
    if found.needs_int:
        edits.append((found.name_token.start, found.name_token.start, "int "))
    out = source_text
    for start, end, text in sorted(edits, key=lambda e: (e[0], e[1]), reverse=True):
        out = out[:start] + text + out[end:]
    return out


_TERMINATORS = ("exit", "_Exit", "quick_exit")


def _calls_exit(src: str) -> str | None:
    toks = tokenize(src)
    for k, tok in enumerate(toks[:-1]):
        if tok.kind == "ident" and tok.text in _TERMINATORS and toks[k + 1].text == "(":
            return tok.text
    return None


@dataclass
class Unit:
    path: str
    unit_name: str
    source: str
    expected: bytes
    expected_exit: int | None = None


@dataclass
class CombinedSuite:
    units: list[Unit] = field(default_factory=list)
    header_text: str = ""
    driver_text: str = ""
    combined_expected: bytes = b""
    skipped: list[tuple[str, str]] = field(default_factory=list)

    def write(self, out_dir) -> Path:
        """Write units, header, driver and expected.txt under ``out_dir``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for unit in self.units:
            (out / f"{unit.unit_name}.c").write_bytes(
                unit.source.encode("utf-8", "surrogateescape")
            )
        (out / HEADER_NAME).write_text(self.header_text)
        (out / DRIVER_NAME).write_text(self.driver_text)
        (out / EXPECTED_NAME).write_bytes(self.combined_expected)
        return out

    def unit_paths(self, out_dir) -> list[Path]:
        return [Path(out_dir) / f"{u.unit_name}.c" for u in self.units]

    def to_dict(self) -> dict:
        return {
            "units": [{"path": u.path, "unit_name": u.unit_name} for u in self.units],
            "skipped": [{"path": p, "reason": r} for p, r in self.skipped],
            "expected_bytes": len(self.combined_expected),
        }


def header_for(names) -> str:
    lines = [
        "/* generated by diffharness combine */",
        "#ifndef DIFFHARNESS_UNITS_H",
        "#define DIFFHARNESS_UNITS_H",
        "",
    ]
    lines += [f"int {name}(void);" for name in names]
    lines += ["", "#endif", ""]
    return "\n".join(lines)


def driver_for(names) -> str:
    lines = [
        "/* generated by diffharness combine */",
        "#include <stdio.h>",
        f'#include "{HEADER_NAME}"',
        "",
        "int main(void)",
        "{",
    ]
    for name in names:
        lines += [
            f"    if ({name}() != 0)",
            f'        printf("{FAILED_MARKER} {name}\\n");',
            "    fflush(stdout);",
            f"    /* stream-state reset hook: {name} */",
        ]
    lines += ["    return 0;", "}", ""]
    return "\n".join(lines)


def combine(inputs, output_free=()) -> CombinedSuite:
    """Build a :class:`CombinedSuite` from annotated test files, in order.

    Files listed in ``output_free`` need no expected block and contribute no
    expected output.  Anything unusable is recorded in ``skipped``.
    """
    output_free = {str(p) for p in output_free}
    namer = UnitNamer()
    suite = CombinedSuite()
    for path in inputs:
        path = str(path)
        try:
            text = execdiff.read_text(path)
            block = execdiff.parse_block(text)
        except (OSError, execdiff.MalformedBlock) as exc:
            suite.skipped.append((path, f"unreadable: {exc}"))
            continue
        if block is None and path not in output_free:
            suite.skipped.append((path, "no expected-output block"))
            continue
        terminator = _calls_exit(text)
        if terminator:
            suite.skipped.append((path, f"calls {terminator}()"))
            continue
        try:
            find_main(text)
        except UnitSkipped as exc:
            suite.skipped.append((path, str(exc)))
            continue
        name = namer.name_for(path)
        try:
            renamed = rename_main(text, name)
        except UnitSkipped as exc:
            suite.skipped.append((path, str(exc)))
            continue
        expected = b"" if block is None else block.output
        exit_code = None if block is None else block.exit_code
        suite.units.append(Unit(path, name, renamed, expected, exit_code))
    names = [u.unit_name for u in suite.units]
    suite.header_text = header_for(names)
    suite.driver_text = driver_for(names)
    chunks = []
    for unit in suite.units:
        chunks.append(unit.expected)
        if unit.expected_exit:
            chunks.append(f"{FAILED_MARKER} {unit.unit_name}\n".encode())
    suite.combined_expected = b"".join(chunks)
    return suite


def read_list_file(path) -> tuple[list[str], list[str]]:
    """Parse a combine input list.

    One path per line; ``#`` starts a comment; a leading ``!`` marks a test
    that produces no output and carries no expected block.  Relative paths
    resolve against the list file's directory.
    """
    base = Path(path).parent
    inputs, output_free = [], []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        free = line.startswith("!")
        if free:
            line = line[1:].strip()
        p = Path(line)
        if not p.is_absolute():
            p = base / p
        inputs.append(str(p))
        if free:
            output_free.append(str(p))
    return inputs, output_free


DEFAULT_COLLISION_PATTERNS = (
    r"multiple definition of [`'‘\"]?([A-Za-z_.$][\w.$]*)['’\"]?",
    r"duplicate symbol:\s*[`'‘\"]?([A-Za-z_.$][\w.$]*)",
    r"duplicate symbol '_?([A-Za-z_.$][\w.$]*)'",
)


def link_collision_report(diagnostics: str, patterns=DEFAULT_COLLISION_PATTERNS) -> list[str]:
    """Duplicate-symbol names mentioned in linker output, sorted and unique."""
    found = set()
    for pat in patterns:
        found.update(m.group(1) for m in re.finditer(pat, diagnostics))
    return sorted(found)


def build_and_run(out_dir, suite: CombinedSuite, compiler, runner, cell=None):
    """Build a written suite (driver plus unit sources) and run the binary.

    Returns ``(compiler verdict, ExecutionResult or None)``; the result is
    None when the build did not produce a binary.
    """
    out_dir = Path(out_dir)
    stage = make_workdir("dh-combined-")
    try:
        # inline the header so the driver compiles without an include path
        header = (out_dir / HEADER_NAME).read_text()
        driver = (out_dir / DRIVER_NAME).read_text().replace(f'#include "{HEADER_NAME}"', header)
        (stage / DRIVER_NAME).write_text(driver)
        rec = invoke(compiler, cell, stage / DRIVER_NAME, keep=True,
                     support_files=suite.unit_paths(out_dir))
        try:
            verdict = classify(rec, compiler)
            if verdict.status is not Status.ACCEPT:
                return verdict, None
            return verdict, run_binary(rec.artifact, runner)
        finally:
            rec.cleanup()
    finally:
        shutil.rmtree(stage, ignore_errors=True)
