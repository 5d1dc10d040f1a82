"""Machine-code comparison between assemblers.

Source in one dialect is rewritten line by line into the other, both sides
are assembled, the code section is pulled out of each ELF object, and the
bytes are compared after zeroing relocated bytes and masking instruction
fields (branch offsets and the like) selected by a :class:`MaskTable`.
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
import shutil
from dataclasses import dataclass, field
from pathlib import Path

from ..toolchain import (
    HarnessError, OptionSet, Status, ToolProfile, classify, invoke, make_workdir,
)
from .elf import Relocation, read_object

BASELINE_MAGIC = b"ASMBASE1\n"


class AlignmentError(HarnessError):
    pass


class BaselineError(HarnessError):
    pass


class AssemblyFailed(HarnessError):
    def __init__(self, message, diagnostics=""):
        super().__init__(message)
        self.diagnostics = diagnostics


# ---------------------------------------------------------------------------
# dialect translation


@dataclass(frozen=True)
class RewriteRule:
    pattern: str
    replacement: str

    def compiled(self):
        return re.compile(self.pattern)


@dataclass
class DialectRuleSet:
    rules: list[RewriteRule] = field(default_factory=list)
    skip: list[str] = field(default_factory=list)
    source_comment: str | None = None
    target_comment: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "DialectRuleSet":
        comments = data.get("comments", {})
        return cls(
            rules=[RewriteRule(r["match"], r["replace"]) for r in data.get("rules", [])],
            skip=list(data.get("skip", [])),
            source_comment=comments.get("source"),
            target_comment=comments.get("target"),
        )

    @classmethod
    def load(cls, path) -> "DialectRuleSet":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = {
            "rules": [{"match": r.pattern, "replace": r.replacement} for r in self.rules],
            "skip": list(self.skip),
        }
        if self.source_comment or self.target_comment:
            d["comments"] = {"source": self.source_comment, "target": self.target_comment}
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


def _split_comment(line: str, marker: str):
    """(code, comment-without-marker or None), ignoring markers inside quotes."""
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == "\\":
                continue
            if ch == quote:
                quote = None
        elif ch in "\"'":
            quote = ch
        elif line.startswith(marker, i):
            return line[:i], line[i + len(marker):]
    return line, None


def translate(source: str, rules: DialectRuleSet) -> tuple[str, list[tuple[int, str]]]:
    """Rewrite ``source`` one line at a time.

    Skip patterns are checked first and drop the line (it is logged with its
    1-based number); otherwise the first rule whose pattern matches rewrites
    the line and later rules are not consulted.
    """
    compiled = [(r.compiled(), r.replacement) for r in rules.rules]
    skips = [re.compile(p) for p in rules.skip]
    out, skipped = [], []
    lines = source.split("\n")
    trailing = source.endswith("\n")
    if trailing:
        lines = lines[:-1]
    for num, line in enumerate(lines, 1):
        comment = None
        code = line
        if rules.source_comment:
            code, comment = _split_comment(line, rules.source_comment)
        if any(s.search(code) for s in skips):
            skipped.append((num, line))
            continue
        for pat, repl in compiled:
            if pat.search(code):
                code = pat.sub(repl, code, count=1)
                break
        if comment is not None:
            marker = rules.target_comment or rules.source_comment
            code = f"{code}{marker}{comment}"
        out.append(code)
    text = "\n".join(out)
    if trailing and out:
        text += "\n"
    return text, skipped


# ---------------------------------------------------------------------------
# object extraction


def extract_code(obj, section: str = ".text") -> tuple[bytes, list[Relocation]]:
    """Bytes of ``section`` and the relocations applied to it."""
    elf = read_object(obj)
    sec = elf.section(section)
    return elf.section_bytes(sec), elf.relocations_for(sec)


# ---------------------------------------------------------------------------
# masking


@dataclass(frozen=True)
class MaskEntry:
    match_value: int
    match_mask: int
    clear_mask: int
    name: str = ""

    def __post_init__(self):
        if self.clear_mask & self.match_mask:
            raise ValueError(
                f"mask entry {self.name or hex(self.match_value)}: clear_mask overlaps match_mask"
            )
        if self.match_value & ~self.match_mask:
            raise ValueError(
                f"mask entry {self.name or hex(self.match_value)}: match_value has bits outside match_mask"
            )

    def matches(self, word: int) -> bool:
        return word & self.match_mask == self.match_value


@dataclass
class MaskTable:
    entries: list[MaskEntry] = field(default_factory=list)

    @classmethod
    def from_dict(cls, data) -> "MaskTable":
        items = data.get("entries", []) if isinstance(data, dict) else data

        def num(v):
            return int(v, 0) if isinstance(v, str) else int(v)

        return cls([
            MaskEntry(num(e["match_value"]), num(e["match_mask"]), num(e["clear_mask"]),
                      e.get("name", ""))
            for e in items
        ])

    @classmethod
    def load(cls, path) -> "MaskTable":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @classmethod
    def clear_all(cls, word_size: int = 4) -> "MaskTable":
        return cls([MaskEntry(0, 0, (1 << (8 * word_size)) - 1, "all")])

    def to_dict(self) -> dict:
        return {"entries": [
            {"name": e.name, "match_value": hex(e.match_value),
             "match_mask": hex(e.match_mask), "clear_mask": hex(e.clear_mask)}
            for e in self.entries
        ]}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def apply(self, word: int) -> int:
        """Clear fields until no matching entry changes the word any more."""
        while True:
            cleared = 0
            for e in self.entries:
                if e.matches(word):
                    cleared |= e.clear_mask
            new = word & ~cleared
            if new == word:
                return word
            word = new


@dataclass
class MaskStats:
    words: int = 0
    words_masked: int = 0
    relocation_bytes_zeroed: int = 0
    masked_words: set = field(default_factory=set)  # offsets of words a table entry matched


def mask(data: bytes, word_size: int, endianness: str, table: MaskTable | None,
         relocations=(), stats: MaskStats | None = None) -> bytes:
    """Zero relocated bytes, then clear table-selected fields in every word."""
    if word_size <= 0 or len(data) % word_size:
        raise AlignmentError(f"{len(data)} bytes is not a multiple of word size {word_size}")
    if endianness not in ("little", "big"):
        raise ValueError(f"endianness must be 'little' or 'big', not {endianness!r}")
    buf = bytearray(data)
    stats = stats if stats is not None else MaskStats()
    for rel in relocations:
        offset, length = (rel.offset, rel.length) if isinstance(rel, Relocation) else rel[:2]
        if offset < 0 or offset + length > len(buf):
            raise AlignmentError(f"relocation span ({offset}, {length}) outside {len(buf)} bytes")
        for k in range(offset, offset + length):
            if buf[k]:
                stats.relocation_bytes_zeroed += 1
            buf[k] = 0
    stats.words = len(buf) // word_size
    if table is not None and table.entries:
        for off in range(0, len(buf), word_size):
            word = int.from_bytes(buf[off:off + word_size], endianness)
            if not any(e.matches(word) for e in table.entries):
                continue
            stats.words_masked += 1
            stats.masked_words.add(off)
            buf[off:off + word_size] = table.apply(word).to_bytes(word_size, endianness)
    return bytes(buf)


# ---------------------------------------------------------------------------
# units and comparison


@dataclass
class AsmUnit:
    code: bytes
    word_size: int = 4
    endianness: str = "little"
    relocations: list = field(default_factory=list)
    source: str = ""
    translated: str = ""
    skipped: list = field(default_factory=list)
    premasked: bool = False  # loaded from a baseline: already masked

    def __post_init__(self):
        if len(self.code) % self.word_size:
            raise AlignmentError(
                f"code length {len(self.code)} is not a multiple of word size {self.word_size}"
            )
        for rel in self.relocations:
            off, ln = (rel.offset, rel.length) if isinstance(rel, Relocation) else rel[:2]
            if off < 0 or off + ln > len(self.code):
                raise AlignmentError(f"relocation ({off}, {ln}) out of bounds")

    @classmethod
    def from_object(cls, obj, section=".text", word_size=4, endianness=None, **kw):
        elf = read_object(obj)
        sec = elf.section(section)
        return cls(
            code=elf.section_bytes(sec),
            word_size=word_size,
            endianness=endianness or elf.endianness,
            relocations=elf.relocations_for(sec),
            **kw,
        )


class AsmVerdict(str, enum.Enum):
    EQUAL = "equal"
    DIFFER = "differ"
    LENGTH_MISMATCH = "length_mismatch"


@dataclass
class AsmDiffReport:
    verdict: AsmVerdict
    first_diff_offset: int | None = None
    word_a: str | None = None
    word_b: str | None = None
    masked_a: bool = False
    masked_b: bool = False
    length_a: int = 0
    length_b: int = 0
    words_compared: int = 0
    words_masked: int = 0
    relocation_bytes_zeroed: int = 0
    differing_words: int = 0

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["verdict"] = self.verdict.value
        return d


def compare(unit_a: AsmUnit, unit_b: AsmUnit, table: MaskTable | None = None) -> AsmDiffReport:
    """Mask both units (each with its own relocations) and compare word by word."""
    if unit_a.word_size != unit_b.word_size or unit_a.endianness != unit_b.endianness:
        raise AlignmentError("units declare different word size or endianness")
    ws, end = unit_a.word_size, unit_a.endianness
    sa, sb = MaskStats(), MaskStats()
    ma = mask(unit_a.code, ws, end, table, unit_a.relocations, sa)
    mb = mask(unit_b.code, ws, end, table, unit_b.relocations, sb)
    report = AsmDiffReport(
        AsmVerdict.EQUAL,
        length_a=len(ma), length_b=len(mb),
        words_masked=sa.words_masked + sb.words_masked,
        relocation_bytes_zeroed=sa.relocation_bytes_zeroed + sb.relocation_bytes_zeroed,
    )
    if len(ma) != len(mb):
        report.verdict = AsmVerdict.LENGTH_MISMATCH
        return report
    report.words_compared = len(ma) // ws
    for off in range(0, len(ma), ws):
        wa, wb = ma[off:off + ws], mb[off:off + ws]
        if wa != wb:
            report.differing_words += 1
            if report.first_diff_offset is None:
                report.verdict = AsmVerdict.DIFFER
                report.first_diff_offset = off
                digits = 2 * ws
                report.word_a = f"{int.from_bytes(wa, end):0{digits}x}"
                report.word_b = f"{int.from_bytes(wb, end):0{digits}x}"
                report.masked_a = off in sa.masked_words
                report.masked_b = off in sb.masked_words
    return report


def assemble_unit(source: str, assembler: ToolProfile, options: OptionSet | None = None,
                  rules: DialectRuleSet | None = None, section: str = ".text",
                  word_size: int = 4, endianness: str = "little",
                  file_name: str = "unit.s") -> AsmUnit:
    """Translate (optionally), assemble, and extract one unit."""
    translated, skipped = translate(source, rules) if rules else (source, [])
    stage = make_workdir("dh-asm-")
    try:
        src = stage / file_name
        src.write_text(translated)
        rec = invoke(assembler, options, src, keep=True)
        try:
            verdict = classify(rec, assembler)
            if verdict.status is not Status.ACCEPT:
                raise AssemblyFailed(
                    f"{assembler.id} gave {verdict.status.value}", verdict.diagnostics
                )
            elf = read_object(rec.artifact)
        finally:
            rec.cleanup()
    finally:
        shutil.rmtree(stage, ignore_errors=True)
    sec = elf.section(section)
    return AsmUnit(
        code=elf.section_bytes(sec),
        word_size=word_size,
        endianness=endianness,
        relocations=elf.relocations_for(sec),
        source=source,
        translated=translated,
        skipped=skipped,
    )


# ---------------------------------------------------------------------------
# baselines


def write_baseline(path, unit: AsmUnit, table: MaskTable | None, metadata: dict | None = None):
    """Store the masked code of ``unit`` for comparison on another machine.

    Layout: ``ASMBASE1\\n``, one line of JSON metadata (sorted keys), then
    the raw masked bytes to end of file.
    """
    masked = mask(unit.code, unit.word_size, unit.endianness, table, unit.relocations)
    meta = dict(metadata or {})
    meta.update({
        "word_size": unit.word_size,
        "endianness": unit.endianness,
        "length": len(masked),
        "mask_table_sha256": (table or MaskTable()).digest(),
        "relocations": [[r.offset, r.length, r.kind] if isinstance(r, Relocation) else list(r)
                        for r in unit.relocations],
        "skipped_lines": len(unit.skipped),
    })
    Path(path).write_bytes(
        BASELINE_MAGIC + json.dumps(meta, sort_keys=True).encode() + b"\n" + masked
    )


def read_baseline(path) -> tuple[dict, AsmUnit]:
    data = Path(path).read_bytes()
    if not data.startswith(BASELINE_MAGIC):
        raise BaselineError(f"{path}: not an ASMBASE1 baseline")
    rest = data[len(BASELINE_MAGIC):]
    nl = rest.find(b"\n")
    if nl < 0:
        raise BaselineError(f"{path}: missing metadata line")
    try:
        meta = json.loads(rest[:nl])
    except json.JSONDecodeError as exc:
        raise BaselineError(f"{path}: bad metadata: {exc}") from None
    code = rest[nl + 1:]
    if len(code) != meta.get("length", len(code)):
        raise BaselineError(f"{path}: length {len(code)} != recorded {meta['length']}")
    unit = AsmUnit(code, meta["word_size"], meta["endianness"], [], premasked=True)
    return meta, unit
