"""Campaign reports: collection, deterministic JSON and a text summary."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

REPORT_VERSION = 1

FINDING_SECTIONS = (
    "disagreements",
    "crash_hits",
    "matrix_discrepancies",
    "execdiff_mismatches",
    "asmdiff_differences",
    "link_collisions",
)


def _sort_items(items):
    return sorted(items, key=lambda x: json.dumps(x, sort_keys=True))


@dataclass
class CampaignReport:
    command: str = ""
    config: dict = field(default_factory=dict)
    partition: dict | None = None
    disagreements: list = field(default_factory=list)
    crash_hits: list = field(default_factory=list)
    matrix_discrepancies: list = field(default_factory=list)
    matrix_reports: list = field(default_factory=list)
    execdiff_mismatches: list = field(default_factory=list)
    execdiff_results: list = field(default_factory=list)
    quarantined: list = field(default_factory=list)
    asmdiff_differences: list = field(default_factory=list)
    link_collisions: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    tool_versions: dict = field(default_factory=dict)

    def finding_count(self) -> int:
        return sum(len(getattr(self, name)) for name in FINDING_SECTIONS)

    @property
    def has_findings(self) -> bool:
        return self.finding_count() > 0

    def counts(self) -> dict:
        c = {name: len(getattr(self, name)) for name in FINDING_SECTIONS}
        c["quarantined"] = len(self.quarantined)
        c["execdiff_results"] = len(self.execdiff_results)
        c["matrix_reports"] = len(self.matrix_reports)
        if self.partition is not None:
            for key, members in self.partition.items():
                c[f"partition_{key}"] = len(members)
        return c

    def to_dict(self) -> dict:
        partition = None
        if self.partition is not None:
            partition = {}
            for key, members in self.partition.items():
                partition[key] = (
                    {k: members[k] for k in sorted(members)}
                    if isinstance(members, dict) else sorted(members)
                )
        return {
            "report_version": REPORT_VERSION,
            "command": self.command,
            "config": self.config,
            "counts": self.counts(),
            "partition": partition,
            "disagreements": _sort_items(self.disagreements),
            "crash_hits": _sort_items(self.crash_hits),
            "matrix_discrepancies": _sort_items(self.matrix_discrepancies),
            "matrix_reports": _sort_items(self.matrix_reports),
            "execdiff_mismatches": _sort_items(self.execdiff_mismatches),
            "execdiff_results": _sort_items(self.execdiff_results),
            "quarantined": _sort_items(self.quarantined),
            "asmdiff_differences": _sort_items(self.asmdiff_differences),
            "link_collisions": _sort_items(self.link_collisions),
            "details": self.details,
            "timing": self.timing,
            "tool_versions": self.tool_versions,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignReport":
        rep = cls()
        for name in (
            "command", "config", "partition", "disagreements", "crash_hits",
            "matrix_discrepancies", "matrix_reports", "execdiff_mismatches",
            "execdiff_results", "quarantined", "asmdiff_differences",
            "link_collisions", "details", "timing", "tool_versions",
        ):
            if name in data and data[name] is not None:
                setattr(rep, name, data[name])
        return rep

    @classmethod
    def load(cls, path) -> "CampaignReport":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def merge(self, other: "CampaignReport") -> "CampaignReport":
        merged = CampaignReport.from_dict(self.to_dict())
        for name in FINDING_SECTIONS + ("matrix_reports", "execdiff_results", "quarantined"):
            getattr(merged, name).extend(getattr(other, name))
        if other.partition is not None:
            if merged.partition is None:
                merged.partition = {}
            for key, members in other.partition.items():
                mine = merged.partition.setdefault(key, {} if isinstance(members, dict) else [])
                if isinstance(mine, dict):
                    mine.update(members)
                else:
                    mine.extend(m for m in members if m not in mine)
        merged.details.update(other.details)
        merged.timing.update(other.timing)
        merged.tool_versions.update(other.tool_versions)
        merged.command = "+".join(c for c in (self.command, other.command) if c)
        return merged


def render_report(report: CampaignReport, fmt: str = "json") -> bytes:
    """Serialize ``report`` as stable JSON or a plain-text summary table."""
    if fmt == "json":
        return (json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n").encode()
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    counts = report.counts()
    lines = [f"diffharness report ({report.command or 'campaign'})"]
    if report.partition is not None:
        for key in ("both_accept", "both_reject", "ref_only_accept",
                    "subject_only_accept", "any_crash"):
            if key in report.partition:
                lines.append(f"partition {key}: {counts[f'partition_{key}']}")
    lines += [
        f"disagreements: {counts['disagreements']}",
        f"crash hits: {counts['crash_hits']}",
        f"matrix discrepancies: {counts['matrix_discrepancies']}",
        f"execdiff mismatches: {counts['execdiff_mismatches']}",
        f"quarantined tests: {counts['quarantined']}",
        f"asmdiff differences: {counts['asmdiff_differences']}",
        f"link collisions: {counts['link_collisions']}",
        f"total findings: {report.finding_count()}",
    ]
    for tool, version in sorted(report.tool_versions.items()):
        lines.append(f"tool {tool}: {version}")
    for item in _sort_items(report.crash_hits):
        lines.append(f"  crash: {item.get('path')} [{item.get('cell')}] {item.get('status')}")
    for item in _sort_items(report.execdiff_mismatches):
        where = item.get("first_diff_line") or item.get("first_diff_offset")
        lines.append(f"  mismatch: {item.get('path')} [{item.get('cell')}] "
                     f"{item.get('verdict')} at {where}")
    for item in _sort_items(report.matrix_discrepancies):
        lines.append(f"  matrix: {item.get('file')} [{item.get('cell')}] {item.get('status')}"
                     f" (baseline {item.get('baseline')})")
    for item in _sort_items(report.disagreements):
        lines.append(f"  disagreement: {item.get('path')} ({item.get('set')})")
    for item in _sort_items(report.asmdiff_differences):
        lines.append(f"  asmdiff: {item.get('name')} {item.get('verdict')} at "
                     f"{item.get('first_diff_offset')}")
    return ("\n".join(lines) + "\n").encode()
