"""Figures rendered next to campaign reports.

Uses the object-oriented Figure API so nothing touches pyplot's global
state; the backend is plain Agg via ``Figure.savefig``.
"""

from __future__ import annotations

from collections import Counter
from pathlib import Path

from matplotlib.colors import ListedColormap
from matplotlib.figure import Figure

from .report import FINDING_SECTIONS, CampaignReport

STATUS_COLORS = {
    "Accept": "#4c9a5b",
    "Reject": "#d9a441",
    "Crash": "#c0392b",
    "Timeout": "#6c3483",
}
STATUS_CODES = {name: i for i, name in enumerate(STATUS_COLORS)}

DPI = 120


def _bar(ax, labels, values, color="#3b6ea5"):
    pos = range(len(labels))
    ax.barh(list(pos), values, color=color)
    ax.set_yticks(list(pos))
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    for y, v in zip(pos, values):
        ax.text(v, y, f" {v}", va="center", fontsize=8)


def findings_figure(report: CampaignReport) -> Figure:
    fig = Figure(figsize=(6, 3))
    ax = fig.add_subplot()
    labels = [s.replace("_", " ") for s in FINDING_SECTIONS]
    values = [len(getattr(report, s)) for s in FINDING_SECTIONS]
    _bar(ax, labels, values)
    ax.set_xlabel("count")
    ax.set_title(f"findings: {report.command or 'campaign'}")
    fig.tight_layout()
    return fig


def partition_figure(report: CampaignReport) -> Figure | None:
    if not report.partition:
        return None
    fig = Figure(figsize=(6, 2.8))
    ax = fig.add_subplot()
    keys = ["both_accept", "both_reject", "ref_only_accept", "subject_only_accept", "any_crash"]
    keys = [k for k in keys if k in report.partition]
    _bar(ax, [k.replace("_", " ") for k in keys], [len(report.partition[k]) for k in keys],
         color="#5d6d7e")
    ax.set_xlabel("files")
    ax.set_title("corpus partition")
    fig.tight_layout()
    return fig


def matrix_figure(report: CampaignReport) -> Figure | None:
    """Status heatmap: one row per file, one column per option cell."""
    reports = report.matrix_reports
    if not reports:
        return None
    cells = sorted({k for r in reports for k in r["cells"]})
    files = [Path(r["file"]).name for r in reports]
    grid = [
        [STATUS_CODES.get(r["cells"].get(c, ""), -1) for c in cells] for r in reports
    ]
    fig = Figure(figsize=(max(4, 0.5 * len(cells) + 3), max(2, 0.3 * len(files) + 1.5)))
    ax = fig.add_subplot()
    cmap = ListedColormap(list(STATUS_COLORS.values()))
    ax.imshow(grid, cmap=cmap, vmin=0, vmax=len(STATUS_COLORS) - 1, aspect="auto")
    ax.set_xticks(range(len(cells)))
    ax.set_xticklabels(cells, rotation=60, ha="right", fontsize=7)
    ax.set_yticks(range(len(files)))
    ax.set_yticklabels(files, fontsize=7)
    for y, r in enumerate(reports):
        flagged = {d["cell"] for d in r.get("discrepancies", [])}
        for x, c in enumerate(cells):
            if c in flagged:
                ax.text(x, y, "!", ha="center", va="center", color="white", fontsize=9)
    handles = [
        ax.scatter([], [], marker="s", color=col, label=name)
        for name, col in STATUS_COLORS.items()
    ]
    ax.legend(handles=handles, fontsize=7, loc="upper left", bbox_to_anchor=(1.01, 1))
    ax.set_title("option matrix ('!' = discrepancy)")
    fig.tight_layout()
    return fig


def execdiff_figure(report: CampaignReport) -> Figure | None:
    results = report.execdiff_results
    if not results:
        return None
    counts = Counter(r["verdict"] for r in results)
    order = ["match", "mismatch", "build_failure", "run_failure", "timeout"]
    fig = Figure(figsize=(6, 2.6))
    ax = fig.add_subplot()
    _bar(ax, order, [counts.get(k, 0) for k in order], color="#2e86c1")
    ax.set_xlabel("tests")
    ax.set_title("execution comparison")
    fig.tight_layout()
    return fig


FIGURES = {
    "findings": findings_figure,
    "partition": partition_figure,
    "matrix": matrix_figure,
    "execdiff": execdiff_figure,
}


def render_figures(report: CampaignReport, out_dir, stem: str = "report") -> list[Path]:
    """Write every figure that has data as ``<stem>-<name>.png``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, build in FIGURES.items():
        fig = build(report)
        if fig is None:
            continue
        path = out / f"{stem}-{name}.png"
        fig.savefig(path, dpi=DPI)
        written.append(path)
    return written
