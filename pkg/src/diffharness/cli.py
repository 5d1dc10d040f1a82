"""Command-line entry point.

Exit status: 0 no findings, 1 findings, 2 usage or configuration error,
3 environment error (a tool could not be found).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import time
from importlib import resources
from pathlib import Path

from . import combiner, corpus, execdiff, generator, matrix, reducer
from . import asmdiff
from .plotting import render_figures
from .report import CampaignReport, render_report
from .toolchain import (
    HarnessError,
    Kind,
    OptionSet,
    ProfileError,
    Status,
    ToolNotFound,
    ToolProfile,
    WorkdirError,
    load_profiles,
    make_workdir,
    tool_version,
)

log = logging.getLogger("diffharness")

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE, EXIT_ENV = 0, 1, 2, 3

SUBCOMMANDS = (
    "scan", "assess", "partition", "sweep", "matrix", "capture", "verify",
    "selfcheck", "gen", "combine", "reduce", "asmdiff", "report",
)


class UsageError(HarnessError):
    pass


def data_path(name: str) -> Path:
    return Path(str(resources.files("diffharness") / "data" / name))


class Session:
    """Loaded configuration plus the report being assembled."""

    def __init__(self, args):
        self.args = args
        cfg_path = args.config or data_path("profiles.json")
        self.config_path = str(cfg_path)
        self.profiles = load_profiles(cfg_path)
        raw = json.loads(Path(cfg_path).read_text())
        self.campaign = raw.get("campaign", {}) if isinstance(raw, dict) else {}
        self.jobs = args.jobs or os.cpu_count() or 1
        self.report = CampaignReport(command=args.command)

    def profile(self, pid: str, kind: Kind | None = None) -> ToolProfile:
        if pid not in self.profiles:
            raise ProfileError(f"unknown tool profile {pid!r}; known: {sorted(self.profiles)}")
        prof = self.profiles[pid]
        if kind is not None and prof.kind is not kind:
            raise ProfileError(f"profile {pid!r} is a {prof.kind.value}, expected {kind.value}")
        self.report.tool_versions.setdefault(pid, tool_version(prof))
        return prof

    def cell(self, prof: ToolProfile, key: str | None) -> OptionSet:
        return OptionSet.parse(prof, key) if key else prof.default_options()


def _files(paths, extensions=(".c",)) -> list[corpus.CandidateFile]:
    out = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(corpus.scan(p, extensions))
        elif p.is_file():
            out.append(corpus.CandidateFile.from_path(p))
        else:
            raise corpus.RootMissing(f"no such file or directory: {p}")
    return out


def _ledger(args):
    return corpus.Ledger(args.ledger) if getattr(args, "ledger", None) else None


# ---------------------------------------------------------------------------
# subcommands; each fills s.report and returns True when it found something


def cmd_scan(s: Session) -> bool:
    a = s.args
    found = []
    for root in a.roots:
        found.extend(corpus.scan(root, a.ext or None, a.ignore or ()))
    s.report.details["scan"] = [
        {"path": c.path, "content_hash": c.content_hash, "language_tag": c.language_tag,
         "size_bytes": c.size_bytes, "tags": list(c.tags)}
        for c in found
    ]
    return False


def _crash_items(hits):
    return [h.to_dict() for h in hits]


def cmd_assess(s: Session) -> bool:
    a = s.args
    prof = s.profile(a.tool)
    cell = s.cell(prof, a.cell)
    verdicts = corpus.assess(_files(a.roots, a.ext), prof, cell, _ledger(a), s.jobs)
    s.report.details["assess"] = {p: v.status.value for p, v in verdicts.items()}
    s.report.crash_hits = [
        corpus.CrashHit(p, v.cell, v).to_dict()
        for p, v in verdicts.items() if v.status in (Status.CRASH, Status.TIMEOUT)
    ]
    return bool(s.report.crash_hits)


def _partition_into_report(s, part):
    s.report.partition = part.to_dict()
    s.report.disagreements = (
        [{"path": p, "set": "ref_only_accept"} for p in sorted(part.ref_only_accept)]
        + [{"path": p, "set": "subject_only_accept"} for p in sorted(part.subject_only_accept)]
    )
    s.report.crash_hits.extend(
        r.to_dict() for recs in part.any_crash.values() for r in recs
    )


def cmd_partition(s: Session) -> bool:
    a = s.args
    ref, sub = s.profile(a.ref), s.profile(a.subject)
    files = _files(a.roots, a.ext)
    ledger = _ledger(a)
    rv = corpus.assess(files, ref, s.cell(ref, a.ref_cell), ledger, s.jobs)
    sv = corpus.assess(files, sub, s.cell(sub, a.subject_cell), ledger, s.jobs)
    _partition_into_report(s, corpus.partition(rv, sv))
    return s.report.has_findings


def cmd_sweep(s: Session) -> bool:
    a = s.args
    prof = s.profile(a.tool)
    cells = matrix.build_matrix(prof, a.mode)
    hits = corpus.crash_sweep(_files(a.roots, a.ext), prof, cells, _ledger(a), s.jobs)
    s.report.crash_hits = _crash_items(hits)
    s.report.config["cells"] = [c.canonical_key for c in cells]
    return bool(hits)


def _matrix_into_report(s, rep):
    s.report.matrix_reports.append(rep.to_dict())
    s.report.matrix_discrepancies.extend(
        {"file": rep.file, "cell": k, "status": st.value, "baseline": rep.baseline_status.value}
        for k, st in rep.discrepancies
    )


def cmd_matrix(s: Session) -> bool:
    a = s.args
    prof = s.profile(a.tool)
    cells = matrix.build_matrix(prof, a.mode)
    for cand in _files(a.roots, a.ext):
        _matrix_into_report(s, matrix.run_matrix(cand.path, prof, cells, s.jobs))
    return bool(s.report.matrix_discrepancies)


def _map_jobs(s, fn, items):
    return corpus._fan_out(fn, list(items), s.jobs)


def cmd_capture(s: Session) -> bool:
    a = s.args
    ref = s.profile(a.ref, Kind.COMPILER)
    runner = s.profile(a.runner, Kind.RUNNER)
    cell = s.cell(ref, a.cell)
    out_dir = Path(a.out_dir) if a.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    failures = []

    def one(cand):
        try:
            ann = execdiff.capture_reference(cand.path, ref, runner, cell)
        except (execdiff.ReferenceBuildFailed, execdiff.ReferenceRunTimeout,
                execdiff.ReferenceRunFailed, execdiff.MarkerCollision) as exc:
            return {"path": cand.path, "error": type(exc).__name__, "message": str(exc)}
        target = out_dir / Path(cand.path).name if out_dir else Path(cand.path)
        ann.write(target)
        return None

    for res in _map_jobs(s, one, _files(a.files, a.ext)):
        if res:
            failures.append(res)
    s.report.details["capture_failures"] = failures
    return bool(failures)


def _diff_into_report(s, rep: execdiff.DiffReport):
    d = rep.to_dict()
    s.report.execdiff_results.append({"path": d["path"], "cell": d["cell"], "verdict": d["verdict"]})
    if not rep.ok:
        s.report.execdiff_mismatches.append(d)


def _annotated(files):
    keep, missing = [], []
    for cand in files:
        try:
            has = execdiff.extract_expected(cand.path) is not None
        except execdiff.MalformedBlock:
            has = False
        (keep if has else missing).append(cand)
    return keep, missing


def cmd_verify(s: Session) -> bool:
    a = s.args
    sub = s.profile(a.subject, Kind.COMPILER)
    runner = s.profile(a.runner, Kind.RUNNER)
    cells = matrix.build_matrix(sub, a.mode) if a.mode else [s.cell(sub, a.cell)]
    files, missing = _annotated(_files(a.files, a.ext))
    s.report.details["no_expected_block"] = [c.path for c in missing]
    work = [(c, cell) for c in files for cell in cells]
    reps = _map_jobs(s, lambda w: execdiff.verify(w[0].path, sub, runner, w[1], a.compare_exit), work)
    for rep in reps:
        _diff_into_report(s, rep)
    return bool(s.report.execdiff_mismatches)


def cmd_selfcheck(s: Session) -> bool:
    a = s.args
    ref = s.profile(a.ref, Kind.COMPILER)
    runner = s.profile(a.runner, Kind.RUNNER)
    cell = s.cell(ref, a.cell)
    files, missing = _annotated(_files(a.files, a.ext))
    s.report.details["no_expected_block"] = [c.path for c in missing]
    reps = _map_jobs(s, lambda c: execdiff.self_check(c.path, ref, runner, cell), files)
    for rep in reps:
        s.report.execdiff_results.append(
            {"path": rep.path, "cell": rep.cell, "verdict": rep.verdict.value}
        )
        if rep.quarantined:
            s.report.quarantined.append(rep.to_dict())
    if a.quarantine_file:
        Path(a.quarantine_file).write_text(
            "".join(r["path"] + "\n" for r in sorted(s.report.quarantined, key=lambda r: r["path"]))
        )
    return bool(s.report.quarantined)


def cmd_gen(s: Session) -> bool:
    a = s.args
    pools, pairs = generator.preset(a.preset)
    ops = generator.operators(a.ops.split(",") if a.ops else None)
    programs = generator.gen_programs(pools, ops, a.chunk, pairs)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for prog in programs:
        (out / prog.name).write_text(prog.text)
    plan = generator.plan_cases(pools, ops, pairs)
    manifest = {
        "version": generator.GENERATOR_VERSION,
        "preset": a.preset,
        "operators": [op.token for op in ops],
        "chunk_size": a.chunk,
        "files": {p.name: [c.label for c in p.cases] for p in programs},
        "excluded": [{"label": c.label, "reason": r} for c, r in plan.excluded],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    s.report.details["gen"] = {
        "files": len(programs),
        "cases": len(plan.cases),
        "excluded": len(plan.excluded),
        "out": str(out),
    }
    return False


def cmd_combine(s: Session) -> bool:
    a = s.args
    inputs, free = combiner.read_list_file(a.list)
    suite = combiner.combine(inputs, free)
    out = suite.write(a.out)
    s.report.details["combine"] = suite.to_dict()
    if not a.build:
        return False
    comp = s.profile(a.compiler, Kind.COMPILER)
    runner = s.profile(a.runner, Kind.RUNNER)
    verdict, result = combiner.build_and_run(out, suite, comp, runner, s.cell(comp, a.cell))
    if result is None:
        collisions = combiner.link_collision_report(verdict.diagnostics)
        s.report.link_collisions = [{"symbol": sym} for sym in collisions]
        s.report.details["combine_build"] = {"status": verdict.status.value,
                                             "diagnostics": verdict.diagnostics}
        if not collisions:
            s.report.execdiff_mismatches.append(
                {"path": str(out), "cell": verdict.cell, "verdict": "build_failure"}
            )
        return True
    diff = execdiff.first_difference(suite.combined_expected, result.stdout_bytes)
    entry = {"path": str(out), "cell": verdict.cell,
             "verdict": "match" if diff is None else "mismatch"}
    s.report.execdiff_results.append(entry)
    if diff is not None:
        entry.update(first_diff_line=diff.line, expected_line=diff.expected_line,
                     actual_line=diff.actual_line, first_diff_offset=diff.offset)
        s.report.execdiff_mismatches.append(entry)
    return diff is not None


def cmd_reduce(s: Session) -> bool:
    a = s.args
    res = reducer.reduce_file(a.file, a.test, a.granularity, a.out, a.budget,
                              s.jobs if a.parallel else 1, a.timeout)
    print(res.summary(), file=sys.stderr)
    s.report.details["reduce"] = {
        "input": a.file, "output": str(res.output), "original_units": res.original_units,
        "reduced_units": res.reduced_units, "ratio": round(res.ratio, 6),
        "predicate_calls": res.calls, "minimal": res.minimal,
    }
    return False


def _asm_name(src: Path) -> str:
    # assemblers pick the input language from the suffix
    return src.name if src.suffix in (".s", ".S") else f"{src.stem or 'unit'}.s"


def _asm_side(s, a, which):
    obj = getattr(a, f"object_{which}")
    ws, end = a.word_size, a.endian
    if obj:
        return asmdiff.AsmUnit.from_object(obj, a.section, ws, end), {"object": obj}
    src = getattr(a, f"source_{which}") or a.source
    asm_id = getattr(a, f"assembler_{which}")
    if not (src and asm_id):
        raise UsageError(f"side {which.upper()} needs --object-{which} or a source and --assembler-{which}")
    prof = s.profile(asm_id, Kind.ASSEMBLER)
    rules_path = getattr(a, f"rules_{which}")
    rules = asmdiff.DialectRuleSet.load(rules_path) if rules_path else None
    unit = asmdiff.assemble_unit(
        Path(src).read_text(), prof, s.cell(prof, getattr(a, f"cell_{which}")), rules,
        a.section, ws, end, _asm_name(Path(src)),
    )
    meta = {"source": str(src), "assembler": asm_id, "tool_version": tool_version(prof),
            "ruleset_sha256": rules.digest() if rules else None}
    return unit, meta


def cmd_asmdiff(s: Session) -> bool:
    a = s.args
    table = None
    if not a.no_mask:
        table = asmdiff.MaskTable.load(a.mask) if a.mask else asmdiff.MaskTable()
    if a.baseline:
        meta_a, unit_a = asmdiff.read_baseline(a.baseline)
    else:
        unit_a, meta_a = _asm_side(s, a, "a")
    if a.save_baseline:
        asmdiff.write_baseline(a.save_baseline, unit_a, table, meta_a)
        s.report.details["baseline"] = {"path": a.save_baseline, "length": len(unit_a.code)}
        if not (a.object_b or a.assembler_b):
            return False
    unit_b, meta_b = _asm_side(s, a, "b")
    rep = asmdiff.compare(unit_a, unit_b, table)
    d = rep.to_dict()
    d["name"] = a.name or str(meta_b.get("source") or meta_b.get("object"))
    s.report.details["asmdiff"] = {"a": meta_a, "b": meta_b, "result": d,
                                   "skipped_a": unit_a.skipped, "skipped_b": unit_b.skipped}
    if rep.verdict is not asmdiff.AsmVerdict.EQUAL:
        s.report.asmdiff_differences.append(d)
    return rep.verdict is not asmdiff.AsmVerdict.EQUAL


def run_campaign(s: Session, cfg: dict) -> None:
    """Partition, sweep, matrix and execution comparison from a campaign config."""
    ref = s.profile(cfg["reference"], Kind.COMPILER)
    sub = s.profile(cfg["subject"], Kind.COMPILER)
    runner_ids = cfg.get("runners") or ["native"]
    runner = s.profile(runner_ids[0], Kind.RUNNER)
    mode = cfg.get("matrix_mode", "compromise")
    s.report.config = {k: cfg[k] for k in sorted(cfg)}

    files = []
    for root in cfg.get("corpus_roots", []):
        root = Path(root)
        if not root.is_absolute() and s.args.config:
            root = Path(s.args.config).parent / root
        files.extend(corpus.scan(root, [".c"]))
    if files:
        rv = corpus.assess(files, ref, ref.default_options(), None, s.jobs)
        sv = corpus.assess(files, sub, sub.default_options(), None, s.jobs)
        part = corpus.partition(rv, sv)
        _partition_into_report(s, part)
        accepted = [c for c in files if c.path in part.both_accept]
        cells = matrix.build_matrix(sub, mode)
        for cand in accepted:
            rep = matrix.run_matrix(cand.path, sub, cells, s.jobs)
            _matrix_into_report(s, rep)
            for k, st in rep.cells.items():
                if st.status in (Status.CRASH, Status.TIMEOUT):
                    s.report.crash_hits.append(corpus.CrashHit(cand.path, k, st).to_dict())
    else:
        accepted = []

    work = make_workdir("dh-campaign-")
    try:
        tests = []
        for cand in accepted:
            tests.append(Path(cand.path))
        preset = cfg.get("generator_preset")
        if preset:
            pools, pairs = generator.preset(preset)
            progs = generator.gen_programs(pools, None, int(cfg.get("chunk_size", 40)), pairs)
            gen_dir = work / "gen"
            gen_dir.mkdir()
            for prog in progs:
                (gen_dir / prog.name).write_text(prog.text)
                tests.append(gen_dir / prog.name)
            s.report.details["generated_files"] = len(progs)
        ann_dir = work / "annotated"
        ann_dir.mkdir()

        def capture(item):
            idx, path = item
            target = ann_dir / f"{idx:05d}-{path.name}"
            try:
                execdiff.capture_reference(path, ref, runner).write(target)
            except (execdiff.ReferenceBuildFailed, execdiff.ReferenceRunTimeout,
                    execdiff.ReferenceRunFailed) as exc:
                return (str(path), None, str(exc))
            return (str(path), target, None)

        captured = _map_jobs(s, capture, list(enumerate(tests)))
        s.report.details["capture_failures"] = [
            {"path": p, "message": m} for p, t, m in captured if t is None
        ]
        origin = {str(t): p for p, t, _ in captured if t is not None}
        checks = _map_jobs(
            s, lambda t: execdiff.self_check(t, ref, runner), [Path(t) for t in origin]
        )
        clean = []
        for rep in checks:
            rep.path = origin[rep.path]
            if rep.quarantined:
                s.report.quarantined.append(rep.to_dict())
            else:
                clean.append(next(t for t, p in origin.items() if p == rep.path))
        reps = _map_jobs(s, lambda t: execdiff.verify(t, sub, runner), clean)
        for rep in reps:
            rep.path = origin[rep.path]
            _diff_into_report(s, rep)
    finally:
        shutil.rmtree(work, ignore_errors=True)


def cmd_report(s: Session) -> bool:
    a = s.args
    if a.inputs:
        merged = CampaignReport(command="report")
        for path in a.inputs:
            merged = merged.merge(CampaignReport.load(path))
        merged.command = "report"
        merged.tool_versions.update(s.report.tool_versions)
        s.report = merged
        return s.report.has_findings
    cfg = dict(s.campaign)
    if a.reference:
        cfg["reference"] = a.reference
    if a.subject:
        cfg["subject"] = a.subject
    if a.corpus:
        cfg["corpus_roots"] = [str(Path(c).resolve()) for c in a.corpus]
    if a.preset is not None:
        cfg["generator_preset"] = a.preset or None
    if a.chunk:
        cfg["chunk_size"] = a.chunk
    if a.mode:
        cfg["matrix_mode"] = a.mode
    for key in ("reference", "subject"):
        if not cfg.get(key):
            raise UsageError(f"campaign needs a {key} profile (config 'campaign' or --{key})")
    run_campaign(s, cfg)
    return s.report.has_findings


HANDLERS = {
    "scan": cmd_scan, "assess": cmd_assess, "partition": cmd_partition,
    "sweep": cmd_sweep, "matrix": cmd_matrix, "capture": cmd_capture,
    "verify": cmd_verify, "selfcheck": cmd_selfcheck, "gen": cmd_gen,
    "combine": cmd_combine, "reduce": cmd_reduce, "asmdiff": cmd_asmdiff,
    "report": cmd_report,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    def globals_parser(sub_level):
        # subcommand copies use SUPPRESS so they never clobber flags given earlier
        d = (lambda v: argparse.SUPPRESS) if sub_level else (lambda v: v)
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--config", default=d(None), help="tool/campaign configuration JSON")
        g.add_argument("--jobs", type=int, default=d(None), help="parallel tool invocations")
        g.add_argument("--report", default=d(None),
                       help="write the JSON report here (figures go alongside)")
        g.add_argument("--format", choices=("json", "text"), default=d("text"),
                       help="format of the report printed to stdout")
        g.add_argument("--no-figures", action="store_true", default=d(False),
                       help="skip PNG figures")
        g.add_argument("--timing", action="store_true", default=d(False),
                       help="include wall-clock timing (makes reports run-dependent)")
        g.add_argument("-v", "--verbose", action="store_true", default=d(False))
        return g

    common = globals_parser(False)
    sub_common = globals_parser(True)

    p = _Parser(prog="diffharness", description="Differential testing for compilers and assemblers.",
                parents=[common])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_text):
        return sub.add_parser(name, help=help_text, parents=[sub_common])

    def ext(sp, default=(".c",)):
        sp.add_argument("--ext", action="append", default=None,
                        help=f"file extension filter (repeatable; default {' '.join(default)})")

    sp = add("scan", "list candidate files under corpus roots")
    sp.add_argument("roots", nargs="+")
    ext(sp)
    sp.add_argument("--ignore", action="append", default=[])

    sp = add("assess", "classify every file with one tool and cell")
    sp.add_argument("--tool", required=True)
    sp.add_argument("--cell", help="option key, e.g. 'debug=;opt=-O2'")
    sp.add_argument("--ledger")
    sp.add_argument("roots", nargs="+")
    ext(sp)

    sp = add("partition", "partition files by reference/subject agreement")
    sp.add_argument("--ref", required=True)
    sp.add_argument("--subject", required=True)
    sp.add_argument("--ref-cell")
    sp.add_argument("--subject-cell")
    sp.add_argument("--ledger")
    sp.add_argument("roots", nargs="+")
    ext(sp)

    sp = add("sweep", "report crashes and timeouts over the option matrix")
    sp.add_argument("--tool", required=True)
    sp.add_argument("--mode", choices=matrix.MODES, default="compromise")
    sp.add_argument("--ledger")
    sp.add_argument("roots", nargs="+")
    ext(sp)

    sp = add("matrix", "flag option cells whose verdict deviates")
    sp.add_argument("--tool", required=True)
    sp.add_argument("--mode", choices=matrix.MODES, default="full")
    sp.add_argument("roots", nargs="+")
    ext(sp)

    sp = add("capture", "embed reference output into test sources")
    sp.add_argument("--ref", required=True)
    sp.add_argument("--runner", default="native")
    sp.add_argument("--cell")
    sp.add_argument("--out-dir", help="write annotated copies here instead of in place")
    sp.add_argument("files", nargs="+")
    ext(sp)

    sp = add("verify", "compare subject execution against embedded output")
    sp.add_argument("--subject", required=True)
    sp.add_argument("--runner", default="native")
    sp.add_argument("--cell")
    sp.add_argument("--mode", choices=matrix.MODES, help="verify over a matrix of cells")
    sp.add_argument("--compare-exit", action="store_true")
    sp.add_argument("files", nargs="+")
    ext(sp)

    sp = add("selfcheck", "quarantine tests the reference cannot reproduce")
    sp.add_argument("--ref", required=True)
    sp.add_argument("--runner", default="native")
    sp.add_argument("--cell")
    sp.add_argument("--quarantine-file")
    sp.add_argument("files", nargs="+")
    ext(sp)

    sp = add("gen", "generate constant x operator arithmetic tests")
    sp.add_argument("--preset", default="default", choices=sorted(generator.PRESETS))
    sp.add_argument("--ops", help="comma-separated operator tokens (default: all)")
    sp.add_argument("--chunk", type=int, default=200, help="max cases per file")
    sp.add_argument("--out", required=True)

    sp = add("combine", "merge annotated tests into one program")
    sp.add_argument("--list", required=True, help="file with one test path per line")
    sp.add_argument("--out", required=True)
    sp.add_argument("--build", action="store_true", help="compile and run the combined program")
    sp.add_argument("--compiler", default="gcc")
    sp.add_argument("--runner", default="native")
    sp.add_argument("--cell")

    sp = add("reduce", "delta-debug a failing input")
    sp.add_argument("file")
    sp.add_argument("--test", required=True,
                    help="command run on each candidate; exit 0 means still failing")
    sp.add_argument("--granularity", choices=("line", "blank-line-block"), default="line")
    sp.add_argument("--budget", type=int)
    sp.add_argument("--out")
    sp.add_argument("--timeout", type=float, default=60.0)
    sp.add_argument("--parallel", action="store_true", help="run a round's candidates in parallel")

    sp = add("asmdiff", "compare machine code from two assemblers")
    for w in ("a", "b"):
        sp.add_argument(f"--object-{w}")
        sp.add_argument(f"--source-{w}")
        sp.add_argument(f"--assembler-{w}")
        sp.add_argument(f"--rules-{w}")
        sp.add_argument(f"--cell-{w}")
    sp.add_argument("--source", help="source used for both sides unless --source-a/b given")
    sp.add_argument("--mask", help="mask table JSON")
    sp.add_argument("--no-mask", action="store_true", help="compare without any masking")
    sp.add_argument("--section", default=".text")
    sp.add_argument("--word-size", type=int, default=4)
    sp.add_argument("--endian", choices=("little", "big"), default="little")
    sp.add_argument("--baseline", help="use a saved baseline as side A")
    sp.add_argument("--save-baseline", help="write side A as a baseline file")
    sp.add_argument("--name")

    sp = add("report", "run a configured campaign, or merge and render reports")
    sp.add_argument("inputs", nargs="*", help="existing JSON reports to merge")
    sp.add_argument("--reference")
    sp.add_argument("--subject")
    sp.add_argument("--corpus", action="append")
    sp.add_argument("--preset", help="generator preset; empty string disables generation")
    sp.add_argument("--chunk", type=int)
    sp.add_argument("--mode", choices=matrix.MODES)
    return p


def _emit(s: Session, started: float):
    a = s.args
    if a.timing:
        s.report.timing["seconds"] = round(time.monotonic() - started, 3)
    if a.report:
        path = Path(a.report)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(render_report(s.report, "json"))
        if not a.no_figures:
            render_figures(s.report, path.parent, path.stem)
    sys.stdout.buffer.write(render_report(s.report, a.format))
    sys.stdout.flush()


def run_subcommand(name: str, args) -> int:
    """Run one subcommand with its argument list; returns the exit status."""
    return main([name, *args])


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"diffharness: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="diffharness: %(message)s")
    started = time.monotonic()
    s = None
    try:
        s = Session(args)
        findings = HANDLERS[args.command](s)
    except ToolNotFound as exc:
        print(f"diffharness: environment error: {exc}", file=sys.stderr)
        code = EXIT_ENV
    except (UsageError, ProfileError, corpus.RootMissing, corpus.UniverseMismatch,
            matrix.MissingAxis, reducer.NotReproducible, generator.EmptyPool,
            asmdiff.UnsupportedContainer, asmdiff.SectionMissing, asmdiff.AlignmentError,
            asmdiff.BaselineError, execdiff.MalformedBlock, ValueError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"diffharness: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except (WorkdirError, asmdiff.AssemblyFailed, HarnessError, OSError) as exc:
        print(f"diffharness: environment error: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_ENV
    else:
        _emit(s, started)
        return EXIT_FINDINGS if findings else EXIT_OK
    if s is not None and args.report and _has_content(s.report):
        _emit(s, started)
    return code


def _has_content(report: CampaignReport) -> bool:
    return bool(report.finding_count() or report.details or report.execdiff_results
                or report.matrix_reports or report.partition)


if __name__ == "__main__":
    sys.exit(main())
