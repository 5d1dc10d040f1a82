import json
import sys

import pytest

from conftest import ASM, FAKECC, FIXTURES, needs_arm, needs_gcc
from diffharness import cli
from diffharness.cli import run_subcommand


def config(tmp_path, script, extra_tools=()):
    script_path = tmp_path / "script.json"
    script_path.write_text(json.dumps(script))
    tools = [{
        "id": "stub", "kind": "compiler",
        "command_template": [sys.executable, str(FAKECC), str(script_path),
                             "{options}", "-o", "{output}", "{input}"],
        "option_axes": {"opt": ["-O0", "-O2", "-O3"], "debug": ["", "-g"]},
        "crash_patterns": ["internal compiler error"],
        "timeout_seconds": 10,
    }, *extra_tools]
    path = tmp_path / "tools.json"
    path.write_text(json.dumps({"tools": tools}))
    return str(path)


def corpus_dir(tmp_path, names=("a.c", "b.c")):
    root = tmp_path / "corpus"
    root.mkdir()
    for n in names:
        (root / n).write_text(f"/* {n} */\nint main(void){{return 0;}}\n")
    return str(root)


def test_unknown_subcommand():
    assert run_subcommand("frobnicate", []) == 2


def test_no_subcommand_and_help(capsys):
    assert cli.main([]) == 2
    assert cli.main(["--help"]) == 0


def test_bad_config_is_usage_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"tools": [{"id": "x", "kind": "compiler", "command_template": ["cc"]}]}')
    assert cli.main(["--config", str(bad), "assess", "--tool", "x", str(tmp_path)]) == 2


def test_sweep_one_crash(tmp_path, capsys):
    cfg = config(tmp_path, {"rules": [{"file": "b.c", "when": ["-O3"], "action": "abort"}]})
    report = tmp_path / "out" / "sweep.json"
    code = cli.main(["--config", cfg, "--report", str(report), "sweep", "--tool", "stub",
                     "--mode", "minmax", corpus_dir(tmp_path)])
    assert code == 1
    data = json.loads(report.read_text())
    assert [(h["path"].rsplit("/", 1)[-1], h["cell"], h["status"]) for h in data["crash_hits"]] == [
        ("b.c", "debug=;opt=-O3", "Crash")
    ]
    assert (report.parent / "sweep-findings.png").exists()
    assert "crash hits: 1" in capsys.readouterr().out


def test_clean_sweep_exit_zero(tmp_path):
    cfg = config(tmp_path, {})
    assert cli.main(["--config", cfg, "--no-figures", "sweep", "--tool", "stub",
                     corpus_dir(tmp_path)]) == 0


def test_missing_tool_exit_3(tmp_path):
    cfg = config(tmp_path, {}, [{"id": "ghost", "kind": "compiler",
                                 "command_template": ["no-such-cc-zz", "{input}"]}])
    assert cli.main(["--config", cfg, "assess", "--tool", "ghost", corpus_dir(tmp_path)]) == 3


def test_matrix_and_partition(tmp_path, capsys):
    cfg = config(tmp_path, {"rules": [{"when": ["-O3"], "action": "reject"}]})
    root = corpus_dir(tmp_path)
    assert cli.main(["--config", cfg, "--format", "json", "matrix", "--tool", "stub", root]) == 1
    data = json.loads(capsys.readouterr().out)
    assert len(data["matrix_discrepancies"]) == 4
    assert cli.main(["--config", cfg, "partition", "--ref", "stub", "--subject", "stub",
                     "--subject-cell", "debug=;opt=-O3", root]) == 1


def test_ledger_written(tmp_path):
    cfg = config(tmp_path, {})
    ledger = tmp_path / "ledger.jsonl"
    cli.main(["--config", cfg, "assess", "--tool", "stub", "--ledger", str(ledger),
              corpus_dir(tmp_path)])
    assert len(ledger.read_text().splitlines()) == 2


def test_gen_writes_manifest(tmp_path):
    out = tmp_path / "gen"
    assert cli.main(["gen", "--preset", "small", "--ops", "+,<", "--chunk", "50",
                     "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["operators"] == ["+", "<"]
    assert set(manifest["files"]) == {p.name for p in out.glob("*.c")}


def test_reduce_subcommand(tmp_path):
    src = tmp_path / "r.c"
    src.write_text("".join(f"int v{i};\n" for i in range(30)) + "BOOM();\n")
    test = f"{sys.executable} -c \"import sys; sys.exit(0 if 'BOOM' in open(sys.argv[1]).read() else 1)\""
    assert cli.main(["reduce", str(src), "--test", test]) == 0
    assert (tmp_path / "r.reduced.c").read_text() == "BOOM();\n"
    ok = tmp_path / "ok.c"
    ok.write_text("int fine;\n")
    assert cli.main(["reduce", str(ok), "--test", test]) == 2


def test_asmdiff_objects(tmp_path):
    a, b = str(ASM / "branch_a.o"), str(ASM / "branch_b.o")
    mask = str(cli.data_path("arm_branch_mask.json"))
    assert cli.main(["asmdiff", "--object-a", a, "--object-b", b, "--mask", mask]) == 0
    report = tmp_path / "asm.json"
    assert cli.main(["--report", str(report), "--no-figures", "asmdiff", "--object-a", a,
                     "--object-b", b]) == 1
    diff = json.loads(report.read_text())["asmdiff_differences"][0]
    assert diff["first_diff_offset"] == 4
    base = tmp_path / "base.bin"
    assert cli.main(["asmdiff", "--object-a", a, "--save-baseline", str(base), "--mask", mask]) == 0
    assert cli.main(["asmdiff", "--baseline", str(base), "--object-b", b, "--mask", mask]) == 0


def test_report_merge(tmp_path):
    one = tmp_path / "one.json"
    one.write_text(json.dumps({"command": "sweep", "crash_hits": [{"path": "x.c"}]}))
    two = tmp_path / "two.json"
    two.write_text(json.dumps({"command": "verify"}))
    out = tmp_path / "merged.json"
    assert cli.main(["--report", str(out), "--no-figures", "report", str(one), str(two)]) == 1
    assert json.loads(out.read_text())["counts"]["crash_hits"] == 1


@needs_gcc
def test_capture_then_verify_exit_zero(tmp_path):
    src = FIXTURES / "hand_corpus" / "gcd.c"
    out = tmp_path / "ann"
    assert cli.main(["capture", "--ref", "gcc", "--out-dir", str(out), str(src)]) == 0
    assert run_subcommand("verify", ["--subject", "gcc", str(out / "gcd.c")]) == 0
    assert run_subcommand("selfcheck", ["--ref", "gcc", str(out)]) == 0


@needs_gcc
def test_verify_mismatch_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.c"
    bad.write_text('#include <stdio.h>\nint main(void){ puts("2"); return 0; }\n'
                   "/* DIFFHARNESS-EXPECTED-OUTPUT v1\n:1\nDIFFHARNESS-EXPECTED-OUTPUT-END */\n")
    assert run_subcommand("verify", ["--subject", "gcc", str(bad)]) == 1
    assert "execdiff mismatches: 1" in capsys.readouterr().out


@needs_gcc
def test_combine_build(tmp_path):
    ann = tmp_path / "ann"
    for name in ("hello.c", "fib.c"):
        cli.main(["capture", "--ref", "gcc", "--out-dir", str(ann),
                  str(FIXTURES / "hand_corpus" / name)])
    lst = tmp_path / "list.txt"
    lst.write_text("ann/hello.c\nann/fib.c\n")
    report = tmp_path / "c.json"
    assert cli.main(["--report", str(report), "--no-figures", "combine", "--list", str(lst),
                     "--out", str(tmp_path / "suite"), "--build"]) == 0
    data = json.loads(report.read_text())
    assert data["execdiff_results"][0]["verdict"] == "match"


@pytest.mark.parametrize("fmt", ["json", "text"])
def test_output_is_deterministic(tmp_path, capsys, fmt):
    cfg = config(tmp_path, {"files": {"a.c": "reject"}})
    root = corpus_dir(tmp_path)
    cli.main(["--config", cfg, "--format", fmt, "assess", "--tool", "stub", root])
    first = capsys.readouterr().out
    cli.main(["--config", cfg, "--format", fmt, "assess", "--tool", "stub", root, "--jobs", "2"])
    assert capsys.readouterr().out == first


@needs_arm
def test_asmdiff_sources_across_dialects():
    mask = str(cli.data_path("arm_branch_mask.json"))
    rules = str(cli.data_path("armasm_to_gnu.json"))
    args = ["asmdiff", "--source-a", str(ASM / "branch_a.armasm"), "--rules-a", rules,
            "--assembler-a", "arm-as", "--source-b", str(ASM / "branch_a.s"),
            "--assembler-b", "arm-as"]
    assert cli.main(["--no-figures", *args, "--mask", mask]) == 0
    assert cli.main(["--no-figures", *args]) == 1
