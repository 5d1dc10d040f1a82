import subprocess

import pytest

from conftest import min_by_minus_one, needs_gcc
from diffharness import generator as g
from diffharness.generator import Constant, EmptyPool, TYPES, is_excluded

UBSAN = ["gcc", "-std=c99", "-w", "-fsanitize=undefined", "-fno-sanitize-recover=all"]


def const(tname, value, spelling=None):
    return Constant(spelling or str(value), value, TYPES[tname])


def pool(tname):
    return g.default_pools()[tname]


def test_int_min_div_neg1_excluded():
    lo = const("int", -2**31, "INT_MIN")
    assert is_excluded("/", lo, const("int", -1)) == (True, "signed overflow on INT_MIN / -1")
    assert is_excluded("%", lo, const("int", -1))[0]


def test_simple_add_not_excluded():
    assert is_excluded("+", const("int", 1), const("int", 2)) == (False, None)


def test_sign_bit_shift_excluded():
    excluded, reason = is_excluded("<<", const("int", 1), const("int", 31))
    assert excluded and "shift" in reason
    assert is_excluded("<<", const("unsigned int", 1), const("int", 31)) == (False, None)
    assert is_excluded("<<", const("int", 1), const("int", 30)) == (False, None)


@needs_gcc
def test_sign_bit_shift_is_flagged_by_ubsan(tmp_path):
    src = tmp_path / "shl.c"
    src.write_text("#include <stdio.h>\nint main(void){ volatile int a = 1, b = 31;"
                   ' printf("%d\\n", a << b); return 0; }\n')
    exe = tmp_path / "shl"
    subprocess.run(UBSAN + ["-o", str(exe), str(src)], check=True)
    run = subprocess.run([str(exe)], capture_output=True, text=True)
    assert "runtime error" in run.stderr and run.returncode != 0


def test_other_exclusions():
    assert is_excluded("/", const("int", 5), const("int", 0))[0]
    assert is_excluded("<<", const("int", 1), const("int", 32))[0]
    assert is_excluded("<<", const("int", -1), const("int", 1))[0]
    assert is_excluded(">>", const("int", -1), const("int", 1))[0]
    assert is_excluded("+", const("int", 2**31 - 1), const("int", 1))[0]
    assert is_excluded("+", const("unsigned int", 2**32 - 1), const("unsigned int", 1)) == (False, None)
    assert is_excluded("*", const("long long", 2**62), const("long long", 2))[0]
    # bool/char compare from the true < 'a' class of case
    assert is_excluded("<", const("bool", 1, "true"), const("char", 97, "'a'")) == (False, None)


def test_single_constant_pool():
    progs = g.gen_programs({"int": [const("int", 1)]}, ["+"], 10)
    assert len(progs) == 1
    assert [c.label for c in progs[0].cases] == ["add_0_0"]
    assert progs[0].text.count("printf(") == 1


def test_eight_by_eight_less_than():
    ints = [const("int", v) for v in range(8)]
    progs = g.gen_programs({"int": ints}, ["<"], 100)
    assert len(progs) == 1 and len(progs[0].cases) == 64


def test_chunking():
    ints = [const("int", v) for v in range(8)]
    progs = g.gen_programs({"int": ints}, ["<"], 10)
    assert [len(p.cases) for p in progs] == [10] * 6 + [4]
    assert [p.name for p in progs][:2] == ["lt_000.c", "lt_001.c"]
    with pytest.raises(ValueError):
        g.gen_programs({"int": ints}, ["<"], 0)


def test_bool_char_pairs_generated():
    pools, pairs = g.preset("default")
    plan = g.plan_cases(pools, g.operators(["<"]), pairs)
    bool_char = [c for c in plan.cases if c.lhs.ctype.name == "bool" and c.rhs.ctype.name == "char"]
    assert any(c.lhs.spelling == "true" and c.rhs.spelling == "'a'" for c in bool_char)


def test_empty_pool():
    with pytest.raises(EmptyPool):
        g.gen_programs({}, ["+"])
    with pytest.raises(EmptyPool):
        g.gen_programs({"int": []}, ["+"])


def test_generation_is_deterministic():
    pools, pairs = g.preset("default")
    a = [(p.name, p.text) for p in g.gen_programs(pools, None, 150, pairs)]
    pools, pairs = g.preset("default")
    b = [(p.name, p.text) for p in g.gen_programs(pools, None, 150, pairs)]
    assert a == b


def test_labels_unique_and_cover_plan():
    pools, pairs = g.preset("default")
    progs = g.gen_programs(pools, None, 200, pairs)
    labels = [c.label for p in progs for c in p.cases]
    assert len(labels) == len(set(labels))
    assert len(labels) == len(g.plan_cases(pools, g.operators(), pairs).cases)


def test_min_by_minus_one_scanner_sees_cases():
    lo = const("int", -2**31, "INT_MIN")
    text = g.program_text([g.Case(g.OPERATOR_BY_TOKEN["/"], 0, 1, lo, const("int", -1))], "t")
    assert min_by_minus_one(text) == [("INT_MIN", "/", "-1")]


def test_no_int_min_by_minus_one_in_sources():
    pools, pairs = g.preset("default")
    progs = g.gen_programs(pools, ["/", "%"], 500, pairs)
    assert sum(p.text.count("lhs = INT_MIN;") for p in progs) > 0
    for prog in progs:
        assert min_by_minus_one(prog.text) == [], prog.name


def test_find_and_isolate_case():
    pools, pairs = g.preset("small")
    progs = g.gen_programs(pools, ["+"], 50, pairs)
    case = g.find_case(progs, progs[0].cases[3].label)
    text = g.single_case_program(case)
    assert text.count("printf(") == 1 and case.label in text
    with pytest.raises(KeyError):
        g.find_case(progs, "nope_1_2")


def test_preset_unknown():
    with pytest.raises(ValueError):
        g.preset("huge")


@needs_gcc
def test_expected_via_reference(profiles):
    one = const("int", 1)
    prog = g.gen_programs({"int": [one]}, ["+"], 10)[0]
    ann = g.expected_via_reference(prog, profiles["gcc"], profiles["native"])
    assert ann.expected_output == b"add_0_0=2\n"

    pools = {"bool": [const("bool", 1, "true")], "char": [const("char", 97, "'a'")]}
    prog = g.gen_programs(pools, ["<"], 10, pairs=[("bool", "char")])[0]
    ann = g.expected_via_reference(prog, profiles["gcc"], profiles["native"])
    assert ann.expected_output == b"lt_0_1=1\n"


# -- UBSan oracle over individual cases

UB_REASONS = {
    g.RULES[k].reason for k in
    ("div-by-zero", "shift-count", "shift-negative", "shift-overflow", "signed-overflow")
}


def ubsan_verdicts(cases, tmp_path):
    """Run every case on its own under a sanitizing build; label -> flagged."""
    body = ["#include <limits.h>", "#include <stdbool.h>", "#include <stdio.h>",
            "#include <stdlib.h>", "int main(int argc, char **argv)", "{",
            "    (void)argc;", "    switch (atoi(argv[1])) {"]
    for k, case in enumerate(cases):
        body.append(f"    case {k}:")
        body.append(g.case_block(case).rstrip("\n"))
        body.append("        break;")
    body += ["    }", "    return 0;", "}", ""]
    src = tmp_path / "oracle.c"
    src.write_text("\n".join(body))
    exe = tmp_path / "oracle"
    subprocess.run(UBSAN + ["-o", str(exe), str(src)], check=True)
    flagged = {}
    for k, case in enumerate(cases):
        run = subprocess.run([str(exe), str(k)], capture_output=True, text=True)
        flagged[case.label] = run.returncode != 0 or "runtime error" in run.stderr
    return flagged


@needs_gcc
def test_exclusions_agree_with_ubsan(tmp_path):
    pools = {t: pool(t) for t in ("int", "unsigned int", "long long")}
    pairs = [("int", "int"), ("unsigned int", "unsigned int"), ("long long", "long long"),
             ("int", "unsigned int")]
    ops = g.operators(["+", "-", "*", "/", "%", "<<", ">>"])
    plan = g.plan_cases(pools, ops, pairs)
    everything = plan.cases + [c for c, _ in plan.excluded]
    flagged = ubsan_verdicts(everything, tmp_path)
    admitted_but_flagged = [c.label for c in plan.cases if flagged[c.label]]
    assert admitted_but_flagged == []
    ub_excluded = [c for c, reason in plan.excluded
                   if reason in UB_REASONS or "-1" in reason]
    assert ub_excluded
    missed = [c.label for c in ub_excluded if not flagged[c.label]]
    assert missed == []
