"""Constant-by-operator arithmetic test generation.

Programs print ``<op-name>_<i>_<j>=<value>`` for every admitted pair of
constants, where ``i`` and ``j`` index the flattened constant pool.  The
generator never computes expected values; those come from running a
reference build.  It does evaluate operands exactly (Python integers) to
decide which cases would be undefined or implementation-defined in C, and
leaves those out.

Type widths follow the LP64 data model (int 32, long 64, long long 64).
"""

from __future__ import annotations

import shutil
import struct
from dataclasses import dataclass, field
from fractions import Fraction

from .toolchain import HarnessError

GENERATOR_VERSION = "diffharness-gen 1"


class EmptyPool(HarnessError):
    pass


@dataclass(frozen=True)
class CType:
    name: str
    kind: str  # "int", "bool", "float"
    width: int
    signed: bool
    rank: int = 0
    fmt: str = ""

    @property
    def is_float(self) -> bool:
        return self.kind == "float"

    @property
    def min(self) -> int:
        return -(1 << (self.width - 1)) if self.signed else 0

    @property
    def max(self) -> int:
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1

    def contains(self, value) -> bool:
        return self.min <= value <= self.max


TYPES = {
    t.name: t
    for t in [
        CType("bool", "bool", 8, False, 0, "%d"),
        CType("char", "int", 8, True, 1, "%d"),
        CType("signed char", "int", 8, True, 1, "%d"),
        CType("unsigned char", "int", 8, False, 1, "%u"),
        CType("short", "int", 16, True, 2, "%d"),
        CType("unsigned short", "int", 16, False, 2, "%u"),
        CType("int", "int", 32, True, 3, "%d"),
        CType("unsigned int", "int", 32, False, 3, "%u"),
        CType("long", "int", 64, True, 4, "%ld"),
        CType("unsigned long", "int", 64, False, 4, "%lu"),
        CType("long long", "int", 64, True, 5, "%lld"),
        CType("unsigned long long", "int", 64, False, 5, "%llu"),
        CType("float", "float", 32, True, 10, "%a"),
        CType("double", "float", 64, True, 11, "%a"),
    ]
}

INT = TYPES["int"]
UINT = TYPES["unsigned int"]

# limits.h macro stems per integer type
_LIMIT_MACROS = {
    "signed char": ("SCHAR_MIN", "SCHAR_MAX"),
    "short": ("SHRT_MIN", "SHRT_MAX"),
    "int": ("INT_MIN", "INT_MAX"),
    "long": ("LONG_MIN", "LONG_MAX"),
    "long long": ("LLONG_MIN", "LLONG_MAX"),
    "unsigned char": (None, "UCHAR_MAX"),
    "unsigned short": (None, "USHRT_MAX"),
    "unsigned int": (None, "UINT_MAX"),
    "unsigned long": (None, "ULONG_MAX"),
    "unsigned long long": (None, "ULLONG_MAX"),
}

_SUFFIX = {
    "int": "", "long": "L", "long long": "LL",
    "unsigned int": "U", "unsigned long": "UL", "unsigned long long": "ULL",
    "signed char": "", "short": "", "unsigned char": "U", "unsigned short": "U",
}


@dataclass(frozen=True)
class Constant:
    spelling: str
    value: object  # int, or Fraction for floating constants
    ctype: CType

    @property
    def width(self):
        return self.ctype.width

    @property
    def signed(self):
        return self.ctype.signed


def _int_pool(tname: str) -> list[Constant]:
    t = TYPES[tname]
    lo_macro, hi_macro = _LIMIT_MACROS[tname]
    suffix = _SUFFIX[tname]
    values = {}

    def put(value, spelling):
        values.setdefault(value, spelling)

    put(0, f"0{suffix}")
    put(1, f"1{suffix}")
    if t.signed:
        put(-1, f"-1{suffix}")
    put(2, f"2{suffix}")
    if t.signed:
        put(t.min, lo_macro)
    put(t.max, hi_macro)
    if t.signed:
        put(t.min + 1, f"({lo_macro} + 1)")
    put(t.max - 1, f"({hi_macro} - 1)")
    return [Constant(sp, v, t) for v, sp in values.items()]


def _float_literal(text: str, t: CType) -> Constant:
    value = Fraction(float(text)) if t.name == "double" else Fraction(_round_f32(float(text)))
    return Constant(text + ("f" if t.name == "float" else ""), value, t)


def _round_f32(x: float) -> float:
    return struct.unpack("<f", struct.pack("<f", x))[0]


def _float_pool(tname: str) -> list[Constant]:
    t = TYPES[tname]
    big, small = ("1.0e10", "1.0e-10") if tname == "float" else ("1.0e100", "1.0e-100")
    return [_float_literal(s, t) for s in ("0.0", "1.0", "-1.0", "0.5", big, small)]


INTEGER_TYPE_NAMES = [
    "signed char", "unsigned char", "short", "unsigned short", "int", "unsigned int",
    "long", "unsigned long", "long long", "unsigned long long",
]


def default_pools(include_float: bool = True) -> dict[str, list[Constant]]:
    pools = {name: _int_pool(name) for name in INTEGER_TYPE_NAMES}
    pools["bool"] = [Constant("false", 0, TYPES["bool"]), Constant("true", 1, TYPES["bool"])]
    pools["char"] = [Constant("'a'", ord("a"), TYPES["char"]), Constant("'\\0'", 0, TYPES["char"])]
    if include_float:
        pools["float"] = _float_pool("float")
        pools["double"] = _float_pool("double")
    return pools


# cross-type pairings admitted on top of same-type pairs
DEFAULT_CROSS = [
    ("bool", "char"), ("char", "bool"),
    ("int", "unsigned int"), ("unsigned int", "int"),
    ("int", "long long"), ("unsigned int", "long long"),
    ("short", "unsigned short"), ("unsigned char", "int"),
    ("long", "unsigned long"), ("int", "char"),
]
FLOAT_CROSS = [("int", "double"), ("float", "double"), ("double", "float")]


@dataclass(frozen=True)
class OperatorSpec:
    token: str
    name: str
    kind: str  # arith, div, shift, compare, bitwise, logical
    arity: int = 2


OPERATORS = [
    OperatorSpec("+", "add", "arith"),
    OperatorSpec("-", "sub", "arith"),
    OperatorSpec("*", "mul", "arith"),
    OperatorSpec("/", "div", "div"),
    OperatorSpec("%", "mod", "div"),
    OperatorSpec("<<", "shl", "shift"),
    OperatorSpec(">>", "shr", "shift"),
    OperatorSpec("<", "lt", "compare"),
    OperatorSpec("<=", "le", "compare"),
    OperatorSpec(">", "gt", "compare"),
    OperatorSpec(">=", "ge", "compare"),
    OperatorSpec("==", "eq", "compare"),
    OperatorSpec("!=", "ne", "compare"),
    OperatorSpec("&", "and", "bitwise"),
    OperatorSpec("|", "or", "bitwise"),
    OperatorSpec("^", "xor", "bitwise"),
    OperatorSpec("&&", "land", "logical"),
    OperatorSpec("||", "lor", "logical"),
]
OPERATOR_BY_TOKEN = {op.token: op for op in OPERATORS}


def operators(tokens=None) -> list[OperatorSpec]:
    if tokens is None:
        return list(OPERATORS)
    try:
        return [OPERATOR_BY_TOKEN[t] for t in tokens]
    except KeyError as exc:
        raise ValueError(f"unknown operator {exc.args[0]!r}") from None


# ---------------------------------------------------------------------------
# C type rules


def promote(t: CType) -> CType:
    """Integer promotions (LP64: everything narrower than int fits in int)."""
    if t.kind == "float":
        return t
    if t.rank < INT.rank:
        return INT
    return t


def usual_arithmetic(a: CType, b: CType) -> CType:
    if a.is_float or b.is_float:
        if a.name == "double" or b.name == "double":
            return TYPES["double"]
        return TYPES["float"]
    a, b = promote(a), promote(b)
    if a == b:
        return a
    if a.signed == b.signed:
        return a if a.rank > b.rank else b
    uns, sig = (a, b) if not a.signed else (b, a)
    if uns.rank >= sig.rank:
        return uns
    if sig.width > uns.width:
        return sig
    return TYPES["unsigned " + sig.name]


def result_type(op: OperatorSpec, lt: CType, rt: CType) -> CType:
    if op.kind in ("compare", "logical"):
        return INT
    if op.kind == "shift":
        return promote(lt)
    return usual_arithmetic(lt, rt)


def is_well_formed(op: OperatorSpec, lt: CType, rt: CType) -> bool:
    """Operand types the operator accepts at all (floats only with arithmetic)."""
    if op.kind in ("shift", "bitwise") or op.token == "%":
        return not (lt.is_float or rt.is_float)
    return True


def convert(value, src: CType, dst: CType):
    """Exact value after converting ``value`` of ``src`` to ``dst``.

    Returns None when the conversion is not value-preserving in a way C
    leaves undefined or implementation-defined.
    """
    if dst.is_float:
        if src.is_float:
            return value if dst.name == "double" or _exact_f32(value) else None
        if _int_exact_in_float(value, dst):
            return Fraction(value)
        return None
    if src.is_float:
        trunc = int(value)  # toward zero
        return trunc if dst.contains(trunc) else None
    if dst.kind == "bool":
        return int(value != 0)
    if dst.contains(value):
        return value
    if not dst.signed:
        return value % (1 << dst.width)
    return None  # out-of-range conversion to signed: implementation-defined


def _int_exact_in_float(value: int, t: CType) -> bool:
    mant = 24 if t.name == "float" else 53
    v = abs(value)
    if v == 0:
        return True
    while v % 2 == 0:
        v //= 2
    return v.bit_length() <= mant


def _exact_f32(value) -> bool:
    f = float(value)
    return Fraction(_round_f32(f)) == Fraction(value)


@dataclass(frozen=True)
class ExclusionRule:
    id: str
    reason: str


RULES = {
    r.id: r
    for r in [
        ExclusionRule("div-by-zero", "division or remainder by zero"),
        ExclusionRule("min-div-neg1", "signed overflow on type minimum divided by -1"),
        ExclusionRule("shift-count", "shift count negative or not less than the operand width"),
        ExclusionRule("shift-negative", "left shift of a negative signed value"),
        ExclusionRule("shift-overflow", "signed left shift result not representable"),
        ExclusionRule("shift-right-negative", "right shift of a negative value is implementation-defined"),
        ExclusionRule("signed-overflow", "signed integer result overflows"),
        ExclusionRule("float-to-int", "floating value not representable in the integer type"),
        ExclusionRule("inexact-int-to-float", "integer not exactly representable in the floating type"),
        ExclusionRule("signed-conversion", "out-of-range conversion to a signed type"),
    ]
}

_MIN_NAMES = {32: "INT_MIN", 64: "LLONG_MIN"}


def _operand(c: Constant, target: CType):
    converted = convert(c.value, c.ctype, target)
    if converted is None:
        if target.is_float:
            return None, "inexact-int-to-float"
        if c.ctype.is_float:
            return None, "float-to-int"
        return None, "signed-conversion"
    return converted, None


def is_excluded(op: OperatorSpec | str, lhs: Constant, rhs: Constant) -> tuple[bool, str | None]:
    """Whether ``lhs op rhs`` would be undefined or implementation-defined.

    Returns ``(True, reason)`` for excluded cases, ``(False, None)`` otherwise.
    Ill-formed type combinations (e.g. ``float % int``) are reported as
    excluded too, since no program can contain them.
    """
    if isinstance(op, str):
        op = OPERATOR_BY_TOKEN[op]
    lt, rt = lhs.ctype, rhs.ctype
    if not is_well_formed(op, lt, rt):
        return True, f"operator {op.token} does not accept {lt.name} and {rt.name}"

    if op.kind == "logical":
        return False, None

    if op.kind == "shift":
        pl = promote(lt)
        a, b = lhs.value, rhs.value
        if b < 0 or b >= pl.width:
            return True, RULES["shift-count"].reason
        if op.token == "<<":
            if pl.signed:
                if a < 0:
                    return True, RULES["shift-negative"].reason
                if a * (1 << b) > pl.max:
                    return True, RULES["shift-overflow"].reason
        elif pl.signed and a < 0:
            return True, RULES["shift-right-negative"].reason
        return False, None

    common = usual_arithmetic(lt, rt)
    a, why = _operand(lhs, common)
    if why:
        return True, RULES[why].reason
    b, why = _operand(rhs, common)
    if why:
        return True, RULES[why].reason

    if op.kind == "compare" or op.kind == "bitwise":
        return False, None

    if op.kind == "div" and b == 0:
        return True, RULES["div-by-zero"].reason
    if common.is_float:
        return False, None
    if op.kind == "div" and common.signed and a == common.min and b == -1:
        name = _MIN_NAMES.get(common.width, f"{common.name} minimum")
        return True, f"signed overflow on {name} {op.token} -1"
    if common.signed:
        if op.token == "+":
            exact = a + b
        elif op.token == "-":
            exact = a - b
        elif op.token == "*":
            exact = a * b
        else:
            exact = None
        if exact is not None and not common.contains(exact):
            return True, RULES["signed-overflow"].reason
    return False, None


# ---------------------------------------------------------------------------
# program text


@dataclass(frozen=True)
class Case:
    op: OperatorSpec
    i: int
    j: int
    lhs: Constant
    rhs: Constant

    @property
    def label(self) -> str:
        return f"{self.op.name}_{self.i}_{self.j}"

    @property
    def result_type(self) -> CType:
        return result_type(self.op, self.lhs.ctype, self.rhs.ctype)


@dataclass
class GeneratedProgram:
    name: str
    text: str
    cases: list[Case]
    op: OperatorSpec


@dataclass
class Plan:
    cases: list[Case] = field(default_factory=list)
    excluded: list[tuple[Case, str]] = field(default_factory=list)


def flatten(pools: dict[str, list[Constant]]) -> list[tuple[str, Constant]]:
    return [(tag, c) for tag, consts in pools.items() for c in consts]


def plan_cases(pools, ops, pairs=None) -> Plan:
    """Every admitted (op, lhs, rhs) triple plus the excluded ones with reasons.

    ``pairs`` lists (lhs pool tag, rhs pool tag); the default is every
    same-tag pair plus the admitted entries of :data:`DEFAULT_CROSS` and
    :data:`FLOAT_CROSS`.
    """
    if not pools or not any(pools.values()):
        raise EmptyPool("constant pool is empty")
    for tag, consts in pools.items():
        if not consts:
            raise EmptyPool(f"constant pool {tag!r} is empty")
    flat = flatten(pools)
    index_of = {}
    for idx, (tag, c) in enumerate(flat):
        index_of.setdefault(tag, []).append((idx, c))
    if pairs is None:
        pairs = [(t, t) for t in pools]
        pairs += [p for p in DEFAULT_CROSS + FLOAT_CROSS if p[0] in pools and p[1] in pools]
    plan = Plan()
    for op in ops:
        for ltag, rtag in pairs:
            for i, lc in index_of.get(ltag, []):
                for j, rc in index_of.get(rtag, []):
                    case = Case(op, i, j, lc, rc)
                    if not is_well_formed(op, lc.ctype, rc.ctype):
                        continue
                    excluded, reason = is_excluded(op, lc, rc)
                    if excluded:
                        plan.excluded.append((case, reason))
                    else:
                        plan.cases.append(case)
    return plan


def _print_expr(case: Case) -> str:
    rt = case.result_type
    expr = f"lhs {case.op.token} rhs"
    if rt.is_float:
        # float promotes to double through varargs
        return f'printf("{case.label}={rt.fmt}\\n", (double)({expr}));'
    return f'printf("{case.label}={rt.fmt}\\n", {expr});'


def case_block(case: Case) -> str:
    return (
        "    {\n"
        f"        volatile {case.lhs.ctype.name} lhs = {case.lhs.spelling};\n"
        f"        volatile {case.rhs.ctype.name} rhs = {case.rhs.spelling};\n"
        f"        {_print_expr(case)}\n"
        "    }\n"
    )


def program_text(cases: list[Case], title: str, version: str = GENERATOR_VERSION) -> str:
    parts = [
        f"/* {title} -- generated by {version}; do not edit */\n",
        "#include <limits.h>\n",
        "#include <stdbool.h>\n",
        "#include <stdio.h>\n",
        "\n",
        "int main(void)\n",
        "{\n",
    ]
    parts.extend(case_block(c) for c in cases)
    parts.append("    return 0;\n}\n")
    return "".join(parts)


def gen_programs(pools, ops=None, chunk_size: int = 200, pairs=None,
                 version: str = GENERATOR_VERSION) -> list[GeneratedProgram]:
    """One or more programs per operator, at most ``chunk_size`` cases each."""
    if chunk_size < 1:
        raise ValueError("chunk_size must be at least 1")
    ops = operators() if ops is None else [
        OPERATOR_BY_TOKEN[o] if isinstance(o, str) else o for o in ops
    ]
    plan = plan_cases(pools, ops, pairs)
    programs = []
    for op in ops:
        op_cases = [c for c in plan.cases if c.op == op]
        for k in range(0, len(op_cases), chunk_size):
            chunk = op_cases[k:k + chunk_size]
            name = f"{op.name}_{k // chunk_size:03d}.c"
            programs.append(GeneratedProgram(
                name, program_text(chunk, f"{op.name} chunk {k // chunk_size}", version),
                chunk, op,
            ))
    return programs


def single_case_program(case: Case, version: str = GENERATOR_VERSION) -> str:
    """A program containing only ``case``, for isolating a reported mismatch."""
    return program_text([case], f"isolated {case.label}", version)


def find_case(programs, label: str) -> Case:
    for prog in programs:
        for case in prog.cases:
            if case.label == label:
                return case
    raise KeyError(label)


PRESETS = {
    "default": lambda: (default_pools(True), None),
    "integer": lambda: (default_pools(False), None),
    "small": lambda: (
        {"int": _int_pool("int"), "unsigned int": _int_pool("unsigned int"),
         "bool": default_pools()["bool"], "char": default_pools()["char"]},
        None,
    ),
}


def preset(name: str):
    """(pools, pairs) for a named preset."""
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown pool preset {name!r}; choose from {sorted(PRESETS)}") from None


def expected_via_reference(program, ref_compiler, ref_runner, cell=None):
    """Annotate a generated program with the reference toolchain's output.

    ``program`` is a :class:`GeneratedProgram` or plain source text.
    """
    from . import execdiff
    from .toolchain import make_workdir

    name = getattr(program, "name", "generated.c")
    text = getattr(program, "text", program)
    work = make_workdir("dh-gen-")
    try:
        path = work / name
        path.write_text(text)
        return execdiff.capture_reference(path, ref_compiler, ref_runner, cell)
    finally:
        shutil.rmtree(work, ignore_errors=True)
