import json
import re
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from diffharness.cli import data_path
from diffharness.toolchain import ToolProfile, load_profiles

HERE = Path(__file__).parent
FAKECC = HERE / "stubs" / "fakecc.py"
FIXTURES = HERE / "fixtures"

OPT = ["-O0", "-O1", "-Os", "-O2", "-O3"]
DEBUG = ["", "-g", "-g -finline-functions"]


def stub_profile(script_path, pid="stub", axes=None, timeout=10.0, **kw):
    return ToolProfile.from_dict({
        "id": pid,
        "kind": "compiler",
        "command_template": [sys.executable, str(FAKECC), str(script_path),
                             "{options}", "-o", "{output}", "{input}"],
        "option_axes": {"opt": OPT, "debug": DEBUG} if axes is None else axes,
        "crash_patterns": ["internal compiler error"],
        "timeout_seconds": timeout,
        **kw,
    })


@pytest.fixture
def make_stub(tmp_path):
    """Factory: make_stub(script_dict, pid=..., axes=..., timeout=...)."""
    count = [0]

    def make(script, pid="stub", **kw):
        count[0] += 1
        path = tmp_path / f"script-{pid}-{count[0]}.json"
        path.write_text(json.dumps(script))
        return stub_profile(path, pid, **kw)

    return make


@pytest.fixture(scope="session")
def profiles():
    return load_profiles(data_path("profiles.json"))


def have(tool):
    return shutil.which(tool) is not None


def arm_assembler_works():
    if not have("clang"):
        return False
    proc = subprocess.run(
        ["clang", "--target=armv7a-none-eabi", "-c", "-x", "assembler", "-", "-o", "/dev/null"],
        input=b"b .+8\n", capture_output=True,
    )
    return proc.returncode == 0


needs_gcc = pytest.mark.skipif(not have("gcc"), reason="gcc not installed")
needs_clang = pytest.mark.skipif(not have("clang"), reason="clang not installed")
needs_arm = pytest.mark.skipif(not arm_assembler_works(), reason="no ARM-capable clang")


MINI = FIXTURES / "mini_corpus"


def mini_partition(jobs=4):
    """Partition the 20-file mini-corpus with its two scripted stubs.

    Returns (Partition, oracle dict) with partition members reduced to file names.
    """
    from diffharness import corpus

    ref = stub_profile(MINI / "ref.json", "ref", timeout=1)
    sub = stub_profile(MINI / "subject.json", "subject", timeout=1)
    files = corpus.scan(MINI / "src", [".c"])
    part = corpus.partition(
        corpus.assess(files, ref, None, jobs=jobs),
        corpus.assess(files, sub, None, jobs=jobs),
    )
    oracle = json.loads((MINI / "oracle.json").read_text())
    return part, oracle


def names(paths):
    return sorted(Path(p).name for p in paths)


_CASE_RE = re.compile(r"volatile [\w ]+ lhs = ([^;]+);\n\s+volatile [\w ]+ rhs = ([^;]+);\n"
                      r"\s+printf\(\"\w+=%\w+\\n\", (?:\(double\)\()?lhs (\S+) rhs")
_MIN_WIDTH = {"INT_MIN": 32, "LONG_MIN": 64, "LLONG_MIN": 64}
_NEG1_WIDTH = {"-1": 32, "-1L": 64, "-1LL": 64}


def min_by_minus_one(text):
    """Grep-level scan for a type-minimum divided (or reduced) by -1 of no wider type."""
    hits = []
    for lhs, rhs, op in _CASE_RE.findall(text):
        if op in ("/", "%") and lhs in _MIN_WIDTH and rhs in _NEG1_WIDTH:
            if _NEG1_WIDTH[rhs] <= _MIN_WIDTH[lhs]:
                hits.append((lhs, op, rhs))
    return hits


ASM = FIXTURES / "asm"


def objdump_text(obj, section=".text"):
    """Section bytes as printed by ``objdump -s`` (independent of our ELF reader)."""
    out = subprocess.run(["objdump", "-s", "-j", section, str(obj)],
                         capture_output=True, text=True, check=True).stdout
    data = bytearray()
    started = False
    for line in out.splitlines():
        if line.startswith("Contents of section"):
            started = True
            continue
        if started and line.startswith(" "):
            fields = line.split()
            for chunk in fields[1:5]:
                if not all(c in "0123456789abcdef" for c in chunk):
                    break
                data.extend(bytes.fromhex(chunk))
    return bytes(data)


def readelf_relocs(obj, section=".text"):
    """(offset, type name) pairs that ``readelf -r`` lists for ``section``."""
    out = subprocess.run(["readelf", "-rW", str(obj)], capture_output=True, text=True,
                         check=True).stdout
    found = []
    current = None
    for line in out.splitlines():
        m = re.match(r"Relocation section '\.rela?(\S+)'", line)
        if m:
            current = m.group(1)
            continue
        parts = line.split()
        if current == section and len(parts) >= 3 and parts[2].startswith("R_"):
            found.append((int(parts[0], 16), parts[2]))
    return found


needs_binutils = pytest.mark.skipif(not (have("objdump") and have("readelf")),
                                    reason="binutils not installed")
