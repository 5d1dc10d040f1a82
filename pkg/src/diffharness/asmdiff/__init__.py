from .core import (
    AlignmentError,
    AsmDiffReport,
    AsmUnit,
    AsmVerdict,
    AssemblyFailed,
    BaselineError,
    DialectRuleSet,
    MaskEntry,
    MaskStats,
    MaskTable,
    RewriteRule,
    assemble_unit,
    compare,
    extract_code,
    mask,
    read_baseline,
    translate,
    write_baseline,
)
from .elf import Relocation, SectionMissing, UnsupportedContainer, read_object

__all__ = [
    "AlignmentError", "AsmDiffReport", "AsmUnit", "AsmVerdict", "AssemblyFailed",
    "BaselineError", "DialectRuleSet", "MaskEntry", "MaskStats", "MaskTable",
    "Relocation", "RewriteRule", "SectionMissing", "UnsupportedContainer",
    "assemble_unit", "compare", "extract_code", "mask", "read_baseline",
    "read_object", "translate", "write_baseline",
]
