"""Differential testing harness for C compilers and assemblers."""

__version__ = "0.1.0"

from .toolchain import Kind, OptionSet, Status, ToolProfile, Verdict, invoke, judge, load_profiles

__all__ = [
    "Kind", "OptionSet", "Status", "ToolProfile", "Verdict",
    "invoke", "judge", "load_profiles", "__version__",
]
