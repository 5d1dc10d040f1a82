"""Minimal ELF relocatable-object reader: section bytes and relocations only."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..toolchain import HarnessError

ELF_MAGIC = b"\x7fELF"

SHT_RELA = 4
SHT_NOBITS = 8
SHT_REL = 9

EM_386 = 3
EM_ARM = 40
EM_X86_64 = 62
EM_AARCH64 = 183
EM_RISCV = 243


class UnsupportedContainer(HarnessError):
    pass


class SectionMissing(HarnessError):
    pass


@dataclass(frozen=True)
class Relocation:
    offset: int
    length: int
    kind: str


@dataclass
class Section:
    index: int
    name: str
    type: int
    offset: int
    size: int
    info: int
    link: int
    entsize: int


# (name, patched width in bytes) per relocation type number
ARM_RELOCS = {
    0: ("R_ARM_NONE", 0), 1: ("R_ARM_PC24", 4), 2: ("R_ARM_ABS32", 4),
    3: ("R_ARM_REL32", 4), 5: ("R_ARM_ABS16", 2), 8: ("R_ARM_ABS8", 1),
    10: ("R_ARM_THM_CALL", 4), 28: ("R_ARM_CALL", 4), 29: ("R_ARM_JUMP24", 4),
    30: ("R_ARM_THM_JUMP24", 4), 40: ("R_ARM_V4BX", 4), 42: ("R_ARM_PREL31", 4),
    43: ("R_ARM_MOVW_ABS_NC", 4), 44: ("R_ARM_MOVT_ABS", 4),
    45: ("R_ARM_MOVW_PREL_NC", 4), 46: ("R_ARM_MOVT_PREL", 4),
    47: ("R_ARM_THM_MOVW_ABS_NC", 4), 48: ("R_ARM_THM_MOVT_ABS", 4),
    102: ("R_ARM_THM_JUMP11", 2), 103: ("R_ARM_THM_JUMP8", 2),
}
X86_64_RELOCS = {
    0: ("R_X86_64_NONE", 0), 1: ("R_X86_64_64", 8), 2: ("R_X86_64_PC32", 4),
    3: ("R_X86_64_GOT32", 4), 4: ("R_X86_64_PLT32", 4), 9: ("R_X86_64_GOTPCREL", 4),
    10: ("R_X86_64_32", 4), 11: ("R_X86_64_32S", 4), 12: ("R_X86_64_16", 2),
    13: ("R_X86_64_PC16", 2), 14: ("R_X86_64_8", 1), 15: ("R_X86_64_PC8", 1),
    24: ("R_X86_64_PC64", 8), 41: ("R_X86_64_GOTPCRELX", 4),
    42: ("R_X86_64_REX_GOTPCRELX", 4),
}
I386_RELOCS = {
    0: ("R_386_NONE", 0), 1: ("R_386_32", 4), 2: ("R_386_PC32", 4),
    4: ("R_386_PLT32", 4), 20: ("R_386_16", 2), 21: ("R_386_PC16", 2),
    22: ("R_386_8", 1), 23: ("R_386_PC8", 1),
}
AARCH64_RELOCS = {
    0: ("R_AARCH64_NONE", 0), 257: ("R_AARCH64_ABS64", 8), 258: ("R_AARCH64_ABS32", 4),
    259: ("R_AARCH64_ABS16", 2), 260: ("R_AARCH64_PREL64", 8),
    261: ("R_AARCH64_PREL32", 4), 262: ("R_AARCH64_PREL16", 2),
    282: ("R_AARCH64_JUMP26", 4), 283: ("R_AARCH64_CALL26", 4),
}
RELOC_TABLES = {
    EM_ARM: ARM_RELOCS, EM_X86_64: X86_64_RELOCS, EM_386: I386_RELOCS,
    EM_AARCH64: AARCH64_RELOCS,
}
# width used for relocation types not listed above
DEFAULT_RELOC_WIDTH = 4


class ElfObject:
    def __init__(self, data: bytes):
        if len(data) < 16 or data[:4] != ELF_MAGIC:
            raise UnsupportedContainer("not an ELF file")
        ei_class, ei_data = data[4], data[5]
        if ei_class not in (1, 2) or ei_data not in (1, 2):
            raise UnsupportedContainer("unknown ELF class or data encoding")
        self.data = data
        self.is64 = ei_class == 2
        self.endian = "<" if ei_data == 1 else ">"
        self.endianness = "little" if ei_data == 1 else "big"
        try:
            self._read_header()
            self.sections = self._read_sections()
        except struct.error as exc:
            raise UnsupportedContainer(f"truncated ELF file: {exc}") from None

    def _unpack(self, fmt, offset):
        return struct.unpack_from(self.endian + fmt, self.data, offset)

    def _read_header(self):
        if self.is64:
            (self.e_type, self.e_machine, _ver, _entry, _phoff, self.e_shoff, _flags,
             _ehsize, _phentsize, _phnum, self.e_shentsize, self.e_shnum,
             self.e_shstrndx) = self._unpack("HHIQQQIHHHHHH", 16)
        else:
            (self.e_type, self.e_machine, _ver, _entry, _phoff, self.e_shoff, _flags,
             _ehsize, _phentsize, _phnum, self.e_shentsize, self.e_shnum,
             self.e_shstrndx) = self._unpack("HHIIIIIHHHHHH", 16)
        if self.e_shoff == 0 or self.e_shnum == 0:
            raise UnsupportedContainer("ELF file has no section headers")

    def _read_sections(self) -> list[Section]:
        raw = []
        for idx in range(self.e_shnum):
            off = self.e_shoff + idx * self.e_shentsize
            if self.is64:
                name, typ, _flags, _addr, offset, size, link, info, _align, entsize = \
                    self._unpack("IIQQQQIIQQ", off)
            else:
                name, typ, _flags, _addr, offset, size, link, info, _align, entsize = \
                    self._unpack("IIIIIIIIII", off)
            raw.append((name, typ, offset, size, link, info, entsize))
        strtab = raw[self.e_shstrndx]
        names = self.data[strtab[2]:strtab[2] + strtab[3]]
        out = []
        for idx, (name, typ, offset, size, link, info, entsize) in enumerate(raw):
            end = names.find(b"\0", name)
            label = names[name:end if end >= 0 else None].decode("ascii", "replace")
            out.append(Section(idx, label, typ, offset, size, info, link, entsize))
        return out

    def section(self, name: str) -> Section:
        for sec in self.sections:
            if sec.name == name:
                return sec
        raise SectionMissing(f"no section named {name!r}")

    def section_bytes(self, sec: Section) -> bytes:
        if sec.type == SHT_NOBITS:
            return b""
        return self.data[sec.offset:sec.offset + sec.size]

    def relocations_for(self, sec: Section) -> list[Relocation]:
        table = RELOC_TABLES.get(self.e_machine, {})
        out = []
        for rs in self.sections:
            if rs.type not in (SHT_REL, SHT_RELA) or rs.info != sec.index:
                continue
            rela = rs.type == SHT_RELA
            if self.is64:
                fmt, default = ("QQq", 24) if rela else ("QQ", 16)
            else:
                fmt, default = ("IIi", 12) if rela else ("II", 8)
            step = rs.entsize or default
            for k in range(rs.size // step):
                fields = self._unpack(fmt, rs.offset + k * step)
                r_offset, r_info = fields[0], fields[1]
                rtype = r_info & 0xFFFFFFFF if self.is64 else r_info & 0xFF
                name, width = table.get(rtype, (f"type_{rtype}", DEFAULT_RELOC_WIDTH))
                out.append(Relocation(r_offset, width, name))
        out.sort(key=lambda r: (r.offset, r.kind))
        return out


def read_object(path_or_bytes) -> ElfObject:
    if isinstance(path_or_bytes, (bytes, bytearray)):
        return ElfObject(bytes(path_or_bytes))
    with open(path_or_bytes, "rb") as fh:
        return ElfObject(fh.read())
