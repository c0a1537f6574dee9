"""MiniC types and their textual notation.

Types are written outermost-first: ``*char`` is a pointer to char,
``[11]char`` an array of eleven chars, ``[4]*int`` an array of four
pointers to int.
"""

import re
from dataclasses import dataclass

BASES = ("int", "char", "void")
INT_SIZE = 8
CHAR_SIZE = 1
PTR_SIZE = 8

_TYPESTR = re.compile(r"^((?:\*|\[\d+\])*)(int|char|void)$")
_OP = re.compile(r"\*|\[(\d+)\]")


@dataclass(frozen=True)
class CType:
    base: str
    # outermost first; each entry is "*" or an int array length
    ops: tuple = ()

    def __str__(self):
        return "".join("*" if op == "*" else f"[{op}]" for op in self.ops) + self.base

    @property
    def is_pointer(self):
        return bool(self.ops) and self.ops[0] == "*"

    @property
    def is_array(self):
        return bool(self.ops) and self.ops[0] != "*"

    @property
    def is_void(self):
        return not self.ops and self.base == "void"

    @property
    def is_integer(self):
        return not self.ops and self.base in ("int", "char")

    @property
    def is_scalar(self):
        return self.is_integer or self.is_pointer

    def pointee(self):
        assert self.is_pointer or self.is_array
        return CType(self.base, self.ops[1:])

    def pointer_to(self):
        return CType(self.base, ("*",) + self.ops)

    def array_of(self, n):
        return CType(self.base, (n,) + self.ops)

    def decay(self):
        """Arrays decay to a pointer to their element type."""
        if self.is_array:
            return self.pointee().pointer_to()
        return self

    def sizeof(self):
        if not self.ops:
            if self.base == "int":
                return INT_SIZE
            if self.base == "char":
                return CHAR_SIZE
            raise ValueError("sizeof(void)")
        if self.ops[0] == "*":
            return PTR_SIZE
        return self.ops[0] * self.pointee().sizeof()

    def well_formed(self):
        if self.base != "void":
            return True
        # void only behind at least one pointer, or bare (return types)
        return not self.ops or self.ops[-1] == "*"


INT = CType("int")
CHAR = CType("char")
VOID = CType("void")
VOID_PTR = CType("void", ("*",))
CHAR_PTR = CType("char", ("*",))
INT_PTR = CType("int", ("*",))


def parse_typestr(text):
    m = _TYPESTR.match(text.strip())
    if not m:
        raise ValueError(f"malformed type string {text!r}")
    ops = tuple("*" if tok.group(0) == "*" else int(tok.group(1))
                for tok in _OP.finditer(m.group(1)))
    ty = CType(m.group(2), ops)
    if not ty.well_formed():
        raise ValueError(f"malformed type string {text!r}")
    return ty
