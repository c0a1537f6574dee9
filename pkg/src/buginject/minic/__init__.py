"""MiniC front end: parsing, analysis, static queries and canonical printing."""

from .analyzer import (
    BUILTINS,
    TOP,
    AnalyzedProgram,
    FuncInfo,
    VarInfo,
    analyze,
    containing_function,
    declarable,
    in_scope_vars,
)
from .errors import (
    DuplicateDeclarationInScope,
    MiniCError,
    MiniCSyntaxError,
    NotInFunction,
    TopLevelInStatementContext,
    TypeMismatch,
    UndeclaredIdentifier,
    UnknownStmtId,
)
from .parser import parse, parse_statements, parse_toplevels
from .printer import pretty_print, render
from .snippets import parse_snippet
from .types import CType, parse_typestr

__all__ = [
    "BUILTINS", "TOP", "AnalyzedProgram", "CType", "DuplicateDeclarationInScope",
    "FuncInfo", "MiniCError", "MiniCSyntaxError", "NotInFunction",
    "TopLevelInStatementContext", "TypeMismatch", "UndeclaredIdentifier",
    "UnknownStmtId", "VarInfo", "analyze", "containing_function", "declarable",
    "in_scope_vars", "load", "parse", "parse_snippet", "parse_statements",
    "parse_toplevels", "parse_typestr", "pretty_print", "render",
]


def load(text, path="<input>"):
    """Parse and analyze in one step."""
    return analyze(parse(text, path))
