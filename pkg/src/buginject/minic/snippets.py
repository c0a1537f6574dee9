"""Parsing and scope queries for code fragments that get inserted into a
host program."""

from . import ast
from .analyzer import BUILTINS, TOP, in_scope_vars
from .parser import parse_statements, parse_toplevels


def _visit_idents(stmts, visit, locals_=None):
    """Call visit(ident, shadowed) for every identifier use, where
    ``shadowed`` is the set of fragment-local names visible at the use."""
    scope = set(locals_ or ())

    def expr(e):
        for n in ast.walk(e):
            if isinstance(n, ast.Ident):
                visit(n, scope)

    def block(b):
        nonlocal scope
        saved = scope
        scope = set(scope)
        for s in b.stmts:
            stmt(s)
        scope = saved

    def stmt(s):
        nonlocal scope
        if isinstance(s, (ast.Comment, ast.Probe, ast.Break, ast.Continue)):
            return
        if isinstance(s, ast.Decl):
            if s.init is not None:
                expr(s.init)
            scope.add(s.name)
        elif isinstance(s, ast.ExprStmt):
            expr(s.expr)
        elif isinstance(s, ast.Return):
            if s.value is not None:
                expr(s.value)
        elif isinstance(s, ast.Block):
            block(s)
        elif isinstance(s, ast.If):
            expr(s.cond)
            block(s.then)
            if s.orelse is not None:
                block(s.orelse)
        elif isinstance(s, ast.While):
            expr(s.cond)
            block(s.body)
        elif isinstance(s, ast.For):
            for e in (s.init, s.cond, s.step):
                if e is not None:
                    expr(e)
            block(s.body)
        elif isinstance(s, ast.FuncDef):
            saved = scope
            scope = set(scope) | {p.name for p in s.params}
            for inner in s.body.stmts:
                stmt(inner)
            scope = saved
        else:
            raise TypeError(type(s).__name__)

    for s in stmts:
        stmt(s)


def free_identifiers(stmts, known=()):
    """Identifier names used but not declared by the fragment or ``known``."""
    free = []
    known = set(known)

    def visit(ident, shadowed):
        if ident.name not in shadowed and ident.name not in known and ident.name not in free:
            free.append(ident.name)

    _visit_idents(stmts, visit)
    return free


def declared_names(nodes):
    """Names declared anywhere in the fragment (variables, functions, params)."""
    names = []
    for top in nodes:
        for n in ast.walk(top):
            if isinstance(n, (ast.Decl, ast.FuncDef, ast.Param)) and n.name not in names:
                names.append(n.name)
    return names


def called_functions(nodes):
    names = []
    for top in nodes:
        for n in ast.walk(top):
            if isinstance(n, ast.Call) and n.name not in names:
                names.append(n.name)
    return names


def rename_free(stmts, mapping):
    """Rename free identifier uses in place; returns the renamed nodes."""
    renamed = []

    def visit(ident, shadowed):
        if ident.name in mapping and ident.name not in shadowed:
            ident.name = mapping[ident.name]
            renamed.append(ident)

    _visit_idents(stmts, visit)
    return renamed


def parse_snippet(text, ctx=None, at=None, top_level=False):
    """Parse template code against a host context.

    Returns ``(nodes, free)``: the statements (or top-level items when
    ``top_level``) and the identifiers that resolve neither to the host
    scope at ``at`` nor to declarations inside the fragment.
    """
    if not text.strip():
        return [], []
    nodes = parse_toplevels(text) if top_level else parse_statements(text)
    known = set(BUILTINS)
    if ctx is not None:
        known |= set(ctx.functions)
        position = TOP if top_level or at is None else at
        known |= {v.name for v in in_scope_vars(ctx, position)}
    if top_level:
        known |= {n.name for n in nodes if isinstance(n, (ast.Decl, ast.FuncDef))}
    return nodes, free_identifiers(nodes, known)
