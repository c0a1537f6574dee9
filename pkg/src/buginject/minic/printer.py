"""Canonical MiniC formatting: 4-space indent, one statement per line,
K&R braces, every if/while/for body braced, no blank lines inside
function bodies, one blank line around function definitions."""

from . import ast

INDENT = "    "

PREC = {"||": 2, "&&": 3, "==": 4, "!=": 4, "<": 5, "<=": 5, ">": 5, ">=": 5,
        "+": 6, "-": 6, "*": 7, "/": 7, "%": 7}
UNARY_PREC = 8
POSTFIX_PREC = 9


def type_prefix(ty):
    """Split a declared type into (base spelling, stars, dims)."""
    dims = []
    ops = list(ty.ops)
    while ops and ops[0] != "*":
        dims.append(ops.pop(0))
    if any(op != "*" for op in ops):
        raise ValueError(f"type {ty} has no C declarator spelling here")
    return ty.base, "*" * len(ops), "".join(f"[{d}]" for d in dims)


def declaration(ty, name, const=False, static=False):
    base, stars, dims = type_prefix(ty)
    quals = ("static " if static else "") + ("const " if const else "")
    return f"{quals}{base} {stars}{name}{dims}"


def typename(ty):
    base, stars, dims = type_prefix(ty)
    assert not dims
    return f"{base} {stars}" if stars else base


def string_literal(data):
    out = []
    for b in data:
        if b == 34:
            out.append('\\"')
        elif b == 92:
            out.append("\\\\")
        elif b == 10:
            out.append("\\n")
        elif b == 9:
            out.append("\\t")
        elif 32 <= b < 127:
            out.append(chr(b))
        else:
            out.append(f"\\{b:03o}")
    return '"' + "".join(out) + '"'


def expr(e, ctx=0):
    s, p = _expr(e)
    return f"({s})" if p < ctx else s


def _expr(e):
    if isinstance(e, ast.IntLit):
        if e.char_text is not None:
            return e.char_text, 10
        if e.value < 0:
            return f"-{-e.value}", UNARY_PREC
        return str(e.value), 10
    if isinstance(e, ast.StrLit):
        return string_literal(e.value), 10
    if isinstance(e, ast.NullLit):
        return "NULL", 10
    if isinstance(e, ast.Ident):
        return e.name, 10
    if isinstance(e, ast.Unary):
        inner = expr(e.operand, UNARY_PREC)
        if e.op in ("-", "&") and inner.startswith(e.op):
            inner = f"({inner})"
        return e.op + inner, UNARY_PREC
    if isinstance(e, ast.Binary):
        p = PREC[e.op]
        return f"{expr(e.left, p)} {e.op} {expr(e.right, p + 1)}", p
    if isinstance(e, ast.Assign):
        return f"{expr(e.target, 2)} {e.op} {expr(e.value, 1)}", 1
    if isinstance(e, ast.IncDec):
        if e.prefix:
            inner = expr(e.target, UNARY_PREC)
            if inner.startswith(e.op[0]):
                inner = f"({inner})"
            return e.op + inner, UNARY_PREC
        return expr(e.target, POSTFIX_PREC) + e.op, POSTFIX_PREC
    if isinstance(e, ast.Index):
        return f"{expr(e.base, POSTFIX_PREC)}[{expr(e.index)}]", POSTFIX_PREC
    if isinstance(e, ast.Call):
        return f"{e.name}({', '.join(expr(a, 1) for a in e.args)})", POSTFIX_PREC
    if isinstance(e, ast.Cast):
        return f"({typename(e.type)}){expr(e.expr, UNARY_PREC)}", UNARY_PREC
    if isinstance(e, ast.SizeOf):
        if e.type is not None:
            return f"sizeof({typename(e.type)})", UNARY_PREC
        return f"sizeof({expr(e.expr)})", UNARY_PREC
    raise TypeError(f"cannot print {type(e).__name__}")


class _Printer:
    def __init__(self):
        self.lines = []
        self.spans = {}

    def emit(self, depth, text):
        self.lines.append(INDENT * depth + text)

    def node(self, n, depth, fn):
        start = len(self.lines) + 1
        fn(n, depth)
        self.spans[id(n)] = (start, len(self.lines))

    def comment(self, c, depth):
        first, *rest = c.text.split("\n")
        self.emit(depth, first)
        self.lines.extend(rest)

    def block_body(self, block, depth):
        for s in block.stmts:
            if isinstance(s, ast.Probe):
                continue
            self.node(s, depth, self.stmt)

    def stmt(self, s, depth):
        if isinstance(s, ast.Comment):
            self.comment(s, depth)
        elif isinstance(s, ast.Decl):
            init = f" = {expr(s.init, 1)}" if s.init is not None else ""
            self.emit(depth, declaration(s.type, s.name, s.const, s.static) + init + ";")
        elif isinstance(s, ast.ExprStmt):
            self.emit(depth, expr(s.expr) + ";")
        elif isinstance(s, ast.Block):
            self.emit(depth, "{")
            self.block_body(s, depth + 1)
            self.emit(depth, "}")
        elif isinstance(s, ast.If):
            self.emit(depth, f"if ({expr(s.cond)}) {{")
            self.block_body(s.then, depth + 1)
            if s.orelse is not None:
                self.emit(depth, "} else {")
                self.block_body(s.orelse, depth + 1)
            self.emit(depth, "}")
        elif isinstance(s, ast.While):
            self.emit(depth, f"while ({expr(s.cond)}) {{")
            self.block_body(s.body, depth + 1)
            self.emit(depth, "}")
        elif isinstance(s, ast.For):
            init = expr(s.init) if s.init is not None else ""
            cond = " " + expr(s.cond) if s.cond is not None else ""
            step = " " + expr(s.step) if s.step is not None else ""
            self.emit(depth, f"for ({init};{cond};{step}) {{")
            self.block_body(s.body, depth + 1)
            self.emit(depth, "}")
        elif isinstance(s, ast.Return):
            self.emit(depth, "return;" if s.value is None else f"return {expr(s.value)};")
        elif isinstance(s, ast.Break):
            self.emit(depth, "break;")
        elif isinstance(s, ast.Continue):
            self.emit(depth, "continue;")
        else:
            raise TypeError(f"cannot print {type(s).__name__}")

    def toplevel(self, t, depth):
        if isinstance(t, ast.FuncDef):
            params = ", ".join(declaration(p.type, p.name, p.const) for p in t.params)
            head = declaration(t.ret, t.name, static=t.static)
            self.emit(0, f"{head}({params}) {{")
            self.block_body(t.body, 1)
            self.emit(0, "}")
        elif isinstance(t, ast.Comment):
            self.comment(t, 0)
        else:
            self.stmt(t, 0)

    def unit(self, toplevels):
        prev = None
        for t in toplevels:
            if prev is not None and (
                    isinstance(prev, ast.FuncDef)
                    or isinstance(t, ast.FuncDef) and not isinstance(prev, ast.Comment)):
                self.lines.append("")
            self.node(t, 0, self.toplevel)
            prev = t


def render(source):
    """Return (text, spans) where spans maps id(node) to its 1-based
    (first, last) line for every top-level item and statement."""
    unit = getattr(source, "unit", source)
    p = _Printer()
    p.unit(unit.toplevels)
    text = "\n".join(p.lines) + "\n" if p.lines else ""
    return text, p.spans


def render_statements(stmts, depth=0):
    p = _Printer()
    for s in stmts:
        p.node(s, depth, p.stmt)
    return "\n".join(p.lines) + ("\n" if p.lines else "")


def pretty_print(source):
    """Canonical text of an AnalyzedProgram or SourceUnit."""
    return render(source)[0]
