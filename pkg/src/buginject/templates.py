"""Bug templates: the ``.bt`` file format, structural validation,
free-variable binding enumeration and precondition evaluation."""

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .minic import BUILTINS, TOP, MiniCError, containing_function, declarable
from .minic.errors import NotInFunction
from .minic.snippets import called_functions, declared_names, free_identifiers
from .minic.parser import parse_statements, parse_toplevels
from .minic.types import parse_typestr


class TemplateError(Exception):
    pass


class TemplateSyntaxError(TemplateError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class UnknownPredicate(TemplateError):
    pass


class UnresolvedDependency(TemplateError):
    pass


class CweLineOutOfRange(TemplateError):
    pass


class UnboundFreeVar(TemplateError):
    pass


# s-expressions

class Sym(str):
    pass


class Str(str):
    pass


_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "0": "\0", "\\": "\\", '"': '"', "'": "'"}


def _read_sexprs(text):
    """Parse text into nested lists of Sym, Str and int atoms. Each list
    remembers its starting line in ``.line``."""
    pos, line = 0, 1
    n = len(text)
    stack = [_SList(0)]
    while pos < n:
        ch = text[pos]
        if ch == "\n":
            line += 1
            pos += 1
        elif ch.isspace():
            pos += 1
        elif ch == ";":
            while pos < n and text[pos] != "\n":
                pos += 1
        elif ch == "(":
            stack.append(_SList(line))
            pos += 1
        elif ch == ")":
            if len(stack) == 1:
                raise TemplateSyntaxError("unbalanced ')'", line)
            done = stack.pop()
            stack[-1].append(done)
            pos += 1
        elif ch == '"':
            pos += 1
            out = []
            while True:
                if pos >= n:
                    raise TemplateSyntaxError("unterminated string", line)
                c = text[pos]
                if c == '"':
                    pos += 1
                    break
                if c == "\\":
                    if pos + 1 >= n:
                        raise TemplateSyntaxError("unterminated string", line)
                    e = text[pos + 1]
                    if e not in _ESCAPES:
                        raise TemplateSyntaxError(f"unknown escape \\{e}", line)
                    out.append(_ESCAPES[e])
                    pos += 2
                    continue
                if c == "\n":
                    line += 1
                out.append(c)
                pos += 1
            stack[-1].append(Str("".join(out)))
        else:
            start = pos
            while pos < n and not text[pos].isspace() and text[pos] not in '();"':
                pos += 1
            atom = text[start:pos]
            try:
                stack[-1].append(int(atom))
            except ValueError:
                stack[-1].append(Sym(atom))
    if len(stack) != 1:
        raise TemplateSyntaxError("unbalanced '('", stack[-1].line)
    return stack[0]


class _SList(list):
    def __init__(self, line):
        super().__init__()
        self.line = line


def _quote(s):
    out = []
    for c in s:
        if c == "\\":
            out.append("\\\\")
        elif c == '"':
            out.append('\\"')
        elif c == "\n":
            out.append("\\n")
        elif c == "\t":
            out.append("\\t")
        elif c == "\r":
            out.append("\\r")
        elif c == "\0":
            out.append("\\0")
        else:
            out.append(c)
    return '"' + "".join(out) + '"'


def _write_sexpr(x):
    if isinstance(x, (list, tuple)):
        return "(" + " ".join(_write_sexpr(i) for i in x) + ")"
    if isinstance(x, Str):
        return _quote(x)
    return str(x)


def _freeze(x):
    if isinstance(x, list):
        return tuple(_freeze(i) for i in x)
    return x


# predicates

@dataclass(frozen=True)
class Pred:
    op: str
    args: tuple = ()

    def __str__(self):
        if not self.args and self.op in ("true", "false"):
            return self.op
        return "(" + " ".join([self.op] + [_pred_arg_text(a) for a in self.args]) + ")"


def _pred_arg_text(a):
    if isinstance(a, Pred):
        return str(a)
    if isinstance(a, Str):
        return _quote(a)
    return str(a)


DYNAMIC_OPS = {"value", "size", "has-size"}
STATIC_OPS = {"declarable", "ret-type", "ret-void", "top-level"}
LOGIC_OPS = {"and", "or", "not"}
COMPARE_OPS = {"=", "!=", "<", "<=", ">", ">="}
ARITH_OPS = {"+", "-", "*"}
ALL_OPS = DYNAMIC_OPS | STATIC_OPS | LOGIC_OPS | COMPARE_OPS | ARITH_OPS | {"true", "false"}


def _pred_from_sexpr(x, line):
    if isinstance(x, int):
        return x
    if isinstance(x, Str):
        raise TemplateSyntaxError(f"unexpected string {_quote(x)} in precondition", line)
    if isinstance(x, Sym):
        if x in ("true", "false"):
            return Pred(str(x))
        raise UnknownPredicate(f"line {line}: bare symbol {x!r} in precondition")
    if not x or not isinstance(x[0], Sym):
        raise TemplateSyntaxError("precondition form must start with an operator", line)
    op = str(x[0])
    if op not in ALL_OPS:
        raise UnknownPredicate(f"line {getattr(x, 'line', line)}: unknown predicate {op!r}")
    rest = x[1:]
    line = getattr(x, "line", line)
    if op in DYNAMIC_OPS:
        if len(rest) != 1 or not isinstance(rest[0], Sym):
            raise TemplateSyntaxError(f"({op} VAR) takes one free-variable name", line)
        return Pred(op, (str(rest[0]),))
    if op == "declarable":
        if not rest or not all(isinstance(a, Str) for a in rest):
            raise TemplateSyntaxError("(declarable \"name\" ...) takes strings", line)
        return Pred(op, tuple(Str(a) for a in rest))
    if op == "ret-type":
        if len(rest) != 1 or not isinstance(rest[0], Str):
            raise TemplateSyntaxError("(ret-type \"TYPE\") takes one string", line)
        return Pred(op, (Str(rest[0]),))
    if op in ("ret-void", "top-level", "true", "false"):
        if rest:
            raise TemplateSyntaxError(f"({op}) takes no arguments", line)
        return Pred(op)
    if op == "not" and len(rest) != 1:
        raise TemplateSyntaxError("(not P) takes one argument", line)
    if op in COMPARE_OPS and len(rest) != 2:
        raise TemplateSyntaxError(f"({op} A B) takes two arguments", line)
    if op in ARITH_OPS and len(rest) < 2:
        raise TemplateSyntaxError(f"({op} ...) takes at least two arguments", line)
    return Pred(op, tuple(_pred_from_sexpr(a, line) for a in rest))


def pred_free_vars(p):
    if not isinstance(p, Pred):
        return set()
    if p.op in DYNAMIC_OPS:
        return {p.args[0]}
    out = set()
    for a in p.args:
        out |= pred_free_vars(a)
    return out


def pred_ops(p):
    if not isinstance(p, Pred):
        return set()
    out = {p.op}
    for a in p.args:
        out |= pred_ops(a)
    return out


class _Undefined:
    def __repr__(self):
        return "undefined"


UNDEFINED = _Undefined()


def _truth(v):
    if v is UNDEFINED:
        return False
    return bool(v)


@dataclass(frozen=True)
class StaticFacts:
    """Static predicate results frozen at one position of a program, so a
    precondition can be re-evaluated after the program text has changed."""
    facts: dict

    @classmethod
    def at(cls, pred, prog, at):
        facts = {}
        for atom in static_atoms(pred):
            facts[atom] = _truth(_eval(atom, None, Binding(), (prog, at)))
        return cls(facts)


def static_atoms(p):
    if not isinstance(p, Pred):
        return []
    if p.op in STATIC_OPS:
        return [p]
    out = []
    for a in p.args:
        out.extend(x for x in static_atoms(a) if x not in out)
    return out


def eval_pred(pred, point, binding, static_ctx):
    """Evaluate a precondition.

    ``point`` supplies dynamic values (may be None for static patches),
    ``binding`` maps placeholders to host names, and ``static_ctx`` is an
    (AnalyzedProgram, position) pair where position is a statement id or
    TOP. ``size`` of a null or size-less pointer is undefined and any
    comparison that touches it is false.
    """
    if pred is None:
        return True
    return _truth(_eval(pred, point, binding, static_ctx))


def _lookup(fv, point, binding):
    host = binding.get(fv)
    if host is None:
        raise UnboundFreeVar(fv)
    if point is None:
        raise TemplateError(f"dynamic primitive on {fv!r} needs a trace point")
    snap = point.var(host)
    if snap is None:
        raise UnboundFreeVar(f"{fv} -> {host} is not in scope at statement {point.stmt}")
    return snap


def _eval(p, point, binding, ctx):
    if not isinstance(p, Pred):
        return p
    op = p.op
    if op == "true":
        return True
    if op == "false":
        return False
    if op == "value":
        return _lookup(p.args[0], point, binding).value
    if op == "size":
        snap = _lookup(p.args[0], point, binding)
        return UNDEFINED if snap.size is None else snap.size
    if op == "has-size":
        return _lookup(p.args[0], point, binding).size is not None
    if op == "and":
        return all(_truth(_eval(a, point, binding, ctx)) for a in p.args)
    if op == "or":
        return any(_truth(_eval(a, point, binding, ctx)) for a in p.args)
    if op == "not":
        return not _truth(_eval(p.args[0], point, binding, ctx))
    if op in STATIC_OPS:
        if isinstance(ctx, StaticFacts):
            return ctx.facts[p]
        prog, at = ctx
        if op == "top-level":
            return at == TOP
        if op == "declarable":
            return all(declarable(prog, at, n) for n in p.args)
        if at == TOP:
            return False
        try:
            _, ret, is_void = containing_function(prog, at)
        except NotInFunction:
            return False
        if op == "ret-void":
            return is_void
        return str(ret) == p.args[0]
    vals = [_eval(a, point, binding, ctx) for a in p.args]
    if any(v is UNDEFINED for v in vals):
        return False if op in COMPARE_OPS else UNDEFINED
    vals = [int(v) for v in vals]
    if op in ARITH_OPS:
        acc = vals[0]
        for v in vals[1:]:
            acc = acc + v if op == "+" else acc - v if op == "-" else acc * v
        return acc
    a, b = vals
    return {"=": a == b, "!=": a != b, "<": a < b, "<=": a <= b,
            ">": a > b, ">=": a >= b}[op]


# templates

@dataclass(frozen=True)
class FreeVar:
    name: str
    type: str
    not_const: bool = False
    not_register: bool = False


@dataclass(frozen=True)
class Patch:
    name: str
    kind: str
    code: str = ""
    cwe: Optional[int] = None
    cwe_line: Optional[int] = None
    top_level: bool = False
    requires: tuple = ()
    free_vars: tuple = ()
    precondition: Optional[Pred] = None
    meta: tuple = ()

    @property
    def is_static(self):
        return self.kind == "static"

    @property
    def code_lines(self):
        return len(self.code.split("\n")) if self.code else 0


@dataclass(frozen=True)
class BugTemplate:
    name: str
    patches: tuple = field(default_factory=tuple)

    @property
    def static_patches(self):
        return tuple(p for p in self.patches if p.is_static)

    @property
    def dynamic_patches(self):
        return tuple(p for p in self.patches if not p.is_static)

    def patch(self, name):
        for p in self.patches:
            if p.name == name:
                return p
        raise KeyError(name)

    @property
    def free_vars(self):
        """Free variables of all dynamic patches, shared by placeholder."""
        seen = {}
        for p in self.dynamic_patches:
            for fv in p.free_vars:
                seen.setdefault(fv.name, fv)
        return tuple(seen[k] for k in sorted(seen))

    @property
    def cwe(self):
        for p in reversed(self.patches):
            if p.cwe is not None:
                return p.cwe
        return None

    @property
    def flaw_patch(self):
        """The patch carrying the cwe (last one that declares it)."""
        for p in reversed(self.patches):
            if p.cwe is not None:
                return p
        return self.dynamic_patches[-1] if self.dynamic_patches else None


def _patch_from_sexpr(x):
    line = x.line
    if len(x) < 2 or not isinstance(x[1], Sym):
        raise TemplateSyntaxError("(patch NAME field...) expected", line)
    fields = {"name": str(x[1])}
    seen = set()
    for f in x[2:]:
        if not isinstance(f, list) or not f or not isinstance(f[0], Sym):
            raise TemplateSyntaxError("patch field must be a parenthesized form", line)
        key, rest, fline = str(f[0]), f[1:], f.line
        if key in seen:
            raise TemplateSyntaxError(f"duplicate field {key!r}", fline)
        seen.add(key)
        if key == "kind":
            if len(rest) != 1 or rest[0] not in ("static", "dynamic"):
                raise TemplateSyntaxError("(kind static|dynamic) expected", fline)
            fields["kind"] = str(rest[0])
        elif key in ("cwe", "cwe-line"):
            if len(rest) != 1 or not isinstance(rest[0], int) or rest[0] < 1:
                raise TemplateSyntaxError(f"({key} N) needs a positive integer", fline)
            fields[key.replace("-", "_")] = rest[0]
        elif key == "top-level":
            if rest:
                raise TemplateSyntaxError("(top-level) takes no arguments", fline)
            fields["top_level"] = True
        elif key == "requires":
            if not rest or not all(isinstance(r, Sym) for r in rest):
                raise TemplateSyntaxError("(requires NAME...) expected", fline)
            fields["requires"] = tuple(str(r) for r in rest)
        elif key == "free-vars":
            fvs = []
            for fv in rest:
                if (not isinstance(fv, list) or len(fv) < 2 or not isinstance(fv[0], Sym)
                        or not isinstance(fv[1], (Sym, Str))):
                    raise TemplateSyntaxError("free variable must be (NAME TYPE [flags])", fline)
                flags = [str(a) for a in fv[2:]]
                if any(fl not in ("not-const", "not-register") for fl in flags):
                    raise TemplateSyntaxError(f"unknown free-variable flag in {flags}", fline)
                try:
                    ty = parse_typestr(str(fv[1]))
                except ValueError as e:
                    raise TemplateSyntaxError(str(e), fline) from None
                if not ty.well_formed() or ty.is_void:
                    raise TemplateSyntaxError(f"bad free-variable type {fv[1]}", fline)
                fvs.append(FreeVar(str(fv[0]), str(ty), "not-const" in flags,
                                   "not-register" in flags))
            fields["free_vars"] = tuple(fvs)
        elif key == "precondition":
            if len(rest) != 1:
                raise TemplateSyntaxError("(precondition PRED) takes one expression", fline)
            fields["precondition"] = _pred_from_sexpr(rest[0], fline)
        elif key == "code":
            if len(rest) != 1 or not isinstance(rest[0], Str):
                raise TemplateSyntaxError("(code \"...\") takes one string", fline)
            fields["code"] = str(rest[0])
        elif key == "meta":
            fields["meta"] = _freeze(list(rest))
        else:
            raise TemplateSyntaxError(f"unknown patch field {key!r}", fline)
    if "kind" not in fields:
        raise TemplateSyntaxError(f"patch {fields['name']} has no kind", line)
    return Patch(**fields), line


def _check_template(t, lines):
    names = set()
    declared_by = {}
    for p in t.patches:
        line = lines[p.name]
        if p.name in names:
            raise TemplateSyntaxError(f"duplicate patch name {p.name}", line)
        for r in p.requires:
            if r not in names:
                raise UnresolvedDependency(f"{t.name}/{p.name} requires unknown or later patch {r!r}")
        names.add(p.name)
        if p.cwe_line is not None and p.cwe_line > p.code_lines:
            raise CweLineOutOfRange(
                f"{t.name}/{p.name}: cwe-line {p.cwe_line} but code has {p.code_lines} lines")
        fv_names = [fv.name for fv in p.free_vars]
        if len(set(fv_names)) != len(fv_names):
            raise TemplateSyntaxError(f"duplicate free variable in {p.name}", line)
        ops = pred_ops(p.precondition)
        if p.is_static:
            if not p.top_level:
                raise TemplateSyntaxError(f"static patch {p.name} must be (top-level)", line)
            if p.free_vars:
                raise TemplateSyntaxError(f"static patch {p.name} cannot have free variables", line)
            if ops & DYNAMIC_OPS:
                raise TemplateSyntaxError(
                    f"static patch {p.name} uses dynamic predicates {sorted(ops & DYNAMIC_OPS)}", line)
        elif p.top_level:
            raise TemplateSyntaxError(f"dynamic patch {p.name} cannot be top-level", line)
        unbound = pred_free_vars(p.precondition) - set(fv_names)
        if unbound:
            raise TemplateSyntaxError(
                f"precondition of {p.name} uses undeclared free variables {sorted(unbound)}", line)
        try:
            nodes = parse_toplevels(p.code) if p.is_static else parse_statements(p.code)
        except MiniCError as e:
            raise TemplateSyntaxError(f"code of {p.name}: {e}", line) from None
        provided = set()
        for r in p.requires:
            provided |= declared_by.get(r, set())
        known = set(BUILTINS) | provided | set(fv_names)
        if p.is_static:
            known |= set(declared_names(nodes))
        free = free_identifiers(nodes, known)
        if free:
            raise TemplateSyntaxError(f"code of {p.name} uses undeclared identifiers {free}", line)
        missing = [f for f in called_functions(nodes) if f not in known]
        if missing:
            raise TemplateSyntaxError(f"code of {p.name} calls unknown functions {missing}", line)
        declared_by[p.name] = {n.name for n in nodes if hasattr(n, "name")} if p.is_static else set()
    fvs = {}
    for p in t.dynamic_patches:
        for fv in p.free_vars:
            if fvs.setdefault(fv.name, fv) != fv:
                raise TemplateSyntaxError(
                    f"{t.name}: free variable {fv.name} declared differently across patches",
                    lines[p.name])


def parse_templates(text):
    templates = []
    names = set()
    for x in _read_sexprs(text):
        line = getattr(x, "line", None)
        if not isinstance(x, list) or len(x) < 3 or x[0] != "template" or not isinstance(x[1], Sym):
            raise TemplateSyntaxError("(template NAME (patch ...)+) expected", line)
        patches, lines = [], {}
        for px in x[2:]:
            if not isinstance(px, list) or not px or px[0] != "patch":
                raise TemplateSyntaxError("(patch ...) expected", getattr(px, "line", line))
            p, pline = _patch_from_sexpr(px)
            patches.append(p)
            lines.setdefault(p.name, pline)
        t = BugTemplate(str(x[1]), tuple(patches))
        if t.name in names:
            raise TemplateSyntaxError(f"duplicate template name {t.name}", line)
        names.add(t.name)
        _check_template(t, lines)
        templates.append(t)
    return templates


def load_templates(path):
    with open(path, encoding="utf-8") as f:
        return parse_templates(f.read())


def format_patch(p):
    out = [f"  (patch {p.name}", f"    (kind {p.kind})"]
    if p.cwe is not None:
        out.append(f"    (cwe {p.cwe})")
    if p.cwe_line is not None:
        out.append(f"    (cwe-line {p.cwe_line})")
    if p.top_level:
        out.append("    (top-level)")
    if p.requires:
        out.append(f"    (requires {' '.join(p.requires)})")
    if p.free_vars:
        fvs = []
        for fv in p.free_vars:
            flags = (" not-const" if fv.not_const else "") + (" not-register" if fv.not_register else "")
            fvs.append(f"({fv.name} {fv.type}{flags})")
        out.append(f"    (free-vars {' '.join(fvs)})")
    if p.precondition is not None:
        out.append(f"    (precondition {p.precondition})")
    out.append(f"    (code {_quote(p.code)})")
    if p.meta:
        out.append(f"    (meta {' '.join(_write_sexpr(m) for m in p.meta)})")
    out[-1] += ")"
    return "\n".join(out)


def format_templates(templates):
    blocks = []
    for t in templates:
        body = "\n".join(format_patch(p) for p in t.patches)
        blocks.append(f"(template {t.name}\n{body})\n")
    return "\n".join(blocks)


# bindings

@dataclass(frozen=True)
class Binding:
    """Placeholder -> host variable name, sorted by placeholder."""
    pairs: tuple = ()

    def get(self, fv, default=None):
        for k, v in self.pairs:
            if k == fv:
                return v
        return default

    def as_dict(self):
        return dict(self.pairs)

    def __str__(self):
        return ",".join(f"{k}={v}" for k, v in self.pairs)

    @classmethod
    def of(cls, mapping):
        return cls(tuple(sorted(mapping.items())))


def compatible(fv, snap):
    return snap.type == fv.type and not (fv.not_const and snap.const)


def enumerate_bindings(patch_or_fvs, point):
    """All injective, type-exact bindings of the free variables to the
    point's snapshot variables, ordered by placeholder then host name."""
    fvs = patch_or_fvs.free_vars if hasattr(patch_or_fvs, "free_vars") else patch_or_fvs
    fvs = sorted(fvs, key=lambda fv: fv.name)
    if not fvs:
        return [Binding()]
    pools = []
    for fv in fvs:
        pool = sorted(v.name for v in point.vars if compatible(fv, v))
        if not pool:
            return []
        pools.append(pool)
    out = []
    for combo in itertools.product(*pools):
        if len(set(combo)) == len(combo):
            out.append(Binding(tuple(zip((fv.name for fv in fvs), combo))))
    return out
