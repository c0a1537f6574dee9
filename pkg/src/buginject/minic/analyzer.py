"""Scope and type resolution for MiniC, plus the static queries that
template preconditions are built from."""

from dataclasses import dataclass

from . import ast
from .errors import (
    DuplicateDeclarationInScope,
    NotInFunction,
    TypeMismatch,
    UndeclaredIdentifier,
    UnknownStmtId,
)
from .types import CHAR, CHAR_PTR, INT, VOID, VOID_PTR, CType

# the top-level insertion position used by static patches
TOP = "top"


@dataclass(frozen=True)
class VarInfo:
    name: str
    type: CType
    const: bool
    scope: str  # global, param or local
    decl_id: int

    @property
    def typestr(self):
        return str(self.type)

    @property
    def traceable(self):
        return self.type.is_scalar


@dataclass(frozen=True)
class FuncInfo:
    name: str
    ret: CType
    params: tuple
    builtin: bool = False

    @property
    def is_void(self):
        return self.ret.is_void


def _builtin(name, ret, *params):
    return FuncInfo(name, ret, tuple(VarInfo(f"a{i}", t, False, "param", -1)
                                     for i, t in enumerate(params)), True)


BUILTINS = {f.name: f for f in [
    _builtin("malloc", VOID_PTR, INT),
    _builtin("free", VOID, VOID_PTR),
    _builtin("memcpy", VOID_PTR, VOID_PTR, VOID_PTR, INT),
    _builtin("strlen", INT, CHAR_PTR),
    _builtin("strcpy", CHAR_PTR, CHAR_PTR, CHAR_PTR),
    _builtin("print_int", VOID, INT),
    _builtin("print_str", VOID, CHAR_PTR),
    _builtin("argc", INT),
    _builtin("arg_int", INT, INT),
    _builtin("arg_str", CHAR_PTR, INT),
]}


@dataclass
class AnalyzedProgram:
    unit: ast.SourceUnit
    functions: dict        # name -> FuncInfo (user functions only)
    globals: tuple         # VarInfo, declaration order
    scopes: dict           # stmt id -> tuple of VarInfo in scope before it
    stmt_func: dict        # stmt id -> enclosing function name
    stmt_ids: list         # all full statements, source order
    nodes: dict            # node id -> node
    types: dict            # expression id -> CType (before decay)
    refs: dict             # Ident id -> VarInfo
    func_names_declared: dict  # function name -> set of param/local names
    func_nodes: dict       # function name -> FuncDef

    def statement(self, stmt_id):
        if stmt_id not in self.scopes:
            raise UnknownStmtId(stmt_id)
        return self.nodes[stmt_id]


def in_scope_vars(prog, at):
    """Variables visible immediately before statement ``at``."""
    if at == TOP:
        return list(prog.globals)
    if at not in prog.scopes:
        raise UnknownStmtId(at)
    return list(prog.scopes[at])


def containing_function(prog, at):
    """(name, return type, void flag) of the function around ``at``."""
    if at == TOP:
        raise NotInFunction("top-level position")
    if at not in prog.scopes:
        raise UnknownStmtId(at)
    f = prog.functions[prog.stmt_func[at]]
    return f.name, f.ret, f.is_void


def declarable(prog, at, name):
    """True when declaring ``name`` at ``at`` cannot collide with or shadow
    anything: not visible there, not declared anywhere in the enclosing
    function, and not the name of a function or builtin."""
    if name in prog.functions or name in BUILTINS:
        return False
    if at == TOP:
        if any(v.name == name for v in prog.globals):
            return False
        return not any(name in names for names in prog.func_names_declared.values())
    visible = in_scope_vars(prog, at)
    if any(v.name == name for v in visible):
        return False
    return name not in prog.func_names_declared[prog.stmt_func[at]]


def is_null_constant(node):
    if isinstance(node, ast.NullLit):
        return True
    if isinstance(node, ast.IntLit) and node.value == 0:
        return True
    if isinstance(node, ast.Cast) and node.type.is_scalar:
        return is_null_constant(node.expr)
    return False


def _pointers_compatible(a, b):
    return a == b or a == VOID_PTR or b == VOID_PTR


class _Analyzer:
    def __init__(self, unit):
        self.unit = unit
        self.functions = {}
        self.globals = []
        self.scopes = {}
        self.stmt_func = {}
        self.stmt_ids = []
        self.nodes = {}
        self.types = {}
        self.refs = {}
        self.declared = {}
        self.func_nodes = {}
        self.chain = []
        self.func = None

    def err(self, node, message):
        raise TypeMismatch(message, node.line, node.col)

    def run(self):
        for top in self.unit.toplevels:
            for n in ast.walk(top):
                self.nodes[n.id] = n
        for top in self.unit.toplevels:
            if isinstance(top, ast.FuncDef):
                if top.name in self.functions or top.name in BUILTINS:
                    raise DuplicateDeclarationInScope(top.name, top.line, top.col)
                if not top.ret.well_formed() or top.ret.is_array:
                    self.err(top, f"bad return type {top.ret}")
                params = tuple(VarInfo(p.name, p.type, p.const, "param", p.id) for p in top.params)
                self.functions[top.name] = FuncInfo(top.name, top.ret, params)
                self.func_nodes[top.name] = top
        global_scope = {}
        self.chain = [global_scope]
        for top in self.unit.toplevels:
            if isinstance(top, ast.Decl):
                if top.name in self.functions or top.name in BUILTINS:
                    raise DuplicateDeclarationInScope(top.name, top.line, top.col)
                self.check_global_init(top)
                info = self.declare(top, "global")
                self.globals.append(info)
            elif isinstance(top, ast.FuncDef):
                self.function(top)
        return ast_program(self)

    def check_global_init(self, decl):
        if decl.init is None:
            return
        ok_kinds = (ast.IntLit, ast.StrLit, ast.NullLit, ast.SizeOf, ast.Cast, ast.Unary)
        for n in ast.walk(decl.init):
            if not isinstance(n, ok_kinds) or (isinstance(n, ast.Unary) and n.op != "-"):
                self.err(n, "global initializer must be a constant")

    def declare(self, node, scope):
        ty = node.type
        if not ty.well_formed() or ty.is_void:
            self.err(node, f"variable of type {ty}")
        current = self.chain[-1]
        if node.name in current:
            raise DuplicateDeclarationInScope(node.name, node.line, node.col)
        if isinstance(node, ast.Decl) and node.init is not None:
            self.check_init(node)
        info = VarInfo(node.name, ty, node.const, scope, node.id)
        current[node.name] = info
        if self.func is not None:
            self.declared[self.func.name].add(node.name)
        return info

    def check_init(self, decl):
        if decl.type.is_array:
            if (isinstance(decl.init, ast.StrLit) and decl.type.pointee() == CHAR
                    and len(decl.init.value) + 1 <= decl.type.ops[0]):
                self.expr(decl.init)
                return
            self.err(decl, "unsupported array initializer")
        vt = self.value_type(decl.init)
        self.check_assignable(decl.type, vt, decl.init, decl)

    def visible(self):
        out = {}
        for scope in self.chain:
            for name, info in scope.items():
                if name in out:
                    del out[name]
                out[name] = info
        return tuple(out.values())

    def function(self, f):
        self.func = self.functions[f.name]
        self.declared[f.name] = set()
        scope = {}
        self.chain.append(scope)
        for p, info in zip(f.params, self.func.params):
            if not p.type.well_formed() or p.type.is_void:
                self.err(p, f"parameter of type {p.type}")
            if p.name in scope:
                raise DuplicateDeclarationInScope(p.name, p.line, p.col)
            scope[p.name] = info
            self.declared[f.name].add(p.name)
        # the body shares the parameters' scope
        self.stmts(f.body.stmts)
        self.chain.pop()
        self.func = None

    def block(self, block):
        self.chain.append({})
        self.stmts(block.stmts)
        self.chain.pop()

    def stmts(self, stmts):
        for s in stmts:
            if isinstance(s, (ast.Comment, ast.Probe)):
                continue
            self.scopes[s.id] = self.visible()
            self.stmt_func[s.id] = self.func.name
            self.stmt_ids.append(s.id)
            self.stmt(s)

    def stmt(self, s):
        if isinstance(s, ast.Block):
            self.block(s)
        elif isinstance(s, ast.Decl):
            self.declare(s, "local")
        elif isinstance(s, ast.ExprStmt):
            self.expr(s.expr)
        elif isinstance(s, ast.If):
            self.condition(s.cond)
            self.block(s.then)
            if s.orelse is not None:
                self.block(s.orelse)
        elif isinstance(s, ast.While):
            self.condition(s.cond)
            self.block(s.body)
        elif isinstance(s, ast.For):
            if s.init is not None:
                self.expr(s.init)
            if s.cond is not None:
                self.condition(s.cond)
            if s.step is not None:
                self.expr(s.step)
            self.block(s.body)
        elif isinstance(s, ast.Return):
            ret = self.func.ret
            if s.value is None:
                if not ret.is_void:
                    self.err(s, f"missing return value in function returning {ret}")
            else:
                if ret.is_void:
                    self.err(s, "return value in void function")
                self.check_assignable(ret, self.value_type(s.value), s.value, s)
        elif isinstance(s, (ast.Break, ast.Continue)):
            pass
        else:
            raise TypeError(f"unexpected statement {type(s).__name__}")

    def condition(self, e):
        t = self.value_type(e)
        if not t.is_scalar:
            self.err(e, f"condition of type {t}")

    def check_assignable(self, target, vt, value_node, where):
        if target.is_integer and vt.is_integer:
            return
        if target.is_pointer:
            if is_null_constant(value_node):
                return
            if vt.is_pointer and _pointers_compatible(target, vt):
                return
        self.err(where, f"cannot convert {vt} to {target}")

    def value_type(self, e):
        return self.expr(e).decay()

    def lvalue(self, e):
        t = self.expr(e)
        if isinstance(e, ast.Ident):
            info = self.refs[e.id]
            if t.is_array:
                self.err(e, "array is not assignable")
            if info.const and not t.is_pointer:
                self.err(e, f"assignment to const {info.name!r}")
            return t
        if isinstance(e, ast.Unary) and e.op == "*" or isinstance(e, ast.Index):
            if t.is_array:
                self.err(e, "array is not assignable")
            return t
        self.err(e, "expression is not assignable")

    def expr(self, e):
        t = self._expr(e)
        self.types[e.id] = t
        return t

    def _expr(self, e):
        if isinstance(e, ast.IntLit):
            return INT
        if isinstance(e, ast.StrLit):
            return CHAR.array_of(len(e.value) + 1)
        if isinstance(e, ast.NullLit):
            return VOID_PTR
        if isinstance(e, ast.Ident):
            for scope in reversed(self.chain):
                if e.name in scope:
                    self.refs[e.id] = scope[e.name]
                    return scope[e.name].type
            raise UndeclaredIdentifier(e.name, e.line, e.col)
        if isinstance(e, ast.Unary):
            if e.op == "&":
                t = self.expr(e.operand)
                if t.is_array:
                    self.err(e, "cannot take the address of an array")
                if not isinstance(e.operand, (ast.Ident, ast.Index)) and not (
                        isinstance(e.operand, ast.Unary) and e.operand.op == "*"):
                    self.err(e, "cannot take the address of an rvalue")
                return t.pointer_to()
            t = self.value_type(e.operand)
            if e.op == "-":
                if not t.is_integer:
                    self.err(e, f"cannot negate {t}")
                return INT
            if e.op == "!":
                if not t.is_scalar:
                    self.err(e, f"cannot apply ! to {t}")
                return INT
            if e.op == "*":
                if not t.is_pointer or t == VOID_PTR:
                    self.err(e, f"cannot dereference {t}")
                return t.pointee()
        if isinstance(e, ast.Binary):
            lt = self.value_type(e.left)
            rt = self.value_type(e.right)
            op = e.op
            if op in ("&&", "||"):
                if not (lt.is_scalar and rt.is_scalar):
                    self.err(e, f"operands of {op} must be scalars")
                return INT
            if op in ("*", "/", "%"):
                if not (lt.is_integer and rt.is_integer):
                    self.err(e, f"operands of {op} must be integers")
                return INT
            if op == "+":
                if lt.is_integer and rt.is_integer:
                    return INT
                if lt.is_pointer and rt.is_integer and lt != VOID_PTR:
                    return lt
                if lt.is_integer and rt.is_pointer and rt != VOID_PTR:
                    return rt
                self.err(e, f"invalid operands {lt} + {rt}")
            if op == "-":
                if lt.is_integer and rt.is_integer:
                    return INT
                if lt.is_pointer and rt.is_integer and lt != VOID_PTR:
                    return lt
                if lt.is_pointer and lt == rt and lt != VOID_PTR:
                    return INT
                self.err(e, f"invalid operands {lt} - {rt}")
            # comparisons
            if lt.is_integer and rt.is_integer:
                return INT
            if lt.is_pointer and rt.is_pointer and _pointers_compatible(lt, rt):
                return INT
            if op in ("==", "!=") and (
                    lt.is_pointer and is_null_constant(e.right) or
                    rt.is_pointer and is_null_constant(e.left)):
                return INT
            self.err(e, f"cannot compare {lt} and {rt}")
        if isinstance(e, ast.Assign):
            tt = self.lvalue(e.target)
            vt = self.value_type(e.value)
            if e.op == "=":
                self.check_assignable(tt, vt, e.value, e)
            elif not (vt.is_integer and (tt.is_integer or tt.is_pointer and tt != VOID_PTR)):
                self.err(e, f"invalid operands {tt} {e.op} {vt}")
            return tt
        if isinstance(e, ast.IncDec):
            tt = self.lvalue(e.target)
            if not (tt.is_integer or tt.is_pointer and tt != VOID_PTR):
                self.err(e, f"cannot apply {e.op} to {tt}")
            return tt
        if isinstance(e, ast.Index):
            bt = self.value_type(e.base)
            it = self.value_type(e.index)
            if not bt.is_pointer or bt == VOID_PTR:
                self.err(e, f"cannot index {bt}")
            if not it.is_integer:
                self.err(e, f"index of type {it}")
            return bt.pointee()
        if isinstance(e, ast.Call):
            f = self.functions.get(e.name) or BUILTINS.get(e.name)
            if f is None:
                raise UndeclaredIdentifier(e.name, e.line, e.col)
            if len(e.args) != len(f.params):
                self.err(e, f"{e.name} expects {len(f.params)} arguments, got {len(e.args)}")
            for arg, param in zip(e.args, f.params):
                self.check_assignable(param.type, self.value_type(arg), arg, arg)
            return f.ret
        if isinstance(e, ast.Cast):
            vt = self.value_type(e.expr)
            if e.type.is_void:
                return VOID
            if not (e.type.is_scalar and vt.is_scalar):
                self.err(e, f"cannot cast {vt} to {e.type}")
            return e.type
        if isinstance(e, ast.SizeOf):
            t = e.type if e.type is not None else self.expr(e.expr)
            if t.is_void:
                self.err(e, "sizeof(void)")
            return INT
        raise TypeError(f"unexpected expression {type(e).__name__}")


def ast_program(a):
    return AnalyzedProgram(
        unit=a.unit,
        functions=a.functions,
        globals=tuple(a.globals),
        scopes=a.scopes,
        stmt_func=a.stmt_func,
        stmt_ids=a.stmt_ids,
        nodes=a.nodes,
        types=a.types,
        refs=a.refs,
        func_names_declared={k: frozenset(v) for k, v in a.declared.items()},
        func_nodes=a.func_nodes,
    )


def analyze(unit):
    """Resolve scopes and types; raises on the first error."""
    return _Analyzer(unit).run()
