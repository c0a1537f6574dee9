"""Execution of MiniC programs, plain or instrumented.

Programs are compiled once into Python closures. Memory is a set of
objects (globals, locals, heap blocks, string literals, argument
strings); a pointer is an (object id, byte offset) pair and object id 0
is null. Every access is bounds- and liveness-checked, so the six fault
kinds below are detected exactly where they happen.
"""

import shlex
import sys
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .minic import ast

FAULT_EXIT = {
    "null-deref": 64,
    "oob-read": 65,
    "oob-write": 66,
    "use-after-free": 67,
    "double-free": 68,
    "div-zero": 69,
}
BUDGET_EXIT = 70
DEFAULT_BUDGET = 10_000_000
MAX_CALL_DEPTH = 400
MAX_ALLOC = 1 << 31

_MASK64 = (1 << 64) - 1


class Ptr(NamedTuple):
    obj: int
    off: int


NULL = Ptr(0, 0)


def encode_pointer(p):
    """Deterministic 64-bit identity of a pointer; null encodes as 0."""
    return (p.obj << 32) | (p.off & 0xFFFFFFFF)


def wrap64(v):
    v &= _MASK64
    return v - (1 << 64) if v >> 63 else v


def wrap8(v):
    v &= 0xFF
    return v - 256 if v > 127 else v


class Fault(Exception):
    def __init__(self, kind):
        super().__init__(kind)
        self.kind = kind


class BudgetExhausted(Exception):
    pass


class _StopRun(Exception):
    pass


@dataclass(frozen=True)
class ProgramInput:
    id: int
    args: tuple = ()


class VarSnapshot(NamedTuple):
    name: str
    type: str
    const: bool
    pointer: bool
    null: bool
    value: int
    size: Optional[int]


class TracePoint(NamedTuple):
    witness: int
    step: int
    stmt: int
    vars: tuple

    def var(self, name):
        for v in self.vars:
            if v.name == name:
                return v
        return None


@dataclass(frozen=True)
class FaultInfo:
    kind: str
    stmt: int
    # statement being executed in each active frame, outermost first
    stack: tuple = ()


@dataclass
class RunOutcome:
    exit: int
    fault: Optional[FaultInfo]
    steps: int
    output: list = field(default_factory=list, compare=False)

    @property
    def budget_exhausted(self):
        return self.fault is None and self.exit == BUDGET_EXIT


class _Obj:
    __slots__ = ("id", "size", "cells", "kind", "alive", "readonly")

    def __init__(self, oid, size, kind, readonly=False):
        self.id = oid
        self.size = size
        self.cells = {}
        self.kind = kind
        self.alive = True
        self.readonly = readonly


class _Ret:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


_BREAK = object()
_CONTINUE = object()


def _truthy(v):
    if type(v) is Ptr:
        return v.obj != 0 or v.off != 0
    return v != 0


def _coerce(v, ty):
    """Convert a runtime value to the representation of ``ty``."""
    if ty.is_pointer:
        if type(v) is Ptr:
            return v
        return NULL if v == 0 else Ptr(0, v)
    if type(v) is Ptr:
        v = encode_pointer(v)
    if ty.base == "char" and not ty.ops:
        return wrap8(v)
    return wrap64(v)


def _needs_coerce(src, dst):
    if dst.is_void:
        return False
    if dst.is_pointer:
        return not src.is_pointer
    if dst.base == "int" and not dst.ops and src.base == "int" and not src.ops:
        return False
    return True


class Machine:
    """State of one run."""

    def __init__(self, args, budget=DEFAULT_BUDGET):
        self.args = [str(a) for a in args]
        self.budget = budget
        self.objs = {}
        self.next_obj = 1
        self.steps = 0
        self.stack = []
        self.globals = {}
        self.strings = {}
        self.arg_objs = {}
        self.output = []

    def new_obj(self, size, kind, readonly=False):
        obj = _Obj(self.next_obj, size, kind, readonly)
        self.objs[obj.id] = obj
        self.next_obj += 1
        return obj

    def check(self, p, size, write):
        if p.obj == 0:
            raise Fault("null-deref")
        obj = self.objs[p.obj]
        if not obj.alive:
            raise Fault("use-after-free")
        if p.off < 0 or p.off + size > obj.size:
            raise Fault("oob-write" if write else "oob-read")
        if write and obj.readonly:
            raise Fault("oob-write")
        return obj

    def load(self, p, ty):
        obj = self.check(p, ty.sizeof(), False)
        v = obj.cells.get(p.off)
        if v is None:
            return NULL if ty.is_pointer else 0
        if ty.is_pointer != (type(v) is Ptr) or (ty.base == "char" and not ty.ops):
            return _coerce(v, ty)
        return v

    def store(self, p, ty, v):
        obj = self.check(p, ty.sizeof(), True)
        obj.cells[p.off] = v

    def tick(self):
        if self.steps >= self.budget:
            raise BudgetExhausted()
        self.steps += 1

    def enter(self, sid, spec, fr):
        self.stack[-1] = sid
        if self.steps >= self.budget:
            raise BudgetExhausted()
        self.steps += 1

    def probe(self, key, spec, fr):
        pass

    def snapshot(self, spec, fr):
        out = []
        for name, typestr, const, is_ptr, is_global, decl in spec:
            obj = self.globals[decl] if is_global else fr[decl]
            v = obj.cells.get(0)
            if is_ptr:
                if v is None:
                    v = NULL
                elif type(v) is not Ptr:
                    v = Ptr(0, v)
                size = None
                if v.obj:
                    target = self.objs[v.obj]
                    if target.alive and 0 <= v.off <= target.size:
                        size = target.size - v.off
                out.append(VarSnapshot(name, typestr, const, True, v.obj == 0,
                                       encode_pointer(v), size))
            else:
                if v is None:
                    v = 0
                elif type(v) is Ptr:
                    v = encode_pointer(v)
                out.append(VarSnapshot(name, typestr, const, False, False, v, None))
        return tuple(out)

    # strings

    def c_string(self, p):
        """Read a NUL-terminated string, checking every byte."""
        obj = self.check(p, 1, False)
        out = bytearray()
        off = p.off
        while True:
            if off < 0 or off >= obj.size:
                raise Fault("oob-read")
            ch = obj.cells.get(off, 0)
            if type(ch) is Ptr:
                ch = encode_pointer(ch)
            ch &= 0xFF
            if ch == 0:
                return bytes(out)
            out.append(ch)
            off += 1

    def put_bytes(self, obj, data):
        for i, b in enumerate(data):
            obj.cells[i] = wrap8(b)
        obj.cells[len(data)] = 0

    def arg_string(self, i):
        if i not in self.arg_objs:
            data = self.args[i].encode("utf-8")
            obj = self.new_obj(len(data) + 1, "arg")
            self.put_bytes(obj, data)
            self.arg_objs[i] = obj
        return Ptr(self.arg_objs[i].id, 0)


class TracingMachine(Machine):
    def __init__(self, args, witness, max_trace, budget=DEFAULT_BUDGET):
        super().__init__(args, budget)
        self.witness = witness
        self.max_trace = max_trace
        self.trace = []

    def enter(self, sid, spec, fr):
        self.stack[-1] = sid
        if self.steps >= self.budget:
            raise BudgetExhausted()
        self.steps += 1
        if len(self.trace) < self.max_trace:
            self.trace.append(TracePoint(self.witness, len(self.trace), sid,
                                         self.snapshot(spec, fr)))


class ProbingMachine(Machine):
    """Calls ``on_probe(key, vars)`` at each probe site; the callback may
    return True to stop the run early."""

    def __init__(self, args, on_probe, budget=DEFAULT_BUDGET):
        super().__init__(args, budget)
        self.on_probe = on_probe

    def probe(self, key, spec, fr):
        if self.on_probe(key, self.snapshot(spec, fr)):
            raise _StopRun()


# builtins

def _b_malloc(m, n):
    if n < 0 or n > MAX_ALLOC:
        return NULL
    return Ptr(m.new_obj(n, "heap").id, 0)


def _b_free(m, p):
    if p.obj == 0 and p.off == 0:
        return 0
    if p.obj == 0:
        raise Fault("null-deref")
    obj = m.objs[p.obj]
    # freeing twice, or anything that is not the start of a heap block
    if not obj.alive or obj.kind != "heap" or p.off != 0:
        raise Fault("double-free")
    obj.alive = False
    return 0


def _b_memcpy(m, dst, src, n):
    if n <= 0:
        return dst
    dobj = m.check(dst, n, True)
    sobj = m.check(src, n, False)
    moved = {k - src.off + dst.off: v for k, v in sobj.cells.items()
             if src.off <= k < src.off + n}
    for k in [k for k in dobj.cells if dst.off <= k < dst.off + n]:
        del dobj.cells[k]
    dobj.cells.update(moved)
    return dst


def _b_strlen(m, s):
    return len(m.c_string(s))


def _b_strcpy(m, dst, src):
    data = m.c_string(src)
    obj = m.check(dst, len(data) + 1, True)
    for i, b in enumerate(data):
        obj.cells[dst.off + i] = wrap8(b)
    obj.cells[dst.off + len(data)] = 0
    return dst


def _b_print_int(m, v):
    m.output.append(str(v))
    return 0


def _b_print_str(m, s):
    m.output.append(m.c_string(s).decode("utf-8", "replace"))
    return 0


def _b_argc(m):
    return len(m.args)


def _b_arg_int(m, i):
    if not 0 <= i < len(m.args):
        return 0
    try:
        return wrap64(int(m.args[i], 0))
    except ValueError:
        return 0


def _b_arg_str(m, i):
    if not 0 <= i < len(m.args):
        return NULL
    return m.arg_string(i)


BUILTIN_IMPLS = {
    "malloc": _b_malloc, "free": _b_free, "memcpy": _b_memcpy,
    "strlen": _b_strlen, "strcpy": _b_strcpy, "print_int": _b_print_int,
    "print_str": _b_print_str, "argc": _b_argc, "arg_int": _b_arg_int,
    "arg_str": _b_arg_str,
}


def _arith(op, a, b):
    if op == "+":
        return wrap64(a + b)
    if op == "-":
        return wrap64(a - b)
    if op == "*":
        return wrap64(a * b)
    if b == 0:
        raise Fault("div-zero")
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    if op == "/":
        return wrap64(q)
    return wrap64(a - b * q)


def _compare(op, a, b):
    if type(a) is Ptr or type(b) is Ptr:
        a = a if type(a) is Ptr else Ptr(0, a)
        b = b if type(b) is Ptr else Ptr(0, b)
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    return int(a >= b)


class CompiledProgram:
    def __init__(self, prog, main, globals_init, stmt_count):
        self.prog = prog
        self.main = main
        self.globals_init = globals_init
        self.stmt_count = stmt_count


class _Compiler:
    def __init__(self, prog, probes=None):
        self.prog = prog
        self.probes = probes or {}
        self.funcs = {}
        self.hooked = 0

    def spec(self, sid):
        return tuple((v.name, v.typestr, v.const, v.type.is_pointer, v.scope == "global", v.decl_id)
                     for v in self.prog.scopes[sid] if v.type.is_scalar)

    def type(self, e):
        return self.prog.types[e.id]

    def vtype(self, e):
        return self.prog.types[e.id].decay()

    def coerced(self, e, ty):
        fn = self.expr(e)
        if not _needs_coerce(self.vtype(e), ty):
            return fn
        return lambda m, fr: _coerce(fn(m, fr), ty)

    # expressions

    def expr(self, e):
        if isinstance(e, ast.IntLit):
            v = e.value
            return lambda m, fr: v
        if isinstance(e, ast.NullLit):
            return lambda m, fr: NULL
        if isinstance(e, ast.StrLit):
            nid, data = e.id, e.value

            def strlit(m, fr):
                obj = m.strings.get(nid)
                if obj is None:
                    obj = m.new_obj(len(data) + 1, "string", readonly=True)
                    m.put_bytes(obj, data)
                    m.strings[nid] = obj
                return Ptr(obj.id, 0)
            return strlit
        if isinstance(e, ast.Ident):
            info = self.prog.refs[e.id]
            decl, ty = info.decl_id, info.type
            is_global = info.scope == "global"
            if ty.is_array:
                if is_global:
                    return lambda m, fr: Ptr(m.globals[decl].id, 0)
                return lambda m, fr: Ptr(fr[decl].id, 0)
            load = self.load_fn(ty)
            if is_global:
                return lambda m, fr: load(m, Ptr(m.globals[decl].id, 0))
            return lambda m, fr: load(m, Ptr(fr[decl].id, 0))
        if isinstance(e, ast.Unary):
            if e.op == "&":
                return self.addr(e.operand)
            inner = self.expr(e.operand)
            if e.op == "-":
                return lambda m, fr: wrap64(-inner(m, fr))
            if e.op == "!":
                return lambda m, fr: int(not _truthy(inner(m, fr)))
            ty = self.type(e)
            if ty.is_array:
                return inner
            load = self.load_fn(ty)
            return lambda m, fr: load(m, inner(m, fr))
        if isinstance(e, ast.Index):
            addr = self.addr(e)
            ty = self.type(e)
            if ty.is_array:
                return addr
            load = self.load_fn(ty)
            return lambda m, fr: load(m, addr(m, fr))
        if isinstance(e, ast.Binary):
            return self.binary(e)
        if isinstance(e, ast.Assign):
            return self.assign(e)
        if isinstance(e, ast.IncDec):
            return self.incdec(e)
        if isinstance(e, ast.Call):
            return self.call(e)
        if isinstance(e, ast.Cast):
            if e.type.is_void:
                inner = self.expr(e.expr)

                def to_void(m, fr):
                    inner(m, fr)
                    return 0
                return to_void
            return self.coerced(e.expr, e.type)
        if isinstance(e, ast.SizeOf):
            size = (e.type if e.type is not None else self.type(e.expr)).sizeof()
            return lambda m, fr: size
        raise TypeError(type(e).__name__)

    def load_fn(self, ty):
        return lambda m, p: m.load(p, ty)

    def addr(self, e):
        """Compile an lvalue to a function returning its address."""
        if isinstance(e, ast.Ident):
            info = self.prog.refs[e.id]
            decl = info.decl_id
            if info.scope == "global":
                return lambda m, fr: Ptr(m.globals[decl].id, 0)
            return lambda m, fr: Ptr(fr[decl].id, 0)
        if isinstance(e, ast.Unary) and e.op == "*":
            return self.expr(e.operand)
        if isinstance(e, ast.Index):
            base = self.expr(e.base)
            index = self.expr(e.index)
            size = self.vtype(e.base).pointee().sizeof()
            return lambda m, fr: _offset(base(m, fr), index(m, fr) * size)
        raise TypeError(f"not an lvalue: {type(e).__name__}")

    def binary(self, e):
        op = e.op
        left, right = self.expr(e.left), self.expr(e.right)
        lt, rt = self.vtype(e.left), self.vtype(e.right)
        if op == "&&":
            return lambda m, fr: int(_truthy(left(m, fr)) and _truthy(right(m, fr)))
        if op == "||":
            return lambda m, fr: int(_truthy(left(m, fr)) or _truthy(right(m, fr)))
        if op in ("+", "-") and (lt.is_pointer or rt.is_pointer):
            if lt.is_pointer and rt.is_pointer:
                size = lt.pointee().sizeof()

                def ptrdiff(m, fr):
                    a, b = left(m, fr), right(m, fr)
                    return wrap64(int((a.off - b.off) / size))
                return ptrdiff
            if lt.is_pointer:
                size = lt.pointee().sizeof() * (1 if op == "+" else -1)
                return lambda m, fr: _offset(left(m, fr), right(m, fr) * size)
            size = rt.pointee().sizeof()
            return lambda m, fr: _offset(right(m, fr), left(m, fr) * size)
        if op in ("+", "-", "*", "/", "%"):
            return lambda m, fr: _arith(op, left(m, fr), right(m, fr))
        return lambda m, fr: _compare(op, left(m, fr), right(m, fr))

    def assign(self, e):
        ty = self.type(e.target)
        addr = self.addr(e.target)
        if e.op == "=":
            value = self.coerced(e.value, ty)

            def assign(m, fr):
                v = value(m, fr)
                m.store(addr(m, fr), ty, v)
                return v
            return assign
        value = self.expr(e.value)
        sign = 1 if e.op == "+=" else -1
        if ty.is_pointer:
            size = ty.pointee().sizeof() * sign

            def ptr_update(m, fr):
                p = addr(m, fr)
                v = _offset(m.load(p, ty), value(m, fr) * size)
                m.store(p, ty, v)
                return v
            return ptr_update

        def update(m, fr):
            p = addr(m, fr)
            v = _coerce(m.load(p, ty) + sign * value(m, fr), ty)
            m.store(p, ty, v)
            return v
        return update

    def incdec(self, e):
        ty = self.type(e.target)
        addr = self.addr(e.target)
        delta = 1 if e.op == "++" else -1
        prefix = e.prefix

        def incdec(m, fr):
            p = addr(m, fr)
            old = m.load(p, ty)
            if ty.is_pointer:
                new = _offset(old, delta * ty.pointee().sizeof())
            else:
                new = _coerce(old + delta, ty)
            m.store(p, ty, new)
            return new if prefix else old
        return incdec

    def call(self, e):
        prog = self.prog
        if e.name in prog.functions:
            f = prog.functions[e.name]
            args = [self.coerced(a, p.type) for a, p in zip(e.args, f.params)]
            funcs = self.funcs
            name = e.name
            return lambda m, fr: funcs[name](m, [a(m, fr) for a in args])
        from .minic.analyzer import BUILTINS
        f = BUILTINS[e.name]
        impl = BUILTIN_IMPLS[e.name]
        args = [self.coerced(a, p.type) for a, p in zip(e.args, f.params)]
        if len(args) == 0:
            return lambda m, fr: impl(m)
        if len(args) == 1:
            a0 = args[0]
            return lambda m, fr: impl(m, a0(m, fr))
        return lambda m, fr: impl(m, *[a(m, fr) for a in args])

    # statements

    def block(self, stmts):
        fns = [self.stmt(s) for s in stmts if not isinstance(s, (ast.Comment, ast.Probe))]
        if len(fns) == 1:
            return fns[0]

        def run_block(m, fr):
            for fn in fns:
                r = fn(m, fr)
                if r is not None:
                    return r
            return None
        return run_block

    def stmt(self, s):
        inner = self._stmt(s)
        sid = s.id
        spec = self.spec(sid)
        self.hooked += 1
        if sid in self.probes:
            key = self.probes[sid]

            def probed(m, fr):
                m.probe(key, spec, fr)
                m.enter(sid, spec, fr)
                return inner(m, fr)
            return probed

        def hooked(m, fr):
            m.enter(sid, spec, fr)
            return inner(m, fr)
        return hooked

    def _stmt(self, s):
        if isinstance(s, ast.Decl):
            return self.decl(s)
        if isinstance(s, ast.ExprStmt):
            fn = self.expr(s.expr)

            def expr_stmt(m, fr):
                fn(m, fr)
            return expr_stmt
        if isinstance(s, ast.Block):
            return self.block(s.stmts)
        if isinstance(s, ast.If):
            cond = self.expr(s.cond)
            then = self.block(s.then.stmts)
            orelse = self.block(s.orelse.stmts) if s.orelse is not None else None

            def if_stmt(m, fr):
                if _truthy(cond(m, fr)):
                    return then(m, fr)
                if orelse is not None:
                    return orelse(m, fr)
                return None
            return if_stmt
        if isinstance(s, ast.While):
            cond = self.expr(s.cond)
            body = self.block(s.body.stmts)

            def while_stmt(m, fr):
                while True:
                    m.tick()
                    if not _truthy(cond(m, fr)):
                        return None
                    r = body(m, fr)
                    if r is not None:
                        if r is _BREAK:
                            return None
                        if r is not _CONTINUE:
                            return r
            return while_stmt
        if isinstance(s, ast.For):
            init = self.expr(s.init) if s.init is not None else None
            cond = self.expr(s.cond) if s.cond is not None else None
            step = self.expr(s.step) if s.step is not None else None
            body = self.block(s.body.stmts)

            def for_stmt(m, fr):
                if init is not None:
                    init(m, fr)
                while True:
                    m.tick()
                    if cond is not None and not _truthy(cond(m, fr)):
                        return None
                    r = body(m, fr)
                    if r is not None:
                        if r is _BREAK:
                            return None
                        if r is not _CONTINUE:
                            return r
                    if step is not None:
                        step(m, fr)
            return for_stmt
        if isinstance(s, ast.Return):
            if s.value is None:
                return lambda m, fr: _Ret(0)
            fn = self.coerced(s.value, self.current_ret)
            return lambda m, fr: _Ret(fn(m, fr))
        if isinstance(s, ast.Break):
            return lambda m, fr: _BREAK
        if isinstance(s, ast.Continue):
            return lambda m, fr: _CONTINUE
        raise TypeError(type(s).__name__)

    def decl(self, s):
        ty = s.type
        size = ty.sizeof()
        decl = s.id
        if s.init is None:
            init = None
        elif ty.is_array:
            data = s.init.value
            init = None

            def init_array(m, obj):
                m.put_bytes(obj, data)
        else:
            init = self.coerced(s.init, ty)

        def decl_stmt(m, fr):
            v = init(m, fr) if init is not None else None
            obj = fr.get(decl)
            if obj is None:
                obj = fr[decl] = m.new_obj(size, "local")
            else:
                obj.cells.clear()
            if v is not None:
                obj.cells[0] = v
            elif s.init is not None:
                init_array(m, obj)
        return decl_stmt

    def function(self, f):
        info = self.prog.functions[f.name]
        self.current_ret = info.ret
        body = self.block(f.body.stmts)
        params = [(p.decl_id, p.type.sizeof()) for p in info.params]
        ret = info.ret
        is_void = ret.is_void

        def invoke(m, args):
            if len(m.stack) >= MAX_CALL_DEPTH:
                raise BudgetExhausted()
            fr = {}
            for (decl, size), a in zip(params, args):
                obj = m.new_obj(size, "local")
                obj.cells[0] = a
                fr[decl] = obj
            m.stack.append(None)
            r = body(m, fr)
            m.stack.pop()
            for obj in fr.values():
                obj.alive = False
            if is_void or not isinstance(r, _Ret):
                return NULL if ret.is_pointer else 0
            return r.value
        return invoke

    def program(self):
        for name, f in self.prog.func_nodes.items():
            self.funcs[name] = self.function(f)
        inits = []
        for g in self.prog.globals:
            node = self.prog.nodes[g.decl_id]
            if node.init is None:
                fn = None
            elif g.type.is_array:
                data = node.init.value
                fn = ("bytes", data)
            else:
                fn = self.coerced(node.init, g.type)
            inits.append((g, fn))
        return CompiledProgram(self.prog, self.funcs.get("main"), inits, self.hooked)


def _offset(p, delta):
    if type(p) is not Ptr:
        p = NULL if p == 0 else Ptr(0, p)
    return Ptr(p.obj, p.off + delta)


def compile_program(prog, probes=None):
    return _Compiler(prog, probes).program()


def _execute(compiled, m):
    if compiled.main is None:
        raise ValueError("program has no main function")
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 60000))
    try:
        for g, init in compiled.globals_init:
            obj = m.new_obj(g.type.sizeof(), "global")
            m.globals[g.decl_id] = obj
            if init is None:
                continue
            if isinstance(init, tuple):
                m.put_bytes(obj, init[1])
            else:
                obj.cells[0] = init(m, {})
        result = compiled.main(m, [])
        exit_code = result if type(result) is int else 0
        return RunOutcome(exit_code, None, m.steps, m.output)
    except Fault as f:
        stack = tuple(s for s in m.stack if s is not None)
        stmt = stack[-1] if stack else -1
        return RunOutcome(FAULT_EXIT[f.kind], FaultInfo(f.kind, stmt, stack), m.steps, m.output)
    except BudgetExhausted:
        return RunOutcome(BUDGET_EXIT, None, m.steps, m.output)
    finally:
        sys.setrecursionlimit(old_limit)


@dataclass
class InstrumentedProgram:
    prog: object
    hooks: frozenset
    compiled: CompiledProgram = field(repr=False, default=None)


def instrument(prog):
    """Attach a trace hook to every full statement."""
    compiled = compile_program(prog)
    return InstrumentedProgram(prog, frozenset(prog.stmt_ids), compiled)


def _compiled(prog):
    cached = getattr(prog, "_compiled", None)
    if cached is None:
        cached = compile_program(prog)
        prog._compiled = cached
    return cached


def run_plain(prog, input, budget=DEFAULT_BUDGET):
    return _execute(_compiled(prog), Machine(input.args, budget))


def run_traced(inst, input, max_trace, budget=DEFAULT_BUDGET):
    """Run with tracing; returns (outcome, trace points)."""
    if max_trace < 0:
        raise ValueError("max_trace must be non-negative")
    m = TracingMachine(input.args, input.id, max_trace, budget)
    outcome = _execute(inst.compiled, m)
    return outcome, m.trace


def run_probed(prog, input, probes, on_probe, budget=DEFAULT_BUDGET):
    """Run a validation build: before each statement id in ``probes`` the
    callback receives (key, snapshot of in-scope variables)."""
    compiled = compile_program(prog, probes)
    m = ProbingMachine(input.args, on_probe, budget)
    try:
        return _execute_probed(compiled, m)
    except _StopRun:
        return RunOutcome(0, None, m.steps, m.output)


def _execute_probed(compiled, m):
    try:
        return _execute(compiled, m)
    except _StopRun:
        raise


def parse_suite(text):
    """One input per line, shell-style tokens; the 1-based line number is
    the witness id. Blank lines are skipped but still counted."""
    inputs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        inputs.append(ProgramInput(lineno, tuple(shlex.split(line))))
    return inputs
