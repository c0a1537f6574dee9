import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from buginject import runtime
from buginject.minic import ast, in_scope_vars, load
from buginject.runtime import ProgramInput
from progs import random_program

NO_ARGS = ProgramInput(1, ())


def run(src, args=(), budget=runtime.DEFAULT_BUDGET):
    return runtime.run_plain(load(src), ProgramInput(1, tuple(args)), budget)


def traced(src, args=(), max_trace=10**6):
    prog = load(src)
    return runtime.run_traced(runtime.instrument(prog), ProgramInput(1, tuple(args)), max_trace)


def test_exit_code():
    out = run("int main(){return 7;}")
    assert out.exit == 7 and out.fault is None


FAULTS = [
    ("null-deref", 64, 1, "int main(){int *p=0; *p=1; return 0;}"),
    ("oob-read", 65, 1, 'int main(){char *s=""; char c=s[1]; return 0;}'),
    ("oob-write", 66, 1, 'int main(){char *s="ab"; s[0]=1; return 0;}'),
    ("oob-write", 66, 1, "int main(){int a[2]; a[2]=1; return 0;}"),
    ("use-after-free", 67, 2, "int main(){int *p=(int *)malloc(8); free(p); return *p;}"),
    ("double-free", 68, 2, "int main(){int *p=(int *)malloc(8); free(p); free(p); return 0;}"),
    ("div-zero", 69, 1, "int main(){int z=0; return 4 / z;}"),
    ("div-zero", 69, 1, "int main(){int z=0; return 4 % z;}"),
]


@pytest.mark.parametrize("kind,code,at,src", FAULTS)
def test_fault_kinds(kind, code, at, src):
    prog = load(src)
    out = runtime.run_plain(prog, NO_ARGS)
    assert out.fault is not None
    assert (out.fault.kind, out.exit) == (kind, code)
    assert runtime.FAULT_EXIT[kind] == code
    assert out.fault.stmt == prog.stmt_ids[at]


def test_fault_stack_records_callers():
    prog = load("void f(int *p) { *p = 1; }\nint main() { f(NULL); return 0; }\n")
    out = runtime.run_plain(prog, NO_ARGS)
    inner, call, _ = prog.stmt_ids
    assert out.fault.stmt == inner
    assert set(out.fault.stack) == {inner, call}


def test_budget_exhausted():
    out = run("int main(){ while (1) { } return 0; }", budget=5000)
    assert out.exit == runtime.BUDGET_EXIT == 70
    assert out.fault is None and out.budget_exhausted


def test_runaway_recursion_is_budget_exit():
    out = run("int f(int n) { return f(n + 1); }\nint main() { return f(0); }\n")
    assert out.exit == 70 and out.fault is None


def test_pre_statement_snapshot():
    out, trace = traced("void main() { int x = 1; x = 2; }")
    assert out.exit == 0
    assert len(trace) == 2
    assert trace[1].var("x").value == 1
    assert [p.step for p in trace] == [0, 1]


def test_max_trace_zero():
    out, trace = traced("int main(){ int a = 1; return a; }", max_trace=0)
    assert trace == [] and out.exit == 1


def test_trace_cap_keeps_executing():
    out, trace = traced("int main(){ int i; for (i = 0; i < 50; i++) { print_int(i); } return 3; }",
                        max_trace=10)
    assert len(trace) == 10
    assert out.exit == 3 and out.steps > 10


def test_sizes():
    _, trace = traced('int main() { char *s = "abc"; int *m = (int *)malloc(16); int a[3]; '
                      'int *q = a; char *z = NULL; m = m + 1; return 0; }')
    last = trace[-1]
    assert last.var("s").size == 4
    assert last.var("m").size == 8
    assert last.var("q").size == 24
    z = last.var("z")
    assert z.null and z.size is None and z.value == 0


def test_freed_pointer_has_no_size():
    _, trace = traced("int main() { int *p = (int *)malloc(8); free(p); return 0; }")
    p = trace[-1].var("p")
    assert not p.null and p.size is None


def test_grep_leaves_lastout_null(host, suite):
    _, trace = runtime.run_traced(runtime.instrument(host), suite[0], 10**6)
    assert any(p.var("lastout") is not None and p.var("lastout").null for p in trace)


def test_hooks_cover_statements(host):
    count = 0
    for top in host.unit.toplevels:
        for n in ast.walk(top):
            if isinstance(n, ast.Block):
                count += sum(1 for s in n.stmts if not isinstance(s, ast.Comment))
    inst = runtime.instrument(host)
    assert len(inst.hooks) == count == len(host.stmt_ids)


def test_three_statement_program():
    assert len(runtime.instrument(load("void f() { }\nint main() { int a = 1; a = 2; return a; }")).hooks) == 3


def test_output_and_args():
    out = run("int main() { print_int(arg_int(0) + 1); print_str(arg_str(1)); return argc(); }",
              ["41", "hi"])
    assert out.output == ["42", "hi"]
    assert out.exit == 2


def test_parse_suite():
    inputs = runtime.parse_suite('a "b c"\n\n3 x\n')
    assert [(i.id, i.args) for i in inputs] == [(1, ("a", "b c")), (3, ("3", "x"))]


args_st = st.lists(st.sampled_from(["0", "1", "2", "5", "-1", "x"]), max_size=3)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), args_st)
def test_trace_plain_equivalence(seed, args):
    prog = load(random_program(seed))
    inp = ProgramInput(1, tuple(args))
    plain = runtime.run_plain(prog, inp)
    out, trace = runtime.run_traced(runtime.instrument(prog), inp, 10**6)
    assert (plain.exit, plain.fault, plain.steps, plain.output) == \
        (out.exit, out.fault, out.steps, out.output)
    steps = [p.step for p in trace]
    assert steps == sorted(set(steps))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.integers(0, 40))
def test_trace_cap_property(seed, cap):
    prog = load(random_program(seed))
    _, trace = runtime.run_traced(runtime.instrument(prog), NO_ARGS, cap)
    assert len(trace) <= cap


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_snapshot_completeness(seed):
    prog = load(random_program(seed))
    _, trace = runtime.run_traced(runtime.instrument(prog), NO_ARGS, 10**6)
    for p in trace:
        expected = {(v.name, v.typestr, v.const) for v in in_scope_vars(prog, p.stmt) if v.traceable}
        assert {(v.name, v.type, v.const) for v in p.vars} == expected
        for v in p.vars:
            assert not (v.null and v.size is not None)
