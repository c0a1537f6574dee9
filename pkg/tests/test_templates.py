import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from buginject import templates
from buginject.minic import TOP, load
from buginject.runtime import TracePoint, VarSnapshot
from buginject.templates import (
    Binding, CweLineOutOfRange, FreeVar, StaticFacts, TemplateSyntaxError, UnboundFreeVar,
    UnknownPredicate, UnresolvedDependency, enumerate_bindings, eval_pred, format_templates,
    parse_templates,
)


def snap(name, type="int", value=0, null=False, size=None, const=False):
    return VarSnapshot(name, type, const, type.startswith("*"), null, value, size)


def point(*vars, stmt=1):
    return TracePoint(1, 0, stmt, tuple(vars))


def one_patch(fields, name="t"):
    return f"(template {name} (patch {name}-p {fields}))"


def pred(text, fvs="(x int) (y int) (p *char) (arr *int)"):
    t, = parse_templates(one_patch(f'(kind dynamic) (free-vars {fvs}) (precondition {text}) (code "print_int(0);")'))
    return t.patches[0].precondition


def test_memcpy_template(catalog):
    t = catalog["clang-regression-test-memcpy"]
    assert len(t.patches) == 1
    p = t.patches[0]
    assert p.kind == "dynamic" and p.cwe == 476 and p.cwe_line == 2
    assert [(fv.name, fv.type) for fv in p.free_vars] == [("dst", "*char"), ("src", "*char"), ("num", "int")]
    assert p.precondition == pred("(and (= (value dst) 0) (> (value num) 1))",
                                  "(dst *char) (src *char) (num int)")
    assert str(p.precondition) == "(and (= (value dst) 0) (> (value num) 1))"


def test_clang_buffer5_dependency(catalog):
    t = catalog["clang-buffer5"]
    p1, p2 = t.patches
    assert p1.is_static and p1.top_level and p1.code == "static int A[10];"
    assert not p2.is_static and p2.requires == (p1.name,)


def test_catalog_size(catalog):
    assert len(catalog) >= 10
    for name in ["clang-buffer1", "clang-buffer5", "clang-pd1", "infer-buffer4",
                 "clang-regression-test-memcpy"]:
        assert name in catalog


def test_cwe_line_out_of_range():
    with pytest.raises(CweLineOutOfRange):
        parse_templates(one_patch('(kind dynamic) (cwe 476) (cwe-line 9) (code "print_int(1);\nprint_int(2);\nprint_int(3);")'))


def test_unknown_predicate():
    with pytest.raises(UnknownPredicate):
        parse_templates(one_patch('(kind dynamic) (precondition (frob)) (code "print_int(1);")'))


def test_unresolved_dependency():
    with pytest.raises(UnresolvedDependency):
        parse_templates(one_patch('(kind dynamic) (requires nope) (code "print_int(1);")'))


def test_syntax_error_reports_line():
    with pytest.raises(TemplateSyntaxError) as e:
        parse_templates("(template t\n  (patch p (kind dynamic)\n")
    assert e.value.line == 2


@pytest.mark.parametrize("fields", [
    '(kind static) (code "static int A;")',                               # static without top-level
    '(kind static) (top-level) (free-vars (x int)) (code "static int A;")',
    '(kind dynamic) (top-level) (code "print_int(1);")',
    '(kind dynamic) (code "print_int(q);")',                              # q undeclared
    '(kind dynamic) (free-vars (x int)) (precondition (= (value y) 1)) (code "x;")',
    '(kind static) (top-level) (precondition (has-size x)) (code "static int A;")',
    '(kind dynamic) (code "frobnicate(1);")',
    '(kind dynamic) (free-vars (x int) (x int)) (code "x;")',
    '(kind dynamic) (free-vars (x void)) (code "x;")',
])
def test_structural_errors(fields):
    with pytest.raises(templates.TemplateError):
        parse_templates(one_patch(fields))


def test_snippet_may_use_static_patch_names(catalog):
    assert "A" in catalog["clang-buffer5"].patches[1].code


def test_round_trip(catalog):
    text = format_templates(list(catalog.values()))
    assert {t.name: t for t in parse_templates(text)} == catalog


def test_meta_is_carried():
    src = one_patch('(kind dynamic) (code "print_int(1);") (meta (macros "#define X 1") (includes "stdio.h"))')
    t, = parse_templates(src)
    again, = parse_templates(format_templates([t]))
    assert again == t and again.patches[0].meta


def test_code_escapes_and_newlines():
    t, = parse_templates(one_patch('(kind dynamic) (code "print_str(\\"a\\\\n\\");\nprint_int(1);")'))
    assert t.patches[0].code == 'print_str("a\\n");\nprint_int(1);'


# evaluation

def test_memcpy_precondition_holds(catalog):
    p = catalog["clang-regression-test-memcpy"].patches[0]
    pt = point(snap("lastout", "*char", 0, null=True), snap("prog", "*char", 5 << 32, size=4),
               snap("out_byte", value=12))
    b = Binding.of({"dst": "lastout", "src": "prog", "num": "out_byte"})
    assert eval_pred(p.precondition, pt, b, StaticFacts({}))


def test_size_predicate():
    pr = pred("(and (has-size arr) (<= (size arr) 4))")
    b = Binding.of({"arr": "a"})
    assert eval_pred(pr, point(snap("a", "*int", 1 << 32, size=4)), b, StaticFacts({}))
    assert not eval_pred(pr, point(snap("a", "*int", 0, null=True)), b, StaticFacts({}))


def test_size_of_null_makes_comparisons_false():
    b = Binding.of({"arr": "a"})
    null = point(snap("a", "*int", 0, null=True))
    assert not eval_pred(pred("(<= (size arr) 4)"), null, b, StaticFacts({}))
    assert not eval_pred(pred("(> (size arr) 4)"), null, b, StaticFacts({}))
    assert eval_pred(pred("(not (<= (size arr) 4))"), null, b, StaticFacts({}))


def test_true_with_empty_binding():
    assert eval_pred(pred("true"), point(), Binding(), StaticFacts({}))
    assert eval_pred(pred("(true)"), point(), Binding(), StaticFacts({}))
    assert eval_pred(None, None, Binding(), StaticFacts({}))


def test_arithmetic():
    b = Binding.of({"x": "a", "y": "b"})
    pt = point(snap("a", value=3), snap("b", value=4))
    assert eval_pred(pred("(= (+ (value x) (* 2 (value y))) 11)"), pt, b, StaticFacts({}))
    assert eval_pred(pred("(= (- (value y) (value x)) 1)"), pt, b, StaticFacts({}))


def test_unbound_free_var():
    with pytest.raises(UnboundFreeVar):
        eval_pred(pred("(= (value x) 0)"), point(snap("a")), Binding(), StaticFacts({}))


def test_static_predicates_against_program():
    prog = load("static int g;\nvoid f(int a) { a = 1; }\nint *h() { int k = 0; return NULL; }\n")
    in_f, in_h, _ = prog.stmt_ids
    ctx = lambda at: (prog, at)
    assert eval_pred(pred("(ret-void)"), None, Binding(), ctx(in_f))
    assert not eval_pred(pred("(ret-void)"), None, Binding(), ctx(in_h))
    assert eval_pred(pred('(ret-type "*int")'), None, Binding(), ctx(in_h))
    assert not eval_pred(pred('(ret-type "int")'), None, Binding(), ctx(in_h))
    assert eval_pred(pred("(top-level)"), None, Binding(), ctx(TOP))
    assert not eval_pred(pred("(top-level)"), None, Binding(), ctx(in_f))
    assert not eval_pred(pred('(declarable "g")'), None, Binding(), ctx(in_f))
    assert not eval_pred(pred('(declarable "k")'), None, Binding(), ctx(in_h))
    assert eval_pred(pred('(declarable "k")'), None, Binding(), ctx(in_f))
    assert eval_pred(pred('(declarable "zz" "yy")'), None, Binding(), ctx(TOP))


def test_static_facts_freeze(host):
    pr = pred('(and (declarable "A") (ret-type "*int") (not (ret-void)))')
    for s in host.stmt_ids:
        live = eval_pred(pr, None, Binding(), (host, s))
        assert eval_pred(pr, None, Binding(), StaticFacts.at(pr, host, s)) == live


# bindings

MEMCPY_FVS = [FreeVar("dst", "*char", True), FreeVar("src", "*char", True), FreeVar("num", "int")]


def test_memcpy_binding_from_grep_globals():
    pt = point(snap("lastout", "*char"), snap("prog", "*char"), snap("out_byte"))
    got = [b.as_dict() for b in enumerate_bindings(MEMCPY_FVS, pt)]
    assert {"dst": "lastout", "src": "prog", "num": "out_byte"} in got
    assert len(got) == 2


def test_zero_free_vars():
    assert enumerate_bindings([], point(snap("a"))) == [Binding()]


def test_two_pointer_permutations():
    fvs = [FreeVar("dst", "*char"), FreeVar("src", "*char")]
    got = [str(b) for b in enumerate_bindings(fvs, point(snap("a", "*char"), snap("b", "*char")))]
    assert got == ["dst=a,src=b", "dst=b,src=a"]


def test_not_const_excludes_const_hosts():
    fvs = [FreeVar("p", "*char", not_const=True)]
    pt = point(snap("a", "*char", const=True), snap("b", "*char"))
    assert [str(b) for b in enumerate_bindings(fvs, pt)] == ["p=b"]


def test_exact_type_match():
    fvs = [FreeVar("p", "*char")]
    assert enumerate_bindings(fvs, point(snap("a", "*int"), snap("c", "char"))) == []


TYPES = ["int", "char", "*char", "*int"]
fv_st = st.lists(st.tuples(st.sampled_from(TYPES), st.booleans()), max_size=3)
host_st = st.lists(st.tuples(st.sampled_from(TYPES), st.booleans()), max_size=5)


@settings(max_examples=200, deadline=None)
@given(fv_st, host_st)
def test_bindings_match_permutation_oracle(fv_specs, host_specs):
    fvs = [FreeVar(f"f{i}", t, nc) for i, (t, nc) in enumerate(fv_specs)]
    hosts = [snap(f"h{i}", t, const=c) for i, (t, c) in enumerate(host_specs)]
    expected = []
    for combo in itertools.permutations(hosts, len(fvs)):
        if all(h.type == fv.type and not (fv.not_const and h.const) for fv, h in zip(fvs, combo)):
            expected.append(tuple((fv.name, h.name) for fv, h in zip(fvs, combo)))
    got = enumerate_bindings(fvs, point(*hosts))
    assert [b.pairs for b in got] == sorted(expected)
    for b in got:
        for fv in fvs:
            h = next(v for v in hosts if v.name == b.get(fv.name))
            assert h.type == fv.type and not (fv.not_const and h.const)
