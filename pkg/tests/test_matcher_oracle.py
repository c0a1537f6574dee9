"""match_template against an exhaustive enumerator.

The oracle walks every witness, every tuple of trace points (one per
dynamic patch, steps non-decreasing), every per-point binding and
evaluates each whole precondition, with no pruning or caching.
"""

import itertools
import random

import pytest

from buginject import pipeline
from buginject.minic import TOP, load
from buginject.runtime import ProgramInput
from buginject.templates import Binding, enumerate_bindings, eval_pred, parse_templates
from progs import random_program, random_template

TRIPLES = 40


def random_suite(seed):
    r = random.Random(seed)
    return [ProgramInput(i + 1, tuple(str(r.randint(-2, 6)) for _ in range(r.randint(0, 3))))
            for i in range(r.randint(1, 3))]


def brute_force(db, prog, template):
    for p in template.static_patches:
        if not eval_pred(p.precondition, None, Binding(), (prog, TOP)):
            return set()
    dyns = template.dynamic_patches
    if not dyns:
        return set()
    by_witness = {}
    for pt in db.points:
        by_witness.setdefault(pt.witness, []).append(pt)
    found = set()
    for witness, pts in by_witness.items():
        for combo in itertools.product(pts, repeat=len(dyns)):
            if any(a.step > b.step for a, b in zip(combo, combo[1:])):
                continue
            per_patch = []
            for patch, pt in zip(dyns, combo):
                per_patch.append([b for b in enumerate_bindings(patch.free_vars, pt)
                                  if eval_pred(patch.precondition, pt, b, (prog, pt.stmt))])
            for bs in itertools.product(*per_patch):
                merged = {}
                ok = True
                for b in bs:
                    for k, v in b.pairs:
                        if merged.setdefault(k, v) != v:
                            ok = False
                if not ok or len(set(merged.values())) != len(merged):
                    continue
                where = {p.name: (pt.stmt, pt.witness, pt.step) for p, pt in zip(dyns, combo)}
                points = tuple(where.get(p.name, (TOP, None, None)) for p in template.patches)
                found.add((witness, points, tuple(sorted(merged.items()))))
    return found


def as_set(cands):
    return {(c.witness, tuple((p.stmt, p.witness, p.step) for p in c.points), c.binding.pairs)
            for c in cands}


@pytest.mark.parametrize("seed", range(TRIPLES))
def test_matcher_equals_brute_force(seed):
    prog = load(random_program(seed))
    db, _, _ = pipeline.collect_traces(prog, random_suite(seed), 10_000)
    assert len(db.points) <= 10_000
    template, = parse_templates(random_template(seed))
    got = pipeline.match_template(db, prog, template)
    assert len(got) == len(as_set(got)), "duplicate candidates"
    assert as_set(got) == brute_force(db, prog, template)
    assert [c.key for c in got] == sorted(c.key for c in got)


def test_oracle_is_not_vacuous():
    # enough of the random triples must produce candidates for the
    # comparison to mean something
    nonempty = 0
    for seed in range(TRIPLES):
        prog = load(random_program(seed))
        db, _, _ = pipeline.collect_traces(prog, random_suite(seed), 10_000)
        template, = parse_templates(random_template(seed))
        nonempty += bool(brute_force(db, prog, template))
    assert nonempty >= TRIPLES // 4


def test_memcpy_on_host_equals_brute_force(host, host_db, catalog):
    db = host_db[0]
    small = type(db)(db.digest, db.max_trace, db.witnesses,
                     [p for p in db.points if p.witness in (1, 2)])
    t = catalog["clang-regression-test-memcpy"]
    assert as_set(pipeline.match_template(small, host, t)) == brute_force(small, host, t)
