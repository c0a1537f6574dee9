"""Trace, match, sample, inject, validate, package.

The stages are usable on their own; ``generate`` chains them for one
host program, one input suite and a list of templates.
"""

import copy
import logging
import os
import shlex
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from . import runtime, tracestore
from .manifest import GroundTruthRecord, format_manifest
from .minic import TOP, MiniCError, analyze, ast, load, parse, render
from .minic.parser import parse_statements, parse_toplevels
from .minic.snippets import declared_names, rename_free
from .runtime import BUDGET_EXIT, DEFAULT_BUDGET, ProgramInput, TracePoint
from .sampling import selection_order
from .templates import (
    DYNAMIC_OPS, Binding, StaticFacts, compatible, eval_pred, pred_free_vars, pred_ops,
)

log = logging.getLogger(__name__)

# interpreter fault classes that confirm a bug of each detectable CWE
EXPECTED_FAULTS = {
    476: {"null-deref"},
    121: {"oob-read", "oob-write"},
    122: {"oob-read", "oob-write"},
    124: {"oob-write"},
    126: {"oob-read"},
    127: {"oob-read"},
}


class PipelineError(Exception):
    pass


class RebindCollision(PipelineError):
    pass


class ReanalyzeFailure(PipelineError):
    pass


class WitnessRunFailure(PipelineError):
    pass


@dataclass(frozen=True)
class PatchPoint:
    patch: str
    stmt: object            # statement id, or TOP for static patches
    witness: Optional[int] = None
    step: Optional[int] = None


@dataclass(frozen=True)
class Candidate:
    template: str
    points: tuple
    binding: Binding
    witness: int

    @property
    def key(self):
        steps = tuple(p.step for p in self.points if p.stmt != TOP)
        return (self.witness, steps[:1], self.binding.pairs, steps[1:])


# matching

def _conjuncts(pred):
    if pred is None:
        return []
    if pred.op == "and":
        out = []
        for a in pred.args:
            out.extend(_conjuncts(a) if hasattr(a, "op") else [a])
        return out
    return [pred]


class _PatchMatcher:
    """Evaluates one dynamic patch at trace points. Conjuncts of the
    precondition are split by how many free variables they mention so
    that single-variable filters prune candidate pools before the
    binding product is formed; the result equals evaluating the whole
    precondition on every binding."""

    def __init__(self, prog, patch):
        self.prog = prog
        self.patch = patch
        self.fvs = sorted(patch.free_vars, key=lambda fv: fv.name)
        self.static, self.rest = [], []
        self.unary = {fv.name: [] for fv in self.fvs}
        for c in _conjuncts(patch.precondition):
            names = pred_free_vars(c)
            if not names and not (pred_ops(c) & DYNAMIC_OPS):
                self.static.append(c)
            elif len(names) == 1:
                self.unary[next(iter(names))].append(c)
            else:
                self.rest.append(c)
        self._static_cache = {}

    def static_ok(self, stmt):
        ok = self._static_cache.get(stmt)
        if ok is None:
            ok = all(eval_pred(c, None, Binding(), (self.prog, stmt)) for c in self.static)
            self._static_cache[stmt] = ok
        return ok

    def bindings(self, point):
        if not self.static_ok(point.stmt):
            return []
        ctx = (self.prog, point.stmt)
        pools = []
        for fv in self.fvs:
            pool = []
            for v in sorted(point.vars, key=lambda v: v.name):
                if not compatible(fv, v):
                    continue
                b = Binding(((fv.name, v.name),))
                if all(eval_pred(c, point, b, ctx) for c in self.unary[fv.name]):
                    pool.append(v.name)
            if not pool:
                return []
            pools.append(pool)
        out = []
        for combo in _injective_product(pools):
            b = Binding(tuple(zip((fv.name for fv in self.fvs), combo)))
            if all(eval_pred(c, point, b, ctx) for c in self.rest):
                out.append(b)
        return out


def _injective_product(pools, used=()):
    if not pools:
        yield ()
        return
    for name in pools[0]:
        if name in used:
            continue
        for tail in _injective_product(pools[1:], used + (name,)):
            yield (name,) + tail


def _merge(a, b):
    merged = dict(a.pairs)
    for k, v in b.pairs:
        if merged.get(k, v) != v:
            return None
        merged[k] = v
    hosts = list(merged.values())
    if len(set(hosts)) != len(hosts):
        return None
    return Binding.of(merged)


def match_template(db, prog, template, digest=None):
    """All candidates for ``template`` in canonical order."""
    db.require_program(digest if digest is not None else tracestore.program_digest(prog))
    statics = template.static_patches
    dyns = template.dynamic_patches
    for p in statics:
        if not eval_pred(p.precondition, None, Binding(), (prog, TOP)):
            return []
    if not dyns:
        return []
    static_points = {p.name: PatchPoint(p.name, TOP) for p in statics}
    matchers = [_PatchMatcher(prog, p) for p in dyns]

    def points_for(i, prefix_binding, witness, min_step, chosen):
        if i == len(dyns):
            yield prefix_binding, chosen
            return
        for pt, bs in hits[i].get(witness, ()):
            if pt.step < min_step:
                continue
            for b in bs:
                merged = _merge(prefix_binding, b)
                if merged is not None:
                    yield from points_for(i + 1, merged, witness, pt.step, chosen + (pt,))

    hits = []
    for m in matchers:
        ok_stmts = {s for s in db.statements() if m.static_ok(s)}
        per_witness = {}
        for pt in db.scan(ok_stmts):
            bs = m.bindings(pt)
            if bs:
                per_witness.setdefault(pt.witness, []).append((pt, bs))
        hits.append(per_witness)

    cands = []
    for witness in sorted(hits[0]):
        for binding, chosen in points_for(0, Binding(), witness, -1, ()):
            dyn_points = {p.name: PatchPoint(p.name, pt.stmt, pt.witness, pt.step)
                          for p, pt in zip(dyns, chosen)}
            points = tuple(static_points.get(p.name) or dyn_points[p.name] for p in template.patches)
            cands.append(Candidate(template.name, points, binding, witness))
    cands.sort(key=lambda c: c.key)
    return cands


# injection

@dataclass(frozen=True)
class ProbeSite:
    patch: str
    line: int               # printed line of the snippet's first statement
    facts: StaticFacts


@dataclass
class BuggyVariant:
    id: str
    template: str
    text: str
    witness: ProgramInput
    records: tuple
    cwe: Optional[int]
    flaw_line: int
    binding: Binding
    probes: tuple = field(default_factory=tuple)
    # analyzed form of ``text``, kept so checks need not re-parse it
    program: object = field(default=None, repr=False, compare=False)

    @property
    def file(self):
        return f"{self.id}/{self.id}.mc"

    def analyzed(self):
        if self.program is None:
            self.program = load(self.text, self.file)
        return self.program

    def with_id(self, vid):
        records = tuple(GroundTruthRecord(vid, r.template, r.patch, r.cwe, f"{vid}/{vid}.mc",
                                          r.span_start, r.span_end, r.flaw_line, r.witness_id,
                                          r.witness_args, r.binding) for r in self.records)
        return BuggyVariant(vid, self.template, self.text, self.witness, records, self.cwe,
                            self.flaw_line, self.binding, self.probes, self.program)


def witness_comment(args):
    text = shlex.join(args).replace("*/", "* /").replace("\n", " ")
    return f"/* from input {text} */"


def _statement_lists(unit):
    """Map statement id -> the list that holds it."""
    out = {}
    for top in unit.toplevels:
        for n in ast.walk(top):
            if isinstance(n, ast.Block):
                for s in n.stmts:
                    out[s.id] = n.stmts
    return out


def _flaw_node(nodes, cwe_line, spans):
    """Outermost printed node that starts on raw snippet line
    ``cwe_line``, preferring code over comments."""
    found = []
    for top in nodes:
        for n in ast.walk(top):
            if id(n) in spans and n.line == cwe_line:
                found.append(n)
    code = [n for n in found if not isinstance(n, ast.Comment)]
    return (code or found or [None])[0]


def inject(prog, cand, template, witness, variant_id="", with_comment=True, path=None):
    unit = copy.deepcopy(prog.unit)
    lists = _statement_lists(unit)
    binding = cand.binding.as_dict()
    inserted = {}
    static_nodes = []
    for patch, point in zip(template.patches, cand.points):
        if patch.is_static:
            nodes = parse_toplevels(patch.code)
            static_nodes.extend(nodes)
            inserted[patch.name] = (nodes, nodes)
            continue
        nodes = parse_statements(patch.code)
        mapping = {fv.name: binding[fv.name] for fv in patch.free_vars}
        clash = set(mapping.values()) & set(declared_names(nodes))
        if clash:
            raise RebindCollision(f"{template.name}: snippet declares bound name(s) {sorted(clash)}")
        rename_free(nodes, mapping)
        target_list = lists.get(point.stmt)
        if target_list is None:
            raise PipelineError(f"statement {point.stmt} not found in host")
        at = next(i for i, s in enumerate(target_list) if s.id == point.stmt)
        block = list(nodes)
        if with_comment:
            block.insert(0, ast.Comment(-1, 0, 0, witness_comment(witness.args)))
        target_list[at:at] = block
        inserted[patch.name] = (block, nodes)
    unit.toplevels[0:0] = static_nodes
    text, spans = render(unit)
    try:
        vprog = analyze(parse(text, path or f"{variant_id}.mc"))
    except MiniCError as e:
        raise ReanalyzeFailure(f"{template.name}: variant does not re-analyze: {e}") from e

    first_original = unit.toplevels[len(static_nodes)] if len(unit.toplevels) > len(static_nodes) else None
    static_end = spans[id(first_original)][0] - 1 if first_original is not None else text.count("\n")
    span_of = {}
    statics = [p for p in template.patches if p.is_static]
    for k, patch in enumerate(statics):
        nodes = inserted[patch.name][0]
        if not nodes:
            continue
        start = spans[id(nodes[0])][0]
        later = [inserted[q.name][0] for q in statics[k + 1:] if inserted[q.name][0]]
        end = spans[id(later[0][0])][0] - 1 if later else static_end
        span_of[patch.name] = (start, end)
    for patch in template.dynamic_patches:
        block, _ = inserted[patch.name]
        if block:
            span_of[patch.name] = (spans[id(block[0])][0], spans[id(block[-1])][1])

    flaw_patch = template.flaw_patch
    flaw_line = 0
    if flaw_patch is not None and flaw_patch.name in span_of:
        code_nodes = inserted[flaw_patch.name][1]
        start, end = span_of[flaw_patch.name]
        node = _flaw_node(code_nodes, flaw_patch.cwe_line or 1, spans) if code_nodes else None
        if node is not None:
            flaw_line = spans[id(node)][0]
        else:
            first = spans[id(code_nodes[0])][0] if code_nodes else start
            flaw_line = min(end, first + (flaw_patch.cwe_line or 1) - 1)

    probes = []
    for patch, point in zip(template.patches, cand.points):
        if patch.is_static:
            continue
        nodes = inserted[patch.name][1]
        code = [n for n in nodes if not isinstance(n, ast.Comment)]
        if code:
            probes.append(ProbeSite(patch.name, spans[id(code[0])][0],
                                    StaticFacts.at(patch.precondition, prog, point.stmt)))

    args = shlex.join(witness.args)
    records = tuple(
        GroundTruthRecord(variant_id, template.name, p.name, template.cwe,
                          f"{variant_id}/{variant_id}.mc", *span_of[p.name], flaw_line,
                          witness.id, args, str(cand.binding))
        for p in template.patches if p.name in span_of)
    return BuggyVariant(variant_id, template.name, text, witness, records, template.cwe,
                        flaw_line, cand.binding, tuple(probes), vprog)


# validation

def _line_statements(vprog):
    out = {}
    for sid in vprog.stmt_ids:
        out.setdefault(vprog.nodes[sid].line, sid)
    return out


def validate(variant, template, cand=None, budget=DEFAULT_BUDGET):
    """Re-run the witness on a build of the variant that checks each
    dynamic precondition right before its snippet. True when every one
    holds on at least one arrival."""
    vprog = variant.analyzed()
    by_line = _line_statements(vprog)
    patches = {p.name: p for p in template.patches}
    sites = list(variant.probes)
    if not sites:
        return True
    probes = {}
    for i, site in enumerate(sites):
        sid = by_line.get(site.line)
        if sid is None:
            raise PipelineError(f"{variant.id}: no statement on line {site.line}")
        probes[sid] = i
    satisfied = [False] * len(sites)
    arrived = [False] * len(sites)
    witness = variant.witness

    def on_probe(key, snapshot):
        arrived[key] = True
        if not satisfied[key]:
            site = sites[key]
            point = TracePoint(witness.id, 0, -1, snapshot)
            if eval_pred(patches[site.patch].precondition, point, variant.binding, site.facts):
                satisfied[key] = True
        return all(satisfied)

    outcome = runtime.run_probed(vprog, witness, probes, on_probe, budget)
    if all(satisfied):
        return True
    if not any(arrived) and outcome.fault is None and outcome.exit == BUDGET_EXIT:
        raise WitnessRunFailure(f"{variant.id}: step budget exhausted before reaching the injected code")
    return False


def confirm_fault(variant, budget=DEFAULT_BUDGET):
    """For fault-detectable CWEs: does the witness fault with the expected
    class while executing the flaw line's statement? Other CWEs pass."""
    expected = EXPECTED_FAULTS.get(variant.cwe)
    if expected is None:
        return True
    vprog = variant.analyzed()
    outcome = runtime.run_plain(vprog, variant.witness, budget)
    if outcome.fault is None or outcome.fault.kind not in expected:
        return False
    flaw_stmt = _line_statements(vprog).get(variant.flaw_line)
    return flaw_stmt is not None and flaw_stmt in outcome.fault.stack


# end to end

@dataclass
class GenerateParams:
    num_injections: int = 30
    max_trace: int = 1_000_000
    seed: int = 0
    require_fault: bool = False
    witness_comment: bool = True
    jobs: int = 1
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.num_injections < 0 or self.max_trace < 0 or self.jobs < 1:
            raise ValueError("num_injections and max_trace must be >= 0, jobs >= 1")


@dataclass
class TemplateSummary:
    template: str
    candidates: int = 0
    sampled: int = 0
    validated: int = 0
    emitted: int = 0


@dataclass
class Benchmark:
    host: str
    variants: list
    summaries: list
    witness_outcomes: dict = field(default_factory=dict)

    @property
    def records(self):
        return [r for v in self.variants for r in v.records]


def _trace_one(inst, inp, max_trace, budget):
    return runtime.run_traced(inst, inp, max_trace, budget)


def collect_traces(prog, inputs, max_trace, budget=DEFAULT_BUDGET, jobs=1, digest=None):
    """Run every input with tracing; returns (TraceDb, {witness: outcome})."""
    inst = runtime.instrument(prog)
    digest = digest or tracestore.program_digest(prog)
    builder = tracestore.TraceDbBuilder(digest, max_trace)
    if jobs > 1 and len(inputs) > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(prog.unit, None)) as ex:
            results = list(ex.map(_worker_trace, inputs, [max_trace] * len(inputs),
                                  [budget] * len(inputs)))
    else:
        results = [_trace_one(inst, inp, max_trace, budget) for inp in inputs]
    outcomes = {}
    witnesses, points = {}, []
    for inp, (outcome, trace) in zip(inputs, results):
        builder.append_trace(inp, trace)
        outcomes[inp.id] = outcome
        witnesses[inp.id] = tuple(str(a) for a in inp.args)
        points.extend(trace)
    db = tracestore.TraceDb(digest, max_trace, witnesses, points)
    return db, outcomes, builder


def _attempt(prog, template, cand, witness, params, variant_id):
    """Inject and check one candidate; returns (variant or None, validated)."""
    try:
        v = inject(prog, cand, template, witness, variant_id, params.witness_comment)
        if not validate(v, template, cand, params.budget):
            return None, False
    except PipelineError as e:
        log.debug("candidate rejected: %s", e)
        return None, False
    if params.require_fault and not confirm_fault(v, params.budget):
        return None, True
    return v, True


_WORKER = {}


def _init_worker(unit, _unused):
    prog = analyze(unit)
    _WORKER["prog"] = prog
    _WORKER["inst"] = runtime.instrument(prog)


def _worker_trace(inp, max_trace, budget):
    return _trace_one(_WORKER["inst"], inp, max_trace, budget)


def _worker_attempt(template, cand, witness, params):
    v, ok = _attempt(_WORKER["prog"], template, cand, witness, params, "")
    if v is not None:
        v.program = None    # cheaper to re-parse on demand than to pickle
    return v, ok


def _chunks(it, size):
    chunk = []
    for x in it:
        chunk.append(x)
        if len(chunk) == size:
            yield chunk
            chunk = []
    if chunk:
        yield chunk


def generate(host_text, inputs, templates, params=None, host_path="host.mc"):
    params = params or GenerateParams()
    prog = load(host_text, host_path)
    digest = tracestore.program_digest(prog)
    ids = [i.id for i in inputs]
    if len(set(ids)) != len(ids):
        raise tracestore.DuplicateWitnessId(sorted({i for i in ids if ids.count(i) > 1}))
    db, outcomes, _ = collect_traces(prog, inputs, params.max_trace, params.budget, params.jobs, digest)
    witnesses = {i.id: i for i in inputs}
    variants, summaries = [], []
    pool = None
    if params.jobs > 1:
        pool = ProcessPoolExecutor(max_workers=params.jobs, initializer=_init_worker,
                                   initargs=(prog.unit, None))
    try:
        for t in templates:
            summary = TemplateSummary(t.name)
            summaries.append(summary)
            cands = match_template(db, prog, t, digest)
            summary.candidates = len(cands)
            if not cands:
                log.warning("template %s: no candidates", t.name)
                continue
            if params.num_injections == 0:
                continue
            order = selection_order(len(cands), params.num_injections, params.seed)
            window = 1 if pool is None else 2 * params.jobs
            for chunk in _chunks(order, window):
                if summary.emitted >= params.num_injections:
                    break
                batch = [cands[i] for i in chunk]
                if pool is None:
                    results = [_attempt(prog, t, c, witnesses[c.witness], params, "") for c in batch]
                else:
                    results = list(pool.map(_worker_attempt, [t] * len(batch), batch,
                                            [witnesses[c.witness] for c in batch],
                                            [params] * len(batch)))
                for v, ok in results:
                    if summary.emitted >= params.num_injections:
                        break
                    summary.sampled += 1
                    summary.validated += ok
                    if v is None:
                        continue
                    summary.emitted += 1
                    variants.append(v.with_id(f"{t.name}-{summary.emitted:04d}"))
            log.info("template %s: %d candidates, %d sampled, %d validated, %d emitted",
                     t.name, summary.candidates, summary.sampled, summary.validated, summary.emitted)
    finally:
        if pool is not None:
            pool.shutdown()
    return Benchmark(os.path.basename(host_path), variants, summaries, outcomes)


def write_benchmark(bench, out_dir):
    """Write one directory per variant plus ``manifest.tsv``. An existing
    output directory must be empty or hold a previous benchmark, which is
    replaced."""
    if os.path.exists(out_dir):
        entries = os.listdir(out_dir)
        if entries and "manifest.tsv" not in entries:
            raise OSError(f"{out_dir} exists and does not hold a benchmark")
        for e in entries:
            p = os.path.join(out_dir, e)
            if os.path.isdir(p):
                shutil.rmtree(p)
            else:
                os.remove(p)
    os.makedirs(out_dir, exist_ok=True)
    for v in bench.variants:
        vdir = os.path.join(out_dir, v.id)
        os.makedirs(vdir)
        _write(os.path.join(vdir, f"{v.id}.mc"), v.text)
        _write(os.path.join(vdir, "witness.txt"),
               f"witness {v.witness.id}\n{shlex.join(v.witness.args)}\n")
        _write(os.path.join(vdir, "ground_truth.txt"), "\n".join(r.as_text() for r in v.records))
    path = os.path.join(out_dir, "manifest.tsv")
    _write(path, format_manifest(bench.records))
    return path


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
