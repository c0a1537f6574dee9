"""Command-line entry point: check, trace, generate, score, dump-db."""

import argparse
import logging
import os
import sys
from importlib import resources

from . import pipeline, runtime, scorer, tracestore
from .minic import MiniCError, load
from .templates import TemplateError, parse_templates

log = logging.getLogger("buginject")

EXIT_OK = 0
EXIT_ANALYSIS = 2
EXIT_IO = 3
EXIT_BUDGET = 4
EXIT_SCORING = 5


def _read(path):
    with open(path, encoding="utf-8") as f:
        return f.read()


def _demo_paths():
    d = resources.files("buginject") / "data"
    return str(d / "grepish.mc"), str(d / "grepish.suite"), str(d / "catalog.bt")


def _load_host(path):
    return load(_read(path), path)


def _report_budget(outcomes):
    hit = [w for w, o in sorted(outcomes.items()) if o.budget_exhausted]
    for w in hit:
        log.error("witness %d: step budget exhausted", w)
    return bool(hit)


def cmd_check(args):
    prog = _load_host(args.host)
    print(f"{args.host}: ok, {len(prog.stmt_ids)} statements")
    return EXIT_OK


def cmd_trace(args):
    prog = _load_host(args.host)
    inputs = runtime.parse_suite(_read(args.suite))
    db, outcomes, builder = pipeline.collect_traces(prog, inputs, args.max_trace, args.budget, args.jobs)
    builder.finalize(args.out)
    counts = {}
    for p in db.points:
        counts[p.witness] = counts.get(p.witness, 0) + 1
    print("witness\tpoints\texit")
    for inp in inputs:
        print(f"{inp.id}\t{counts.get(inp.id, 0)}\t{outcomes[inp.id].exit}")
    return EXIT_BUDGET if _report_budget(outcomes) else EXIT_OK


def cmd_generate(args):
    if args.demo:
        host, suite, tmpl = _demo_paths()
    else:
        if not (args.host and args.suite and args.templates):
            raise SystemExit("generate: HOST SUITE TEMPLATES are required unless --demo is given")
        host, suite, tmpl = args.host, args.suite, args.templates
    templates = parse_templates(_read(tmpl))
    if args.template:
        wanted = set(args.template)
        templates = [t for t in templates if t.name in wanted]
        missing = wanted - {t.name for t in templates}
        if missing:
            raise TemplateError(f"unknown template(s): {', '.join(sorted(missing))}")
    params = pipeline.GenerateParams(
        num_injections=args.num_injections, max_trace=args.max_trace, seed=args.seed,
        require_fault=args.require_fault, witness_comment=not args.no_witness_comment,
        jobs=args.jobs, budget=args.budget)
    bench = pipeline.generate(_read(host), runtime.parse_suite(_read(suite)), templates,
                              params, host_path=os.path.basename(host))
    pipeline.write_benchmark(bench, args.out)
    print("template\tcandidates\tsampled\tvalidated\temitted")
    for s in bench.summaries:
        print(f"{s.template}\t{s.candidates}\t{s.sampled}\t{s.validated}\t{s.emitted}")
    return EXIT_BUDGET if _report_budget(bench.witness_outcomes) else EXIT_OK


def cmd_score(args):
    typemap = scorer.parse_typemap(_read(args.typemap))
    rows = scorer.summarize(args.manifest, args.reports, typemap, args.line_tolerance)
    text = scorer.format_scores(rows)
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    return EXIT_OK


def cmd_dump_db(args):
    sys.stdout.write(tracestore.dump(tracestore.open_db(args.db)))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="buginject", description="Inject validated bugs into MiniC programs.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp):
        sp.add_argument("--max-trace", type=int, default=1_000_000, help="trace points kept per witness")
        sp.add_argument("--budget", type=int, default=runtime.DEFAULT_BUDGET, help="step budget per run")
        sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("check", help="parse and analyze a host program")
    sp.add_argument("host")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("trace", help="run the suite and write a trace database")
    sp.add_argument("host")
    sp.add_argument("suite")
    sp.add_argument("--out", required=True, help="output .bidb path")
    run_opts(sp)
    sp.set_defaults(func=cmd_trace)

    sp = sub.add_parser("generate", help="build a benchmark of buggy variants")
    sp.add_argument("host", nargs="?")
    sp.add_argument("suite", nargs="?")
    sp.add_argument("templates", nargs="?")
    sp.add_argument("--out", required=True, help="benchmark directory")
    sp.add_argument("--demo", action="store_true", help="use the bundled host, suite and catalog")
    sp.add_argument("--template", action="append", help="only this template (repeatable)")
    sp.add_argument("--num-injections", type=int, default=30)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--require-fault", action="store_true",
                    help="keep only variants that fault at the flaw line under their witness")
    sp.add_argument("--no-witness-comment", action="store_true")
    run_opts(sp)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("score", help="score analyzer reports against a manifest")
    sp.add_argument("manifest")
    sp.add_argument("reports", help="directory of <variant_id>.report files")
    sp.add_argument("typemap")
    sp.add_argument("--line-tolerance", type=int, default=0)
    sp.add_argument("--out", help="also write the table here")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("dump-db", help="print a trace database as text")
    sp.add_argument("db")
    sp.set_defaults(func=cmd_dump_db)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    for name in ("num_injections", "max_trace", "line_tolerance"):
        if getattr(args, name, 0) < 0:
            print(f"error: --{name.replace('_', '-')} must be >= 0", file=sys.stderr)
            return EXIT_ANALYSIS
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_ANALYSIS
    try:
        return args.func(args)
    except MiniCError as e:
        path = getattr(args, "host", None) or "<input>"
        print(f"{path}:{e}", file=sys.stderr)
        return EXIT_ANALYSIS
    except TemplateError as e:
        print(f"template error: {e}", file=sys.stderr)
        return EXIT_ANALYSIS
    except scorer.ScoringError as e:
        print(f"scoring error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_SCORING
    except (OSError, tracestore.CorruptDb, tracestore.DigestMismatch,
            tracestore.DuplicateWitnessId, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
