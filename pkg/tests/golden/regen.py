"""Rewrite the checked-in golden files. Run only after an intended
format change, then review the diff."""

import shutil
import sys
from pathlib import Path

from buginject import pipeline, runtime, templates, tracestore
from buginject.minic import load

HERE = Path(__file__).parent
PARAMS = pipeline.GenerateParams(num_injections=3, seed=7)


def build_db():
    prog = load((HERE / "tiny.mc").read_text(), "tiny.mc")
    inputs = runtime.parse_suite((HERE / "tiny.suite").read_text())
    _, _, builder = pipeline.collect_traces(prog, inputs, 1000)
    return builder.finalize()


def build_bench(out):
    tmpl = templates.parse_templates((HERE / "tiny.bt").read_text())
    inputs = runtime.parse_suite((HERE / "tiny.suite").read_text())
    bench = pipeline.generate((HERE / "tiny.mc").read_text(), inputs, tmpl, PARAMS, "tiny.mc")
    pipeline.write_benchmark(bench, out)
    return bench


def main():
    data = build_db()
    (HERE / "tiny.bidb").write_bytes(data)
    (HERE / "tiny.dump").write_text(tracestore.dump(tracestore.loads(data)))
    out = HERE / "_bench"
    build_bench(out)
    shutil.copy(out / "manifest.tsv", HERE / "manifest.tsv")
    shutil.rmtree(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
