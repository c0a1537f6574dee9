import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from buginject import cli, pipeline, runtime, templates
from buginject.manifest import read_manifest

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"
FIX = HERE / "fixtures"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_check(capsys):
    code, out, _ = run(capsys, "check", GOLDEN / "tiny.mc")
    assert code == 0 and "ok" in out


def test_check_syntax_error(capsys):
    code, _, err = run(capsys, "check", FIX / "bad.mc")
    assert code == 2
    assert "bad.mc:2:13:" in err


def test_check_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "check", tmp_path / "nope.mc")
    assert code == 3 and "nope.mc" in err


def test_trace_rows_and_cap(capsys, tmp_path):
    host, suite = cli._demo_paths()[:2]
    code, out, _ = run(capsys, "trace", host, suite, "--out", tmp_path / "a.bidb", "--max-trace", 100)
    assert code == 0
    rows = out.splitlines()[1:]
    assert len(rows) == 10
    assert all(0 < int(r.split("\t")[1]) <= 100 for r in rows)
    run(capsys, "trace", host, suite, "--out", tmp_path / "b.bidb", "--max-trace", 100)
    assert (tmp_path / "a.bidb").read_bytes() == (tmp_path / "b.bidb").read_bytes()


def test_trace_budget_exhausted(capsys, caplog, tmp_path):
    code, out, _ = run(capsys, "trace", FIX / "spin.mc", FIX / "spin.suite",
                       "--out", tmp_path / "s.bidb", "--budget", 2000, "--max-trace", 50)
    assert code == 4 and "budget exhausted" in caplog.text
    assert out.splitlines()[1] == "1\t50\t70"


def test_trace_writes_golden_db(capsys, tmp_path):
    code, _, _ = run(capsys, "trace", GOLDEN / "tiny.mc", GOLDEN / "tiny.suite",
                     "--out", tmp_path / "t.bidb", "--max-trace", 1000)
    assert code == 0
    assert (tmp_path / "t.bidb").read_bytes() == (GOLDEN / "tiny.bidb").read_bytes()


def test_dump_db_golden(capsys):
    code, out, _ = run(capsys, "dump-db", GOLDEN / "tiny.bidb")
    assert code == 0 and out == (GOLDEN / "tiny.dump").read_text()


def test_dump_db_corrupt(capsys, tmp_path):
    bad = tmp_path / "bad.bidb"
    bad.write_bytes((GOLDEN / "tiny.bidb").read_bytes()[:-1])
    assert run(capsys, "dump-db", bad)[0] == 3


def test_generate_demo(capsys, tmp_path):
    out_dir = tmp_path / "bench"
    code, out, _ = run(capsys, "generate", "--demo", "--template", "clang-regression-test-memcpy",
                       "--num-injections", 2, "--seed", 42, "--out", out_dir)
    assert code == 0
    rows = read_manifest(out_dir / "manifest.tsv")
    assert 1 <= len(rows) <= 2
    name, cands, sampled, validated, emitted = out.splitlines()[1].split("\t")
    assert name == "clang-regression-test-memcpy" and int(emitted) == len(rows)
    for r in rows:
        assert (out_dir / r.file).is_file()


def test_generate_empty_template_file(capsys, tmp_path):
    empty = tmp_path / "none.bt"
    empty.write_text("; nothing\n")
    code, _, _ = run(capsys, "generate", GOLDEN / "tiny.mc", GOLDEN / "tiny.suite", empty,
                     "--out", tmp_path / "b")
    assert code == 0
    assert (tmp_path / "b" / "manifest.tsv").read_text().count("\n") == 1


def test_generate_unknown_template(capsys, tmp_path):
    code, _, err = run(capsys, "generate", "--demo", "--template", "nope", "--out", tmp_path / "b")
    assert code == 2 and "nope" in err


def test_generate_bad_template_file(capsys, tmp_path):
    bad = tmp_path / "bad.bt"
    bad.write_text("(template t (patch p (kind dynamic) (code \"frob(1);\")))")
    code, _, _ = run(capsys, "generate", GOLDEN / "tiny.mc", GOLDEN / "tiny.suite", bad,
                     "--out", tmp_path / "b")
    assert code == 2


def test_negative_flags(capsys, tmp_path):
    assert run(capsys, "generate", "--demo", "--num-injections", -1, "--out", tmp_path)[0] == 2
    assert run(capsys, "generate", "--demo", "--jobs", 0, "--out", tmp_path)[0] == 2


@pytest.fixture
def scored_bench(tmp_path):
    tmpl = templates.parse_templates((GOLDEN / "tiny.bt").read_text())
    inputs = runtime.parse_suite((GOLDEN / "tiny.suite").read_text())
    bench = pipeline.generate((GOLDEN / "tiny.mc").read_text(), inputs, tmpl,
                              pipeline.GenerateParams(num_injections=3, seed=7), "tiny.mc")
    pipeline.write_benchmark(bench, tmp_path / "bench")
    shutil.copytree(GOLDEN / "reports", tmp_path / "reports")
    return tmp_path / "bench" / "manifest.tsv", tmp_path / "reports"


@pytest.mark.parametrize("tol", [0, 5])
def test_score_golden(capsys, tmp_path, scored_bench, tol):
    manifest, reports = scored_bench
    code, out, _ = run(capsys, "score", manifest, reports, GOLDEN / "typemap.tsv",
                       "--line-tolerance", tol, "--out", tmp_path / "scores.tsv")
    expected = (GOLDEN / f"scores_tol{tol}.tsv").read_text()
    assert code == 0 and out == expected
    assert (tmp_path / "scores.tsv").read_text() == expected


def test_score_missing_report(capsys, scored_bench):
    manifest, reports = scored_bench
    (reports / "tiny-overrun-0002.report").unlink()
    code, _, err = run(capsys, "score", manifest, reports, GOLDEN / "typemap.tsv")
    assert code == 5 and "MissingReport" in err


def test_score_unmapped_type(capsys, scored_bench, tmp_path):
    manifest, reports = scored_bench
    partial = tmp_path / "partial.tsv"
    partial.write_text("BO\t122\n")
    code, _, err = run(capsys, "score", manifest, reports, partial)
    assert code == 5 and "UnmappedWarningType" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "buginject", "check", str(GOLDEN / "tiny.mc")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "ok" in r.stdout
