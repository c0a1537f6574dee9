"""Score analyzer warning reports against a benchmark manifest."""

import os
import statistics
from dataclasses import dataclass

from .manifest import read_manifest


class ScoringError(Exception):
    pass


class MissingReport(ScoringError):
    pass


class UnmappedWarningType(ScoringError):
    pass


class EmptyPartition(ScoringError):
    pass


@dataclass(frozen=True)
class WarningRecord:
    file: str
    line: int
    type: str
    message: str = ""


def parse_report(text, source="<report>"):
    """Lines ``file:line:type:message``; blank lines are ignored."""
    out = []
    for n, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split(":", 3)
        if len(parts) < 3:
            raise ScoringError(f"{source}:{n}: expected file:line:type:message")
        try:
            line = int(parts[1])
        except ValueError:
            raise ScoringError(f"{source}:{n}: bad line number {parts[1]!r}") from None
        if line < 1:
            raise ScoringError(f"{source}:{n}: line must be >= 1")
        out.append(WarningRecord(parts[0], line, parts[2], parts[3] if len(parts) > 3 else ""))
    return out


def parse_typemap(text):
    """Lines ``type<TAB>cwe[,cwe...]``; ``#`` starts a comment line."""
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        if "\t" not in raw:
            raise ScoringError(f"type map line {n}: expected type<TAB>cwe list")
        name, cwes = raw.split("\t", 1)
        try:
            out[name] = frozenset(int(c) for c in cwes.split(",") if c.strip())
        except ValueError:
            raise ScoringError(f"type map line {n}: bad cwe list {cwes!r}") from None
    return out


def _cwes_for(w, typemap):
    try:
        return typemap[w.type]
    except KeyError:
        raise UnmappedWarningType(w.type) from None


def credit(gt, warnings, typemap, tolerance=0):
    """True when some warning of a type mapped to the record's CWE lands
    within ``tolerance`` lines of its injected span."""
    lo, hi = gt.span_start - tolerance, gt.span_end + tolerance
    hit = False
    for w in warnings:
        cwes = _cwes_for(w, typemap)
        if not hit and gt.cwe in cwes and lo <= w.line <= hi:
            hit = True
    return hit


def projected_recall(credited, total):
    """Whole percent, halves rounded up."""
    if total <= 0:
        raise EmptyPartition("partition has no bugs")
    return (200 * credited + total) // (2 * total)


def warnings_per_kloc(warnings, loc):
    return warnings * 1000 / loc


def count_loc(text):
    return sum(1 for line in text.splitlines() if line.strip())


def cwe_class(cwe):
    if cwe in (476, 690):
        return "NPD"
    if cwe in (121, 122, 124, 126, 127):
        return "BO"
    return "none" if cwe is None else f"CWE-{cwe}"


def template_source(template):
    return template.split("-", 1)[0]


PARTITIONS = {
    "source": lambda recs: template_source(recs[0].template),
    "cwe": lambda recs: cwe_class(recs[0].cwe),
}


@dataclass(frozen=True)
class ScoreRow:
    partition: str
    key: str
    bugs: int
    credited: int
    recall: int
    wpk_mean: float
    wpk_stddev: float


@dataclass
class VariantScore:
    variant_id: str
    records: list
    credited: bool
    wpk: float


def score_variant(records, warnings, loc, typemap, tolerance=0):
    """``records`` are the manifest rows of one variant. Only warnings
    that name the variant's file take part in crediting; every warning
    counts toward volume."""
    base = os.path.basename(records[0].file)
    own = [w for w in warnings if os.path.basename(w.file) == base]
    for w in warnings:
        _cwes_for(w, typemap)
    hit = any(credit(r, own, typemap, tolerance) for r in records)
    return VariantScore(records[0].variant_id, list(records), hit,
                        warnings_per_kloc(len(warnings), max(loc, 1)))


def summarize_scores(scores, partitions=("source", "cwe")):
    rows = []
    for name in partitions:
        groups = {}
        for s in scores:
            groups.setdefault(PARTITIONS[name](s.records), []).append(s)
        for key in sorted(groups):
            rows.append(_row(name, key, groups[key]))
    if scores:
        rows.append(_row("overall", "all", scores))
    return rows


def _row(partition, key, scores):
    bugs = len(scores)
    credited = sum(s.credited for s in scores)
    wpks = [s.wpk for s in scores]
    mean = statistics.fmean(wpks)
    sd = statistics.stdev(wpks) if len(wpks) > 1 else 0.0
    return ScoreRow(partition, key, bugs, credited, projected_recall(credited, bugs),
                    mean, sd)


def _group(records):
    out = {}
    for r in records:
        out.setdefault(r.variant_id, []).append(r)
    return out


def summarize(manifest_path, reports_dir, typemap, tolerance=0, partitions=("source", "cwe")):
    """Score every variant listed in the manifest. Each needs
    ``<reports_dir>/<variant_id>.report``; the variant source is looked
    up next to the manifest for the line count."""
    records = read_manifest(manifest_path)
    root = os.path.dirname(os.path.abspath(manifest_path))
    scores = []
    for vid, recs in _group(records).items():
        rpath = os.path.join(reports_dir, f"{vid}.report")
        if not os.path.isfile(rpath):
            raise MissingReport(rpath)
        with open(rpath, encoding="utf-8") as f:
            warnings = parse_report(f.read(), rpath)
        with open(os.path.join(root, recs[0].file), encoding="utf-8") as f:
            loc = count_loc(f.read())
        scores.append(score_variant(recs, warnings, loc, typemap, tolerance))
    return summarize_scores(scores, partitions)


COLUMNS = ("partition", "key", "bugs", "credited", "recall", "wpk_mean", "wpk_stddev")


def format_scores(rows):
    lines = ["\t".join(COLUMNS)]
    for r in rows:
        lines.append(f"{r.partition}\t{r.key}\t{r.bugs}\t{r.credited}\t{r.recall}\t"
                     f"{r.wpk_mean:.1f}\t{r.wpk_stddev:.1f}")
    return "\n".join(lines) + "\n"
