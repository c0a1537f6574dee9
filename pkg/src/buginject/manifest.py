"""Ground-truth records and the ``manifest.tsv`` file that lists them."""

import csv
from dataclasses import astuple, dataclass, fields
from typing import Optional

COLUMNS = ("variant_id", "template", "patch", "cwe", "file", "span_start", "span_end",
           "flaw_line", "witness_id", "witness_args", "binding")


@dataclass(frozen=True)
class GroundTruthRecord:
    variant_id: str
    template: str
    patch: str
    cwe: Optional[int]
    file: str
    span_start: int
    span_end: int
    flaw_line: int
    witness_id: int
    witness_args: str
    binding: str

    def as_row(self):
        return ["" if v is None else str(v) for v in astuple(self)]

    def as_text(self):
        return "".join(f"{f.name}: {'' if getattr(self, f.name) is None else getattr(self, f.name)}\n"
                       for f in fields(self))


def format_manifest(records):
    lines = ["\t".join(COLUMNS)]
    for r in records:
        row = r.as_row()
        if any("\t" in c or "\n" in c for c in row):
            raise ValueError(f"manifest field of {r.variant_id} contains a tab or newline")
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def parse_manifest(text):
    rows = list(csv.reader(text.splitlines(), delimiter="\t", quoting=csv.QUOTE_NONE))
    if not rows or tuple(rows[0]) != COLUMNS:
        raise ValueError("manifest header does not match the expected columns")
    out = []
    for n, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(COLUMNS):
            raise ValueError(f"manifest line {n}: expected {len(COLUMNS)} fields, got {len(row)}")
        v = dict(zip(COLUMNS, row))
        out.append(GroundTruthRecord(
            v["variant_id"], v["template"], v["patch"], int(v["cwe"]) if v["cwe"] else None,
            v["file"], int(v["span_start"]), int(v["span_end"]), int(v["flaw_line"]),
            int(v["witness_id"]), v["witness_args"], v["binding"]))
    return out


def read_manifest(path):
    with open(path, encoding="utf-8", newline="") as f:
        return parse_manifest(f.read())
