import struct
import zlib
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from buginject import pipeline, runtime, tracestore
from buginject.minic import load
from buginject.runtime import ProgramInput, TracePoint, VarSnapshot

GOLDEN = Path(__file__).parent / "golden"
DIGEST = bytes(range(32))


def snap(name, value=0, type="int", const=False, null=False, size=None, pointer=None):
    return VarSnapshot(name, type, const, type.startswith("*") if pointer is None else pointer,
                       null, value, size)


def points(wid, n, offset=0):
    return [TracePoint(wid, i, 100 + (i + offset) % 3, (snap("x", i), snap("p", 5, "*int", size=8)))
            for i in range(n)]


def build(traces, max_trace=1000):
    b = tracestore.TraceDbBuilder(DIGEST, max_trace)
    for inp, pts in traces:
        b.append_trace(inp, pts)
    return b.finalize()


def test_round_trip_append_order():
    a, b = points(1, 5), points(2, 5, 1)
    db = tracestore.loads(build([(ProgramInput(1, ("a",)), a), (ProgramInput(2, ()), b)]))
    assert db.points == a + b
    assert db.witnesses == {1: ("a",), 2: ()}
    assert db.max_trace == 1000 and db.digest == DIGEST


def test_capped_trace_count(host, suite):
    _, trace = runtime.run_traced(runtime.instrument(host), suite[0], 25)
    b = tracestore.TraceDbBuilder(DIGEST, 25)
    assert b.append_trace(suite[0], trace) == 25
    assert len(tracestore.loads(b.finalize())) == 25


def test_file_round_trip(tmp_path):
    path = tmp_path / "t.bidb"
    b = tracestore.create(str(path), DIGEST, 10)
    tracestore.append_trace(b, ProgramInput(3, ("z",)), points(3, 4))
    b.finalize()
    db = tracestore.open_db(str(path))
    assert db.points == points(3, 4)
    with pytest.raises(RuntimeError):
        b.append_trace(ProgramInput(4, ()), [])


def test_duplicate_witness():
    b = tracestore.TraceDbBuilder(DIGEST, 10)
    b.append_trace(ProgramInput(1, ()), [])
    with pytest.raises(tracestore.DuplicateWitnessId):
        b.append_trace(ProgramInput(1, ()), [])


def test_corruption_detected():
    data = bytearray(build([(ProgramInput(1, ()), points(1, 3))]))
    with pytest.raises(tracestore.CorruptDb):
        tracestore.loads(bytes(data[:10]))
    flipped = bytearray(data)
    flipped[40] ^= 0xFF
    with pytest.raises(tracestore.CorruptDb):
        tracestore.loads(bytes(flipped))
    bad_magic = bytearray(data)
    bad_magic[0:6] = b"XXXXX\0"
    body = bytes(bad_magic[:-4])
    with pytest.raises(tracestore.CorruptDb, match="magic"):
        tracestore.loads(body + struct.pack("<I", zlib.crc32(body)))


def test_digest_mismatch():
    db = tracestore.loads(build([]))
    db.require_program(DIGEST)
    with pytest.raises(tracestore.DigestMismatch):
        db.require_program(bytes(32))


def test_scan_order_independent_of_append_order():
    w1, w2 = points(1, 4), points(2, 4)
    db = tracestore.loads(build([(ProgramInput(2, ()), w2), (ProgramInput(1, ()), w1)]))
    assert list(db.scan()) == w1 + w2


def test_scan_filters():
    db = tracestore.loads(build([(ProgramInput(1, ()), points(1, 9)), (ProgramInput(2, ()), points(2, 6))]))
    assert list(db.scan(set())) == []
    linear = [p for p in db.scan() if p.stmt == 101]
    assert list(db.scan({101})) == linear and linear


def test_layout_decoded_independently():
    pts = [TracePoint(7, 0, 42, (snap("q", -5, "*char", const=True, size=3),
                                  snap("n", 0, "*int", null=True)))]
    data = build([(ProgramInput(7, ("ab", "c")), pts)], max_trace=99)
    magic, version, digest, max_trace = struct.unpack_from("<6sH32sQ", data, 0)
    assert (magic, version, digest, max_trace) == (b"BIDB1\0", 1, DIGEST, 99)
    pos = 48
    (nstr,) = struct.unpack_from("<I", data, pos)
    pos += 4
    strings = []
    for _ in range(nstr):
        (ln,) = struct.unpack_from("<I", data, pos)
        strings.append(data[pos + 4:pos + 4 + ln].decode())
        pos += 4 + ln
    # args are interned first, then names and types as points are appended
    assert strings == ["ab", "c", "q", "*char", "n", "*int"]
    (nw,) = struct.unpack_from("<I", data, pos)
    wid, argc = struct.unpack_from("<IH", data, pos + 4)
    args = struct.unpack_from("<2I", data, pos + 10)
    assert (nw, wid, argc, args) == (1, 7, 2, (0, 1))
    pos += 4 + 6 + 8
    assert struct.unpack_from("<IIIH", data, pos) == (7, 0, 42, 2)
    pos += 14
    assert struct.unpack_from("<IIBq", data, pos) == (2, 3, 0b1011, -5)
    pos += 17
    assert struct.unpack_from("<Q", data, pos) == (3,)
    pos += 8
    assert struct.unpack_from("<IIBq", data, pos) == (4, 5, 0b0110, 0)
    pos += 17
    assert pos == len(data) - 4
    assert struct.unpack_from("<I", data, pos) == (zlib.crc32(data[:-4]),)


def golden_db():
    prog = load((GOLDEN / "tiny.mc").read_text(), "tiny.mc")
    inputs = runtime.parse_suite((GOLDEN / "tiny.suite").read_text())
    return pipeline.collect_traces(prog, inputs, 1000)


def test_bidb_golden():
    _, _, builder = golden_db()
    assert builder.finalize() == (GOLDEN / "tiny.bidb").read_bytes()


def test_dump_golden():
    db, _, _ = golden_db()
    assert tracestore.dump(db) == (GOLDEN / "tiny.dump").read_text()
    assert tracestore.dump(tracestore.open_db(str(GOLDEN / "tiny.bidb"))) == (GOLDEN / "tiny.dump").read_text()


def test_host_db_round_trip(host_db):
    db, _, builder = host_db
    again = tracestore.loads(builder.to_bytes())
    assert again.points == db.points and again.witnesses == db.witnesses


# random traces

var_st = st.builds(
    lambda name, ty, const, null, value, size: VarSnapshot(
        name, ty, const, ty.startswith("*"), null and ty.startswith("*"),
        0 if null and ty.startswith("*") else value,
        None if (null or not ty.startswith("*")) else size),
    st.sampled_from(["a", "b", "lastout", "n"]), st.sampled_from(["int", "*char", "**int"]),
    st.booleans(), st.booleans(), st.integers(-2**63, 2**63 - 1), st.one_of(st.none(), st.integers(0, 2**40)))


@st.composite
def traces_st(draw):
    out = []
    for wid in draw(st.lists(st.integers(1, 50), unique=True, max_size=4)):
        stmts = draw(st.lists(st.integers(0, 12), max_size=40))
        pts = [TracePoint(wid, i, s, tuple(draw(st.lists(var_st, max_size=3))))
               for i, s in enumerate(stmts)]
        out.append((ProgramInput(wid, tuple(draw(st.lists(st.text(max_size=4), max_size=2)))), pts))
    return out


@settings(max_examples=60, deadline=None)
@given(traces_st())
def test_random_round_trip_and_stable_bytes(traces):
    data = build(traces)
    assert build(traces) == data
    db = tracestore.loads(data)
    assert db.points == [p for _, pts in traces for p in pts]


@settings(max_examples=60, deadline=None)
@given(traces_st(), st.sets(st.integers(0, 14), max_size=5))
def test_index_matches_linear_scan(traces, filt):
    db = tracestore.loads(build(traces))
    ordered = sorted(db.points, key=lambda p: (p.witness, p.step))
    assert list(db.scan()) == ordered
    assert list(db.scan(filt)) == [p for p in ordered if p.stmt in filt]
