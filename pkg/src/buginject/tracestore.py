"""Binary trace database (``.bidb``).

Layout, all little-endian::

    magic "BIDB1\\0" | version u16 | program digest [32] | max_trace u64
    strings:   count u32, then (len u32, utf-8 bytes) each
    witnesses: count u32, then (id u32, argc u16, arg string-id u32 * argc)
    points until the trailer:
        witness u32, step u32, stmt u32, nvars u16, then per variable
        name-sid u32, type-sid u32, flags u8, value i64 [, size u64]
    crc32 u32 over every preceding byte

Flag bits: 0 const, 1 pointer, 2 null, 3 has-size. Strings are interned
in order of first use. A finalized database is read-only.
"""

import hashlib
import os
import shlex
import struct
import zlib

from .minic import pretty_print
from .runtime import TracePoint, VarSnapshot

MAGIC = b"BIDB1\0"
VERSION = 1

_HEADER = struct.Struct("<6sH32sQ")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_POINT = struct.Struct("<IIIH")
_VAR = struct.Struct("<IIBq")
_U64 = struct.Struct("<Q")

F_CONST, F_POINTER, F_NULL, F_SIZE = 1, 2, 4, 8


class CorruptDb(Exception):
    pass


class DuplicateWitnessId(Exception):
    pass


class DigestMismatch(Exception):
    pass


def program_digest(prog):
    return hashlib.sha256(pretty_print(prog).encode("utf-8")).digest()


class TraceDbBuilder:
    def __init__(self, digest, max_trace, path=None):
        if len(digest) != 32:
            raise ValueError("program digest must be 32 bytes")
        self.digest = digest
        self.max_trace = max_trace
        self.path = path
        self.strings = {}
        self.witnesses = {}
        self.records = []
        self.finalized = False

    def sid(self, s):
        i = self.strings.get(s)
        if i is None:
            i = self.strings[s] = len(self.strings)
        return i

    def append_trace(self, input, points):
        if self.finalized:
            raise RuntimeError("database already finalized")
        if input.id in self.witnesses:
            raise DuplicateWitnessId(input.id)
        self.witnesses[input.id] = [self.sid(str(a)) for a in input.args]
        parts = []
        count = 0
        for p in points:
            if p.witness != input.id:
                raise ValueError(f"point of witness {p.witness} appended under {input.id}")
            parts.append(_POINT.pack(p.witness, p.step, p.stmt, len(p.vars)))
            for v in p.vars:
                flags = (F_CONST if v.const else 0) | (F_POINTER if v.pointer else 0)
                flags |= (F_NULL if v.null else 0) | (F_SIZE if v.size is not None else 0)
                parts.append(_VAR.pack(self.sid(v.name), self.sid(v.type), flags, v.value))
                if v.size is not None:
                    parts.append(_U64.pack(v.size))
            count += 1
        self.records.append(b"".join(parts))
        return count

    def to_bytes(self):
        out = [_HEADER.pack(MAGIC, VERSION, self.digest, self.max_trace),
               _U32.pack(len(self.strings))]
        for s in self.strings:
            data = s.encode("utf-8")
            out.append(_U32.pack(len(data)))
            out.append(data)
        out.append(_U32.pack(len(self.witnesses)))
        for wid, sids in self.witnesses.items():
            out.append(_U32.pack(wid) + _U16.pack(len(sids)))
            out.extend(_U32.pack(s) for s in sids)
        out.extend(self.records)
        body = b"".join(out)
        return body + _U32.pack(zlib.crc32(body))

    def finalize(self, path=None):
        """Freeze the builder; writes the file when a path was given."""
        data = self.to_bytes()
        self.finalized = True
        self.path = path or self.path
        if self.path is not None:
            tmp = f"{self.path}.tmp"
            with open(tmp, "wb") as f:
                f.write(data)
            os.replace(tmp, self.path)
        return data


def create(path, digest, max_trace):
    return TraceDbBuilder(digest, max_trace, path)


def append_trace(db, input, points):
    return db.append_trace(input, points)


class TraceDb:
    def __init__(self, digest, max_trace, witnesses, points):
        self.digest = digest
        self.max_trace = max_trace
        self.witnesses = witnesses      # id -> tuple of args, file order
        self.points = points            # file order
        order = sorted(range(len(points)), key=lambda i: (points[i].witness, points[i].step))
        self.order = order
        self.rank = [0] * len(points)
        for r, i in enumerate(order):
            self.rank[i] = r
        self.index = {}
        for i in order:
            self.index.setdefault(points[i].stmt, []).append(i)

    def __len__(self):
        return len(self.points)

    def require_program(self, digest):
        if digest != self.digest:
            raise DigestMismatch("trace database was built from a different program")

    def scan(self, filter=None):
        """Points in (witness, step) order, optionally restricted to a set
        of statement ids."""
        if filter is None:
            for i in self.order:
                yield self.points[i]
            return
        hits = []
        for sid in set(filter):
            hits.extend(self.index.get(sid, ()))
        hits.sort(key=self.rank.__getitem__)
        for i in hits:
            yield self.points[i]

    def statements(self):
        return sorted(self.index)


def loads(data):
    if len(data) < _HEADER.size + 4:
        raise CorruptDb("file too short")
    body, (crc,) = data[:-4], _U32.unpack(data[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptDb("checksum mismatch")
    magic, version, digest, max_trace = _HEADER.unpack_from(body, 0)
    if magic != MAGIC:
        raise CorruptDb("bad magic")
    if version != VERSION:
        raise CorruptDb(f"unsupported version {version}")
    try:
        return _decode(body, _HEADER.size, digest, max_trace)
    except (struct.error, IndexError, UnicodeDecodeError) as e:
        raise CorruptDb(f"truncated or malformed body: {e}") from e


def _decode(body, pos, digest, max_trace):
    (n,) = _U32.unpack_from(body, pos)
    pos += 4
    strings = []
    for _ in range(n):
        (ln,) = _U32.unpack_from(body, pos)
        pos += 4
        if pos + ln > len(body):
            raise CorruptDb("string runs past end of file")
        strings.append(body[pos:pos + ln].decode("utf-8"))
        pos += ln
    (n,) = _U32.unpack_from(body, pos)
    pos += 4
    witnesses = {}
    for _ in range(n):
        (wid,) = _U32.unpack_from(body, pos)
        (argc,) = _U16.unpack_from(body, pos + 4)
        pos += 6
        args = struct.unpack_from(f"<{argc}I", body, pos)
        pos += 4 * argc
        if wid in witnesses:
            raise DuplicateWitnessId(wid)
        witnesses[wid] = tuple(strings[s] for s in args)
    points = []
    end = len(body)
    var_size = _VAR.size
    while pos < end:
        witness, step, stmt, nvars = _POINT.unpack_from(body, pos)
        pos += _POINT.size
        vs = []
        for _ in range(nvars):
            name, ty, flags, value = _VAR.unpack_from(body, pos)
            pos += var_size
            size = None
            if flags & F_SIZE:
                (size,) = _U64.unpack_from(body, pos)
                pos += 8
            vs.append(VarSnapshot(strings[name], strings[ty], bool(flags & F_CONST),
                                  bool(flags & F_POINTER), bool(flags & F_NULL), value, size))
        if witness not in witnesses:
            raise CorruptDb(f"point references unknown witness {witness}")
        points.append(TracePoint(witness, step, stmt, tuple(vs)))
    if pos != end:
        raise CorruptDb("trailing bytes before checksum")
    return TraceDb(digest, max_trace, witnesses, points)


def open_db(path):
    with open(path, "rb") as f:
        return loads(f.read())


def scan(db, filter=None):
    return db.scan(filter)


def _var_text(v):
    text = f"{v.name}:{v.type}={v.value}"
    if v.const:
        text += ",const"
    if v.null:
        text += ",null"
    if v.size is not None:
        text += f",size={v.size}"
    return text


def dump(db):
    """Line-per-point text form, stable for diffing."""
    lines = [f"# bidb version {VERSION} max_trace {db.max_trace} digest {db.digest.hex()}"]
    for wid, args in db.witnesses.items():
        lines.append(f"# witness {wid} {shlex.join(args)}".rstrip())
    for p in db.scan():
        lines.append(" ".join([str(p.witness), str(p.step), str(p.stmt)]
                              + [_var_text(v) for v in p.vars]))
    return "\n".join(lines) + "\n"
