"""Binary on-disk formats.

Element files ("PONQ") store one record per generator: position, mean
normal, optimal vertex, upper-triangular quadric coefficients, linear and
constant terms, and the supporting sample count, all little-endian float64 /
uint64 for bit-exact round trips.  Sample files ("PNQS") store oriented
points the same way.  A JSON dump of element files exists for debugging.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import FileFormatError
from .fitting import PoNQElement
from .quadric import Quadric
from .sampling import SampleSet

PONQ_MAGIC = b"PONQ"
SAMPLES_MAGIC = b"PNQS"
VERSION = 1

FLAG_NORMALIZED = 1 << 0
FLAG_OPEN = 1 << 1

_HEADER = struct.Struct("<4sIQI")

_ELEMENT_DTYPE = np.dtype([
    ("p", "<f8", 3),
    ("n", "<f8", 3),
    ("v_star", "<f8", 3),
    ("A", "<f8", 6),          # upper triangle: a00 a01 a02 a11 a12 a22
    ("b", "<f8", 3),
    ("c", "<f8"),
    ("sample_count", "<u8"),
])

_SAMPLE_DTYPE = np.dtype([
    ("position", "<f8", 3),
    ("normal", "<f8", 3),
])

PSD_TOL = 1e-9


def _pack_upper(A: np.ndarray) -> np.ndarray:
    return np.array([A[0, 0], A[0, 1], A[0, 2], A[1, 1], A[1, 2], A[2, 2]])


def _unpack_upper(u) -> np.ndarray:
    return np.array([[u[0], u[1], u[2]],
                     [u[1], u[3], u[4]],
                     [u[2], u[4], u[5]]])


def write_ponq(path, elements: list[PoNQElement], normalized: bool = False,
               open_fit: bool = False) -> None:
    flags = (FLAG_NORMALIZED if normalized else 0) | (FLAG_OPEN if open_fit else 0)
    records = np.empty(len(elements), dtype=_ELEMENT_DTYPE)
    for i, e in enumerate(elements):
        records[i] = (e.p, e.n, e.v_star, _pack_upper(e.q.A), e.q.b, e.q.c,
                      e.sample_count)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(PONQ_MAGIC, VERSION, len(elements), flags))
        fh.write(records.tobytes())


def read_ponq(path) -> tuple[list[PoNQElement], dict]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise FileFormatError(f"{path}: truncated header")
    magic, version, count, flags = _HEADER.unpack_from(data)
    if magic != PONQ_MAGIC:
        raise FileFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FileFormatError(f"{path}: unsupported version {version}")
    payload = data[_HEADER.size:]
    if len(payload) != count * _ELEMENT_DTYPE.itemsize:
        raise FileFormatError(
            f"{path}: payload is {len(payload)} bytes, expected "
            f"{count * _ELEMENT_DTYPE.itemsize}")
    records = np.frombuffer(payload, dtype=_ELEMENT_DTYPE)

    elements = []
    for rec in records:
        A = _unpack_upper(rec["A"])
        eigs = np.linalg.eigvalsh(A)
        if eigs[0] < -PSD_TOL * max(1.0, abs(eigs[-1])):
            raise FileFormatError(f"{path}: quadric matrix is not PSD "
                                  f"(min eigenvalue {eigs[0]!r})")
        elements.append(PoNQElement(
            p=np.array(rec["p"]), n=np.array(rec["n"]),
            q=Quadric(A, np.array(rec["b"]), float(rec["c"])),
            v_star=np.array(rec["v_star"]),
            sample_count=int(rec["sample_count"]),
        ))
    return elements, {
        "normalized": bool(flags & FLAG_NORMALIZED),
        "open": bool(flags & FLAG_OPEN),
    }


def dump_ponq_json(path, elements: list[PoNQElement], flags: dict) -> None:
    """Readable sidecar of an element file (debugging aid, lossy for exact
    binary round-trips only in the textual sense: repr floats round-trip)."""
    doc = {
        "version": VERSION,
        "normalized": bool(flags.get("normalized", False)),
        "open": bool(flags.get("open", False)),
        "elements": [
            {
                "p": e.p.tolist(),
                "n": e.n.tolist(),
                "v_star": e.v_star.tolist(),
                "A_upper": _pack_upper(e.q.A).tolist(),
                "b": e.q.b.tolist(),
                "c": e.q.c,
                "sample_count": e.sample_count,
            }
            for e in elements
        ],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def write_samples(path, samples: SampleSet, open_fit: bool = False) -> None:
    flags = FLAG_OPEN if open_fit else 0
    records = np.empty(len(samples), dtype=_SAMPLE_DTYPE)
    records["position"] = samples.positions
    records["normal"] = samples.normals
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SAMPLES_MAGIC, VERSION, len(samples), flags))
        fh.write(records.tobytes())


def read_samples(path) -> tuple[SampleSet, dict]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise FileFormatError(f"{path}: truncated header")
    magic, version, count, flags = _HEADER.unpack_from(data)
    if magic != SAMPLES_MAGIC:
        raise FileFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FileFormatError(f"{path}: unsupported version {version}")
    payload = data[_HEADER.size:]
    if len(payload) != count * _SAMPLE_DTYPE.itemsize:
        raise FileFormatError(f"{path}: payload length mismatch")
    records = np.frombuffer(payload, dtype=_SAMPLE_DTYPE)
    samples = SampleSet(records["position"].copy(), records["normal"].copy())
    return samples, {"open": bool(flags & FLAG_OPEN)}
