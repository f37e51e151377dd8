"""Snapshot, time-series and report persistence.

Snapshot frame format ("OBRG", version 1), all little-endian:

    magic      4 bytes  b"OBRG"
    version    u32
    dim        u32
    n          u32
    L          f64
    t          f64
    nfields    u32
    per field: name_len u32, name utf-8, ncomp u32
    payload:   f64 physical-space values, fields in header order,
               component-major, x index fastest

Snapshots round-trip bit-exactly.  Time series go to CSV with
17-significant-digit decimals (lossless for binary64); reports and
calibration constants go to JSON with sorted keys, so identical content
yields identical bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .dynamics import SimState
from .fields import Grid, PHYSICAL, ScalarField, VectorField
from .norms import TimeSeries

MAGIC = b"OBRG"
VERSION = 1

_HEAD = struct.Struct("<4sIII d d I")
_U32 = struct.Struct("<I")


class SnapshotError(ValueError):
    """Malformed snapshot frame."""


class BadMagicError(SnapshotError):
    pass


class VersionMismatchError(SnapshotError):
    pass


class TruncatedPayloadError(SnapshotError):
    pass


def _field_entries(state: SimState) -> list[tuple[str, list[np.ndarray]]]:
    u = state.u.to_physical()
    return [
        ("u", [c.data for c in u.components]),
        ("theta", [state.theta.to_physical().data]),
        ("phi", [state.phi.to_physical().data]),
    ]


def write_snapshot(state: SimState, path) -> None:
    grid = state.grid
    entries = _field_entries(state)
    parts = [
        _HEAD.pack(MAGIC, VERSION, grid.dim, grid.n, grid.length, state.t, len(entries))
    ]
    for name, comps in entries:
        raw = name.encode("utf-8")
        parts.append(_U32.pack(len(raw)))
        parts.append(raw)
        parts.append(_U32.pack(len(comps)))
    for _, comps in entries:
        for comp in comps:
            parts.append(np.ascontiguousarray(comp, dtype="<f8").tobytes(order="F"))
    try:
        Path(path).write_bytes(b"".join(parts))
    except OSError as exc:
        raise OSError(f"cannot write snapshot {path}: {exc}") from exc


def _take(buf: bytes, offset: int, size: int, what: str) -> tuple[bytes, int]:
    if offset + size > len(buf):
        raise TruncatedPayloadError(
            f"truncated payload reading {what}: expected {offset + size} bytes,"
            f" got {len(buf)}"
        )
    return buf[offset : offset + size], offset + size


def read_snapshot(path) -> SimState:
    buf = Path(path).read_bytes()
    head, offset = _take(buf, 0, _HEAD.size, "header")
    magic, version, dim, n, length, t, nfields = _HEAD.unpack(head)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VersionMismatchError(f"unsupported version {version}, expected {VERSION}")
    grid = Grid(dim=dim, n=n, length=length)

    names: list[tuple[str, int]] = []
    for _ in range(nfields):
        raw, offset = _take(buf, offset, _U32.size, "field name length")
        (name_len,) = _U32.unpack(raw)
        raw, offset = _take(buf, offset, name_len, "field name")
        name = raw.decode("utf-8")
        raw, offset = _take(buf, offset, _U32.size, "component count")
        (ncomp,) = _U32.unpack(raw)
        names.append((name, ncomp))

    ncells = n**dim
    total_comps = sum(nc for _, nc in names)
    expected = offset + 8 * total_comps * ncells
    if len(buf) < expected:
        raise TruncatedPayloadError(
            f"truncated payload: expected {expected} bytes, got {len(buf)}"
        )
    if len(buf) > expected:
        raise SnapshotError(
            f"payload size mismatch: expected {expected} bytes, got {len(buf)}"
        )

    fields: dict[str, list[np.ndarray]] = {}
    for name, ncomp in names:
        comps = []
        for _ in range(ncomp):
            raw, offset = _take(buf, offset, 8 * ncells, f"payload of {name}")
            arr = np.frombuffer(raw, dtype="<f8").reshape(grid.shape, order="F")
            comps.append(arr)
        fields[name] = comps

    for name, ncomp in (("u", dim), ("theta", 1), ("phi", 1)):
        if name not in fields:
            raise SnapshotError(f"snapshot is missing field {name!r}")
        if len(fields[name]) != ncomp:
            raise SnapshotError(
                f"field {name!r} has {len(fields[name])} components, expected {ncomp}"
            )

    u = VectorField.from_arrays(grid, fields["u"], PHYSICAL, zero_mean=True)
    theta = ScalarField(grid, fields["theta"][0], PHYSICAL, zero_mean=True)
    phi = ScalarField(grid, fields["phi"][0], PHYSICAL, zero_mean=True)
    return SimState(u, theta, phi, t)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_timeseries(series: TimeSeries, path) -> None:
    """CSV with header ``t,value``; decimals are lossless for binary64."""
    lines = ["t,value"]
    lines += [f"{_fmt(t)},{_fmt(v)}" for t, v in zip(series.times, series.values)]
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write time series {path}: {exc}") from exc


def import_timeseries(path) -> tuple[np.ndarray, np.ndarray]:
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != "t,value":
        raise ValueError(f"{path}: expected 't,value' header, got {lines[:1]}")
    times, values = [], []
    for ln in lines[1:]:
        t, v = ln.split(",")
        times.append(float(t))
        values.append(float(v))
    return np.asarray(times), np.asarray(values)


def export_envelope(env, path) -> None:
    """CSV columns ``t,observed,envelope,contained`` aligned per sample."""
    lines = ["t,observed,envelope,contained"]
    for t, obs, bound, ok in zip(env.times, env.observed, env.envelope, env.contained):
        lines.append(f"{_fmt(t)},{_fmt(obs)},{_fmt(bound)},{int(ok)}")
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise OSError(f"cannot write envelope {path}: {exc}") from exc


def write_json_document(doc: dict, path) -> None:
    """Sorted-key JSON; identical content produces identical bytes."""
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write document {path}: {exc}") from exc


def read_json_document(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
