"""Shared on-disk layouts for square matrices and tagged array bundles.

Text matrix documents::

    # tabinhibit-matrix v1
    # {"dim": 126, "kind": "cooccurrence", ...}
    [values f8]
    <dim rows of repr() floats>
    [counts i8]
    <dim rows of integers>

Binary documents start with an 8-byte magic, then a little-endian uint32
header length, a UTF-8 JSON header describing every array (name, dtype,
shape), and finally the arrays back to back in little-endian order.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

TEXT_MAGIC = "# tabinhibit-matrix v1"
MATRIX_MAGIC = b"TABMAT1\n"

_DTYPES = {"f8": "<f8", "i8": "<i8"}


class FormatError(ValueError):
    """A persisted document could not be decoded."""


def _header_json(header: dict) -> str:
    return json.dumps(header, sort_keys=True)


def dumps_text(header: dict, arrays: dict[str, np.ndarray]) -> str:
    lines = [TEXT_MAGIC, "# " + _header_json(header)]
    for name, arr in arrays.items():
        if arr.ndim != 2 or 0 in arr.shape:
            raise ValueError(f"text documents hold non-empty 2-D arrays; {name!r} has shape {arr.shape}")
        code = "f8" if arr.dtype.kind == "f" else "i8"
        lines.append(f"[{name} {code}]")
        if code == "f8":
            fmt = lambda v: repr(float(v))  # noqa: E731
        else:
            fmt = lambda v: str(int(v))  # noqa: E731
        for row in arr:
            lines.append(" ".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def loads_text(text: str) -> tuple[dict, dict[str, np.ndarray]]:
    lines = text.splitlines()
    if len(lines) < 2 or lines[0] != TEXT_MAGIC or not lines[1].startswith("# "):
        raise FormatError("not a tabinhibit text matrix document")
    try:
        header = json.loads(lines[1][2:])
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad header: {exc}") from None
    arrays, name, code, rows = {}, None, None, []

    def flush():
        if name is None:
            return
        kind = float if code == "f8" else int
        try:
            arrays[name] = np.array([[kind(v) for v in row] for row in rows],
                                    dtype=np.float64 if kind is float else np.int64)
        except ValueError as exc:
            raise FormatError(f"section {name!r}: {exc}") from None

    for ln in lines[2:]:
        if ln.startswith("[") and ln.endswith("]"):
            flush()
            parts = ln[1:-1].split()
            if len(parts) != 2 or parts[1] not in _DTYPES:
                raise FormatError(f"bad section line {ln!r}")
            (name, code), rows = parts, []
        elif ln.strip():
            if name is None:
                raise FormatError("data before first section")
            rows.append(ln.split())
    flush()
    return header, arrays


def dumps_binary(header: dict, arrays: dict[str, np.ndarray], magic: bytes = MATRIX_MAGIC) -> bytes:
    specs, blobs = [], []
    for name, arr in arrays.items():
        code = "f8" if arr.dtype.kind == "f" else "i8"
        data = np.ascontiguousarray(arr, dtype=_DTYPES[code])
        specs.append({"name": name, "dtype": code, "shape": list(arr.shape)})
        blobs.append(data.tobytes())
    head = _header_json({"meta": header, "arrays": specs}).encode("utf-8")
    return magic + struct.pack("<I", len(head)) + head + b"".join(blobs)


def loads_binary(blob: bytes, magic: bytes = MATRIX_MAGIC) -> tuple[dict, dict[str, np.ndarray]]:
    if not blob.startswith(magic):
        raise FormatError("bad magic")
    pos = len(magic)
    if len(blob) < pos + 4:
        raise FormatError("truncated header")
    (hlen,) = struct.unpack_from("<I", blob, pos)
    pos += 4
    try:
        head = json.loads(blob[pos:pos + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad header: {exc}") from None
    pos += hlen
    arrays = {}
    for spec in head["arrays"]:
        dtype = np.dtype(_DTYPES[spec["dtype"]])
        shape = tuple(spec["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        if pos + nbytes > len(blob):
            raise FormatError(f"truncated array {spec['name']!r}")
        arr = np.frombuffer(blob, dtype=dtype, count=nbytes // dtype.itemsize, offset=pos)
        arrays[spec["name"]] = arr.reshape(shape).astype(dtype.newbyteorder("="))
        pos += nbytes
    if pos != len(blob):
        raise FormatError("trailing bytes after last array")
    return head["meta"], arrays


def is_binary_path(path) -> bool:
    return Path(path).suffix in (".bin", ".tabm", ".ckpt")


def save(path, header: dict, arrays: dict[str, np.ndarray], binary: bool | None = None):
    path = Path(path)
    if binary is None:
        binary = is_binary_path(path)
    if binary:
        path.write_bytes(dumps_binary(header, arrays))
    else:
        path.write_text(dumps_text(header, arrays), encoding="utf-8")


def load(path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    raw = path.read_bytes()
    if raw.startswith(MATRIX_MAGIC):
        return loads_binary(raw)
    return loads_text(raw.decode("utf-8"))
