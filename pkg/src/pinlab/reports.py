"""Result emission: delimited and JSON files written atomically, each with a
content digest recorded in a run manifest.

Rows are plain dicts; values are written with full-precision reprs so a rerun
with the same config and seed reproduces every output byte for byte (the
replica reductions upstream are fixed-order, so the numbers themselves do not
depend on the worker count).  The manifest is always written last.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, field


def _cell(v) -> str:
    if v is None:
        return ""
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        v = v.item()
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        return v.item()
    return v


def atomic_write_bytes(path: str, data: bytes) -> str:
    """Write via a temp file in the same directory and rename into place;
    returns the sha256 hex digest of the bytes."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(data).hexdigest()


def emit(results, format: str, path: str, columns=None) -> str:
    """Write a result set as CSV (header row, RFC-4180 quoting, CRLF ends)
    or JSON (UTF-8, sorted keys); returns the content digest.

    ``results`` is a list of row dicts for CSV, any JSON-serializable
    structure for JSON.  An empty CSV result set still gets its header row
    when ``columns`` is given.
    """
    if format == "csv":
        rows = list(results)
        cols = list(columns) if columns is not None else (list(rows[0]) if rows else [])
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in cols])
        data = buf.getvalue().encode("utf-8")
    elif format == "json":
        text = json.dumps(_jsonable(results), sort_keys=True, indent=2)
        data = (text + "\n").encode("utf-8")
    else:
        raise ValueError(f"unknown format {format!r}")
    try:
        return atomic_write_bytes(path, data)
    except OSError as e:
        raise OSError(f"{e.strerror or e}: {path}") from e


def read_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def digest_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Echo of the run plus a digest for every file the run emitted."""

    command: str
    config: dict
    version: str
    wall_time_s: float
    cache_hits: int = 0
    outputs: dict = field(default_factory=dict)

    def record(self, path: str, digest: str) -> None:
        self.outputs[os.path.basename(path)] = digest

    def write(self, path: str) -> str:
        payload = {
            "command": self.command,
            "config": _jsonable(self.config),
            "version": self.version,
            "wall_time_s": self.wall_time_s,
            "cache_hits": self.cache_hits,
            "outputs": dict(sorted(self.outputs.items())),
        }
        text = json.dumps(payload, sort_keys=True, indent=2)
        return atomic_write_bytes(path, (text + "\n").encode("utf-8"))


def verify_manifest(out_dir: str, manifest_name: str = "manifest.json") -> bool:
    """Recompute the digest of every file the manifest lists."""
    man = read_json(os.path.join(out_dir, manifest_name))
    for name, digest in man["outputs"].items():
        if digest_file(os.path.join(out_dir, name)) != digest:
            return False
    return True
