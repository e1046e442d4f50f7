"""Atomic CSV/JSON writers and the run manifest.

Data files depend only on the config and the package version, so repeated
runs give byte-identical files; only the manifest carries timestamps.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from datetime import datetime, timezone

import numpy as np

from . import __version__

CSV_FORMAT = "%.12g"


def _atomic_write(path, data):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, columns):
    """Write equal-length ``columns`` under a one-line comma-separated header."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    if len(cols) != len(header):
        raise ValueError("one header name per column")
    if len({c.size for c in cols}) > 1:
        raise ValueError("columns differ in length")
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(CSV_FORMAT % v for v in row))
    _atomic_write(path, ("\n".join(lines) + "\n").encode("ascii"))


def read_csv(path):
    """Return ``(header, array)`` of a file written by :func:`write_csv`."""
    with open(path, encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def write_json(path, obj):
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True)
    _atomic_write(path, (text + "\n").encode("utf-8"))


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir, command, config_text, outputs, started, status="ok", errors=()):
    """Write ``manifest.json`` with config echo, version, timestamps and checksums."""
    manifest = {
        "command": command,
        "version": __version__,
        "started": started,
        "finished": now(),
        "status": status,
        "errors": list(errors),
        "config": config_text,
        "outputs": {os.path.basename(p): sha256(p) for p in outputs},
    }
    path = os.path.join(out_dir, "manifest.json")
    write_json(path, manifest)
    return path
