"""Binary batch/dataset files and JSON reports.

A file is one line of JSON (the header, starting with magic ``LWEHG1``)
followed by ``m`` rows of little-endian float64: the ``n`` coordinates of
``x`` then the label. Writes go to a temporary file that is renamed into
place.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from typing import Union

import numpy as np

from .dataset import LabeledDataset
from .errors import FormatError
from .lwe import LweBatch, secret_hash

MAGIC = "LWEHG1"
REQUIRED = ("magic", "record", "n", "m", "kind", "modulus", "marginal_convention",
            "provenance", "secret_hash")


def atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    umask = os.umask(0)
    os.umask(umask)
    try:
        os.fchmod(fd, 0o666 & ~umask)
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def file_sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _secret_list(secret):
    return None if secret is None else [float(v) for v in np.asarray(secret, dtype=float)]


def _encode(header: dict, x: np.ndarray, y: np.ndarray) -> bytes:
    rows = np.empty((x.shape[0], x.shape[1] + 1), dtype="<f8")
    rows[:, :-1] = x
    rows[:, -1] = y
    return (canonical_json(header) + "\n").encode("utf-8") + rows.tobytes()


def _batch_convention(batch: LweBatch) -> str:
    stages = [p.get("stage") for p in batch.provenance]
    return "rho-one" if "gaussianize" in stages else "other"


def write_batch(path: str, batch: LweBatch) -> None:
    header = {
        "magic": MAGIC, "record": "lwe-batch", "n": batch.n, "m": batch.m, "kind": "lwe",
        "modulus": float(batch.modulus), "marginal_convention": _batch_convention(batch),
        "provenance": batch.provenance, "secret_hash": secret_hash(batch.planted_secret),
        "hypothesis": batch.hypothesis.value, "secret": _secret_list(batch.planted_secret),
        "secret_norm": batch.secret_norm,
    }
    atomic_write(path, _encode(header, batch.x, batch.y))


def write_dataset(path: str, ds: LabeledDataset) -> None:
    header = {
        "magic": MAGIC, "record": "dataset", "n": ds.n, "m": ds.m, "kind": ds.kind,
        "modulus": ds.period, "marginal_convention": ds.marginal_convention,
        "provenance": ds.provenance, "secret_hash": secret_hash(ds.secret),
        "hypothesis": ds.hypothesis, "secret": _secret_list(ds.secret),
    }
    atomic_write(path, _encode(header, ds.x, ds.labels))


def read_header(data: bytes) -> tuple[dict, int]:
    nl = data.find(b"\n")
    if nl < 0:
        raise FormatError("missing header line terminator", len(data))
    if not data.startswith(b'{"'):
        raise FormatError("not a JSON header", 0)
    try:
        header = json.loads(data[:nl].decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise FormatError("header is not UTF-8", exc.start) from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed header JSON: {exc.msg}", exc.pos) from exc
    if not isinstance(header, dict) or header.get("magic") != MAGIC:
        raise FormatError(f"bad magic (expected {MAGIC})", 0)
    missing = [k for k in REQUIRED if k not in header]
    if missing:
        raise FormatError(f"header lacks fields {missing}", 0)
    return header, nl + 1


def read_file(path: str) -> Union[LweBatch, LabeledDataset]:
    """Read a batch or dataset file, validating header and body length."""
    with open(path, "rb") as fh:
        data = fh.read()
    header, start = read_header(data)
    try:
        n, m = int(header["n"]), int(header["m"])
    except (TypeError, ValueError) as exc:
        raise FormatError("n and m must be integers", 0) from exc
    if n < 1 or m < 0:
        raise FormatError("n must be >= 1 and m >= 0", 0)
    expected = m * (n + 1) * 8
    body = len(data) - start
    if body < expected:
        raise FormatError(f"truncated body: {body} of {expected} bytes", start + body)
    if body > expected:
        raise FormatError(f"trailing bytes after {expected}-byte body", start + expected)
    rows = np.frombuffer(data, dtype="<f8", count=m * (n + 1), offset=start).reshape(m, n + 1)
    x, y = rows[:, :-1].astype(float), rows[:, -1].astype(float)
    secret = None if header.get("secret") is None else np.asarray(header["secret"], dtype=float)
    if header["record"] == "lwe-batch":
        return LweBatch(x, y, header.get("hypothesis", "alternative"), float(header["modulus"]),
                        secret, header.get("secret_norm"), list(header["provenance"]))
    if header["record"] == "dataset":
        period = header["modulus"]
        return LabeledDataset(x, y, header["kind"], header["marginal_convention"],
                              list(header["provenance"]), secret, header.get("hypothesis"),
                              None if period is None else float(period))
    raise FormatError(f"unknown record type {header['record']!r}", 0)


def write_report(path: str, report: dict) -> None:
    atomic_write(path, (json.dumps(report, sort_keys=True, indent=2) + "\n").encode("utf-8"))
