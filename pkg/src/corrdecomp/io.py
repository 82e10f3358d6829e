"""JSON matrix documents with explicit ``[re, im]`` pairs.

Format::

    {"n": 2, "entries": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "metadata": {...}}

Floats are written with ``repr`` precision by the json module, so a
serialize/parse round trip reproduces every double exactly.
"""

import json

import numpy as np

from .errors import DimensionMismatch, MalformedDocument


def matrix_to_document(M, metadata=None):
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2:
        raise DimensionMismatch("only 2-D matrices can be serialized")
    doc = {
        "n": int(M.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in M],
    }
    if M.shape[0] != M.shape[1]:
        doc["n_cols"] = int(M.shape[1])
    if metadata:
        doc["metadata"] = metadata
    return doc


def dumps_matrix(M, metadata=None):
    return json.dumps(matrix_to_document(M, metadata), indent=None, allow_nan=False)


def write_matrix(path, M, metadata=None):
    with open(path, "w") as fh:
        fh.write(dumps_matrix(M, metadata))
        fh.write("\n")


def document_to_matrix(doc):
    if not isinstance(doc, dict) or "entries" not in doc or "n" not in doc:
        raise MalformedDocument("document needs 'n' and 'entries'")
    n = doc["n"]
    n_cols = doc.get("n_cols", n)
    rows = doc["entries"]
    if not isinstance(n, int) or n <= 0:
        raise MalformedDocument(f"invalid n: {n!r}")
    if not isinstance(rows, list) or len(rows) != n:
        raise DimensionMismatch(f"expected {n} rows, found {len(rows) if isinstance(rows, list) else 'none'}")
    out = np.empty((n, n_cols), dtype=np.complex128)
    for a, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n_cols:
            raise DimensionMismatch(f"row {a} does not have {n_cols} entries")
        for b, pair in enumerate(row):
            if (
                not isinstance(pair, list)
                or len(pair) != 2
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pair)
            ):
                raise MalformedDocument(f"entry ({a}, {b}) is not an [re, im] pair of numbers")
            out[a, b] = complex(float(pair[0]), float(pair[1]))
    if not np.all(np.isfinite(out)):
        raise MalformedDocument("non-finite entry")
    return out


def loads_document(text):
    """Parse a matrix document; returns ``(matrix, metadata)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return document_to_matrix(doc), doc.get("metadata", {})


def loads_matrix(text):
    return loads_document(text)[0]


def load_document(source):
    """``(matrix, metadata)`` from a path or an open text stream."""
    if hasattr(source, "read"):
        return loads_document(source.read())
    with open(source) as fh:
        return loads_document(fh.read())


def parse_matrix_file(source):
    """Read a matrix document from a path or an open text stream.

    Values are taken verbatim; no tolerance or validation is applied here.
    """
    return load_document(source)[0]


def record_to_document(rec):
    return {
        "n": rec.n,
        "seed": rec.seed,
        "shots": rec.shots.tolist(),
        "successes": rec.successes.tolist(),
    }


def document_to_record(doc):
    from .witness import MeasurementRecord

    try:
        return MeasurementRecord(n=int(doc["n"]), shots=doc["shots"], successes=doc["successes"], seed=doc.get("seed"))
    except (KeyError, TypeError) as exc:
        raise MalformedDocument(f"measurement record is missing fields: {exc}") from exc
