"""JSON state files.

    {"dims": [2, 2], "kind": "pure",  "amplitudes": [[re, im], ...]}
    {"dims": [2, 2], "kind": "mixed", "matrix": [[re, im], ...]}   # row-major

``kind: "operator"`` marks a general (e.g. Hamiltonian or unnormalized) matrix;
``"normalized": false`` may accompany ``mixed``.  Extra keys are preserved on
read in ``meta``.  Floats are written with repr, i.e. 17 significant digits.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import StateFileError, TildeLabError
from .qstate import DensityOperator, HilbertDims, PureState

_KNOWN = {"dims", "kind", "amplitudes", "matrix", "normalized"}


def _pairs(z) -> list:
    z = np.asarray(z, dtype=complex).ravel()
    return [[float(x.real), float(x.imag)] for x in z]


def state_to_dict(state, **meta) -> dict:
    if isinstance(state, PureState):
        doc = {"dims": list(state.dims.dims), "kind": "pure", "amplitudes": _pairs(state.amp)}
    elif isinstance(state, DensityOperator):
        doc = {"dims": list(state.dims.dims), "kind": "mixed", "matrix": _pairs(state.mat)}
        if not state.normalized:
            doc["normalized"] = False
    else:
        raise TypeError(f"cannot serialize {type(state).__name__}")
    doc.update(meta)
    return doc


def operator_to_dict(dims, mat, **meta) -> dict:
    doc = {"dims": list(dims), "kind": "operator", "matrix": _pairs(mat)}
    doc.update(meta)
    return doc


def write_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def write_state(state, path, **meta) -> None:
    write_json(state_to_dict(state, **meta), path)


def _load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise StateFileError(f"{path}: cannot read ({e.strerror})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise StateFileError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise StateFileError(f"{path}: top level must be an object")
    return doc


def _field(doc, name, path):
    if name not in doc:
        raise StateFileError(f"{path}: missing field '{name}'")
    return doc[name]


def _complex_array(doc, name, n, path) -> np.ndarray:
    raw = _field(doc, name, path)
    if not isinstance(raw, list):
        raise StateFileError(f"{path}: field '{name}' must be an array of [re, im] pairs")
    if len(raw) != n:
        raise StateFileError(f"{path}: field '{name}' has {len(raw)} entries, expected {n}")
    out = np.empty(n, dtype=complex)
    for i, p in enumerate(raw):
        if (not isinstance(p, list) or len(p) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in p)):
            raise StateFileError(f"{path}: field '{name}' entry {i} is not a [re, im] pair")
        out[i] = complex(p[0], p[1])
    return out


def _dims(doc, path) -> HilbertDims:
    raw = _field(doc, "dims", path)
    if not isinstance(raw, list) or not all(isinstance(d, int) and not isinstance(d, bool)
                                            for d in raw):
        raise StateFileError(f"{path}: field 'dims' must be an integer array")
    try:
        return HilbertDims(raw)
    except TildeLabError as e:
        raise type(e)(f"{path}: field 'dims': {e}") from None


def read_state(path):
    """Load a pure or mixed state; returns ``(state, meta)``."""
    doc = _load(path)
    dims = _dims(doc, path)
    kind = _field(doc, "kind", path)
    n = dims.total_dim
    meta = {k: v for k, v in doc.items() if k not in _KNOWN}
    if kind == "pure":
        return PureState(dims, _complex_array(doc, "amplitudes", n, path)), meta
    if kind in ("mixed", "operator"):
        mat = _complex_array(doc, "matrix", n * n, path).reshape(n, n)
        normalized = bool(doc.get("normalized", kind == "mixed"))
        return DensityOperator(dims, mat, normalized=normalized), meta
    raise StateFileError(f"{path}: field 'kind' must be 'pure' or 'mixed', got {kind!r}")


def read_operator(path) -> tuple[HilbertDims, np.ndarray]:
    """Load a matrix file (``kind`` operator or mixed) such as a Hamiltonian."""
    doc = _load(path)
    dims = _dims(doc, path)
    kind = _field(doc, "kind", path)
    if kind not in ("operator", "mixed"):
        raise StateFileError(f"{path}: expected an operator file, got kind {kind!r}")
    n = dims.total_dim
    return dims, _complex_array(doc, "matrix", n * n, path).reshape(n, n)
