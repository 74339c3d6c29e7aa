"""JSON serialisation of matrices and analysis results.

Matrix schema::

    {"dim": n, "data": [[[re, im], ...], ...]}

Floats are written by ``json`` with ``repr`` precision, so a write/read
round trip is exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .kam import BoundReport, KamResult
from .spectral import SpectralResolution
from .symmetry import ObservableDecomposition


def matrix_to_json(A) -> dict:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return {"dim": int(A.shape[0]), "data": [[[float(z.real), float(z.imag)] for z in row] for row in A]}


def matrix_from_json(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "data" not in obj or "dim" not in obj:
        raise ParseError("matrix object needs 'dim' and 'data' fields")
    dim, rows = obj["dim"], obj["data"]
    if not isinstance(dim, int) or dim < 1:
        raise ParseError(f"field 'dim': expected a positive integer, got {dim!r}")
    if not isinstance(rows, list) or len(rows) != dim:
        raise ParseError(f"field 'data': expected {dim} rows")
    out = np.empty((dim, dim), dtype=np.complex128)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise ParseError(f"data[{i}]: expected {dim} entries (matrix must be square)")
        for j, entry in enumerate(row):
            if isinstance(entry, (int, float)):
                entry = [entry, 0.0]
            if not (isinstance(entry, list) and len(entry) == 2 and all(isinstance(x, (int, float)) for x in entry)):
                raise ParseError(f"data[{i}][{j}]: expected [re, im]")
            re, im = float(entry[0]), float(entry[1])
            if not (math.isfinite(re) and math.isfinite(im)):
                raise ParseError(f"data[{i}][{j}]: non-finite entry")
            out[i, j] = complex(re, im)
    return out


def write_matrix_file(path, A) -> None:
    Path(path).write_text(json.dumps(matrix_to_json(A)))


def parse_matrix_file(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return matrix_from_json(obj)
    except ParseError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _arr(x):
    if x is None:
        return None
    x = np.asarray(x)
    if np.iscomplexobj(x) and x.ndim == 2:
        return matrix_to_json(x)
    return x.tolist() if not np.iscomplexobj(x) else [[float(z.real), float(z.imag)] for z in x.ravel()]


def resolution_to_json(res: SpectralResolution) -> dict:
    return {
        "eigenvalues": _arr(np.asarray(res.eigenvalues)),
        "multiplicities": [int(m) for m in res.multiplicities],
        "gap": float(res.gap),
        "d": int(res.d),
        "dim": int(res.dim),
        "oblique": bool(res.oblique),
        "projections": [matrix_to_json(P) for P in res.projections],
    }


def decomposition_to_json(dec: ObservableDecomposition) -> dict:
    return {
        "noncons": matrix_to_json(dec.noncons),
        "robust": matrix_to_json(dec.robust),
        "fragile": matrix_to_json(dec.fragile),
        "residual": dec.residual,
        "norms": dec.norms(),
    }


def kam_to_json(kr: KamResult) -> dict:
    return {
        "epsilon": kr.epsilon,
        "oblique": kr.oblique,
        "residual_blockdiag": kr.residual_blockdiag,
        "residual_isospectral": kr.residual_isospectral,
        "w_distance": kr.w_distance,
        "V_Z": matrix_to_json(kr.V_Z),
        "V_1": _arr(kr.V_1),
        "K_1": _arr(kr.K_1),
        "K_2": _arr(kr.K_2),
        "W": matrix_to_json(kr.W),
        "V_resummed": matrix_to_json(kr.V_resummed),
    }


def bounds_to_json(b: BoundReport) -> dict:
    return {
        "d": b.d,
        "eta": b.eta,
        "epsilon": b.epsilon,
        "normV": b.normV,
        "zeno_a": b.zeno_a,
        "zeno_b": b.zeno_b,
        "first_order": b.first_order,
        "delta_hat_inf": b.delta_hat_inf,
        "linear_bound": b.linear_bound,
        "validity": b.validity,
        "x0": b.x0,
    }


def dump_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
