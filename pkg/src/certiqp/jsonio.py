"""JSON problem formats consumed by the command-line interface.

Box QP:    {"n": int, "H": [[...]], "h": [...], "l": [...]?, "u": [...]?}
Strict QP: {"Q": [[...]], "q": [...], "G": [[...]], "g": [...], "rho": [...]}
Lasso:     {"A": [[...]], "b": [...], "lambda": float}
SVM:       {"X": [[...]] | "gram": [[...]], "y": [...], "rho": float,
            "kernel": {"type": "linear"|"rbf", "sigma": float}?}

Shape problems raise ValueError with a message naming the offending field.
"""
from __future__ import annotations

from typing import Any

import numpy as np

from .problem import BoxQP
from .transforms import (
    GenBoxRecovery,
    LassoProblem,
    StrictQP,
    SvmProblem,
    genbox_to_unitbox,
    linear_gram,
    rbf_gram,
)

__all__ = ["load_boxqp", "load_strict_qp", "load_lasso", "load_svm"]


def _matrix(obj: dict, key: str, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    try:
        m = np.asarray(obj[key], dtype=float)
    except KeyError:
        raise ValueError(f"missing field {key!r}")
    except (TypeError, ValueError):
        raise ValueError(f"field {key!r} is not a numeric matrix")
    if m.ndim != 2:
        raise ValueError(f"field {key!r} must be a list of rows")
    if rows is not None and m.shape[0] != rows:
        raise ValueError(f"field {key!r} must have {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ValueError(f"field {key!r} must have {cols} columns, got {m.shape[1]}")
    return m


def _vector(obj: dict, key: str, length: int | None = None) -> np.ndarray:
    try:
        v = np.asarray(obj[key], dtype=float)
    except KeyError:
        raise ValueError(f"missing field {key!r}")
    except (TypeError, ValueError):
        raise ValueError(f"field {key!r} is not a numeric vector")
    if v.ndim != 1:
        raise ValueError(f"field {key!r} must be a flat list")
    if length is not None and v.shape[0] != length:
        raise ValueError(f"field {key!r} must have length {length}, got {v.shape[0]}")
    return v


def load_boxqp(obj: dict[str, Any]) -> tuple[BoxQP, GenBoxRecovery | None]:
    """Parse a box QP; general bounds l/u are rescaled onto the unit box."""
    if not isinstance(obj, dict):
        raise ValueError("top-level JSON value must be an object")
    try:
        n = int(obj["n"])
    except (KeyError, TypeError, ValueError):
        raise ValueError("missing or non-integer field 'n'")
    H = _matrix(obj, "H", n, n)
    h = _vector(obj, "h", n)
    if ("l" in obj) != ("u" in obj):
        raise ValueError("fields 'l' and 'u' must be given together")
    if "l" in obj:
        l = _vector(obj, "l", n)
        u = _vector(obj, "u", n)
        return genbox_to_unitbox(H, h, l, u)
    return BoxQP(H=H, h=h), None


def load_strict_qp(obj: dict[str, Any]) -> StrictQP:
    Q = _matrix(obj, "Q")
    ny = Q.shape[0]
    q = _vector(obj, "q", ny)
    G = _matrix(obj, "G", None, ny)
    ng = G.shape[0]
    return StrictQP(Q=Q, q=q, G=G, g=_vector(obj, "g", ng), rho=_vector(obj, "rho", ng))


def load_lasso(obj: dict[str, Any]) -> LassoProblem:
    A = _matrix(obj, "A")
    b = _vector(obj, "b", A.shape[0])
    try:
        lam = float(obj["lambda"])
    except (KeyError, TypeError, ValueError):
        raise ValueError("missing or non-numeric field 'lambda'")
    return LassoProblem(A=A, b=b, lam=lam)


def load_svm(obj: dict[str, Any]) -> SvmProblem:
    y = _vector(obj, "y")
    m = y.shape[0]
    try:
        rho = float(obj["rho"])
    except (KeyError, TypeError, ValueError):
        raise ValueError("missing or non-numeric field 'rho'")
    if "gram" in obj:
        gram = _matrix(obj, "gram", m, m)
    elif "X" in obj:
        x = _matrix(obj, "X", m, None)
        kernel = obj.get("kernel", {"type": "linear"})
        ktype = kernel.get("type", "linear")
        if ktype == "linear":
            gram = linear_gram(x)
        elif ktype == "rbf":
            try:
                sigma = float(kernel["sigma"])
            except (KeyError, TypeError, ValueError):
                raise ValueError("rbf kernel needs a numeric 'sigma'")
            gram = rbf_gram(x, sigma)
        else:
            raise ValueError(f"unknown kernel type {ktype!r}")
    else:
        raise ValueError("need either 'X' or 'gram'")
    return SvmProblem(labels=y, gram=gram, rho_svm=rho)
