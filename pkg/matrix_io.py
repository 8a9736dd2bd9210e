"""
Plain-text matrix and vector files.

First line ``m N field`` with field ``real`` or ``complex``, then m rows of
whitespace-separated entries in row-major order; a complex entry is written as
its real and imaginary parts. Vectors are stored as m x 1 matrices.
"""

import numpy as np

from errors import RejectedInputError
from signals import FIELDS


def read_matrix(path: str) -> np.ndarray:
    with open(path, "r") as f:
        header = f.readline().split()
        body = f.read().split()
    if len(header) != 3:
        raise RejectedInputError(f"{path}: first line must be 'm N field', got {' '.join(header)!r}")
    try:
        m, N = int(header[0]), int(header[1])
    except ValueError as e:
        raise RejectedInputError(f"{path}: bad dimensions in header: {e}") from e
    field = header[2]
    if field not in FIELDS:
        raise RejectedInputError(f"{path}: field must be one of {list(FIELDS)}, got {field!r}")
    if m < 1 or N < 1:
        raise RejectedInputError(f"{path}: dimensions must be positive, got {m}x{N}")

    per_entry = 2 if field == "complex" else 1
    if len(body) != m * N * per_entry:
        raise RejectedInputError(f"{path}: expected {m * N * per_entry} numbers for a {field} {m}x{N} matrix, got {len(body)}")
    try:
        values = np.array(body, dtype=float)
    except ValueError as e:
        raise RejectedInputError(f"{path}: non-numeric entry: {e}") from e
    if field == "complex":
        values = values[0::2] + 1j * values[1::2]
    return np.asfortranarray(values.reshape(m, N))


def read_vector(path: str) -> np.ndarray:
    arr = read_matrix(path)
    if arr.shape[1] != 1:
        raise RejectedInputError(f"{path}: a vector file must have N = 1, got {arr.shape[1]}")
    return np.ascontiguousarray(arr[:, 0])


def write_matrix(path: str, A):
    A = np.asarray(A)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise RejectedInputError(f"can only write 1-D or 2-D arrays, got shape {A.shape}")
    is_complex = np.iscomplexobj(A)
    m, N = A.shape
    with open(path, "w", newline="\n") as f:
        f.write(f"{m} {N} {'complex' if is_complex else 'real'}\n")
        for row in A:
            if is_complex:
                entries = (f"{v.real:.17g} {v.imag:.17g}" for v in row)
            else:
                entries = (f"{v:.17g}" for v in row)
            f.write(" ".join(entries) + "\n")


def write_vector(path: str, y):
    write_matrix(path, np.asarray(y).reshape(-1))
