"""Plain-text complex matrix format.

One matrix per file: first line "N M", then N*M lines "re im" in row-major
order. Round-trips complex128 exactly (17 significant digits). Used to
inject synthetic (F, G) pairs without the OFDM front end and to dump
built channels for audit.
"""

import numpy as np


class MatrixFormatError(ValueError):
    """The file does not follow the documented matrix layout."""


def save_matrix(path, matrix):
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    n, m = matrix.shape
    with open(path, "w") as fh:
        fh.write(f"{n} {m}\n")
        for value in matrix.ravel(order="C"):
            fh.write(f"{value.real:.17g} {value.imag:.17g}\n")


def load_matrix(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise MatrixFormatError(
                f"{path}: expected header 'N M', got {header!r}")
        try:
            n, m = int(header[0]), int(header[1])
        except ValueError as exc:
            raise MatrixFormatError(f"{path}: non-integer header") from exc
        if n < 1 or m < 1:
            raise MatrixFormatError(f"{path}: bad dimensions {n} x {m}")
        values = np.empty(n * m, dtype=complex)
        for idx in range(n * m):
            line = fh.readline()
            if not line:
                raise MatrixFormatError(
                    f"{path}: expected {n * m} entries, file ended at "
                    f"entry {idx}")
            parts = line.split()
            if len(parts) != 2:
                raise MatrixFormatError(
                    f"{path}: entry {idx} should be 're im', got "
                    f"{line.strip()!r}")
            try:
                values[idx] = float(parts[0]) + 1j * float(parts[1])
            except ValueError as exc:
                raise MatrixFormatError(
                    f"{path}: entry {idx} is not numeric") from exc
        trailing = fh.readline()
        if trailing.strip():
            raise MatrixFormatError(f"{path}: trailing data after entry "
                                    f"{n * m - 1}")
    return values.reshape(n, m)


def load_channel_pair(f_path, g_path):
    """Load a synthetic (F, G) pair, enforcing matching square shapes."""
    f_mat = load_matrix(f_path)
    g_mat = load_matrix(g_path)
    if f_mat.shape != g_mat.shape or f_mat.shape[0] != f_mat.shape[1]:
        raise MatrixFormatError(
            f"F {f_mat.shape} and G {g_mat.shape} must be square and equal")
    return f_mat, g_mat
