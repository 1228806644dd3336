"""Dense complex linear algebra shared by all modules.

Matrices are plain square complex numpy arrays; everything here is a pure
function of its inputs.
"""

import json
import struct

import numpy as np

HERMITICITY_TOL = 1e-8

_MAGIC = b"NCGM"


class DimensionMismatchError(ValueError):
    pass


class NonHermitianError(ValueError):
    def __init__(self, asymmetry):
        self.asymmetry = asymmetry
        super().__init__(f"matrix is not Hermitian: ||a - a*||_inf = {asymmetry:.3e}")


def as_matrix(a):
    """Validate a as a finite square complex matrix and return it."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def commutator(a, b):
    """Return ab - ba."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a @ b - b @ a


def anticommutator(a, b):
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a @ b + b @ a


def schatten_norm(a, p):
    """Schatten p-norm for p in {1, 2, inf}.

    p=2 is the Hilbert-Schmidt norm sqrt(tr a*a); p=1 sums the singular
    values; p=inf is the largest singular value.
    """
    a = as_matrix(a)
    if p == 2:
        return float(np.linalg.norm(a))
    s = np.linalg.svd(a, compute_uv=False)
    if p == 1:
        return float(np.sum(s))
    if p == np.inf or p == "inf":
        return float(s[0]) if len(s) else 0.0
    raise ValueError(f"unsupported Schatten order {p!r}")


def hermitian_eigen(a, tol=HERMITICITY_TOL):
    """Eigendecomposition a = V diag(w) V* with w ascending.

    Rejects input whose asymmetry ||a - a*||_inf exceeds tol: annealing
    candidates are constructed Hermitian, so larger asymmetry is a bug.
    """
    a = as_matrix(a)
    asym = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if asym > tol:
        raise NonHermitianError(asym)
    w, v = np.linalg.eigh(a)
    return w, v


def spectrum(a, tol=HERMITICITY_TOL):
    """Ascending real spectrum of a Hermitian matrix."""
    return hermitian_eigen(a, tol)[0]


def block_trace2(m):
    """Trace over the outer 2x2 (Clifford) index of a 2x2 block matrix.

    m may be given as [[A, B], [C, E]] (list of lists of equal-dim square
    matrices) or as a single 2n x 2n array; returns A + E.
    """
    if isinstance(m, np.ndarray):
        m = as_matrix(m)
        if m.shape[0] % 2:
            raise DimensionMismatchError("2x2 block matrix must have even dimension")
        n = m.shape[0] // 2
        return m[:n, :n] + m[n:, n:]
    (a, b), (c, e) = m
    blocks = [as_matrix(x) for x in (a, b, c, e)]
    if len({x.shape for x in blocks}) != 1:
        raise DimensionMismatchError("all four blocks must share one dimension")
    return blocks[0] + blocks[3]


# -- serialization ----------------------------------------------------------
#
# JSON: {"dim": n, "entries": [[re, im], ...]} row-major.
# Binary: 16-byte header (magic "NCGM", u32 dim little-endian, 8 bytes pad)
# followed by dim^2 * 2 little-endian float64 (re, im interleaved).


def matrix_to_json(a):
    a = as_matrix(a)
    flat = a.reshape(-1)
    return {"dim": a.shape[0], "entries": [[z.real, z.imag] for z in flat]}


def matrix_from_json(obj):
    dim = int(obj["dim"])
    ent = np.asarray(obj["entries"], dtype=float)
    if ent.shape != (dim * dim, 2):
        raise ValueError(f"expected {dim * dim} [re, im] pairs, got shape {ent.shape}")
    return (ent[:, 0] + 1j * ent[:, 1]).reshape(dim, dim)


def save_matrix(a, path):
    """Write a matrix to path: JSON for .json, raw binary otherwise."""
    a = as_matrix(a)
    path = str(path)
    if path.endswith(".json"):
        with open(path, "w") as fh:
            json.dump(matrix_to_json(a), fh)
    else:
        dim = a.shape[0]
        header = _MAGIC + struct.pack("<I", dim) + b"\0" * 8
        body = np.empty((dim * dim, 2), dtype="<f8")
        flat = a.reshape(-1)
        body[:, 0] = flat.real
        body[:, 1] = flat.imag
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(body.tobytes())


def load_matrix(path):
    """Read a matrix written by save_matrix; accepts both formats."""
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head == _MAGIC:
            dim = struct.unpack("<I", fh.read(4))[0]
            fh.read(8)
            body = np.frombuffer(fh.read(dim * dim * 16), dtype="<f8").reshape(-1, 2)
            if body.shape[0] != dim * dim:
                raise ValueError("truncated binary matrix file")
            return (body[:, 0] + 1j * body[:, 1]).reshape(dim, dim)
        rest = head + fh.read()
    return matrix_from_json(json.loads(rest.decode()))
