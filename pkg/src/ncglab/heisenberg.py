"""Truncated higher Heisenberg defects and first-order-condition defects.

Circle:  delta = U* [d, U] - 1, constraint ||delta||_2^2.
Sphere:  delta = <Y [d, Y] [d, Y]> - kappa gamma on the spinor carrier,
         with d lifted diagonally to the doubled carrier of Y.

With the calibrated embedding field of the triples module the interior
Heisenberg scalar is exactly 1, so the default kappa is 1 and the truncated
defect of the round sphere Dirac is the boundary term

    -(1 + L)(1 + 4L) / (2 (1 + 2L)^2) (E_L + E_-L) gamma.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import linalg
from .linalg import DimensionMismatchError, commutator, schatten_norm
from .triples import coordinate_components

DEFAULT_KAPPA = 1.0


@dataclass
class DefectReport:
    defect: np.ndarray
    constraint: float          # squared Hilbert-Schmidt norm
    norms: dict                # {"p1": ..., "p2": ..., "pinf": ...}
    model: str
    cutoff: int
    kappa: float = None        # sphere only
    meta: dict = None

    @classmethod
    def from_defect(cls, defect, model, cutoff, kappa=None, meta=None):
        norms = {
            "p1": schatten_norm(defect, 1),
            "p2": schatten_norm(defect, 2),
            "pinf": schatten_norm(defect, np.inf),
        }
        return cls(defect=defect, constraint=norms["p2"] ** 2, norms=norms,
                   model=model, cutoff=cutoff, kappa=kappa, meta=meta or {})


def _check_dirac(t, d):
    d = linalg.as_matrix(d)
    if d.shape[0] != t.dim:
        raise DimensionMismatchError(
            f"Dirac candidate has dim {d.shape[0]}, triple carrier has {t.dim}")
    return d


def circle_defect(t, d, adjoint=True):
    """Defect of the truncated circle relation for a Hermitian candidate d.

    The exact relation is U*[D, U] = 1; with adjoint=False the literal
    truncated display U [D, U] - 1 is evaluated instead (for comparison,
    see the non-adjoint flag on the CLI).
    """
    d = _check_dirac(t, d)
    left = t.U.conj().T if adjoint else t.U
    defect = left @ commutator(d, t.U) - np.eye(t.dim)
    return DefectReport.from_defect(defect, "circle", t.cutoff,
                                    meta={"adjoint": adjoint,
                                          "mode_order": "ascending"})


def circle_energy(t):
    """Constraint functional d -> ||U*[d,U] - 1||_2^2, cheap inner loop form."""
    ustar = t.U.conj().T
    U = t.U
    eye = np.eye(t.dim)

    def energy(d):
        defect = ustar @ (d @ U - U @ d) - eye
        return float(np.linalg.norm(defect) ** 2)

    return energy


def sphere_defect(t, d, kappa=DEFAULT_KAPPA):
    """Heisenberg defect <Y [d,Y] [d,Y]> - kappa gamma of a Hermitian d."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    d = _check_dirac(t, d)
    defect = _sphere_defect_matrix(t.Y, t.gamma, d, kappa)
    return DefectReport.from_defect(defect, "sphere", t.cutoff, kappa=kappa,
                                    meta={"basis_order": "s-block major, ascending l, m"})


def _sphere_defect_matrix(Y, gamma, d, kappa):
    n = d.shape[0]
    dlift = np.zeros((2 * n, 2 * n), dtype=complex)
    dlift[:n, :n] = d
    dlift[n:, n:] = d
    C = dlift @ Y - Y @ dlift
    M = Y @ C @ C
    return M[:n, :n] + M[n:, n:] - kappa * gamma


def sphere_energy(t, kappa=DEFAULT_KAPPA):
    """Constraint functional d -> ||<Y[d,Y][d,Y]> - kappa gamma||_2^2."""
    Y = t.Y
    gamma = t.gamma

    def energy(d):
        return float(np.linalg.norm(_sphere_defect_matrix(Y, gamma, d, kappa)) ** 2)

    return energy


def truncated_sphere_defect_coefficient(lam):
    """Boundary coefficient -(1+L)(1+4L)/(2(1+2L)^2) of the round-sphere defect."""
    if lam < 1 or lam != int(lam):
        raise ValueError(f"lambda must be a positive integer, got {lam!r}")
    return -(1 + lam) * (1 + 4 * lam) / (2 * (1 + 2 * lam) ** 2)


def calibrate_kappa(cutoff=4):
    """Interior Heisenberg scalar: the multiple of gamma that <Y[D,Y][D,Y]>
    takes on interior eigenspaces of the round sphere.  Equals 1 for the
    calibrated Y convention; recorded in run manifests."""
    from .triples import build_sphere

    t = build_sphere(cutoff)
    raw = _sphere_defect_matrix(t.Y, t.gamma, t.D, kappa=0.0)
    interior = np.eye(t.dim) - t.top_projection()
    num = interior @ raw @ interior
    den = interior @ t.gamma @ interior
    mask = np.abs(den) > 0.5
    vals = (num[mask] / den[mask]).real
    if np.ptp(vals) > 1e-10:
        raise RuntimeError("interior defect is not a scalar multiple of gamma")
    return float(np.mean(vals))


def first_order_defect(t, d, i, j):
    """First-order-condition defect [[d, Y_i], Y_j] on the sphere carrier.

    i, j in {1, 2, 3} index the coordinate components (Y3 = b, Y1 -/+ iY2
    = a*/2, a/2; factor-2 convention recorded in the report metadata).
    """
    d = _check_dirac(t, d)
    if i not in (1, 2, 3) or j not in (1, 2, 3):
        raise ValueError("component indices must be in 1..3")
    ys = coordinate_components(t)
    defect = commutator(commutator(d, ys[i - 1]), ys[j - 1])
    return DefectReport.from_defect(defect, "sphere", t.cutoff,
                                    meta={"first_order": [i, j],
                                          "convention": "Y1+iY2 = a/2, Y3 = b"})


def export_heatmap(report, path):
    """CSV dump of the defect: real, imaginary and absolute-value grids.

    Layout: '# key,value' metadata lines, then for each part a '# part: ...'
    marker followed by dim rows of dim comma-separated values.
    """
    m = report.defect
    dim = m.shape[0]
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            meta = {"model": report.model, "cutoff": report.cutoff,
                    "dim": dim, "constraint": repr(report.constraint)}
            if report.kappa is not None:
                meta["kappa"] = repr(report.kappa)
            meta.update(report.meta or {})
            for key, val in meta.items():
                fh.write(f"# {key},{val}\n")
            for part, grid in (("real", m.real), ("imag", m.imag), ("abs", np.abs(m))):
                w.writerow([f"# part: {part}"])
                for row in grid:
                    w.writerow([repr(float(x)) for x in row])
    except OSError as exc:
        raise OSError(f"failed to write heatmap to {path}: {exc}") from exc


def read_heatmap(path):
    """Read back an export_heatmap CSV: (meta dict, {part: dim x dim array})."""
    meta = {}
    grids = {}
    current = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# part: "):
                if current is not None:
                    grids[current] = np.array(rows, dtype=float)
                current = line[len("# part: "):]
                rows = []
            elif line.startswith("# "):
                key, _, val = line[2:].partition(",")
                meta[key] = val
            else:
                rows.append([float(x) for x in line.split(",")])
    if current is not None:
        grids[current] = np.array(rows, dtype=float)
    return meta, grids
