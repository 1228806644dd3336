"""Truncated spectral-triple data for the circle and the 2-sphere.

Circle: modes n = -L..L, D = diag(n), U the (compressed, hence nilpotent)
shift |n> -> |n+1>.

Sphere: spinor basis |l, m>_s with l = 1/2, 3/2, ..., L - 1/2, m = -l..l and
sign s = -/+, ordered s-block major (all s=- first), within a block ascending
l then ascending m.  On this basis

    D |l,m>_s     = s (l + 1/2) |l,m>_s
    gamma |l,m>_s = |l,m>_-s

and the coordinate generators act as band (laddering) matrices

    a |l,m>_s = - sqrt((l+m+1)(l-m)) / (2l(l+1))    |l, m+1>_-s
                + sqrt((l+m+1)(l+m+2)) / (2(l+1))   |l+1, m+1>_s
                - sqrt((l-m)(l-m-1)) / (2l)         |l-1, m+1>_s

    b |l,m>_s =   m / (2l(l+1))                     |l, m>_-s
                + sqrt((l-m+1)(l+m+1)) / (2(l+1))   |l+1, m>_s
                + sqrt((l-m)(l+m)) / (2l)           |l-1, m>_s

with transitions out of the retained l-range dropped (the compression
P a P, the source of all boundary defects; nothing is smoothed).  a and b
represent multiplication operators, so they commute away from the top
multiplet, b = b*, and b^2 + (a a* + a* a)/4 = 1 holds in the interior.

The embedding field used by the Heisenberg defect is

    Y = [[b, a*/2], [a/2, -b]],

normalized and oriented so that the fiberwise trace <Y [D,Y] [D,Y]> equals
gamma exactly on interior multiplets (unit Heisenberg scalar).
"""

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix


def truncation_dims(model, cutoff):
    """Carrier dimension of a truncation: 2L+1 (circle) or 2L(L+1) (sphere)."""
    _check_cutoff(cutoff)
    if model == "circle":
        return 2 * cutoff + 1
    if model == "sphere":
        return 2 * cutoff * (cutoff + 1)
    raise ValueError(f"unknown model {model!r}")


def _check_cutoff(cutoff):
    if not isinstance(cutoff, (int, np.integer)) or cutoff < 1:
        raise ValueError(f"cutoff must be a positive integer, got {cutoff!r}")


@dataclass(frozen=True)
class CircleTriple:
    cutoff: int
    modes: tuple            # (-L, ..., L)
    U: np.ndarray
    D: np.ndarray

    @property
    def dim(self):
        return 2 * self.cutoff + 1


def build_circle(cutoff):
    """Truncated circle triple: D = diag(n), U the sub-diagonal shift."""
    _check_cutoff(cutoff)
    modes = tuple(range(-cutoff, cutoff + 1))
    dim = len(modes)
    D = np.diag(np.array(modes, dtype=complex))
    U = np.zeros((dim, dim), dtype=complex)
    for i in range(dim - 1):
        U[i + 1, i] = 1.0          # |n> -> |n+1>, top mode mapped to 0
    return CircleTriple(cutoff=cutoff, modes=modes, U=U, D=D)


def circle_real_structure(cutoff):
    """The matrix R of the antiunitary J = R . conj, (Jv)_n = conj(v_{-n})."""
    dim = 2 * cutoff + 1
    return np.eye(dim, dtype=complex)[::-1]


@dataclass(frozen=True)
class SphereTriple:
    cutoff: int
    basis: tuple            # ordered (l, m, s) labels, s in {-1, +1}
    a: np.ndarray
    b: np.ndarray
    gamma: np.ndarray
    D: np.ndarray

    @property
    def dim(self):
        return 2 * self.cutoff * (self.cutoff + 1)

    @property
    def Y(self):
        """Embedding field on the doubled carrier, [[b, a*/2], [a/2, -b]]."""
        return np.block([[self.b, self.a.conj().T / 2],
                         [self.a / 2, -self.b]])

    def top_projection(self):
        """Diagonal projection onto the highest-|l| multiplets (both signs)."""
        ltop = self.cutoff - 0.5
        diag = [1.0 if abs(l - ltop) < 1e-9 else 0.0 for (l, m, s) in self.basis]
        return np.diag(np.array(diag, dtype=complex))

    def eigen_projection(self, lam):
        """Projection onto the D-eigenspace of eigenvalue lam (signed)."""
        diag = [1.0 if abs(s * (l + 0.5) - lam) < 1e-9 else 0.0
                for (l, m, s) in self.basis]
        return np.diag(np.array(diag, dtype=complex))


def sphere_basis(cutoff):
    basis = []
    for s in (-1, +1):
        for twol in range(1, 2 * cutoff, 2):
            l = twol / 2
            for twom in range(-twol, twol + 1, 2):
                basis.append((l, twom / 2, s))
    return tuple(basis)


def build_sphere(cutoff):
    """Truncated sphere triple on the (l, m, s) spinor basis."""
    _check_cutoff(cutoff)
    basis = sphere_basis(cutoff)
    index = {label: i for i, label in enumerate(basis)}
    dim = len(basis)
    a = np.zeros((dim, dim), dtype=complex)
    b = np.zeros((dim, dim), dtype=complex)
    gamma = np.zeros((dim, dim), dtype=complex)
    D = np.zeros((dim, dim), dtype=complex)

    for (l, m, s), j in index.items():
        D[j, j] = s * (l + 0.5)
        gamma[index[(l, m, -s)], j] = 1.0

        # a: raises m by one, couples l-1, l, l+1
        c_spin = -np.sqrt((l + m + 1) * (l - m)) / (2 * l * (l + 1))
        c_up = np.sqrt((l + m + 1) * (l + m + 2)) / (2 * (l + 1))
        c_down = -np.sqrt((l - m) * (l - m - 1)) / (2 * l)
        if (l, m + 1, -s) in index:
            a[index[(l, m + 1, -s)], j] += c_spin
        if (l + 1, m + 1, s) in index:
            a[index[(l + 1, m + 1, s)], j] += c_up
        if (l - 1, m + 1, s) in index:
            a[index[(l - 1, m + 1, s)], j] += c_down

        # b: preserves m, couples l-1, l, l+1
        d_spin = m / (2 * l * (l + 1))
        d_up = np.sqrt((l - m + 1) * (l + m + 1)) / (2 * (l + 1))
        d_down = np.sqrt((l - m) * (l + m)) / (2 * l)
        b[index[(l, m, -s)], j] += d_spin
        if (l + 1, m, s) in index:
            b[index[(l + 1, m, s)], j] += d_up
        if (l - 1, m, s) in index:
            b[index[(l - 1, m, s)], j] += d_down

    return SphereTriple(cutoff=cutoff, basis=basis, a=a, b=b, gamma=gamma, D=D)


def coordinate_components(t):
    """Coordinate matrices (Y1, Y2, Y3) on the sphere carrier.

    Y3 = b and Y1 -/+ i Y2 = a*/2, a/2 (so Y1 = (a + a*)/4 etc.); the same
    factor-2 convention as the embedding field Y.
    """
    a, b = t.a, t.b
    y1 = (a + a.conj().T) / 4
    y2 = (a - a.conj().T) / 4j
    return y1, y2, as_matrix(b)
