import numpy as np
import pytest

from ncglab import triples
from ncglab.linalg import anticommutator, commutator
from ncglab.triples import (build_circle, build_sphere,
                            circle_real_structure, coordinate_components,
                            sphere_basis, truncation_dims)


class TestDims:
    def test_circle(self):
        assert truncation_dims("circle", 10) == 21

    def test_sphere(self):
        assert truncation_dims("sphere", 4) == 40

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            truncation_dims("torus", 3)

    @pytest.mark.parametrize("bad", [0, -1, 2.5, "3"])
    def test_bad_cutoff(self, bad):
        with pytest.raises(ValueError):
            truncation_dims("circle", bad)


class TestCircle:
    def test_d_diagonal_modes(self, circle10):
        assert np.all(np.diag(circle10.D).real == np.arange(-10, 11))

    def test_u_shift(self, circle10):
        v = np.zeros(21)
        v[0] = 1.0                       # mode -10
        assert np.argmax(np.abs(circle10.U @ v)) == 1

    def test_u_nilpotent_top(self, circle10):
        v = np.zeros(21)
        v[-1] = 1.0                      # top mode annihilated
        assert np.all(circle10.U @ v == 0)

    def test_u_partial_isometry(self, circle10):
        p = circle10.U.conj().T @ circle10.U
        expect = np.eye(21)
        expect[-1, -1] = 0
        assert np.all(p == expect)

    def test_real_structure_is_mode_flip(self):
        r = circle_real_structure(3)
        v = np.arange(7) + 1j * np.arange(7)
        jv = r @ np.conj(v)
        assert np.all(jv == np.conj(v[::-1]))

    def test_real_structure_squares_to_one(self):
        r = circle_real_structure(4)
        # J^2 = (R conj)^2 = R conj(R) conj = R R for real R
        assert np.all(r @ r == np.eye(9))

    def test_d_flips_under_mode_reversal(self, circle10):
        r = circle_real_structure(10)
        assert np.all(r @ np.conj(circle10.D) @ r == -circle10.D)


class TestSphereBasis:
    def test_ordering_block_major(self):
        basis = sphere_basis(2)
        assert len(basis) == 12
        assert basis[0] == (0.5, -0.5, -1)
        assert all(s == -1 for (_, _, s) in basis[:6])
        assert all(s == +1 for (_, _, s) in basis[6:])

    def test_l_range(self):
        ls = {l for (l, m, s) in sphere_basis(3)}
        assert ls == {0.5, 1.5, 2.5}


class TestSphereOperators:
    def test_d_eigenvalues(self, sphere3):
        diag = np.diag(sphere3.D).real
        expect = [s * (l + 0.5) for (l, m, s) in sphere3.basis]
        assert np.allclose(diag, expect)

    def test_gamma_swaps_sign_blocks(self, sphere3):
        g = sphere3.gamma
        assert np.allclose(g @ g, np.eye(sphere3.dim))
        assert np.allclose(g, g.conj().T)
        assert np.allclose(anticommutator(sphere3.D, g), 0)

    def test_b_hermitian(self, sphere3):
        assert np.max(np.abs(sphere3.b - sphere3.b.conj().T)) < 1e-12

    def _interior(self, t):
        p = np.eye(t.dim) - t.top_projection()
        return p

    def test_coordinates_commute_interior(self, sphere4):
        p = self._interior(sphere4)
        c = commutator(sphere4.a, sphere4.b)
        assert np.max(np.abs(p @ c @ p)) < 1e-12

    def test_a_raises_m_by_one(self, sphere3):
        basis = sphere3.basis
        nz = np.argwhere(np.abs(sphere3.a) > 1e-14)
        for i, j in nz:
            assert basis[i][1] == basis[j][1] + 1
            assert abs(basis[i][0] - basis[j][0]) <= 1

    def test_b_preserves_m(self, sphere3):
        basis = sphere3.basis
        nz = np.argwhere(np.abs(sphere3.b) > 1e-14)
        for i, j in nz:
            assert basis[i][1] == basis[j][1]

    def test_coordinates_gamma_even(self, sphere3):
        g = sphere3.gamma
        for y in coordinate_components(sphere3):
            assert np.max(np.abs(commutator(g, y))) < 1e-12

    def test_y_hermitian_odd(self, sphere3):
        y = sphere3.Y
        n = sphere3.dim
        assert np.max(np.abs(y - y.conj().T)) < 1e-12
        # off-diagonal blocks are a/2 and its adjoint
        assert np.allclose(y[:n, n:], sphere3.a.conj().T / 2)

    def test_projections(self, sphere3):
        top = sphere3.top_projection()
        assert np.trace(top).real == pytest.approx(2 * (2 * 3))  # 2 * 2l+1
        e3 = sphere3.eigen_projection(3.0)
        assert np.trace(e3).real == pytest.approx(2 * 3)
        assert np.allclose(sphere3.D @ e3, 3.0 * e3)
