import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import interaction_entries, symmetric_eigenvalues_closed_form

from crcensus.critical import CriticalPointProfile
from crcensus.errors import DomainError, MarginalCase, SingularityError
from crcensus.heisenberg import (HeisenbergPoint, SpherePoint, cayley_forward, cayley_inverse,
                                 koranyi_norm)
from crcensus.interaction import (GreenKernelConfig, assemble_matrix, green_kernel,
                                  is_positive_definite, jacobi_eigenvalues, least_eigenvalue,
                                  matrix_entries, pivot_positive_definite)


def random_sphere(rng):
    v = rng.normal(size=4)
    return SpherePoint(complex(v[0], v[1]), complex(v[2], v[3]))


def random_k1(rng, n):
    return [CriticalPointProfile(f"p{i}", random_sphere(rng), 2.0, tuple(-rng.uniform(1, 20, 3)),
                                 rng.uniform(0.5, 2.0)) for i in range(n)]


class TestGreenKernel:
    def test_symmetric_and_positive(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            a, b = random_sphere(rng), random_sphere(rng)
            g = green_kernel(a, b)
            assert g > 0 and g == pytest.approx(green_kernel(b, a), rel=1e-15)

    def test_coincident(self):
        p = SpherePoint(0.6, 0.8j)
        with pytest.raises(SingularityError):
            green_kernel(p, p)

    def test_config_validation(self):
        for bad in (0.0, -1.0, math.inf):
            with pytest.raises(DomainError):
                GreenKernelConfig(bad)

    def test_inverse_square_along_great_circle(self):
        zeta = SpherePoint(0.6, 0.8j)
        ortho = SpherePoint(0.8j, 0.6)
        ds, gs = [], []
        for s in np.geomspace(1e-5, 1e-2, 8):
            eta = SpherePoint(math.cos(s) * zeta.zeta1 + math.sin(s) * ortho.zeta1,
                              math.cos(s) * zeta.zeta2 + math.sin(s) * ortho.zeta2)
            ds.append(math.dist([zeta.zeta1.real, zeta.zeta1.imag, zeta.zeta2.real, zeta.zeta2.imag],
                                [eta.zeta1.real, eta.zeta1.imag, eta.zeta2.real, eta.zeta2.imag]))
            gs.append(green_kernel(zeta, eta, GreenKernelConfig(2.5)))
        slope = np.polyfit(np.log(ds), np.log(gs), 1)[0]
        assert slope == pytest.approx(-2.0, abs=1e-3)

    def test_transported_to_heisenberg(self):
        rng = np.random.default_rng(2)
        cfg = GreenKernelConfig(1.7)
        for _ in range(500):
            g = HeisenbergPoint(complex(*rng.normal(size=2)), rng.normal())
            h = HeisenbergPoint(complex(*rng.normal(size=2)), rng.normal())
            zeta, eta = cayley_inverse(g), cayley_inverse(h)
            lhs = green_kernel(zeta, eta, cfg) * 0.5 * abs(1 + zeta.zeta2) * abs(1 + eta.zeta2)
            assert lhs == pytest.approx(cfg.c_G / koranyi_norm(g.inverse() * h) ** 2, rel=1e-10)
            assert cayley_forward(zeta).t == pytest.approx(g.t, abs=1e-12)


class TestEigenvalues:
    def test_examples(self):
        assert least_eigenvalue(np.diag([1.0, 2.0])) == 1.0
        assert least_eigenvalue([[2.0, 1.0], [1.0, 2.0]]) == pytest.approx(1.0, abs=1e-15)

    def test_against_closed_form(self):
        rng = np.random.default_rng(4)
        for _ in range(2000):
            n = int(rng.integers(1, 4))
            a = rng.normal(size=(n, n)) * rng.choice([1e-3, 1, 1e3])
            a = a + a.T
            ref = symmetric_eigenvalues_closed_form(a)
            got = jacobi_eigenvalues(a)
            assert np.allclose(got, ref, rtol=0, atol=1e-10 * max(1, np.abs(a).max()))

    def test_larger_matrices_against_library(self):
        rng = np.random.default_rng(6)
        for n in (4, 7, 10):
            a = rng.normal(size=(n, n))
            a = a + a.T
            assert np.allclose(jacobi_eigenvalues(a), np.linalg.eigvalsh(a), atol=1e-12)

    def test_deterministic(self):
        a = np.array([[1.0, 0.3, -0.2], [0.3, 2.0, 0.5], [-0.2, 0.5, 0.1]])
        assert least_eigenvalue(a) == least_eigenvalue(a.copy())

    def test_non_square(self):
        with pytest.raises(DomainError):
            jacobi_eigenvalues(np.ones((2, 3)))


class TestPositiveDefinite:
    def test_examples(self):
        assert is_positive_definite(np.eye(3))
        assert not is_positive_definite([[1.0, 2.0], [2.0, 1.0]])

    def test_marginal(self):
        with pytest.raises(MarginalCase) as info:
            is_positive_definite([[1.0, 1.0], [1.0, 1.0]])
        assert abs(info.value.rho) <= 1e-12

    def test_pivot_agrees_outside_band(self):
        rng = np.random.default_rng(8)
        for _ in range(10_000):
            n = int(rng.integers(1, 4))
            a = rng.normal(size=(n, n))
            a = a @ a.T - rng.uniform(0, 1.5) * np.eye(n)
            rho = least_eigenvalue(a)
            if abs(rho) <= 1e-12:
                continue
            assert pivot_positive_definite(a) == (rho > 1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 6), st.integers(0, 2**32 - 1))
    def test_principal_submatrices_of_pd(self, n, seed):
        rng = np.random.default_rng(seed)
        b = rng.normal(size=(n, n))
        a = b @ b.T + 0.1 * np.eye(n)
        for k in range(1, n + 1):
            idx = np.sort(rng.choice(n, size=k, replace=False))
            assert is_positive_definite(a[np.ix_(idx, idx)])


class TestAssemble:
    def test_entries_match_formula(self, c2):
        rng = np.random.default_rng(10)
        pts = random_k1(rng, 4)
        kp, c, cp = c2.kappa_prime.value, c2.c.value, c2.c_prime.value
        m = assemble_matrix(pts, c2, GreenKernelConfig(0.7))
        ref = interaction_entries(pts, kp, c, cp, 0.7)
        assert np.allclose(m.entries, ref, rtol=1e-14, atol=0)
        assert np.max(np.abs(m.entries - m.entries.T)) <= 1e-14
        assert m.labels == ("p0", "p1", "p2", "p3")
        assert m.rho == pytest.approx(np.linalg.eigvalsh(ref)[0], abs=1e-10)

    def test_singleton(self, c2):
        p = CriticalPointProfile("a", SpherePoint(0, 1), 2.0, (-1, -1, -1), 1.0)
        m = assemble_matrix([p], c2)
        expected = c2.c.value * (2 + c2.kappa_prime.value) / 2
        assert m.entries[0, 0] == pytest.approx(expected, rel=1e-15) and m.rho > 0

    def test_far_pair_is_pd(self, c2):
        pts = [CriticalPointProfile("n", SpherePoint(1, 0), 2.0, (-50, -50, -50), 1.0),
               CriticalPointProfile("s", SpherePoint(-1, 0), 2.0, (-50, -50, -50), 1.0)]
        m = assemble_matrix(pts, c2)
        assert m.rho > 0

    def test_near_pair_is_not_pd(self, c2):
        pts = [CriticalPointProfile("a", SpherePoint(0, 1), 2.0, (-1, -1, -1), 1.0),
               CriticalPointProfile("b", SpherePoint(1e-3, 1), 2.0, (-1, -1, -1), 1.0)]
        m = assemble_matrix(pts, c2)
        d = m.entries[0, 0]
        assert m.entries[0, 1] ** 2 > d * d and m.rho < 0

    def test_rejects_non_k1(self, c2, constants):
        p = CriticalPointProfile("a", SpherePoint(0, 1), 2.0, (1, 1, 1), 1.0)
        with pytest.raises(DomainError):
            assemble_matrix([p], c2)
        with pytest.raises(DomainError):
            assemble_matrix([p], constants[3.0])

    def test_duplicate_positions(self, c2):
        pts = [CriticalPointProfile(i, SpherePoint(0, 1), 2.0, (-1, -1, -1), 1.0) for i in "ab"]
        with pytest.raises(SingularityError):
            assemble_matrix(pts, c2)

    def test_permutation_equivariance(self, c2):
        rng = np.random.default_rng(12)
        for _ in range(50):
            pts = random_k1(rng, int(rng.integers(2, 6)))
            perm = rng.permutation(len(pts))
            a = assemble_matrix(pts, c2)
            b = assemble_matrix([pts[i] for i in perm], c2)
            assert np.array_equal(b.entries, a.entries[np.ix_(perm, perm)])
            assert abs(a.rho - b.rho) <= 1e-13 * max(1.0, abs(a.rho))

    def test_rho_non_increasing_in_c_G(self, c2):
        rng = np.random.default_rng(14)
        kp, c, cp = c2.kappa_prime.value, c2.c.value, c2.c_prime.value
        for _ in range(30):
            pts = random_k1(rng, int(rng.integers(2, 6)))
            rhos = [least_eigenvalue(matrix_entries(pts, kp, c, cp, GreenKernelConfig(g)))
                    for g in np.geomspace(0.1, 10, 15)]
            assert all(b <= a + 1e-10 * abs(a) for a, b in zip(rhos, rhos[1:]))

    def test_pair_rho_closed_form(self, c2):
        rng = np.random.default_rng(16)
        kp, c, cp = c2.kappa_prime.value, c2.c.value, c2.c_prime.value
        pts = random_k1(rng, 2)
        for cg in (0.5, 1.0, 3.0):
            m = matrix_entries(pts, kp, c, cp, GreenKernelConfig(cg))
            d1, d2, g = m[0, 0], m[1, 1], -m[0, 1]
            exact = 0.5 * (d1 + d2) - math.hypot(0.5 * (d1 - d2), g)
            assert least_eigenvalue(m) == pytest.approx(exact, rel=1e-12)
