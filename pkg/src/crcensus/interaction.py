"""Green kernel on S^3 and the interaction matrices of K1 subsets.

For a subset ``xi_1 .. xi_p`` of K1 the matrix has entries

    M_ss = -c sigma_s / (2 K(xi_s)^2),
    M_st = -c' G(xi_s, xi_t) / sqrt(K(xi_s) K(xi_t)),

with ``sigma = b1 + b2 + kappa'(2) b0`` and ``c' = 2 pi omega3``.  The least
eigenvalue comes from a cyclic Jacobi iteration; an LDL^T elimination backs
the positive-definiteness verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .critical import CriticalPointProfile, PointSet, classify_point, sigma_of
from .errors import DomainError, InternalInconsistency, MarginalCase, SingularityError
from .heisenberg import SpherePoint, cr_distance_sq

COINCIDENT_TOL = 1e-12
PD_MARGIN = 1e-12


@dataclass(frozen=True)
class GreenKernelConfig:
    c_G: float = 1.0

    def __post_init__(self):
        if not (self.c_G > 0 and math.isfinite(self.c_G)):
            raise DomainError(f"c_G must be positive, got {self.c_G}")


@dataclass(frozen=True)
class InteractionMatrix:
    labels: tuple[str, ...]
    entries: np.ndarray
    rho: float


def green_kernel(zeta: SpherePoint, eta: SpherePoint,
                 config: GreenKernelConfig = GreenKernelConfig()) -> float:
    """``c_G / |1 - <zeta, conj(eta)>|``."""
    d = cr_distance_sq(zeta, eta)
    if d < COINCIDENT_TOL:
        raise SingularityError("Green kernel evaluated at coincident points")
    return config.c_G / d


def jacobi_eigenvalues(a, tol: float = 1e-13, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm falls below ``tol`` times
    ``max(1, ||A||_F)``.  Returned in ascending order.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DomainError("matrix must be square")
    if n == 1:
        return a.diagonal().copy()
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)) * 2.0)
        if off < tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                rot_p = a[:, p].copy()
                rot_q = a[:, q].copy()
                a[:, p] = c * rot_p - s * rot_q
                a[:, q] = s * rot_p + c * rot_q
                rot_p = a[p, :].copy()
                rot_q = a[q, :].copy()
                a[p, :] = c * rot_p - s * rot_q
                a[q, :] = s * rot_p + c * rot_q
                a[p, q] = a[q, p] = 0.0
    else:
        raise InternalInconsistency("Jacobi iteration did not converge")
    return np.sort(a.diagonal())


def least_eigenvalue(m) -> float:
    return float(jacobi_eigenvalues(m)[0])


def pivot_positive_definite(m) -> bool:
    """Symmetric LDL^T elimination: PD iff every pivot is positive (Sylvester)."""
    a = np.array(m, dtype=float, copy=True)
    n = a.shape[0]
    for k in range(n):
        piv = a[k, k]
        if not piv > 0:
            return False
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:]) / piv
    return True


def is_positive_definite(m, pd_margin: float = PD_MARGIN, cross_check: bool = True) -> bool:
    """``least_eigenvalue(m) > pd_margin``.

    Raises :class:`MarginalCase` when ``|rho| <= pd_margin`` and
    :class:`InternalInconsistency` if the pivot test disagrees.
    """
    rho = least_eigenvalue(m)
    if abs(rho) <= pd_margin:
        raise MarginalCase(f"least eigenvalue {rho:.3e} within margin {pd_margin:.1e}", rho)
    verdict = rho > pd_margin
    if cross_check and pivot_positive_definite(m) != verdict:
        raise InternalInconsistency(f"pivot test disagrees with eigenvalue {rho:.3e}")
    return verdict


def matrix_entries(profiles: Sequence[CriticalPointProfile], kappa_prime: float, c: float,
                   c_prime: float, config: GreenKernelConfig = GreenKernelConfig()) -> np.ndarray:
    p = len(profiles)
    out = np.empty((p, p))
    for s, ps in enumerate(profiles):
        out[s, s] = -c * sigma_of(ps, kappa_prime) / (2.0 * ps.k_value**2)
        for t in range(s + 1, p):
            pt = profiles[t]
            g = green_kernel(ps.position, pt.position, config)
            out[s, t] = out[t, s] = -c_prime * g / math.sqrt(ps.k_value * pt.k_value)
    return out


def assemble_matrix(subset: Sequence[CriticalPointProfile], constants,
                    config: GreenKernelConfig = GreenKernelConfig()) -> InteractionMatrix:
    """Interaction matrix of a K1 subset; ``constants`` computed at beta = 2."""
    if abs(constants.beta - 2.0) > 1e-12:
        raise DomainError("interaction matrices use constants at beta = 2")
    for prof in subset:
        if classify_point(prof, constants).set is not PointSet.K1:
            raise DomainError(f"{prof.id} is not in K1")
    entries = matrix_entries(subset, constants.kappa_prime.value, constants.c.value,
                             constants.c_prime.value, config)
    return InteractionMatrix(tuple(p.id for p in subset), entries, least_eigenvalue(entries))
