"""beta-flatness profiles of critical points of K and their classification.

Near a critical point ``xi`` the curvature is assumed to have the normal form

    K(x) = K(xi) + b1 |x1|^beta + b2 |x2|^beta + b0 |t|^(beta/2)

in a chart centred at ``xi``.  A profile is classified by
``sigma = b1 + b2 + kappa'(beta) b0``: it lies in K1 when ``beta = 2`` and
``sigma < 0``, in K2 when ``beta > 2`` and ``sigma < 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateProfile, DomainError
from .heisenberg import HeisenbergPoint, SpherePoint

BETA_TOL = 1e-12
SIGMA_TOL = 1e-12


class PointSet(str, Enum):
    K1 = "K1"
    K2 = "K2"
    NEITHER = "Neither"


@dataclass(frozen=True)
class CriticalPointProfile:
    """Flatness data of one critical point; ``b = (b1, b2, b0)``."""

    id: str
    position: SpherePoint
    beta: float
    b: tuple[float, float, float]
    k_value: float

    def __post_init__(self):
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        object.__setattr__(self, "k_value", float(self.k_value))
        if len(self.b) != 3:
            raise DomainError("b must be a triple (b1, b2, b0)")

    @property
    def m(self) -> int:
        """Number of negative coefficients among ``b1, b2, b0``."""
        return sum(1 for v in self.b if v < 0)

    @property
    def is_quadratic(self) -> bool:
        return abs(self.beta - 2.0) <= BETA_TOL


@dataclass(frozen=True)
class Violation:
    field: str
    message: str
    margin: float


@dataclass(frozen=True)
class Classification:
    set: PointSet
    sigma: float
    m: int


def check_beta(beta: float) -> None:
    if not (2.0 - BETA_TOL <= beta < 4.0) or not math.isfinite(beta):
        raise DomainError(f"beta must lie in the admissible range [2, 4), got {beta}")


def validate_profile(p: CriticalPointProfile, constants) -> list[Violation]:
    """Every invariant of ``p`` that fails, with its margin; empty when valid.

    ``constants`` must be computed at ``p.beta``.
    """
    check_beta(p.beta)
    if abs(constants.beta - p.beta) > BETA_TOL:
        raise DomainError(f"constants computed at beta={constants.beta}, profile has {p.beta}")
    out = []
    for name, value in zip(("b1", "b2", "b0"), p.b):
        if not math.isfinite(value):
            out.append(Violation(name, f"{name} is not finite", math.nan))
        elif value == 0.0:
            out.append(Violation(name, f"{name} = 0", 0.0))
    b1, b2, b0 = p.b
    for label, kap in (("kappa", constants.kappa), ("kappa_prime", constants.kappa_prime)):
        total = b1 + b2 + kap.value * b0
        if abs(total) <= max(SIGMA_TOL, kap.error * abs(b0)):
            out.append(Violation(f"sum_b_{label}", f"b1 + b2 + {label} b0 = 0", total))
    if not (p.k_value > 0 and math.isfinite(p.k_value)):
        out.append(Violation("k_value", "K must be positive", p.k_value))
    return out


def sigma_of(p: CriticalPointProfile, kappa_prime: float) -> float:
    b1, b2, b0 = p.b
    return b1 + b2 + kappa_prime * b0


def classify_point(p: CriticalPointProfile, constants) -> Classification:
    """Membership in K1 / K2 / neither, ``sigma`` and ``m``.

    Raises :class:`DegenerateProfile` when ``|sigma| < 1e-12``.
    """
    check_beta(p.beta)
    sigma = sigma_of(p, constants.kappa_prime.value)
    if abs(sigma) < SIGMA_TOL:
        raise DegenerateProfile(f"{p.id}: b1 + b2 + kappa' b0 vanishes ({sigma:.3e})")
    if sigma < 0:
        kind = PointSet.K1 if p.is_quadratic else PointSet.K2
    else:
        kind = PointSet.NEITHER
    return Classification(kind, sigma, p.m)


@dataclass(frozen=True)
class LocalField:
    K: float
    grad: np.ndarray
    lapl: float


def local_field_eval(p: CriticalPointProfile, x: HeisenbergPoint | tuple,
                     chart_radius: float = 0.5, include_t: bool = False) -> LocalField:
    """``K``, its coordinate gradient ``(d/dx1, d/dx2, d/dt)`` and Laplacian at chart point ``x``.

    The Laplacian is horizontal, ``d^2/dx1^2 + d^2/dx2^2`` (``2 (b1 + b2)`` at
    ``beta = 2``); ``include_t`` adds ``d^2/dt^2`` of the ``|t|^(beta/2)`` term,
    which is finite away from ``t = 0`` only and is taken as 0 there.
    """
    if isinstance(x, HeisenbergPoint):
        x1, x2, t = x.as_tuple()
    else:
        x1, x2, t = (float(v) for v in x)
    if (x1 * x1 + x2 * x2) ** 2 + t * t > chart_radius**4:
        raise DomainError(f"chart point outside validity radius {chart_radius}")
    beta = p.beta
    b1, b2, b0 = p.b
    hb = beta / 2.0
    ax1, ax2, at = abs(x1), abs(x2), abs(t)
    K = p.k_value + b1 * ax1**beta + b2 * ax2**beta + b0 * at**hb

    def dpow(a, s, e):
        # derivative of |s|^e, zero at s = 0 for e > 1
        return e * a ** (e - 1.0) * math.copysign(1.0, s) if a > 0 else 0.0

    grad = np.array([b1 * dpow(ax1, x1, beta), b2 * dpow(ax2, x2, beta), b0 * dpow(at, t, hb)])

    def d2pow(a, e):
        if e == 2.0:
            return 2.0
        return e * (e - 1.0) * a ** (e - 2.0) if a > 0 else 0.0

    lapl = b1 * d2pow(ax1, beta) + b2 * d2pow(ax2, beta)
    if include_t:
        lapl += b0 * d2pow(at, hb)
    return LocalField(K, grad, lapl)
