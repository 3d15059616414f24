"""Geometry of the Heisenberg group H^1 and of the CR sphere S^3.

Group law ``(z, t) . (z', t') = (z + z', t + t' + 2 Im(z conj(z')))``, Koranyi
norm, dilations, the Cayley correspondence between ``S^3 minus (0, -1)`` and
H^1, the Jerison-Lee bubbles and a frame-aligned finite-difference sublaplacian.

The Cayley pair used here is

    F(zeta)    = (zeta1 / (1 + zeta2), 2 Im zeta2 / |1 + zeta2|^2)
    F^-1(z, t) = (2 z / (1 + |z|^2 - i t), (1 - |z|^2 + i t) / (1 + |z|^2 - i t))

which round-trips exactly.  With this pair ``w_(0,1)(F(zeta)) = c0 |1 + zeta2| / 2``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import DomainError, NumericalInconsistency, PoleError

POLE_TOL = 1e-12


@dataclass(frozen=True)
class HeisenbergPoint:
    """A point ``(z, t)`` of H^1; ``x1 = Re z``, ``x2 = Im z``."""

    z: complex = 0j
    t: float = 0.0

    def __post_init__(self):
        z = complex(self.z)
        t = float(self.t)
        if not (math.isfinite(z.real) and math.isfinite(z.imag) and math.isfinite(t)):
            raise DomainError(f"non-finite Heisenberg point ({z}, {t})")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "t", t)

    @property
    def x1(self) -> float:
        return self.z.real

    @property
    def x2(self) -> float:
        return self.z.imag

    def inverse(self) -> "HeisenbergPoint":
        return HeisenbergPoint(-self.z, -self.t)

    def __mul__(self, other: "HeisenbergPoint") -> "HeisenbergPoint":
        return group_mul(self, other)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x1, self.x2, self.t)


IDENTITY = HeisenbergPoint(0j, 0.0)


@dataclass(frozen=True)
class SpherePoint:
    """A point of the unit sphere S^3 in C^2, renormalised on construction."""

    zeta1: complex
    zeta2: complex

    def __post_init__(self):
        z1, z2 = complex(self.zeta1), complex(self.zeta2)
        norm = math.hypot(abs(z1), abs(z2))
        if not math.isfinite(norm) or norm == 0.0:
            raise DomainError("sphere point needs a finite nonzero vector")
        object.__setattr__(self, "zeta1", z1 / norm)
        object.__setattr__(self, "zeta2", z2 / norm)

    def as_array(self) -> np.ndarray:
        return np.array([self.zeta1, self.zeta2], dtype=complex)


NORTH = SpherePoint(0j, 1 + 0j)


@dataclass(frozen=True)
class BubbleParams:
    """Center and concentration ``lambda`` of a bubble on H^1 or on S^3."""

    center: HeisenbergPoint | SpherePoint
    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not lam > 0 or not math.isfinite(lam):
            raise DomainError(f"bubble concentration must be positive, got {self.lam}")
        object.__setattr__(self, "lam", lam)


# -- group structure ---------------------------------------------------------

def group_mul(g: HeisenbergPoint, h: HeisenbergPoint) -> HeisenbergPoint:
    return HeisenbergPoint(g.z + h.z, g.t + h.t + 2.0 * (g.z * h.z.conjugate()).imag)


def koranyi_norm(g: HeisenbergPoint) -> float:
    """``(|z|^4 + t^2)^(1/4)``, computed without forming ``|z|^4``."""
    return math.sqrt(math.hypot(abs(g.z) ** 2, g.t))


def dilate(lam: float, g: HeisenbergPoint) -> HeisenbergPoint:
    if not lam > 0:
        raise DomainError(f"dilation factor must be positive, got {lam}")
    return HeisenbergPoint(lam * g.z, lam * lam * g.t)


def mul_arrays(z, t, zp, tp):
    """Vectorised group law on arrays of coordinates."""
    return z + zp, t + tp + 2.0 * np.imag(z * np.conj(zp))


# -- Cayley correspondence ---------------------------------------------------

def cayley_forward(zeta: SpherePoint) -> HeisenbergPoint:
    """Map ``S^3 minus (0, -1)`` onto H^1."""
    one_plus = 1.0 + zeta.zeta2
    # on the sphere |zeta1|^2 <= 2 |1 + zeta2|, so this is a distance-to-pole test
    if abs(one_plus) < POLE_TOL:
        raise PoleError("Cayley transform is undefined at (0, -1)")
    return HeisenbergPoint(zeta.zeta1 / one_plus, 2.0 * zeta.zeta2.imag / abs(one_plus) ** 2)


def cayley_inverse(g: HeisenbergPoint) -> SpherePoint:
    den = 1.0 + abs(g.z) ** 2 - 1j * g.t
    return SpherePoint(2.0 * g.z / den, (1.0 - abs(g.z) ** 2 + 1j * g.t) / den)


def cayley_forward_arrays(zeta1, zeta2):
    one_plus = 1.0 + zeta2
    return zeta1 / one_plus, 2.0 * np.imag(zeta2) / np.abs(one_plus) ** 2


def cayley_inverse_arrays(z, t):
    den = 1.0 + np.abs(z) ** 2 - 1j * t
    return 2.0 * z / den, (1.0 - np.abs(z) ** 2 + 1j * t) / den


def cr_distance_sq(zeta: SpherePoint, eta: SpherePoint) -> float:
    """The gauge ``|1 - <zeta, conj(eta)>|`` on S^3 (a squared distance)."""
    inner = zeta.zeta1 * eta.zeta1.conjugate() + zeta.zeta2 * eta.zeta2.conjugate()
    return abs(1.0 - inner)


def rotation_to(center: SpherePoint) -> np.ndarray:
    """Unitary ``U`` with ``U (0, 1) = center``; preserves the CR gauge."""
    c1, c2 = center.zeta1, center.zeta2
    return np.array([[c2.conjugate(), c1], [-c1.conjugate(), c2]], dtype=complex)


def chart_to_sphere(center: SpherePoint, a: HeisenbergPoint) -> SpherePoint:
    """Sphere point with chart coordinates ``a`` in the Cayley chart centred at ``center``."""
    local = cayley_inverse(a).as_array()
    z1, z2 = rotation_to(center) @ local
    return SpherePoint(z1, z2)


def sphere_to_chart(center: SpherePoint, zeta: SpherePoint) -> HeisenbergPoint:
    z1, z2 = rotation_to(center).conj().T @ zeta.as_array()
    return cayley_forward(SpherePoint(z1, z2))


# -- bubbles -----------------------------------------------------------------

def bubble_w(params: BubbleParams, g: HeisenbergPoint, c0: float | None = None) -> float:
    """Translated and dilated Jerison-Lee bubble ``w_(g0, lambda)`` at ``g``."""
    if c0 is None:
        c0 = math.sqrt(c0_squared().value)
    g0, lam = params.center, params.lam
    if not isinstance(g0, HeisenbergPoint):
        raise DomainError("bubble_w needs a Heisenberg-group center")
    dz = g.z - g0.z
    phase = g.t - g0.t - 2.0 * (g0.z * g.z.conjugate()).imag
    return c0 * lam / abs(1.0 + lam * lam * abs(dz) ** 2 - 1j * lam * lam * phase)


def bubble_w_arrays(z, t, center: HeisenbergPoint, lam: float, c0: float):
    dz = z - center.z
    phase = t - center.t - 2.0 * np.imag(center.z * np.conj(z))
    return c0 * lam / np.abs(1.0 + lam * lam * np.abs(dz) ** 2 - 1j * lam * lam * phase)


def sphere_bubble(params: BubbleParams, zeta: SpherePoint, c0: float | None = None) -> float:
    """``delta_(zeta0, lambda)(zeta) = |1 + zeta2|^-1 w_(F(zeta0), lambda)(F(zeta))``."""
    center = params.center
    if not isinstance(center, SpherePoint):
        raise DomainError("sphere_bubble needs a sphere center")
    g = cayley_forward(zeta)
    w = bubble_w(BubbleParams(cayley_forward(center), params.lam), g, c0)
    return w / abs(1.0 + zeta.zeta2)


# -- sublaplacian ------------------------------------------------------------

def sublaplacian_fd(f: Callable[[HeisenbergPoint], float], g: HeisenbergPoint, h: float,
                    richardson: bool = True) -> float:
    """Finite-difference ``Delta f(g)`` with ``Delta = -1/2 (Z Zbar + Zbar Z)``.

    In real form ``Delta = -1/4 (X^2 + Y^2)`` with the left-invariant fields
    ``X = d/dx + 2y d/dt`` and ``Y = d/dy - 2x d/dt``.  Second derivatives are
    taken along the one-parameter subgroups ``g . (s, 0)`` and ``g . (i s, 0)``,
    so the stencil is exact for the frame and O(h^2); ``richardson`` combines
    h and h/2 into an O(h^4) estimate.
    """
    if not h > 0:
        raise DomainError("step size must be positive")

    def plain(step):
        f0 = f(g)
        acc = 0.0
        for direction in (1.0, 1j):
            fwd = f(group_mul(g, HeisenbergPoint(step * direction, 0.0)))
            bwd = f(group_mul(g, HeisenbergPoint(-step * direction, 0.0)))
            acc += fwd - 2.0 * f0 + bwd
        return -0.25 * acc / step**2

    if not richardson:
        return plain(h)
    return (4.0 * plain(h / 2.0) - plain(h)) / 3.0


def _normalised_bubble(g: HeisenbergPoint) -> float:
    return 1.0 / abs(1.0 + abs(g.z) ** 2 - 1j * g.t)


class C0Squared(NamedTuple):
    value: float
    spread: float
    samples: int


def default_sample_points(n: int = 24, seed: int = 20240611) -> list[HeisenbergPoint]:
    fixed = [HeisenbergPoint(1, 0), HeisenbergPoint(0, 1), HeisenbergPoint(2, 3),
             HeisenbergPoint(0.5, -1)]
    rng = np.random.default_rng(seed)
    extra = [HeisenbergPoint(complex(*rng.uniform(-2, 2, 2)), rng.uniform(-3, 3))
             for _ in range(max(0, n - len(fixed)))]
    return fixed + extra


def jl_ratio(g: HeisenbergPoint, h0: float = 1e-2, f=_normalised_bubble) -> float:
    """``4 Delta f / f^3`` at ``g`` with a step scaled to the Koranyi size of ``g``."""
    h = h0 * max(1.0, koranyi_norm(g))
    return 4.0 * sublaplacian_fd(f, g, h) / f(g) ** 3


def _c0_squared(points: Sequence[HeisenbergPoint], h0: float, max_spread: float) -> C0Squared:
    ratios = np.array([jl_ratio(g, h0) for g in points])
    mean = float(np.mean(ratios))
    spread = float(np.std(ratios) / abs(mean))
    if spread > max_spread:
        raise NumericalInconsistency(
            f"4 Delta w / w^3 is not constant: relative spread {spread:.3e}")
    return C0Squared(mean, spread, len(points))


@functools.lru_cache(maxsize=None)
def _default_c0_squared() -> C0Squared:
    return _c0_squared(default_sample_points(), 1e-2, 1e-5)


def c0_squared(points: Sequence[HeisenbergPoint] | None = None, h0: float = 1e-2,
               max_spread: float = 1e-5) -> C0Squared:
    """Estimate ``c0^2`` as the (constant) ratio ``4 Delta w~ / w~^3``.

    ``w~ = 1 / |1 + |z|^2 - i t|``; the Jerison-Lee bubble ``c0 w~`` solves
    ``4 Delta u = u^3``, so the ratio is the same at every point.  Raises
    :class:`NumericalInconsistency` if the relative spread exceeds ``max_spread``.
    """
    if points is None and h0 == 1e-2 and max_spread == 1e-5:
        return _default_c0_squared()
    if points is None:
        points = default_sample_points()
    return _c0_squared(list(points), h0, max_spread)


def c0() -> float:
    return math.sqrt(c0_squared().value)
