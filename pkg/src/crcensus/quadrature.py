"""Quadrature over H^1 and S^3 for the structural constants.

Every H^1 integral uses the measure ``theta0 ^ dtheta0 = 4 dx dy dt``.  The
factor 4 cancels in the ratios kappa, kappa' but fixes omega3, S, c, c2
absolutely.

Integration runs in Koranyi polar coordinates around a center ``g0``::

    g = g0 . dilate(s, (rho sqrt(cos th) e^{i phi}, rho^2 sin th)),
    dx dy dt = s^4 rho^3 drho dth dphi,

with ``th`` in [-pi/2, pi/2] and ``phi`` in [0, 2 pi).  The radial variable is
integrated by globally adaptive Gauss-Kronrod (7/15) on ``rho`` in [0, 1] and on
``sigma`` in (0, 1] with ``rho = sigma^-a`` for the tail, ``a`` chosen from the
kernel's decay so the transformed integrand stays bounded.  The angular
integral is a tensor Gauss-Legendre rule on panels split at the kinks of
``|x1|^beta``, ``|x2|^beta`` and ``|t|^beta/2`` and graded towards panel ends;
two resolutions give the angular error estimate.
"""

from __future__ import annotations

import functools
import heapq
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import beta as beta_fn

from .errors import ConvergenceError, DomainError
from .heisenberg import (IDENTITY, HeisenbergPoint, SpherePoint, c0_squared,
                         cayley_inverse_arrays, mul_arrays)

MEASURE_FACTOR = 4.0

# Gauss-Kronrod 7/15 (QUADPACK qk15)
_XGK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                 0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                 0.207784955007898467600689403773245, 0.0])
_WGK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                 0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                 0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
G_WEIGHTS = np.zeros(15)
G_WEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


# -- kernels -----------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """A named integrand on H^1.

    ``func(x1, x2, t)`` evaluates it on arrays.  ``decay`` is the exponent ``d``
    with ``kernel * rho^3 ~ rho^(-1-d)`` at infinity; ``None`` means the support
    lies in the closed unit Koranyi ball.  A homogeneous kernel may also give
    ``polar(rho, xh1, xh2, th, eta) -> mantissa`` with ``kernel = mantissa *
    rho^power`` where ``(xh, th)`` lies on the unit Koranyi sphere and
    ``eta = rho^-2``; this avoids overflow far out in the tail.  If
    ``translation`` is set to ``s``, the polar form describes ``h -> func(h s^-1)``
    instead; right translation preserves the measure, so the integral is unchanged.
    """

    name: str
    func: Callable
    decay: float | None
    polar: Callable | None = None
    power: float = 0.0
    params: tuple = ()
    translation: HeisenbergPoint | None = None

    def __call__(self, x1, x2, t):
        return self.func(np.asarray(x1, float), np.asarray(x2, float), np.asarray(t, float))


def _dsq(x1, x2, t):
    r2 = x1 * x1 + x2 * x2
    return (1.0 + r2) ** 2 + t * t


def _dn(xh1, xh2, th, eta):
    """``|D| / rho^2`` with ``D = 1 + |z|^2 - i t``."""
    return np.sqrt((eta + xh1 * xh1 + xh2 * xh2) ** 2 + th * th)


def _check_beta(beta):
    if not (2.0 <= beta < 4.0):
        raise DomainError(f"beta must lie in [2, 4), got {beta}")


def koranyi_ball_kernel() -> Kernel:
    def f(x1, x2, t):
        r2 = x1 * x1 + x2 * x2
        return (r2 * r2 + t * t <= 1.0).astype(float)
    return Kernel("koranyi_ball", f, None)


def s_kernel() -> Kernel:
    """``1 / |1 + |z|^2 - i t|^4``."""
    return Kernel("S", lambda x1, x2, t: _dsq(x1, x2, t) ** -2.0, 4.0,
                  lambda rho, a, b, th, eta: _dn(a, b, th, eta) ** -4.0, -8.0)


def c2_kernel() -> Kernel:
    """``1 / |1 + |z|^2 - i t|^3``."""
    return Kernel("c2", lambda x1, x2, t: _dsq(x1, x2, t) ** -1.5, 2.0,
                  lambda rho, a, b, th, eta: _dn(a, b, th, eta) ** -3.0, -6.0)


def c_kernel() -> Kernel:
    """``|x1|^2 / |1 + |z|^2 - i t|^4``."""
    return Kernel("c", lambda x1, x2, t: x1 * x1 * _dsq(x1, x2, t) ** -2.0, 2.0,
                  lambda rho, a, b, th, eta: a * a * _dn(a, b, th, eta) ** -4.0, -6.0)


def kappa_prime_kernels(beta: float, horizontal_axis: int = 1) -> tuple[Kernel, Kernel]:
    """Numerator ``|t|^(beta/2) / |D|^4`` and denominator ``|x_k|^beta / |D|^4``."""
    _check_beta(beta)
    hb = beta / 2.0
    num = Kernel("kappa_prime_num", lambda x1, x2, t: np.abs(t) ** hb * _dsq(x1, x2, t) ** -2.0,
                 4.0 - beta, lambda rho, a, b, th, eta: np.abs(th) ** hb * _dn(a, b, th, eta) ** -4.0,
                 beta - 8.0, (beta,))
    if horizontal_axis == 1:
        den = Kernel("kappa_prime_den",
                     lambda x1, x2, t: np.abs(x1) ** beta * _dsq(x1, x2, t) ** -2.0, 4.0 - beta,
                     lambda rho, a, b, th, eta: np.abs(a) ** beta * _dn(a, b, th, eta) ** -4.0,
                     beta - 8.0, (beta, 1))
    else:
        den = Kernel("kappa_prime_den_x2",
                     lambda x1, x2, t: np.abs(x2) ** beta * _dsq(x1, x2, t) ** -2.0, 4.0 - beta,
                     lambda rho, a, b, th, eta: np.abs(b) ** beta * _dn(a, b, th, eta) ** -4.0,
                     beta - 8.0, (beta, 2))
    return num, den


def kappa_kernels(beta: float, horizontal_axis: int = 1) -> tuple[Kernel, Kernel]:
    """Numerator ``|t|^(beta/2) (1 - ||z|^2 - it|^2) / |D|^6`` and its ``|x_k|^beta`` twin."""
    _check_beta(beta)
    hb = beta / 2.0

    def num(x1, x2, t):
        r2 = x1 * x1 + x2 * x2
        return np.abs(t) ** hb * (1.0 - r2 * r2 - t * t) * _dsq(x1, x2, t) ** -3.0

    def num_p(rho, a, b, th, eta):
        return np.abs(th) ** hb * (eta * eta - 1.0) * _dn(a, b, th, eta) ** -6.0

    def den(x1, x2, t):
        r2 = x1 * x1 + x2 * x2
        x = x1 if horizontal_axis == 1 else x2
        return np.abs(x) ** beta * (1.0 - r2 * r2 - t * t) * _dsq(x1, x2, t) ** -3.0

    def den_p(rho, a, b, th, eta):
        x = a if horizontal_axis == 1 else b
        return np.abs(x) ** beta * (eta * eta - 1.0) * _dn(a, b, th, eta) ** -6.0

    return (Kernel("kappa_num", num, 4.0 - beta, num_p, beta - 8.0, (beta,)),
            Kernel("kappa_den", den, 4.0 - beta, den_p, beta - 8.0, (beta, horizontal_axis)))


def flatness_kernels(beta: float, shift: HeisenbergPoint, k: int) -> dict[str, Kernel]:
    """Kernels of the flatness gradient integrals for derivative direction ``k``.

    ``shift = (c, tau)`` stands for ``(lambda a_z, lambda^2 a_t)``.  For
    ``k in {1, 2}`` returns ``horizontal`` (``|x_k + c_k|^beta x_k (1+|z|^2)``)
    and ``vertical`` (``|t + tau + 2(x2 c1 - x1 c2)|^(beta/2) (x_k (1+|z|^2) +
    (-1)^k' x_k' t)``); for ``k = 0`` only ``vertical`` with weight ``t``.  All
    are divided by ``|D|^6``.
    """
    _check_beta(beta)
    if k not in (0, 1, 2):
        raise DomainError(f"derivative selector must be 0, 1 or 2, got {k}")
    hb = beta / 2.0
    c1, c2, tau = shift.x1, shift.x2, shift.t
    ck = c1 if k == 1 else c2
    sign = 1.0 if k == 1 else -1.0  # (-1)^k' with k' the other horizontal index
    out = {}

    # Polar forms use h = g s with s = (c, tau): then x_k + c_k and
    # t + tau + 2(x2 c1 - x1 c2) are coordinates of h, and every kink of the
    # integrand sits on a panel edge of the angular rule.
    translation = HeisenbergPoint(complex(c1, c2), tau)

    def vshift(x1, x2, t):
        return np.abs(t + tau + 2.0 * (x2 * c1 - x1 * c2)) ** hb

    def pulled(a, b, th, eta):
        """Scaled coordinates of g = h s^-1 and ``|D(g)|^-6 rho^12``."""
        sq = np.sqrt(eta)
        ga, gb = a - c1 * sq, b - c2 * sq
        gt = th - tau * eta - 2.0 * sq * (b * c1 - a * c2)
        return ga, gb, gt, _dn(ga, gb, gt, eta) ** -6.0

    if k in (1, 2):
        def hor(x1, x2, t):
            x = x1 if k == 1 else x2
            return np.abs(x + ck) ** beta * x * (1.0 + x1 * x1 + x2 * x2) * _dsq(x1, x2, t) ** -3.0

        def hor_p(rho, a, b, th, eta):
            ga, gb, _, inv = pulled(a, b, th, eta)
            x, gx = (a, ga) if k == 1 else (b, gb)
            return np.abs(x) ** beta * gx * (eta + ga * ga + gb * gb) * inv

        def ver(x1, x2, t):
            x, xo = (x1, x2) if k == 1 else (x2, x1)
            weight = x * (1.0 + x1 * x1 + x2 * x2) + sign * xo * t
            return vshift(x1, x2, t) * weight * _dsq(x1, x2, t) ** -3.0

        def ver_p(rho, a, b, th, eta):
            ga, gb, gt, inv = pulled(a, b, th, eta)
            x, xo = (ga, gb) if k == 1 else (gb, ga)
            weight = x * (eta + ga * ga + gb * gb) + sign * xo * gt
            return np.abs(th) ** hb * weight * inv

        out["horizontal"] = Kernel(f"flat_h{k}", hor, 5.0 - beta, hor_p, beta - 9.0,
                                   (beta, c1, c2, tau), translation)
        out["vertical"] = Kernel(f"flat_v{k}", ver, 5.0 - beta, ver_p, beta - 9.0,
                                 (beta, c1, c2, tau), translation)
    else:
        def ver0(x1, x2, t):
            return vshift(x1, x2, t) * t * _dsq(x1, x2, t) ** -3.0

        def ver0_p(rho, a, b, th, eta):
            _, _, gt, inv = pulled(a, b, th, eta)
            return np.abs(th) ** hb * gt * inv

        out["vertical"] = Kernel("flat_v0", ver0, 6.0 - beta, ver0_p, beta - 10.0,
                                 (beta, c1, c2, tau), translation)
    return out


# -- specs and results -------------------------------------------------------

@dataclass(frozen=True)
class IntegralSpec:
    """What to integrate: kernel, domain, tolerance and an optional focus.

    ``center`` and ``scale`` move the polar coordinates onto a concentrated
    integrand (a bubble of concentration lambda wants ``scale = 1/lambda``);
    the value of the integral does not depend on them.
    """

    kernel: Kernel
    domain: str = "H1"
    tolerance: float = 1e-8
    center: HeisenbergPoint = IDENTITY
    scale: float = 1.0

    def __post_init__(self):
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")
        if self.domain not in ("H1", "Sphere"):
            raise DomainError(f"unknown domain {self.domain!r}")
        if not self.scale > 0:
            raise DomainError("scale must be positive")


class QuadratureResult(NamedTuple):
    value: float
    abs_error_estimate: float
    subdivisions: int
    converged: bool


# -- angular rule ------------------------------------------------------------

def _graded_panels(edges, n):
    """Gauss-Legendre on each panel after a cubic endpoint grading."""
    s, w = np.polynomial.legendre.leggauss(n)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    g = s * s * (3.0 - 2.0 * s)
    dg = 6.0 * s * (1.0 - s)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes.append(lo + (hi - lo) * g)
        weights.append((hi - lo) * dg * w)
    return np.concatenate(nodes), np.concatenate(weights)


@functools.lru_cache(maxsize=None)
def _angular_rule(n: int):
    th, wth = _graded_panels(np.array([-np.pi / 2, 0.0, np.pi / 2]), n)
    ph, wph = _graded_panels(np.linspace(0.0, 2 * np.pi, 5), n)
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    rhat = np.sqrt(np.clip(np.cos(TH), 0.0, None))
    xh1 = (rhat * np.cos(PH)).ravel()
    xh2 = (rhat * np.sin(PH)).ravel()
    tht = np.sin(TH).ravel()
    weights = np.outer(wth, wph).ravel()
    return xh1, xh2, tht, weights


# -- the adaptive radial driver ----------------------------------------------

def _tail_exponent(decay: float) -> float:
    if decay <= 0:
        raise DomainError("kernel must decay (decay > 0) to be integrable over H^1")
    return 1.0 / decay if decay < 1.0 else math.ceil(decay - 1e-12) / decay


class _RadialIntegrand:
    """Angular integral as a function of the radial variable, with error."""

    def __init__(self, spec: IntegralSpec, level: int):
        self.spec = spec
        self.kernel = spec.kernel
        self.coarse = _angular_rule(level)
        self.fine = _angular_rule(2 * level)
        self.use_polar = (self.kernel.polar is not None and spec.center == IDENTITY
                          and spec.scale == 1.0)
        self.evaluations = 0

    def _angular(self, rho, rule):
        xh1, xh2, tht, w = rule
        rho = rho[:, None]
        self.evaluations += rho.size * w.size
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if self.use_polar:
                vals = self.kernel.polar(rho, xh1[None], xh2[None], tht[None], rho ** -2.0)
            else:
                s, g0 = self.spec.scale, self.spec.center
                z = s * rho * (xh1 + 1j * xh2)[None]
                t = (s * rho) ** 2 * tht[None]
                z, t = mul_arrays(g0.z, g0.t, z, t)
                vals = self.kernel.func(z.real, z.imag, t)
        vals = np.where(np.isfinite(vals), vals, 0.0)
        return vals @ w

    def _log_weight(self, log_rho):
        """log of rho^(power + 3) s^4 (radial Jacobian times homogeneous factor)."""
        p = self.kernel.power if self.use_polar else 0.0
        return (p + 3.0) * log_rho + 4.0 * math.log(self.spec.scale)

    def head(self, rho):
        """Integrand on rho in [0, 1]; returns (value, angular error)."""
        fine = self._angular(rho, self.fine)
        coarse = self._angular(rho, self.coarse)
        with np.errstate(divide="ignore"):
            wgt = np.exp(self._log_weight(np.log(rho)))
        return fine * wgt, np.abs(fine - coarse) * wgt

    def tail(self, sigma, a):
        """Integrand on sigma in (0, 1] with rho = sigma^-a."""
        log_rho = -a * np.log(sigma)
        rho = np.exp(log_rho)
        fine = self._angular(rho, self.fine)
        coarse = self._angular(rho, self.coarse)
        wgt = a * np.exp(self._log_weight(log_rho) + (-a - 1.0) * np.log(sigma))
        return fine * wgt, np.abs(fine - coarse) * wgt


def _gk_interval(fn, lo, hi):
    half = 0.5 * (hi - lo)
    x = 0.5 * (hi + lo) + half * GK_NODES
    vals, ang = fn(x)
    kron = half * float(GK_WEIGHTS @ vals)
    gauss = half * float(G_WEIGHTS @ vals)
    ang_err = half * float(GK_WEIGHTS @ ang)
    return kron, abs(kron - gauss), ang_err


def _adaptive(pieces, tol_fn, max_subdivisions):
    """Globally adaptive GK15 over a list of (fn, lo, hi) pieces."""
    heap = []
    total, err, ang = 0.0, 0.0, 0.0
    for idx, (fn, lo, hi) in enumerate(pieces):
        for a, b in ((lo, 0.5 * (lo + hi)), (0.5 * (lo + hi), hi)):
            v, e, ae = _gk_interval(fn, a, b)
            heapq.heappush(heap, (-e, idx, a, b, v, ae))
    subdivisions = len(heap)
    while True:
        total = math.fsum(item[4] for item in heap)
        err = math.fsum(-item[0] for item in heap)
        ang = math.fsum(item[5] for item in heap)
        if err <= 0.5 * tol_fn(total) or subdivisions >= max_subdivisions:
            break
        neg_e, idx, a, b, v, ae = heapq.heappop(heap)
        fn = pieces[idx][0]
        mid = 0.5 * (a + b)
        for lo, hi in ((a, mid), (mid, b)):
            v2, e2, ae2 = _gk_interval(fn, lo, hi)
            heapq.heappush(heap, (-e2, idx, lo, hi, v2, ae2))
        subdivisions += 1
    return total, err, ang, subdivisions


def integrate_h1(spec: IntegralSpec, max_subdivisions: int = 400,
                 levels: tuple[int, ...] = (8, 16, 32), raise_on_failure: bool = True
                 ) -> QuadratureResult:
    """Integrate ``spec.kernel`` over H^1 against ``theta0 ^ dtheta0``.

    Angular resolution is raised through ``levels`` until the angular error
    estimate fits the budget.  Raises :class:`ConvergenceError` (carrying the
    best estimate) if the total error estimate exceeds
    ``tolerance * max(1, |value|)``.
    """
    kernel = spec.kernel
    tol = spec.tolerance

    def tol_fn(v):
        return tol * max(1.0, abs(v)) / MEASURE_FACTOR

    best = None
    for level in levels:
        integrand = _RadialIntegrand(spec, level)
        pieces = [(integrand.head, 0.0, 1.0)]
        if kernel.decay is not None:
            a = _tail_exponent(kernel.decay)
            pieces.append((functools.partial(integrand.tail, a=a), 0.0, 1.0))
        value, rad_err, ang_err, subdiv = _adaptive(pieces, tol_fn, max_subdivisions)
        total_err = MEASURE_FACTOR * (rad_err + ang_err)
        best = QuadratureResult(MEASURE_FACTOR * value, total_err, subdiv,
                                total_err <= tol * max(1.0, abs(MEASURE_FACTOR * value)))
        if best.converged:
            return best
        if rad_err > 0.5 * tol_fn(value) and ang_err <= 0.5 * tol_fn(value):
            break  # radial budget exhausted; more angular points will not help
    if raise_on_failure:
        raise ConvergenceError(
            f"{kernel.name}: error estimate {best.abs_error_estimate:.3e} above tolerance",
            best.value, best.abs_error_estimate)
    return best


def sphere_volume_factor(z, t):
    """``|1 + zeta2(F^-1(g))|^4 = 16 / |1 + |z|^2 - i t|^4``."""
    return 16.0 / ((1.0 + np.abs(z) ** 2) ** 2 + t * t) ** 2


def integrate_sphere(kernel: Callable, tolerance: float = 1e-8, decay: float = 4.0,
                     center: HeisenbergPoint = IDENTITY, scale: float = 1.0,
                     name: str = "sphere_kernel", **kwargs) -> QuadratureResult:
    """Integrate ``kernel(zeta1, zeta2)`` over ``(S^3, theta1 ^ dtheta1)``.

    Pulled back to H^1 through the Cayley transform with
    ``theta1 ^ dtheta1 = |1 + zeta2|^4 F*(theta0 ^ dtheta0)``.  ``decay`` is the
    decay of the pulled-back integrand (4 for a bounded kernel); ``center`` and
    ``scale`` are a focus hint in H^1 coordinates.
    """
    def pulled_back(x1, x2, t):
        z = x1 + 1j * x2
        zeta1, zeta2 = cayley_inverse_arrays(z, t)
        return kernel(zeta1, zeta2) * sphere_volume_factor(z, t)

    spec = IntegralSpec(Kernel(name, pulled_back, decay), "Sphere", tolerance, center, scale)
    return integrate_h1(spec, **kwargs)


# -- Monte Carlo oracle ------------------------------------------------------

def _proposal_norm(m: float) -> float:
    """``int |D|^-m dx dy dt`` over H^1 (Lebesgue), m > 2."""
    return math.pi * beta_fn(0.5, (m - 1.0) / 2.0) / (m - 2.0)


def _sample_proposal(rng, n, m):
    u = rng.random(n)
    u = np.where(u <= 0.0, np.finfo(float).tiny, u)
    r2 = np.minimum(np.expm1(-np.log(u) / (m - 2.0)), 1e150)
    nu = m - 1.0
    tt = rng.standard_t(nu, n) / math.sqrt(nu)
    t = (1.0 + r2) * tt
    phi = rng.uniform(0.0, 2 * np.pi, n)
    z = np.sqrt(r2) * np.exp(1j * phi)
    return z, t


def _proposal_density(z, t, m):
    d2 = (1.0 + np.abs(z) ** 2) ** 2 + t * t
    return d2 ** (-m / 2.0) / _proposal_norm(m)


def proposal_exponents(kernel: Kernel) -> tuple[float, ...]:
    """Defensive mixture: the bubble profile ``|D|^-4`` and a tail component.

    A tail exponent ``m < 2 + d`` keeps the weight variance finite for a kernel
    of decay ``d``; ``2 + d/2`` is used, capped at 3.5 so that the oracle never
    degenerates into the exact answer for the bubble kernel itself.
    """
    if kernel.decay is None:
        return (4.0,)
    return (4.0, min(3.5, 2.0 + kernel.decay / 2.0))


def monte_carlo_oracle(spec: IntegralSpec, samples: int = 10**6, seed: int = 0,
                       chunk: int = 2**16) -> tuple[float, float]:
    """Importance-sampled estimate and standard error of an H^1 integral.

    Counter-based (Philox) streams keyed by ``(seed, chunk index)`` make the
    result depend only on ``seed`` and ``samples``.
    """
    if samples < 10**4:
        raise DomainError("the Monte Carlo oracle needs at least 10^4 samples")
    ms = proposal_exponents(spec.kernel)
    s, g0 = spec.scale, spec.center
    total = 0.0
    total_sq = 0.0
    done = 0
    index = 0
    while done < samples:
        n = min(chunk, samples - done)
        rng = np.random.Generator(np.random.Philox(key=[seed, index]))
        comp = rng.integers(0, len(ms), n)
        z = np.empty(n, complex)
        t = np.empty(n)
        for j, m in enumerate(ms):
            sel = comp == j
            z[sel], t[sel] = _sample_proposal(rng, int(sel.sum()), m)
        q = sum(_proposal_density(z, t, m) for m in ms) / len(ms)
        gz, gt = mul_arrays(g0.z, g0.t, s * z, s * s * t)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            f = spec.kernel(gz.real, gz.imag, gt)
            vals = np.where(np.isfinite(f), MEASURE_FACTOR * s**4 * f / q, 0.0)
        total += math.fsum(vals)
        total_sq += math.fsum(vals * vals)
        done += n
        index += 1
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, math.sqrt(var / samples)


# -- structural constants ----------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    value: float
    error: float


@dataclass(frozen=True)
class StructuralConstants:
    """All displayed constants at one beta, each with an error bound.

    ``c0_sq`` comes from the sublaplacian ratio, so ``S = c0^4 int |D|^-4`` and
    ``c2 = c0^3 int |D|^-3`` inherit its (tiny) finite-difference error.
    """

    beta: float
    kappa: Estimate
    kappa_prime: Estimate
    c: Estimate
    c2: Estimate
    S: Estimate
    omega3: Estimate
    c_prime: Estimate
    c0_sq: Estimate
    tolerance: float = 1e-8

    def as_dict(self) -> dict:
        out = {"beta": self.beta, "tolerance": self.tolerance}
        for name in ("kappa", "kappa_prime", "c", "c2", "S", "omega3", "c_prime", "c0_sq"):
            est = getattr(self, name)
            out[name] = {"value": est.value, "error": est.error}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "StructuralConstants":
        kw = {name: Estimate(float(data[name]["value"]), float(data[name]["error"]))
              for name in ("kappa", "kappa_prime", "c", "c2", "S", "omega3", "c_prime", "c0_sq")}
        return cls(beta=float(data["beta"]), tolerance=float(data["tolerance"]), **kw)


def _ratio(num: QuadratureResult, den: QuadratureResult) -> Estimate:
    value = num.value / den.value
    err = abs(value) * (num.abs_error_estimate / abs(num.value)
                        + den.abs_error_estimate / abs(den.value))
    return Estimate(value, err)


def _integrate(kernel: Kernel, tolerance: float) -> QuadratureResult:
    return integrate_h1(IntegralSpec(kernel, tolerance=tolerance))


@functools.lru_cache(maxsize=256)
def _kappa_prime(beta: float, tolerance: float) -> Estimate:
    num, den = kappa_prime_kernels(beta)
    return _ratio(_integrate(num, tolerance), _integrate(den, tolerance))


@functools.lru_cache(maxsize=256)
def _kappa(beta: float, tolerance: float) -> Estimate:
    num, den = kappa_kernels(beta)
    return _ratio(_integrate(num, tolerance), _integrate(den, tolerance))


def compute_kappa(beta: float, tolerance: float = 1e-8) -> Estimate:
    _check_beta(beta)
    return _kappa(float(beta), float(tolerance))


def compute_kappa_prime(beta: float, tolerance: float = 1e-8) -> Estimate:
    _check_beta(beta)
    return _kappa_prime(float(beta), float(tolerance))


def _beta_free_constants(tolerance: float) -> dict[str, Estimate]:
    c0sq = c0_squared()
    c0 = math.sqrt(c0sq.value)
    rel_c0 = 0.5 * c0sq.spread  # relative error of c0 from the ratio spread
    s_int = _integrate(s_kernel(), tolerance)
    c2_int = _integrate(c2_kernel(), tolerance)
    c_int = _integrate(c_kernel(), tolerance)
    ball = _integrate(koranyi_ball_kernel(), tolerance)
    S = c0**4 * s_int.value
    c2 = c0**3 * c2_int.value
    return {
        "c0_sq": Estimate(c0sq.value, c0sq.spread * c0sq.value),
        "S": Estimate(S, c0**4 * s_int.abs_error_estimate + 4 * rel_c0 * S),
        "c2": Estimate(c2, c0**3 * c2_int.abs_error_estimate + 3 * rel_c0 * c2),
        "c": Estimate(c_int.value, c_int.abs_error_estimate),
        "omega3": Estimate(ball.value, ball.abs_error_estimate),
        "c_prime": Estimate(2 * math.pi * ball.value, 2 * math.pi * ball.abs_error_estimate),
    }


_BETA_FREE = ("c0_sq", "S", "c2", "c", "omega3", "c_prime")
_memo_beta_free: dict[float, dict[str, Estimate]] = {}


def _cached(cache, name, beta, tolerance, compute):
    if cache is not None:
        hit = cache.get(name, beta, tolerance)
        if hit is not None:
            return Estimate(float(hit["value"]), float(hit["error"]))
    est = compute()
    if cache is not None:
        cache.put(name, beta, tolerance, {"value": est.value, "error": est.error})
    return est


def compute_structural_constants(beta: float, tolerance: float = 1e-8,
                                 cache=None) -> StructuralConstants:
    """Compute every constant at ``beta``.

    ``cache`` is any object with ``get(name, beta, tolerance)`` and
    ``put(name, beta, tolerance, value)`` (see :class:`crcensus.cache.ConstantsCache`);
    beta-free constants are stored with ``beta=None``.
    """
    _check_beta(beta)
    beta = float(beta)
    tolerance = float(tolerance)

    def beta_free(name):
        def compute():
            if tolerance not in _memo_beta_free:
                _memo_beta_free[tolerance] = _beta_free_constants(tolerance)
            return _memo_beta_free[tolerance][name]
        return compute

    base = {name: _cached(cache, name, None, tolerance, beta_free(name)) for name in _BETA_FREE}
    return StructuralConstants(
        beta=beta,
        kappa=_cached(cache, "kappa", beta, tolerance, lambda: compute_kappa(beta, tolerance)),
        kappa_prime=_cached(cache, "kappa_prime", beta, tolerance,
                            lambda: compute_kappa_prime(beta, tolerance)),
        tolerance=tolerance, **base)


# -- flatness gradient integrals ---------------------------------------------

@dataclass(frozen=True)
class FlatnessIntegrals:
    """The two integrals entering the flatness gradient in direction ``k``."""

    k: int
    horizontal: QuadratureResult | None
    vertical: QuadratureResult

    def combine(self, b: tuple[float, float, float]) -> float:
        """``b_k * horizontal + b_0 * vertical`` with ``b = (b1, b2, b0)``."""
        total = b[2] * self.vertical.value
        if self.horizontal is not None:
            total += b[self.k - 1] * self.horizontal.value
        return total

    @property
    def abs_error(self) -> float:
        err = self.vertical.abs_error_estimate
        if self.horizontal is not None:
            err += self.horizontal.abs_error_estimate
        return err


def dk_integrals(beta: float, scaled_center: HeisenbergPoint, k: int,
                 tolerance: float = 1e-8) -> FlatnessIntegrals:
    """Integrals of the flatness gradient expansion for direction ``k``.

    ``scaled_center`` is ``(lambda a_z, lambda^2 a_t)``.
    """
    kernels = flatness_kernels(beta, scaled_center, k)
    res = {name: integrate_h1(IntegralSpec(kern, tolerance=tolerance))
           for name, kern in kernels.items()}
    return FlatnessIntegrals(k, res.get("horizontal"), res["vertical"])


def sphere_point_arrays(points: list[SpherePoint]):
    return (np.array([p.zeta1 for p in points]), np.array([p.zeta2 for p in points]))
