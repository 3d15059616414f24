"""Built-in invariant suite behind ``crcensus verify``.

Each check compares an implementation path against an independent route
(closed form, brute force, library eigensolver, Monte Carlo) and reports one
line.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .counting import (enumerate_k1_plus, full_criterion, indices_at_infinity, multiplicity_bound,
                       theorem1_gate, K1PlusMember)
from .critical import CriticalPointProfile
from .heisenberg import SpherePoint, c0_squared, cayley_forward_arrays, cayley_inverse_arrays
from .interaction import GreenKernelConfig, least_eigenvalue, matrix_entries
from .quadrature import (IntegralSpec, compute_kappa_prime, integrate_h1, koranyi_ball_kernel,
                         monte_carlo_oracle, s_kernel)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f} s)"


def _timed(name, fn):
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def check_cayley(n=100_000, seed=0):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=n) * 3 + 1j * rng.normal(size=n) * 3
    t = rng.normal(size=n) * 5
    z1, z2 = cayley_inverse_arrays(z, t)
    zb, tb = cayley_forward_arrays(z1, z2)
    err1 = max(np.max(np.abs(zb - z)), np.max(np.abs(tb - t)))
    v = rng.normal(size=(n, 4))
    v /= np.linalg.norm(v, axis=1)[:, None]
    s1, s2 = v[:, 0] + 1j * v[:, 1], v[:, 2] + 1j * v[:, 3]
    keep = np.abs(1 + s2) > 1e-3
    s1, s2 = s1[keep], s2[keep]
    w1, w2 = cayley_inverse_arrays(*cayley_forward_arrays(s1, s2))
    err2 = max(np.max(np.abs(w1 - s1)), np.max(np.abs(w2 - s2)))
    return max(err1, err2) < 1e-10, f"max round-trip error {max(err1, err2):.2e}"


def check_c0():
    r = c0_squared()
    return r.spread < 1e-6 and r.samples >= 20, f"c0^2 = {r.value:.10f}, spread {r.spread:.1e}"


def check_omega3(samples=10**6):
    q = integrate_h1(IntegralSpec(koranyi_ball_kernel()))
    exact = 4 * math.pi * (math.pi / 2)
    mc, se = monte_carlo_oracle(IntegralSpec(koranyi_ball_kernel()), samples, seed=7)
    ok = abs(q.value - exact) < 1e-8 and abs(mc - exact) < 3 * se
    return ok, f"quad-exact {q.value - exact:.1e}, MC {(mc - exact) / se:+.2f} s.e."


def check_s_mc(samples=10**6):
    spec = IntegralSpec(s_kernel())
    q = integrate_h1(spec)
    mc, se = monte_carlo_oracle(spec, samples, seed=11)
    return abs(q.value - mc) < 3 * se, f"S/c0^4 = {q.value:.10f}, MC {(q.value - mc) / se:+.2f} s.e."


def check_kappa_prime():
    vals = [compute_kappa_prime(b).value for b in (2.0, 2.5, 3.0, 3.9)]
    return all(v > 0 for v in vals), "kappa' = " + ", ".join(f"{v:.6f}" for v in vals)


def _random_points(rng, r):
    v = rng.normal(size=(r, 4))
    pts = []
    for i in range(r):
        b = -rng.uniform(1, 30, 3) * np.where(rng.random(3) < 0.85, 1, -0.05)
        pts.append(CriticalPointProfile(f"p{i}", SpherePoint(complex(v[i, 0], v[i, 1]),
                                                             complex(v[i, 2], v[i, 3])),
                                        2.0, tuple(b), rng.uniform(0.5, 2.0)))
    return pts


def check_enumeration(instances=100, seed=3):
    rng = np.random.default_rng(seed)
    kp, c, cp = 8 / math.pi, math.pi**2 / 2, 4 * math.pi**3
    mismatches = 0
    for _ in range(instances):
        r = int(rng.integers(1, 11))
        pts = [p for p in _random_points(rng, r) if p.b[0] + p.b[1] + kp * p.b[2] < 0]
        cfg = GreenKernelConfig(float(rng.uniform(0.5, 2.0)))
        got = {m.members for m in enumerate_k1_plus(pts, kp, c, cp, cfg)}
        brute = set()
        for size in range(1, len(pts) + 1):
            for sub in itertools.combinations(range(len(pts)), size):
                ent = matrix_entries([pts[i] for i in sub], kp, c, cp, cfg)
                if np.linalg.eigvalsh(ent)[0] > 1e-12:
                    brute.add(tuple(pts[i].id for i in sub))
        mismatches += got != brute
    return mismatches == 0, f"{mismatches} mismatches over {instances} instances"


def check_counting(instances=100, seed=5):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(instances):
        k2 = [(f"s{i}", int(rng.integers(0, 4))) for i in range(int(rng.integers(0, 4)))]
        tuples = []
        m_of = {}
        for i in range(int(rng.integers(0, 4))):
            size = int(rng.integers(1, 4))
            ids = tuple(f"t{i}_{j}" for j in range(size))
            for pid in ids:
                m_of[pid] = int(rng.integers(0, 4))
            tuples.append(K1PlusMember(ids, 1.0))
        census = indices_at_infinity(tuples, k2, m_of)
        for k in range(1, census.L0 + 2):
            direct = sum((-1) ** c.index for c in census.points if c.index <= k - 1)
            bad += theorem1_gate(census, k).sum != 1 - (1 - direct)
        exists, bound = full_criterion(census)
        k = census.L0 + 1
        bad += (exists, bound) != (theorem1_gate(census, k).verdict, multiplicity_bound(census, k))
        for c in census.tuples:
            bad += (-1) ** c.index != -((-1) ** c.m_sum)
    return bad == 0, f"{bad} inconsistencies over {instances} censuses"


def check_eigen(n=10_000, seed=9):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        size = int(rng.integers(1, 4))
        a = rng.normal(size=(size, size))
        a = a + a.T
        roots = np.roots(np.poly(a)).real
        worst = max(worst, abs(least_eigenvalue(a) - roots.min()))
    return worst < 1e-10, f"max deviation from characteristic roots {worst:.1e}"


def run_all(quick: bool = False) -> list[CheckResult]:
    mc = 10**5 if quick else 10**6
    n = 10 if quick else 100
    return [
        _timed("cayley round trip", lambda: check_cayley(10_000 if quick else 100_000)),
        _timed("sublaplacian ratio c0^2", check_c0),
        _timed("omega3 = 2 pi^2", lambda: check_omega3(mc)),
        _timed("S kernel vs Monte Carlo", lambda: check_s_mc(mc)),
        _timed("kappa' positive", check_kappa_prime),
        _timed("K1+ enumeration vs brute force", lambda: check_enumeration(n)),
        _timed("counting consistency", lambda: check_counting(n)),
        _timed("Jacobi vs characteristic roots", lambda: check_eigen(1000 if quick else 10_000)),
    ]
