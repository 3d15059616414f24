"""Reduced pseudo-gradient dynamics of bubble ensembles.

An ensemble ``sum alpha_i delta_(a_i, lambda_i)`` is described by a chart
position ``a_i`` (Heisenberg coordinates around its assigned critical point)
and a concentration ``lambda_i``.  With the ``v``-terms and the remainders
dropped, the energy is

    J = (sum alpha_i^2) S / (sum alpha_i^4 K_i)^(1/2) * [1
          - c / (2 S^2) sum_i alpha_i^4 / (sum_k alpha_k^4 K_k) * sigma_i / lambda_i^gamma_i
          + S^-2 sum_{i != j} c_int eps_ij (alpha_i alpha_j / sum alpha_k^2
                                           - 2 alpha_i^3 alpha_j K_i / sum alpha_k^4 K_k)]

with ``K_i = K(a_i)``, ``gamma_i = 2`` at beta = 2 and ``beta`` otherwise.
``alpha`` is kept on the balanced manifold ``alpha_i^2 K_i = 1``.  The
interaction constant defaults to ``c' c_G``; with it the quadratic form in
``1 / lambda`` at balanced ``alpha`` is exactly the interaction matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .critical import CriticalPointProfile, PointSet, classify_point, local_field_eval, sigma_of
from .errors import DomainError, RegimeError
from .heisenberg import HeisenbergPoint, chart_to_sphere, cr_distance_sq, koranyi_norm

LAMBDA_MIN = 10.0
BLOWUP_THRESHOLD = 1e4


@dataclass(frozen=True)
class Bubble:
    alpha: float
    a: HeisenbergPoint
    lam: float
    profile_id: str


@dataclass(frozen=True)
class BubbleEnsemble:
    bubbles: tuple[Bubble, ...]
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "bubbles", tuple(self.bubbles))
        ids = [b.profile_id for b in self.bubbles]
        if len(set(ids)) != len(ids):
            raise DomainError("bubbles must sit at pairwise distinct critical points")
        for b in self.bubbles:
            if not (b.lam > 0 and math.isfinite(b.lam)):
                raise DomainError(f"concentration must be positive, got {b.lam}")

    @property
    def lams(self) -> np.ndarray:
        return np.array([b.lam for b in self.bubbles])


class FateKind(str, Enum):
    BLOW_UP = "BlowUp"
    EXIT = "Exit"
    STAGNANT = "Stagnant"


@dataclass(frozen=True)
class FlowFate:
    kind: FateKind
    members: tuple[str, ...] = ()
    reason: str = ""
    J_history: tuple[float, ...] = ()
    lambda_history: tuple[tuple[float, ...], ...] = ()
    eps_history: tuple[tuple[float, ...], ...] = ()


@dataclass(frozen=True)
class FlowModel:
    """Everything the energy needs besides the ensemble.

    ``constants`` maps each beta that occurs to its :class:`StructuralConstants`;
    ``S`` and ``c`` are read from the beta = 2 entry when present.
    """

    profiles: Mapping[str, CriticalPointProfile]
    constants: Mapping[float, object]
    c_G: float = 1.0
    c_int: float | None = None
    regime_C: float = 1e4
    regime_C_prime: float = 1e4
    chart_radius: float = 0.5
    lambda_min: float = LAMBDA_MIN
    blowup_threshold: float = BLOWUP_THRESHOLD
    ratio_bound: float = 1e3
    include_t_laplacian: bool = False

    def _base(self):
        return self.constants.get(2.0) or next(iter(self.constants.values()))

    @property
    def S(self) -> float:
        return self._base().S.value

    @property
    def c(self) -> float:
        return self._base().c.value

    @property
    def interaction_constant(self) -> float:
        if self.c_int is not None:
            return self.c_int
        return self._base().c_prime.value * self.c_G

    def sigma(self, pid: str) -> float:
        p = self.profiles[pid]
        return sigma_of(p, self.constants[p.beta].kappa_prime.value)

    def gamma(self, pid: str) -> float:
        p = self.profiles[pid]
        return 2.0 if p.is_quadratic else p.beta


def epsilon_ij(lam_i: float, lam_j: float, d: float) -> float:
    """``(lambda_i/lambda_j + lambda_j/lambda_i + lambda_i lambda_j d^2)^-1``."""
    return 1.0 / (lam_i / lam_j + lam_j / lam_i + lam_i * lam_j * d * d)


def d_epsilon_d_lambda_i(lam_i: float, lam_j: float, d: float) -> float:
    """Analytic ``d eps_ij / d lambda_i``."""
    eps = epsilon_ij(lam_i, lam_j, d)
    return -eps * eps * (1.0 / lam_j - lam_j / lam_i**2 + lam_j * d * d)


def sphere_positions(ens: BubbleEnsemble, model: FlowModel):
    return [chart_to_sphere(model.profiles[b.profile_id].position, b.a) for b in ens.bubbles]


def pair_distance(ens: BubbleEnsemble, model: FlowModel, i: int, j: int) -> float:
    """``d(a_i, a_j)`` with ``d^2 = |1 - <zeta_i, conj(zeta_j)>|``."""
    zs = sphere_positions(ens, model)
    return math.sqrt(cr_distance_sq(zs[i], zs[j]))


def _distances(ens, model):
    zs = sphere_positions(ens, model)
    p = len(zs)
    d = np.zeros((p, p))
    for i in range(p):
        for j in range(i + 1, p):
            d[i, j] = d[j, i] = math.sqrt(cr_distance_sq(zs[i], zs[j]))
    return d


def balanced_alpha(ens: BubbleEnsemble, model: FlowModel) -> BubbleEnsemble:
    """Move ``alpha`` onto ``alpha_i^2 K(a_i) = 1``."""
    bubbles = []
    for b in ens.bubbles:
        k = local_field_eval(model.profiles[b.profile_id], b.a, model.chart_radius).K
        if k <= 0:
            raise DomainError("K must stay positive in the chart")
        bubbles.append(replace(b, alpha=k ** -0.5))
    return replace(ens, bubbles=tuple(bubbles))


def _regime_check(ens, model, fields, eps):
    failed = []
    lam_min = float(ens.lams.min())
    for b, f in zip(ens.bubbles, fields):
        if b.lam * float(np.linalg.norm(f.grad)) > 2.0 * model.regime_C_prime:
            failed.append(f"lambda |grad K| > 2C' at {b.profile_id}")
    if eps.sum() / 2.0 > model.regime_C / lam_min**2:
        failed.append("sum eps_jk > C / lambda_1^2")
    if failed:
        raise RegimeError("; ".join(failed), failed)


def _energy_parts(ens, model, check_regime=True):
    fields = [local_field_eval(model.profiles[b.profile_id], b.a, model.chart_radius,
                              model.include_t_laplacian) for b in ens.bubbles]
    K = np.array([f.K for f in fields])
    alpha = np.array([b.alpha for b in ens.bubbles])
    lam = ens.lams
    d = _distances(ens, model)
    p = len(lam)
    eps = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            if i != j:
                eps[i, j] = epsilon_ij(lam[i], lam[j], d[i, j])
    if check_regime:
        _regime_check(ens, model, fields, eps)
    return fields, K, alpha, lam, d, eps


def reduced_energy(ens: BubbleEnsemble, model: FlowModel, check_regime: bool = True) -> float:
    """Leading-order energy of the ensemble (see module docstring)."""
    _, K, alpha, lam, _, eps = _energy_parts(ens, model, check_regime)
    S, c, cint = model.S, model.c, model.interaction_constant
    a2, a4k = float(np.sum(alpha**2)), float(np.sum(alpha**4 * K))
    sig = np.array([model.sigma(b.profile_id) for b in ens.bubbles])
    gam = np.array([model.gamma(b.profile_id) for b in ens.bubbles])
    self_term = c / (2 * S * S) * float(np.sum(alpha**4 / a4k * sig / lam**gam))
    coef = np.outer(alpha, alpha) / a2 - 2.0 * np.outer(alpha**3 * K, alpha) / a4k
    inter = cint / (S * S) * float(np.sum(eps * coef))
    return a2 * S / math.sqrt(a4k) * (1.0 - self_term + inter)


def energy_lambda_gradient(ens: BubbleEnsemble, model: FlowModel) -> tuple[np.ndarray, np.ndarray]:
    """``dJ/dlambda_j`` split into self and interaction parts (analytic in lambda)."""
    _, K, alpha, lam, d, eps = _energy_parts(ens, model, check_regime=False)
    S, c, cint = model.S, model.c, model.interaction_constant
    a2, a4k = float(np.sum(alpha**2)), float(np.sum(alpha**4 * K))
    pref = a2 * S / math.sqrt(a4k)
    p = len(lam)
    self_part = np.zeros(p)
    inter_part = np.zeros(p)
    coef = np.outer(alpha, alpha) / a2 - 2.0 * np.outer(alpha**3 * K, alpha) / a4k
    for j, b in enumerate(ens.bubbles):
        sig, gam = model.sigma(b.profile_id), model.gamma(b.profile_id)
        self_part[j] = pref * c / (2 * S * S) * alpha[j] ** 4 / a4k * sig * gam * lam[j] ** (-gam - 1)
        acc = 0.0
        for i in range(p):
            if i != j:
                de = d_epsilon_d_lambda_i(lam[j], lam[i], d[i, j])
                acc += de * (coef[i, j] + coef[j, i])
        inter_part[j] = pref * cint / (S * S) * acc
    return self_part, inter_part


@dataclass(frozen=True)
class FieldComponents:
    lam_dot: np.ndarray
    a_dot: np.ndarray
    lam_dot_self: np.ndarray
    lam_dot_interaction: np.ndarray
    alpha_dot: np.ndarray


def _shift_a(ens, j, axis, h):
    b = ens.bubbles[j]
    x = list(b.a.as_tuple())
    x[axis] += h
    nb = replace(b, a=HeisenbergPoint(complex(x[0], x[1]), x[2]))
    bubbles = list(ens.bubbles)
    bubbles[j] = nb
    return replace(ens, bubbles=tuple(bubbles))


def energy_position_gradient(ens: BubbleEnsemble, model: FlowModel, h: float = 1e-6) -> np.ndarray:
    """Centered differences of the energy in each chart coordinate, alpha kept balanced."""
    p = len(ens.bubbles)
    grad = np.zeros((p, 3))
    for j in range(p):
        for axis in range(3):
            up = balanced_alpha(_shift_a(ens, j, axis, h), model)
            dn = balanced_alpha(_shift_a(ens, j, axis, -h), model)
            grad[j, axis] = (reduced_energy(up, model, False) - reduced_energy(dn, model, False)) / (2 * h)
    return grad


def pseudo_gradient_field(ens: BubbleEnsemble, model: FlowModel) -> FieldComponents:
    """Descent field ``lambda' = -lambda^2 dJ/dlambda`` and ``a' = -lambda^-2 grad_a J``.

    The weights ``lambda^2`` and ``lambda^-2`` are the natural scalings of the
    variations ``lambda d/dlambda`` and ``lambda^-1 d/da`` of a bubble.
    """
    ens = balanced_alpha(ens, model)
    for b in ens.bubbles:
        if koranyi_norm(b.a) > model.chart_radius:
            raise DomainError(f"bubble at {b.profile_id} left the chart")
    self_part, inter_part = energy_lambda_gradient(ens, model)
    lam = ens.lams
    grad_a = energy_position_gradient(ens, model)
    return FieldComponents(
        lam_dot=-(lam**2) * (self_part + inter_part),
        a_dot=-grad_a / lam[:, None] ** 2,
        lam_dot_self=-(lam**2) * self_part,
        lam_dot_interaction=-(lam**2) * inter_part,
        alpha_dot=np.zeros(len(lam)))


def normal_form_energy(profile: CriticalPointProfile, lambda_tilde: float, V_norm_sq: float,
                       constants, mu: float = 0.1) -> float:
    """``S / K^(1/2) (1 + c (1 - mu) Gamma / lambda^gamma) + |V|^2`` with ``Gamma = -sigma``."""
    cls = classify_point(profile, constants)
    if cls.set is PointSet.NEITHER:
        raise DomainError("normal form applies to K1 and K2 points only")
    gamma = 2.0 if profile.is_quadratic else profile.beta
    Gamma = -cls.sigma
    return (constants.S.value / math.sqrt(profile.k_value)
            * (1.0 + constants.c.value * (1.0 - mu) * Gamma / lambda_tilde**gamma) + V_norm_sq)


# -- integrator --------------------------------------------------------------

@dataclass
class TrajectoryRecord:
    time: float
    J: float
    alpha: list
    a: list
    lam: list
    eps: list

    def to_json(self) -> str:
        return json.dumps({"time": self.time, "J": self.J, "alpha": self.alpha, "a": self.a,
                           "lambda": self.lam, "eps": self.eps}, sort_keys=True)


def _record(ens, model, J):
    lam = ens.lams
    d = _distances(ens, model)
    p = len(lam)
    eps = [epsilon_ij(lam[i], lam[j], d[i, j]) for i in range(p) for j in range(i + 1, p)]
    return TrajectoryRecord(ens.time, J, [b.alpha for b in ens.bubbles],
                            [list(b.a.as_tuple()) for b in ens.bubbles], lam.tolist(), eps)


def _state_vector(ens):
    return np.concatenate([[math.log(b.lam), *b.a.as_tuple()] for b in ens.bubbles])


def _step(ens, d_log_lam, d_a, dt):
    bubbles = []
    for j, b in enumerate(ens.bubbles):
        x1, x2, t = b.a.as_tuple()
        dx1, dx2, dtt = d_a[j]
        # K is only Lipschitz in t at the critical point; a step stops on t = 0
        # instead of oscillating across it
        t_new = 0.0 if (t + dtt) * t < 0 else t + dtt
        bubbles.append(replace(b, lam=b.lam * math.exp(d_log_lam[j]),
                               a=HeisenbergPoint(complex(x1 + dx1, x2 + dx2), t_new)))
    return BubbleEnsemble(tuple(bubbles), ens.time + dt)


@dataclass(frozen=True)
class StepControl:
    h0: float = 0.05
    h_max: float = 0.1
    h_min: float = 1e-12
    grow: float = 1.5
    max_steps: int = 5000
    stall_window: int = 100
    stall_distance: float = 1e-3


def integrate_flow(ens: BubbleEnsemble, model: FlowModel, horizon: float = math.inf,
                   control: StepControl = StepControl(), log=None
                   ) -> tuple[list[TrajectoryRecord], FlowFate]:
    """Normalised descent along the field in ``(log lambda, a)`` coordinates.

    The ``log lambda`` block and the position block are normalised separately
    and advanced by their own step lengths ``h`` and ``h_a``.  A step is
    accepted only if ``J`` does not increase; on rejection ``h_a`` is halved
    (down to zero, freezing the positions for that step) before ``h`` is, so a kink of ``K`` at the critical point (``|t|^(beta/2)`` with
    ``beta = 2``) throttles the position step without stalling the
    concentration.  ``log`` is an optional text stream receiving one JSON
    record per accepted step.
    """
    for b in ens.bubbles:
        if b.lam < model.lambda_min:
            raise DomainError(f"initial concentration below lambda_min={model.lambda_min}")
    ens = balanced_alpha(ens, model)
    ids = tuple(b.profile_id for b in ens.bubbles)
    J = reduced_energy(ens, model)
    traj = [_record(ens, model, J)]
    if log is not None:
        log.write(traj[-1].to_json() + "\n")
    h = h_a = control.h0
    states = [_state_vector(ens)]

    def fate(kind, reason):
        return traj, FlowFate(kind, ids if kind is FateKind.BLOW_UP else (), reason,
                              tuple(r.J for r in traj), tuple(tuple(r.lam) for r in traj),
                              tuple(tuple(r.eps) for r in traj))

    for _ in range(control.max_steps):
        lam = ens.lams
        if lam.min() > model.blowup_threshold:
            if lam.max() / lam.min() <= model.ratio_bound:
                return fate(FateKind.BLOW_UP, "all concentrations above threshold")
            return fate(FateKind.EXIT, "concentrations diverge at different rates")
        if ens.time >= horizon:
            return fate(FateKind.STAGNANT, "horizon reached")
        try:
            fld = pseudo_gradient_field(ens, model)
        except DomainError as exc:
            return fate(FateKind.EXIT, str(exc))
        v_lam, v_a = fld.lam_dot / lam, fld.a_dot
        s_lam, s_a = float(np.linalg.norm(v_lam)), float(np.linalg.norm(v_a))
        if s_lam + s_a == 0.0 or not math.isfinite(s_lam + s_a):
            return fate(FateKind.STAGNANT, "vanishing field")
        u_lam = v_lam / s_lam if s_lam > 0 else np.zeros_like(v_lam)
        u_a = v_a / s_a if s_a > 0 else np.zeros_like(v_a)
        while True:
            dt = h / s_lam if s_lam > 0 else h_a / s_a
            trial = _step(ens, h * u_lam, h_a * u_a, dt)
            reason = None
            try:
                trial = balanced_alpha(trial, model)
                J_new = reduced_energy(trial, model)
            except RegimeError as exc:
                reason = f"left the expansion regime: {exc}"
            except DomainError as exc:
                reason = str(exc)
            if reason is None and J_new <= J:
                break
            if h_a >= control.h_min:
                h_a *= 0.5
                if h_a < control.h_min and s_lam > 0:
                    h_a = 0.0
            else:
                h *= 0.5
            if max(h, h_a) < control.h_min:
                return fate(FateKind.EXIT if reason else FateKind.STAGNANT,
                            reason or "step size underflow")
        ens, J = trial, J_new
        states.append(_state_vector(ens))
        traj.append(_record(ens, model, J))
        if log is not None:
            log.write(traj[-1].to_json() + "\n")
        if ens.lams.min() < model.lambda_min:
            return fate(FateKind.EXIT, "concentration fell below lambda_min")
        if (len(states) > control.stall_window and np.linalg.norm(
                states[-1] - states[-1 - control.stall_window]) < control.stall_distance):
            return fate(FateKind.STAGNANT, "no net progress over the stall window")
        h = min(control.h_max, h * control.grow)
        h_a = min(control.h_max, max(h_a, control.h_min) * control.grow)
    return fate(FateKind.STAGNANT, "step budget exhausted")


def make_ensemble(profile_ids: Sequence[str], lam: float | Sequence[float] = 100.0,
                  offsets: Sequence[HeisenbergPoint] | None = None) -> BubbleEnsemble:
    lams = [lam] * len(profile_ids) if np.isscalar(lam) else list(lam)
    offs = offsets or [HeisenbergPoint()] * len(profile_ids)
    return BubbleEnsemble(tuple(Bubble(1.0, o, float(l), pid)
                                for pid, l, o in zip(profile_ids, lams, offs)))
