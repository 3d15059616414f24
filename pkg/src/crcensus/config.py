"""YAML census configuration: parsing, validation and defaults.

Layout::

    critical_points:
      - id: xi1
        position: {sphere: [[0.0, 0.0], [1.0, 0.0]]}   # (Re, Im) of zeta1, zeta2
        # or     {chart: [x1, x2, t]}                 # Heisenberg coordinates
        beta: 2.0
        b: [-1.0, -1.0, -1.0]                          # b1, b2, b0
        K: 1.0
    quadrature: {tolerance: 1.0e-8, mc_samples: 1000000, seed: 0}
    green: {c_G: 1.0, sweep: [0.1, 10.0, 9]}
    thresholds: {pd_margin: 1.0e-12, blowup_threshold: 1.0e4, chart_radius: 0.5}
    flow:
      scenarios:
        - name: pair
          bubbles:
            - {profile: xi1, lambda: 20.0, a: [0.0, 0.0, 0.0]}

Chart positions are mapped to the sphere with the inverse Cayley transform.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .critical import CriticalPointProfile
from .errors import ConfigError
from .heisenberg import HeisenbergPoint, SpherePoint, cayley_inverse, cr_distance_sq

DEFAULTS = {
    "quadrature": {"tolerance": 1e-8, "mc_samples": 1_000_000, "seed": 0},
    "green": {"c_G": 1.0, "sweep": [0.1, 10.0, 9]},
    "thresholds": {"pd_margin": 1e-12, "blowup_threshold": 1e4, "chart_radius": 0.5},
    "flow": {"scenarios": [], "horizon": None, "lambda_min": 10.0, "ratio_bound": 1e3,
             "include_t_laplacian": False},
}


@dataclass(frozen=True)
class BubbleSpec:
    profile: str
    lam: float
    a: tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Scenario:
    name: str
    bubbles: tuple[BubbleSpec, ...]


@dataclass(frozen=True)
class CensusConfig:
    profiles: tuple[CriticalPointProfile, ...]
    tolerance: float = 1e-8
    mc_samples: int = 1_000_000
    seed: int = 0
    c_G: float = 1.0
    sweep: tuple[float, float, int] = (0.1, 10.0, 9)
    pd_margin: float = 1e-12
    blowup_threshold: float = 1e4
    chart_radius: float = 0.5
    scenarios: tuple[Scenario, ...] = ()
    horizon: float | None = None
    lambda_min: float = 10.0
    ratio_bound: float = 1e3
    include_t_laplacian: bool = False
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def betas(self) -> list[float]:
        return sorted({2.0} | {p.beta for p in self.profiles})

    def scenario(self, name: str) -> Scenario:
        for sc in self.scenarios:
            if sc.name == name:
                return sc
        raise ConfigError(f"no flow scenario named {name!r}",
                          [f"flow.scenarios: {name!r} not defined"])

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


class _Collector:
    def __init__(self):
        self.violations: list[str] = []

    def add(self, path: str, message: str):
        self.violations.append(f"{path}: {message}")

    def number(self, path, value, *, positive=False, integer=False):
        try:
            if isinstance(value, bool):
                raise TypeError
            out = int(value) if integer else float(value)
            if integer and float(value) != out:
                raise ValueError
        except (TypeError, ValueError):
            self.add(path, f"expected a {'integer' if integer else 'number'}, got {value!r}")
            return None
        if not math.isfinite(out):
            self.add(path, "must be finite")
            return None
        if positive and not out > 0:
            self.add(path, f"must be positive, got {out}")
            return None
        return out


def _merge_defaults(data: dict) -> dict:
    out = copy.deepcopy(DEFAULTS)
    for section, values in data.items():
        if section in out and isinstance(values, dict):
            out[section].update(values)
        else:
            out[section] = values
    return out


def _position(col, path, pos):
    if not isinstance(pos, dict) or len(pos) != 1:
        col.add(path, "position must be {sphere: [[re, im], [re, im]]} or {chart: [x1, x2, t]}")
        return None
    (tag, val), = pos.items()
    if tag == "sphere":
        if not (isinstance(val, list) and len(val) == 2
                and all(isinstance(v, list) and len(v) == 2 for v in val)):
            col.add(path, "sphere position needs two [re, im] pairs")
            return None
        nums = [col.number(f"{path}.sphere", x) for pair in val for x in pair]
        if None in nums:
            return None
        try:
            return SpherePoint(complex(nums[0], nums[1]), complex(nums[2], nums[3]))
        except Exception as exc:  # zero vector
            col.add(path, str(exc))
            return None
    if tag == "chart":
        if not (isinstance(val, list) and len(val) == 3):
            col.add(path, "chart position needs [x1, x2, t]")
            return None
        nums = [col.number(f"{path}.chart", x) for x in val]
        if None in nums:
            return None
        return cayley_inverse(HeisenbergPoint(complex(nums[0], nums[1]), nums[2]))
    col.add(path, f"unknown position tag {tag!r}")
    return None


def validate_config(data) -> CensusConfig:
    """Validate a parsed config tree; raise :class:`ConfigError` listing every violation."""
    col = _Collector()
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping", ["<root>: not a mapping"])
    unknown = set(data) - set(DEFAULTS) - {"critical_points"}
    for key in sorted(unknown):
        col.add(key, "unknown section")
    full = _merge_defaults(data)
    points = full.get("critical_points")
    profiles = []
    if not isinstance(points, list) or not points:
        col.add("critical_points", "must be a non-empty list")
        points = []
    seen = set()
    for i, rec in enumerate(points):
        path = f"critical_points[{i}]"
        if not isinstance(rec, dict):
            col.add(path, "must be a mapping")
            continue
        pid = rec.get("id")
        if pid is None or not isinstance(pid, (str, int)):
            col.add(f"{path}.id", "missing or not a string")
        else:
            pid = str(pid)
            if pid in seen:
                col.add(f"{path}.id", f"duplicate id {pid!r}")
            seen.add(pid)
        pos = _position(col, f"{path}.position", rec.get("position"))
        beta = col.number(f"{path}.beta", rec.get("beta"))
        if beta is not None and not (2.0 <= beta < 4.0):
            col.add(f"{path}.beta", f"beta = {beta} outside the admissible range [2, 4)")
            beta = None
        if "b" in rec:
            braw = rec["b"]
        else:
            braw = [rec.get("b1"), rec.get("b2"), rec.get("b0")]
        if not (isinstance(braw, list) and len(braw) == 3):
            col.add(f"{path}.b", "b must be [b1, b2, b0]")
            bvals = [None]
        else:
            bvals = [col.number(f"{path}.b[{j}]", v) for j, v in enumerate(braw)]
            for j, v in enumerate(bvals):
                if v == 0.0:
                    col.add(f"{path}.b[{j}]", "coefficients must be nonzero")
        kval = col.number(f"{path}.K", rec.get("K"), positive=True)
        if None not in (pid, pos, beta, kval) and None not in bvals:
            profiles.append(CriticalPointProfile(pid, pos, beta, tuple(bvals), kval))
    for i in range(len(profiles)):
        for j in range(i + 1, len(profiles)):
            if cr_distance_sq(profiles[i].position, profiles[j].position) < 1e-12:
                col.add("critical_points", f"positions of {profiles[i].id!r} and "
                        f"{profiles[j].id!r} coincide")

    q, g, th, fl = full["quadrature"], full["green"], full["thresholds"], full["flow"]
    tol = col.number("quadrature.tolerance", q.get("tolerance"), positive=True)
    mc = col.number("quadrature.mc_samples", q.get("mc_samples"), positive=True, integer=True)
    if mc is not None and mc < 10**4:
        col.add("quadrature.mc_samples", "needs at least 10^4 samples")
    seed = col.number("quadrature.seed", q.get("seed"), integer=True)
    c_G = col.number("green.c_G", g.get("c_G"), positive=True)
    sweep = g.get("sweep")
    if not (isinstance(sweep, list) and len(sweep) == 3):
        col.add("green.sweep", "must be [lo, hi, n]")
        sweep = None
    else:
        lo = col.number("green.sweep[0]", sweep[0], positive=True)
        hi = col.number("green.sweep[1]", sweep[1], positive=True)
        n = col.number("green.sweep[2]", sweep[2], positive=True, integer=True)
        sweep = (lo, hi, n) if None not in (lo, hi, n) else None
    pd_margin = col.number("thresholds.pd_margin", th.get("pd_margin"), positive=True)
    blow = col.number("thresholds.blowup_threshold", th.get("blowup_threshold"), positive=True)
    radius = col.number("thresholds.chart_radius", th.get("chart_radius"), positive=True)
    lam_min = col.number("flow.lambda_min", fl.get("lambda_min"), positive=True)
    ratio = col.number("flow.ratio_bound", fl.get("ratio_bound"), positive=True)
    horizon = fl.get("horizon")
    if horizon is not None:
        horizon = col.number("flow.horizon", horizon, positive=True)

    ids = {p.id for p in profiles}
    scenarios = []
    names = set()
    for i, sc in enumerate(fl.get("scenarios") or []):
        path = f"flow.scenarios[{i}]"
        if not isinstance(sc, dict) or "name" not in sc:
            col.add(path, "scenario needs a name")
            continue
        name = str(sc["name"])
        if name in names:
            col.add(f"{path}.name", f"duplicate scenario {name!r}")
        names.add(name)
        bubbles = []
        used = set()
        for j, bb in enumerate(sc.get("bubbles") or []):
            bpath = f"{path}.bubbles[{j}]"
            if not isinstance(bb, dict):
                col.add(bpath, "must be a mapping")
                continue
            prof = str(bb.get("profile"))
            if prof not in ids:
                col.add(f"{bpath}.profile", f"unknown critical point {prof!r}")
            if prof in used:
                col.add(f"{bpath}.profile", f"critical point {prof!r} used twice")
            used.add(prof)
            lam = col.number(f"{bpath}.lambda", bb.get("lambda"), positive=True)
            if lam is not None and lam_min is not None and lam < lam_min:
                col.add(f"{bpath}.lambda", f"must be at least lambda_min = {lam_min}")
            a = bb.get("a", [0.0, 0.0, 0.0])
            if not (isinstance(a, list) and len(a) == 3):
                col.add(f"{bpath}.a", "must be [x1, x2, t]")
                continue
            av = [col.number(f"{bpath}.a[{k}]", v) for k, v in enumerate(a)]
            if lam is not None and None not in av:
                bubbles.append(BubbleSpec(prof, lam, tuple(av)))
        if not bubbles:
            col.add(path, "scenario has no bubbles")
        scenarios.append(Scenario(name, tuple(bubbles)))

    if col.violations:
        raise ConfigError(f"{len(col.violations)} configuration error(s)", col.violations)
    full["quadrature"].update({"tolerance": tol, "mc_samples": mc, "seed": seed})
    full["green"].update({"c_G": c_G, "sweep": list(sweep)})
    return CensusConfig(
        profiles=tuple(profiles), tolerance=tol, mc_samples=mc, seed=seed, c_G=c_G,
        sweep=sweep, pd_margin=pd_margin, blowup_threshold=blow, chart_radius=radius,
        scenarios=tuple(scenarios), horizon=horizon, lambda_min=lam_min, ratio_bound=ratio,
        include_t_laplacian=bool(fl.get("include_t_laplacian")), raw=_jsonable(full))


def _jsonable(obj):
    return json.loads(json.dumps(obj, sort_keys=True, default=str))


def parse_config(text: str, source: str = "<string>") -> CensusConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        where = f"{source}:{mark.line + 1}:{mark.column + 1}" if mark else source
        raise ConfigError(f"parse error at {where}: {exc.problem}",
                          [f"{where}: {exc.problem}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"parse error in {source}: {exc}", [str(exc)]) from exc
    return validate_config(data)


def load_config(path: str | Path) -> CensusConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", [str(exc)]) from exc
    return parse_config(text, str(path))
