"""Census pipeline, certificates and human-readable reports.

A certificate is a JSON document with sorted keys and no timestamps, so a
re-run on the same configuration and cache state reproduces it byte for byte.
Schema ``crcensus-certificate/1``:

* ``schema``, ``tool_version``, ``config_hash`` (sha256 of the normalised config)
* ``c_G``, ``pd_margin``, ``tolerance``
* ``constants``: one entry per beta in use (always including 2.0)
* ``points``: per profile ``id, beta, b, K, set, sigma, m``
* ``k1_plus``: ``members, rho`` per positive definite K1 subset
* ``critical_points_at_infinity``: ``kind, members, index, m_sum, rho``
* ``l_plus``, ``L0``
* ``gates``: per ``k = 1 .. L0 + 1``: ``sum, cond1, cond2, verdict, bound,
  bound_as_printed, printed_differs``
* ``full_criterion``: ``k, exists, bound, bound_as_printed``
* ``sensitivity``: ``c_G`` sweep rows
* ``notes``: conventions that affect how the numbers are read
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .cache import ConstantsCache
from .config import CensusConfig
from .counting import build_report, census_from_classifications
from .critical import classify_point, validate_profile
from .errors import CensusError, ConfigError, DegenerateProfile
from .flow import BubbleEnsemble, Bubble, FlowModel, StepControl, integrate_flow
from .heisenberg import HeisenbergPoint
from .interaction import GreenKernelConfig
from .quadrature import compute_structural_constants

SCHEMA = "crcensus-certificate/1"

NOTES = (
    "c_G fixes the Green kernel normalisation G = c_G / |1 - <zeta, conj(eta)>|; "
    "K1+ membership can change with it (see sensitivity).",
    "Gate sums use the selection of the existence theorem; bounds use "
    "|1 - sum_{index <= k-1} (-1)^index|.",
    "bound_as_printed evaluates the counting statement literally (K2 filter m <= 4-k, "
    "tuple sign -(-1)^(sum m)); printed_differs marks rows where the two disagree.",
    "All H^1 integrals use theta0 ^ dtheta0 = 4 dx dy dt.",
)


class PipelineError(CensusError):
    """A stage of the census failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class Certificate:
    data: dict

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Certificate":
        return cls(json.loads(text))


def constants_for(config: CensusConfig, cache: ConstantsCache | None):
    return {b: compute_structural_constants(b, config.tolerance, cache) for b in config.betas}


def classify_all(config: CensusConfig, constants):
    out = []
    for p in config.profiles:
        cons = constants[p.beta]
        bad = validate_profile(p, cons)
        if bad:
            raise ConfigError(f"profile {p.id} violates the flatness conditions",
                              [f"{p.id}.{v.field}: {v.message} (margin {v.margin:.3e})"
                               for v in bad])
        out.append(classify_point(p, cons))
    return out


def _census_section(config, constants, classes, c_G):
    c2 = constants[2.0]
    census, k1plus = census_from_classifications(
        config.profiles, classes, c2.kappa_prime.value, c2.c.value, c2.c_prime.value,
        GreenKernelConfig(c_G), config.pd_margin)
    return build_report(census, k1plus)


def sweep_grid(lo: float, hi: float, n: int) -> list[float]:
    if n == 1:
        return [float(lo)]
    return [float(v) for v in np.geomspace(lo, hi, int(n))]


def sensitivity_sweep(config: CensusConfig, grid, constants=None, classes=None,
                      cache: ConstantsCache | None = None) -> list[dict]:
    """Re-run the census for each ``c_G`` in ``grid`` reusing the constants."""
    constants = constants or constants_for(config, cache)
    classes = classes or classify_all(config, constants)
    rows = []
    prev = None
    for cg in grid:
        rep = _census_section(config, constants, classes, cg)
        row = {"c_G": cg,
               "k1_plus": [list(m.members) for m in rep.k1plus],
               "L0": rep.census.L0, "exists": rep.exists, "bound": rep.total_bound}
        key = (row["k1_plus"], row["exists"], row["bound"])
        row["changed"] = prev is not None and key != prev
        prev = key
        rows.append(row)
    return rows


def run_census(config: CensusConfig, cache: ConstantsCache | None = None,
               sweep: list[float] | None = None) -> Certificate:
    """Constants, classification, K1+ enumeration, gates and bounds for ``k = 1 .. L0+1``."""
    try:
        constants = constants_for(config, cache)
    except CensusError as exc:
        raise PipelineError("constants", exc) from exc
    try:
        classes = classify_all(config, constants)
    except (DegenerateProfile, ConfigError) as exc:
        raise PipelineError("classification", exc) from exc
    try:
        rep = _census_section(config, constants, classes, config.c_G)
    except CensusError as exc:
        raise PipelineError("enumeration", exc) from exc
    if sweep is None:
        sweep = sweep_grid(*config.sweep)
    rows = sensitivity_sweep(config, sweep, constants, classes)

    census = rep.census
    gates = []
    for k in sorted(rep.gates):
        g = rep.gates[k]
        gates.append({"k": k, "sum": g.sum, "cond1": g.cond1, "cond2": g.cond2,
                      "verdict": g.verdict, "bound": rep.bounds[k],
                      "bound_as_printed": rep.printed_bounds[k],
                      "printed_differs": rep.bounds[k] != rep.printed_bounds[k]})
    data = {
        "schema": SCHEMA,
        "tool_version": __version__,
        "config_hash": config.config_hash(),
        "c_G": config.c_G,
        "pd_margin": config.pd_margin,
        "tolerance": config.tolerance,
        "constants": {repr(b): constants[b].as_dict() for b in sorted(constants)},
        "points": [{"id": p.id, "beta": p.beta, "b": list(p.b), "K": p.k_value,
                    "set": cl.set.value, "sigma": cl.sigma, "m": cl.m}
                   for p, cl in zip(config.profiles, classes)],
        "k1_plus": [{"members": list(m.members), "rho": m.rho} for m in rep.k1plus],
        "critical_points_at_infinity": [
            {"kind": c.kind.value, "members": list(c.members), "index": c.index,
             "m_sum": c.m_sum, "rho": c.rho} for c in census.points],
        "l_plus": census.l_plus,
        "L0": census.L0,
        "gates": gates,
        "full_criterion": {"k": census.L0 + 1, "exists": rep.exists, "bound": rep.total_bound,
                           "bound_as_printed": rep.printed_total_bound},
        "sensitivity": rows,
        "notes": list(NOTES),
    }
    return Certificate(data)


def emit_certificate(cert: Certificate, path: str | Path) -> None:
    Path(path).write_text(cert.to_json())


def emit_report(cert: Certificate) -> str:
    d = cert.data
    lines = [f"crcensus {d['tool_version']}  config {d['config_hash'][:16]}",
             f"c_G = {d['c_G']}   pd_margin = {d['pd_margin']}   tolerance = {d['tolerance']}", ""]
    lines.append("constants")
    for beta, cons in d["constants"].items():
        lines.append(f"  beta = {beta}: kappa = {cons['kappa']['value']:.12g}"
                     f"  kappa' = {cons['kappa_prime']['value']:.12g}")
    c2 = d["constants"][repr(2.0)]
    for name in ("c", "c2", "S", "omega3", "c_prime", "c0_sq"):
        lines.append(f"  {name:8s} = {c2[name]['value']:.12g} +- {c2[name]['error']:.1e}")
    lines += ["", "critical points"]
    for p in d["points"]:
        lines.append(f"  {p['id']:>8s}  beta={p['beta']:<5g} set={p['set']:<8s}"
                     f" sigma={p['sigma']:+.6g}  m={p['m']}")
    lines += ["", f"K1+ (l+ = {d['l_plus']})"]
    for m in d["k1_plus"]:
        lines.append(f"  {{{', '.join(m['members'])}}}  rho = {m['rho']:.6g}")
    lines += ["", f"critical points at infinity (L0 = {d['L0']})"]
    for c in d["critical_points_at_infinity"]:
        lines.append(f"  {c['kind']:<6s} {{{', '.join(c['members'])}}}  index {c['index']}")
    lines += ["", "  k   sum  cond1  cond2  exists  bound  as-printed"]
    for g in d["gates"]:
        mark = "  *" if g["printed_differs"] else ""
        lines.append(f"  {g['k']:<3d} {g['sum']:>4d}  {str(g['cond1']):<5s}  "
                     f"{str(g['cond2']):<5s}  {str(g['verdict']):<6s}  {g['bound']:>5d}"
                     f"  {g['bound_as_printed']:>10d}{mark}")
    fc = d["full_criterion"]
    lines += ["", f"k = L0 + 1 = {fc['k']}: exists = {fc['exists']}, #S >= {fc['bound']}"
              f" (as printed: {fc['bound_as_printed']})", "", "c_G sensitivity"]
    for row in d["sensitivity"]:
        flag = "  changed" if row["changed"] else ""
        lines.append(f"  c_G = {row['c_G']:<10.4g} |K1+| = {len(row['k1_plus']):<3d}"
                     f" exists = {row['exists']!s:<5s} bound = {row['bound']}{flag}")
    lines += ["", "notes (* marks rows where the printed counting form differs)"]
    lines += [f"  - {n}" for n in d["notes"]]
    return "\n".join(lines) + "\n"


def run_flow_scenario(config: CensusConfig, name: str, cache: ConstantsCache | None = None,
                      log=None, control: StepControl = StepControl()):
    """Integrate one configured scenario; returns ``(trajectory, fate)``."""
    sc = config.scenario(name)
    constants = constants_for(config, cache)
    profiles = {p.id: p for p in config.profiles}
    model = FlowModel(profiles, constants, c_G=config.c_G, chart_radius=config.chart_radius,
                      lambda_min=config.lambda_min, blowup_threshold=config.blowup_threshold,
                      ratio_bound=config.ratio_bound,
                      include_t_laplacian=config.include_t_laplacian)
    ens = BubbleEnsemble(tuple(
        Bubble(1.0, HeisenbergPoint(complex(b.a[0], b.a[1]), b.a[2]), b.lam, b.profile)
        for b in sc.bubbles))
    horizon = config.horizon if config.horizon is not None else float("inf")
    return integrate_flow(ens, model, horizon, control, log)

