"""Scenario documents: parsing, validation and normalized dumps.

A scenario is JSON.  Per-period quantities are arrays of length ``horizon``;
a bare number is broadcast to every period.  See ``docs/scenario.md`` for
the schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from typing import Any, Optional

from .errors import InfeasibleMomentsError, ParameterError, ScenarioError
from .model import EssParams, MtUnit
from .uncertainty import (BetaParams, NormalParams, PeriodUncertainty, PvPanel, WeibullParams, WtParams,
                          beta_shape_from_moments, pv_output_from_irradiance)


@dataclass(frozen=True)
class Scenario:
    horizon: int
    step_q: float
    alpha: float
    units: tuple
    ess: EssParams
    turbine: WtParams
    wind: tuple
    pv: tuple
    pv_p_max: float
    load: tuple
    cnload_max: tuple
    cnload_price: float = 0.0
    charge_is_cost: bool = False
    ess_exclusivity: bool = False
    name: str = "scenario"

    def period_uncertainty(self) -> list:
        return [PeriodUncertainty(w, self.turbine, b, l) for w, b, l in zip(self.wind, self.pv, self.load)]

    @property
    def system_capacity(self) -> float:
        return sum(u.p_max for u in self.units) + self.ess.p_dc_max + self.turbine.p_star + self.pv_p_max

    # variants used by sweeps ------------------------------------------------
    def with_alpha(self, alpha: float) -> "Scenario":
        return replace(self, alpha=float(alpha))

    def with_step(self, q: float) -> "Scenario":
        return replace(self, step_q=float(q))

    def with_load_sigma_fraction(self, frac: float) -> "Scenario":
        return replace(self, load=tuple(NormalParams(l.mu, frac * l.mu) for l in self.load))

    def with_ess_power_scale(self, scale: float) -> "Scenario":
        e = self.ess
        return replace(self, ess=replace(e, p_ch_max=e.p_ch_max * scale, p_dc_max=e.p_dc_max * scale))

    def with_ess_capacity_scale(self, scale: float) -> "Scenario":
        """Scale the energy window; minimum and initial state of charge keep their fractions of capacity."""
        if not scale > 0:
            raise ParameterError(f"capacity scale must be positive, got {scale}")
        e = self.ess
        return replace(self, ess=replace(e, c_min=e.c_min * scale, c_init=e.c_init * scale, c_max=e.c_max * scale))


# parsing -----------------------------------------------------------------

_MISSING = object()


def _get(doc: dict, key: str, path: str, default: Any = _MISSING):
    if not isinstance(doc, dict):
        raise ScenarioError(path or "<root>", "expected an object")
    if key not in doc:
        if default is _MISSING:
            raise ScenarioError(f"{path}.{key}" if path else key, "missing required field")
        return default
    return doc[key]


def _num(value, path: str, *, positive=False, nonneg=False, integer=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(path, f"expected a finite number, got {value!r}")
    if integer and int(value) != value:
        raise ScenarioError(path, f"expected an integer, got {value!r}")
    if positive and not value > 0:
        raise ScenarioError(path, f"must be positive, got {value!r}")
    if nonneg and not value >= 0:
        raise ScenarioError(path, f"must be nonnegative, got {value!r}")
    return int(value) if integer else float(value)


def _series(value, T: int, path: str, allow_null=False, **kw) -> list:
    if not isinstance(value, list):
        value = [value] * T
    if len(value) != T:
        raise ScenarioError(path, f"expected {T} entries, got {len(value)}")
    return [None if (allow_null and v is None) else _num(v, f"{path}[{t}]", **kw) for t, v in enumerate(value)]


def _build(cls, path: str, **kwargs):
    try:
        return cls(**kwargs)
    except ParameterError as exc:
        raise ScenarioError(path, str(exc)) from exc


_UNIT_FIELDS = ("p_min", "p_max", "fixed_cost", "fuel_slope", "startup_cost", "reserve_price")
_ESS_FIELDS = ("c_min", "c_max", "c_init", "p_ch_max", "p_dc_max", "eta_ch", "eta_dc", "charge_price",
               "discharge_price")
_WT_FIELDS = ("v_in", "v_star", "v_out", "p_star")
_PANEL_FIELDS = ("eta_m", "a_pv", "eta_pv", "cos_theta")


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("<root>", "expected a JSON object")
    T = _num(_get(doc, "horizon", ""), "horizon", positive=True, integer=True)
    step_q = _num(_get(doc, "step_q", ""), "step_q", positive=True)
    alpha = _num(_get(doc, "alpha", ""), "alpha")
    if not 0 < alpha <= 1:
        raise ScenarioError("alpha", f"confidence level must lie in (0, 1], got {alpha}")

    units_doc = _get(doc, "units", "")
    if not isinstance(units_doc, list) or not units_doc:
        raise ScenarioError("units", "expected a nonempty list")
    units = []
    for i, u in enumerate(units_doc):
        path = f"units[{i}]"
        vals = {f: _num(_get(u, f, path), f"{path}.{f}") for f in _UNIT_FIELDS}
        name = str(_get(u, "name", path, f"MT{i + 1}"))
        units.append(_build(MtUnit, path, name=name, **vals))

    ess_doc = _get(doc, "ess", "")
    ess = _build(EssParams, "ess", **{f: _num(_get(ess_doc, f, "ess"), f"ess.{f}") for f in _ESS_FIELDS})

    wind_doc = _get(doc, "wind", "")
    tdoc = _get(wind_doc, "turbine", "wind")
    turbine = _build(WtParams, "wind.turbine",
                     **{f: _num(_get(tdoc, f, "wind.turbine"), f"wind.turbine.{f}") for f in _WT_FIELDS})
    ks = _series(_get(wind_doc, "k", "wind"), T, "wind.k", positive=True)
    gammas = _series(_get(wind_doc, "gamma", "wind"), T, "wind.gamma", positive=True)
    wind = tuple(WeibullParams(k, g) for k, g in zip(ks, gammas))

    pv_doc = _get(doc, "pv", "")
    p_max = _num(_get(pv_doc, "p_max", "pv"), "pv.p_max", positive=True)
    panel_doc = _get(pv_doc, "panel", "pv", None)
    if panel_doc is not None:
        panel = _build(PvPanel, "pv.panel",
                       **{f: _num(_get(panel_doc, f, "pv.panel"), f"pv.panel.{f}") for f in _PANEL_FIELDS})
        # Rated output caps the panel formula at full irradiance (1 kW/m^2).
        p_max = min(p_max, pv_output_from_irradiance(1.0, panel))
    pv = []
    if "lambda1" in pv_doc or "lambda2" in pv_doc:
        l1 = _series(_get(pv_doc, "lambda1", "pv"), T, "pv.lambda1", allow_null=True, positive=True)
        l2 = _series(_get(pv_doc, "lambda2", "pv"), T, "pv.lambda2", allow_null=True, positive=True)
        for t, (a, b) in enumerate(zip(l1, l2)):
            if (a is None) != (b is None):
                raise ScenarioError(f"pv.lambda1[{t}]", "lambda1 and lambda2 must both be null or both set")
            pv.append(None if a is None else BetaParams(a, b, p_max))
    else:
        mus = _series(_get(pv_doc, "mu", "pv"), T, "pv.mu", nonneg=True)
        sigmas = _series(_get(pv_doc, "sigma", "pv"), T, "pv.sigma", nonneg=True)
        for t, (mu, sd) in enumerate(zip(mus, sigmas)):
            if mu == 0:
                pv.append(None)
                continue
            try:
                l1, l2 = beta_shape_from_moments(mu, sd)
            except InfeasibleMomentsError as exc:
                raise ScenarioError(f"pv.sigma[{t}]", f"period {t}: {exc}") from exc
            except ParameterError as exc:
                raise ScenarioError(f"pv.mu[{t}]", f"period {t}: {exc}") from exc
            pv.append(BetaParams(l1, l2, p_max))

    load_doc = _get(doc, "load", "")
    mus = _series(_get(load_doc, "mu", "load"), T, "load.mu", nonneg=True)
    if "sigma" in load_doc:
        sigmas = _series(load_doc["sigma"], T, "load.sigma", nonneg=True)
    else:
        frac = _num(_get(load_doc, "sigma_frac", "load"), "load.sigma_frac", nonneg=True)
        sigmas = [frac * m for m in mus]
    load = tuple(NormalParams(m, s) for m, s in zip(mus, sigmas))

    cnload = tuple(_series(_get(doc, "cnload_max", "", 0.0), T, "cnload_max", nonneg=True))
    flags = _get(doc, "flags", "", {}) or {}
    sc = Scenario(
        horizon=T, step_q=step_q, alpha=alpha, units=tuple(units), ess=ess, turbine=turbine, wind=wind,
        pv=tuple(pv), pv_p_max=p_max, load=load, cnload_max=cnload,
        cnload_price=_num(_get(doc, "cnload_price", "", 0.0), "cnload_price", nonneg=True),
        charge_is_cost=bool(_get(flags, "charge_is_cost", "flags", False)),
        ess_exclusivity=bool(_get(flags, "ess_exclusivity", "flags", False)),
        name=str(_get(doc, "name", "", "scenario")),
    )
    if step_q > sc.system_capacity:
        raise ScenarioError("step_q", f"step {step_q} exceeds the system capacity {sc.system_capacity}")
    return sc


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a JSON scenario; an empty document is treated as ``{}``."""
    if not text.strip():
        doc = {}
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError("<root>", f"invalid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def scenario_to_dict(sc: Scenario) -> dict:
    """Normalized form: every default applied, every per-period array explicit."""
    return {
        "name": sc.name,
        "horizon": sc.horizon,
        "step_q": sc.step_q,
        "alpha": sc.alpha,
        "units": [{"name": u.name, **{f: getattr(u, f) for f in _UNIT_FIELDS}} for u in sc.units],
        "ess": {f: getattr(sc.ess, f) for f in _ESS_FIELDS},
        "wind": {
            "turbine": {f: getattr(sc.turbine, f) for f in _WT_FIELDS},
            "k": [w.k for w in sc.wind],
            "gamma": [w.gamma for w in sc.wind],
        },
        "pv": {
            "p_max": sc.pv_p_max,
            "lambda1": [None if b is None else b.lambda1 for b in sc.pv],
            "lambda2": [None if b is None else b.lambda2 for b in sc.pv],
        },
        "load": {"mu": [l.mu for l in sc.load], "sigma": [l.sigma for l in sc.load]},
        "cnload_max": list(sc.cnload_max),
        "cnload_price": sc.cnload_price,
        "flags": {"charge_is_cost": sc.charge_is_cost, "ess_exclusivity": sc.ess_exclusivity},
    }


def dump_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def reference_scenario_text() -> str:
    return resources.files("mgsched.data").joinpath("ornl_decc.json").read_text(encoding="utf-8")


def reference_scenario(alpha: Optional[float] = None) -> Scenario:
    """The bundled ORNL DECC test system with reconstructed hourly profiles."""
    sc = parse_scenario(reference_scenario_text())
    return sc if alpha is None else sc.with_alpha(alpha)
