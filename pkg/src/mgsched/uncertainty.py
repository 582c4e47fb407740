"""Probability models for wind, PV and load power.

Each source is reduced to a :class:`MixedDistribution` over power (kW): a
continuous density plus a list of point masses.  Wind power has atoms at 0
and at rated power because whole speed intervals map to a single output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special, stats

from .errors import InfeasibleMomentsError, ParameterError

# Load laws are cut at mean +/- LOAD_TRUNCATION_SIGMAS standard deviations.
LOAD_TRUNCATION_SIGMAS = 4.0


@dataclass(frozen=True)
class WeibullParams:
    k: float
    gamma: float

    def __post_init__(self):
        if not (self.k > 0 and self.gamma > 0):
            raise ParameterError(f"Weibull shape and scale must be positive, got k={self.k}, gamma={self.gamma}")

    def cdf(self, v):
        v = np.maximum(np.asarray(v, dtype=float), 0.0)
        return 1.0 - np.exp(-((v / self.gamma) ** self.k))


@dataclass(frozen=True)
class WtParams:
    v_in: float
    v_star: float
    v_out: float
    p_star: float

    def __post_init__(self):
        if not (0 < self.v_in < self.v_star < self.v_out):
            raise ParameterError("wind turbine speeds must satisfy 0 < v_in < v_star < v_out")
        if not self.p_star > 0:
            raise ParameterError("rated wind power must be positive")

    @property
    def h(self) -> float:
        return self.v_star / self.v_in - 1.0


@dataclass(frozen=True)
class BetaParams:
    lambda1: float
    lambda2: float
    p_max: float

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ParameterError(f"Beta shapes must be positive, got {self.lambda1}, {self.lambda2}")
        if not self.p_max > 0:
            raise ParameterError("PV p_max must be positive")


@dataclass(frozen=True)
class PvPanel:
    eta_m: float
    a_pv: float
    eta_pv: float
    cos_theta: float

    def __post_init__(self):
        for name in ("eta_m", "a_pv", "eta_pv", "cos_theta"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"PV panel {name} must be positive")
        for name in ("eta_m", "eta_pv", "cos_theta"):
            if getattr(self, name) > 1:
                raise ParameterError(f"PV panel {name} must not exceed 1")


@dataclass(frozen=True)
class NormalParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.mu >= 0 and self.sigma >= 0):
            raise ParameterError(f"load mean and std must be nonnegative, got mu={self.mu}, sigma={self.sigma}")


@dataclass(frozen=True)
class MixedDistribution:
    """Law of a nonnegative power variable: density part plus atoms.

    ``continuous_cdf``, when given, returns the continuous mass on
    ``[support_min, x]`` and lets discretization skip quadrature.
    """

    continuous_density: Callable[[float], float]
    point_masses: tuple = ()
    support_max: float = 0.0
    support_min: float = 0.0
    continuous_cdf: Optional[Callable[[float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.support_max < 0 or self.support_min < 0 or self.support_min > self.support_max:
            raise ParameterError("support must lie within [0, support_max]")
        for x, m in self.point_masses:
            if m < 0:
                raise ParameterError("point masses must be nonnegative")
            if not (self.support_min - 1e-12 <= x <= self.support_max + 1e-12):
                raise ParameterError(f"point mass at {x} lies outside the support")

    @property
    def atom_mass(self) -> float:
        return float(sum(m for _, m in self.point_masses))


def _zero_density(p):
    return 0.0


def point_mass(x: float) -> MixedDistribution:
    return MixedDistribution(_zero_density, ((float(x), 1.0),), support_max=float(x),
                             support_min=float(x), continuous_cdf=_zero_density)


def weibull_pdf(v, p: WeibullParams):
    """Weibull wind-speed density (s/m)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ParameterError("wind speed must be nonnegative")
    x = v / p.gamma
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (p.k / p.gamma) * x ** (p.k - 1) * np.exp(-(x**p.k))
    # k < 1 diverges at the origin; report the limit rather than nan.
    out = np.where(np.isfinite(out), out, np.inf)
    return float(out) if out.ndim == 0 else out


def wt_power_curve(v, w: WtParams):
    """Piecewise-linear turbine output (kW) for wind speed ``v`` (m/s)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ParameterError("wind speed must be nonnegative")
    ramp = w.p_star * (v - w.v_in) / (w.v_star - w.v_in)
    out = np.where(v < w.v_in, 0.0, np.where(v < w.v_star, ramp, np.where(v < w.v_out, w.p_star, 0.0)))
    return float(out) if out.ndim == 0 else out


def wt_output_distribution(p: WeibullParams, w: WtParams) -> MixedDistribution:
    """Mixed law of turbine output: ramp density plus atoms at 0 and rated power."""
    cdf = p.cdf
    mass_zero = float(cdf(w.v_in) + (1.0 - cdf(w.v_out)))
    mass_rated = float(cdf(w.v_out) - cdf(w.v_star))
    h = w.h
    scale = p.k * h * w.v_in / (p.gamma * w.p_star)

    def density(x):
        if x <= 0 or x >= w.p_star:
            return 0.0
        z = (1.0 + h * x / w.p_star) * w.v_in / p.gamma
        return scale * z ** (p.k - 1) * math.exp(-(z**p.k))

    base = float(cdf(w.v_in))

    def cont_cdf(x):
        x = min(max(x, 0.0), w.p_star)
        v = w.v_in + (w.v_star - w.v_in) * x / w.p_star
        return float(cdf(v)) - base

    masses = tuple((x, m) for x, m in ((0.0, mass_zero), (w.p_star, mass_rated)) if m > 0)
    return MixedDistribution(density, masses, support_max=w.p_star, continuous_cdf=cont_cdf)


def beta_shape_from_moments(mu_pv: float, sigma_pv: float) -> tuple[float, float]:
    """Beta shapes matching a per-unit mean and standard deviation."""
    if not 0 < mu_pv < 1:
        raise ParameterError(f"PV mean must lie in (0, 1), got {mu_pv}")
    var = sigma_pv**2
    bound = mu_pv * (1.0 - mu_pv)
    if not 0 < var < bound:
        raise InfeasibleMomentsError(f"PV variance {var:g} must lie in (0, {bound:g})")
    common = bound / var - 1.0
    return mu_pv * common, (1.0 - mu_pv) * common


def pv_output_from_irradiance(xi, panel: PvPanel):
    return xi * panel.eta_m * panel.a_pv * panel.eta_pv * panel.cos_theta


def pv_output_pdf(p, b: BetaParams):
    """Beta density of PV output rescaled to [0, p_max] (1/kW)."""
    p = np.asarray(p, dtype=float)
    r = p / b.p_max
    inside = (r > 0) & (r < 1)
    log_norm = special.gammaln(b.lambda1 + b.lambda2) - special.gammaln(b.lambda1) - special.gammaln(b.lambda2)
    rr = np.where(inside, r, 0.5)
    dens = np.exp(log_norm + (b.lambda1 - 1) * np.log(rr) + (b.lambda2 - 1) * np.log1p(-rr)) / b.p_max
    out = np.where(inside, dens, 0.0)
    return float(out) if out.ndim == 0 else out


def pv_output_distribution(b: Optional[BetaParams]) -> MixedDistribution:
    if b is None:
        return point_mass(0.0)
    dist = stats.beta(b.lambda1, b.lambda2, scale=b.p_max)
    return MixedDistribution(lambda x: pv_output_pdf(x, b), (), support_max=b.p_max,
                             continuous_cdf=lambda x: float(dist.cdf(x)))


def load_pdf(p, n: NormalParams):
    if not n.sigma > 0:
        raise ParameterError("load_pdf needs sigma > 0; use a point mass for deterministic load")
    p = np.asarray(p, dtype=float)
    out = np.exp(-0.5 * ((p - n.mu) / n.sigma) ** 2) / (n.sigma * math.sqrt(2 * math.pi))
    return float(out) if out.ndim == 0 else out


def load_distribution(n: NormalParams) -> MixedDistribution:
    """Normal load cut at max(0, mu - 4 sigma) and mu + 4 sigma.

    The cut tails become atoms at the two cut points so no mass is lost.
    """
    if n.sigma == 0:
        return point_mass(n.mu)
    lo = max(0.0, n.mu - LOAD_TRUNCATION_SIGMAS * n.sigma)
    hi = n.mu + LOAD_TRUNCATION_SIGMAS * n.sigma
    phi_lo = float(stats.norm.cdf(lo, n.mu, n.sigma))
    phi_hi = float(stats.norm.cdf(hi, n.mu, n.sigma))

    def density(x):
        return load_pdf(x, n) if lo <= x <= hi else 0.0

    def cont_cdf(x):
        x = min(max(x, lo), hi)
        return float(stats.norm.cdf(x, n.mu, n.sigma)) - phi_lo

    masses = ((lo, phi_lo), (hi, 1.0 - phi_hi))
    return MixedDistribution(density, masses, support_max=hi, support_min=lo, continuous_cdf=cont_cdf)


@dataclass(frozen=True)
class PeriodUncertainty:
    """Independent wind, PV and load laws for one scheduling period."""

    wind: WeibullParams
    turbine: WtParams
    pv: Optional[BetaParams]
    load: NormalParams

    def distributions(self) -> tuple[MixedDistribution, MixedDistribution, MixedDistribution]:
        """Return (wind, pv, load) power laws."""
        return wt_output_distribution(self.wind, self.turbine), pv_output_distribution(self.pv), load_distribution(self.load)

    def sample_equivalent_load(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` realizations of load minus wind minus PV (kW)."""
        speeds = self.wind.gamma * rng.weibull(self.wind.k, size=n)
        wt = wt_power_curve(speeds, self.turbine)
        if self.pv is None:
            pv = np.zeros(n)
        else:
            pv = self.pv.p_max * rng.beta(self.pv.lambda1, self.pv.lambda2, size=n)
        load = np.maximum(rng.normal(self.load.mu, self.load.sigma, size=n), 0.0)
        return load - wt - pv


def sample_equivalent_loads(periods: Sequence[PeriodUncertainty], n: int, seed: int) -> np.ndarray:
    """Matrix of shape (T, n) of equivalent-load samples from one seeded stream."""
    rng = np.random.default_rng(seed)
    return np.vstack([p.sample_equivalent_load(n, rng) for p in periods])
