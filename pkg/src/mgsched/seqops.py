"""Probabilistic sequences and the convolution operations on them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ParameterError, StepMismatchError
from .uncertainty import MixedDistribution

QUAD_EPSABS = 1e-10
_SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ProbSeq:
    """Discrete law over powers 0, q, 2q, ..., N*q."""

    step_q: float
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise ParameterError("a probabilistic sequence needs at least one entry")
        if not self.step_q > 0:
            raise ParameterError(f"step size must be positive, got {self.step_q}")
        if np.any(probs < 0):
            raise ParameterError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > _SUM_TOL:
            raise ParameterError(f"probabilities sum to {probs.sum():.12g}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n(self) -> int:
        return self.probs.size - 1

    def __len__(self):
        return self.probs.size

    def __eq__(self, other):
        return (isinstance(other, ProbSeq) and self.step_q == other.step_q
                and np.array_equal(self.probs, other.probs))

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def powers(self) -> np.ndarray:
        return self.step_q * np.arange(self.probs.size)


def _check_steps(a: ProbSeq, b: ProbSeq):
    if not math.isclose(a.step_q, b.step_q, rel_tol=1e-12, abs_tol=0.0):
        raise StepMismatchError(f"step sizes differ: {a.step_q} vs {b.step_q}")


def discretize(d: MixedDistribution, q: float) -> ProbSeq:
    """Bin a mixed law onto the grid 0, q, ..., N*q with N = ceil(support_max / q).

    Bin i collects mass in [i*q - q/2, i*q + q/2); bin 0 starts at 0 and the
    last bin ends at support_max.
    """
    if not q > 0:
        raise ParameterError(f"step size must be positive, got {q}")
    n = math.ceil(d.support_max / q - 1e-12) if d.support_max > 0 else 0
    probs = np.zeros(n + 1)

    edges = (np.arange(n + 2) - 0.5) * q
    edges[0] = 0.0
    edges[-1] = max(d.support_max, edges[-2])
    lo_s, hi_s = d.support_min, d.support_max
    if hi_s > lo_s:
        for i in range(n + 1):
            lo, hi = max(edges[i], lo_s), min(edges[i + 1], hi_s)
            if hi <= lo:
                continue
            if d.continuous_cdf is not None:
                probs[i] = d.continuous_cdf(hi) - d.continuous_cdf(lo)
            else:
                probs[i], _ = integrate.quad(d.continuous_density, lo, hi, epsabs=QUAD_EPSABS, limit=200)
    probs = np.maximum(probs, 0.0)

    for x, m in d.point_masses:
        i = min(int(math.floor(x / q + 0.5)), n)
        probs[i] += m

    total = probs.sum()
    if not total > 0:
        raise ParameterError("distribution has no mass to discretize")
    return ProbSeq(q, probs / total)


def expectation(s: ProbSeq) -> float:
    """Mean power in kW."""
    return float(s.step_q * np.dot(np.arange(s.probs.size), s.probs))


def atc(a: ProbSeq, b: ProbSeq) -> ProbSeq:
    """Law of the sum of two independent sequences."""
    _check_steps(a, b)
    return ProbSeq(a.step_q, np.convolve(a.probs, b.probs))


def stc(a: ProbSeq, b: ProbSeq) -> ProbSeq:
    """Law of max(A - B, 0) for independent A, B; nonpositive differences fold into index 0."""
    _check_steps(a, b)
    # Index k of the full correlation is the difference i_a - i_b = k - N_b.
    diff = np.convolve(a.probs, b.probs[::-1])
    nb = b.n
    out = diff[nb:].copy()
    out[0] += diff[:nb].sum()
    return ProbSeq(a.step_q, out)


def equivalent_load_seq(d: ProbSeq, a: ProbSeq, b: ProbSeq) -> ProbSeq:
    """Equivalent-load law: load minus the joint wind+PV output, floored at 0."""
    return stc(d, atc(a, b))


def quantile_index(s: ProbSeq, alpha: float) -> int:
    """Smallest index whose cumulative probability reaches ``alpha``.

    ``alpha == 1`` returns the last index carrying nonzero probability.
    """
    if not 0 < alpha <= 1:
        raise ParameterError(f"confidence level must lie in (0, 1], got {alpha}")
    if alpha == 1:
        return int(np.flatnonzero(s.probs > 0)[-1])
    # 1e-12 absorbs round-off in the running sum, e.g. 0.1+0.2+0.4+0.2 vs 0.9.
    idx = int(np.searchsorted(s.cdf(), alpha - 1e-12, side="left"))
    return min(idx, s.n)
