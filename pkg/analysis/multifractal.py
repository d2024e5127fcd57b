from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from core.errors import InvalidSpec, MeasureOverflow

# exp() overflows a double beyond this
MAX_LOG = 709.0


@dataclass(frozen=True)
class TwoScaleMeasure:
    """Binomial measure: piece i has length ratio l_i and mass weight p_i."""

    l1: float
    l2: float
    p1: float
    p2: float

    def __post_init__(self):
        for name in ("l1", "l2", "p1", "p2"):
            v = float(getattr(self, name))
            if not 0 < v < 1:
                raise InvalidSpec(f"{name} must lie in (0, 1), got {v}")
            object.__setattr__(self, name, v)
        if self.l1 + self.l2 > 1 + 1e-12:
            raise InvalidSpec(f"l1 + l2 must be <= 1, got {self.l1 + self.l2}")
        if abs(self.p1 + self.p2 - 1) > 1e-12:
            raise InvalidSpec(f"p1 + p2 must equal 1, got {self.p1 + self.p2}")

    @property
    def log_l(self) -> np.ndarray:
        return np.log([self.l1, self.l2])

    @property
    def log_p(self) -> np.ndarray:
        return np.log([self.p1, self.p2])

    def alphas(self) -> np.ndarray:
        return self.log_p / self.log_l


REFERENCE_MEASURE = TwoScaleMeasure(0.25, 0.4, 0.6, 0.4)


@dataclass(frozen=True)
class SpectrumPoint:
    q: float
    tau: float
    Dq: float
    alpha: float
    f: float


def alpha_min(m: TwoScaleMeasure) -> float:
    return float(m.alphas().min())


def alpha_max(m: TwoScaleMeasure) -> float:
    return float(m.alphas().max())


def _log_terms(m: TwoScaleMeasure, q: float, d: float) -> np.ndarray:
    return q * m.log_p + d * m.log_l


def partition_sum(m: TwoScaleMeasure, q: float, d: float, n: int, method: str = "closed") -> float:
    """(p1^q l1^d + p2^q l2^d)^n, or the same sum over the C(n, k) sub-segments."""
    if n < 0:
        raise InvalidSpec(f"n must be >= 0, got {n}")
    a, b = _log_terms(m, q, d)
    if method == "closed":
        log_z = n * np.logaddexp(a, b)
    elif method == "binomial":
        k = np.arange(n + 1)
        log_comb = np.array([math.log(math.comb(n, int(i))) for i in k])
        log_z = logsumexp(log_comb + k * a + (n - k) * b)
    else:
        raise InvalidSpec(f"unknown partition_sum method {method!r}")
    if log_z > MAX_LOG:
        raise MeasureOverflow(f"partition sum exp({log_z:.6g}) overflows at q={q}, d={d}, n={n}")
    return float(math.exp(log_z))


def _root_residual(m: TwoScaleMeasure, q: float, tau: float) -> float:
    return float(np.logaddexp(*_log_terms(m, q, tau)))


def mass_exponent(m: TwoScaleMeasure, q: float) -> float:
    """Root tau of p1^q l1^tau + p2^q l2^tau = 1 (decreasing in q)."""
    q = float(q)
    if not math.isfinite(q):
        raise InvalidSpec(f"q must be finite, got {q}")
    # the log of the sum is monotone decreasing in tau, so this bracket always holds the root
    span = abs(q) * alpha_max(m) + 2.0
    tau = brentq(lambda t: _root_residual(m, q, t), -span, span, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    w = np.exp(_log_terms(m, q, tau) - _root_residual(m, q, tau))
    slope = float(np.dot(w, m.log_l))
    return float(tau - _root_residual(m, q, tau) / slope)


def support_dimension(m: TwoScaleMeasure) -> float:
    """D with l1^D + l2^D = 1."""
    return mass_exponent(m, 0.0)


def information_dimension(m: TwoScaleMeasure) -> float:
    return float(np.dot([m.p1, m.p2], m.log_p) / np.dot([m.p1, m.p2], m.log_l))


def renyi_dimension(m: TwoScaleMeasure, q: float) -> float:
    if q == 1:
        return information_dimension(m)
    return mass_exponent(m, q) / (1.0 - q)


def holder_alpha(m: TwoScaleMeasure, q: float) -> float:
    """-dtau/dq by implicit differentiation of the root equation."""
    tau = mass_exponent(m, q)
    logs = _log_terms(m, q, tau)
    w = np.exp(logs - np.logaddexp(*logs))
    return float(np.dot(w, m.log_p) / np.dot(w, m.log_l))


def f_alpha(m: TwoScaleMeasure, q: float) -> tuple[float, float]:
    alpha = holder_alpha(m, q)
    return alpha, q * alpha + mass_exponent(m, q)


def spectrum_point(m: TwoScaleMeasure, q: float) -> SpectrumPoint:
    q = float(q)
    tau = mass_exponent(m, q)
    alpha = holder_alpha(m, q)
    return SpectrumPoint(q=q, tau=tau, Dq=renyi_dimension(m, q), alpha=alpha, f=q * alpha + tau)


def spectrum(m: TwoScaleMeasure, qs: Iterable[float]) -> list[SpectrumPoint]:
    return [spectrum_point(m, q) for q in qs]


def q_grid(q_min: float, q_max: float, q_step: float) -> np.ndarray:
    if q_step <= 0 or q_max < q_min:
        raise InvalidSpec(f"bad q grid {q_min}..{q_max} step {q_step}")
    count = int(math.floor((q_max - q_min) / q_step + 1e-9)) + 1
    # rounding keeps grid values like 0.5 exact
    return np.round(q_min + q_step * np.arange(count), 12)


def to_box_tau(tau: float) -> float:
    """Box-counting convention: tau_box = lim ln Z / ln delta = (q - 1) D_q = -tau."""
    return -tau


def from_box_tau(tau_box: float) -> float:
    return -tau_box


def triadic_dq(l1: float, l2: float, q: float) -> float:
    """Closed form for two equal cells of size 1/3 carrying masses l1 + l2 = 1."""
    l1, l2 = float(l1), float(l2)
    if not 0 < l1 < 1 or abs(l1 + l2 - 1) > 1e-12:
        raise InvalidSpec(f"need 0 < l1 < 1 and l1 + l2 = 1, got {l1}, {l2}")
    if q == 1:
        return -(l1 * math.log(l1) + l2 * math.log(l2)) / math.log(3)
    return float(np.logaddexp(q * math.log(l1), q * math.log(l2)) / math.log(3) / (1.0 - q))
