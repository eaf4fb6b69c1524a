"""Closed-form AoI, coverage and rate expressions, plus quadrature oracles.

AoI of the transmission/computation tandem queue follows the
Poisson-in-Poisson-out approximation (each stage treated as an independent
M/M/1 fed at rate ``lambda``). Coverage is the Laplace-functional expression
for the Cox process of vehicles and RSUs, with the other-roads term linearised
in the line-process PGFL.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .config import NetworkConfig


class UnstableQueueError(ValueError):
    pass


class DivergentInterferenceError(ValueError):
    pass


class CoverageClampWarning(RuntimeWarning):
    """Raw mixture sum left [0, 1] by more than the tolerance."""


EQUAL_RATE_RTOL = 1e-6
CLAMP_TOL = 1e-3
QUAD_EPSABS = 1e-10


@dataclass(frozen=True)
class QueueParams:
    lam: float
    mu1: float
    mu2: float

    @property
    def stable(self) -> bool:
        return 0 < self.lam < min(self.mu1, self.mu2)

    def check_stable(self) -> None:
        if self.lam <= 0:
            raise UnstableQueueError(f"sampling rate must be > 0 (got {self.lam})")
        if self.lam >= self.mu1:
            raise UnstableQueueError(
                f"unstable: sampling rate {self.lam} >= transmission rate mu1={self.mu1}"
            )
        if self.lam >= self.mu2:
            raise UnstableQueueError(
                f"unstable: sampling rate {self.lam} >= computation rate mu2={self.mu2}"
            )

    @property
    def equal_rates(self) -> bool:
        return abs(self.mu1 - self.mu2) <= EQUAL_RATE_RTOL * max(self.mu1, self.mu2)

    @property
    def eta(self) -> float:
        lam, m1, m2 = self.lam, self.mu1, self.mu2
        return (m1 - lam) * (m2 - lam) / (m1 - m2)


@dataclass(frozen=True)
class LinkBudget:
    bandwidth_hz: float
    packet_bits: float
    kappa: float
    zeta: float
    threshold: float
    cpu_freq_hz: float

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def from_config(cls, net: NetworkConfig) -> "LinkBudget":
        return cls(net.bandwidth_hz, net.packet_bits, net.kappa, net.zeta, net.threshold, net.cpu_freq_hz)


# --------------------------------------------------------------------------
# Tandem-queue AoI
# --------------------------------------------------------------------------

def avg_aoi_tandem(q: QueueParams) -> float:
    """Average AoI of the two-stage FCFS tandem queue (seconds)."""
    q.check_stable()
    lam = q.lam
    if q.equal_rates:
        mu = 0.5 * (q.mu1 + q.mu2)
        return 2 * lam**2 / mu**3 + 2 * lam**2 / ((mu - lam) * mu**2) + 2 / mu + 1 / lam
    # the expression is symmetric in the two rates; fix the evaluation order
    # so that swapping them gives bit-identical results
    m1, m2 = sorted((q.mu1, q.mu2))
    eta = (m1 - lam) * (m2 - lam) / (m1 - m2)
    bracket = 1.0 / ((m2 - lam) ** 2 * m2**2) - 1.0 / ((m1 - lam) ** 2 * m1**2)
    return lam**2 * eta * bracket + 1 / m1 + 1 / m2 + 1 / lam


def mm1_aoi(lam: float, mu: float) -> float:
    """Average AoI of a single FCFS M/M/1 queue."""
    rho = lam / mu
    return (1.0 + 1.0 / rho + rho**2 / (1.0 - rho)) / mu


def sojourn_pdf(t, q: QueueParams):
    """Density of the end-to-end sojourn time (sum of two exponential stages)."""
    q.check_stable()
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("sojourn time must be >= 0")
    lam = q.lam
    if q.equal_rates:
        a = 0.5 * (q.mu1 + q.mu2) - lam
        out = a * a * t * np.exp(-a * t)
    else:
        out = q.eta * (np.exp(-(q.mu2 - lam) * t) - np.exp(-(q.mu1 - lam) * t))
    return float(out) if out.ndim == 0 else out


def mean_sojourn(q: QueueParams) -> float:
    return 1.0 / (q.mu1 - q.lam) + 1.0 / (q.mu2 - q.lam)


def conditional_wait(y, q: QueueParams):
    """``E[(T - y)^+]`` for the sojourn time ``T``: the expected first-stage
    wait of a packet generated ``y`` after its predecessor."""
    q.check_stable()
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise ValueError("inter-generation time must be >= 0")
    lam = q.lam
    if q.equal_rates:
        a = 0.5 * (q.mu1 + q.mu2) - lam
        # integral of (t-y) a^2 t e^{-a t} over t > y
        out = np.exp(-a * y) * (y + 2.0 / a)
    else:
        a1, a2 = q.mu1 - lam, q.mu2 - lam
        out = q.eta * (np.exp(-a2 * y) / a2**2 - np.exp(-a1 * y) / a1**2)
    return float(out) if out.ndim == 0 else out


def conditional_wait_quad(y: float, q: QueueParams) -> float:
    """Quadrature of ``int_y^inf (t - y) f_T(t) dt``."""
    f = lambda t: (t - y) * sojourn_pdf(t, q)  # noqa: E731
    val, _ = integrate.quad(f, y, np.inf, epsabs=QUAD_EPSABS * 1e-2, epsrel=1e-12, limit=400)
    return val


# --------------------------------------------------------------------------
# Coverage and rate
# --------------------------------------------------------------------------

def _check_alpha(alpha: float) -> None:
    if not alpha > 2:
        raise DivergentInterferenceError(
            f"path-loss exponent alpha={alpha} <= 2: aggregate interference diverges"
        )


def laplace_same_road(omega, net: NetworkConfig, p_v: float | None = None):
    """Laplace transform of interference from the tagged road at ``omega``.

    ``omega`` multiplies received power, i.e. the argument is
    ``u_i T ||X_r||^alpha / P_v`` for mixture term ``i``.
    """
    _check_alpha(net.alpha)
    p_v = net.p_v if p_v is None else p_v
    a = net.alpha
    c = 2.0 * math.pi / (a * math.sin(math.pi / a))
    omega = np.asarray(omega, dtype=float)
    expo = c * (net.lambda_pr * (omega * net.p_r) ** (1 / a) + net.lambda_pv * (omega * p_v) ** (1 / a))
    out = np.exp(-expo)
    return float(out) if out.ndim == 0 else out


def laplace_other_roads(omega, net: NetworkConfig, p_v: float | None = None):
    """Laplace transform of interference from all other roads (linearised PGFL)."""
    _check_alpha(net.alpha)
    p_v = net.p_v if p_v is None else p_v
    a = net.alpha
    c = 2.0 * math.pi**3 * net.lambda_l / (a * math.sin(2.0 * math.pi / a))
    omega = np.asarray(omega, dtype=float)
    expo = c * (net.lambda_pr * (omega * net.p_r) ** (2 / a) + net.lambda_pv * (omega * p_v) ** (2 / a))
    out = np.exp(-expo)
    return float(out) if out.ndim == 0 else out


def _line_interference_mass(v: float, s: float, alpha: float) -> float:
    # int_0^inf s r^-a / (1 + s r^-a) dt with r = sqrt(v^2 + t^2)
    if s == 0:
        return 0.0
    f = lambda t: s / ((v * v + t * t) ** (alpha / 2) + s)  # noqa: E731
    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=QUAD_EPSABS, epsrel=1e-10, limit=400)
    return val


def laplace_other_roads_exact(omega: float, net: NetworkConfig, p_v: float | None = None) -> float:
    """Other-roads Laplace transform without linearising ``1 - exp(-x)``.

    Evaluates ``exp(-2 pi lambda_l int_0^inf 1 - exp(-2 sum_k lambda_k D_k(v)) dv)``
    by nested adaptive quadrature, where ``D_k(v)`` is the per-line interference
    mass of node kind ``k`` on a line at distance ``v``.
    """
    _check_alpha(net.alpha)
    p_v = net.p_v if p_v is None else p_v
    a = net.alpha
    s_r, s_v = omega * net.p_r, omega * p_v

    def g(v):
        x = 2.0 * (net.lambda_pr * _line_interference_mass(v, s_r, a)
                   + net.lambda_pv * _line_interference_mass(v, s_v, a))
        return -math.expm1(-x)

    val, _ = integrate.quad(g, 0.0, np.inf, epsabs=QUAD_EPSABS, epsrel=1e-9, limit=400)
    return math.exp(-2.0 * math.pi * net.lambda_l * val)


def _omegas(p_v: float, threshold: float, net: NetworkConfig) -> np.ndarray:
    return net.mixture.u * threshold * net.x_r**net.alpha / p_v


def coverage_probability_raw(p_v: float, threshold: float, net: NetworkConfig) -> float:
    """Mixture sum before clamping; may leave [0, 1] slightly."""
    if threshold <= 0:
        raise ValueError(f"SIR threshold must be > 0 (got {threshold})")
    if p_v <= 0:
        raise ValueError(f"transmit power must be > 0 (got {p_v})")
    om = _omegas(p_v, threshold, net)
    terms = laplace_same_road(om, net, p_v) * laplace_other_roads(om, net, p_v)
    return float(net.mixture.w @ np.atleast_1d(terms))


def coverage_probability(p_v: float, threshold: float, net: NetworkConfig) -> float:
    """Uplink coverage probability ``P[SIR >= threshold]`` at vehicle power ``p_v`` (W).

    The result is clamped to [0, 1]; a :class:`CoverageClampWarning` is issued
    if the raw mixture sum was outside by more than ``CLAMP_TOL``.
    """
    raw = coverage_probability_raw(p_v, threshold, net)
    if raw < -CLAMP_TOL or raw > 1 + CLAMP_TOL:
        warnings.warn(f"coverage mixture sum {raw:.6f} outside [0, 1]", CoverageClampWarning, stacklevel=2)
    return min(max(raw, 0.0), 1.0)


def expected_rate(p_v: float, threshold: float, net: NetworkConfig) -> float:
    """Expected spectral efficiency ``log2(1 + T) * P(P_v, T)`` in bit/s/Hz."""
    return math.log2(1.0 + threshold) * coverage_probability(p_v, threshold, net)


def compute_power_map(f: float, zeta: float) -> float:
    """CPU power (W) at clock ``f`` under the cubic DVFS law."""
    if f <= 0 or zeta <= 0:
        raise ValueError("frequency and zeta must be > 0")
    return zeta * f**3


def freq_from_power(p_c: float, zeta: float) -> float:
    if p_c <= 0 or zeta <= 0:
        raise ValueError("power and zeta must be > 0")
    return (p_c / zeta) ** (1.0 / 3.0)


def rates_from_resources(
    p_v: float,
    f: float,
    threshold: float,
    budget: LinkBudget,
    net: NetworkConfig,
) -> QueueParams:
    """Map vehicle power (W) and CPU clock (cycles/s) to tandem service rates.

    The result may be unstable; check :attr:`QueueParams.stable`.
    """
    if p_v <= 0 or f <= 0:
        raise ValueError("power and frequency must be > 0")
    mu1 = budget.bandwidth_hz * expected_rate(p_v, threshold, net) / budget.packet_bits
    mu2 = f / (budget.packet_bits * budget.kappa)
    return QueueParams(net.lambda_pkt, mu1, mu2)
