"""Path loss, fading and SIR of the tagged uplink."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special, stats

from .config import NetworkConfig, RicianMixture
from .geometry import NodeKind, SpatialRealization


class ChannelError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelParams:
    alpha: float
    rician_k: float
    mixture: RicianMixture
    p_v: float
    p_r: float

    def __post_init__(self):
        if not self.alpha > 2:
            raise ChannelError(f"alpha must be > 2 (got {self.alpha})")
        if self.p_v <= 0 or self.p_r <= 0:
            raise ChannelError("transmit powers must be > 0")
        if self.rician_k < 0:
            raise ChannelError(f"Rician factor must be >= 0 (got {self.rician_k})")

    @classmethod
    def from_config(cls, net: NetworkConfig, p_v: float | None = None) -> "ChannelParams":
        return cls(net.alpha, net.rician_k, net.mixture, net.p_v if p_v is None else p_v, net.p_r)


def path_loss(distance, alpha: float):
    """``distance ** -alpha``; works elementwise on arrays."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ChannelError("path loss is singular at distance 0")
    out = d ** (-alpha)
    return float(out) if out.ndim == 0 else out


def sample_rician_power(k: float, rng=None, size=None):
    """Unit-mean Rician power gain ``|mu + sigma z|^2`` with LoS ratio ``k``."""
    if k < 0:
        raise ChannelError(f"Rician factor must be >= 0 (got {k})")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    los = math.sqrt(k / (k + 1.0))
    sigma = math.sqrt(0.5 / (k + 1.0))  # per real dimension
    re = los + sigma * rng.standard_normal(size)
    im = sigma * rng.standard_normal(size)
    return re * re + im * im


def rician_power_pdf(x, k: float):
    """Density of the unit-mean Rician power gain.

    Uses ``I0(2 sqrt(K(1+K) x))``, the form that integrates to one.
    """
    x = np.asarray(x, dtype=float)
    z = 2.0 * np.sqrt(k * (1.0 + k) * np.clip(x, 0.0, None))
    # i0e(z) = exp(-z) I0(z) keeps the exponent bounded
    out = (1.0 + k) * np.exp(-k - (1.0 + k) * x + z) * special.i0e(z)
    out = np.where(x < 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def rician_power_sf(x, k: float):
    """``P[h > x]`` for the unit-mean Rician power gain."""
    x = np.asarray(x, dtype=float)
    if k == 0:
        out = np.exp(-np.clip(x, 0.0, None))
    else:
        # 2(K+1) h is noncentral chi-square with 2 dof and noncentrality 2K
        out = stats.ncx2.sf(2.0 * (k + 1.0) * np.clip(x, 0.0, None), 2, 2.0 * k)
    return float(out) if np.ndim(out) == 0 else out


def mixture_pdf(x, mixture: RicianMixture):
    """Evaluate ``sum_i w_i exp(-u_i x)`` on the mixture's support ``[0, W]``.

    With the default four-term table this curve tracks the tail probability
    ``P[h > x]`` of a K=1 Rician power gain (see :func:`fit_rician_k`), which
    is the reading under which the coverage expression is exact.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(x > mixture.support):
        raise ChannelError(f"mixture is only defined on [0, {mixture.support}]")
    out = np.exp(-np.multiply.outer(x, mixture.u)) @ mixture.w
    return float(out) if out.ndim == 0 else out


def mixture_integral(mixture: RicianMixture) -> float:
    """Closed-form ``int_0^inf sum_i w_i exp(-u_i x) dx = sum_i w_i / u_i``."""
    return float(np.sum(mixture.w / mixture.u))


def mixture_integral_quad(mixture: RicianMixture) -> float:
    """Same integral by adaptive quadrature (independent check)."""
    f = lambda x: float(np.exp(-x * mixture.u) @ mixture.w)  # noqa: E731
    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def mixture_is_monotone(mixture: RicianMixture, n: int = 4001) -> bool:
    """Whether the mixture is non-negative and non-increasing on its support.

    Those are the properties of a tail probability; a density would also have
    to integrate to one. Neither makes the mixture samplable directly because
    of the negative weights.
    """
    x = np.linspace(0.0, mixture.support, n)
    y = mixture_pdf(x, mixture)
    return bool(np.all(y >= -1e-12) and np.all(np.diff(y) <= 1e-12))


def fit_rician_k(
    mixture: RicianMixture,
    target: str = "sf",
    k_max: float = 10.0,
    x_max: float = 6.0,
) -> tuple[float, float]:
    """Rician factor whose power ``target`` ('sf' or 'pdf') is L1-closest to the mixture.

    Returns ``(k, l1_distance)`` over ``[0, x_max]``.
    """
    ref = {"sf": rician_power_sf, "pdf": rician_power_pdf}[target]
    x = np.linspace(0.0, x_max, 1201)
    mix = mixture_pdf(x, mixture)

    def l1(k):
        return float(integrate.trapezoid(np.abs(mix - ref(x, k)), x))

    grid = np.linspace(0.0, k_max, 201)
    errs = [l1(k) for k in grid]
    i = int(np.argmin(errs))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(l1, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
        if res.fun < errs[i]:
            return float(res.x), float(res.fun)
    return float(grid[i]), errs[i]


@dataclass(frozen=True)
class LinkSample:
    """Fading-weighted gains of one realization, independent of transmit power.

    ``signal`` is ``h_r * ||X_r||^-alpha``; ``vehicle``/``rsu`` are the summed
    ``g * d^-alpha`` over interferers of each kind.
    """

    signal: float
    vehicle: float
    rsu: float

    def sir(self, p_v, p_r: float):
        p_v = np.asarray(p_v, dtype=float)
        interference = p_v * self.vehicle + p_r * self.rsu
        with np.errstate(divide="ignore"):
            out = np.where(interference > 0, p_v * self.signal / np.where(interference > 0, interference, 1.0), np.inf)
        return float(out) if out.ndim == 0 else out


def draw_link_sample(realization: SpatialRealization, alpha: float, rician_k: float, rng) -> LinkSample:
    """Draw the tagged-link Rician gain and one exp(1) gain per interferer."""
    h = float(sample_rician_power(rician_k, rng))
    g = rng.exponential(1.0, realization.n_interferers)
    gains = g * path_loss(realization.distances(), alpha) if g.size else g
    is_rsu = realization.kind == int(NodeKind.TX_RSU)
    return LinkSample(
        signal=h * path_loss(realization.link_distance, alpha),
        vehicle=float(np.sum(gains[~is_rsu])),
        rsu=float(np.sum(gains[is_rsu])),
    )


def evaluate_sir(realization: SpatialRealization, params: ChannelParams, rng) -> float:
    """SIR of the tagged link; ``inf`` when there are no interferers."""
    sample = draw_link_sample(realization, params.alpha, params.rician_k, rng)
    return sample.sir(params.p_v, params.p_r)
