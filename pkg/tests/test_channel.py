import math

import numpy as np
import pytest
from scipy import integrate

from aoivnet.channel import (
    ChannelError,
    ChannelParams,
    LinkSample,
    evaluate_sir,
    fit_rician_k,
    mixture_integral,
    mixture_integral_quad,
    mixture_is_monotone,
    mixture_pdf,
    path_loss,
    rician_power_pdf,
    rician_power_sf,
    sample_rician_power,
)
from aoivnet.config import DEFAULT_MIXTURE, RicianMixture, config_from_mapping
from aoivnet.geometry import SpatialRealization, sample_realization


def test_path_loss():
    assert path_loss(20.0, 3.0) == pytest.approx(1.25e-4)
    assert np.allclose(path_loss(np.array([1.0, 2.0]), 4.0), [1.0, 1 / 16])
    with pytest.raises(ChannelError):
        path_loss(0.0, 3.0)


def test_rayleigh_mean():
    x = sample_rician_power(0.0, np.random.default_rng(0), 1_000_000)
    assert 0.997 <= x.mean() <= 1.003


def test_strong_los_is_deterministic():
    x = sample_rician_power(1e6, np.random.default_rng(1), 100_000)
    assert x.var() < 1e-5
    assert x.mean() == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("k", [0.0, 1.0, 3.0, 10.0])
def test_rician_pdf_and_sf(k):
    total, _ = integrate.quad(lambda x: rician_power_pdf(x, k), 0, np.inf)
    mean, _ = integrate.quad(lambda x: x * rician_power_pdf(x, k), 0, np.inf)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert mean == pytest.approx(1.0, abs=1e-8)
    for x0 in (0.2, 1.0, 2.5):
        tail, _ = integrate.quad(lambda x: rician_power_pdf(x, k), x0, np.inf)
        assert rician_power_sf(x0, k) == pytest.approx(tail, rel=1e-7, abs=1e-12)


@pytest.mark.parametrize("k", [0.0, 1.0, 4.0])
def test_sampler_matches_sf(k):
    x = sample_rician_power(k, np.random.default_rng(2), 200_000)
    for x0 in (0.5, 1.0, 2.0):
        emp = np.mean(x > x0)
        assert emp == pytest.approx(rician_power_sf(x0, k), abs=4 * math.sqrt(0.25 / x.size))


def test_mixture_tracks_k1_tail():
    x = np.linspace(0, 6, 601)
    assert np.max(np.abs(mixture_pdf(x, DEFAULT_MIXTURE) - rician_power_sf(x, 1.0))) < 1e-3
    k, l1 = fit_rician_k(DEFAULT_MIXTURE, "sf")
    assert k == pytest.approx(1.0, abs=0.05) and l1 < 1e-3


def test_mixture_as_density():
    k, l1 = fit_rician_k(DEFAULT_MIXTURE, "pdf")
    assert 0.0 <= k <= 10.0 and l1 > 0
    assert mixture_integral(DEFAULT_MIXTURE) == pytest.approx(mixture_integral_quad(DEFAULT_MIXTURE), rel=1e-8)
    # the four-term fit dips below zero by ~1e-7 far in the tail
    y = mixture_pdf(np.linspace(0, DEFAULT_MIXTURE.support, 4001), DEFAULT_MIXTURE)
    assert y.min() > -1e-6
    assert not mixture_is_monotone(DEFAULT_MIXTURE)
    assert mixture_is_monotone(RicianMixture((1.0,), (1.0,)))


def test_mixture_pdf_support():
    with pytest.raises(ChannelError):
        mixture_pdf(25.0, DEFAULT_MIXTURE)
    assert mixture_pdf(0.0, DEFAULT_MIXTURE) == pytest.approx(sum(DEFAULT_MIXTURE.weights))


def test_sir_single_interferer():
    # one vehicle at the receiver's distance with unit gains -> SIR 1
    s = LinkSample(signal=20.0**-3, vehicle=20.0**-3, rsu=0.0)
    assert s.sir(0.2, 2.0) == pytest.approx(1.0)


def test_sir_no_interference_is_inf():
    assert LinkSample(1.0, 0.0, 0.0).sir(0.2, 2.0) == math.inf


def test_sir_monotone_in_power():
    s = LinkSample(1e-4, 3e-5, 2e-6)
    sir = s.sir(np.array([0.01, 0.1, 1.0, 10.0]), 2.0)
    assert np.all(np.diff(sir) > 0)


def test_evaluate_sir_isolated_link():
    net = config_from_mapping({"lambda_pv": 0.0, "lambda_pr": 0.0, "lambda_l": 0.0})
    real = sample_realization(net, np.random.default_rng(0))
    assert isinstance(real, SpatialRealization) and real.n_interferers == 0
    assert evaluate_sir(real, ChannelParams.from_config(net), np.random.default_rng(1)) == math.inf


def test_channel_params_validation():
    with pytest.raises(ChannelError):
        ChannelParams(2.0, 1.0, DEFAULT_MIXTURE, 0.2, 2.0)
    with pytest.raises(ChannelError):
        ChannelParams(3.0, -1.0, DEFAULT_MIXTURE, 0.2, 2.0)
