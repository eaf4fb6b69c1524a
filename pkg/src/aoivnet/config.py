"""Network configuration: defaults, unit conversion and validation.

All user-facing powers are in dBm and thresholds in dB. Everything is
converted to SI (watts, linear ratios, cycles/s) once, here, and the rest of
the package works in SI only.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np


class ConfigError(ValueError):
    """Invalid configuration key or value."""


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0) / 1000.0


def watt_to_dbm(p_watt: float) -> float:
    return 10.0 * math.log10(p_watt * 1000.0)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class RicianMixture:
    """Weighted-exponential approximation ``sum_i w_i exp(-u_i x)`` on [0, support].

    Weights may be negative, so the curve cannot be sampled from directly.
    """

    weights: tuple[float, ...]
    rates: tuple[float, ...]
    support: float = 20.0

    def __post_init__(self):
        if len(self.weights) != len(self.rates) or not self.weights:
            raise ConfigError("mixture: weights and rates must be non-empty and of equal length")
        if any(u <= 0 for u in self.rates):
            raise ConfigError("mixture: every rate must be > 0")
        if abs(sum(self.weights) - 1.0) > 1e-3:
            raise ConfigError(
                f"mixture: weights must sum to 1 within 1e-3 (got {sum(self.weights):.6f})"
            )
        if self.support <= 0:
            raise ConfigError("mixture: support must be > 0")

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    @property
    def u(self) -> np.ndarray:
        return np.asarray(self.rates, dtype=float)

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "rates": list(self.rates), "support": self.support}


# Four-term fit used throughout the analytic coverage expression.
DEFAULT_MIXTURE = RicianMixture(
    weights=(-0.8993, 5.9324, -5.4477, 1.4145),
    rates=(1.2475, 1.4298, 1.7436, 2.0326),
)

# User-unit defaults. ``cpu_freq_hz`` and ``p_c_dbm`` are mutually exclusive;
# when neither is given the frequency default below applies.
DEFAULTS: dict[str, Any] = {
    "lambda_l": 5e-3 / math.pi,
    "lambda_pv": 1e-2,
    "lambda_pr": 3e-3,
    "x_r": 20.0,
    "alpha": 3.0,
    "rician_k": 1.0,
    "mixture": DEFAULT_MIXTURE.to_dict(),
    "p_v_dbm": 23.0,
    "p_r_dbm": 33.0,
    "bandwidth_hz": 2e6,
    "packet_bits": 1e3,
    "lambda_pkt": 100.0,
    "kappa": 1e3,
    "zeta": 1.25e-26,
    "cpu_freq_hz": None,
    "p_c_dbm": None,
    "threshold_db": -10.0,
    "disk_radius_m": 1000.0,
    "seed": 0,
}
DEFAULT_CPU_FREQ_HZ = 2e8

ENV_PREFIX = "AOIVNET_"


@dataclass(frozen=True)
class NetworkConfig:
    """Resolved network parameters in SI units."""

    lambda_l: float = DEFAULTS["lambda_l"]
    lambda_pv: float = DEFAULTS["lambda_pv"]
    lambda_pr: float = DEFAULTS["lambda_pr"]
    x_r: float = DEFAULTS["x_r"]
    alpha: float = DEFAULTS["alpha"]
    rician_k: float = DEFAULTS["rician_k"]
    mixture: RicianMixture = DEFAULT_MIXTURE
    p_v: float = dbm_to_watt(DEFAULTS["p_v_dbm"])
    p_r: float = dbm_to_watt(DEFAULTS["p_r_dbm"])
    bandwidth_hz: float = DEFAULTS["bandwidth_hz"]
    packet_bits: float = DEFAULTS["packet_bits"]
    lambda_pkt: float = DEFAULTS["lambda_pkt"]
    kappa: float = DEFAULTS["kappa"]
    zeta: float = DEFAULTS["zeta"]
    cpu_freq_hz: float = DEFAULT_CPU_FREQ_HZ
    threshold: float = db_to_linear(DEFAULTS["threshold_db"])
    disk_radius_m: float = DEFAULTS["disk_radius_m"]
    seed: int = DEFAULTS["seed"]
    # user-unit mapping this config was built from (kept for manifests)
    source: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for key in ("lambda_l", "lambda_pv", "lambda_pr"):
            v = getattr(self, key)
            if not (v >= 0 and math.isfinite(v)):
                raise ConfigError(f"{key}: intensity must be finite and >= 0 (got {v})")
        for key in (
            "x_r", "p_v", "p_r", "bandwidth_hz", "packet_bits", "lambda_pkt",
            "kappa", "zeta", "cpu_freq_hz", "threshold", "disk_radius_m",
        ):
            v = getattr(self, key)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{key}: must be finite and > 0 (got {v})")
        if not self.alpha > 2:
            raise ConfigError(
                f"alpha: path-loss exponent must be > 2 for the interference "
                f"integrals to converge (got {self.alpha})"
            )
        if self.rician_k < 0:
            raise ConfigError(f"rician_k: must be >= 0 (got {self.rician_k})")

    @property
    def p_c(self) -> float:
        """Computation power in watts implied by the CPU frequency."""
        return self.zeta * self.cpu_freq_hz**3

    def replace(self, **changes) -> "NetworkConfig":
        from dataclasses import replace

        # the user mapping no longer describes the changed config
        return replace(self, **changes, source={})

    def user_mapping(self) -> dict[str, Any]:
        """User-unit keys that rebuild this config via :func:`config_from_mapping`."""
        if self.source:
            return dict(self.source)
        return {
            "lambda_l": self.lambda_l, "lambda_pv": self.lambda_pv, "lambda_pr": self.lambda_pr,
            "x_r": self.x_r, "alpha": self.alpha, "rician_k": self.rician_k,
            "mixture": self.mixture.to_dict(),
            "p_v_dbm": watt_to_dbm(self.p_v), "p_r_dbm": watt_to_dbm(self.p_r),
            "bandwidth_hz": self.bandwidth_hz, "packet_bits": self.packet_bits,
            "lambda_pkt": self.lambda_pkt, "kappa": self.kappa, "zeta": self.zeta,
            "cpu_freq_hz": self.cpu_freq_hz, "p_c_dbm": None,
            "threshold_db": linear_to_db(self.threshold),
            "disk_radius_m": self.disk_radius_m, "seed": self.seed,
        }

    def to_dict(self) -> dict:
        """SI view of every field, JSON-serialisable."""
        out = {}
        for name in self.__dataclass_fields__:
            if name == "source":
                continue
            v = getattr(self, name)
            out[name] = v.to_dict() if isinstance(v, RicianMixture) else v
        return out


def _coerce_number(key: str, value: Any, integer: bool = False):
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got a boolean")
    try:
        num = int(value) if integer else float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if integer and isinstance(value, float) and value != num:
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return num


def _parse_mixture(value: Any) -> RicianMixture:
    if not isinstance(value, Mapping):
        raise ConfigError("mixture: expected an object with 'weights' and 'rates'")
    unknown = set(value) - {"weights", "rates", "support"}
    if unknown:
        raise ConfigError(f"mixture: unknown key(s) {sorted(unknown)}")
    try:
        w = tuple(float(x) for x in value["weights"])
        u = tuple(float(x) for x in value["rates"])
    except KeyError as exc:
        raise ConfigError(f"mixture: missing {exc.args[0]!r}") from None
    except (TypeError, ValueError):
        raise ConfigError("mixture: weights and rates must be lists of numbers") from None
    support = _coerce_number("mixture.support", value.get("support", DEFAULT_MIXTURE.support))
    return RicianMixture(w, u, support)


def config_from_mapping(values: Mapping[str, Any] | None = None) -> NetworkConfig:
    """Build a :class:`NetworkConfig` from user-unit keys, filling defaults."""
    values = dict(values or {})
    unknown = set(values) - set(DEFAULTS)
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)}; valid keys are {sorted(DEFAULTS)}"
        )
    merged = {**DEFAULTS, **values}

    freq, p_c_dbm = merged["cpu_freq_hz"], merged["p_c_dbm"]
    if freq is not None and p_c_dbm is not None:
        raise ConfigError("cpu_freq_hz and p_c_dbm are mutually exclusive; give exactly one")
    if p_c_dbm is not None:
        p_c = dbm_to_watt(_coerce_number("p_c_dbm", p_c_dbm))
        zeta = _coerce_number("zeta", merged["zeta"])
        if zeta <= 0:
            raise ConfigError(f"zeta: must be > 0 (got {zeta})")
        freq = (p_c / zeta) ** (1.0 / 3.0)
    elif freq is None:
        freq = DEFAULT_CPU_FREQ_HZ

    num = lambda k: _coerce_number(k, merged[k])  # noqa: E731
    return NetworkConfig(
        lambda_l=num("lambda_l"),
        lambda_pv=num("lambda_pv"),
        lambda_pr=num("lambda_pr"),
        x_r=num("x_r"),
        alpha=num("alpha"),
        rician_k=num("rician_k"),
        mixture=_parse_mixture(merged["mixture"]),
        p_v=dbm_to_watt(num("p_v_dbm")),
        p_r=dbm_to_watt(num("p_r_dbm")),
        bandwidth_hz=num("bandwidth_hz"),
        packet_bits=num("packet_bits"),
        lambda_pkt=num("lambda_pkt"),
        kappa=num("kappa"),
        zeta=num("zeta"),
        cpu_freq_hz=_coerce_number("cpu_freq_hz", freq),
        threshold=db_to_linear(num("threshold_db")),
        disk_radius_m=num("disk_radius_m"),
        seed=_coerce_number("seed", merged["seed"], integer=True),
        source=merged,
    )


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, Any]:
    """Collect ``AOIVNET_<KEY>`` environment overrides (values parsed as JSON)."""
    environ = os.environ if environ is None else environ
    out = {}
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = name[len(ENV_PREFIX):].lower()
        if key not in DEFAULTS:
            raise ConfigError(f"environment variable {name}: unknown key {key!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def load_mapping(path: str | os.PathLike) -> dict[str, Any]:
    text = Path(path).read_text()
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def parse_config(path: str | os.PathLike | None = None, **overrides) -> NetworkConfig:
    """Read a JSON config file; ``overrides`` take precedence over file values."""
    values = load_mapping(path) if path is not None else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(values)


_EXCLUSIVE = ("cpu_freq_hz", "p_c_dbm")


def merge_layers(*layers: Mapping[str, Any] | None) -> dict[str, Any]:
    """Merge user-unit mappings, later layers winning.

    A layer that sets one of ``cpu_freq_hz``/``p_c_dbm`` clears the other
    from the layers below it.
    """
    out: dict[str, Any] = {}
    for layer in layers:
        if not layer:
            continue
        layer = {k: v for k, v in layer.items() if v is not None}
        for key in _EXCLUSIVE:
            if key in layer:
                for other in _EXCLUSIVE:
                    if other != key:
                        out.pop(other, None)
        out.update(layer)
    return out
