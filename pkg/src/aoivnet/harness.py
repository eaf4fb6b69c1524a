"""Monte Carlo coverage estimation and parameter sweeps."""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .analytic import (
    LinkBudget,
    QueueParams,
    avg_aoi_tandem,
    coverage_probability,
    expected_rate,
    rates_from_resources,
)
from .channel import draw_link_sample
from .config import DEFAULTS, NetworkConfig, config_from_mapping, merge_layers
from .geometry import realization_rng, sample_realization
from .tandemsim import simulate_average_aoi

MIN_REALIZATIONS = 100


class SweepSpecError(ValueError):
    pass


def config_hash(net: NetworkConfig) -> str:
    blob = json.dumps(net.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def wilson_stderr(p: float, n: int) -> float:
    """One-sigma half-width of the Wilson score interval."""
    return math.sqrt(p * (1 - p) / n + 1 / (4 * n * n)) / (1 + 1 / n)


@dataclass(frozen=True)
class MCEstimate:
    probability: float
    stderr: float
    n: int


def _coverage_counts(args) -> np.ndarray:
    net, p_v, thresholds, seed, start, stop = args
    p_v = np.asarray(p_v, dtype=float)
    thr = np.asarray(thresholds, dtype=float)
    counts = np.zeros((p_v.size, thr.size), dtype=np.int64)
    for i in range(start, stop):
        rng = realization_rng(seed, i)
        real = sample_realization(net, rng)
        sir = np.atleast_1d(draw_link_sample(real, net.alpha, net.rician_k, rng).sir(p_v, net.p_r))
        counts += sir[:, None] >= thr[None, :]
    return counts


def mc_coverage_grid(
    p_v: Sequence[float],
    thresholds: Sequence[float],
    net: NetworkConfig,
    n_realizations: int,
    seed: int | None = None,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Coverage on a (power x threshold) grid from one set of realizations.

    Every grid point sees the same realizations and fading draws, so the
    estimate is path-wise monotone in both power and threshold. Realization
    ``i`` uses the stream ``(seed, i)``, so results do not depend on
    ``workers``. Returns ``(probability, stderr)`` arrays.
    """
    if n_realizations < MIN_REALIZATIONS:
        raise ValueError(f"need at least {MIN_REALIZATIONS} realizations (got {n_realizations})")
    seed = net.seed if seed is None else seed
    p_v = np.atleast_1d(np.asarray(p_v, dtype=float))
    thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
    if workers <= 1:
        counts = _coverage_counts((net, p_v, thresholds, seed, 0, n_realizations))
    else:
        bounds = np.linspace(0, n_realizations, workers + 1).astype(int)
        jobs = [(net, p_v, thresholds, seed, a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            counts = sum(ex.map(_coverage_counts, jobs))
    prob = counts / n_realizations
    se = np.vectorize(lambda p: wilson_stderr(p, n_realizations))(prob)
    return prob, se


def mc_coverage(
    p_v: float,
    threshold: float,
    net: NetworkConfig,
    n_realizations: int,
    seed: int | None = None,
    workers: int = 1,
) -> MCEstimate:
    """Fraction of sampled networks in which the tagged link's SIR reaches ``threshold``."""
    prob, se = mc_coverage_grid([p_v], [threshold], net, n_realizations, seed, workers)
    return MCEstimate(float(prob[0, 0]), float(se[0, 0]), n_realizations)


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

RATE_AXES = ("mu1", "mu2")
AXIS_NAMES = tuple(k for k in DEFAULTS if k not in ("mixture", "seed")) + RATE_AXES
METRICS = ("coverage", "rate", "coverage_mc", "aoi_analytic", "aoi_sim", "mu1", "mu2")
STOCHASTIC = ("coverage_mc", "aoi_sim")


@dataclass
class SweepSpec:
    axes: list[tuple[str, list[float]]]
    metrics: list[str] = field(default_factory=lambda: ["aoi_analytic"])
    fixed: dict[str, Any] = field(default_factory=dict)
    replications: int = 1
    seed: int = 0
    horizon: float = 2000.0

    def __post_init__(self):
        self.axes = [(str(name), [float(v) for v in values]) for name, values in self.axes]
        if not self.axes:
            raise SweepSpecError("at least one axis is required")
        for name, values in self.axes:
            if name not in AXIS_NAMES:
                raise SweepSpecError(f"unknown parameter {name!r}; valid names: {', '.join(AXIS_NAMES)}")
            if not values:
                raise SweepSpecError(f"axis {name!r} has an empty grid")
            d = np.diff(values)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise SweepSpecError(f"axis {name!r} must be strictly monotone")
        names = [n for n, _ in self.axes]
        if len(set(names)) != len(names):
            raise SweepSpecError("duplicate axis names")
        for name in self.fixed:
            if name not in AXIS_NAMES:
                raise SweepSpecError(f"unknown parameter {name!r}; valid names: {', '.join(AXIS_NAMES)}")
        for m in self.metrics:
            if m not in METRICS:
                raise SweepSpecError(f"unknown metric {m!r}; valid metrics: {', '.join(METRICS)}")
        if self.replications < 1:
            raise SweepSpecError("replications must be >= 1")
        if "coverage_mc" in self.metrics and self.replications < MIN_REALIZATIONS:
            raise SweepSpecError(f"coverage_mc needs replications >= {MIN_REALIZATIONS}")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        data = dict(data)
        axes = data.pop("axes")
        if isinstance(axes, dict):
            axes = list(axes.items())
        unknown = set(data) - {"metrics", "fixed", "replications", "seed", "horizon"}
        if unknown:
            raise SweepSpecError(f"unknown sweep key(s) {sorted(unknown)}")
        return cls(axes=axes, **data)

    def to_dict(self) -> dict:
        return {
            "axes": [[n, v] for n, v in self.axes],
            "metrics": list(self.metrics),
            "fixed": dict(self.fixed),
            "replications": self.replications,
            "seed": self.seed,
            "horizon": self.horizon,
        }


@dataclass
class SweepResult:
    columns: list[str]
    rows: list[dict[str, Any]]
    metadata: dict[str, Any]

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r[name] is None else r[name] for r in self.rows], dtype=float)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in self.columns])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json(self, path=None) -> str:
        text = json.dumps({"metadata": self.metadata, "columns": self.columns, "rows": self.rows}, indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_json(cls, text: str) -> "SweepResult":
        d = json.loads(text)
        return cls(d["columns"], d["rows"], d["metadata"])


def _point_config(net: NetworkConfig, overrides: dict[str, Any]) -> NetworkConfig:
    cfg_keys = {k: v for k, v in overrides.items() if k not in RATE_AXES}
    if not cfg_keys:
        return net
    return config_from_mapping(merge_layers(net.user_mapping(), cfg_keys))


def _evaluate_point(args) -> dict[str, Any]:
    spec, net, point, index = args
    overrides = {**spec.fixed, **point}
    cfg = _point_config(net, overrides)
    row: dict[str, Any] = dict(point)

    q = None
    if any(m in spec.metrics for m in ("aoi_analytic", "aoi_sim", "mu1", "mu2")):
        if "mu1" in overrides and "mu2" in overrides:
            mu1, mu2 = overrides["mu1"], overrides["mu2"]
        else:
            mapped = rates_from_resources(cfg.p_v, cfg.cpu_freq_hz, cfg.threshold, LinkBudget.from_config(cfg), cfg)
            mu1, mu2 = overrides.get("mu1", mapped.mu1), overrides.get("mu2", mapped.mu2)
        q = QueueParams(cfg.lambda_pkt, float(mu1), float(mu2))

    point_seed = [spec.seed, index]
    for m in spec.metrics:
        if m == "coverage":
            row[m] = coverage_probability(cfg.p_v, cfg.threshold, cfg)
        elif m == "rate":
            row[m] = expected_rate(cfg.p_v, cfg.threshold, cfg)
        elif m == "coverage_mc":
            est = mc_coverage(cfg.p_v, cfg.threshold, cfg, spec.replications,
                              seed=int(np.random.SeedSequence(point_seed).generate_state(1)[0]))
            row[m], row["stderr_" + m] = est.probability, est.stderr
        elif m in ("mu1", "mu2"):
            row[m] = getattr(q, m)
        elif m == "aoi_analytic":
            row[m] = avg_aoi_tandem(q) if q.stable else None
        elif m == "aoi_sim":
            if q.stable:
                seeds = [[spec.seed, index, r] for r in range(spec.replications)]
                mean, se = simulate_average_aoi(q, spec.horizon, seeds)
                row[m], row["stderr_" + m] = mean, (None if math.isnan(se) else se)
            else:
                row[m], row["stderr_" + m] = None, None
    row["stable"] = bool(q.stable) if q is not None else True
    return row


def sweep(spec: SweepSpec, net: NetworkConfig, workers: int = 1) -> SweepResult:
    """Evaluate the requested metrics on the Cartesian grid of ``spec.axes``.

    Powers on the ``p_v_dbm``/``p_c_dbm`` axes are mapped to service rates
    through the expected data rate and the DVFS law; ``mu1``/``mu2`` axes set
    the rates directly. Unstable points keep their row with ``stable=False``
    and empty AoI values.
    """
    names = [n for n, _ in spec.axes]
    grids = [v for _, v in spec.axes]
    points = [dict(zip(names, combo)) for combo in itertools.product(*grids)]
    jobs = [(spec, net, p, i) for i, p in enumerate(points)]
    if workers <= 1:
        rows = [_evaluate_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_evaluate_point, jobs))

    columns = names + [m for m in spec.metrics]
    columns += ["stderr_" + m for m in spec.metrics if m in STOCHASTIC]
    columns.append("stable")
    for r in rows:
        for c in columns:
            r.setdefault(c, None)
    metadata = {
        "config_hash": config_hash(net),
        "seed": spec.seed,
        "version": __version__,
        "spec": spec.to_dict(),
        "lambda_pkt": net.lambda_pkt,
        "threshold_db": 10 * math.log10(net.threshold),
    }
    return SweepResult(columns, [{c: r[c] for c in columns} for r in rows], metadata)


# canned sweeps behind the trend checks
def preset_spec(name: str) -> SweepSpec:
    if name == "aoi-rates":
        return SweepSpec(axes=[("mu1", [600.0, 700.0, 800.0, 1000.0]), ("mu2", list(np.arange(550.0, 1501.0, 50.0)))],
                         metrics=["aoi_analytic"], fixed={"lambda_pkt": 500.0})
    if name == "coverage":
        return SweepSpec(axes=[("x_r", [10.0, 20.0, 30.0]), ("p_v_dbm", list(np.arange(15.0, 30.1, 1.0))),
                               ("threshold_db", [-10.0, -5.0, 0.0])], metrics=["coverage"])
    if name == "rate":
        return SweepSpec(axes=[("lambda_pv", [5e-3, 1e-2, 1.5e-2, 2e-2]), ("p_v_dbm", list(np.arange(15.0, 30.1, 1.0)))],
                         metrics=["rate"], fixed={"threshold_db": -10.0})
    if name == "aoi-powers":
        return SweepSpec(axes=[("p_v_dbm", list(np.arange(15.0, 30.1, 1.0))), ("p_c_dbm", list(np.arange(16.5, 30.51, 1.0)))],
                         metrics=["mu1", "mu2", "aoi_analytic"])
    if name == "aoi-saturation":
        return SweepSpec(axes=[("p_c_dbm", [20.0]), ("p_v_dbm", list(np.arange(15.0, 30.1, 0.5)))],
                         metrics=["mu1", "mu2", "aoi_analytic"])
    raise SweepSpecError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


PRESETS = ("aoi-rates", "coverage", "rate", "aoi-powers", "aoi-saturation")
