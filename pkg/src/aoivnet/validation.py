"""Programmatic acceptance suite: closed forms against simulators and oracles.

Each check returns a :class:`CriterionResult` carrying the measured value,
the tolerance it was held to and a verdict. :func:`validate` runs a set of
them and collects a JSON-serialisable report.
"""

from __future__ import annotations

import functools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np
from scipy import integrate

from . import analytic as an
from . import channel as ch
from . import tandemsim as ts
from .config import NetworkConfig, config_from_mapping, db_to_linear, dbm_to_watt
from .harness import mc_coverage_grid


@dataclass
class CriterionResult:
    id: str
    name: str
    passed: bool
    measured: Any
    tolerance: Any
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.id} {self.name}: measured={_fmt(self.measured)} tol={_fmt(self.tolerance)}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _timed(fn: Callable[..., CriterionResult]) -> Callable[..., CriterionResult]:
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    return wrapper


def _default_net() -> NetworkConfig:
    return config_from_mapping({})


# --------------------------------------------------------------------------

DES_GRID = (150.0, 200.0, 300.0, 450.0)


@_timed
def tandem_aoi_vs_des(horizon: float = 2000.0, n_seeds: int = 10, rel_tol: float = 0.05) -> CriterionResult:
    """DES average AoI against the closed form on the stable rate grid."""
    points = [(100.0, m1, m2) for m1 in DES_GRID for m2 in DES_GRID] + [(500.0, 600.0, 600.0)]
    rows = []
    for lam, m1, m2 in points:
        q = an.QueueParams(lam, m1, m2)
        sim, se = ts.simulate_average_aoi(q, horizon, [[int(lam), int(m1), int(m2), s] for s in range(n_seeds)])
        ana = an.avg_aoi_tandem(q)
        rows.append({"lam": lam, "mu1": m1, "mu2": m2, "des": sim, "stderr": se,
                     "analytic": ana, "rel_err": (sim - ana) / ana})
    worst = max(abs(r["rel_err"]) for r in rows)
    failing = [(r["lam"], r["mu1"], r["mu2"]) for r in rows if abs(r["rel_err"]) > rel_tol]
    return CriterionResult("C1", "tandem AoI closed form vs DES", not failing, worst, rel_tol,
                           {"points": rows, "failing": failing})


@_timed
def mm1_degeneration(rel_tol: float = 1e-4) -> CriterionResult:
    lam, mu1 = 100.0, 200.0
    val = an.avg_aoi_tandem(an.QueueParams(lam, mu1, 1e6 * mu1))
    ref = an.mm1_aoi(lam, mu1)
    rel = abs(val - ref) / ref
    return CriterionResult("C2", "M/M/1 limit of tandem AoI", rel < rel_tol, rel, rel_tol,
                           {"tandem": val, "mm1": ref})


@_timed
def symmetry_and_continuity(n_points: int = 100, cont_tol: float = 1e-6, seed: int = 7) -> CriterionResult:
    rng = np.random.default_rng(seed)
    asym = 0
    for _ in range(n_points):
        lam = rng.uniform(1.0, 500.0)
        m1, m2 = lam * rng.uniform(1.05, 10.0, 2)
        a = an.avg_aoi_tandem(an.QueueParams(lam, m1, m2))
        b = an.avg_aoi_tandem(an.QueueParams(lam, m2, m1))
        asym += a != b
    lam, mu = 100.0, 200.0
    delta = 1e-3 * mu
    split = an.avg_aoi_tandem(an.QueueParams(lam, mu + delta, mu - delta))
    equal = an.avg_aoi_tandem(an.QueueParams(lam, mu, mu))
    gap = abs(split - equal)
    return CriterionResult("C3", "swap symmetry and equal-rate continuity", asym == 0 and gap < cont_tol,
                           {"asymmetric_points": int(asym), "branch_gap_s": gap},
                           {"asymmetric_points": 0, "branch_gap_s": cont_tol})


MC_POWERS_DBM = (15.0, 23.0, 30.0)
MC_THRESHOLDS_DB = (-10.0, -5.0, 0.0)


@_timed
def coverage_vs_monte_carlo(n_realizations: int = 100_000, seed: int = 2024, workers: int = 1) -> CriterionResult:
    net = _default_net()
    p_v = [dbm_to_watt(p) for p in MC_POWERS_DBM]
    thr = [db_to_linear(t) for t in MC_THRESHOLDS_DB]
    prob, se = mc_coverage_grid(p_v, thr, net, n_realizations, seed=seed, workers=workers)
    rows, ok = [], True
    for i, pdbm in enumerate(MC_POWERS_DBM):
        for j, tdb in enumerate(MC_THRESHOLDS_DB):
            ana = an.coverage_probability(p_v[i], thr[j], net)
            tol = max(0.03, 4 * se[i, j])
            diff = float(prob[i, j] - ana)
            ok &= abs(diff) <= tol
            rows.append({"p_v_dbm": pdbm, "threshold_db": tdb, "mc": float(prob[i, j]),
                         "stderr": float(se[i, j]), "analytic": ana, "diff": diff, "tol": tol})
    worst = max(abs(r["diff"]) for r in rows)
    return CriterionResult("C4", "coverage closed form vs Monte Carlo", bool(ok), worst, "max(0.03, 4*SE)",
                           {"points": rows, "n_realizations": n_realizations})


@_timed
def taylor_gap(rel_tol: float = 0.05) -> CriterionResult:
    """Linearised other-roads Laplace factor against its nested-quadrature value."""
    net = _default_net()
    rows = []
    for u in net.mixture.u:
        om = u * net.threshold * net.x_r**net.alpha / net.p_v
        closed = an.laplace_other_roads(om, net)
        exact = an.laplace_other_roads_exact(om, net)
        rows.append({"u": float(u), "omega": float(om), "closed": closed, "exact": exact,
                     "signed_rel_gap": (closed - exact) / exact})
    worst = max(abs(r["signed_rel_gap"]) for r in rows)
    return CriterionResult("C5", "other-roads Laplace linearisation gap", worst < rel_tol, worst, rel_tol,
                           {"terms": rows})


def _strictly_decreasing(y) -> bool:
    return bool(np.all(np.diff(np.asarray(y, dtype=float)) < 0))


def _strictly_increasing(y) -> bool:
    return bool(np.all(np.diff(np.asarray(y, dtype=float)) > 0))


def _convex(y) -> bool:
    return bool(np.all(np.diff(np.asarray(y, dtype=float), 2) > 0))


def _aoi_at_powers(net: NetworkConfig, p_v_dbm: float, p_c_dbm: float) -> float:
    f = an.freq_from_power(dbm_to_watt(p_c_dbm), net.zeta)
    q = an.rates_from_resources(dbm_to_watt(p_v_dbm), f, net.threshold, an.LinkBudget.from_config(net), net)
    return an.avg_aoi_tandem(q)


@_timed
def trend_checks(saturation_tol: float = 0.02, level_s: float = 0.022, level_factor: float = 2.0) -> CriterionResult:
    net = _default_net()
    checks: dict[str, bool] = {}
    pv_grid = np.arange(15.0, 30.01, 1.0)
    t_grid = np.arange(-20.0, 10.01, 1.0)

    ok = True
    for pdbm in (15.0, 23.0, 30.0):
        for xr in (10.0, 20.0, 30.0):
            n = net.replace(x_r=xr)
            ok &= _strictly_decreasing([an.coverage_probability(dbm_to_watt(pdbm), db_to_linear(t), n) for t in t_grid])
    checks["coverage_decreasing_in_T"] = bool(ok)
    ok = True
    for tdb in (-10.0, -5.0, 0.0):
        ok &= _strictly_decreasing([an.coverage_probability(net.p_v, db_to_linear(tdb), net.replace(x_r=x))
                                    for x in np.arange(5.0, 50.01, 5.0)])
    checks["coverage_decreasing_in_distance"] = bool(ok)
    ok = True
    for tdb in (-10.0, -5.0, 0.0):
        ok &= _strictly_increasing([an.coverage_probability(dbm_to_watt(p), db_to_linear(tdb), net) for p in pv_grid])
    checks["coverage_increasing_in_power"] = bool(ok)

    thr = db_to_linear(-10.0)
    ok = True
    for lpv in (5e-3, 1e-2, 2e-2):
        ok &= _strictly_increasing([an.expected_rate(dbm_to_watt(p), thr, net.replace(lambda_pv=lpv)) for p in pv_grid])
    checks["rate_increasing_in_power"] = bool(ok)
    ok = True
    for p in (15.0, 23.0, 30.0):
        ok &= _strictly_decreasing([an.expected_rate(dbm_to_watt(p), thr, net.replace(lambda_pv=l))
                                    for l in np.linspace(2e-3, 3e-2, 15)])
    checks["rate_decreasing_in_vehicle_intensity"] = bool(ok)

    ok_mono, ok_cvx = True, True
    for lam, grid in ((500.0, np.arange(550.0, 1501.0, 50.0)), (100.0, np.arange(150.0, 451.0, 25.0))):
        table = np.array([[an.avg_aoi_tandem(an.QueueParams(lam, a, b)) for b in grid] for a in grid])
        for k in range(len(grid)):
            ok_mono &= _strictly_decreasing(table[k]) and _strictly_decreasing(table[:, k])
            ok_cvx &= _convex(table[k]) and _convex(table[:, k])
    checks["aoi_decreasing_in_rates"] = bool(ok_mono)
    checks["aoi_diminishing_returns"] = bool(ok_cvx)

    pc_grid = np.arange(16.5, 30.51, 1.0)
    ok = all(_strictly_decreasing([_aoi_at_powers(net, p, c) for p in pv_grid]) for c in pc_grid)
    ok &= all(_strictly_decreasing([_aoi_at_powers(net, p, c) for c in pc_grid]) for p in pv_grid)
    checks["aoi_decreasing_in_both_powers"] = bool(ok)

    a25, a30 = _aoi_at_powers(net, 25.0, 20.0), _aoi_at_powers(net, 30.0, 20.0)
    change = abs(a25 - a30) / a25
    checks["aoi_saturation_25_to_30dBm"] = change < saturation_tol
    checks["aoi_level_within_factor"] = bool(level_s / level_factor <= a25 <= level_s * level_factor
                                               and level_s / level_factor <= a30 <= level_s * level_factor)
    passed = all(checks.values())
    return CriterionResult("C6", "qualitative trend checks", passed,
                           {"failed_checks": [k for k, v in checks.items() if not v], "saturation_change": change},
                           {"saturation_change": saturation_tol, "level_s": [level_s / level_factor, level_s * level_factor]},
                           {"checks": checks, "aoi_25dBm": a25, "aoi_30dBm": a30})


@_timed
def normalization_suite(trace_horizon: float = 2000.0) -> CriterionResult:
    checks: dict[str, Any] = {}
    net = _default_net()

    norm_err = 0.0
    for lam, m1, m2 in ((100.0, 150.0, 300.0), (100.0, 200.0, 200.0), (500.0, 600.0, 900.0)):
        q = an.QueueParams(lam, m1, m2)
        val, _ = integrate.quad(lambda t: an.sojourn_pdf(t, q), 0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400)
        norm_err = max(norm_err, abs(val - 1.0))
    checks["sojourn_pdf_normalization"] = (norm_err, 1e-8, norm_err <= 1e-8)

    q = an.QueueParams(100.0, 150.0, 300.0)
    wait_err = max(abs(an.conditional_wait(y, q) - an.conditional_wait_quad(y, q)) for y in (0.001, 0.01, 0.1))
    checks["conditional_wait_vs_integral"] = (wait_err, 1e-8, wait_err <= 1e-8)

    worst = 0.0
    for k, (lam, m1, m2) in enumerate((100.0, a, b) for a in DES_GRID for b in DES_GRID):
        tr = ts.simulate(an.QueueParams(lam, m1, m2), trace_horizon, [99, k])
        a1, a2 = ts.average_aoi(tr), ts.average_aoi_decomposition(tr)
        worst = max(worst, abs(a1 - a2) / a1)
    checks["trapezoid_vs_decomposition"] = (float(worst), 1e-9, worst <= 1e-9)

    closed, quad = ch.mixture_integral(net.mixture), ch.mixture_integral_quad(net.mixture)
    err = max(abs(closed - 0.9997), abs(quad - closed))
    checks["mixture_integral"] = (closed, 1e-4, err <= 1e-4)

    c0 = an.coverage_probability(net.p_v, 1e-30, net)
    checks["coverage_zero_threshold"] = (c0, 1e-6, abs(c0 - 0.9999) <= 1e-6)

    passed = all(v[2] for v in checks.values())
    return CriterionResult("C7", "normalization and consistency", passed,
                           {k: v[0] for k, v in checks.items()}, {k: v[1] for k, v in checks.items()},
                           {"verdicts": {k: bool(v[2]) for k, v in checks.items()}})


@_timed
def poisson_departures(n_packets: int = 100_000, alpha: float = 0.01) -> CriterionResult:
    lam = 100.0
    horizon = n_packets / lam / 0.9
    stable = ts.simulate(an.QueueParams(lam, 200.0, 1e9), horizon, 11)
    dep = ts.departure_poisson_check(stable, lam, stage=1, alpha=alpha)
    arr = ts.departure_poisson_check(stable, lam, stage=0, alpha=alpha)
    saturated = ts.simulate(an.QueueParams(lam, 80.0, 1e9), horizon, 12)
    neg = ts.departure_poisson_check(saturated, lam, stage=1, alpha=alpha)
    passed = (not dep.rejected) and (not arr.rejected) and neg.rejected
    return CriterionResult("C8", "Poisson-in-Poisson-out departures", passed,
                           {"departure_pvalue": dep.pvalue, "arrival_pvalue": arr.pvalue,
                            "saturated_pvalue": neg.pvalue},
                           {"significance": alpha},
                           {"departures": dep.to_dict(), "arrivals": arr.to_dict(), "saturated": neg.to_dict()})


QUICK = (mm1_degeneration, symmetry_and_continuity, taylor_gap,
         functools.partial(normalization_suite, trace_horizon=200.0))
FULL = (tandem_aoi_vs_des, mm1_degeneration, symmetry_and_continuity, coverage_vs_monte_carlo,
        taylor_gap, trend_checks, normalization_suite, poisson_departures)


@dataclass
class ValidationReport:
    level: str
    results: list[CriterionResult]
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {"level": self.level, "passed": self.passed, "notes": self.notes,
                "results": [asdict(r) for r in self.results]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_json_default)

    @classmethod
    def from_json(cls, text: str) -> "ValidationReport":
        d = json.loads(text)
        return cls(d["level"], [CriterionResult(**r) for r in d["results"]], d.get("notes", {}))


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o)}")


def mixture_fit_notes() -> dict:
    """Exploratory fit of the mixture to exact Rician power curves."""
    k_sf, l1_sf = ch.fit_rician_k(_default_net().mixture, "sf")
    k_pdf, l1_pdf = ch.fit_rician_k(_default_net().mixture, "pdf")
    return {"best_k_tail": k_sf, "l1_tail": l1_sf, "best_k_density": k_pdf, "l1_density": l1_pdf}


def validate(level: str = "quick", workers: int = 1, progress: Callable[[CriterionResult], None] | None = None) -> ValidationReport:
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    checks = QUICK if level == "quick" else FULL
    results = []
    for fn in checks:
        res = fn(workers=workers) if fn is coverage_vs_monte_carlo else fn()
        results.append(res)
        if progress:
            progress(res)
    # JSON round trip so the report only carries plain types
    report = ValidationReport(level, results, {"mixture_fit": mixture_fit_notes()})
    return ValidationReport.from_json(report.to_json())
