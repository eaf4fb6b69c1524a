"""Command-line entry point.

Every command writes ``result.json`` (plus ``result.csv`` where tabular) and
``manifest.json`` into ``--out``. ``aoivnet replay <manifest>`` re-runs a
manifest and reproduces the result files byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from . import analytic as an
from . import harness, tandemsim, validation
from .config import (
    DEFAULTS,
    ConfigError,
    NetworkConfig,
    config_from_mapping,
    env_overrides,
    load_mapping,
    merge_layers,
)

EXIT_OK, EXIT_PARAM, EXIT_VALIDATE = 0, 1, 2

# config keys exposed as flags, with extra spellings
_FLAG_ALIASES = {"p_v_dbm": ["--pv-dbm"], "lambda_pkt": ["--lambda"], "p_c_dbm": ["--pc-dbm"]}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are parameter errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("network parameters (override config file and environment)")
    g.add_argument("--config", type=Path, help="JSON config file")
    for key, default in DEFAULTS.items():
        if key == "mixture":
            continue
        flags = ["--" + key.replace("_", "-")] + _FLAG_ALIASES.get(key, [])
        typ = int if key == "seed" else float
        g.add_argument(*flags, dest="cfg_" + key, type=typ, default=None, metavar=key.upper())
    p.add_argument("--out", type=Path, default=None, help="output directory (default: aoivnet-runs/<command>)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aoivnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"aoivnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_ in (("coverage", "closed-form coverage probability"),
                        ("rate", "closed-form expected data rate")):
        _add_config_flags(sub.add_parser(name, help=help_))

    p = sub.add_parser("aoi-analytic", help="closed-form tandem-queue average AoI")
    _add_config_flags(p)
    p.add_argument("--mu1", type=float, help="transmission rate 1/s (default: from power and threshold)")
    p.add_argument("--mu2", type=float, help="computation rate 1/s (default: from CPU frequency)")

    p = sub.add_parser("aoi-sim", help="discrete-event simulation of the tandem queue")
    _add_config_flags(p)
    p.add_argument("--mu1", type=float)
    p.add_argument("--mu2", type=float)
    p.add_argument("--horizon", type=float, default=2000.0)
    p.add_argument("--replications", type=int, default=10)
    p.add_argument("--warmup-fraction", type=float, default=tandemsim.DEFAULT_WARMUP_FRACTION)
    p.add_argument("--trace", action="store_true", help="also write trace.csv of the first replication")

    p = sub.add_parser("mc-coverage", help="Monte Carlo coverage probability")
    _add_config_flags(p)
    p.add_argument("--realizations", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("sweep", help="parameter sweep")
    _add_config_flags(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--spec", type=Path, help="JSON sweep spec")
    src.add_argument("--preset", choices=harness.PRESETS, help="built-in sweep")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("validate", help="run the acceptance checks")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("replay", help="re-run a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, default=None)
    return parser


def resolve_config(args: argparse.Namespace, environ=None) -> dict[str, Any]:
    """User-unit mapping with precedence flag > environment > file > default."""
    file_layer = load_mapping(args.config) if getattr(args, "config", None) else {}
    flag_layer = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    return merge_layers(DEFAULTS, file_layer, env_overrides(environ), flag_layer)


def _queue(net: NetworkConfig, mu1: float | None, mu2: float | None) -> an.QueueParams:
    if mu1 is None or mu2 is None:
        mapped = an.rates_from_resources(net.p_v, net.cpu_freq_hz, net.threshold, an.LinkBudget.from_config(net), net)
        mu1 = mapped.mu1 if mu1 is None else mu1
        mu2 = mapped.mu2 if mu2 is None else mu2
    return an.QueueParams(net.lambda_pkt, mu1, mu2)


# each runner: (net, params, out_dir) -> (summary line, result dict, extra files {name: text})
Runner = Callable[[NetworkConfig, dict, Path], tuple[str, dict, dict]]


def _run_coverage(net, params, out):
    val = an.coverage_probability(net.p_v, net.threshold, net)
    return f"coverage probability = {val:.6f}", {"coverage": val}, {}


def _run_rate(net, params, out):
    val = an.expected_rate(net.p_v, net.threshold, net)
    return f"expected rate = {val:.6f} bit/s/Hz", {"rate": val}, {}


def _run_aoi_analytic(net, params, out):
    q = _queue(net, params.get("mu1"), params.get("mu2"))
    res = {"lambda": q.lam, "mu1": q.mu1, "mu2": q.mu2, "stable": q.stable}
    res["aoi"] = an.avg_aoi_tandem(q)  # raises on an unstable queue
    return f"average AoI = {res['aoi']:.6f} s", res, {}


def _run_aoi_sim(net, params, out):
    q = _queue(net, params.get("mu1"), params.get("mu2"))
    seeds = [[net.seed, r] for r in range(params["replications"])]
    traces = [tandemsim.simulate(q, params["horizon"], s, params["warmup_fraction"]) for s in seeds]
    est = np.array([tandemsim.average_aoi(t) for t in traces])
    se = float(est.std(ddof=1) / np.sqrt(est.size)) if est.size > 1 else None
    res = {"lambda": q.lam, "mu1": q.mu1, "mu2": q.mu2, "stable": q.stable,
           "aoi": float(est.mean()), "stderr": se, "replications": len(est),
           "packets": [len(t) for t in traces]}
    if q.stable:
        res["aoi_analytic"] = an.avg_aoi_tandem(q)
    if params.get("trace"):
        tandemsim.write_trace_csv(traces[0], out / "trace.csv")
    return f"simulated average AoI = {res['aoi']:.6f} s", res, {}


def _run_mc_coverage(net, params, out):
    est = harness.mc_coverage(net.p_v, net.threshold, net, params["realizations"], seed=net.seed,
                              workers=params.get("workers", 1))
    res = {"coverage_mc": est.probability, "stderr": est.stderr, "n_realizations": est.n,
           "coverage_analytic": an.coverage_probability(net.p_v, net.threshold, net)}
    return f"Monte Carlo coverage = {est.probability:.6f} +- {est.stderr:.6f}", res, {}


def _run_sweep(net, params, out):
    spec = harness.SweepSpec.from_dict(params["spec"])
    result = harness.sweep(spec, net, workers=params.get("workers", 1))
    return (f"sweep: {len(result.rows)} points, {sum(not r['stable'] for r in result.rows)} unstable",
            json.loads(result.to_json()), {"result.csv": result.to_csv()})


RUNNERS: dict[str, Runner] = {
    "coverage": _run_coverage,
    "rate": _run_rate,
    "aoi-analytic": _run_aoi_analytic,
    "aoi-sim": _run_aoi_sim,
    "mc-coverage": _run_mc_coverage,
    "sweep": _run_sweep,
}


def _scalar_csv(result: dict) -> str:
    keys = [k for k, v in result.items() if not isinstance(v, (list, dict))]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys)
    w.writerow(["" if result[k] is None else (repr(result[k]) if isinstance(result[k], float) else result[k])
                for k in keys])
    return buf.getvalue()


def execute(command: str, config_values: dict, params: dict, out: Path) -> tuple[str, dict]:
    """Run one command and write its result and manifest files into ``out``."""
    net = config_from_mapping(config_values)
    out.mkdir(parents=True, exist_ok=True)
    summary, result, extra = RUNNERS[command](net, params, out)
    (out / "result.json").write_text(json.dumps({"command": command, "result": result}, indent=2) + "\n")
    if command != "sweep":
        (out / "result.csv").write_text(_scalar_csv(result))
    for name, text in extra.items():
        (out / name).write_text(text)
    manifest = {
        "command": command,
        "params": params,
        "config": config_values,
        "resolved": net.to_dict(),
        "seed": net.seed,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return summary, result


def _params(args: argparse.Namespace) -> dict:
    cmd = args.command
    if cmd == "aoi-analytic":
        return {"mu1": args.mu1, "mu2": args.mu2}
    if cmd == "aoi-sim":
        return {"mu1": args.mu1, "mu2": args.mu2, "horizon": args.horizon, "replications": args.replications,
                "warmup_fraction": args.warmup_fraction, "trace": args.trace}
    if cmd == "mc-coverage":
        return {"realizations": args.realizations, "workers": args.workers}
    if cmd == "sweep":
        spec = harness.preset_spec(args.preset).to_dict() if args.preset else json.loads(args.spec.read_text())
        harness.SweepSpec.from_dict(spec)
        return {"spec": spec, "workers": args.workers}
    return {}


def _validate(args) -> int:
    report = validation.validate(args.level, workers=args.workers,
                                 progress=lambda r: print(r.line(), flush=True))
    out = args.out or Path("aoivnet-runs") / "validate"
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n")
    n_pass = sum(r.passed for r in report.results)
    print(f"validate {args.level}: {n_pass}/{len(report.results)} criteria passed")
    return EXIT_OK if report.passed else EXIT_VALIDATE


def main(argv=None, environ=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _validate(args)
        if args.command == "replay":
            manifest = json.loads(args.manifest.read_text())
            command, params, values = manifest["command"], manifest["params"], manifest["config"]
            out = args.out or args.manifest.parent
        else:
            command, params, values = args.command, _params(args), resolve_config(args, environ)
            out = args.out or Path("aoivnet-runs") / command
        summary, _ = execute(command, values, params, out)
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        print(f"aoivnet: error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
