"""Command-line interface: analytic, simulate, sweep, and verify.

Flags may also be supplied through ``--config FILE`` holding ``key=value``
lines (keys are the long flag names); explicit flags override the file.
Exit codes: 0 on success / verify-pass, 1 on verify-fail, 2 on usage error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from . import formulas, sim, sweeps
from .models import ArrivalModel, DecisionModel

_SERVICE_CHOICES = ("uniform", "exp", "det")
_DECISION_CHOICES = ("poisson", "periodic")
_DISCIPLINE_CHOICES = (sim.BLOCKING1, sim.FCFS_INFINITE)

# Built-in defaults applied after merging config-file values.
_DEFAULTS = {
    "decision": "poisson",
    "discipline": sim.BLOCKING1,
    "horizon": 100_000,
    "warmup": 1000,
    "reps": 4,
    "seed": 7,
    "mu": 1.5,
    "stderr_k": 5.0,
    "approx_band": 0.05,
}

_CASTS = {
    "lambda": float, "mu": float, "nu": float, "rho": float, "phase": float,
    "m0": int, "horizon": int, "warmup": int, "reps": int, "seed": int,
    "stderr_k": float, "approx_band": float,
    "service": str, "decision": str, "discipline": str, "figure": str,
    "out": str,
}


def _load_config(path: str, parser: argparse.ArgumentParser) -> dict:
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    parser.error(f"{path}:{lineno}: expected key=value")
                key, _, val = line.partition("=")
                key = key.strip()
                if key not in _CASTS:
                    parser.error(f"{path}:{lineno}: unknown key {key!r}")
                try:
                    values[key] = _CASTS[key](val.strip())
                except ValueError:
                    parser.error(f"{path}:{lineno}: bad value for {key!r}")
    except OSError as exc:
        parser.error(f"cannot read config: {exc}")
    return values


def _merge(args: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """Flags beat config-file values beat built-in defaults."""
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        merged.update(_load_config(args.config, parser))
    for key, value in vars(args).items():
        if key in ("config", "command", "func"):
            continue
        name = "lambda" if key == "lam" else key
        if value is not None:
            merged[name] = value
    return merged


def _require(merged: dict, keys: list[str], parser: argparse.ArgumentParser) -> None:
    missing = [k for k in keys if k not in merged]
    if missing:
        parser.error("missing required parameter(s): "
                     + ", ".join(f"--{k}" for k in missing))


def _service_model(merged: dict, parser: argparse.ArgumentParser):
    kind = merged.get("service")
    if kind not in _SERVICE_CHOICES:
        parser.error(f"--service must be one of {_SERVICE_CHOICES}")
    return formulas.service_model_for(kind, merged["mu"])


def _print_kv(pairs: dict) -> None:
    for key, value in pairs.items():
        print(f"{key}={value}")


def _cmd_analytic(args, parser) -> int:
    merged = _merge(args, parser)
    _require(merged, ["lambda", "mu", "service"], parser)
    lam, mu = merged["lambda"], merged["mu"]
    service = _service_model(merged, parser)
    out: dict = {}
    if merged["decision"] == "poisson":
        report = formulas.aud_mg11_m(lam, service)
        out["avg_aud"] = report.avg_aud
        out["aud_exactness"] = report.exactness
        out["aud_formula"] = report.formula_id
        if "nu" in merged:
            out["missing_prob"] = formulas.pmis_mg11_m(lam, merged["nu"], service)
            out["pmis_exactness"] = formulas.EXACT
    else:
        _require(merged, ["m0"], parser)
        m0 = merged["m0"]
        try:
            aud = formulas.aud_specialized_d(lam, mu, m0, merged["service"])
            pmis = formulas.pmis_mg11_d(lam, mu, m0, merged["service"])
        except ValueError as exc:
            parser.error(str(exc))
        out["avg_aud"] = aud.avg_aud
        out["aud_exactness"] = aud.exactness
        out["aud_formula"] = aud.formula_id
        out["missing_prob"] = pmis.missing_prob
        out["pmis_exactness"] = pmis.exactness
        out["pmis_formula"] = pmis.formula_id
    _print_kv(out)
    return 0


def _cmd_simulate(args, parser) -> int:
    merged = _merge(args, parser)
    _require(merged, ["lambda", "mu", "nu", "service"], parser)
    service = _service_model(merged, parser)
    if merged["decision"] == "poisson":
        decision = DecisionModel.poisson(merged["nu"])
    else:
        decision = DecisionModel.periodic(merged["nu"], merged.get("phase"))
    spec = sim.SystemSpec(ArrivalModel(merged["lambda"]), service, decision,
                          merged["discipline"])
    try:
        config = sim.SimRunConfig(spec, horizon=merged["horizon"],
                                  warmup=merged["warmup"], seed=merged["seed"])
        estimate = sim.replicate(config, merged["reps"])
    except ValueError as exc:
        parser.error(str(exc))
    _print_kv({
        "avg_aud": estimate.avg_aud,
        "aud_stderr": estimate.aud_stderr,
        "missing_prob": estimate.missing_prob,
        "pmis_stderr": estimate.pmis_stderr,
        "n_decisions": estimate.n_decisions,
        "n_generated": estimate.n_generated,
        "n_successful": estimate.n_successful,
        "n_dropped": estimate.n_dropped,
        "n_missed_updates": estimate.n_missed_updates,
    })
    return 0


def _sweep_spec(merged: dict, parser) -> sweeps.SweepSpec:
    _require(merged, ["figure"], parser)
    if merged["figure"] not in sweeps.FIGURES:
        parser.error(f"--figure must be one of {', '.join(sweeps.FIGURES)}")
    return sweeps.SweepSpec(
        figure_id=merged["figure"], mu=merged["mu"],
        rho=merged.get("rho"), m0=merged.get("m0"),
        horizon=merged["horizon"], n_reps=merged["reps"],
        seed=merged["seed"], warmup=merged["warmup"],
    )


def _cmd_sweep(args, parser) -> int:
    merged = _merge(args, parser)
    spec = _sweep_spec(merged, parser)
    policy = sweeps.TolerancePolicy(merged["stderr_k"], merged["approx_band"])
    rows = sweeps.run_sweep(spec, policy)
    out = merged.get("out", f"{spec.figure_id}.csv")
    sweeps.emit_csv(rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _cmd_verify(args, parser) -> int:
    merged = _merge(args, parser)
    spec = _sweep_spec(merged, parser)
    policy = sweeps.TolerancePolicy(merged["stderr_k"], merged["approx_band"])
    rows = sweeps.run_sweep(spec, policy)
    if "out" in merged:
        sweeps.emit_csv(rows, merged["out"])
    report = sweeps.verify(spec.figure_id, rows, policy)
    print(report.summary())
    return 0 if report.passed else 1


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="key=value file; flags override it")
    sub.add_argument("--lambda", dest="lam", type=float, help="arrival rate")
    sub.add_argument("--mu", type=float, help="service rate (default 1.5)")
    sub.add_argument("--nu", type=float, help="decision rate")
    sub.add_argument("--m0", type=int, help="decision slots per mean service "
                     "time (periodic decisions, nu = m0*mu)")
    sub.add_argument("--service", choices=_SERVICE_CHOICES)
    sub.add_argument("--decision", choices=_DECISION_CHOICES)


def _add_budget(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--horizon", type=int, help="measured decisions per run")
    sub.add_argument("--warmup", type=int, help="decisions discarded first")
    sub.add_argument("--reps", type=int, help="independent replications")
    sub.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="audq",
        description="Age-upon-decisions toolkit for bufferless "
                    "update-and-decision queues")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("analytic", help="evaluate closed forms")
    _add_common(p)
    p.set_defaults(func=_cmd_analytic)

    p = commands.add_parser("simulate", help="run the discrete-event simulator")
    _add_common(p)
    _add_budget(p)
    p.add_argument("--discipline", choices=_DISCIPLINE_CHOICES)
    p.add_argument("--phase", type=float,
                   help="pin the periodic decision phase (default: random)")
    p.set_defaults(func=_cmd_simulate)

    for name, func in (("sweep", _cmd_sweep), ("verify", _cmd_verify)):
        p = commands.add_parser(
            name, help=("write a figure sweep as CSV" if name == "sweep" else
                        "run a sweep and check tolerances"))
        p.add_argument("--config", help="key=value file; flags override it")
        p.add_argument("--figure", choices=sweeps.FIGURES)
        p.add_argument("--mu", type=float)
        p.add_argument("--rho", type=float, help="fixed load for rate sweeps")
        p.add_argument("--m0", type=int)
        _add_budget(p)
        p.add_argument("--out", help="CSV output path")
        p.add_argument("--stderr-k", dest="stderr_k", type=float,
                       help="stderr multiple for exact rows (default 5)")
        p.add_argument("--approx-band", dest="approx_band", type=float,
                       help="relative band for approximate rows (default 0.05)")
        p.set_defaults(func=func)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args, parser)


if __name__ == "__main__":
    sys.exit(main())
