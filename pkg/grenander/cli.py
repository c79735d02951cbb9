"""Command line: ``python -m grenander <subcommand> ...``.

Library errors are printed to stderr as one JSON object and exit with status
1; usage errors exit with status 2.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
import pandas as pd

from . import inference, simulation
from .asymptotics import oracle_c_opt, oracle_moments
from .config import DEFAULT_PRECISION, DEFAULT_SEED, DEFAULT_WORKERS, LOG_LEVEL, configure_logging
from .data import generate, read_csv
from .exceptions import ConfigurationError, GrenanderError
from .isotonic import grenander_estimate
from .models import DEFAULT_DIRECTION, SCENARIOS, CensoredSample, Direction, Target, get_scenario
from .smoothing import KERNELS, BoundaryMode, get_kernel, smooth_curve
from .step_estimators import censoring_mp, empirical_h, kaplan_meier, nelson_aalen

logger = logging.getLogger(__name__)

DEFAULT_SCENARIO = "weibull-hazard"

STEP_ESTIMATORS = {
    "nelson-aalen": nelson_aalen,
    "kaplan-meier": kaplan_meier,
    "empirical-h": empirical_h,
    "censoring": censoring_mp,
}
DEFAULT_ESTIMATOR = {Target.HAZARD: "nelson-aalen", Target.DENSITY: "kaplan-meier"}


@dataclass(frozen=True)
class CommandConfig:
    command: str
    scenario: str | None = None
    input: Path | None = None
    output: Path | None = None
    format: str = "csv"
    precision: int = DEFAULT_PRECISION
    seed: int = DEFAULT_SEED
    n: int | None = None
    options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario is not None and self.input is not None:
            raise ConfigurationError("--scenario and --input are mutually exclusive")
        if self.precision < 1:
            raise ConfigurationError(f"precision must be positive, got {self.precision}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> CommandConfig:
        common = {"command", "scenario", "input", "output", "format", "precision", "seed", "n", "log_level"}
        return cls(
            command=args.command,
            scenario=getattr(args, "scenario", None),
            input=getattr(args, "input", None),
            output=args.output,
            format=args.format,
            precision=args.precision,
            seed=args.seed,
            n=getattr(args, "n", None),
            options={k: v for k, v in vars(args).items() if k not in common},
        )


@dataclass
class Result:
    """Output of a subcommand: a table, plus fields for JSON output."""

    frame: pd.DataFrame
    extra: dict[str, Any] = field(default_factory=dict)


def _rounded(value, precision: int):
    if isinstance(value, float):
        return float(f"{value:.{precision}g}") if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _rounded(v, precision) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(v, precision) for v in value]
    if isinstance(value, np.generic):
        return _rounded(value.item(), precision)
    return value


def _write(result: Result, config: CommandConfig) -> None:
    if config.format == "json":
        payload = {**result.extra, "rows": result.frame.to_dict(orient="records")}
        text = json.dumps(_rounded(payload, config.precision), indent=2) + "\n"
    else:
        text = result.frame.to_csv(index=False, float_format=f"%.{config.precision}g", lineterminator="\n")
    if config.output is None:
        sys.stdout.write(text)
    else:
        config.output.parent.mkdir(parents=True, exist_ok=True)
        config.output.write_text(text, encoding="utf-8")


def _load(config: CommandConfig) -> tuple[CensoredSample, Any]:
    """The sample and, for a built-in scenario, the scenario itself."""
    if config.input is not None:
        if config.n is not None:
            raise ConfigurationError("--n applies to --scenario only")
        return read_csv(config.input), None
    scenario = get_scenario(config.scenario or DEFAULT_SCENARIO)
    spec = scenario.spec.with_seed(config.seed)
    if config.n is not None:
        spec = spec.with_n(config.n)
    return generate(spec), scenario


def _target(config: CommandConfig, scenario) -> Target:
    raw = config.options.get("target")
    if raw is not None:
        return Target(raw)
    if scenario is not None:
        return scenario.target
    raise ConfigurationError("--target is required with --input")


def _direction(config: CommandConfig, target: Target, scenario) -> Direction:
    raw = config.options.get("direction")
    if raw is not None:
        return Direction(raw)
    if scenario is not None and scenario.target is target:
        return scenario.direction
    return DEFAULT_DIRECTION[target]


def _end(config: CommandConfig, sample: CensoredSample, target: Target) -> float | None:
    end = config.options.get("end")
    return inference.default_end(sample, target) if end is None else end


def run_estimate(config: CommandConfig) -> Result:
    sample, scenario = _load(config)
    target = _target(config, scenario)
    if config.options.get("isotonic"):
        fit = grenander_estimate(sample, target, _direction(config, target, scenario), _end(config, sample, target))
        frame = pd.DataFrame(fit.estimate.rows(), columns=["start", "end", "slope"])
        return Result(frame, {"target": target.value, "direction": fit.estimate.direction.value})
    name = config.options.get("estimator") or DEFAULT_ESTIMATOR[target]
    step = STEP_ESTIMATORS[name](sample)
    return Result(pd.DataFrame(step.rows(), columns=["knot", "value"]), {"estimator": name})


def parse_grid(text: str) -> np.ndarray:
    """``a:b:step`` to the points a, a+step, ... not beyond b."""
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise ConfigurationError(f"grid must look like a:b:step, got {text!r}")
    if not step > 0 or stop < start:
        raise ConfigurationError(f"grid needs step > 0 and b >= a, got {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def run_smooth(config: CommandConfig) -> Result:
    sample, scenario = _load(config)
    target = _target(config, scenario)
    fit = grenander_estimate(sample, target, _direction(config, target, scenario), _end(config, sample, target))
    points = smooth_curve(
        fit.estimate,
        get_kernel(config.options["kernel"]),
        config.options["bandwidth"],
        parse_grid(config.options["grid"]),
        BoundaryMode(config.options["boundary"]),
    )
    return Result(pd.DataFrame(points, columns=["x", "value"]), {"bandwidth": config.options["bandwidth"]})


def run_bandwidth(config: CommandConfig) -> Result:
    if config.input is not None:
        raise ConfigurationError("bandwidth works on a named scenario, not on --input")
    scenario = get_scenario(config.scenario or DEFAULT_SCENARIO)
    kernel = get_kernel(config.options["kernel"])
    x0 = config.options.get("x0")
    x0 = scenario.reference_point if x0 is None else x0
    n = config.n or scenario.spec.n
    c = oracle_c_opt(scenario, x0, kernel)
    moments = oracle_moments(scenario, x0, c, kernel)
    row = {
        "scenario": scenario.name,
        "x0": x0,
        "n": n,
        "c_opt": c,
        "bandwidth": c * n ** (-1 / 5),
        "mu": moments.mu,
        "sigma2": moments.sigma2,
    }
    return Result(pd.DataFrame([row]))


def run_ci(config: CommandConfig) -> Result:
    sample, scenario = _load(config)
    target = _target(config, scenario)
    x0 = config.options.get("x0")
    c = config.options.get("c")
    if scenario is not None:
        x0 = scenario.x0 if x0 is None else x0
        c = scenario.bandwidth_constant if c is None else c
    if x0 is None:
        raise ConfigurationError("--x0 is required with --input")
    method = inference.Method(config.options["method"])
    extra = {"strict": True} if config.options.get("strict") and method is inference.Method.SG_BIAS_ESTIMATE else {}
    ci = inference.compute_interval(
        method,
        sample,
        target,
        x0,
        c,
        config.options["alpha"],
        direction=_direction(config, target, scenario),
        end=_end(config, sample, target),
        **extra,
    )
    row = ci.to_dict()
    return Result(pd.DataFrame([row]), {"n": sample.n, "bandwidth_constant": c})


def _report_frame(report: simulation.CoverageReport) -> pd.DataFrame:
    frame = report.to_frame()
    frame["censoring_fraction"] = report.censoring_fraction
    return frame


def _methods(config: CommandConfig) -> tuple[inference.Method, ...]:
    names = config.options.get("methods")
    return tuple(inference.Method(m) for m in names) if names else tuple(inference.Method)


def run_simulate(config: CommandConfig) -> Result:
    options = config.options
    n_grid = options.get("n_grid")
    study = simulation.table_study(
        options["table"],
        replications=options["replications"],
        base_seed=config.seed,
        workers=options["workers"],
        n_grid=n_grid,
        methods=_methods(config),
    )
    report = simulation.run_study(study)
    sweep_dir = options.get("sweep")
    if sweep_dir is not None:
        sweep = simulation.sweep_study(
            study.scenario,
            replications=options["replications"],
            base_seed=config.seed,
            workers=options["workers"],
            methods=study.methods,
        )
        sweep_report = simulation.run_study(sweep)
        path = Path(sweep_dir) / f"sweep-{study.scenario.name}-n{sweep.n_grid[0]}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        _report_frame(sweep_report).to_csv(path, index=False, float_format=f"%.{config.precision}g", lineterminator="\n")
        logger.info("sweep written to %s", path)
    return Result(
        _report_frame(report),
        {"scenario": report.scenario, "censoring_fraction": report.censoring_fraction, "warnings": report.warnings},
    )


def run_kw_rate(config: CommandConfig) -> Result:
    if config.input is not None:
        raise ConfigurationError("kw-rate works on a named scenario, not on --input")
    scenario = get_scenario(config.scenario or DEFAULT_SCENARIO)
    target = config.options.get("target")
    result = simulation.kw_rate_study(
        scenario,
        config.options["n_grid"],
        config.options["replications"],
        target=Target(target) if target else None,
        base_seed=config.seed,
        workers=config.options["workers"],
    )
    frame = pd.DataFrame(result.rows, columns=["n", "median_sup_distance"])
    frame["slope"] = result.slope
    return Result(frame, {"scenario": scenario.name, "slope": result.slope})


COMMANDS: dict[str, Callable[[CommandConfig], Result]] = {
    "estimate": run_estimate,
    "smooth": run_smooth,
    "bandwidth": run_bandwidth,
    "ci": run_ci,
    "simulate": run_simulate,
    "kw-rate": run_kw_rate,
}


def dispatch(config: CommandConfig) -> int:
    result = COMMANDS[config.command](config)
    _write(result, config)
    return 0


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="base seed (default: %(default)s)")
    common.add_argument("--output", type=Path, help="write here instead of stdout")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--precision", type=int, default=DEFAULT_PRECISION, help="significant digits")
    common.add_argument("--log-level", default=LOG_LEVEL)

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--scenario", choices=sorted(SCENARIOS))
    source.add_argument("--input", type=Path, help="CSV file with time,event rows")
    source.add_argument("--n", type=int, help="sample size drawn from the scenario")

    shape = argparse.ArgumentParser(add_help=False)
    shape.add_argument("--target", choices=[t.value for t in Target])
    shape.add_argument("--direction", choices=[d.value for d in Direction])
    shape.add_argument("--end", type=float, help="right end of the estimate")

    parser = argparse.ArgumentParser(prog="grenander", description="Smoothed Grenander-type estimation under right censoring")
    sub = parser.add_subparsers(dest="command", required=True)

    estimate = sub.add_parser("estimate", parents=[common, source, shape], help="step or isotonic estimates")
    estimate.add_argument("--estimator", choices=sorted(STEP_ESTIMATORS))
    estimate.add_argument("--isotonic", action="store_true", help="Grenander breakpoints and slopes")

    smooth = sub.add_parser("smooth", parents=[common, source, shape], help="smoothed Grenander curve")
    smooth.add_argument("--bandwidth", type=float, required=True)
    smooth.add_argument("--boundary", choices=[m.value for m in BoundaryMode], default="none")
    smooth.add_argument("--grid", required=True, help="a:b:step")
    smooth.add_argument("--kernel", choices=sorted(KERNELS), default="triweight")

    bandwidth = sub.add_parser("bandwidth", parents=[common, source], help="MSE-optimal bandwidth constant")
    bandwidth.add_argument("--x0", type=float)
    bandwidth.add_argument("--kernel", choices=sorted(KERNELS), default="triweight")

    ci = sub.add_parser("ci", parents=[common, source, shape], help="pointwise confidence interval")
    ci.add_argument("--method", choices=[m.value for m in inference.Method], default="grenander")
    ci.add_argument("--x0", type=float)
    ci.add_argument("--alpha", type=float, default=0.05)
    ci.add_argument("--c", type=float, help="bandwidth constant for the smoothed methods")
    ci.add_argument("--strict", action="store_true", help="fail when the bias window leaves the support")

    simulate = sub.add_parser("simulate", parents=[common], help="coverage study of a table scenario")
    simulate.add_argument("--table", type=int, choices=[1, 2], required=True)
    simulate.add_argument("--replications", type=int, default=1000)
    simulate.add_argument("--workers", type=int, default=DEFAULT_WORKERS)
    simulate.add_argument("--n-grid", type=_int_list)
    simulate.add_argument("--methods", nargs="+", choices=[m.value for m in inference.Method])
    simulate.add_argument("--sweep", type=Path, help="directory for the coverage sweep over x0")

    kw = sub.add_parser("kw-rate", parents=[common], help="envelope distance rate diagnostic")
    kw.add_argument("--scenario", choices=sorted(SCENARIOS))
    kw.add_argument("--target", choices=[t.value for t in Target])
    kw.add_argument("--n-grid", type=_int_list, default=[100, 300, 1000, 3000, 10000])
    kw.add_argument("--replications", type=int, default=200)
    kw.add_argument("--workers", type=int, default=DEFAULT_WORKERS)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level)
        return dispatch(CommandConfig.from_args(args))
    except GrenanderError as exc:
        print(json.dumps(_rounded(exc.to_dict(), 17), default=str), file=sys.stderr)
        return 1
