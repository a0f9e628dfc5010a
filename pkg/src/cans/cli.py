"""Command-line experiment driver.

Exit codes::

    0  success
    2  usage error (bad flags, unknown policy, bad sweep values)
    3  I/O error (missing or unreadable file)
    4  parse or validation error in an input file
    5  no feasible configuration at the first slot
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence

from . import evaluation, profiler, simulator
from .errors import (
    EnumerationCapError,
    InvariantError,
    ProfileFormatError,
    StartupInfeasibleError,
    UsageError,
)
from .optimizer import Policy, ProblemInstance, accuracy_term, objective, solve_bruteforce

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_PARSE = 4
EXIT_INFEASIBLE = 5

SWEEPABLE = ("omega", "l_max", "bandwidth")
COMPARE_HEADER = ("policy", "mean_latency_ms", "mean_accuracy_pct", "mean_objective", "reconfig_count")
SWEEP_HEADER = (
    "parameter",
    "value",
    "policy",
    "mean_latency_ms",
    "mean_accuracy_pct",
    "mean_objective",
    "reconfig_count",
    "bf_objective",
    "bf_accuracy_term",
)
MBPS = 1e6


@dataclass
class ExperimentConfig:
    profile_path: str
    trace_path: Optional[str] = None
    trace_gen: Optional[str] = None
    trace_params: dict = field(default_factory=dict)
    slots: int = 20
    policies: List[str] = field(default_factory=lambda: ["cans"])
    sweep: Optional[str] = None
    values: List[float] = field(default_factory=list)
    out: Optional[str] = None
    seed: int = 0
    per_stream_deadline: bool = False
    accuracy_units: str = "fraction"

    def __post_init__(self) -> None:
        if self.sweep is not None:
            if self.sweep not in SWEEPABLE:
                raise UsageError(f"--sweep must be one of {', '.join(SWEEPABLE)}")
            if not self.values:
                raise UsageError("--values must list at least one value")
        self.policies = [Policy.parse(p).value for p in self.policies]


def default_profile() -> str:
    return str(resources.files("cans") / "data" / "three_camera.json")


def load(config: ExperimentConfig) -> ProblemInstance:
    inst = profiler.load_instance(config.profile_path)
    return inst.replace_params(
        per_stream_deadline=config.per_stream_deadline,
        accuracy_units=config.accuracy_units,
    )


def build_trace(config: ExperimentConfig, instance: ProblemInstance) -> simulator.BandwidthTrace:
    if config.trace_path:
        return simulator.read_trace_csv(config.trace_path)
    if config.trace_gen in (None, "constant"):
        return simulator.BandwidthTrace.constant(instance.params.bandwidth, config.slots)
    return simulator.generate_trace(
        config.trace_gen, config.slots, seed=config.seed, **config.trace_params
    )


def write_atomic(path: "str | os.PathLike", text: str) -> None:
    """Write ``text`` to ``path`` via a temp file so failures leave nothing behind."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(config: ExperimentConfig, text: str) -> None:
    if config.out:
        write_atomic(config.out, text)
    else:
        sys.stdout.write(text)


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _summary_row(summary: simulator.Summary):
    return (
        repr(summary.mean_latency * 1000.0),
        repr(summary.mean_accuracy * 100.0),
        repr(summary.mean_objective),
        summary.reconfig_count,
    )


def cmd_run(config: ExperimentConfig) -> simulator.Summary:
    instance = load(config)
    trace = build_trace(config, instance)
    records = simulator.run(instance, trace, config.policies[0])
    _emit(config, simulator.timeline_csv(instance, records))
    summary = simulator.aggregate(records)
    out = sys.stderr if not config.out else sys.stdout
    print(f"policy:            {config.policies[0]}", file=out)
    print(f"trace:             {trace.source} ({len(trace)} slots)", file=out)
    print(f"mean latency:      {summary.mean_latency * 1000:.3f} ms", file=out)
    print(f"mean accuracy:     {summary.mean_accuracy * 100:.2f} %", file=out)
    print(f"mean objective:    {summary.mean_objective:.6f}", file=out)
    print(f"reconfigurations:  {summary.reconfig_count}", file=out)
    print(f"infeasible holds:  {summary.held_count}", file=out)
    return summary


def cmd_compare(config: ExperimentConfig) -> List[tuple]:
    if len(config.policies) < 2:
        raise UsageError("compare needs at least two policies")
    instance = load(config)
    trace = build_trace(config, instance)
    rows = []
    for p in config.policies:
        summary = simulator.aggregate(simulator.run(instance, trace, p))
        rows.append((p, *_summary_row(summary)))
    _emit(config, _csv(COMPARE_HEADER, rows))
    return rows


def _swept(instance: ProblemInstance, name: str, value: float) -> ProblemInstance:
    if name == "omega":
        return instance.replace_params(omega=value)
    if name == "l_max":
        return instance.replace_params(l_max=value / 1000.0)
    return instance.with_bandwidth(value * MBPS)


def cmd_sweep(config: ExperimentConfig) -> List[tuple]:
    """One row per (value, policy). ``l_max`` values are ms, ``bandwidth`` Mbps."""
    if config.sweep is None:
        raise UsageError("sweep needs --sweep and --values")
    base = load(config)
    rows = []
    for value in config.values:
        try:
            instance = _swept(base, config.sweep, value)
        except InvariantError as exc:
            raise UsageError(f"invalid {config.sweep} value {value}: {exc}") from None
        if config.sweep == "bandwidth":
            trace = simulator.BandwidthTrace.constant(instance.params.bandwidth, config.slots)
        else:
            trace = build_trace(config, instance)
        at_start = instance.with_bandwidth(trace.slots[0])
        try:
            best = solve_bruteforce(at_start)
        except EnumerationCapError:
            best = None
        bf = (
            (repr(objective(at_start, best)), repr(accuracy_term(at_start, best)))
            if best is not None
            else ("", "")
        )
        for p in config.policies:
            try:
                summary = simulator.aggregate(simulator.run(instance, trace, p))
                stats = _summary_row(summary)
            except StartupInfeasibleError:
                stats = ("", "", "", "")
            rows.append((config.sweep, repr(float(value)), p, *stats, *bf))
    _emit(config, _csv(SWEEP_HEADER, rows))
    return rows


def cmd_fit(path: str) -> profiler.CurveFit:
    fit = profiler.fit_accuracy_curve(profiler.read_samples_csv(path))
    c2, c1, c0 = fit.coeffs
    print(f"c2,c1,c0,mse\n{c2!r},{c1!r},{c0!r},{fit.mse!r}")
    return fit


def cmd_score(detected: str, golden: str, iou_min: float) -> float:
    scores = evaluation.frame_scores(
        evaluation.read_detections_csv(detected),
        evaluation.read_detections_csv(golden),
        iou_min,
    )
    mean = sum(s for _, s in scores) / len(scores)
    print("frame_id,f1")
    for fid, s in scores:
        print(f"{fid},{s!r}")
    print(f"mean,{mean!r}")
    return mean


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _experiment_args(p: argparse.ArgumentParser, multi_policy: bool) -> None:
    p.add_argument("--profile", default=None, help="profile JSON (default: bundled three-camera fixture)")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--trace", help="CSV with slot,bandwidth_bps")
    src.add_argument("--trace-gen", choices=("constant", "steps", "random_walk"))
    p.add_argument("--slots", type=int, default=20)
    p.add_argument("--levels", type=_floats, help="steps: bandwidth levels in Mbps")
    p.add_argument("--change-at", type=_ints, default=[], help="steps: slots where the level changes")
    p.add_argument("--b-min", type=float, default=20.0, help="random_walk lower bound, Mbps")
    p.add_argument("--b-max", type=float, default=100.0, help="random_walk upper bound, Mbps")
    p.add_argument("--step-std", type=float, default=None, help="random_walk step std, Mbps")
    if multi_policy:
        p.add_argument("--policy", action="append", default=None,
                       help="policy name; repeat or comma-separate (default: all four)")
    else:
        p.add_argument("--policy", default="cans", help=", ".join(x.value for x in Policy))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.add_argument("--per-stream-deadline", action="store_true",
                   help="check each stream against its own deadline instead of l_max")
    p.add_argument("--accuracy-units", choices=("fraction", "percent"), default="fraction")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cans", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    _experiment_args(sub.add_parser("run", help="simulate one policy over a trace"), False)
    _experiment_args(sub.add_parser("compare", help="compare policies on one trace"), True)
    sweep = sub.add_parser("sweep", help="sweep omega, l_max (ms) or bandwidth (Mbps)")
    _experiment_args(sweep, True)
    sweep.add_argument("--sweep", required=True, choices=SWEEPABLE)
    sweep.add_argument("--values", type=_floats, default=None)

    fit = sub.add_parser("fit", help="fit an accuracy curve to resolution,accuracy samples")
    fit.add_argument("samples")

    score = sub.add_parser("score", help="F1-score detections against golden detections")
    score.add_argument("detected")
    score.add_argument("golden")
    score.add_argument("--iou-min", type=float, default=0.7)
    return parser


def _config(args: argparse.Namespace) -> ExperimentConfig:
    if isinstance(args.policy, list):
        policies = [x for item in args.policy for x in item.split(",") if x.strip()]
    elif args.policy is None:
        policies = [p.value for p in Policy]
    else:
        policies = [args.policy]
    trace_params = {}
    if args.trace_gen == "steps":
        if not args.levels:
            raise UsageError("--trace-gen steps needs --levels")
        trace_params = {"levels": [v * MBPS for v in args.levels], "change_at": args.change_at}
    elif args.trace_gen == "random_walk":
        trace_params = {"b_min": args.b_min * MBPS, "b_max": args.b_max * MBPS}
        if args.step_std is not None:
            trace_params["step_std"] = args.step_std * MBPS
    values = getattr(args, "values", None)
    sweep = getattr(args, "sweep", None)
    if sweep == "bandwidth" and not values:
        values = [20.0, 40.0, 60.0, 80.0, 100.0]
    return ExperimentConfig(
        profile_path=args.profile or default_profile(),
        trace_path=args.trace,
        trace_gen=args.trace_gen,
        trace_params=trace_params,
        slots=args.slots,
        policies=policies,
        sweep=sweep,
        values=values or [],
        out=args.out,
        seed=args.seed,
        per_stream_deadline=args.per_stream_deadline,
        accuracy_units=args.accuracy_units,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fit":
            cmd_fit(args.samples)
        elif args.command == "score":
            cmd_score(args.detected, args.golden, args.iou_min)
        else:
            config = _config(args)
            {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep}[args.command](config)
    except StartupInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (UsageError, EnumerationCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ProfileFormatError, InvariantError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
