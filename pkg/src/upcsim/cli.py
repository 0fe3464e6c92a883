"""Command-line front end: config ingestion, experiment orchestration, emission.

Five experiment kinds are exposed: an efficiency query, the power-iteration
trace, the fixed-powers-versus-per-symbol-update comparison, steady-state SIR
CDFs, and the reference probability table. Output files are byte-identical
for identical (spec, seed); numbers are serialized with 12 significant
digits. The UPCSIM_WORKERS environment variable overrides the worker count
used for independent table cells.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .efficiency import DEFAULT_SETTINGS, FixedPointSettings, receiver_efficiency
from .errors import ConfigError, SingularGramError, UpcsimError
from .finite import (RngSpec, ber_from_sir, sir_de, sir_mf, sir_mmse,
                     sir_based_update, spreading_from_generator)
from .scenario import ReceiverKind, Scenario, load_scenario
from .upc import DEFAULT_UPC_SETTINGS, UpcSettings, upc_run

_EXPERIMENT_KINDS = ("upc_trace", "baseline_compare", "cdf", "table1",
                     "efficiency_query")

_BASELINE_TOLERANCE = 1e-6
_BASELINE_MAX_ITERATIONS = 200


def format_number(value) -> str:
    """Canonical serialization: floats at 12 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


@dataclass
class TableData:
    """Columnar records plus metadata comment lines."""

    columns: list
    rows: list
    meta: list = field(default_factory=list)


def _csv_field(value) -> str:
    text = format_number(value)
    if any(ch in text for ch in (",", '"', "\n")):
        text = '"' + text.replace('"', '""') + '"'
    return text


def emit(table: TableData, fmt: str, path) -> None:
    """Write records deterministically as CSV (with # metadata lines) or JSON."""
    if not table.columns:
        raise ValueError("records must define a header")
    if fmt == "csv":
        lines = [f"# {line}" for line in table.meta]
        lines.append(",".join(table.columns))
        for row in table.rows:
            lines.append(",".join(_csv_field(v) for v in row))
        payload = "\n".join(lines) + "\n"
    elif fmt == "json":
        document = {
            "meta": list(table.meta),
            "columns": list(table.columns),
            "rows": [[_json_value(v) for v in row] for row in table.rows],
        }
        payload = json.dumps(document, indent=1) + "\n"
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
    except OSError as exc:
        raise UpcsimError(f"cannot write output file {path}: {exc}") from exc


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.12g}")
    return value


@dataclass
class ExperimentSpec:
    """One orchestrated run: what to compute, from which stream, where to put it."""

    kind: str
    scenario: Scenario | None = None
    rng: RngSpec | None = None
    out: str | None = None
    fmt: str = "csv"
    plot: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"format must be 'csv' or 'json', got {self.fmt!r}")
        needs_scenario = self.kind in ("upc_trace", "baseline_compare", "cdf")
        if needs_scenario and self.scenario is None:
            raise ValueError(f"experiment {self.kind} requires a scenario")
        if self.kind in ("baseline_compare", "cdf", "table1") and self.rng is None:
            raise ValueError(f"experiment {self.kind} requires an explicit seed")
        if self.kind != "efficiency_query" and self.out is None:
            raise ValueError(f"experiment {self.kind} requires an output path")


def run_experiment(spec: ExperimentSpec) -> int:
    """Execute the experiment, write its artifacts, return a process exit code."""
    runner = {
        "upc_trace": _run_upc_trace,
        "baseline_compare": _run_baseline_compare,
        "cdf": _run_cdf,
        "table1": _run_table1,
        "efficiency_query": _run_efficiency_query,
    }[spec.kind]
    return runner(spec)


def _plot_path(out) -> str:
    stem, _ = os.path.splitext(str(out))
    return stem + ".png"


def _run_efficiency_query(spec: ExperimentSpec) -> int:
    params = spec.params
    eta = receiver_efficiency(params["profile"], params["alpha"],
                              params["receiver"], params["settings"])
    print(f"{eta:.15g}")
    return 0


def _run_upc_trace(spec: ExperimentSpec) -> int:
    scenario = spec.scenario
    trace = upc_run(scenario, spec.params["initial_powers"],
                    spec.params.get("upc_settings", DEFAULT_UPC_SETTINGS),
                    spec.params.get("fp_settings", DEFAULT_SETTINGS))
    rows = []
    for step in trace.steps:
        sir = step.efficiency * step.snrs
        for k in range(scenario.num_users):
            rows.append((step.iteration, k + 1, step.powers[k], step.snrs[k],
                         step.efficiency[k], sir[k]))
    meta = [
        f"receiver = {scenario.receiver.value}",
        f"num_users = {scenario.num_users}",
        f"processing_gain = {scenario.processing_gain}",
        f"converged = {str(trace.converged).lower()}",
        f"power_updates = {trace.num_updates}",
    ]
    table = TableData(
        columns=["iteration", "user", "power_watts", "snr_linear", "eta",
                 "sir_large_system"],
        rows=rows, meta=meta)
    emit(table, spec.fmt, spec.out)
    if spec.plot:
        from .plotting import plot_upc_trace
        plot_upc_trace(trace, scenario, _plot_path(spec.out))
    # non-convergence is a recorded outcome (converged=false in metadata), not
    # a failure of the experiment itself
    return 0


_SIR_FUNCTIONS = {
    ReceiverKind.MF: sir_mf,
    ReceiverKind.DE: sir_de,
    ReceiverKind.MMSE: sir_mmse,
}


def _true_sirs(S, powers, scenario) -> np.ndarray:
    sir_fn = _SIR_FUNCTIONS[scenario.receiver]
    return np.array([sir_fn(S, powers, scenario, k + 1)
                     for k in range(scenario.num_users)])


def _run_baseline_compare(spec: ExperimentSpec) -> int:
    """Fig-3-style comparison: fixed powers from the large-system iteration
    versus re-converging the measured-SIR update on every symbol's matrix."""
    scenario = spec.scenario
    if scenario.receiver not in _SIR_FUNCTIONS:
        raise ConfigError(
            "baseline comparison needs an exact SIR formula; receiver must be "
            "one of mf, de, mmse")
    symbols = spec.params["symbols"]
    user = spec.params.get("user", 1)
    trace = upc_run(scenario, np.zeros(scenario.num_users))
    if not trace.converged:
        raise UpcsimError("power iteration did not converge; cannot compare")
    p_fixed = trace.final_powers
    targets = scenario.target_sirs

    rows = []
    rejected = 0
    p_tracked = p_fixed.copy()
    for symbol in range(1, symbols + 1):
        generator = spec.rng.trial_generator(symbol)
        for _ in range(1000):
            S = spreading_from_generator(generator, scenario.num_users,
                                         scenario.processing_gain)
            try:
                sir_fixed = _true_sirs(S, p_fixed, scenario)
                break
            except SingularGramError:
                rejected += 1
        else:
            raise SingularGramError(f"symbol {symbol}: no usable realization")

        # per-symbol re-convergence of the measured-SIR update on this matrix
        for _ in range(_BASELINE_MAX_ITERATIONS):
            sir_tracked = _true_sirs(S, p_tracked, scenario)
            if np.max(np.abs(sir_tracked - targets) / targets) < _BASELINE_TOLERANCE:
                break
            p_tracked = sir_based_update(p_tracked, sir_tracked, targets)

        k = user - 1
        rows.append((symbol, user,
                     sir_fixed[k], 10 * np.log10(sir_fixed[k]),
                     ber_from_sir(sir_fixed[k]),
                     sir_tracked[k], 10 * np.log10(sir_tracked[k]),
                     ber_from_sir(sir_tracked[k])))

    meta = [
        f"receiver = {scenario.receiver.value}",
        f"num_users = {scenario.num_users}",
        f"processing_gain = {scenario.processing_gain}",
        f"seed = {spec.rng.seed}",
        f"stream_id = {spec.rng.stream_id}",
        f"symbols = {symbols}",
        f"rejected_singular = {rejected}",
        "ber is the analytic map Q(sqrt(sir)), not a symbol-error count",
    ]
    table = TableData(
        columns=["symbol", "user", "sir_fixed_linear", "sir_fixed_db",
                 "ber_fixed", "sir_tracked_linear", "sir_tracked_db",
                 "ber_tracked"],
        rows=rows, meta=meta)
    emit(table, spec.fmt, spec.out)
    if spec.plot:
        from .plotting import plot_baseline_compare
        plot_baseline_compare(
            [r[0] for r in rows], [r[2] for r in rows], [r[5] for r in rows],
            float(targets[user - 1]), _plot_path(spec.out))
    return 0


def _run_cdf(spec: ExperimentSpec) -> int:
    scenario = spec.scenario
    trials = spec.params["trials"]
    samples, rejected = analysis.sir_samples(scenario, trials, spec.rng, user=1)
    cdf = analysis.empirical_cdf(samples)
    values, fractions = cdf.grid
    theory = _approx_cdf(scenario, values)
    rows = [(v, 10 * np.log10(v), e, t)
            for v, e, t in zip(values, fractions, theory)]
    meta = [
        f"receiver = {scenario.receiver.value}",
        f"num_users = {scenario.num_users}",
        f"processing_gain = {scenario.processing_gain}",
        f"gamma_star = {format_number(float(scenario.target_sirs[0]))}",
        f"seed = {spec.rng.seed}",
        f"stream_id = {spec.rng.stream_id}",
        f"trials = {trials}",
        f"rejected_singular = {rejected}",
    ]
    table = TableData(
        columns=["sir_linear", "sir_db", "cdf_empirical", "cdf_approx"],
        rows=rows, meta=meta)
    emit(table, spec.fmt, spec.out)
    if spec.plot:
        from .plotting import plot_cdf
        plot_cdf(values, fractions, theory, float(scenario.target_sirs[0]),
                 scenario.receiver, _plot_path(spec.out))
    return 0


def _approx_cdf(scenario: Scenario, values: np.ndarray) -> np.ndarray:
    from scipy.special import betainc, erfc

    gamma_star = float(scenario.target_sirs[0])
    if scenario.receiver is ReceiverKind.DE:
        a = scenario.processing_gain - scenario.num_users + 1.0
        b = scenario.num_users - 1.0
        gamma_ss = gamma_star / (1.0 - scenario.alpha)
        return betainc(a, b, np.clip(values / gamma_ss, 0.0, 1.0))
    if scenario.receiver is ReceiverKind.MMSE:
        c = analysis.mmse_sir_variance_c(gamma_star, scenario.alpha)
        scale = np.sqrt(scenario.processing_gain / c)
        return 0.5 * erfc(-scale * (values - gamma_star) / np.sqrt(2.0))
    raise ConfigError("CDF approximation covers the de and mmse receivers only")


def _run_table1(spec: ExperimentSpec) -> int:
    params = spec.params
    workers = params.get("workers", 1)
    cells = analysis.table1(params["gamma_star"], params["delta_db"],
                            params["grid"], params["trials"], spec.rng,
                            workers=workers)
    rows = []
    total_rejected = 0
    for cell in cells:
        if cell.error is not None:
            rows.append((cell.processing_gain, cell.alpha, cell.receiver.value,
                         "", "", "", "", "", "", cell.error))
            continue
        sim = cell.sim
        total_rejected += sim.rejected_singular if sim else 0
        rows.append((
            cell.processing_gain, cell.alpha, cell.receiver.value,
            f"{sim.estimate:.2f}" if sim else "",
            f"{cell.approx:.2f}",
            sim.estimate if sim else "",
            cell.approx,
            sim.std_error if sim else "",
            sim.rejected_singular if sim else "",
            "",
        ))
    meta = [
        f"gamma_star = {format_number(params['gamma_star'])}",
        f"delta_db = {format_number(params['delta_db'])}",
        f"seed = {spec.rng.seed}",
        f"stream_id = {spec.rng.stream_id}",
        f"trials = {'default' if params['trials'] is None else params['trials']}",
        f"rejected_singular_total = {total_rejected}",
    ]
    table = TableData(
        columns=["processing_gain", "alpha", "receiver", "sim_2dp",
                 "approx_2dp", "sim", "approx", "sim_std_error",
                 "rejected_singular", "error"],
        rows=rows, meta=meta)
    emit(table, spec.fmt, spec.out)
    if spec.plot:
        from .plotting import plot_table1
        plot_table1(cells, params["delta_db"], _plot_path(spec.out))
    return 0 if all(cell.error is None for cell in cells) else 1


def _parse_init(text: str, scenario: Scenario) -> np.ndarray:
    if text == "zero":
        return np.zeros(scenario.num_users)
    if text.startswith("const:"):
        return np.full(scenario.num_users, float(text.split(":", 1)[1]))
    values = np.array([float(x) for x in text.split(",")])
    if values.shape != (scenario.num_users,):
        raise ConfigError(
            f"--init list must hold {scenario.num_users} values, got {values.size}")
    return values


def _parse_floats(text: str) -> list:
    return [float(x) for x in text.split(",")]


def _fp_settings(args) -> FixedPointSettings:
    return FixedPointSettings(tolerance=args.tolerance,
                              max_iterations=args.fp_max_iterations,
                              quadrature_nodes=args.quadrature_nodes)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="upcsim",
        description="Large-system power control simulator for CDMA multiuser "
                    "detectors")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario configuration file (JSON)")
    common.add_argument("--seed", type=int, help="RNG seed (64-bit unsigned)")
    common.add_argument("--stream-id", type=int, default=0,
                        help="RNG stream id (default 0)")
    common.add_argument("--out", help="output file path")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="output format (default csv)")
    common.add_argument("--plot", action="store_true",
                        help="also render a PNG figure next to the output file")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tolerance", type=float, default=1e-12,
                        help="fixed-point residual tolerance (default 1e-12)")
    solver.add_argument("--fp-max-iterations", type=int, default=200,
                        help="fixed-point iteration cap (default 200)")
    solver.add_argument("--quadrature-nodes", type=int, default=64,
                        help="Gauss-Hermite nodes for the io receiver (default 64)")

    sub = parser.add_subparsers(dest="command", required=True)

    p_eff = sub.add_parser("efficiency", parents=[common, solver],
                           help="print the multiuser efficiency for a profile")
    p_eff.add_argument("--receiver", required=True,
                       choices=[r.value for r in ReceiverKind])
    p_eff.add_argument("--alpha", type=float, required=True, help="system load K/N")
    group = p_eff.add_mutually_exclusive_group()
    group.add_argument("--snr", help="comma-separated received SNR profile")
    group.add_argument("--point-mass", type=float,
                       help="single-value SNR profile")

    p_upc = sub.add_parser("upc", help="unified power control experiments")
    upc_sub = p_upc.add_subparsers(dest="upc_command", required=True)
    p_upc_run = upc_sub.add_parser("run", parents=[common, solver],
                                   help="run the power iteration, write the trace")
    p_upc_run.add_argument("--init", default="zero",
                           help="initial powers: zero | const:<x> | comma list")
    p_upc_run.add_argument("--max-iterations", type=int, default=500,
                           help="power-update cap (default 500)")
    p_upc_run.add_argument("--power-tolerance", type=float, default=1e-9,
                           help="relative power-change stop (default 1e-9)")

    p_base = sub.add_parser("baseline", help="measured-SIR power control")
    base_sub = p_base.add_subparsers(dest="baseline_command", required=True)
    p_base_run = base_sub.add_parser(
        "run", parents=[common],
        help="per-symbol SIR/BER: fixed powers versus per-symbol update")
    p_base_run.add_argument("--symbols", type=int, required=True,
                            help="number of symbol-level realizations")
    p_base_run.add_argument("--user", type=int, default=1,
                            help="reported user index, 1-based (default 1)")

    p_ana = sub.add_parser("analysis", help="statistical predictions and tables")
    ana_sub = p_ana.add_subparsers(dest="analysis_command", required=True)
    p_t1 = ana_sub.add_parser("table1", parents=[common],
                              help="band-probability table: simulation vs approximation")
    p_t1.add_argument("--gamma-star", type=float, default=6.4,
                      help="common target SIR, linear (default 6.4)")
    p_t1.add_argument("--delta-db", type=float, default=1.0,
                      help="band half-width in dB (default 1)")
    p_t1.add_argument("--trials", type=int, default=None,
                      help="Monte Carlo trials per cell "
                           "(default: 1e5 for N<=64, 1e4 above; 0 = approx only)")
    p_t1.add_argument("--sizes", default="16,64,256",
                      help="comma list of processing gains (default 16,64,256)")
    p_t1.add_argument("--loads", default="0.25,0.75",
                      help="comma list of loads alpha (default 0.25,0.75)")

    p_cdf = ana_sub.add_parser("cdf", parents=[common],
                               help="steady-state SIR CDF, empirical and analytic")
    p_cdf.add_argument("--trials", type=int, required=True,
                       help="number of SIR realizations")

    return parser


def _require(args, names) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError(f"missing required arguments: {', '.join(missing)}")


def _spec_from_args(args) -> ExperimentSpec:
    if args.command == "efficiency":
        if args.snr is not None:
            profile = _parse_floats(args.snr)
        elif args.point_mass is not None:
            profile = [args.point_mass]
        else:
            raise ConfigError("efficiency requires --snr or --point-mass")
        return ExperimentSpec(
            kind="efficiency_query",
            params={"profile": profile, "alpha": args.alpha,
                    "receiver": ReceiverKind(args.receiver),
                    "settings": _fp_settings(args)})

    if args.command == "upc":
        _require(args, ["config", "out"])
        scenario = load_scenario(args.config)
        return ExperimentSpec(
            kind="upc_trace", scenario=scenario, out=args.out, fmt=args.format,
            plot=args.plot,
            params={
                "initial_powers": _parse_init(args.init, scenario),
                "upc_settings": UpcSettings(
                    power_tolerance_rel=args.power_tolerance,
                    max_iterations=args.max_iterations),
                "fp_settings": _fp_settings(args),
            })

    if args.command == "baseline":
        _require(args, ["config", "seed", "out"])
        scenario = load_scenario(args.config)
        return ExperimentSpec(
            kind="baseline_compare", scenario=scenario,
            rng=RngSpec(args.seed, args.stream_id), out=args.out,
            fmt=args.format, plot=args.plot,
            params={"symbols": args.symbols, "user": args.user})

    if args.command == "analysis" and args.analysis_command == "table1":
        _require(args, ["seed", "out"])
        sizes = [int(x) for x in args.sizes.split(",")]
        loads = _parse_floats(args.loads)
        grid = [(n, a) for n in sizes for a in loads]
        workers = int(os.environ.get("UPCSIM_WORKERS", "1"))
        return ExperimentSpec(
            kind="table1", rng=RngSpec(args.seed, args.stream_id), out=args.out,
            fmt=args.format, plot=args.plot,
            params={"gamma_star": args.gamma_star, "delta_db": args.delta_db,
                    "trials": args.trials, "grid": grid, "workers": workers})

    if args.command == "analysis" and args.analysis_command == "cdf":
        _require(args, ["config", "seed", "out"])
        scenario = load_scenario(args.config)
        return ExperimentSpec(
            kind="cdf", scenario=scenario, rng=RngSpec(args.seed, args.stream_id),
            out=args.out, fmt=args.format, plot=args.plot,
            params={"trials": args.trials})

    raise ConfigError(f"unhandled command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        spec = _spec_from_args(args)
        return run_experiment(spec)
    except (UpcsimError, ValueError, OSError) as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
