"""Command-line front end.

Subcommands: ``phases``, ``phase-scan``, ``transit``, ``path``,
``deviations``, ``two-agent``, ``mc-validate``.  All numeric output is
printed with 17 significant digits, so identical inputs produce
byte-identical artifacts.

Exit codes: 0 success; 2 bad usage or invalid inputs; 3 no admissible
nontrivial phase; 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, fields

from cyclefield import corrections, green, montecarlo
from cyclefield.errors import (
    ConvergenceError,
    CycleFieldError,
    DomainError,
    InfeasiblePhaseError,
    ParameterError,
    ShapeError,
    SingularityError,
    TrajectoryTerminated,
)
from cyclefield.params import ModelParams, load_config
from cyclefield.paths import AgentState
from cyclefield.phases import solve_phase

_SCAN_COLUMNS = (
    "gamma_eta", "Gamma1", "Gamma2", "Gamma3", "C1", "K1p", "A1",
    "m", "avgA", "avgC", "avgK", "avgY", "feasible", "stable",
)


# ---------------------------------------------------------------------------
# deterministic emitters
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    """One scalar with 17 significant digits (bools as true/false)."""
    if isinstance(v, bool) or type(v).__name__ in ("bool_", "bool"):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return f"{float(v):.17g}"


def _json_dumps(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  {json.dumps(str(k))}: {_json_dumps(v, indent + 1)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {_json_dumps(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if obj is None:
        return "null"
    return _fmt(obj)


def _emit(text: str, output: str | None) -> None:
    if output is None or output == "-":
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------


def _parse_state(text: str) -> AgentState:
    parts = text.split(",")
    if len(parts) != 3:
        raise ParameterError(f"expected 'C,K,A', got {text!r}")
    try:
        c, k, a = (float(p) for p in parts)
    except ValueError as exc:
        raise ParameterError(f"invalid state triple {text!r}") from exc
    return AgentState(C=c, K=k, A=a)


def _parse_triple(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 3:
        raise ParameterError(f"expected three comma-separated numbers, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ParameterError(f"invalid number triple {text!r}") from exc


def _load_params(args) -> ModelParams:
    return load_config(args.config) if args.config else ModelParams()


def _check_format(args, natural: str) -> None:
    if args.format is not None and args.format != natural:
        raise ParameterError(
            f"subcommand {args.command!r} only supports --format {natural}"
        )


def _solution_record(sol) -> dict:
    rec = asdict(sol)
    rec["phase"] = int(rec["phase"])
    return rec


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_phases(args) -> int:
    _check_format(args, "json")
    p = _load_params(args)
    records = [
        _solution_record(solve_phase(p, ph, paper_k1_approx=args.paper_k1_approx))
        for ph in (0, 1)
    ]
    _emit(_json_dumps({"phases": records}) + "\n", args.output)
    return 0


def _scan_values(args):
    if (args.values is None) == (args.range is None):
        raise ParameterError("phase-scan needs exactly one of --values or --range")
    if args.values is not None:
        try:
            return [float(v) for v in args.values.split(",")]
        except ValueError as exc:
            raise ParameterError(f"invalid --values list {args.values!r}") from exc
    parts = args.range.split(",")
    if len(parts) != 3:
        raise ParameterError(f"--range expects 'start,stop,count', got {args.range!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ParameterError(f"invalid --range {args.range!r}") from exc
    if count < 1:
        raise ParameterError(f"--range count must be >= 1, got {count}")
    if count == 1:
        return [start]
    step = (stop - start) / (count - 1)
    return [start + i * step for i in range(count)]


def _cmd_phase_scan(args) -> int:
    _check_format(args, "csv")
    base = _load_params(args)
    param_keys = tuple(f.name for f in fields(ModelParams))
    if args.key not in param_keys:
        raise ParameterError(f"unknown scan key {args.key!r}")
    lines = [",".join(param_keys + _SCAN_COLUMNS)]
    for value in _scan_values(args):
        p = base.replace(**{args.key: value})
        try:
            sol = solve_phase(p, 1, paper_k1_approx=args.paper_k1_approx)
            feasible = sol.feasible
        except InfeasiblePhaseError:
            sol = solve_phase(p, 0, paper_k1_approx=args.paper_k1_approx)
            feasible = False
        row = [_fmt(getattr(p, k)) for k in param_keys]
        row += [
            _fmt(sol.gamma_eta), _fmt(sol.Gamma1), _fmt(sol.Gamma2), _fmt(sol.Gamma3),
            _fmt(sol.C1), _fmt(sol.K1p), _fmt(sol.A1), _fmt(sol.mass),
            _fmt(sol.avg_A), _fmt(sol.avg_C), _fmt(sol.avg_K), _fmt(sol.avg_Y),
            _fmt(feasible), _fmt(sol.stable),
        ]
        lines.append(",".join(row))
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_transit(args) -> int:
    _check_format(args, "json")
    p = _load_params(args)
    sol = solve_phase(p, args.phase, paper_k1_approx=args.paper_k1_approx)
    from_state = _parse_state(getattr(args, "from"))
    to_state = _parse_state(args.to)
    density, log_density = green.transition_density(
        from_state, to_state, args.t, sol, p, maintext=args.maintext_convention
    )
    coeffs = green.coefficients(
        sol, p, from_state, to_state, maintext=args.maintext_convention
    )
    out = {
        "density": density,
        "log_density": log_density,
        "coefficients": asdict(coeffs),
    }
    _emit(_json_dumps(out) + "\n", args.output)
    return 0


def _cmd_path(args) -> int:
    _check_format(args, "csv")
    p = _load_params(args)
    sol = solve_phase(p, args.phase, paper_k1_approx=args.paper_k1_approx)
    x0 = _parse_state(args.x0)
    path = green.average_path(x0, args.t, sol, p, n_steps=args.n_steps)
    _emit(path.to_csv(), args.output)
    return 0


def _cmd_deviations(args) -> int:
    _check_format(args, "json")
    p = _load_params(args)
    sol = solve_phase(p, args.phase, paper_k1_approx=args.paper_k1_approx)
    query = corrections.DeviationQuery(
        x0=_parse_state(args.x0), v0=_parse_triple(args.v0), t=args.t
    )
    dC, dK, dA = corrections.path_deviation(query, sol, p)
    table = corrections.elasticity_table(args.t, sol, p)
    out = {"dC": dC, "dK": dK, "dA": dA, "elasticities": table}
    _emit(_json_dumps(out) + "\n", args.output)
    return 0


def _cmd_two_agent(args) -> int:
    _check_format(args, "json")
    p = _load_params(args)
    sol = solve_phase(p, args.phase, paper_k1_approx=args.paper_k1_approx)
    query = corrections.TwoAgentQuery(
        from1=_parse_state(args.from1),
        to1=_parse_state(args.to1),
        from2=_parse_state(args.from2),
        to2=_parse_state(args.to2),
        t=args.t,
    )
    out = corrections.two_agent_correction(query, sol, p)
    _emit(_json_dumps(out) + "\n", args.output)
    return 0


def _cmd_mc_validate(args) -> int:
    _check_format(args, "json")
    p = _load_params(args)
    sol = solve_phase(p, args.phase, paper_k1_approx=args.paper_k1_approx)
    mc = montecarlo.MCConfig(n_paths=args.n, dt=args.dt, seed=args.seed)
    initial = AgentState(C=sol.C_bar_phase, K=p.K_bar, A=sol.A_bar_phase)
    ensemble = montecarlo.sample_paths(initial, args.t, sol, p, mc)
    if args.export:
        lines = ["path_id,C,K,A"]
        for i in range(ensemble.n_paths):
            lines.append(
                f"{i},{ensemble.C[i]:.17g},{ensemble.K[i]:.17g},{ensemble.A[i]:.17g}"
            )
        _emit("\n".join(lines) + "\n", args.export)
    report = montecarlo.compare_to_green(ensemble, initial, sol, p)
    out = {"zscores": report["zscores"], "ks": report["ks"], "pass": report["pass"]}
    _emit(_json_dumps(out) + "\n", args.output)
    return 0


# ---------------------------------------------------------------------------
# parser / dispatch
# ---------------------------------------------------------------------------


def _add_global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Global options, accepted both before and after the subcommand."""
    d = argparse.SUPPRESS if suppress else None
    kw = {"default": d} if suppress else {}
    parser.add_argument("--config", help="flat key=value parameter file", **kw)
    parser.add_argument(
        "--seed", type=int, help="RNG seed (64-bit)",
        default=argparse.SUPPRESS if suppress else 0,
    )
    parser.add_argument("--format", choices=("csv", "json"), help="output format", **kw)
    parser.add_argument("--output", help="output file (default stdout)", **kw)
    flag_default = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument(
        "--paper-k1-approx",
        action="store_true",
        help="use the surrogate capital boundary shift instead of the exact form",
        **flag_default,
    )
    parser.add_argument(
        "--maintext-convention",
        action="store_true",
        help="use the alternative kernel convention (single marginal-product beta)",
        **flag_default,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclefield", description="Phase solver and transition-kernel toolkit."
    )
    _add_global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    phases = sub.add_parser("phases", help="solve both phases")
    phases.set_defaults(func=_cmd_phases)

    scan = sub.add_parser("phase-scan", help="sweep one parameter, CSV output")
    scan.add_argument("--key", required=True, help="ModelParams field to sweep")
    scan.add_argument("--values", help="comma-separated grid values")
    scan.add_argument("--range", help="start,stop,count linear grid")
    scan.set_defaults(func=_cmd_phase_scan)

    transit = sub.add_parser("transit", help="transition density between two states")
    transit.add_argument("--from", required=True, help="initial state C,K,A")
    transit.add_argument("--to", required=True, help="final state C,K,A")
    transit.add_argument("--t", type=float, required=True, help="horizon")
    transit.add_argument("--phase", type=int, choices=(0, 1), default=0)
    transit.set_defaults(func=_cmd_transit)

    path = sub.add_parser("path", help="average path from an initial state, CSV output")
    path.add_argument("--x0", required=True, help="initial state C,K,A")
    path.add_argument("--t", type=float, required=True, help="horizon")
    path.add_argument("--n-steps", type=int, default=None, help="RK4 step count")
    path.add_argument("--phase", type=int, choices=(0, 1), default=0)
    path.set_defaults(func=_cmd_path)

    dev = sub.add_parser("deviations", help="self-interaction path deviations")
    dev.add_argument("--x0", required=True, help="initial state C,K,A")
    dev.add_argument("--v0", required=True, help="initial velocities dC,dK,dA")
    dev.add_argument("--t", type=float, required=True, help="horizon")
    dev.add_argument("--phase", type=int, choices=(0, 1), default=0)
    dev.set_defaults(func=_cmd_deviations)

    two = sub.add_parser("two-agent", help="two-agent interaction corrections")
    two.add_argument("--from1", required=True, help="agent 1 initial state C,K,A")
    two.add_argument("--to1", required=True, help="agent 1 final state C,K,A")
    two.add_argument("--from2", required=True, help="agent 2 initial state C,K,A")
    two.add_argument("--to2", required=True, help="agent 2 final state C,K,A")
    two.add_argument("--t", type=float, required=True, help="horizon")
    two.add_argument("--phase", type=int, choices=(0, 1), default=0)
    two.set_defaults(func=_cmd_two_agent)

    mcv = sub.add_parser("mc-validate", help="Monte Carlo check of the analytic kernel")
    mcv.add_argument("--t", type=float, required=True, help="horizon")
    mcv.add_argument("--n", type=int, default=10000, help="number of paths")
    mcv.add_argument("--dt", type=float, default=1e-3, help="Euler step")
    mcv.add_argument("--phase", type=int, choices=(0, 1), default=0)
    mcv.add_argument("--export", help="write the endpoint ensemble CSV to this file")
    mcv.set_defaults(func=_cmd_mc_validate)

    for sp in (phases, scan, transit, path, dev, two, mcv):
        _add_global_options(sp, suppress=True)
    return parser


def run(argv=None) -> int:
    """Parse arguments, dispatch, and map errors to exit codes."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return args.func(args)
    except (ParameterError, ShapeError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasiblePhaseError as exc:
        print(f"error: no admissible nontrivial phase: {exc.reason}", file=sys.stderr)
        return 3
    except (ConvergenceError, SingularityError, TrajectoryTerminated) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 4
    except CycleFieldError as exc:  # any future subclass
        print(f"error: {exc}", file=sys.stderr)
        return 4


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
