"""Command-line harness.

Subcommands: ``sweep``, ``trace``, ``rho-sweep``, ``datadriven``, ``plot``,
and ``gen``. Option precedence is CLI flag over config-file key over
built-in default; the effective configuration is echoed to ``<out>.config``
next to every CSV. Exit codes: 0 success, 2 usage error, 3 input-parse
error, 4 solver failure.
"""

import argparse
import sys
from pathlib import Path

from .exceptions import ConfigParseError, DampedSolveError, LineSearchError, MatrixParseError, RankDeficiencyError
from .harness import (
    RHO_COLUMNS,
    SWEEP_COLUMNS,
    TRACE_COLUMNS,
    SweepSpec,
    format_float,
    run_datadriven,
    run_rho_sweep,
    run_sweep,
    run_trace,
    write_rows_csv,
)
from .plotting import PLOT_KINDS, render_plot
from .problems import gen_gaussian_problem, gen_lowrank_snapshots, write_matrix

_INT_KEYS = {"n", "r", "s", "p", "m", "trials", "seed", "max_steps", "consecutive_required", "threads"}
_FLOAT_KEYS = {"rho", "kappa", "epsilon", "armijo_c", "backtrack_beta", "feasibility_margin"}
_BOOL_KEYS = {"center"}
_INT_LIST_KEYS = {"p_values"}
_FLOAT_LIST_KEYS = {"rho_values"}
_STR_LIST_KEYS = {"methods"}

_SOLVER_KEYS = [
    "s", "rho", "kappa", "epsilon", "max_steps",
    "armijo_c", "backtrack_beta", "feasibility_margin", "consecutive_required",
]

_COMMAND_KEYS = {
    "sweep": ["n", "r", "p_values", "methods", "trials", "seed", "problem_path", "out", "threads"] + _SOLVER_KEYS,
    "trace": ["method", "n", "r", "p", "seed", "problem_path", "out"] + _SOLVER_KEYS,
    "rho-sweep": ["rho_values", "n", "r", "p", "trials", "seed", "problem_path", "out"] + _SOLVER_KEYS,
    "datadriven": ["snapshots", "r", "p", "method", "seed", "center", "out"] + _SOLVER_KEYS,
    "plot": ["csv", "kind", "out"],
    "gen": ["kind", "n", "r", "m", "seed", "out"],
}

_REQUIRED = {
    "sweep": ["n", "r", "p_values", "out"],
    "trace": ["method", "n", "r", "p", "out"],
    "rho-sweep": ["rho_values", "n", "r", "p", "out"],
    "datadriven": ["snapshots", "r", "p", "out"],
    "plot": ["csv", "kind", "out"],
    "gen": ["kind", "n", "r", "out"],
}

_DEFAULTS = {
    "s": None,
    "rho": 0.5,
    "kappa": 1e-4,
    "epsilon": 1e-6,
    "max_steps": 10_000,
    "armijo_c": 0.01,
    "backtrack_beta": 0.5,
    "feasibility_margin": 0.99,
    "consecutive_required": None,
    "methods": ["full", "rsn", "crsn", "greedy"],
    "trials": 1,
    "seed": 0,
    "threads": 1,
    "problem_path": None,
    "method": "full",
    "center": False,
    "m": None,
}


def _int_list(text):
    return [int(tok) for tok in str(text).split(",") if tok.strip() != ""]


def _float_list(text):
    return [float(tok) for tok in str(text).split(",") if tok.strip() != ""]


def _str_list(text):
    return [tok.strip() for tok in str(text).split(",") if tok.strip() != ""]


def _bool(text):
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _convert(key, text):
    if key in _INT_KEYS:
        return int(text)
    if key in _FLOAT_KEYS:
        return float(text)
    if key in _BOOL_KEYS:
        return _bool(text)
    if key in _INT_LIST_KEYS:
        return _int_list(text)
    if key in _FLOAT_LIST_KEYS:
        return _float_list(text)
    if key in _STR_LIST_KEYS:
        return _str_list(text)
    return str(text)


def parse_config(path):
    """Flat ``key = value`` config file; '#' starts a comment line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigParseError(f"cannot read config {path}: {exc}") from exc
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigParseError(f"{path}, line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        entries[key.strip()] = value.strip()
    return entries


def _merge(command, args, config_entries):
    effective = {}
    for key in _COMMAND_KEYS[command]:
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            effective[key] = cli_value
        elif key in config_entries:
            try:
                effective[key] = _convert(key, config_entries[key])
            except ValueError as exc:
                raise ConfigParseError(f"config key {key!r}: {exc}") from exc
        else:
            effective[key] = _DEFAULTS.get(key)
    return effective


def _format_config_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format_config_value(v) for v in value)
    return str(value)


def _write_sidecar(out_path, effective):
    lines = []
    for key in sorted(effective):
        value = effective[key]
        if value is None:
            continue
        lines.append(f"{key} = {_format_config_value(value)}")
    Path(str(out_path) + ".config").write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="sensorselect",
        description="benchmark harness for convex and baseline sensor selection",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="root seed (default 0)")
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--out", help="output path")
    common.add_argument("--threads", type=int, help="worker threads for sweep cells (default 1)")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--s", type=int, help="sketch size (default n // 10)")
    solver.add_argument("--rho", type=float, help="elite fraction for crsn (default 0.5)")
    solver.add_argument("--kappa", type=float, help="barrier weight (default 1e-4)")
    solver.add_argument("--epsilon", type=float, help="decrement tolerance (default 1e-6)")
    solver.add_argument("--max-steps", dest="max_steps", type=int)
    solver.add_argument("--armijo-c", dest="armijo_c", type=float)
    solver.add_argument("--backtrack-beta", dest="backtrack_beta", type=float)
    solver.add_argument("--feasibility-margin", dest="feasibility_margin", type=float)
    solver.add_argument("--consecutive-required", dest="consecutive_required", type=int)

    subs = parser.add_subparsers(dest="command", required=True)

    sweep = subs.add_parser("sweep", parents=[common, solver], help="run every (method, p, trial) cell")
    sweep.add_argument("--n", type=int)
    sweep.add_argument("--r", type=int)
    sweep.add_argument("--p-values", dest="p_values", type=_int_list, help="comma-separated p list")
    sweep.add_argument("--methods", type=_str_list, help="subset of full,rsn,crsn,greedy,random")
    sweep.add_argument("--trials", type=int)
    sweep.add_argument("--problem", dest="problem_path", help="fixture basis file instead of Gaussian problems")

    trace = subs.add_parser("trace", parents=[common, solver], help="per-step convergence trace")
    trace.add_argument("--method", choices=("full", "rsn", "crsn"))
    trace.add_argument("--n", type=int)
    trace.add_argument("--r", type=int)
    trace.add_argument("--p", type=int)
    trace.add_argument("--problem", dest="problem_path")

    rho = subs.add_parser("rho-sweep", parents=[common, solver], help="mean objective and time per rho")
    rho.add_argument("--rho-values", dest="rho_values", type=_float_list, help="comma-separated rho list")
    rho.add_argument("--n", type=int)
    rho.add_argument("--r", type=int)
    rho.add_argument("--p", type=int)
    rho.add_argument("--trials", type=int)
    rho.add_argument("--problem", dest="problem_path")

    data = subs.add_parser("datadriven", parents=[common, solver], help="snapshot file to selection row")
    data.add_argument("--snapshots", help="snapshot matrix file")
    data.add_argument("--r", type=int, help="POD truncation rank")
    data.add_argument("--p", type=int)
    data.add_argument("--method", choices=("full", "rsn", "crsn", "greedy", "random"))
    data.add_argument("--center", action="store_const", const=True, help="subtract temporal means before the POD")

    plot = subs.add_parser("plot", parents=[common], help="render a harness CSV to SVG")
    plot.add_argument("--csv", help="input CSV path")
    plot.add_argument("--kind", choices=PLOT_KINDS)

    gen = subs.add_parser("gen", parents=[common], help="write a problem matrix file")
    gen.add_argument("--kind", choices=("gaussian", "snapshots"))
    gen.add_argument("--n", type=int)
    gen.add_argument("--r", type=int, help="columns (gaussian) or rank (snapshots)")
    gen.add_argument("--m", type=int, help="snapshot count (snapshots kind)")

    return parser


def _spec_from(effective, p_values):
    return SweepSpec(
        n=effective.get("n") or 0,
        r=effective.get("r") or 0,
        p_values=p_values,
        s=effective["s"],
        rho=effective["rho"],
        methods=tuple(effective.get("methods") or _DEFAULTS["methods"]),
        trials=effective.get("trials") or 1,
        seed=effective["seed"],
        kappa=effective["kappa"],
        epsilon=effective["epsilon"],
        max_steps=effective["max_steps"],
        armijo_c=effective["armijo_c"],
        backtrack_beta=effective["backtrack_beta"],
        feasibility_margin=effective["feasibility_margin"],
        consecutive_required=effective["consecutive_required"],
        problem_path=effective.get("problem_path"),
    )


def _cmd_sweep(effective):
    spec = _spec_from(effective, effective["p_values"])
    rows = run_sweep(spec, threads=effective["threads"] or 1)
    write_rows_csv(effective["out"], SWEEP_COLUMNS, (r.values() for r in rows))
    _write_sidecar(effective["out"], effective)
    print(f"wrote {effective['out']} ({len(rows)} rows)")


def _cmd_trace(effective):
    spec = _spec_from(effective, [effective["p"]])
    report, rows = run_trace(effective["method"], effective["p"], spec)
    write_rows_csv(effective["out"], TRACE_COLUMNS, rows)
    _write_sidecar(effective["out"], effective)
    state = f"converged at step {report.steps}" if report.converged else "hit the step limit unconverged"
    print(f"wrote {effective['out']} ({len(rows)} steps, {state})")


def _cmd_rho_sweep(effective):
    spec = _spec_from(effective, [effective["p"]])
    rows = run_rho_sweep(
        effective["rho_values"], effective["p"], spec, effective.get("trials") or 1
    )
    write_rows_csv(effective["out"], RHO_COLUMNS, rows)
    _write_sidecar(effective["out"], effective)
    print(f"wrote {effective['out']} ({len(rows)} rows)")


def _cmd_datadriven(effective):
    spec = _spec_from(
        {**effective, "n": 2, "r": 1, "trials": 1, "methods": ("full",), "problem_path": None},
        [effective["p"]],
    )
    row = run_datadriven(
        effective["snapshots"], effective["r"], effective["p"],
        effective["method"], spec, center=bool(effective["center"]),
    )
    write_rows_csv(effective["out"], SWEEP_COLUMNS, [row.values()])
    _write_sidecar(effective["out"], effective)
    print(f"wrote {effective['out']} (1 row, f_org = {format_float(row.f_org)})")


def _cmd_plot(effective):
    render_plot(effective["csv"], effective["kind"], effective["out"])
    print(f"wrote {effective['out']}")


def _cmd_gen(effective):
    kind = effective["kind"]
    if kind == "gaussian":
        matrix = gen_gaussian_problem(effective["n"], effective["r"], effective["seed"])
    else:
        if effective["m"] is None:
            raise ValueError("gen --kind snapshots requires --m")
        matrix = gen_lowrank_snapshots(effective["n"], effective["m"], effective["r"], effective["seed"])
    write_matrix(effective["out"], matrix)
    print(f"wrote {effective['out']} ({matrix.shape[0]}x{matrix.shape[1]})")


_HANDLERS = {
    "sweep": _cmd_sweep,
    "trace": _cmd_trace,
    "rho-sweep": _cmd_rho_sweep,
    "datadriven": _cmd_datadriven,
    "plot": _cmd_plot,
    "gen": _cmd_gen,
}

# commands whose ValueErrors concern input files rather than flag usage
_PARSE_ERROR_COMMANDS = {"plot", "datadriven"}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        config_entries = parse_config(args.config) if getattr(args, "config", None) else {}
        effective = _merge(command, args, config_entries)
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    missing = [k for k in _REQUIRED[command] if effective.get(k) is None]
    if missing:
        print(f"error: missing required options for {command}: {', '.join(missing)}", file=sys.stderr)
        return 2
    try:
        _HANDLERS[command](effective)
    except MatrixParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (LineSearchError, DampedSolveError, RankDeficiencyError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3 if command in _PARSE_ERROR_COMMANDS else 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
