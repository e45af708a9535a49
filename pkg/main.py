#!/usr/bin/env python3
"""
main.py - Road-Field Front Analyzer command-line entry point

Parses model parameters and command options, dispatches to the numerical
modules and emits JSON documents or CSV plot data. Errors are reported on
stderr as one machine-parseable line and mapped to exit codes:
0 success, 1 failed verification or unexpected error, 2 invalid
configuration, 3 internal consistency or boundary failure.
"""

import os
import sys
import math
import logging
import argparse
import traceback
from dataclasses import dataclass, asdict

# Application constants
VERSION = "1.0.0"
LOG_FILENAME = 'error_log.txt'
LOG_FILE_ENV = "RF_LOG_FILE"
COMMANDS = ("hamiltonian", "legendre", "value", "speed", "wulff", "cone", "path", "simulate", "verify")
DEFAULT_N = 32
INPUT_LIMIT = 1e8
POINT_KEYS = ("t", "x", "y", "q", "p", "v", "theta")
GRID_KEYS = ("h", "Lx", "Ly", "tmax")
TABLE_MOMENTUM_MAX = 4.0

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_INTERNAL = 3

_installed_handlers = []


# ===== Logging =====
def configure_logging(verbose=False):
    """
    File log for errors plus a stderr console handler

    The log file is replaced at each start; if it cannot be removed a
    timestamped name is used instead.
    """
    log_filename = os.environ.get(LOG_FILE_ENV, LOG_FILENAME)
    if os.path.exists(log_filename):
        try:
            os.remove(log_filename)
        except OSError:
            root_name, extension = os.path.splitext(log_filename)
            log_filename = f"{root_name}_{os.getpid()}{extension}"

    root = logging.getLogger('')
    for handler in _installed_handlers:
        root.removeHandler(handler)
        handler.close()
    _installed_handlers.clear()

    file_handler = logging.FileHandler(log_filename, delay=True, encoding='utf-8')
    file_handler.setLevel(logging.ERROR)
    file_handler.setFormatter(logging.Formatter('%(asctime)s - %(levelname)s - %(message)s',
                                                datefmt='%Y-%m-%d %H:%M:%S'))

    console = logging.StreamHandler(sys.stderr)
    console.setLevel(logging.INFO if verbose else logging.WARNING)
    console.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))

    for handler in (file_handler, console):
        root.addHandler(handler)
        _installed_handlers.append(handler)
    root.setLevel(logging.INFO if verbose else logging.WARNING)
    return log_filename


def log_exception(e, message="An error occurred"):
    """
    Log an exception with a limited traceback for better readability

    Args:
        e: The exception object to log
        message: A descriptive message about the context of the error
    """
    tb_lines = traceback.format_exception(type(e), e, e.__traceback__)
    # Only include the most relevant parts of the traceback
    if len(tb_lines) > 5:
        tb_text = ''.join([tb_lines[0]] + tb_lines[-4:])
    else:
        tb_text = ''.join(tb_lines)
    logging.error(f"{message}: {str(e)}\n{tb_text}")


def report_error(code, kind, message):
    text = " ".join(str(message).split())
    print(f"error code={code} kind={kind} message={text}", file=sys.stderr)


# ===== Imports of the numerical stack =====
import numpy as np

import state
import conical
import front_geometry
import rd_simulator
import value_function
import verification
from core_hamiltonians import (eval_F, eval_F0, eval_Hf, eval_Hf_minus, eval_Hr,
                               eval_Hr_prime, solve_pq)
from data_export import (HISTORY_COLUMNS, build_document, export_cone_csv,
                         export_front_history, export_path_csv, export_wulff_csv,
                         write_csv, write_json, write_snapshot)
from data_parser import load_config, params_from_dict
from legendre import eval_Lf, eval_Lr, eval_Lr_prime
from utils import BoundaryProximityError, ConsistencyError, SolverError, add_log_entry


# ===== Configuration =====
class _ArgumentParser(argparse.ArgumentParser):
    """Raise instead of exiting so bad flags map to the invalid-config exit code"""

    def error(self, message):
        raise ValueError(message)


def build_parser():
    parser = _ArgumentParser(prog="main.py", description="Road-field front propagation analyzer")
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")

    model = parser.add_argument_group("model parameters")
    model.add_argument("--D", type=float, help="road diffusivity (> 1), default 9")
    model.add_argument("--mu", type=float, help="road decay rate, default 1")
    model.add_argument("--nu", type=float, help="field-to-road exchange rate, default 1")
    model.add_argument("--kappa", type=float, help="boundary exchange coefficient, default 1")
    model.add_argument("--Dtilde", type=float, help="diffusivity of the second cone road")

    geometry = parser.add_argument_group("geometry")
    geometry.add_argument("--angle", type=float, help="cone half-angle a in (0, pi/2]")
    geometry.add_argument("--theta", type=float, help="direction from the road normal")
    geometry.add_argument("--n", type=int, help="number of samples")
    geometry.add_argument("--t", type=float, help="time for value/path")
    geometry.add_argument("--x", type=float, help="abscissa for value/path")
    geometry.add_argument("--y", type=float, help="distance from the road for value/path")
    geometry.add_argument("--q", type=float, help="tangential momentum for hamiltonian")
    geometry.add_argument("--p", type=float, help="normal momentum for hamiltonian")
    geometry.add_argument("--v", type=float, help="road velocity for legendre")

    grid = rd_simulator.SimulationConfig()
    simulation = parser.add_argument_group("simulation")
    simulation.add_argument("--h", type=float, help=f"grid spacing, default {grid.h:g}")
    simulation.add_argument("--Lx", type=float, help=f"half-width of the domain, default {grid.Lx:g}")
    simulation.add_argument("--Ly", type=float, help=f"height of the domain, default {grid.Ly:g}")
    simulation.add_argument("--tmax", type=float, help=f"final time, default {grid.t_max:g}")
    simulation.add_argument("--level", type=float, help=f"front level in (0, 1), default {grid.level:g}")
    simulation.add_argument("--decouple-road", dest="decouple_road", action="store_true", default=None,
                            help="cut the field-road exchange (KPP baseline)")
    simulation.add_argument("--snapshot", help="write the final state as an RDF1 file")

    output = parser.add_argument_group("output")
    output.add_argument("--output", help="output path (stdout when omitted)")
    output.add_argument("--format", choices=("json", "csv"))
    output.add_argument("--config", help="JSON file of flag values or an emitted result document")
    output.add_argument("--save-run", dest="save_run", help="save the session state as JSON")
    output.add_argument("--quick", action="store_true", default=None, help="skip simulation checks")
    output.add_argument("--force", action="store_true", default=None,
                        help="allow unverified cone bounds for a >= pi/4")
    output.add_argument("--workers", type=int, help="worker processes (capped by RF_THREADS)")
    output.add_argument("--verbose", action="store_true", help="log progress to stderr")
    return parser


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved options for one command"""
    command: str
    params: object
    angle: float = None
    theta: float = None
    n: int = None
    t: float = None
    x: float = None
    y: float = None
    q: float = None
    p: float = None
    v: float = None
    h: float = None
    Lx: float = None
    Ly: float = None
    tmax: float = None
    level: float = None
    snapshot: str = None
    output: str = None
    format: str = "json"
    quick: bool = False
    force: bool = False
    decouple_road: bool = False
    workers: int = None

    def options(self):
        """Flag-keyed options that reproduce this run through --config"""
        skip = {"command", "params", "output", "format", "snapshot", "workers"}
        return {key: value for key, value in asdict(self).items()
                if key not in skip and value is not None and value is not False}


OPTION_KEYS = ("angle", "theta", "n", "t", "x", "y", "q", "p", "v", "h", "Lx", "Ly", "tmax", "level",
               "snapshot", "output", "format", "quick", "force", "decouple_road", "workers")


def resolve_config(argv=None):
    """
    Parse flags, merge a --config file under them and validate parameters

    Returns:
        tuple: (RunConfig, namespace)

    Raises:
        ValueError: for unknown flags, a missing command or invalid parameters
    """
    args = build_parser().parse_args(argv)
    values = {}
    if args.config:
        values.update(load_config(args.config))
    for key, value in vars(args).items():
        if value is not None:
            values[key] = value

    command = values.get("command")
    if command not in COMMANDS:
        raise ValueError(f"A command is required, one of {', '.join(COMMANDS)}")

    params = params_from_dict(values)
    options = {key: values[key] for key in OPTION_KEYS if values.get(key) is not None}
    options.setdefault("format", "json")
    for key in ("n", "workers"):
        if key in options:
            options[key] = int(options[key])
    if options["format"] not in ("json", "csv"):
        raise ValueError(f"Unknown format {options['format']!r}")
    if options.get("level") is not None and not (0.0 < options["level"] < 1.0):
        raise ValueError(f"level must lie in (0, 1), got {options['level']}")
    _validate_magnitudes(options)
    return RunConfig(command=command, params=params, **options), args


def _validate_magnitudes(options):
    """Reject non-finite or out-of-range numeric options before any solver runs"""
    for key in POINT_KEYS + GRID_KEYS:
        if options.get(key) is None:
            continue
        value = float(options[key])
        if not math.isfinite(value) or abs(value) > INPUT_LIMIT:
            raise ValueError(f"--{key} must be finite with magnitude at most {INPUT_LIMIT:g}, got {options[key]}")
        if key in GRID_KEYS + ("t",) and value <= 0.0:
            raise ValueError(f"--{key} must be positive, got {value}")
        options[key] = value
    if options.get("theta") is not None and abs(options["theta"]) > math.pi / 2:
        raise ValueError(f"--theta must lie in [-pi/2, pi/2], got {options['theta']}")


# ===== Commands =====
def _require(config, *names):
    missing = [f"--{name}" for name in names if getattr(config, name) is None]
    if missing:
        raise ValueError(f"{config.command} needs {', '.join(missing)}")


def _emit(config, results, tolerances, rows=None, columns=None):
    """Write the JSON document, or CSV rows when --format csv"""
    if config.format == "csv":
        if rows is None:
            raise ValueError(f"{config.command} has no CSV form; use --format json")
        write_csv(rows, columns, config.output)
        state.last_results = results
        return
    document = build_document(config.command, config.params, results, tolerances, config.options())
    text = write_json(document, config.output)
    state.last_results = document
    if config.output is None:
        print(text)


def cmd_hamiltonian(config):
    params = config.params
    p = config.p if config.p is not None else 0.0
    if config.q is not None:
        q = config.q
        results = {
            "q": q, "p": p,
            "p_q": solve_pq(q, params),
            "H_f": eval_Hf(q, p),
            "H_f_minus": eval_Hf_minus(q, p),
            "F0": eval_F0(q, p, params),
            "H_r": eval_Hr(q, params),
            "H_r_prime": eval_Hr_prime(q, params),
            "F": eval_F(q, p, params),
            "q_crit": 1.0 / math.sqrt(params.D - 1.0),
        }
        rows = [(q, results["p_q"], results["H_r"], results["H_r_prime"])]
    else:
        momenta = np.linspace(0.0, TABLE_MOMENTUM_MAX, config.n or DEFAULT_N)
        rows = [(float(q), solve_pq(q, params), eval_Hr(q, params), eval_Hr_prime(q, params)) for q in momenta]
        results = {"table": [dict(zip(("q", "p_q", "H_r", "H_r_prime"), row)) for row in rows]}
    _emit(config, results, {"p_q": 1e-12}, rows, ["q", "p_q", "H_r", "H_r_prime"])


def cmd_legendre(config):
    params = config.params
    if config.v is not None:
        v = config.v
        results = {"v": v, "L_r": eval_Lr(v, params), "L_r_prime": eval_Lr_prime(v, params),
                   "L_f": eval_Lf(v, 0.0), "window_edge": 2.0 / math.sqrt(params.D - 1.0)}
        rows = [(v, results["L_r"], results["L_r_prime"])]
    else:
        velocities = np.linspace(0.0, 2.0 * front_geometry.road_speed(params), config.n or DEFAULT_N)
        rows = [(float(v), eval_Lr(v, params), eval_Lr_prime(v, params)) for v in velocities]
        results = {"table": [dict(zip(("v", "L_r", "L_r_prime"), row)) for row in rows]}
    _emit(config, results, {"conjugate": 1e-13}, rows, ["v", "L_r", "L_r_prime"])


def cmd_value(config):
    _require(config, "x", "y")
    t = config.t if config.t is not None else 1.0
    solution = value_function.solve_J(t, config.x, config.y, config.params)
    results = asdict(solution)
    results["w"] = max(0.0, solution.value)
    if config.y > 0:
        results["gradient"] = list(value_function.grad_J(t, config.x, config.y, config.params))
    if config.angle is not None:
        cone = conical.ConeGeometry(config.angle)
        results["J_a"] = conical.solve_Ja(t, config.x, config.y, cone, config.params)
    rows = [(t, config.x, config.y, solution.value, solution.tau0, solution.z0)]
    _emit(config, results, {"argument": value_function.ARGUMENT_TOLERANCE}, rows,
          ["t", "x", "y", "J", "tau0", "z0"])


def cmd_speed(config):
    params = config.params
    road = front_geometry.road_speed(params)
    results = {
        "road_speed": road,
        "critical_angle": front_geometry.critical_angle(params),
        "critical_angle_bounds": list(front_geometry.critical_angle_bounds(params)),
        "large_D_asymptote": front_geometry.large_D_asymptote(params),
        "mu_infinity_asymptote": front_geometry.mu_infinity_asymptote(params),
    }
    if params.D > 2.0:
        results["road_speed_bounds"] = list(front_geometry.road_speed_bounds(params))
    if config.theta is not None:
        results["theta"] = config.theta
        results["directional_speed"] = front_geometry.directional_speed(config.theta, params)
        results["road_enhanced"] = front_geometry.is_road_enhanced(config.theta, params)
    rows = [(config.theta if config.theta is not None else math.pi / 2,
             results.get("directional_speed", road))]
    _emit(config, results, {"speed": front_geometry.SPEED_TOLERANCE,
                            "cross_check": front_geometry.CROSS_CHECK_TOLERANCE,
                            "angle": front_geometry.ANGLE_TOLERANCE}, rows, ["theta_rad", "speed"])


def cmd_wulff(config):
    shape = front_geometry.sample_wulff(config.params, config.n or DEFAULT_N, config.workers)
    if config.format == "csv":
        export_wulff_csv(shape, config.output)
        state.last_results = {"samples": shape.quadrant_samples()}
        return
    results = {
        "samples": [{"theta": theta, "speed": speed} for theta, speed in shape.samples],
        "theta_star": shape.theta_star,
        "road_speed": shape.road_speed,
        "convex": shape.convex,
        "lower_shape_angle": front_geometry.lower_shape_angle(config.params),
    }
    _emit(config, results, {"speed": front_geometry.SPEED_TOLERANCE,
                            "convexity": front_geometry.CONVEXITY_SLACK})


def cmd_cone(config):
    _require(config, "angle")
    cone = conical.ConeGeometry(config.angle)
    params = config.params
    n = config.n or DEFAULT_N

    if params.D_tilde is not None and params.D_tilde != params.D:
        low, high = cone.sector
        rows = []
        for theta in np.linspace(low, high, n):
            bounds = conical.unequal_diffusion_speed_bounds(float(theta), cone, params, force=bool(config.force))
            rows.append((float(theta), bounds.lower, bounds.upper, int(bounds.verified)))
        results = {
            "bounds": [dict(zip(("theta", "lower", "upper", "verified"), row)) for row in rows],
            "slow_road_threshold": conical.slow_road_threshold(cone, params),
        }
        _emit(config, results, {"bounds": conical.BOUND_AGREEMENT}, rows,
              ["theta_rad", "lower", "upper", "verified"])
        return

    report = conical.cone_wulff(cone, params, n=n, estimate_threshold=config.format == "json",
                                workers=config.workers)
    if config.format == "csv":
        export_cone_csv(report, config.output)
        state.last_results = {"samples": list(report.samples)}
        return
    results = {
        "samples": [{"theta": theta, "speed": speed, "branch": branch} for theta, speed, branch in report.samples],
        "theta_star": report.theta_star,
        "road_speed": report.road_speed,
        "convex": report.convex,
        "supporting_line_convex": report.supporting_line_convex,
        "criteria_agree": report.criteria_agree,
        "nonconvexity_threshold_D": report.threshold_D,
        "nonconvexity_bound_D": conical.nonconvexity_bound(cone, params),
    }
    _emit(config, results, {"angle": front_geometry.ANGLE_TOLERANCE,
                            "support": conical.SUPPORT_SLACK})


def cmd_path(config):
    _require(config, "x", "y")
    t = config.t if config.t is not None else 1.0
    samples = value_function.optimal_path(t, config.x, config.y, config.params, config.n or 101)
    if config.format == "csv":
        export_path_csv(samples, config.output)
        state.last_results = {"path": samples}
        return
    solution = value_function.solve_J(t, config.x, config.y, config.params)
    results = {
        "path": [{"s": s, "x": x, "y": y} for s, (x, y) in samples],
        "tau0": solution.tau0,
        "z0": solution.z0,
        "on_road_speed": solution.on_road_speed,
        "field_speed": solution.field_speed,
    }
    _emit(config, results, {"argument": value_function.ARGUMENT_TOLERANCE})


def cmd_simulate(config):
    defaults = rd_simulator.SimulationConfig()
    sim_config = rd_simulator.SimulationConfig(
        h=config.h or defaults.h,
        Lx=config.Lx or defaults.Lx,
        Ly=config.Ly or defaults.Ly,
        t_max=config.tmax or defaults.t_max,
        level=config.level or defaults.level,
        cone_a=config.angle,
        decouple_road=bool(config.decouple_road),
    )
    if config.theta is not None:
        thetas = (config.theta,)
    elif config.angle is not None:
        thetas = conical.ConeGeometry(config.angle).sector
    else:
        thetas = (0.0, math.pi / 2)

    result = rd_simulator.run_simulation(config.params, sim_config, thetas)
    if config.snapshot:
        write_snapshot(result.final_state, config.snapshot)
    if config.format == "csv":
        export_front_history(result.history, config.output)
        state.last_results = {"steps": result.steps}
        return

    results = {
        "speeds": rd_simulator.cross_validate(result),
        "bounds": result.bounds,
        "maximum_principle": result.maximum_principle_holds,
        "steps": result.steps,
        "dt": result.final_state.dt,
        "history": [dict(zip(HISTORY_COLUMNS, row)) for row in result.history],
    }
    _emit(config, results, {"speed_relative": 0.10})


def cmd_verify(config):
    report = verification.run_verification(config.params, quick=config.quick)
    _emit(config, report.as_dict(), {check.name: check.tolerance for check in report.checks})
    if not report.passed:
        names = ", ".join(check.name for check in report.failures)
        report_error(EXIT_FAILURE, "failure", f"verification failed: {names}")
        return EXIT_FAILURE
    return EXIT_OK


DISPATCH = {
    "hamiltonian": cmd_hamiltonian,
    "legendre": cmd_legendre,
    "value": cmd_value,
    "speed": cmd_speed,
    "wulff": cmd_wulff,
    "cone": cmd_cone,
    "path": cmd_path,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def run(config):
    """Dispatch a resolved RunConfig; returns the exit status"""
    state.run_config = {"command": config.command, "params": config.params.as_dict(), **config.options()}
    add_log_entry(f"Running {config.command} with {config.params}")
    status = DISPATCH[config.command](config)
    return EXIT_OK if status is None else status


def main(argv=None):
    """
    Main entry point for the Road-Field Front Analyzer

    Returns:
        int: exit status
    """
    state.reset_state()
    verbose = "--verbose" in (sys.argv[1:] if argv is None else argv)
    log_filename = configure_logging(verbose)

    save_path = None
    try:
        config, args = resolve_config(argv)
        save_path = args.save_run
        return run(config)
    except ValueError as e:
        report_error(EXIT_INVALID, "invalid_config", e)
        return EXIT_INVALID
    except ConsistencyError as e:
        log_exception(e, "Consistency check failed")
        report_error(EXIT_INTERNAL, "consistency", e)
        return EXIT_INTERNAL
    except BoundaryProximityError as e:
        report_error(EXIT_INTERNAL, "boundary", e)
        return EXIT_INTERNAL
    except SolverError as e:
        log_exception(e, "Solver failed")
        report_error(EXIT_INTERNAL, "solver", e)
        return EXIT_INTERNAL
    except Exception as e:
        log_exception(e, "Error in main")
        report_error(EXIT_FAILURE, "failure", f"{type(e).__name__}: {e} (see {log_filename})")
        return EXIT_FAILURE
    finally:
        if save_path:
            state.save_run(save_path)


if __name__ == "__main__":
    sys.exit(main())
