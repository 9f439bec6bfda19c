import argparse
import logging
import math
import sys
from typing import Any, Dict, List, Optional, Sequence

from .bounds import enhanced_sensitivity
from .clock import coefficient_profile, find_tau_opt, gain_scaling, scaled_tau_grid, sensitivity_sweep
from .errors import NumericalConsistencyError, VerificationFailure
from .report import (
    BOUND_HEADER,
    COEFFICIENT_HEADER,
    SCALING_HEADER,
    SWEEP_HEADER,
    bound_rows,
    coefficient_rows,
    scaling_rows,
    sweep_rows,
    write_output,
)
from .spin import jy_basis, make_spin_operators, oat_state, validate_spin_length
from .tolerances import PROBABILITY_FLOOR, TAU_POINTS, TAU_SCALED_MAX
from .verify import verification_report

"""
    cli.py
    ------
    Command-line entry point. Subcommands:

        sweep    sensitivity limits of the twisted-state clock over a tau window
        scaling  tau_opt, gain (F + E)/F and |c_H| for a list of spin lengths
        coeffs   normalized coefficients of X_opt and X_opt,0 by outcome
        bound    every sensitivity limit at one (j, tau, theta)
        verify   the seeded random-instance property suite

    Twisting strengths are given in scaled units tau * sqrt(j). Tables go to
    standard output unless --output is given; logs go to standard error.

    Exit codes: 0 success, 1 verification failure, 2 invalid arguments,
    3 numerical-consistency error.
"""

# Constants
EXIT_OK = 0
EXIT_VERIFICATION_FAILURE = 1
EXIT_INVALID_ARGUMENTS = 2
EXIT_NUMERICAL_ERROR = 3
DEFAULT_J_LIST = "10,15,20,25,30,35,40,45,50,55,60,65,70,75,80,85,90,95,100"


def spin_length(text: str) -> float:
    """argparse type for a positive half-integer spin length."""
    try:
        return validate_spin_length(float(text))
    except ValueError as error:
        raise argparse.ArgumentTypeError(str(error)) from None


def spin_lengths(text: str) -> List[float]:
    """argparse type for a comma-separated list of spin lengths."""
    items = [item for item in text.split(",") if item.strip()]
    if not items:
        raise argparse.ArgumentTypeError("Need at least one spin length")
    return [spin_length(item.strip()) for item in items]


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"Expected a positive integer, got {text}")
    return value


def finite_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"Expected a finite number, got {text}")
    return value


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", default=None, help="Write the result to this file instead of standard output")
    common.add_argument("--verbose", action="store_true", help="Log progress and diagnostics at DEBUG level")

    clock = argparse.ArgumentParser(add_help=False)
    clock.add_argument("--format", default="csv", choices=["csv", "json"], help="Output format")
    clock.add_argument("--theta", default=0.0, type=finite_float, help="Phase imprinted before the readout")
    clock.add_argument(
        "--probability-floor",
        default=PROBABILITY_FLOOR,
        type=finite_float,
        help="Outcomes below this probability are masked out",
    )
    clock.add_argument("--workers", default=1, type=positive_int, help="Number of threads evaluating grid points")

    parser = argparse.ArgumentParser(
        prog="fisherplus", description="Sensitivity limits of phase estimation with prior knowledge of <H>"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sweep = commands.add_parser("sweep", parents=[common, clock], help="Sweep the twisting strength")
    sweep.add_argument("--j", default=25.0, type=spin_length, help="Spin length, N = 2j atoms")
    sweep.add_argument("--tau-min", default=0.0, type=finite_float, help="Smallest tau * sqrt(j)")
    sweep.add_argument("--tau-max", default=TAU_SCALED_MAX, type=finite_float, help="Largest tau * sqrt(j)")
    sweep.add_argument("--tau-points", default=TAU_POINTS, type=positive_int, help="Number of grid points")

    scaling = commands.add_parser("scaling", parents=[common, clock], help="Gain at tau_opt versus j")
    scaling.add_argument("--j-list", default=spin_lengths(DEFAULT_J_LIST), type=spin_lengths, help="Comma-separated spin lengths")

    coeffs = commands.add_parser("coeffs", parents=[common, clock], help="Coefficients of the optimal observables")
    coeffs.add_argument("--j", default=100.0, type=spin_length, help="Spin length, N = 2j atoms")
    coeffs.add_argument("--tau-scaled", default=None, type=finite_float, help="tau * sqrt(j); defaults to tau_opt")
    coeffs.add_argument("--basis", default="y", choices=["y", "z"], help="Readout basis")

    bound = commands.add_parser("bound", parents=[common, clock], help="All sensitivity limits at one point")
    bound.add_argument("--j", default=25.0, type=spin_length, help="Spin length, N = 2j atoms")
    bound.add_argument("--tau-scaled", default=None, type=finite_float, help="tau * sqrt(j); defaults to tau_opt")
    bound.add_argument("--repetitions", default=None, type=positive_int, help="Number of repetitions mu")

    verify = commands.add_parser("verify", parents=[common], help="Run the random-instance property suite")
    verify.add_argument("--seed", default=42, type=int, help="Seed of the random instances")
    verify.add_argument("--instances", default=1000, type=positive_int, help="Number of random instances")

    return parser.parse_args(argv)


def _tau_from_scaled(args: argparse.Namespace) -> float:
    if args.tau_scaled is None:
        return find_tau_opt(args.j, args.theta, probability_floor=args.probability_floor).tau
    if args.tau_scaled < 0:
        raise ValueError(f"tau * sqrt(j) must be nonnegative, got {args.tau_scaled}")
    return args.tau_scaled / math.sqrt(args.j)


def _metadata(args: argparse.Namespace) -> Dict[str, Any]:
    return {"command": args.command, "config": {k: v for k, v in vars(args).items() if k != "verbose"}}


def run(args: argparse.Namespace) -> int:
    """Execute one parsed command and return its exit code."""
    metadata = _metadata(args)

    if args.command == "sweep":
        grid = scaled_tau_grid(args.j, args.tau_min, args.tau_max, args.tau_points)
        records = sensitivity_sweep(args.j, grid, args.theta, args.workers, args.probability_floor)
        write_output(args.output, SWEEP_HEADER, sweep_rows(records), args.format, metadata, sys.stdout)

    elif args.command == "scaling":
        records = gain_scaling(args.j_list, args.theta, args.workers, args.probability_floor)
        write_output(args.output, SCALING_HEADER, scaling_rows(records), args.format, metadata, sys.stdout)

    elif args.command == "coeffs":
        tau = _tau_from_scaled(args)
        profile = coefficient_profile(args.j, tau, args.theta, args.basis, args.probability_floor)
        write_output(args.output, COEFFICIENT_HEADER, coefficient_rows(profile), args.format, metadata, sys.stdout)

    elif args.command == "bound":
        tau = _tau_from_scaled(args)
        spin = make_spin_operators(args.j)
        breakdown = enhanced_sensitivity(
            oat_state(args.j, tau),
            spin.jz,
            jy_basis(args.j),
            args.theta,
            repetitions=args.repetitions,
            spin=spin,
            probability_floor=args.probability_floor,
        )
        for diagnostic in breakdown.diagnostics:
            logging.warning(diagnostic)
        write_output(args.output, BOUND_HEADER, bound_rows(args.j, tau, breakdown), args.format, metadata, sys.stdout)

    elif args.command == "verify":
        report = verification_report(args.seed, args.instances, args.output)
        if args.output is None:
            sys.stdout.write(report.render())
        report.raise_for_failures()

    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments, configure logging and run the command.

    Logs go to standard error at WARNING level, or DEBUG with --verbose.
    Errors are mapped to exit codes instead of propagating.

    Args:
        argv: Command-line arguments without the program name; defaults to sys.argv[1:].

    Returns:
        0 on success, 1 when a verification check fails, 2 for invalid
        arguments and 3 for a numerical-consistency error.

    Example:
        >>> main(["bound", "--j", "25", "--tau-scaled", "1.8"])
        j,N,tau,tau_scaled,theta,F,E,...
        0
    """
    try:
        args = parse_arguments(argv)
    except SystemExit as exit_request:
        return int(exit_request.code or 0)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )

    try:
        return run(args)
    except VerificationFailure as error:
        logging.error(str(error))
        return EXIT_VERIFICATION_FAILURE
    except NumericalConsistencyError as error:
        logging.error(f"Numerical consistency error: {error}")
        return EXIT_NUMERICAL_ERROR
    except ValueError as error:
        logging.error(f"Invalid arguments: {error}")
        return EXIT_INVALID_ARGUMENTS


if __name__ == "__main__":
    sys.exit(main())
