import argparse
from fractions import Fraction
from typing import Any

from .datamodels import ExecBudget, TimeFunction, ValidationError


def validate_positive_int(value) -> int:
    """
    Positive int validator for argparse
    """
    ivalue = int(value)
    if ivalue <= 0:
        raise argparse.ArgumentTypeError(f"{value} is not a positive integer")
    return ivalue


def validate_non_negative_int(value) -> int:
    ivalue = int(value)
    if ivalue < 0:
        raise argparse.ArgumentTypeError(f"{value} is not a non-negative integer")
    return ivalue


def validate_positive_fraction(value) -> Fraction:
    """
    Accepts 0.5, 1/2 or 5e-3
    """
    try:
        fvalue = Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{value} is not a number")
    if fvalue <= 0:
        raise argparse.ArgumentTypeError(f"{value} is not positive")
    return fvalue


def validate_seed(value) -> int:
    ivalue = int(value, 0)
    if not 0 <= ivalue < 2**64:
        raise argparse.ArgumentTypeError(f"{value} does not fit in 64 bits")
    return ivalue


def add_args_for_budget(parser):
    budget_options = parser.add_argument_group(
        "budget_options", "Fuel budget: c_fuel * ceil(scale * t(n)) + d_fuel steps"
    )
    budget_options.add_argument(
        "--time_function",
        choices=[t.value for t in TimeFunction],
        default=TimeFunction.quadratic.value,
        help="Time bound t(n). (default n2)",
    )
    budget_options.add_argument(
        "--scale",
        type=validate_positive_fraction,
        default=Fraction(1),
        help="Scale applied to t(n). (default 1)",
    )
    budget_options.add_argument(
        "--c_fuel",
        type=validate_non_negative_int,
        default=10,
        help="Multiplier of the scaled time bound. (default 10)",
    )
    budget_options.add_argument(
        "--d_fuel",
        type=validate_positive_int,
        default=100,
        help="Fuel granted on every input. (default 100)",
    )


def build_budget(args: Any) -> ExecBudget:
    """
    Builds the ExecBudget based on args
    """
    try:
        return ExecBudget(
            time_function=TimeFunction(args.time_function),
            scale=args.scale,
            c_fuel=args.c_fuel,
            d_fuel=args.d_fuel,
        )
    except ValidationError as e:
        raise argparse.ArgumentTypeError(str(e)) from e
