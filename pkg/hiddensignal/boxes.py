"""
Deterministic box pairs. Alice's box computes a = A(x, y, n) and Bob's box
b = B(x, y, n) on round n; a box that reads the other party's input signals
inside the model even when the parties cannot see it.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, FrozenSet, Optional, Tuple

import typing_extensions

from .datamodels import (
    BoxMisconfigured,
    ConfigurationError,
    ExecBudget,
    validate_bit,
)
from .file_formats import read_program
from .program_vm import AND_PROGRAM, ZERO_PROGRAM, Opcode, Program, run

LOGGER = logging.getLogger()

BoxFunction: typing_extensions.TypeAlias = Callable[[int, int, int], int]
# local response to (own input, n)
LocalFunction: typing_extensions.TypeAlias = Callable[[int, int], int]


class Backing(str, Enum):
    native = "native"
    vm = "vm"


@dataclass(frozen=True)
class SignalingProfile:
    a_reads_y: bool = False
    b_reads_x: bool = False


@dataclass(frozen=True)
class BoxPair:
    a: BoxFunction
    b: BoxFunction
    backing: Backing = Backing.native
    profile: SignalingProfile = field(default_factory=SignalingProfile)
    name: str = ""
    programs: Optional[Tuple[Program, Program]] = None
    budget: Optional[ExecBudget] = None


def alpha_zero(n: int) -> int:
    return 0


def alpha_popcount_parity(n: int) -> int:
    """
    >>> [alpha_popcount_parity(n) for n in range(5)]
    [0, 1, 1, 0, 1]
    """
    return bin(n).count("1") % 2


ALPHAS: Dict[str, Callable[[int], int]] = {
    "zero": alpha_zero,
    "popcount_parity": alpha_popcount_parity,
}

LOCAL_FUNCTIONS: Dict[str, LocalFunction] = {
    "zero": lambda own, n: 0,
    "one": lambda own, n: 1,
    "copy": lambda own, n: own,
    "flip": lambda own, n: 1 - own,
    "n_parity": lambda own, n: n % 2,
}


def local_deterministic(
    f: LocalFunction, g: LocalFunction, name: str = "local"
) -> BoxPair:
    """
    a = f(x, n), b = g(y, n): no box looks at the other side
    """
    return BoxPair(
        a=lambda x, y, n: f(x, n),
        b=lambda x, y, n: g(y, n),
        profile=SignalingProfile(a_reads_y=False, b_reads_x=False),
        name=name,
    )


def deterministic_pr(alpha: Callable[[int], int] = alpha_zero, name: str = "pr") -> BoxPair:
    """
    a = alpha(n), b = alpha(n) xor (x and y), which wins the CHSH game on
    every round. Bob's box reads x.
    """
    return BoxPair(
        a=lambda x, y, n: alpha(n),
        b=lambda x, y, n: alpha(n) ^ (x & y),
        profile=SignalingProfile(a_reads_y=False, b_reads_x=True),
        name=name,
    )


def _vm_function(program: Program, budget: ExecBudget, side: str) -> BoxFunction:
    def box(x: int, y: int, n: int) -> int:
        result = run(program, x, y, n, budget)
        if not result.halted:
            raise BoxMisconfigured(
                f"Box {side} (program {program.index}) ran out of fuel on x={x} y={y} n={n}"
            )
        return result.bit

    return box


def vm_backed(
    program_a: Program, program_b: Program, budget: ExecBudget, name: str = "vm"
) -> BoxPair:
    """
    Boxes computed by programs. The profile is read off the code: a box can
    only depend on the other input if its program loads it.
    """
    return BoxPair(
        a=_vm_function(program_a, budget, "A"),
        b=_vm_function(program_b, budget, "B"),
        backing=Backing.vm,
        profile=SignalingProfile(
            a_reads_y=program_a.reads(Opcode.LOADY),
            b_reads_x=program_b.reads(Opcode.LOADX),
        ),
        name=name,
        programs=(program_a, program_b),
        budget=budget,
    )


def pr_box_programs() -> Tuple[Program, Program]:
    """
    Programs for the PR pair with alpha = 0: A outputs 0, B outputs x and y
    """
    return ZERO_PROGRAM, AND_PROGRAM


def query(pair: BoxPair, n: int, x: int, y: int) -> Tuple[int, int]:
    validate_bit(x, "x")
    validate_bit(y, "y")
    return pair.a(x, y, n), pair.b(x, y, n)


@dataclass(frozen=True)
class DependenceReport:
    horizon: int
    # rounds where B(0, y, n) != B(1, y, n) for some y, with the least such y
    rounds: FrozenSet[int]
    witness_y: Dict[int, int]
    # rounds where A(x, 0, n) != A(x, 1, n) for some x, with the least such x
    a_rounds: FrozenSet[int]
    witness_x: Dict[int, int]

    def verify(self, pair: BoxPair) -> bool:
        for n in self.rounds:
            y = self.witness_y[n]
            if pair.b(0, y, n) == pair.b(1, y, n):
                return False
        for n in self.a_rounds:
            x = self.witness_x[n]
            if pair.a(x, 0, n) == pair.a(x, 1, n):
                return False
        return self.rounds == frozenset(self.witness_y) and self.a_rounds == frozenset(
            self.witness_x
        )


def dependence_rounds(pair: BoxPair, horizon: int) -> DependenceReport:
    """
    Checks every n < horizon for rounds where a box depends on the distant
    input
    """
    if horizon < 1:
        raise ConfigurationError(f"horizon must be at least 1, got {horizon}")
    witness_y: Dict[int, int] = {}
    witness_x: Dict[int, int] = {}
    for n in range(horizon):
        for y in (0, 1):
            if pair.b(0, y, n) != pair.b(1, y, n):
                witness_y[n] = y
                break
        for x in (0, 1):
            if pair.a(x, 0, n) != pair.a(x, 1, n):
                witness_x[n] = x
                break
    LOGGER.debug(
        "Box %s: B depends on x in %s rounds, A on y in %s rounds below %s",
        pair.name,
        len(witness_y),
        len(witness_x),
        horizon,
    )
    return DependenceReport(
        horizon=horizon,
        rounds=frozenset(witness_y),
        witness_y=witness_y,
        a_rounds=frozenset(witness_x),
        witness_x=witness_x,
    )


def _lookup(table: Dict[str, Any], key: Any, what: str) -> Any:
    try:
        return table[key]
    except KeyError:
        raise ConfigurationError(
            f"Unknown {what} '{key}', expected one of {sorted(table)}"
        ) from None


def box_from_manifest(manifest: Dict[str, Any], base_path: Optional[Path] = None) -> BoxPair:
    """
    Builds a pair from a manifest such as

        {"model": "pr", "alpha": "zero"}
        {"model": "local", "a": "copy", "b": "zero"}
        {"model": "vm", "a_program": "a.prog", "b_program": "b.prog",
         "budget": {"time_function": "n2"}}

    Program paths are relative to base_path. A vm manifest without programs
    uses the PR pair programs.
    """
    model = manifest.get("model")
    if model == "pr":
        alpha_name = manifest.get("alpha", "zero")
        return deterministic_pr(_lookup(ALPHAS, alpha_name, "alpha"), name=f"pr({alpha_name})")
    if model == "local":
        a_name = manifest.get("a", "zero")
        b_name = manifest.get("b", "zero")
        return local_deterministic(
            _lookup(LOCAL_FUNCTIONS, a_name, "local function"),
            _lookup(LOCAL_FUNCTIONS, b_name, "local function"),
            name=f"local({a_name}, {b_name})",
        )
    if model == "vm":
        base_path = base_path or Path(".")
        budget = ExecBudget.from_dict(manifest.get("budget", {}))
        program_a, program_b = pr_box_programs()
        if "a_program" in manifest:
            program_a = read_program(base_path / manifest["a_program"])
        if "b_program" in manifest:
            program_b = read_program(base_path / manifest["b_program"])
        return vm_backed(
            program_a,
            program_b,
            budget,
            name=f"vm({program_a.index}, {program_b.index})",
        )
    raise ConfigurationError(f"Unknown box model {model!r}, expected pr, local or vm")
