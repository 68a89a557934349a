"""
The enumerable class of clocked programs.

A program is a list of instructions for a machine with four natural-number
registers, all starting at 0. The text format holds one instruction per line:

    HALT0              halt with output 0
    HALT1              halt with output 1
    INC r              r := r + 1
    DECJZ r offset     if r == 0 jump by offset, else r := r - 1
    LOADX r            r := x   (also LOADY r, LOADN r)

`r` is 0..3 and `offset` a signed integer with |offset| <= program length.
Blank lines and everything after a `#` are ignored. Running past the last
instruction, or jumping outside the program, halts with output 0, so every
well formed list of instructions is a valid program.

Programs are enumerated by length and then lexicographically, with the
instructions ordered as HALT0, HALT1, INC r0..r3, DECJZ (offsets in zig-zag
order 0, -1, 1, -2, 2, ..., registers 0..3 for each offset), LOADX r0..r3,
LOADY r0..r3, LOADN r0..r3. The position of a program in this order is its
index.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence, Tuple, List, Dict, FrozenSet, Set

from .datamodels import ExecBudget, ParseException, ValidationError

LOGGER = logging.getLogger()

NUM_REGISTERS = 4


class Opcode(str, Enum):
    HALT0 = "HALT0"
    HALT1 = "HALT1"
    INC = "INC"
    DECJZ = "DECJZ"
    LOADX = "LOADX"
    LOADY = "LOADY"
    LOADN = "LOADN"


_HALTS = (Opcode.HALT0, Opcode.HALT1)
_LOADS = (Opcode.LOADX, Opcode.LOADY, Opcode.LOADN)


@dataclass(frozen=True)
class Instruction:
    opcode: Opcode
    reg: Optional[int] = None
    offset: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "opcode", Opcode(self.opcode))
        if self.opcode in _HALTS:
            if self.reg is not None or self.offset is not None:
                raise ValidationError(f"{self.opcode.value} takes no operands")
            return
        if self.reg not in range(NUM_REGISTERS):
            raise ValidationError(
                f"{self.opcode.value} needs a register in 0..3, got {self.reg}"
            )
        if self.opcode is Opcode.DECJZ:
            if self.offset is None:
                raise ValidationError("DECJZ needs an offset")
        elif self.offset is not None:
            raise ValidationError(f"{self.opcode.value} takes no offset")

    def __str__(self):
        """
        >>> str(Instruction(Opcode.DECJZ, 2, -1)), str(Instruction(Opcode.HALT1))
        ('DECJZ 2 -1', 'HALT1')
        """
        if self.opcode in _HALTS:
            return self.opcode.value
        if self.opcode is Opcode.DECJZ:
            return f"DECJZ {self.reg} {self.offset}"
        return f"{self.opcode.value} {self.reg}"

    @classmethod
    def parse(cls, text: str) -> "Instruction":
        """
        >>> Instruction.parse("DECJZ 2 -1")
        Instruction(opcode=<Opcode.DECJZ: 'DECJZ'>, reg=2, offset=-1)
        """
        pieces = text.split()
        if not pieces:
            raise ParseException("Empty instruction")
        try:
            opcode = Opcode(pieces[0].upper())
        except ValueError:
            raise ParseException(f"Unknown instruction '{text}'")
        try:
            operands = [int(p) for p in pieces[1:]]
        except ValueError:
            raise ParseException(f"Operands of '{text}' must be integers")
        expected = 0 if opcode in _HALTS else (2 if opcode is Opcode.DECJZ else 1)
        if len(operands) != expected:
            raise ParseException(
                f"{opcode.value} expects {expected} operands, got {len(operands)} in '{text}'"
            )
        try:
            return cls(opcode, *operands)
        except ValidationError as e:
            raise ParseException(f"Invalid instruction '{text}': {e}") from e


def zigzag(offset: int) -> int:
    """
    >>> [zigzag(o) for o in (0, -1, 1, -2, 2)]
    [0, 1, 2, 3, 4]
    """
    return 2 * offset if offset > 0 else -2 * offset - 1 if offset < 0 else 0


def unzigzag(code: int) -> int:
    return code // 2 if code % 2 == 0 else -(code + 1) // 2


def alphabet_size(length: int) -> int:
    # 2 halts, 4 INC, 4 registers per DECJZ offset in -length..length, 12 loads
    return 22 + 8 * length


@lru_cache(maxsize=None)
def instruction_alphabet(length: int) -> Tuple[Instruction, ...]:
    """
    The ordered instructions a program of the given length may hold
    """
    alphabet: List[Instruction] = [Instruction(Opcode.HALT0), Instruction(Opcode.HALT1)]
    alphabet.extend(Instruction(Opcode.INC, r) for r in range(NUM_REGISTERS))
    for code in range(2 * length + 1):
        alphabet.extend(
            Instruction(Opcode.DECJZ, r, unzigzag(code)) for r in range(NUM_REGISTERS)
        )
    for opcode in _LOADS:
        alphabet.extend(Instruction(opcode, r) for r in range(NUM_REGISTERS))
    assert len(alphabet) == alphabet_size(length)
    return tuple(alphabet)


def instruction_digit(instruction: Instruction, length: int) -> int:
    """
    Position of the instruction in instruction_alphabet(length)
    """
    op = instruction.opcode
    if op is Opcode.HALT0:
        return 0
    if op is Opcode.HALT1:
        return 1
    if op is Opcode.INC:
        return 2 + instruction.reg
    decjz_count = NUM_REGISTERS * (2 * length + 1)
    if op is Opcode.DECJZ:
        if abs(instruction.offset) > length:
            raise ValidationError(
                f"Offset of '{instruction}' exceeds the program length {length}"
            )
        return 6 + NUM_REGISTERS * zigzag(instruction.offset) + instruction.reg
    return 6 + decjz_count + NUM_REGISTERS * _LOADS.index(op) + instruction.reg


@lru_cache(maxsize=None)
def block_start(length: int) -> int:
    """
    Index of the first program with the given length
    >>> [block_start(length) for length in range(5)]
    [0, 1, 31, 1475, 98811]
    """
    if length == 0:
        return 0
    previous = length - 1
    return block_start(previous) + alphabet_size(previous) ** previous


def program_length(index: int) -> int:
    if index < 0:
        raise ValidationError(f"Program indices are natural numbers, got {index}")
    length = 0
    while block_start(length + 1) <= index:
        length += 1
    return length


def index_digits(index: int) -> Tuple[int, List[int]]:
    """
    Returns the program length and the instruction digits of an index
    """
    length = program_length(index)
    rest = index - block_start(length)
    size = alphabet_size(length)
    digits = []
    for _ in range(length):
        rest, digit = divmod(rest, size)
        digits.append(digit)
    digits.reverse()
    return length, digits


def encode_program(code: Sequence[Instruction]) -> int:
    length = len(code)
    size = alphabet_size(length)
    index = 0
    for instruction in code:
        index = index * size + instruction_digit(instruction, length)
    return block_start(length) + index


@dataclass(frozen=True)
class Program:
    code: Tuple[Instruction, ...]
    index: int

    @classmethod
    def from_code(cls, code: Sequence[Instruction]) -> "Program":
        code = tuple(code)
        # encode_program validates the offsets
        return cls(code=code, index=encode_program(code))

    @classmethod
    def from_text(cls, text: str) -> "Program":
        code = []
        for line_number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                code.append(Instruction.parse(line))
            except ParseException as e:
                raise ParseException(f"Line {line_number}: {e}") from e
        try:
            return cls.from_code(code)
        except ValidationError as e:
            raise ParseException(str(e)) from e

    def __len__(self):
        return len(self.code)

    def __str__(self):
        return "\n".join(str(instruction) for instruction in self.code)

    def reads(self, opcode: Opcode) -> bool:
        return any(instruction.opcode is opcode for instruction in self.code)


def enumerate_program(index: int) -> Program:
    """
    The index-th program of the canonical enumeration
    >>> enumerate_program(0).code, str(enumerate_program(1))
    ((), 'HALT0')
    """
    length, digits = index_digits(index)
    alphabet = instruction_alphabet(length)
    return Program(code=tuple(alphabet[d] for d in digits), index=index)


class Outcome(str, Enum):
    halted = "halted"
    fuel_exhausted = "fuel_exhausted"


@dataclass(frozen=True)
class ExecResult:
    outcome: Outcome
    bit: Optional[int] = None
    steps: int = 0

    @property
    def halted(self) -> bool:
        return self.outcome is Outcome.halted

    @classmethod
    def halt(cls, bit: int, steps: int) -> "ExecResult":
        return cls(Outcome.halted, bit, steps)

    @classmethod
    def exhausted(cls, steps: int) -> "ExecResult":
        return cls(Outcome.fuel_exhausted, None, steps)

    def __str__(self):
        if self.halted:
            return f"Halted({self.bit})"
        return "FuelExhausted"


# entries of the event log kept to recognise loops
_LOAD = 0
_TEST = 1


def _loop_repeats(
    before: Tuple[int, ...], after: Tuple[int, ...], segment: List[Tuple[int, int, int]]
) -> bool:
    """
    True when executing the same instructions from `after` is guaranteed to
    follow the same branches that led from `before` to `after`, so the
    machine cycles forever.
    """
    delta = [b - a for a, b in zip(before, after)]
    loaded: Set[int] = set()
    for kind, reg, value in segment:
        if kind == _LOAD:
            loaded.add(reg)
            continue
        if reg in loaded:
            continue
        if delta[reg] < 0:
            return False
        if value == 0 and delta[reg] != 0:
            return False
    return True


def _execute(
    code: Sequence[Optional[Instruction]], x: int, y: int, n: int, fuel: int
) -> Tuple[Optional[ExecResult], FrozenSet[int]]:
    """
    Runs code, where None marks a position whose instruction is not decided
    yet. Returns the result (None if an undecided position was reached) and
    the positions executed on the way.
    """
    length = len(code)
    regs = [0] * NUM_REGISTERS
    pc = 0
    steps = 0
    visited: Set[int] = set()
    heads: Dict[int, Tuple[Tuple[int, ...], int]] = {}
    events: List[Tuple[int, int, int]] = []
    while True:
        if pc < 0 or pc >= length:
            return ExecResult.halt(0, steps), frozenset(visited)
        instruction = code[pc]
        if instruction is None:
            return None, frozenset(visited)
        if steps >= fuel:
            return ExecResult.exhausted(steps), frozenset(visited)
        visited.add(pc)
        steps += 1
        op = instruction.opcode
        if op is Opcode.DECJZ:
            reg = instruction.reg
            value = regs[reg]
            events.append((_TEST, reg, value))
            if value:
                regs[reg] = value - 1
                pc += 1
                continue
            offset = instruction.offset
            pc += offset
            if offset <= 0 and 0 <= pc < length:
                snapshot = tuple(regs)
                previous = heads.get(pc)
                if previous is not None and _loop_repeats(
                    previous[0], snapshot, events[previous[1]:]
                ):
                    return ExecResult.exhausted(steps), frozenset(visited)
                heads[pc] = (snapshot, len(events))
            continue
        if op is Opcode.INC:
            regs[instruction.reg] += 1
        elif op is Opcode.LOADX:
            regs[instruction.reg] = x
            events.append((_LOAD, instruction.reg, 0))
        elif op is Opcode.LOADY:
            regs[instruction.reg] = y
            events.append((_LOAD, instruction.reg, 0))
        elif op is Opcode.LOADN:
            regs[instruction.reg] = n
            events.append((_LOAD, instruction.reg, 0))
        elif op is Opcode.HALT0:
            return ExecResult.halt(0, steps), frozenset(visited)
        else:
            return ExecResult.halt(1, steps), frozenset(visited)
        pc += 1


def run(program: Program, x: int, y: int, n: int, budget: ExecBudget) -> ExecResult:
    """
    Executes program on inputs (x, y, n) within budget.fuel(n) steps. Runs
    that provably cycle are reported as FuelExhausted as soon as the cycle is
    seen; no amount of fuel would make them halt.
    """
    result, _ = _execute(program.code, x, y, n, budget.fuel(n))
    assert result is not None
    return result


def run_partial(
    code: Sequence[Optional[Instruction]], x: int, y: int, n: int, fuel: int
) -> Tuple[Optional[ExecResult], FrozenSet[int]]:
    """
    Like run, over code where None marks undecided positions. The result
    depends only on the instructions at the returned positions.
    """
    return _execute(code, x, y, n, fuel)


ZERO_PROGRAM = Program.from_code(())

# x AND y
AND_PROGRAM = Program.from_text(
    """
    LOADX 0
    DECJZ 0 -2   # x == 0: jump out, output 0
    LOADY 1
    DECJZ 1 -4   # y == 0: jump out, output 0
    HALT1
    """
)

# x XOR y
XOR_PROGRAM = Program.from_text(
    """
    LOADY 1
    LOADX 0
    DECJZ 0 2    # x == 0: output y
    DECJZ 1 2    # x == 1, y == 0: output 1
    DECJZ 1 2    # register 1 holds y, or 0 when x == y == 1
    HALT1
    """
)
