"""
Learning by enumeration over the clocked programs of program_vm.

The learner's guess is the least program index whose program reproduces
every sample seen so far within the fuel budget. A guess is only replaced
when a new sample refutes it, and the replacement is searched from the
refuted index upwards: every lower index was already refuted by an older
sample and stays refuted.

Within a block of programs of the same length the least index is the
lexicographically least list of instruction digits, so the search is a depth
first walk over the positions of the program. A partially written program
can already be refuted: if a sample run only goes through decided positions,
its outcome is known, and only a change at one of those positions can fix it
(conflict-directed backjumping).
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, List, Optional, Sequence, Set, Tuple

from .datamodels import (
    DEFAULT_SCAN_CAP,
    ExecBudget,
    LearnerError,
    validate_bit,
)
from .program_vm import (
    Instruction,
    Opcode,
    alphabet_size,
    block_start,
    enumerate_program,
    index_digits,
    instruction_alphabet,
    run,
    run_partial,
)

LOGGER = logging.getLogger()

# samples tried at every partial program; complete programs are checked against all
PARTIAL_CHECKS = 16

_LOADS = (Opcode.LOADX, Opcode.LOADY, Opcode.LOADN)


@dataclass(frozen=True)
class Sample:
    x: int
    y: int
    n: int
    b: int

    def __post_init__(self):
        validate_bit(self.x, "x")
        validate_bit(self.y, "y")
        validate_bit(self.b, "b")
        if self.n < 0:
            raise LearnerError(f"Round numbers are natural numbers, got {self.n}")


class _BlockSearch:
    """
    Finds the lexicographically least digits, not below `lower`, of a program
    of the given length consistent with every sample
    """

    def __init__(
        self,
        length: int,
        samples: Sequence[Sample],
        budget: ExecBudget,
        lower: Optional[Sequence[int]] = None,
    ):
        self.length = length
        self.alphabet = instruction_alphabet(length)
        self.size = alphabet_size(length)
        self.order: List[Tuple[Sample, int]] = [(s, budget.fuel(s.n)) for s in samples]
        self.lower = list(lower) if lower is not None else None
        outputs = {s.b for s in samples}
        self.needs_halt1 = 1 in outputs
        # a program without tests, or without inputs, has a constant output
        self.needs_branch = len(outputs) == 2
        self.nodes = 0

    def _missing_features(self, code: Sequence[Optional[Instruction]]) -> int:
        present = [instruction.opcode for instruction in code if instruction is not None]
        missing = 0
        if self.needs_halt1 and Opcode.HALT1 not in present:
            missing += 1
        if self.needs_branch:
            if Opcode.DECJZ not in present:
                missing += 1
            if not any(op in _LOADS for op in present):
                missing += 1
        return missing

    def _check(self, code: List[Optional[Instruction]], position: int) -> Optional[Set[int]]:
        """
        None if the partial program may still be consistent, otherwise the
        decided positions responsible for the failure
        """
        self.nodes += 1
        if self._missing_features(code) > self.length - 1 - position:
            return set(range(position + 1))
        complete = position == self.length - 1
        limit = len(self.order) if complete else min(PARTIAL_CHECKS, len(self.order))
        for i in range(limit):
            sample, fuel = self.order[i]
            result, visited = run_partial(code, sample.x, sample.y, sample.n, fuel)
            if result is None:
                continue
            if result.halted and result.bit == sample.b:
                continue
            # failing samples tend to fail again
            self.order.insert(0, self.order.pop(i))
            return set(visited)
        return None

    def run(self) -> Optional[List[int]]:
        length = self.length
        if length == 0:
            return [] if self._check_empty() else None
        code: List[Optional[Instruction]] = [None] * length
        digits = [-1] * length
        conflicts: List[Set[int]] = [set() for _ in range(length)]
        # tight[p]: digits before p equal the lower bound, so values below
        # lower[p] are skipped rather than refuted
        tight = [False] * length
        tight[0] = self.lower is not None
        p = 0
        while p < length:
            if digits[p] < 0:
                d = self.lower[p] if tight[p] else 0
            else:
                d = digits[p] + 1
            if d >= self.size:
                conflict = conflicts[p]
                if not conflict:
                    return None
                h = max(conflict)
                conflicts[h] |= conflict - {h}
                for q in range(h + 1, p + 1):
                    code[q] = None
                    digits[q] = -1
                    conflicts[q] = set()
                p = h
                continue
            digits[p] = d
            code[p] = self.alphabet[d]
            failure = self._check(code, p)
            if failure is None:
                p += 1
                if p < length:
                    tight[p] = tight[p - 1] and d == self.lower[p - 1]
                    if tight[p] and self.lower[p] > 0:
                        conflicts[p] = set(range(p))
                    else:
                        conflicts[p] = set()
                    digits[p] = -1
                continue
            h = max(failure)
            if h == p:
                conflicts[p] |= failure - {p}
            else:
                # no value at p can help: exhaust it and jump back
                conflicts[p] |= failure
                digits[p] = self.size - 1
        return digits

    def _check_empty(self) -> bool:
        return all(s.b == 0 for s, _ in self.order)


def _digits_to_index(length: int, digits: Sequence[int]) -> int:
    size = alphabet_size(length)
    index = 0
    for d in digits:
        index = index * size + d
    return block_start(length) + index


def least_consistent_index(
    samples: Sequence[Sample],
    budget: ExecBudget,
    start: int = 0,
    scan_cap: int = DEFAULT_SCAN_CAP,
) -> Optional[int]:
    """
    The least index >= start whose program reproduces every sample within
    fuel, or None if it is above scan_cap
    """
    first_length, lower = index_digits(start)
    length = first_length
    while block_start(length) <= scan_cap:
        search = _BlockSearch(
            length, samples, budget, lower if length == first_length else None
        )
        digits = search.run()
        LOGGER.debug(
            "Searched programs of length %s: %s nodes, found %s",
            length,
            search.nodes,
            digits,
        )
        if digits is not None:
            index = _digits_to_index(length, digits)
            return index if index <= scan_cap else None
        length += 1
    return None


@dataclass(frozen=True)
class LearnerState:
    samples: Tuple[Sample, ...] = ()
    guess_index: int = 0
    mind_changes: int = 0
    scan_cap: int = DEFAULT_SCAN_CAP
    class_exhausted: bool = False

    def consistent(self, index: int, budget: ExecBudget) -> bool:
        program = enumerate_program(index)
        for sample in self.samples:
            result = run(program, sample.x, sample.y, sample.n, budget)
            if not result.halted or result.bit != sample.b:
                return False
        return True


def update(state: LearnerState, sample: Sample, budget: ExecBudget) -> LearnerState:
    """
    The state after seeing one more sample. Rounds must come in increasing
    order.
    """
    if state.samples and sample.n <= state.samples[-1].n:
        raise LearnerError(
            f"Sample for round {sample.n} after round {state.samples[-1].n}"
        )
    samples = state.samples + (sample,)
    if state.class_exhausted:
        return replace(state, samples=samples)
    result = run(enumerate_program(state.guess_index), sample.x, sample.y, sample.n, budget)
    if result.halted and result.bit == sample.b:
        return replace(state, samples=samples)

    # the refuting sample goes first in the search
    ordered = (sample,) + state.samples
    guess = least_consistent_index(ordered, budget, state.guess_index + 1, state.scan_cap)
    if guess is None:
        LOGGER.warning(
            "No program of index <= %s reproduces the %s samples up to round %s",
            state.scan_cap,
            len(samples),
            sample.n,
        )
        return replace(state, samples=samples, class_exhausted=True)
    LOGGER.info(
        "Round %s refuted guess %s, new guess %s", sample.n, state.guess_index, guess
    )
    return replace(
        state,
        samples=samples,
        guess_index=guess,
        mind_changes=state.mind_changes + 1,
    )


def predict(
    state: LearnerState, x: int, y: int, n: int, budget: ExecBudget
) -> Optional[int]:
    """
    The guess's output on (x, y, n), None when it is unknown
    """
    if state.class_exhausted:
        return None
    result = run(enumerate_program(state.guess_index), x, y, n, budget)
    return result.bit if result.halted else None


def first_consistent_index(
    hypotheses: Sequence[Callable[[int], int]], observations: Iterable[Tuple[int, int]]
) -> Optional[int]:
    """
    Learning by enumeration over a finite list of hypotheses: the first one
    that agrees with every (argument, value) observation
    >>> first_consistent_index([lambda n: 0, lambda n: n % 2], [(0, 0), (1, 1)])
    1
    """
    observations = list(observations)
    for i, hypothesis in enumerate(hypotheses):
        if all(hypothesis(argument) == value for argument, value in observations):
            return i
    return None


def learner_trace_rows(
    states: Iterable[LearnerState],
) -> List[Tuple[int, int, int, int, int, int]]:
    """
    One row per state: round, x, y, b of its last sample, guess_index and
    mind_changes
    """
    rows = []
    for state in states:
        if not state.samples:
            continue
        last = state.samples[-1]
        rows.append(
            (last.n, last.x, last.y, last.b, state.guess_index, state.mind_changes)
        )
    return rows


@dataclass
class LearnerTrace:
    budget: ExecBudget
    scan_cap: int = DEFAULT_SCAN_CAP
    states: List[LearnerState] = field(default_factory=list)

    def feed(self, samples: Iterable[Sample]) -> LearnerState:
        state = self.states[-1] if self.states else LearnerState(scan_cap=self.scan_cap)
        for sample in samples:
            state = update(state, sample, self.budget)
            self.states.append(state)
        return state
