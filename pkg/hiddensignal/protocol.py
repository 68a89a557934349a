"""
The signaling protocol. A switching sequence S shared by Alice and Bob
decides every round:

- learning round, S(n) = (x, y): Alice inputs x, Bob inputs y and feeds the
  output of his box to the learner.
- signaling round, S(n) = i: Alice inputs bit i of her message. Bob looks for
  a y on which his current guess of B depends on x, inputs it (0 if there is
  none) and reads the message bit back from his output.
"""
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Tuple

import progressbar

from .analysis import signaling_distance
from .betting import (
    Alphabet,
    ProgramPredicate,
    WeightedBettorFamily,
    fact1_bettor,
    frequency_bettors,
    iter_diagonal,
)
from .boxes import BoxPair, query
from .datamodels import (
    ConfigurationError,
    ExecBudget,
    ProtocolConfig,
    RoundRecord,
    SwitchSource,
    SwitchSymbol,
)
from .file_formats import read_sequence
from .learner import LearnerState, Sample, predict, update
from .program_vm import enumerate_program, run

LOGGER = logging.getLogger()

LEARNING_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))


def switch_alphabet(m: int) -> Alphabet:
    """
    The learning pairs first, then the message indices 1..m
    >>> [str(s) for s in switch_alphabet(2)]
    ['L 0 0', 'L 0 1', 'L 1 0', 'L 1 1', 'S 1', 'S 2']
    """
    return Alphabet(
        tuple(SwitchSymbol.learn(x, y) for x, y in LEARNING_PAIRS)
        + tuple(SwitchSymbol.signal(i) for i in range(1, m + 1))
    )


def build_default_family(cfg: ProtocolConfig, N: int) -> WeightedBettorFamily:
    """
    For every program p < N, with g_p(n) its output on (0, 0, n), the
    bettors that bet against all learning pairs, against all message
    indices and against each single index where g_p says 1. Weights halve
    with every bettor.
    """
    if N < 1:
        raise ConfigurationError(f"The family needs at least one program, got N={N}")
    alphabet = switch_alphabet(cfg.m)
    learning = [s for s in alphabet if s.is_learning]
    signaling = [s for s in alphabet if not s.is_learning]
    gammas = [learning, signaling] + [[s] for s in signaling]
    family = WeightedBettorFamily()
    rank = 0
    for p in range(N):
        g = ProgramPredicate(enumerate_program(p), cfg.budget)
        for gamma in gammas:
            rank += 1
            family.add(
                fact1_bettor(g, gamma, alphabet, name=f"p{p}/{'+'.join(map(str, gamma))}"),
                Fraction(1, 2**rank),
            )
    return family


def diagonal_family(cfg: ProtocolConfig) -> WeightedBettorFamily:
    """
    The default family plus, unless disabled, one frequency bettor per symbol
    """
    family = build_default_family(cfg, cfg.family_size)
    if cfg.frequency_fraction is not None:
        for bettor in frequency_bettors(switch_alphabet(cfg.m), cfg.frequency_fraction):
            family.add(bettor, Fraction(1))
    return family


def switching_sequence(cfg: ProtocolConfig) -> Iterator[SwitchSymbol]:
    if cfg.source is SwitchSource.diagonal:
        return iter_diagonal(diagonal_family(cfg), switch_alphabet(cfg.m))
    symbols = read_sequence(cfg.sequence_file)
    for symbol in symbols:
        if not symbol.is_learning and symbol.index > cfg.m:
            raise ConfigurationError(
                f"{cfg.sequence_file} signals bit {symbol.index} of a {cfg.m} bit message"
            )
    return iter(symbols)


class Alice:
    """
    Knows the message and the switching symbol, never Bob's input or output
    """

    def __init__(self, message: Tuple[int, ...]):
        self.message = message

    def input_for(self, symbol: SwitchSymbol) -> int:
        if symbol.is_learning:
            return symbol.x
        return self.message[symbol.index - 1]


@dataclass
class BitEstimate:
    bit: Optional[int] = None
    last_update_round: Optional[int] = None
    streak: int = 0
    streak_start: Optional[int] = None
    # round at which the current streak reached the window
    settled_round: Optional[int] = None
    usable_rounds: int = 0


@dataclass
class DecodeState:
    """
    Latest decoded value per message bit. A bit is settled once the same value
    was decoded on `window` usable rounds in a row.
    """

    m: int
    window: int = 5
    estimates: List[BitEstimate] = field(default_factory=list)

    def __post_init__(self):
        if not self.estimates:
            self.estimates = [BitEstimate() for _ in range(self.m)]

    def record(self, index: int, bit: int, n: int) -> None:
        estimate = self.estimates[index - 1]
        estimate.usable_rounds += 1
        estimate.last_update_round = n
        if estimate.bit == bit:
            estimate.streak += 1
        else:
            estimate.bit = bit
            estimate.streak = 1
            estimate.streak_start = n
            estimate.settled_round = None
        if estimate.streak == self.window:
            estimate.settled_round = n
            LOGGER.info("Bit %s settled on %s at round %s", index, bit, n)

    def settled(self, index: int) -> bool:
        return self.estimates[index - 1].streak >= self.window

    @property
    def all_settled(self) -> bool:
        return all(e.streak >= self.window for e in self.estimates)

    @property
    def message(self) -> Tuple[Optional[int], ...]:
        return tuple(e.bit for e in self.estimates)

    @property
    def settled_round(self) -> Optional[int]:
        if not self.all_settled:
            return None
        return max(e.settled_round for e in self.estimates)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "window": self.window,
            "estimates": [
                {
                    "index": i,
                    "bit": e.bit,
                    "settled": e.streak >= self.window,
                    "streak": e.streak,
                    "streak_start": e.streak_start,
                    "last_update_round": e.last_update_round,
                    "usable_rounds": e.usable_rounds,
                }
                for i, e in enumerate(self.estimates, start=1)
            ],
        }


class Bob:
    """
    Sees the symbol, his own input and his own output. Learns B on learning
    rounds and decodes on signaling rounds.
    """

    def __init__(self, m: int, budget: ExecBudget, scan_cap: int, window: int):
        self.budget = budget
        self.learner = LearnerState(scan_cap=scan_cap)
        self.decode = DecodeState(m=m, window=window)
        self.mind_change_rounds: List[int] = []
        self._signal_input: Optional[int] = None

    def distinguishing_input(self, n: int) -> Optional[int]:
        """
        The least y with guess(0, y, n) != guess(1, y, n), both known
        """
        for y in (0, 1):
            on_zero = predict(self.learner, 0, y, n, self.budget)
            on_one = predict(self.learner, 1, y, n, self.budget)
            if on_zero is not None and on_one is not None and on_zero != on_one:
                return y
        return None

    def input_for(self, symbol: SwitchSymbol, n: int) -> int:
        if symbol.is_learning:
            return symbol.y
        self._signal_input = self.distinguishing_input(n)
        return 0 if self._signal_input is None else self._signal_input

    def observe(
        self, symbol: SwitchSymbol, n: int, y: int, b: int
    ) -> Optional[Tuple[int, int]]:
        """
        Returns the (bit index, value) decoded on this round, if any
        """
        if symbol.is_learning:
            guess = self.learner.guess_index
            self.learner = update(self.learner, Sample(symbol.x, y, n, b), self.budget)
            if self.learner.guess_index != guess:
                self.mind_change_rounds.append(n)
            return None
        # fallback inputs are never decoded
        if self._signal_input is None:
            return None
        for x in (0, 1):
            if predict(self.learner, x, y, n, self.budget) == b:
                self.decode.record(symbol.index, x, n)
                return symbol.index, x
        return None


@dataclass(frozen=True)
class P1P2Report:
    # round of the last mind change (0 without any), None if the class ran out
    stabilization_round: Optional[int]
    final_guess: int
    mind_changes: int
    class_exhausted: bool
    usable_counts: Tuple[int, ...]

    @property
    def t_assumption_violated(self) -> bool:
        return self.class_exhausted

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stabilization_round": self.stabilization_round,
            "final_guess": self.final_guess,
            "mind_changes": self.mind_changes,
            "class_exhausted": self.class_exhausted,
            "t_assumption_violated": self.t_assumption_violated,
            "usable_counts": list(self.usable_counts),
        }


@dataclass
class ProtocolRun:
    config: ProtocolConfig
    records: List[RoundRecord]
    decode: DecodeState
    report: P1P2Report
    mind_change_rounds: List[int]

    @property
    def rounds(self) -> int:
        return len(self.records)


class _Rounds:
    """
    Plays the protocol one round at a time
    """

    def __init__(self, cfg: ProtocolConfig, pair: BoxPair):
        self.cfg = cfg
        self.pair = pair
        self.alice = Alice(cfg.message)
        self.bob = Bob(cfg.m, cfg.budget, cfg.scan_cap, cfg.window)
        self.sequence = switching_sequence(cfg)
        self.records: List[RoundRecord] = []

    def step(self) -> RoundRecord:
        n = len(self.records)
        symbol = next(self.sequence, None)
        if symbol is None:
            raise ConfigurationError(f"The switching sequence ended at round {n}")
        x = self.alice.input_for(symbol)
        y = self.bob.input_for(symbol, n)
        a, b = query(self.pair, n, x, y)
        decoded = self.bob.observe(symbol, n, y, b)
        record = RoundRecord(
            n=n,
            symbol=symbol,
            x_in=x,
            y_in=y,
            a_out=a,
            b_out=b,
            guess_index=self.bob.learner.guess_index,
            decoded=decoded,
        )
        LOGGER.debug("Round %s", record)
        self.records.append(record)
        return record

    def settled_after_last_mind_change(self) -> bool:
        decode = self.bob.decode
        if not decode.all_settled or self.bob.learner.class_exhausted:
            return False
        last_change = self.bob.mind_change_rounds[-1] if self.bob.mind_change_rounds else -1
        return all(e.streak_start > last_change for e in decode.estimates)

    def finish(self) -> ProtocolRun:
        bob = self.bob
        learner = bob.learner
        if learner.class_exhausted:
            stabilization: Optional[int] = None
        else:
            stabilization = bob.mind_change_rounds[-1] if bob.mind_change_rounds else 0
        report = P1P2Report(
            stabilization_round=stabilization,
            final_guess=learner.guess_index,
            mind_changes=learner.mind_changes,
            class_exhausted=learner.class_exhausted,
            usable_counts=tuple(e.usable_rounds for e in bob.decode.estimates),
        )
        if report.t_assumption_violated:
            LOGGER.warning(
                "No program up to index %s explains Bob's box: the time bound assumption failed",
                self.cfg.scan_cap,
            )
        return ProtocolRun(
            config=self.cfg,
            records=self.records,
            decode=bob.decode,
            report=report,
            mind_change_rounds=list(bob.mind_change_rounds),
        )


def _progress_bar(
    disable_progress_bar: bool, max_value: Any
) -> Optional[progressbar.ProgressBar]:
    if disable_progress_bar:
        return None
    widgets = [
        "Playing rounds. Played ",
        progressbar.Counter(),
        " rounds (",
        progressbar.Timer(),
        ")",
    ]
    return progressbar.ProgressBar(widgets=widgets, max_value=max_value)


def run_protocol(
    cfg: ProtocolConfig, pair: BoxPair, disable_progress_bar: bool = True
) -> ProtocolRun:
    """
    Plays cfg.horizon rounds
    """
    rounds = _Rounds(cfg, pair)
    pbar = _progress_bar(disable_progress_bar, cfg.horizon)
    for n in range(cfg.horizon):
        rounds.step()
        if pbar:
            pbar.update(n + 1)
    if pbar:
        pbar.finish()
    return rounds.finish()


def run_protocol_until_settled(
    cfg: ProtocolConfig,
    pair: BoxPair,
    max_horizon: int,
    disable_progress_bar: bool = True,
) -> ProtocolRun:
    """
    Plays until every bit is settled on a streak that started after Bob's last
    mind change, or until max_horizon rounds. cfg.horizon is ignored.
    """
    rounds = _Rounds(cfg, pair)
    pbar = _progress_bar(disable_progress_bar, progressbar.UnknownLength)
    while len(rounds.records) < max_horizon:
        rounds.step()
        if pbar:
            pbar.update(len(rounds.records))
        if rounds.settled_after_last_mind_change():
            LOGGER.info("Message settled after %s rounds", len(rounds.records))
            break
    if pbar:
        pbar.finish()
    return rounds.finish()


@dataclass(frozen=True)
class P1Verdict:
    holds: bool
    from_round: Optional[int]
    # (n, x, y) where the final guess and B disagree
    mismatches: Tuple[Tuple[int, int, int], ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "from_round": self.from_round,
            "mismatches": [list(m) for m in self.mismatches],
        }


def check_p1(protocol_run: ProtocolRun, pair: BoxPair, budget: ExecBudget) -> P1Verdict:
    """
    Compares Bob's final guess with B on every input pair, from the
    stabilization round to the end of the run
    """
    start = protocol_run.report.stabilization_round
    if start is None:
        return P1Verdict(holds=False, from_round=None, mismatches=())
    program = enumerate_program(protocol_run.report.final_guess)
    mismatches = []
    for n in range(start, protocol_run.rounds):
        for x, y in LEARNING_PAIRS:
            result = run(program, x, y, n, budget)
            if not result.halted or result.bit != pair.b(x, y, n):
                mismatches.append((n, x, y))
    return P1Verdict(holds=not mismatches, from_round=start, mismatches=tuple(mismatches))


@dataclass(frozen=True)
class P2Verdict:
    counts: Tuple[int, ...]
    window: int

    @property
    def passes(self) -> bool:
        return all(count >= self.window for count in self.counts)

    def to_dict(self) -> Dict[str, Any]:
        return {"counts": list(self.counts), "window": self.window, "passes": self.passes}


def check_p2(protocol_run: ProtocolRun, pair: BoxPair) -> P2Verdict:
    """
    Counts, per message bit, the signaling rounds where B really depends on x
    """
    counts = [0] * protocol_run.config.m
    for record in protocol_run.records:
        if record.symbol.is_learning:
            continue
        n = record.n
        if any(pair.b(0, y, n) != pair.b(1, y, n) for y in (0, 1)):
            counts[record.symbol.index - 1] += 1
    return P2Verdict(counts=tuple(counts), window=protocol_run.config.window)


def transcript_lines(protocol_run: ProtocolRun) -> Iterator[str]:
    for record in protocol_run.records:
        yield json.dumps(record.to_dict(), sort_keys=True)


def summary_dict(
    protocol_run: ProtocolRun,
    p1: Optional[P1Verdict] = None,
    p2: Optional[P2Verdict] = None,
    seconds_per_round: Optional[Fraction] = None,
) -> Dict[str, Any]:
    decode = protocol_run.decode
    settled_round = decode.settled_round
    summary: Dict[str, Any] = {
        "rounds": protocol_run.rounds,
        "message": "".join(str(b) for b in protocol_run.config.message),
        "decoded": "".join("?" if b is None else str(b) for b in decode.message),
        "all_settled": decode.all_settled,
        "rounds_to_settle": None if settled_round is None else settled_round + 1,
        "mind_change_rounds": protocol_run.mind_change_rounds,
        "report": protocol_run.report.to_dict(),
        "decode": decode.to_dict(),
    }
    if p1 is not None:
        summary["p1"] = p1.to_dict()
    if p2 is not None:
        summary["p2"] = p2.to_dict()
    if seconds_per_round is not None and settled_round is not None:
        distance = signaling_distance(seconds_per_round, settled_round + 1)
        summary["signaling_distance_m"] = str(distance)
    return summary
