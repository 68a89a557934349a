"""
The betting game on sequences over a finite alphabet.

A bettor starts with some capital and, before each symbol of a sequence is
revealed, bets a fraction d_i of its capital on every symbol b_i. Bets on the
wrong symbols are lost and the bet on the revealed symbol is paid k times,
so the capital after the round is

    capital * (1 + k * d_outcome - sum(d))

All capital arithmetic is exact (fractions.Fraction).
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import (
    Any,
    Callable,
    Dict,
    Hashable,
    Iterable,
    Iterator,
    List,
    Optional,
    Sequence,
    Tuple,
)

import typing_extensions

from .datamodels import ExecBudget, InvalidBet, StrategyError, ValidationError
from .program_vm import Program, run

LOGGER = logging.getLogger()

Capital: typing_extensions.TypeAlias = Fraction


@dataclass(frozen=True)
class Alphabet:
    symbols: Tuple[Hashable, ...]
    _positions: Dict[Hashable, int] = field(
        init=False, repr=False, compare=False, hash=False
    )

    def __post_init__(self):
        symbols = tuple(self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 2:
            raise ValidationError(
                f"An alphabet needs at least two symbols, got {len(symbols)}"
            )
        positions = {symbol: i for i, symbol in enumerate(symbols)}
        if len(positions) != len(symbols):
            raise ValidationError(f"Alphabet symbols must be distinct: {symbols}")
        object.__setattr__(self, "_positions", positions)

    @property
    def k(self) -> int:
        return len(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, symbol):
        return symbol in self._positions

    def index(self, symbol: Hashable) -> int:
        try:
            return self._positions[symbol]
        except KeyError:
            raise ValidationError(f"{symbol!r} is not in the alphabet") from None


@dataclass(frozen=True)
class BetVector:
    """
    Fractions of the current capital bet on each symbol, in alphabet order
    """

    fractions: Tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "fractions", tuple(Fraction(d) for d in self.fractions)
        )

    @classmethod
    def even(cls, k: int) -> "BetVector":
        return _even_bet(k)

    @classmethod
    def split(cls, k: int, positions: Iterable[int]) -> "BetVector":
        """
        Bets everything, evenly, on the given symbol positions
        >>> BetVector.split(4, [1, 3]).fractions == (0, Fraction(1, 2), 0, Fraction(1, 2))
        True
        """
        positions = set(positions)
        if not positions:
            raise InvalidBet("Cannot split a bet over no symbols")
        share = Fraction(1, len(positions))
        return cls(tuple(share if i in positions else Fraction(0) for i in range(k)))

    @classmethod
    def on(cls, k: int, position: int, fraction: Fraction = Fraction(1)) -> "BetVector":
        return cls(
            tuple(Fraction(fraction) if i == position else Fraction(0) for i in range(k))
        )

    @property
    def total(self) -> Fraction:
        return sum(self.fractions, Fraction(0))

    def fraction(self, position: int) -> Fraction:
        return self.fractions[position]

    def validate(self, k: int) -> "BetVector":
        if len(self.fractions) != k:
            raise InvalidBet(
                f"Bet has {len(self.fractions)} entries for an alphabet of size {k}"
            )
        if any(d < 0 for d in self.fractions):
            raise InvalidBet(f"Negative bet in {self}")
        if self.total > 1:
            raise InvalidBet(f"Bets add up to {self.total} > 1")
        return self

    def is_even(self) -> bool:
        k = len(self.fractions)
        return all(d == self.fractions[0] for d in self.fractions) and k > 0

    def __str__(self):
        return "(" + ", ".join(str(d) for d in self.fractions) + ")"


@lru_cache(maxsize=None)
def _even_bet(k: int) -> BetVector:
    return BetVector((Fraction(1, k),) * k)


def settle(capital: Capital, bet: BetVector, outcome: int, k: int) -> Capital:
    """
    Capital after a round where the symbol at position `outcome` came out
    >>> settle(Fraction(1), BetVector((Fraction(1, 2), 0)), 0, 2)
    Fraction(3, 2)
    """
    bet.validate(k)
    if not 0 <= outcome < k:
        raise ValidationError(f"Outcome position {outcome} outside an alphabet of size {k}")
    return capital * (1 + k * bet.fraction(outcome) - bet.total)


def settlement_factors(bet: BetVector, k: int) -> Tuple[Fraction, ...]:
    """
    The capital multiplier for every possible outcome, in alphabet order
    """
    bet.validate(k)
    lost = 1 - bet.total
    return tuple(lost + k * d for d in bet.fractions)


class Strategy(typing_extensions.Protocol):
    def __call__(self, prefix: Sequence[Any], alphabet: Alphabet) -> BetVector: ...


def even_strategy(prefix: Sequence[Any], alphabet: Alphabet) -> BetVector:
    return BetVector.even(alphabet.k)


@dataclass
class Bettor:
    strategy: Strategy
    initial_capital: Capital = Fraction(1)
    name: str = ""

    def __post_init__(self):
        self.initial_capital = Fraction(self.initial_capital)
        if self.initial_capital <= 0:
            raise ValidationError(
                f"Initial capital must be positive, got {self.initial_capital}"
            )

    def bet(self, prefix: Sequence[Any], alphabet: Alphabet) -> BetVector:
        """
        The bet on the next symbol. A strategy that fails, or that returns an
        invalid bet, bets evenly instead.
        """
        try:
            bet = self.strategy(prefix, alphabet)
            if bet is _even_bet(alphabet.k):
                return bet
            return bet.validate(alphabet.k)
        except (StrategyError, InvalidBet) as e:
            LOGGER.warning(
                "Bettor %s bets evenly at position %s: %s", self.name, len(prefix), e
            )
            return BetVector.even(alphabet.k)


class ProgramPredicate:
    """
    The predicate g(n) computed by a program: its output bit on (x, y, n).
    Remembers the last value, since the bettors sharing a predicate all ask
    for the same position in turn.
    """

    def __init__(
        self,
        program: Program,
        budget: ExecBudget,
        x: int = 0,
        y: int = 0,
        exhausted_bit: Optional[int] = 0,
    ):
        self.program = program
        self.budget = budget
        self.x = x
        self.y = y
        # None: running out of fuel is a StrategyError
        self.exhausted_bit = exhausted_bit
        self._last: Optional[Tuple[int, int]] = None

    def __call__(self, n: int) -> int:
        if self._last is not None and self._last[0] == n:
            return self._last[1]
        result = run(self.program, self.x, self.y, n, self.budget)
        if result.halted:
            value = result.bit
        elif self.exhausted_bit is None:
            raise StrategyError(
                f"Program {self.program.index} ran out of fuel on n={n}"
            )
        else:
            value = self.exhausted_bit
        self._last = (n, value)
        return value

    def __repr__(self):
        return f"ProgramPredicate(index={self.program.index})"


class Fact1Strategy:
    """
    Waits for the positions flagged by g and then bets everything, evenly, on
    the symbols outside the forbidden set.
    """

    def __init__(
        self, g: Callable[[int], int], allowed: Sequence[int], m_threshold: int = 0
    ):
        self.g = g
        self.allowed = tuple(allowed)
        self.m_threshold = m_threshold

    def __call__(self, prefix: Sequence[Any], alphabet: Alphabet) -> BetVector:
        n = len(prefix)
        if n < self.m_threshold or self.g(n) == 0:
            return BetVector.even(alphabet.k)
        return BetVector.split(alphabet.k, self.allowed)


def fact1_bettor(
    g: Callable[[int], int],
    gamma: Iterable[Hashable],
    alphabet: Alphabet,
    m_threshold: int = 0,
    initial_capital: Capital = Fraction(1),
    name: str = "",
) -> Bettor:
    """
    The bettor that wins on sequences avoiding gamma wherever g says 1.

    Positions are 0-based: the symbol at position n is bet on after a prefix
    of n symbols, with g(n). The first m_threshold positions (n < m_threshold)
    are always bet evenly, so m_threshold=0 bets from the first symbol on.
    """
    forbidden = {alphabet.index(symbol) for symbol in gamma}
    if not forbidden or len(forbidden) == alphabet.k:
        raise ValidationError(
            "Forbidden symbols must be a nonempty proper subset of the alphabet"
        )
    if m_threshold < 0:
        raise ValidationError(f"m_threshold must be non-negative, got {m_threshold}")
    allowed = [i for i in range(alphabet.k) if i not in forbidden]
    return Bettor(
        strategy=Fact1Strategy(g, allowed, m_threshold),
        initial_capital=initial_capital,
        name=name or f"fact1({g!r}, {sorted(forbidden)})",
    )


class FrequencyStrategy:
    """
    Always bets the same fraction of its capital on one symbol
    """

    def __init__(self, position: int, fraction: Fraction):
        self.position = position
        self.fraction = Fraction(fraction)

    def __call__(self, prefix: Sequence[Any], alphabet: Alphabet) -> BetVector:
        return BetVector.on(alphabet.k, self.position, self.fraction)


def frequency_bettors(
    alphabet: Alphabet, fraction: Fraction = Fraction(1, 2)
) -> List[Bettor]:
    """
    One bettor per symbol, each betting `fraction` on its symbol. A bettor that
    never goes all-in never dies, so sequences that keep these bettors poor
    keep showing every symbol.
    """
    fraction = Fraction(fraction)
    if not 0 < fraction <= 1:
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    return [
        Bettor(FrequencyStrategy(i, fraction), name=f"frequency({symbol})")
        for i, symbol in enumerate(alphabet)
    ]


@dataclass
class WeightedBettorFamily:
    entries: List[Tuple[Bettor, Fraction]] = field(default_factory=list)

    def __post_init__(self):
        entries = list(self.entries)
        self.entries = []
        for bettor, weight in entries:
            self.add(bettor, weight)

    def add(self, bettor: Bettor, weight: Fraction) -> None:
        weight = Fraction(weight)
        if weight <= 0:
            raise ValidationError(f"Weights must be positive, got {weight}")
        self.entries.append((bettor, weight))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def weighted_initial_capital(self) -> Fraction:
        return sum((w * b.initial_capital for b, w in self.entries), Fraction(0))

    def capital_bound(self, i: int) -> Fraction:
        """
        No capital of bettor i along a diagonal sequence exceeds this value
        """
        return self.weighted_initial_capital / self.entries[i][1]


def iter_diagonal_with_capitals(
    family: WeightedBettorFamily, alphabet: Alphabet
) -> Iterator[Tuple[Hashable, Tuple[Capital, ...]]]:
    """
    Yields, position by position, the symbol that leaves the family with the
    least weighted capital (ties go to the smallest symbol) and every
    bettor's capital once that symbol is settled.
    """
    k = alphabet.k
    bettors = [bettor for bettor, _ in family]
    weights = [weight for _, weight in family]
    capitals = [bettor.initial_capital for bettor in bettors]
    prefix: List[Hashable] = []
    while True:
        change = [Fraction(0)] * k
        moves: List[Tuple[int, Tuple[Fraction, ...]]] = []
        for i, bettor in enumerate(bettors):
            if capitals[i] == 0:
                continue
            bet = bettor.bet(prefix, alphabet)
            if bet.is_even():
                continue
            factors = settlement_factors(bet, k)
            stake = weights[i] * capitals[i]
            for s in range(k):
                change[s] += stake * (factors[s] - 1)
            moves.append((i, factors))
        outcome = min(range(k), key=lambda s: (change[s], s))
        for i, factors in moves:
            capitals[i] *= factors[outcome]
        symbol = alphabet.symbols[outcome]
        prefix.append(symbol)
        yield symbol, tuple(capitals)


def iter_diagonal(family: WeightedBettorFamily, alphabet: Alphabet) -> Iterator[Hashable]:
    for symbol, _ in iter_diagonal_with_capitals(family, alphabet):
        yield symbol


def diagonal_sequence(
    family: WeightedBettorFamily, alphabet: Alphabet, length: int
) -> List[Hashable]:
    """
    >>> diagonal_sequence(WeightedBettorFamily(), Alphabet((0, 1)), 3)
    [0, 0, 0]
    """
    if length < 0:
        raise ValidationError(f"length must be non-negative, got {length}")
    sequence = []
    if length == 0:
        return sequence
    for symbol in iter_diagonal(family, alphabet):
        sequence.append(symbol)
        if len(sequence) == length:
            break
    return sequence


def run_bettor(
    bettor: Bettor, sequence: Sequence[Hashable], alphabet: Alphabet
) -> List[Capital]:
    """
    The capital of the bettor before the first symbol and after each one
    """
    trajectory = [bettor.initial_capital]
    prefix: List[Hashable] = []
    for symbol in sequence:
        capital = trajectory[-1]
        if capital != 0:
            bet = bettor.bet(prefix, alphabet)
            capital = settle(capital, bet, alphabet.index(symbol), alphabet.k)
        trajectory.append(capital)
        prefix.append(symbol)
    return trajectory


def trajectory_rows(trajectory: Sequence[Capital]) -> List[Tuple[int, int, int]]:
    """
    >>> trajectory_rows([Fraction(1), Fraction(3, 2)])
    [(0, 1, 1), (1, 3, 2)]
    """
    return [
        (position, capital.numerator, capital.denominator)
        for position, capital in enumerate(trajectory)
    ]
