"""
Bell test statistics for box pairs fed with fair coins, and the physical
helper formulas.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Tuple

from .boxes import BoxPair, query
from .datamodels import InsufficientData, ValidationError

LOGGER = logging.getLogger()

SPEED_OF_LIGHT = 299792458  # m/s, exact
PLANCK_CONSTANT = Fraction("6.62607015e-34")  # J s, exact

_MASK64 = (1 << 64) - 1

Setting = Tuple[int, int]
Outcome = Tuple[int, int, int, int]


class SplitMix64:
    """
    64-bit generator with a fixed, portable state transition:

        state = state + 0x9E3779B97F4A7C15
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        output = z ^ (z >> 31)

    all modulo 2**64. Each output gives one round of fair coins: x is bit 0
    and y is bit 1.
    """

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def coins(self) -> Setting:
        value = self.next()
        return value & 1, (value >> 1) & 1

    def __iter__(self) -> Iterator[Setting]:
        while True:
            yield self.coins()


@dataclass
class EmpiricalDistribution:
    counts: Dict[Outcome, int] = field(default_factory=dict)
    rounds: int = 0

    def add(self, x: int, y: int, a: int, b: int) -> None:
        key = (x, y, a, b)
        self.counts[key] = self.counts.get(key, 0) + 1
        self.rounds += 1

    def count(self, x: int, y: int, a: int, b: int) -> int:
        return self.counts.get((x, y, a, b), 0)

    def setting_count(self, x: int, y: int) -> int:
        return sum(self.count(x, y, a, b) for a in (0, 1) for b in (0, 1))

    def probability(self, a: int, b: int, x: int, y: int) -> Fraction:
        """
        p(a, b | x, y) estimated as 4 * #{rounds with x, y, a, b} / rounds
        """
        if self.rounds == 0:
            raise InsufficientData("No rounds observed")
        return Fraction(4 * self.count(x, y, a, b), self.rounds)

    def correlator(self, x: int, y: int) -> Fraction:
        """
        The mean of (-1)^(a + b) over the rounds with setting (x, y)
        """
        total = self.setting_count(x, y)
        if total == 0:
            raise InsufficientData(f"Setting x={x} y={y} was never observed")
        same = self.count(x, y, 0, 0) + self.count(x, y, 1, 1)
        return Fraction(2 * same - total, total)

    def rows(self) -> List[Tuple[int, int, int, int, int]]:
        return [
            (x, y, a, b, self.count(x, y, a, b))
            for x in (0, 1)
            for y in (0, 1)
            for a in (0, 1)
            for b in (0, 1)
        ]


def estimate_distribution(pair: BoxPair, horizon: int, seed: int) -> EmpiricalDistribution:
    if horizon < 1:
        raise ValidationError(f"horizon must be at least 1, got {horizon}")
    coins = SplitMix64(seed)
    distribution = EmpiricalDistribution()
    for n in range(horizon):
        x, y = coins.coins()
        a, b = query(pair, n, x, y)
        distribution.add(x, y, a, b)
    LOGGER.debug("Tallied %s rounds of %s", horizon, pair.name)
    return distribution


def chsh_score(distribution: EmpiricalDistribution) -> Fraction:
    """
    E00 + E01 + E10 - E11
    """
    if distribution.rounds == 0:
        raise InsufficientData("Empty distribution")
    return (
        distribution.correlator(0, 0)
        + distribution.correlator(0, 1)
        + distribution.correlator(1, 0)
        - distribution.correlator(1, 1)
    )


def signaling_distance(seconds_per_round: Fraction, rounds: int) -> Fraction:
    """
    Distance light travels while `rounds` rounds are played
    >>> signaling_distance(Fraction(1), 1000)
    Fraction(299792458000, 1)
    """
    seconds_per_round = Fraction(seconds_per_round)
    if seconds_per_round <= 0:
        raise ValidationError(f"Round time must be positive, got {seconds_per_round}")
    if rounds < 0:
        raise ValidationError(f"rounds must be non-negative, got {rounds}")
    return SPEED_OF_LIGHT * seconds_per_round * rounds


def lloyd_bound(mass: float) -> float:
    """
    Operations per second a physical system of the given mass (kg) can
    perform, 2 m c^2 / (pi hbar), which is 4 m c^2 / h. Any physically
    realised box is thus computable within some time bound.
    """
    mass = Fraction(mass)
    if mass < 0:
        raise ValidationError(f"mass must be non-negative, got {mass}")
    return float(4 * mass * SPEED_OF_LIGHT**2 / PLANCK_CONSTANT)
