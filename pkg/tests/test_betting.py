import random
from fractions import Fraction

import pytest

from hiddensignal.betting import (
    Alphabet,
    BetVector,
    Bettor,
    FrequencyStrategy,
    ProgramPredicate,
    WeightedBettorFamily,
    diagonal_sequence,
    even_strategy,
    fact1_bettor,
    frequency_bettors,
    iter_diagonal_with_capitals,
    run_bettor,
    settle,
    settlement_factors,
    trajectory_rows,
)
from hiddensignal.datamodels import (
    ExecBudget,
    InvalidBet,
    StrategyError,
    ValidationError,
)
from hiddensignal.program_vm import Program

BINARY = Alphabet((0, 1))
QUATERNARY = Alphabet((0, 1, 2, 3))


def all_in(position: int) -> Bettor:
    return Bettor(FrequencyStrategy(position, Fraction(1)), name=f"all-in {position}")


@pytest.mark.parametrize(
    "capital, bet, outcome, k, expected",
    [
        (1, (Fraction(1, 2), Fraction(1, 2)), 0, 2, 1),
        (1, (Fraction(1, 2), Fraction(1, 2)), 1, 2, 1),
        (1, (Fraction(1, 2), 0), 0, 2, Fraction(3, 2)),
        (1, (Fraction(1, 2), 0), 1, 2, Fraction(1, 2)),
        (2, (Fraction(1, 4), 0, 0, 0), 0, 4, Fraction(7, 2)),
        (3, (0, 0), 1, 2, 3),
        (1, (1, 0), 1, 2, 0),
    ],
)
def test_settle(capital, bet, outcome, k, expected):
    assert settle(Fraction(capital), BetVector(bet), outcome, k) == expected


@pytest.mark.parametrize(
    "bet, k",
    [
        ((Fraction(3, 4), Fraction(1, 2)), 2),
        ((Fraction(-1, 4), Fraction(1, 2)), 2),
        ((Fraction(1, 2),), 2),
    ],
)
def test_invalid_bets(bet, k):
    with pytest.raises(InvalidBet):
        settle(Fraction(1), BetVector(bet), 0, k)


def random_bet(rng: random.Random, k: int) -> BetVector:
    weights = [rng.randint(0, 10) for _ in range(k)]
    total = Fraction(rng.randint(0, 12), 12)
    if sum(weights) == 0:
        return BetVector((Fraction(0),) * k)
    return BetVector(tuple(total * Fraction(w, sum(weights)) for w in weights))


@pytest.mark.parametrize("k", [2, 4, 6])
def test_fairness(k):
    rng = random.Random(k)
    for _ in range(2000):
        capital = Fraction(rng.randint(1, 1000), rng.randint(1, 50))
        bet = random_bet(rng, k)
        settled = [settle(capital, bet, outcome, k) for outcome in range(k)]
        assert sum(settled) / k == capital
        assert all(c >= 0 for c in settled)


def test_settlement_factors():
    assert settlement_factors(BetVector((Fraction(1, 2), 0)), 2) == (
        Fraction(3, 2),
        Fraction(1, 2),
    )


def test_fact1_doubles_on_avoided_symbol():
    bettor = fact1_bettor(lambda n: 1, [1], BINARY)
    assert run_bettor(bettor, [0, 0, 0, 0], BINARY) == [1, 2, 4, 8, 16]


def test_fact1_without_flags_is_even():
    bettor = fact1_bettor(lambda n: 0, [1], BINARY)
    assert run_bettor(bettor, [0, 1, 1, 0], BINARY) == [1] * 5


def test_fact1_single_flag():
    bettor = fact1_bettor(lambda n: int(n == 2), [1, 2, 3], QUATERNARY)
    assert run_bettor(bettor, [1, 2, 0, 3], QUATERNARY) == [1, 1, 1, 4, 4]


def test_fact1_threshold():
    bettor = fact1_bettor(lambda n: 1, [1], BINARY, m_threshold=2)
    assert run_bettor(bettor, [0, 0, 0, 0], BINARY) == [1, 1, 1, 2, 4]


@pytest.mark.parametrize("m_threshold, expected", [(0, [1, 2, 2]), (1, [1, 1, 1])])
def test_fact1_threshold_counts_from_position_zero(m_threshold, expected):
    # the only flag is on the first symbol, position 0
    bettor = fact1_bettor(lambda n: int(n == 0), [1], BINARY, m_threshold=m_threshold)
    assert run_bettor(bettor, [0, 1], BINARY) == expected


def test_fact1_growth_on_twenty_positions():
    # flags at every third position, where the sequence avoids {0, 1}
    sequence = [2 + (n // 3) % 2 if n % 3 == 0 else 0 for n in range(60)]
    bettor = fact1_bettor(lambda n: int(n % 3 == 0), [0, 1], QUATERNARY)
    trajectory = run_bettor(bettor, sequence, QUATERNARY)
    assert trajectory[-1] == 2**20


def test_fact1_loses_everything_on_forbidden_symbol():
    bettor = fact1_bettor(lambda n: 1, [1], BINARY)
    assert run_bettor(bettor, [0, 1, 0], BINARY) == [1, 2, 0, 0]


@pytest.mark.parametrize("gamma", [[], [0, 1]])
def test_fact1_needs_proper_subset(gamma):
    with pytest.raises(ValidationError):
        fact1_bettor(lambda n: 1, gamma, BINARY)


def test_run_bettor_empty_sequence():
    bettor = Bettor(even_strategy, Fraction(5, 2))
    assert run_bettor(bettor, [], BINARY) == [Fraction(5, 2)]


def test_misbehaving_strategies_bet_evenly():
    def failing(prefix, alphabet):
        raise StrategyError("no bet")

    def overbetting(prefix, alphabet):
        return BetVector((Fraction(1), Fraction(1)))

    for strategy in (failing, overbetting):
        assert run_bettor(Bettor(strategy), [0, 1, 1], BINARY) == [1, 1, 1, 1]


def test_program_predicate():
    budget = ExecBudget()
    assert ProgramPredicate(Program.from_text("HALT1"), budget)(3) == 1
    assert ProgramPredicate(Program.from_text(""), budget)(3) == 0
    looping = Program.from_text("DECJZ 0 0")
    assert ProgramPredicate(looping, budget)(3) == 0
    with pytest.raises(StrategyError):
        ProgramPredicate(looping, budget, exhausted_bit=None)(3)


def test_program_backed_bettor_out_of_fuel_is_neutral():
    g = ProgramPredicate(Program.from_text("DECJZ 0 0"), ExecBudget(), exhausted_bit=None)
    bettor = fact1_bettor(g, [1], BINARY)
    assert run_bettor(bettor, [0, 0, 0], BINARY) == [1, 1, 1, 1]


def test_diagonal_empty_family():
    assert diagonal_sequence(WeightedBettorFamily(), BINARY, 5) == [0] * 5
    assert diagonal_sequence(WeightedBettorFamily(), BINARY, 0) == []


def test_diagonal_single_all_in_bettor():
    family = WeightedBettorFamily([(all_in(0), Fraction(1))])
    assert diagonal_sequence(family, BINARY, 4) == [1, 0, 0, 0]


def test_diagonal_opposite_bettors():
    family = WeightedBettorFamily([(all_in(0), Fraction(1)), (all_in(1), Fraction(1))])
    steps = iter_diagonal_with_capitals(family, BINARY)
    assert [next(steps) for _ in range(4)] == [
        (0, (2, 0)),
        (1, (0, 0)),
        (0, (0, 0)),
        (0, (0, 0)),
    ]


def test_diagonal_prefixes_agree():
    family = WeightedBettorFamily(
        [(bettor, Fraction(1)) for bettor in frequency_bettors(QUATERNARY)]
    )
    assert diagonal_sequence(family, QUATERNARY, 20)[:7] == diagonal_sequence(
        family, QUATERNARY, 7
    )


def test_frequency_bettors_keep_every_symbol_coming():
    family = WeightedBettorFamily(
        [(bettor, Fraction(1)) for bettor in frequency_bettors(QUATERNARY)]
    )
    sequence = diagonal_sequence(family, QUATERNARY, 40)
    assert sequence[:8] == [0, 1, 2, 3, 0, 1, 2, 3]
    assert all(sequence.count(symbol) == 10 for symbol in QUATERNARY)


def test_diagonal_boundedness():
    family = WeightedBettorFamily()
    rank = 0
    for period in range(1, 6):
        for gamma in ([0], [1, 2], [3], [0, 1, 2]):
            rank += 1
            bettor = fact1_bettor(lambda n, p=period: int(n % p == 0), gamma, QUATERNARY)
            family.add(bettor, Fraction(1, 2**rank))
    for bettor in frequency_bettors(QUATERNARY, Fraction(1, 3)):
        family.add(bettor, Fraction(1))
    weights = [w for _, w in family]
    bounds = [family.capital_bound(i) for i in range(len(family))]
    total = family.weighted_initial_capital
    steps = iter_diagonal_with_capitals(family, QUATERNARY)
    for _ in range(200):
        _, capitals = next(steps)
        assert all(c <= bound for c, bound in zip(capitals, bounds))
        weighted = sum(w * c for w, c in zip(weights, capitals))
        assert weighted <= total
        total = weighted


def test_family_weights_must_be_positive():
    with pytest.raises(ValidationError):
        WeightedBettorFamily([(all_in(0), Fraction(0))])


def test_frequency_bettors_fraction():
    assert len(frequency_bettors(QUATERNARY)) == 4
    with pytest.raises(ValidationError):
        frequency_bettors(BINARY, Fraction(3, 2))


@pytest.mark.parametrize("symbols", [(0,), (0, 0), ()])
def test_invalid_alphabets(symbols):
    with pytest.raises(ValidationError):
        Alphabet(symbols)


def test_trajectory_rows():
    assert trajectory_rows([Fraction(1), Fraction(3, 2), Fraction(0)]) == [
        (0, 1, 1),
        (1, 3, 2),
        (2, 0, 1),
    ]
