import json
from fractions import Fraction
from itertools import islice
from pathlib import Path

import pytest

from hiddensignal.analysis import signaling_distance
from hiddensignal.betting import iter_diagonal_with_capitals
from hiddensignal.boxes import (
    LOCAL_FUNCTIONS,
    deterministic_pr,
    local_deterministic,
    pr_box_programs,
    vm_backed,
)
from hiddensignal.datamodels import (
    ConfigurationError,
    ExecBudget,
    ProtocolConfig,
    SwitchSource,
    SwitchSymbol,
    TimeFunction,
)
from hiddensignal.program_vm import ZERO_PROGRAM, Program
from hiddensignal.protocol import (
    Alice,
    DecodeState,
    build_default_family,
    check_p1,
    check_p2,
    run_protocol,
    run_protocol_until_settled,
    summary_dict,
    switch_alphabet,
    switching_sequence,
    transcript_lines,
)

CURRENT_FOLDER = Path(__file__).parent.resolve()

COPY_X_PROGRAM = Program.from_text("LOADX 0\nDECJZ 0 -2\nHALT1")


def copy_x_pair():
    # Bob's box outputs Alice's input
    return vm_backed(ZERO_PROGRAM, COPY_X_PROGRAM, ExecBudget(), name="copy x")


def diagonal_config(message, horizon=100):
    return ProtocolConfig(message=message, horizon=horizon, family_size=2)


def file_config(message, horizon, sequence_file, **kwargs):
    return ProtocolConfig(
        message=message,
        horizon=horizon,
        source=SwitchSource.file,
        sequence_file=CURRENT_FOLDER / sequence_file,
        **kwargs,
    )


def test_switch_alphabet():
    alphabet = switch_alphabet(1)
    assert alphabet.k == 5
    assert [str(s) for s in alphabet] == ["L 0 0", "L 0 1", "L 1 0", "L 1 1", "S 1"]


def test_default_family_weights():
    cfg = diagonal_config((1, 0))
    family = build_default_family(cfg, 3)
    # learning, signaling and one bettor per message bit for every program
    assert len(family) == 3 * 4
    weights = [w for _, w in family]
    assert weights == [Fraction(1, 2**rank) for rank in range(1, 13)]
    with pytest.raises(ConfigurationError):
        build_default_family(cfg, 0)


def test_diagonal_sequence_visits_every_symbol():
    cfg = diagonal_config((1, 0))
    symbols = [str(s) for s in islice(switching_sequence(cfg), 12)]
    assert symbols == ["L 0 0", "L 0 1", "L 1 0", "L 1 1", "S 1", "S 2"] * 2


def test_file_sequence_checks_message_indices(tmp_path):
    sequence_file = tmp_path / "sequence.txt"
    sequence_file.write_text("L 0 0\nS 2\n")
    cfg = ProtocolConfig(
        message=(1,), horizon=2, source=SwitchSource.file, sequence_file=sequence_file
    )
    with pytest.raises(ConfigurationError):
        switching_sequence(cfg)


def test_decode_state_latest_wins():
    decode = DecodeState(m=1, window=3)
    decode.record(1, 1, 0)
    decode.record(1, 1, 1)
    assert not decode.settled(1)
    decode.record(1, 0, 2)
    assert decode.message == (0,)
    assert decode.estimates[0].streak == 1
    decode.record(1, 0, 3)
    decode.record(1, 0, 4)
    assert decode.all_settled
    assert decode.settled_round == 4
    assert decode.estimates[0].streak_start == 2
    assert decode.estimates[0].usable_rounds == 5


def test_decode_state_waits_for_every_bit():
    decode = DecodeState(m=2, window=1)
    decode.record(2, 1, 0)
    assert decode.settled(2)
    assert not decode.all_settled
    assert decode.settled_round is None
    assert decode.message == (None, 1)


@pytest.mark.parametrize(
    "message, rounds",
    [((1,), 25), ((0,), 25), ((1, 0), 30), ((0, 1), 30)],
)
def test_message_is_read_through_the_box(message, rounds):
    pair = copy_x_pair()
    protocol_run = run_protocol_until_settled(diagonal_config(message), pair, 500)
    assert protocol_run.rounds == rounds
    assert protocol_run.decode.message == message
    assert protocol_run.mind_change_rounds == [2]
    assert protocol_run.report.final_guess == COPY_X_PROGRAM.index
    assert protocol_run.report.stabilization_round == 2

    p1 = check_p1(protocol_run, pair, ExecBudget())
    assert p1.holds
    assert p1.from_round == 2
    p2 = check_p2(protocol_run, pair)
    assert p2.counts == (5,) * len(message)
    assert p2.passes


def test_round_records():
    protocol_run = run_protocol(diagonal_config((1,), horizon=10), copy_x_pair())
    records = protocol_run.records
    assert [r.n for r in records] == list(range(10))
    assert records[2].symbol == SwitchSymbol.learn(1, 0)
    assert (records[2].x_in, records[2].y_in, records[2].b_out) == (1, 0, 1)
    assert records[1].guess_index == 0
    assert records[2].guess_index == COPY_X_PROGRAM.index
    assert records[4].decoded == (1, 1)
    assert records[4].y_in == 0
    lines = list(transcript_lines(protocol_run))
    assert len(lines) == 10
    assert json.loads(lines[4])["decoded"] == [1, 1]


def test_summary():
    protocol_run = run_protocol_until_settled(diagonal_config((1,)), copy_x_pair(), 500)
    summary = summary_dict(protocol_run, seconds_per_round=Fraction(1, 1000))
    assert summary["message"] == summary["decoded"] == "1"
    assert summary["all_settled"]
    assert summary["rounds_to_settle"] == 25
    assert summary["signaling_distance_m"] == str(signaling_distance(Fraction(1, 1000), 25))
    assert summary["report"]["t_assumption_violated"] is False


def test_until_settled_gives_up():
    protocol_run = run_protocol_until_settled(diagonal_config((1,)), copy_x_pair(), 20)
    assert protocol_run.rounds == 20
    assert not protocol_run.decode.all_settled
    assert summary_dict(protocol_run)["rounds_to_settle"] is None


def test_local_box_carries_nothing():
    pair = local_deterministic(LOCAL_FUNCTIONS["zero"], LOCAL_FUNCTIONS["zero"])
    protocol_run = run_protocol(diagonal_config((1,), horizon=50), pair)
    assert protocol_run.decode.message == (None,)
    assert all(r.decoded is None for r in protocol_run.records)
    assert protocol_run.report.final_guess == 0
    assert check_p1(protocol_run, pair, ExecBudget()).holds
    p2 = check_p2(protocol_run, pair)
    assert p2.counts == (0,)
    assert not p2.passes


def test_learning_only_sequence_misses_the_pr_box():
    # the sequence never asks for x = y = 1, so the empty program explains
    # every sample while B still depends on x
    pair = deterministic_pr()
    cfg = file_config((1, 0), 30, "example_learning_only_sequence.txt")
    protocol_run = run_protocol(cfg, pair)
    assert protocol_run.report.final_guess == 0
    assert protocol_run.report.mind_changes == 0
    assert protocol_run.report.stabilization_round == 0
    p1 = check_p1(protocol_run, pair, cfg.budget)
    assert not p1.holds
    assert (0, 1, 1) in p1.mismatches
    assert check_p2(protocol_run, pair).counts == (0, 0)
    assert protocol_run.decode.message == (None, None)


def test_box_outside_the_time_bound():
    # n mod 2 under constant fuel needs more than two instructions
    pair = local_deterministic(LOCAL_FUNCTIONS["zero"], LOCAL_FUNCTIONS["n_parity"])
    budget = ExecBudget(time_function=TimeFunction.linear, c_fuel=0, d_fuel=10)
    cfg = file_config(
        (1,), 90, "example_slow_box_sequence.txt", budget=budget, scan_cap=1474
    )
    protocol_run = run_protocol(cfg, pair)
    report = protocol_run.report
    assert report.class_exhausted
    assert report.t_assumption_violated
    assert report.stabilization_round is None
    p1 = check_p1(protocol_run, pair, budget)
    assert not p1.holds and p1.from_round is None
    p2 = check_p2(protocol_run, pair)
    assert p2.counts == (0,)
    assert not p2.passes
    assert protocol_run.decode.message == (None,)


def test_sequence_file_too_short():
    data = json.loads((CURRENT_FOLDER / "example_protocol_config.json").read_text())
    cfg = ProtocolConfig.from_dict(data, CURRENT_FOLDER)
    with pytest.raises(ConfigurationError):
        run_protocol(cfg, deterministic_pr())


def test_alice_input():
    alice = Alice((1, 0))
    assert alice.input_for(SwitchSymbol.learn(1, 0)) == 1
    assert alice.input_for(SwitchSymbol.learn(0, 1)) == 0
    assert alice.input_for(SwitchSymbol.signal(1)) == 1
    assert alice.input_for(SwitchSymbol.signal(2)) == 0


def test_runs_are_deterministic():
    runs = [run_protocol(diagonal_config((1, 0), horizon=40), copy_x_pair()) for _ in range(2)]
    first, second = (list(transcript_lines(protocol_run)) for protocol_run in runs)
    assert len(first) == 40
    assert first == second


@pytest.mark.slow
def test_default_family_capitals_stay_bounded():
    family = build_default_family(ProtocolConfig(message=(0, 0, 0, 0), horizon=1), 200)
    bounds = [family.capital_bound(i) for i in range(len(family))]
    steps = iter_diagonal_with_capitals(family, switch_alphabet(4))
    for position in range(1000):
        _, capitals = next(steps)
        assert all(c <= bound for c, bound in zip(capitals, bounds)), position


@pytest.mark.slow
@pytest.mark.parametrize("message", [(1,), (1, 0), (1, 0, 1, 1)])
def test_message_is_read_through_the_pr_box(message):
    pair = vm_backed(*pr_box_programs(), ExecBudget(), name="pr")
    cfg = ProtocolConfig(message=message, horizon=1)
    protocol_run = run_protocol_until_settled(cfg, pair, 2000)
    assert protocol_run.decode.all_settled
    assert protocol_run.decode.message == message
    assert check_p1(protocol_run, pair, cfg.budget).holds
    p2 = check_p2(protocol_run, pair)
    assert p2.passes
    if message == (1,):
        assert protocol_run.rounds == 30
        assert protocol_run.report.final_guess == 751917264
        assert p2.counts == (6,)
