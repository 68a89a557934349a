import pytest

import hiddensignal
from hiddensignal.boxes import deterministic_pr, vm_backed
from hiddensignal.datamodels import ExecBudget, ProtocolConfig
from hiddensignal.program_vm import ZERO_PROGRAM, Program
from hiddensignal.protocol import check_p1, check_p2, run_protocol, run_protocol_until_settled
from hiddensignal.report_print import print_bit, print_learner_branch, print_protocol_report

COPY_X_PROGRAM = Program.from_text("LOADX 0\nDECJZ 0 -2\nHALT1")


@pytest.fixture
def settled_run():
    pair = vm_backed(ZERO_PROGRAM, COPY_X_PROGRAM, ExecBudget(), name="copy x")
    cfg = ProtocolConfig(message=(1,), horizon=100, family_size=2)
    protocol_run = run_protocol_until_settled(cfg, pair, 500)
    return pair, protocol_run


@pytest.mark.parametrize(
    "estimate, expected",
    [
        (
            {"bit": 1, "usable_rounds": 5, "settled": True, "streak_start": 4, "streak": 5},
            "bit 1 = 1 (5 usable rounds, settled since round 4)",
        ),
        (
            {"bit": None, "usable_rounds": 0, "settled": False, "streak_start": None, "streak": 0},
            "bit 1 = ? (0 usable rounds, streak 0)",
        ),
    ],
)
def test_print_bit(estimate, expected):
    assert print_bit(1, estimate) == expected


def test_protocol_report(settled_run):
    pair, protocol_run = settled_run
    p1 = check_p1(protocol_run, pair, ExecBudget())
    p2 = check_p2(protocol_run, pair)
    report = print_protocol_report(protocol_run, pair.name, p1, p2)
    lines = report.splitlines()
    assert lines[0] == (
        f"HiddenSignal ({hiddensignal.__version__}) protocol report for box 'copy x',"
        " message 1, 25 rounds"
    )
    assert lines[1].startswith("Protocol options: {")
    assert lines[2] == "Bob"
    for text in [
        f"Learner: guess {COPY_X_PROGRAM.index} after 1 mind changes",
        "mind change at round 2",
        "Decoded message 1 (window 5)",
        "bit 1 = 1 (5 usable rounds, settled since round 4)",
        "P1 holds from round 2",
        "P2 passes: usable rounds per bit [5]",
    ]:
        assert text in report


def test_learner_branch_hides_old_mind_changes(settled_run):
    _, protocol_run = settled_run
    _, branch = print_learner_branch(protocol_run, 0)
    assert list(branch) == ["1 earlier mind changes"]
    _, branch = print_learner_branch(protocol_run, None)
    assert list(branch) == ["mind change at round 2"]


def test_failed_checks_report():
    pair = deterministic_pr()
    cfg = ProtocolConfig(message=(1,), horizon=12, family_size=1, frequency_fraction=None)
    protocol_run = run_protocol(cfg, pair)
    report = print_protocol_report(
        protocol_run, pair.name, check_p1(protocol_run, pair, cfg.budget), check_p2(protocol_run, pair)
    )
    assert "Decoded message ? (window 5)" in report
    assert "P1 fails: " in report
    assert "P2 fails: usable rounds per bit [0]" in report
