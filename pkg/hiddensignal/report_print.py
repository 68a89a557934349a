import json
from typing import Dict, Optional, Tuple

import asciitree

import hiddensignal
from hiddensignal.protocol import P1Verdict, P2Verdict, ProtocolRun

ReportTree = Dict[str, "ReportTree"]


def print_bit(index: int, estimate_dict: Dict) -> str:
    res = "bit %s = %s (%s usable rounds" % (
        index,
        "?" if estimate_dict["bit"] is None else estimate_dict["bit"],
        estimate_dict["usable_rounds"],
    )
    if estimate_dict["settled"]:
        res = f"{res}, settled since round {estimate_dict['streak_start']})"
    else:
        res = f"{res}, streak {estimate_dict['streak']})"
    return res


def print_learner_branch(
    protocol_run: ProtocolRun, max_mind_changes: Optional[int]
) -> Tuple[str, ReportTree]:
    report = protocol_run.report
    key = "Learner: guess %s after %s mind changes" % (
        report.final_guess,
        report.mind_changes,
    )
    if report.class_exhausted:
        key = f"{key} - class exhausted, the time bound assumption failed"
    branch: ReportTree = {}
    rounds = protocol_run.mind_change_rounds
    if max_mind_changes is None:
        shown = rounds
    else:
        shown = rounds[max(len(rounds) - max_mind_changes, 0):]
    hidden = len(rounds) - len(shown)
    if hidden:
        branch[f"{hidden} earlier mind changes"] = {}
    for n in shown:
        branch[f"mind change at round {n}"] = {}
    return key, branch


def print_decoding_branch(protocol_run: ProtocolRun) -> Tuple[str, ReportTree]:
    decode = protocol_run.decode.to_dict()
    decoded = "".join(
        "?" if e["bit"] is None else str(e["bit"]) for e in decode["estimates"]
    )
    key = "Decoded message %s (window %s)" % (decoded, decode["window"])
    branch: ReportTree = {}
    for estimate in decode["estimates"]:
        branch[print_bit(estimate["index"], estimate)] = {}
    return key, branch


def print_checks_branch(
    p1: Optional[P1Verdict], p2: Optional[P2Verdict]
) -> Tuple[str, ReportTree]:
    branch: ReportTree = {}
    if p1 is not None:
        if p1.holds:
            branch[f"P1 holds from round {p1.from_round}"] = {}
        elif p1.from_round is None:
            branch["P1 fails: the learner never stabilized"] = {}
        else:
            first = p1.mismatches[0]
            branch[
                f"P1 fails: {len(p1.mismatches)} mismatches, first at n={first[0]} x={first[1]} y={first[2]}"
            ] = {}
    if p2 is not None:
        verdict = "passes" if p2.passes else "fails"
        branch[f"P2 {verdict}: usable rounds per bit {list(p2.counts)}"] = {}
    return "Checks", branch


def print_protocol_report(
    protocol_run: ProtocolRun,
    box_name: str,
    p1: Optional[P1Verdict] = None,
    p2: Optional[P2Verdict] = None,
    max_mind_changes: Optional[int] = 10,
) -> str:
    output = []
    cfg = protocol_run.config
    output.append(
        "HiddenSignal (%s) protocol report for box '%s', message %s, %s rounds"
        % (
            hiddensignal.__version__,
            box_name,
            "".join(str(b) for b in cfg.message),
            protocol_run.rounds,
        )
    )
    output.append(f"Protocol options: {json.dumps(cfg.to_dict(), sort_keys=True)}")

    tree: ReportTree = {}
    for key, branch in (
        print_learner_branch(protocol_run, max_mind_changes),
        print_decoding_branch(protocol_run),
        print_checks_branch(p1, p2),
    ):
        tree[key] = branch
    tr = asciitree.LeftAligned()
    output.append(tr({"Bob": tree}))

    return "\n".join(output)
