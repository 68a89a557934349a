import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

import progressbar

import hiddensignal
from hiddensignal.analysis import chsh_score, estimate_distribution
from hiddensignal.args_functions import (
    add_args_for_budget,
    build_budget,
    validate_positive_fraction,
    validate_positive_int,
    validate_seed,
)
from hiddensignal.betting import iter_diagonal, run_bettor, trajectory_rows
from hiddensignal.boxes import box_from_manifest
from hiddensignal.datamodels import (
    DEFAULT_SCAN_CAP,
    ConfigurationError,
    ExperimentConfig,
    HiddenSignalError,
    ProtocolConfig,
)
from hiddensignal.file_formats import (
    bettor_from_spec,
    format_sequence,
    parse_samples,
    read_json,
    read_sequence,
    read_text,
    write_csv,
    write_json,
    write_jsonl,
    write_resolved_config,
    write_text,
)
from hiddensignal.learner import LearnerTrace, Sample, learner_trace_rows
from hiddensignal.protocol import (
    check_p1,
    check_p2,
    diagonal_family,
    run_protocol,
    run_protocol_until_settled,
    summary_dict,
    switch_alphabet,
    transcript_lines,
)
from hiddensignal.report_print import print_protocol_report

# The format will be modified later to add the command and its run parameters
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(levelname)s] %(message)s",
    stream=sys.stderr,
)
LOGGER = logging.getLogger()


parser = argparse.ArgumentParser(
    prog="HiddenSignal",
    description=(
        "Simulates computable Bell-violating boxes and the protocol that turns"
        " their hidden signaling into a message channel"
    ),
)
parser.add_argument("--debug", "-d", action="store_true", help="Enable debug mode")
parser.add_argument(
    "--disable_progress_bar",
    action="store_true",
    help="Disables progress bar.",
)
parser.add_argument(
    "--version", action="version", version=f"%(prog)s v{hiddensignal.__version__}"
)
subparsers = parser.add_subparsers(dest="command", required=True)

chsh_parser = subparsers.add_parser(
    "chsh", help="Estimates the CHSH score of a box pair fed with fair coins"
)
chsh_parser.add_argument("box_manifest", type=Path, help="JSON box manifest")
chsh_parser.add_argument(
    "--horizon", type=validate_positive_int, default=10**5, help="Rounds (default 100000)"
)
chsh_parser.add_argument(
    "--seed", type=validate_seed, default=0, help="64-bit coin seed (default 0)"
)
chsh_parser.add_argument(
    "--output_file", "-o", type=Path, help="CSV file for the distribution counts"
)

protocol_parser = subparsers.add_parser(
    "protocol", help="Runs the signaling protocol described by a JSON config"
)
protocol_parser.add_argument(
    "config", type=Path, help="JSON protocol config with a 'box' manifest"
)
protocol_parser.add_argument(
    "--until_settled",
    type=validate_positive_int,
    metavar="MAX_HORIZON",
    help="Ignore the configured horizon and run until the message settles",
)
protocol_parser.add_argument(
    "--seconds_per_round",
    type=validate_positive_fraction,
    help="Round duration T, to report the signaling distance",
)
protocol_parser.add_argument(
    "--output_file", "-o", type=Path, help="JSON-lines transcript file"
)

diagonal_parser = subparsers.add_parser(
    "diagonal", help="Writes a switching sequence that defeats the default bettor family"
)
diagonal_parser.add_argument(
    "--family_size", "-N", type=validate_positive_int, default=200,
    help="Programs feeding the family (default 200)",
)
diagonal_parser.add_argument(
    "--message_length", "-m", type=validate_positive_int, default=1,
    help="Message length m (default 1)",
)
diagonal_parser.add_argument(
    "--frequency_fraction",
    type=validate_positive_fraction,
    default=Fraction(1, 2),
    help="Bet of the per-symbol frequency bettors (default 1/2)",
)
diagonal_parser.add_argument(
    "--no_frequency_bettors",
    action="store_true",
    help="Leaves the frequency bettors out of the family",
)
diagonal_parser.add_argument("--length", type=validate_positive_int, required=True)
diagonal_parser.add_argument("--output_file", "-o", type=Path, help="Sequence file")
add_args_for_budget(diagonal_parser)

bettors_parser = subparsers.add_parser(
    "bettors", help="Computes the capital trajectory of a bettor along a sequence"
)
bettors_parser.add_argument("bettor_spec", type=Path, help="JSON bettor spec")
bettors_parser.add_argument("sequence", type=Path, help="Switching sequence file")
bettors_parser.add_argument(
    "--message_length", "-m", type=validate_positive_int,
    help="Message length m (default: the largest index in the sequence)",
)
bettors_parser.add_argument("--output_file", "-o", type=Path, help="CSV trajectory")
add_args_for_budget(bettors_parser)

learn_parser = subparsers.add_parser(
    "learn", help="Feeds a sample CSV (n, x, y, b) to the learner"
)
learn_parser.add_argument("samples", type=Path, help="Sample CSV file")
learn_parser.add_argument(
    "--scan_cap", type=validate_positive_int, default=DEFAULT_SCAN_CAP,
    help="Largest program index the learner may reach",
)
learn_parser.add_argument("--output_file", "-o", type=Path, help="CSV learner trace")
add_args_for_budget(learn_parser)


def _print_or_write_csv(output_file: Optional[Path], header, rows) -> None:
    if output_file is None:
        print(",".join(header))
        for row in rows:
            print(",".join(str(v) for v in row))
        return
    write_csv(output_file, header, rows)


def run_chsh(args: Any) -> None:
    manifest = read_json(args.box_manifest)
    config = ExperimentConfig(
        seed=args.seed,
        horizon=args.horizon,
        box_manifest=manifest,
        output=args.output_file,
    )
    pair = box_from_manifest(manifest, args.box_manifest.parent)
    distribution = estimate_distribution(pair, config.horizon, config.seed)
    score = chsh_score(distribution)
    LOGGER.info("CHSH score of %s over %s rounds: %s", pair.name, config.horizon, score)
    print(json.dumps({"box": pair.name, "rounds": config.horizon, "chsh": str(score)}))
    if args.output_file:
        write_csv(args.output_file, ("x", "y", "a", "b", "count"), distribution.rows())
        write_resolved_config(args.output_file, config.to_dict())


def run_protocol_command(args: Any) -> None:
    data = read_json(args.config)
    if "box" not in data:
        raise ConfigurationError(f"{args.config} has no 'box' manifest")
    config = ProtocolConfig.from_dict(data, args.config.parent)
    pair = box_from_manifest(data["box"], args.config.parent)
    if args.until_settled:
        protocol_run = run_protocol_until_settled(
            config, pair, args.until_settled, args.disable_progress_bar
        )
    else:
        protocol_run = run_protocol(config, pair, args.disable_progress_bar)
    p1 = check_p1(protocol_run, pair, config.budget)
    p2 = check_p2(protocol_run, pair)
    summary = summary_dict(protocol_run, p1, p2, args.seconds_per_round)

    print(print_protocol_report(protocol_run, pair.name, p1, p2))
    if args.output_file:
        write_jsonl(args.output_file, transcript_lines(protocol_run))
        write_json(
            args.output_file.with_name(args.output_file.name + ".summary.json"), summary
        )
        resolved = config.to_dict()
        resolved["box"] = data["box"]
        write_resolved_config(args.output_file, resolved)


def run_diagonal(args: Any) -> None:
    config = ProtocolConfig(
        message=(0,) * args.message_length,
        horizon=args.length,
        budget=build_budget(args),
        family_size=args.family_size,
        frequency_fraction=None if args.no_frequency_bettors else args.frequency_fraction,
    )
    family = diagonal_family(config)
    LOGGER.info("Diagonalizing against %s bettors", len(family))

    pbar = None
    if not args.disable_progress_bar:
        widgets = [
            "Building sequence. Built ",
            progressbar.Percentage(),
            " (",
            progressbar.Timer(),
            ")",
        ]
        pbar = progressbar.ProgressBar(widgets=widgets, max_value=args.length)

    symbols = []
    for symbol in iter_diagonal(family, switch_alphabet(config.m)):
        symbols.append(symbol)
        if pbar:
            pbar.update(len(symbols))
        if len(symbols) == args.length:
            break
    if pbar:
        pbar.finish()

    text = format_sequence(symbols)
    if args.output_file is None:
        print(text, end="")
        return
    write_text(args.output_file, text)
    resolved: Dict[str, Any] = config.to_dict()
    del resolved["message"], resolved["horizon"], resolved["sequence_file"]
    resolved["message_length"] = config.m
    resolved["length"] = args.length
    write_resolved_config(args.output_file, resolved)


def run_bettors(args: Any) -> None:
    spec = read_json(args.bettor_spec)
    sequence = read_sequence(args.sequence)
    m = args.message_length
    if m is None:
        m = max([s.index for s in sequence if not s.is_learning], default=1)
    alphabet = switch_alphabet(m)
    bettor = bettor_from_spec(spec, alphabet, build_budget(args))
    trajectory = run_bettor(bettor, sequence, alphabet)
    LOGGER.info("Final capital of %s: %s", bettor.name, trajectory[-1])
    _print_or_write_csv(
        args.output_file, ("position", "numerator", "denominator"), trajectory_rows(trajectory)
    )


def run_learn(args: Any) -> None:
    rows = parse_samples(read_text(args.samples, "sample file"))
    samples: List[Sample] = [Sample(r["x"], r["y"], r["n"], r["b"]) for r in rows]
    trace = LearnerTrace(budget=build_budget(args), scan_cap=args.scan_cap)
    state = trace.feed(samples)
    LOGGER.info(
        "Guess %s after %s mind changes%s",
        state.guess_index,
        state.mind_changes,
        " (class exhausted)" if state.class_exhausted else "",
    )
    _print_or_write_csv(
        args.output_file,
        ("round", "x", "y", "b", "guess_index", "mind_changes"),
        learner_trace_rows(trace.states),
    )


COMMANDS = {
    "chsh": run_chsh,
    "protocol": run_protocol_command,
    "diagonal": run_diagonal,
    "bettors": run_bettors,
    "learn": run_learn,
}


def main() -> None:
    args = parser.parse_args()

    if args.debug:
        LOGGER.setLevel(logging.DEBUG)

    LOGGER.debug("Args are %s", args)

    # Modify logging format to add the command and its input
    context = {"command": args.command}
    for key in ("seed", "horizon", "config", "samples", "length"):
        if getattr(args, key, None) is not None:
            context[key] = str(getattr(args, key))
    for handler in LOGGER.handlers:
        handler.setFormatter(
            logging.Formatter(
                f"%(asctime)s [%(levelname)s] {json.dumps(context)} %(message)s"
            )
        )

    try:
        COMMANDS[args.command](args)
    except (HiddenSignalError, argparse.ArgumentTypeError) as e:
        LOGGER.error("Exiting with error", exc_info=e)
        print(json.dumps({"error": type(e).__name__, "message": str(e)}))
        sys.exit(1)


if __name__ == "__main__":
    main()
