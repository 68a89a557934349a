"""
Readers and writers for every text format of the package: program texts,
switching sequences, sample and trajectory CSVs, JSON-lines transcripts and
JSON run configurations.
"""
import csv
import json
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence

from .betting import (
    Alphabet,
    Bettor,
    FrequencyStrategy,
    ProgramPredicate,
    even_strategy,
    fact1_bettor,
)
from .datamodels import (
    ConfigurationError,
    ExecBudget,
    ParseException,
    SwitchSymbol,
    validate_bit,
    ValidationError,
)
from .program_vm import Program, enumerate_program

LOGGER = logging.getLogger()

SAMPLE_HEADER = ("n", "x", "y", "b")


def read_text(path: Path, what: str = "file") -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise ConfigurationError(f"Cannot read {what} {path}: {e}") from e


def write_text(path: Path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise ConfigurationError(f"Cannot write {path}: {e}") from e
    LOGGER.info("Wrote %s", path)


def read_program(path: Path) -> Program:
    text = read_text(path, "program file")
    try:
        return Program.from_text(text)
    except ParseException as e:
        raise ParseException(f"{path}: {e}") from e


def parse_sequence(text: str) -> List[SwitchSymbol]:
    """
    One symbol per line, `L x y` or `S i`. Blank lines and `#` comments are
    ignored.
    >>> [str(s) for s in parse_sequence("L 0 1\\n# comment\\n\\nS 2\\n")]
    ['L 0 1', 'S 2']
    """
    symbols = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            symbols.append(SwitchSymbol.parse(line))
        except ParseException as e:
            raise ParseException(f"Line {line_number}: {e}") from e
    return symbols


def read_sequence(path: Path) -> List[SwitchSymbol]:
    return parse_sequence(read_text(path, "sequence file"))


def format_sequence(symbols: Iterable[SwitchSymbol]) -> str:
    return "".join(f"{symbol}\n" for symbol in symbols)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise ConfigurationError(f"Cannot write {path}: {e}") from e
    LOGGER.info("Wrote %s", path)


def parse_samples(text: str) -> List[Dict[str, int]]:
    """
    Rows of a sample CSV with columns n, x, y, b (in any order)
    """
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None or set(SAMPLE_HEADER) - set(reader.fieldnames):
        raise ParseException(
            f"Sample files need the columns {', '.join(SAMPLE_HEADER)}, got {reader.fieldnames}"
        )
    rows = []
    for line_number, row in enumerate(reader, start=2):
        try:
            values = {key: int(row[key]) for key in SAMPLE_HEADER}
            for key in ("x", "y", "b"):
                validate_bit(values[key], key)
        except (ValueError, ValidationError) as e:
            raise ParseException(f"Line {line_number}: {e}") from e
        rows.append(values)
    return rows


def write_jsonl(path: Path, lines: Iterable[str]) -> None:
    try:
        with open(path, "w") as f:
            for line in lines:
                f.write(line)
                f.write("\n")
    except OSError as e:
        raise ConfigurationError(f"Cannot write {path}: {e}") from e
    LOGGER.info("Wrote %s", path)


def read_json(path: Path) -> Dict[str, Any]:
    text = read_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseException(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ParseException(f"{path} must hold a JSON object")
    return data


def write_json(path: Path, data: Dict[str, Any]) -> None:
    write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def resolved_config_path(output: Path) -> Path:
    """
    >>> str(resolved_config_path(Path("runs/pr.jsonl")))
    'runs/pr.jsonl.config.json'
    """
    return output.with_name(output.name + ".config.json")


def write_resolved_config(output: Path, config: Dict[str, Any]) -> Path:
    path = resolved_config_path(Path(output))
    write_json(path, config)
    return path


def parse_fraction(text: Any) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as e:
        raise ParseException(f"'{text}' is not a fraction") from e


def bettor_from_spec(spec: Dict[str, Any], alphabet: Alphabet, budget: ExecBudget) -> Bettor:
    """
    Builds a bettor over switching symbols from a JSON object:

        {"kind": "even"}
        {"kind": "fact1", "program": 5, "gamma": ["S 1"], "m_threshold": 0}
        {"kind": "frequency", "symbol": "L 0 0", "fraction": "1/2"}

    Every kind accepts an "initial_capital" (default 1).
    """
    kind = spec.get("kind")
    initial_capital = parse_fraction(spec.get("initial_capital", 1))
    try:
        if kind == "even":
            return Bettor(even_strategy, initial_capital, name="even")
        if kind == "fact1":
            program = enumerate_program(int(spec["program"]))
            g = ProgramPredicate(
                program, budget, x=int(spec.get("x", 0)), y=int(spec.get("y", 0))
            )
            gamma = [SwitchSymbol.parse(text) for text in spec["gamma"]]
            return fact1_bettor(
                g,
                gamma,
                alphabet,
                m_threshold=int(spec.get("m_threshold", 0)),
                initial_capital=initial_capital,
                name=f"fact1(p{program.index})",
            )
        if kind == "frequency":
            symbol = SwitchSymbol.parse(spec["symbol"])
            strategy = FrequencyStrategy(
                alphabet.index(symbol), parse_fraction(spec.get("fraction", "1/2"))
            )
            return Bettor(strategy, initial_capital, name=f"frequency({symbol})")
    except KeyError as e:
        raise ParseException(f"Bettor spec {spec} misses the key {e}") from e
    except (TypeError, ValueError) as e:
        raise ParseException(f"Invalid bettor spec {spec}: {e}") from e
    raise ParseException(f"Unknown bettor kind {kind!r}, expected even, fact1 or frequency")
