from dataclasses import dataclass, field, asdict
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Optional, Dict, Tuple, Any

import typing_extensions


class HiddenSignalError(Exception):
    pass


class ParseException(HiddenSignalError):
    pass


class ValidationError(HiddenSignalError):
    pass


class InvalidBet(ValidationError):
    pass


class StrategyError(HiddenSignalError):
    """
    A strategy could not produce a bet for a position (for instance, its
    program ran out of fuel). Callers degrade it to an even bet.
    """


class BoxMisconfigured(HiddenSignalError):
    pass


class LearnerError(HiddenSignalError):
    pass


class ConfigurationError(HiddenSignalError):
    pass


class InsufficientData(HiddenSignalError):
    pass


Bit: typing_extensions.TypeAlias = int

# Length-5 programs, where the PR box response lives, start above 8.6 million
DEFAULT_SCAN_CAP = 10**9


def validate_bit(value: Any, name: str) -> int:
    if value not in (0, 1) or isinstance(value, bool):
        raise ValidationError(f"{name} must be 0 or 1, got {value!r}")
    return value


class TimeFunction(str, Enum):
    linear = "n"
    n_log_n = "nlogn"
    quadratic = "n2"
    cubic = "n3"

    def evaluate(self, n: int) -> int:
        """
        >>> [TimeFunction.n_log_n.evaluate(n) for n in (0, 1, 2, 5)]
        [0, 0, 2, 15]
        """
        if self is TimeFunction.linear:
            return n
        if self is TimeFunction.n_log_n:
            # integer ceil(log2(n))
            return n * (n - 1).bit_length() if n > 0 else 0
        if self is TimeFunction.quadratic:
            return n * n
        return n * n * n


@dataclass(frozen=True)
class ExecBudget:
    """
    Fuel granted to a program on round n: c_fuel * ceil(scale * t(n)) + d_fuel
    """

    time_function: TimeFunction = TimeFunction.quadratic
    scale: Fraction = Fraction(1)
    c_fuel: int = 10
    d_fuel: int = 100

    def __post_init__(self):
        object.__setattr__(self, "time_function", TimeFunction(self.time_function))
        object.__setattr__(self, "scale", Fraction(self.scale))
        if self.scale <= 0:
            raise ValidationError(f"Budget scale must be positive, got {self.scale}")
        if self.c_fuel < 0:
            raise ValidationError(f"c_fuel must be non-negative, got {self.c_fuel}")
        # fuel(0) == d_fuel, so this keeps fuel >= 1 everywhere
        if self.d_fuel < 1:
            raise ValidationError(f"d_fuel must be at least 1, got {self.d_fuel}")

    def fuel(self, n: int) -> int:
        """
        >>> ExecBudget().fuel(0), ExecBudget().fuel(3)
        (100, 190)
        """
        scaled = self.scale * self.time_function.evaluate(n)
        # ceil for Fractions
        return self.c_fuel * -(-scaled.numerator // scaled.denominator) + self.d_fuel

    def to_dict(self) -> Dict[str, Any]:
        return {
            "time_function": self.time_function.value,
            "scale": str(self.scale),
            "c_fuel": self.c_fuel,
            "d_fuel": self.d_fuel,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExecBudget":
        try:
            return cls(
                time_function=TimeFunction(data.get("time_function", "n2")),
                scale=Fraction(str(data.get("scale", 1))),
                c_fuel=int(data.get("c_fuel", 10)),
                d_fuel=int(data.get("d_fuel", 100)),
            )
        except (ValueError, TypeError) as e:
            raise ValidationError(f"Invalid budget {data}: {e}") from e


class SymbolKind(str, Enum):
    learn = "L"
    signal = "S"


@dataclass(frozen=True)
class SwitchSymbol:
    """
    One symbol of the shared switching sequence: a learning pair (x, y) or
    the index i (1-based) of a message bit.
    """

    kind: SymbolKind
    x: Optional[int] = None
    y: Optional[int] = None
    index: Optional[int] = None

    @classmethod
    def learn(cls, x: int, y: int) -> "SwitchSymbol":
        validate_bit(x, "x")
        validate_bit(y, "y")
        return cls(SymbolKind.learn, x=x, y=y)

    @classmethod
    def signal(cls, index: int) -> "SwitchSymbol":
        if index < 1:
            raise ValidationError(f"Signal index must be at least 1, got {index}")
        return cls(SymbolKind.signal, index=index)

    @property
    def is_learning(self) -> bool:
        return self.kind is SymbolKind.learn

    def sort_key(self) -> Tuple[int, int]:
        if self.is_learning:
            return (0, 2 * self.x + self.y)
        return (1, self.index)

    def __str__(self):
        """
        >>> str(SwitchSymbol.learn(0, 1)), str(SwitchSymbol.signal(3))
        ('L 0 1', 'S 3')
        """
        if self.is_learning:
            return f"L {self.x} {self.y}"
        return f"S {self.index}"

    @classmethod
    def parse(cls, text: str) -> "SwitchSymbol":
        """
        >>> SwitchSymbol.parse("L 1 0") == SwitchSymbol.learn(1, 0)
        True
        >>> SwitchSymbol.parse(" S 2 ") == SwitchSymbol.signal(2)
        True
        """
        pieces = text.split()
        try:
            if pieces and pieces[0] == "L" and len(pieces) == 3:
                return cls.learn(int(pieces[1]), int(pieces[2]))
            if pieces and pieces[0] == "S" and len(pieces) == 2:
                return cls.signal(int(pieces[1]))
        except (ValueError, ValidationError) as e:
            raise ParseException(f"Invalid switching symbol '{text}': {e}") from e
        raise ParseException(f"Invalid switching symbol '{text}'")


class SwitchSource(str, Enum):
    file = "file"
    diagonal = "diagonal"


@dataclass
class ProtocolConfig:
    """
    Parameters of one run of the signaling protocol
    """

    message: Tuple[int, ...]
    horizon: int
    budget: ExecBudget = field(default_factory=ExecBudget)
    source: SwitchSource = SwitchSource.diagonal
    sequence_file: Optional[Path] = None
    # programs of index < family_size feed the diagonal bettor family
    family_size: int = 200
    # None disables the per-symbol frequency bettors of the diagonal source
    frequency_fraction: Optional[Fraction] = Fraction(1, 2)
    window: int = 5
    scan_cap: int = DEFAULT_SCAN_CAP

    def __post_init__(self):
        self.message = tuple(self.message)
        for bit in self.message:
            validate_bit(bit, "message bit")
        if len(self.message) < 1:
            raise ValidationError("The message needs at least one bit")
        if self.horizon < 1:
            raise ValidationError(f"horizon must be at least 1, got {self.horizon}")
        if self.window < 1:
            raise ValidationError(f"window must be at least 1, got {self.window}")
        if self.family_size < 1:
            raise ValidationError(
                f"family_size must be at least 1, got {self.family_size}"
            )
        self.source = SwitchSource(self.source)
        if self.source is SwitchSource.file and self.sequence_file is None:
            raise ValidationError("A file switching source needs a sequence_file")
        if self.frequency_fraction is not None:
            self.frequency_fraction = Fraction(self.frequency_fraction)
            if not 0 < self.frequency_fraction <= 1:
                raise ValidationError(
                    f"frequency_fraction must be in (0, 1], got {self.frequency_fraction}"
                )

    @property
    def m(self) -> int:
        return len(self.message)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "message": "".join(str(b) for b in self.message),
            "horizon": self.horizon,
            "budget": self.budget.to_dict(),
            "source": self.source.value,
            "sequence_file": str(self.sequence_file) if self.sequence_file else None,
            "family_size": self.family_size,
            "frequency_fraction": (
                str(self.frequency_fraction)
                if self.frequency_fraction is not None
                else None
            ),
            "window": self.window,
            "scan_cap": self.scan_cap,
        }

    @classmethod
    def from_dict(
        cls, data: Dict[str, Any], base_path: Optional[Path] = None
    ) -> "ProtocolConfig":
        """
        Builds the config from a decoded JSON object. Relative sequence files
        are resolved against base_path.
        """
        try:
            message_text = str(data["message"])
            if not message_text or set(message_text) - {"0", "1"}:
                raise ValidationError(f"message must be a bit string, got {message_text}")
            sequence_file = data.get("sequence_file")
            if sequence_file is not None:
                sequence_file = Path(sequence_file)
                if base_path is not None and not sequence_file.is_absolute():
                    sequence_file = base_path / sequence_file
            fraction = data.get("frequency_fraction", "1/2")
            return cls(
                message=tuple(int(c) for c in message_text),
                horizon=int(data["horizon"]),
                budget=ExecBudget.from_dict(data.get("budget", {})),
                source=SwitchSource(data.get("source", "diagonal")),
                sequence_file=sequence_file,
                family_size=int(data.get("family_size", 200)),
                frequency_fraction=(
                    Fraction(str(fraction)) if fraction is not None else None
                ),
                window=int(data.get("window", 5)),
                scan_cap=int(data.get("scan_cap", DEFAULT_SCAN_CAP)),
            )
        except KeyError as e:
            raise ValidationError(f"Missing protocol config key {e}") from e
        except (ValueError, TypeError) as e:
            raise ValidationError(f"Invalid protocol config: {e}") from e


@dataclass
class ExperimentConfig:
    """
    Holds a CHSH estimation run: the coin seed, the number of rounds and the
    box manifest
    """

    seed: int
    horizon: int
    box_manifest: Dict[str, Any]
    output: Optional[Path] = None

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must fit in 64 bits, got {self.seed}")
        if self.horizon < 1:
            raise ValidationError(f"horizon must be at least 1, got {self.horizon}")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["output"] = str(self.output) if self.output else None
        return data


@dataclass(frozen=True)
class RoundRecord:
    """
    What happened on round n of a protocol run
    """

    n: int
    symbol: SwitchSymbol
    x_in: int
    y_in: int
    a_out: int
    b_out: int
    guess_index: int
    # (bit index, decoded value), bit index is 1-based like the symbols
    decoded: Optional[Tuple[int, int]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "symbol": str(self.symbol),
            "x_in": self.x_in,
            "y_in": self.y_in,
            "a_out": self.a_out,
            "b_out": self.b_out,
            "guess_index": self.guess_index,
            "decoded": list(self.decoded) if self.decoded else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RoundRecord":
        decoded = data.get("decoded")
        return cls(
            n=data["n"],
            symbol=SwitchSymbol.parse(data["symbol"]),
            x_in=data["x_in"],
            y_in=data["y_in"],
            a_out=data["a_out"],
            b_out=data["b_out"],
            guess_index=data["guess_index"],
            decoded=tuple(decoded) if decoded else None,
        )
