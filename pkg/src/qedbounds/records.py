"""Bound records and the ledger of bound constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigurationError

PROVENANCES = ("paper-explicit", "calibrated", "user")

# Optimized A^2 trial-state energy over alpha^{2/7} Lambda^{12/7} at
# alpha = 100, Lambda = 10, L = 2 pi, where the optimal profile is localized.
# Reproduced by qedbounds.quad.calibrate_nonrel_upper (scripts/calibrate_constants.py).
CALIBRATED_NONREL_UPPER = 0.47392822806506996

DEFAULT_CONSTANTS = {
    "c_nonrel_lower": (1 / (3 * math.pi * math.sqrt(2)), "paper-explicit"),
    "c_rel_upper": (1 / math.sqrt(4 * math.pi), "paper-explicit"),
    "c_lt": (0.00127, "paper-explicit"),
    "c_nonrel_upper": (CALIBRATED_NONREL_UPPER, "calibrated"),
}

# Constants a bound evaluator may ask for.  Those without a default must be
# supplied by the user before the corresponding bound can be evaluated.
KNOWN_CONSTANTS = tuple(sorted(set(DEFAULT_CONSTANTS) | {
    "c_pauli_upper", "c_pauli_lower_small", "c_pauli_lower_large",
    "c_rel_lower_small", "c_rel_lower_large",
}))


@dataclass(frozen=True)
class Constant:
    value: float
    provenance: str

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value > 0):
            raise ConfigurationError(f"constants must be finite and > 0, got {self.value}")
        if self.provenance not in PROVENANCES:
            raise ConfigurationError(f"unknown provenance {self.provenance!r}")


class ConstantsSet:
    """Named positive constants, each tagged with where it came from.

    >>> cs = ConstantsSet.defaults().with_overrides({"c_pauli_upper": 1.0})
    >>> cs["c_pauli_upper"], cs.provenance("c_pauli_upper")
    (1.0, 'user')
    """

    def __init__(self, entries: dict[str, Constant] | None = None):
        self._entries = dict(entries or {})

    @classmethod
    def defaults(cls) -> "ConstantsSet":
        return cls({name: Constant(v, p) for name, (v, p) in DEFAULT_CONSTANTS.items()})

    def with_overrides(self, values: dict[str, float], provenance: str = "user") -> "ConstantsSet":
        new = dict(self._entries)
        for name, v in values.items():
            new[name] = Constant(float(v), provenance)
        return ConstantsSet(new)

    def __getitem__(self, name: str) -> float:
        try:
            return self._entries[name].value
        except KeyError:
            raise ConfigurationError(f"missing constant {name!r}") from None

    def __contains__(self, name):
        return name in self._entries

    def provenance(self, name: str) -> str:
        self[name]
        return self._entries[name].provenance

    def subset(self, *names: str) -> dict[str, tuple[float, str]]:
        return {n: (self[n], self.provenance(n)) for n in names}

    def names(self):
        return sorted(self._entries)

    def require(self, *names: str) -> None:
        missing = [n for n in names if n not in self._entries]
        if missing:
            raise ConfigurationError(f"missing constants: {', '.join(missing)}")


@dataclass
class BoundRecord:
    model: str  # nonrel | a2 | rel | pauli
    statistics: str  # single | boson | fermion
    side: str  # upper | lower
    value: float
    params: dict
    constants_used: dict = field(default_factory=dict)
    regime: str = ""
    aux: dict = field(default_factory=dict)
    degenerate: bool = False
    note: str = ""

    def __post_init__(self):
        if self.side not in ("upper", "lower"):
            raise ValueError(f"bad side {self.side!r}")
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite bound value for {self.model}/{self.side}")
