"""Data model for guarded-transition controller specifications.

A spec is a set of automata, each with locations, discrete Booleans,
read-only input Booleans, continuous timers (rate 1/s) and events.  Edges
guard on expressions over those symbols, update owner variables and may
jump to another location.  Events synchronize across every automaton that
uses them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple


class GtsError(Exception):
    """Base class for controller spec faults, carrying source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        if line:
            message = f"line {line}:{col}: {message}"
        super().__init__(message)


class GtsParseError(GtsError):
    pass


class UndeclaredIdentifier(GtsError):
    pass


class AssignToInput(GtsError):
    pass


class InputMissing(GtsError):
    """Scan invoked without a value for a declared input Boolean."""


# -- expressions ------------------------------------------------------------
# Bindings attached during resolution: ("disc"|"input"|"timer", automaton, name)
# or ("loc", automaton, location).


@dataclass
class Expr:
    line: int = 0
    col: int = 0


@dataclass
class Lit(Expr):
    value: bool = False


@dataclass
class Num(Expr):
    value: float = 0.0


@dataclass
class Ref(Expr):
    path: str = ""
    binding: Optional[Tuple[str, str, str]] = None


@dataclass
class Not(Expr):
    operand: Expr = None  # type: ignore[assignment]


@dataclass
class BinOp(Expr):
    op: str = ""
    left: Expr = None  # type: ignore[assignment]
    right: Expr = None  # type: ignore[assignment]


@dataclass
class Assignment:
    target: Tuple[str, str, str]  # ("disc"|"timer", automaton, name)
    expr: Expr
    line: int = 0


@dataclass
class Edge:
    owner: str
    location: str
    event: Optional[Tuple[str, str]]  # (owner automaton, event name)
    guard: Optional[Expr]
    updates: List[Assignment]
    goto: Optional[str]
    line: int = 0
    decl_index: int = 0

    @property
    def label(self) -> str:
        event = f" {self.event[0]}.{self.event[1]}" if self.event else ""
        return f"{self.owner} edge#{self.decl_index}{event} (line {self.line})"


@dataclass
class Automaton:
    name: str
    locations: List[str] = field(default_factory=list)
    initial_location: str = ""
    disc_bools: Dict[str, bool] = field(default_factory=dict)  # name -> initial
    input_bools: List[str] = field(default_factory=list)
    timers: List[str] = field(default_factory=list)
    events: Dict[str, str] = field(default_factory=dict)  # name -> controllability
    edges: List[Edge] = field(default_factory=list)


@dataclass
class GtsSpec:
    automata: List[Automaton] = field(default_factory=list)

    def automaton(self, name: str) -> Automaton:
        for aut in self.automata:
            if aut.name == name:
                return aut
        raise KeyError(name)

    @property
    def all_edges(self) -> List[Edge]:
        edges: List[Edge] = []
        for aut in self.automata:
            edges.extend(aut.edges)
        edges.sort(key=lambda e: e.decl_index)
        return edges

    def event_participants(self, event: Tuple[str, str]) -> List[str]:
        """Automata with at least one edge labeled with the event."""
        return [
            aut.name
            for aut in self.automata
            if any(e.event == event for e in aut.edges)
        ]

    def output_key(self, automaton: str, name: str) -> str:
        """Bare discrete-Boolean name, qualified only on collision."""
        owners = [a.name for a in self.automata if name in a.disc_bools]
        if len(owners) == 1:
            return name
        return f"{automaton}.{name}"

    def declared_input_names(self) -> List[str]:
        names: List[str] = []
        for aut in self.automata:
            for name in aut.input_bools:
                if name not in names:
                    names.append(name)
        return names


@dataclass
class Livelock:
    edge: str
    iterations: int


@dataclass
class ScanReport:
    edges_fired: List[str] = field(default_factory=list)
    outputs_changed: List[Tuple[str, bool]] = field(default_factory=list)
    livelock: Optional[Livelock] = None


@dataclass
class GtsState:
    locations: Dict[str, str] = field(default_factory=dict)
    bools: Dict[Tuple[str, str], bool] = field(default_factory=dict)
    timers: Dict[Tuple[str, str], float] = field(default_factory=dict)
    scan_count: int = 0

    def copy(self) -> "GtsState":
        return GtsState(
            locations=dict(self.locations),
            bools=dict(self.bools),
            timers=dict(self.timers),
            scan_count=self.scan_count,
        )
