"""Soft PLC: flat guarded-transition controllers with cyclic scan semantics."""

from .model import (  # noqa: F401
    Automaton,
    Edge,
    GtsError,
    GtsParseError,
    UndeclaredIdentifier,
    AssignToInput,
    InputMissing,
    GtsSpec,
    GtsState,
    Livelock,
    ScanReport,
)
from .parser import parse_gts  # noqa: F401
from .runtime import initial_state, scan, run_cyclic, LIVELOCK_CAP  # noqa: F401
