"""In-memory registry of named Boolean PLC signals.

Signals have a direction (input/output as seen from the PLC), a kind
(sensor, actuator or operator button) and belong to a group that mirrors the
entity path encoded in the variable name.  Writes are change-guarded: a
write of an equal value is a no-op, a flip bumps a per-signal sequence
counter and notifies subscribers in write order.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List


class Direction(Enum):
    INPUT = "IN"
    OUTPUT = "OUT"


class Kind(Enum):
    SENSOR = "sensor"
    ACTUATOR = "actuator"
    BUTTON = "button"


class BusError(Exception):
    """Base class for signal-bus faults."""


class DuplicateName(BusError):
    """Two logic components registered one PLC point: a wiring fault."""


class UnknownSignal(BusError):
    pass


class UnknownGroup(BusError):
    pass


class BadTemplate(BusError):
    """Naming-rule template without exactly one placeholder."""


class InvalidSignal(BusError):
    """Signal definition violating the direction/kind/prefix coupling."""


PLACEHOLDER = "{{IO_NAME}}"


@dataclass(frozen=True)
class NamingRule:
    """Address template containing the ``{{IO_NAME}}`` placeholder once."""

    template: str

    def __post_init__(self) -> None:
        if self.template.count(PLACEHOLDER) != 1:
            raise BadTemplate(
                f"template must contain {PLACEHOLDER} exactly once: {self.template!r}"
            )

    def resolve(self, name: str) -> str:
        return self.template.replace(PLACEHOLDER, name)


# Default rules: outputs live in the main program state, inputs in the GVL.
OUTPUT_RULE = NamingRule("MAIN.state0." + PLACEHOLDER)
INPUT_RULE = NamingRule("INPUTS." + PLACEHOLDER)


def resolve_address(name: str, rule: NamingRule) -> str:
    """Substitute the signal name into an address naming rule."""
    return rule.resolve(name)


def short_name(name: str) -> str:
    """Trailing role token of a full variable name.

    Full names encode the entity path positionally, e.g.
    ``dvar_M_M_HW_TrafficTube_1_BoomBarrier_2_a_open`` has the short name
    ``a_open``.  Buttons carry a ``button`` token instead of ``a_``/``s_``.
    """
    cut = max(name.rfind("_a_"), name.rfind("_s_"))
    if cut >= 0:
        return name[cut + 1 :]
    cut = name.rfind("_button")
    if cut >= 0:
        return name[cut + 1 :]
    return name


def derive_group(name: str) -> str:
    """Entity-path prefix of a full variable name (flat, underscore form)."""
    stem = name
    for prefix in ("ivar_M_M_HW_", "dvar_M_M_HW_", "ivar_M_M_", "dvar_M_M_", "ivar_", "dvar_"):
        if stem.startswith(prefix):
            stem = stem[len(prefix) :]
            break
    short = short_name(name)
    if stem.endswith("_" + short):
        return stem[: -(len(short) + 1)]
    if stem == short:
        return ""
    return stem


@dataclass(frozen=True)
class SignalDef:
    """A named Boolean PLC point with direction, kind and entity group."""

    name: str
    direction: Direction
    kind: Kind
    group: str = ""

    def __post_init__(self) -> None:
        if self.direction is Direction.INPUT:
            if self.kind is Kind.ACTUATOR:
                raise InvalidSignal(f"{self.name}: inputs are sensors or buttons")
            if not self.name.startswith("ivar"):
                raise InvalidSignal(f"{self.name}: input names must begin with 'ivar'")
        else:
            if self.kind is not Kind.ACTUATOR:
                raise InvalidSignal(f"{self.name}: outputs must be actuators")
            if not self.name.startswith("dvar"):
                raise InvalidSignal(f"{self.name}: output names must begin with 'dvar'")


@dataclass
class SignalLatch:
    """Stored value plus change bookkeeping for one signal."""

    value: bool = False
    last_changed: float = 0.0
    seq: int = 0


@dataclass(frozen=True)
class ChangeEvent:
    name: str
    value: bool
    time: float
    seq: int


Subscriber = Callable[[ChangeEvent], None]


class SignalBus:
    """Registry of signal latches shared between the plant and the gateway.

    Thread safety covers the supported single-writer-per-direction model:
    the plant thread writes inputs, the gateway writes outputs, reads may
    come from anywhere.
    """

    def __init__(self) -> None:
        self._defs: Dict[str, SignalDef] = {}
        self._latches: Dict[str, SignalLatch] = {}
        self._groups: Dict[str, List[str]] = {}
        self._subscribers: List[Subscriber] = []
        self._lock = threading.RLock()

    # -- registration -------------------------------------------------

    def register(self, definition: SignalDef) -> SignalDef:
        with self._lock:
            if definition.name in self._defs:
                raise DuplicateName(definition.name)
            self._defs[definition.name] = definition
            self._latches[definition.name] = SignalLatch()
            self._groups.setdefault(definition.group, []).append(definition.name)
        return definition

    def subscribe(self, callback: Subscriber) -> None:
        with self._lock:
            self._subscribers.append(callback)

    # -- access --------------------------------------------------------

    def definition(self, name: str) -> SignalDef:
        try:
            return self._defs[name]
        except KeyError:
            raise UnknownSignal(name) from None

    def latch(self, name: str) -> SignalLatch:
        try:
            return self._latches[name]
        except KeyError:
            raise UnknownSignal(name) from None

    def read(self, name: str) -> bool:
        return self.latch(name).value

    def __contains__(self, name: str) -> bool:
        return name in self._defs

    def __len__(self) -> int:
        return len(self._defs)

    def signals(self) -> List[SignalDef]:
        """All definitions in registration order."""
        with self._lock:
            return list(self._defs.values())

    def groups(self) -> List[str]:
        with self._lock:
            return list(self._groups)

    def group_signals(self, group: str) -> List[SignalDef]:
        with self._lock:
            try:
                names = self._groups[group]
            except KeyError:
                raise UnknownGroup(group) from None
            return [self._defs[n] for n in names]

    # -- mutation --------------------------------------------------------

    def write(self, name: str, value: bool, time: float = 0.0) -> bool:
        """Store ``value``; returns True iff it differed from the latch.

        Equal-value writes leave seq and last_changed untouched and emit
        no event (change-guarded, as the logic component scripts do).
        """
        with self._lock:
            latch = self.latch(name)
            if latch.value == value:
                return False
            latch.value = value
            latch.last_changed = time
            latch.seq += 1
            event = ChangeEvent(name, value, time, latch.seq)
            subscribers = list(self._subscribers)
        for callback in subscribers:
            callback(event)
        return True

    # -- queries -----------------------------------------------------------

    def count_true_actuators(self, group: str) -> int:
        """Number of true output signals in a group (``a_*`` short names).

        More than one commands a resource controller in two directions at
        once, which entities surface as a warning.
        """
        count = 0
        for sig in self.group_signals(group):
            if sig.direction is Direction.OUTPUT and short_name(sig.name).startswith("a"):
                if self.read(sig.name):
                    count += 1
        return count

    def snapshot(self) -> Dict[str, bool]:
        """Point-in-time copy of every latch, name-sorted for determinism."""
        with self._lock:
            return {name: self._latches[name].value for name in sorted(self._latches)}
