"""Scenario scripts: timed stimulus commands plus expectation checks.

A ``.scn`` file is line-oriented: optional ``seed N`` and ``duration S``
directives, then one timed event per line, ``<at-seconds> <command...>``,
sorted by time.  ``#`` starts a comment.  Signals may be referenced by
full name or by any unambiguous suffix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .bus import Kind, SignalBus, UnknownSignal
from .plant.vehicles import VehicleKind
from .plant.world import World

BUTTON_PULSE_SECONDS = 0.05


class ScenarioError(Exception):
    pass


class NotAButton(ScenarioError):
    pass


SPAWN_KINDS = {
    "high_truck": VehicleKind.HIGH_TRUCK,
    "stationary": VehicleKind.STATIONARY,
    "wrongway": VehicleKind.WRONG_WAY,
    "speeding": VehicleKind.SPEEDING,
}


@dataclass(frozen=True)
class Expect:
    signal: str
    value: bool
    within: float


@dataclass
class ScenarioEvent:
    at: float
    command: Tuple
    raw: str


@dataclass
class ScenarioScript:
    seed: Optional[int] = None
    duration: Optional[float] = None
    events: List[ScenarioEvent] = field(default_factory=list)


def parse_command(parts: List[str]) -> Tuple:
    """Parse one command token list into its tagged tuple form."""
    if not parts:
        raise ScenarioError("empty command")
    name, args = parts[0], parts[1:]
    if name == "press":
        if len(args) != 1:
            raise ScenarioError("press takes one button signal")
        return ("press", args[0])
    if name == "set_smoke":
        if len(args) != 2:
            raise ScenarioError("set_smoke takes <tube> <0..8>")
        level = int(args[1])
        if not 0 <= level <= 8:
            raise ScenarioError("smoke level must be 0..8")
        return ("set_smoke", int(args[0]), level)
    if name == "traffic":
        if args not in (["on"], ["off"]):
            raise ScenarioError("traffic takes on|off")
        return ("traffic", args[0] == "on")
    if name == "spawn":
        if len(args) != 2 or args[0] not in SPAWN_KINDS:
            raise ScenarioError("spawn takes high_truck|stationary|wrongway|speeding <lane>")
        return ("spawn", SPAWN_KINDS[args[0]], args[1])
    if name == "fill_cellar":
        if len(args) != 2:
            raise ScenarioError("fill_cellar takes <name> <inflow m/s>")
        return ("fill_cellar", args[0], float(args[1]))
    if name == "set_light_intensity":
        if len(args) != 1:
            raise ScenarioError("set_light_intensity takes <intensity>")
        return ("set_light_intensity", float(args[0]))
    if name == "toggle":
        if len(args) != 1:
            raise ScenarioError("toggle takes <entity>[/<element>]")
        return ("toggle", args[0])
    if name == "delete_traffic":
        if args:
            raise ScenarioError("delete_traffic takes no arguments")
        return ("delete_traffic",)
    if name == "expect":
        if len(args) != 5 or args[1] != "==" or args[3] != "within":
            raise ScenarioError("expect takes <signal> == 0|1 within <seconds>")
        if args[2] not in ("0", "1"):
            raise ScenarioError("expected value must be 0 or 1")
        within = float(args[4])
        if within <= 0:
            raise ScenarioError("expect window must be positive")
        return ("expect", Expect(args[0], args[2] == "1", within))
    raise ScenarioError(f"unknown command {name!r}")


def parse_scenario(text: str) -> ScenarioScript:
    script = ScenarioScript()
    last_at = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        try:
            if parts[0] == "seed":
                script.seed = int(parts[1])
                continue
            if parts[0] == "duration":
                script.duration = float(parts[1])
                continue
            at = float(parts[0])
            command = parse_command(parts[1:])
        except (ScenarioError, ValueError, IndexError) as exc:
            raise ScenarioError(f"line {lineno}: {exc}") from None
        if at < 0:
            raise ScenarioError(f"line {lineno}: negative event time")
        if last_at is not None and at < last_at:
            raise ScenarioError(f"line {lineno}: events must be time-sorted")
        last_at = at
        script.events.append(ScenarioEvent(at, command, body))
    return script


def resolve_signal(bus: SignalBus, token: str) -> str:
    """Full signal name from an exact name or an unambiguous suffix."""
    if token in bus:
        return token
    matches = [s.name for s in bus.signals()
               if s.name.endswith("_" + token) or s.name == token]
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise UnknownSignal(token)
    raise ScenarioError(f"{token!r} is ambiguous: {', '.join(matches)}")


def pulse_ticks(tick_rate: int) -> int:
    """Button pulses last 0.05 s rounded up to whole ticks, never shorter."""
    return math.ceil(BUTTON_PULSE_SECONDS * tick_rate - 1e-9)


class CommandExecutor:
    """Applies scenario commands to a world at tick boundaries.

    ``press`` schedules the falling edge of its pulse; the harness loop
    flushes those through :meth:`due_releases`.
    """

    def __init__(self, world: World):
        self.world = world
        self._releases: List[Tuple[float, str]] = []

    def execute(self, command: Tuple, now: float) -> Optional[Expect]:
        kind = command[0]
        if kind == "press":
            name = resolve_signal(self.world.bus, command[1])
            if self.world.bus.definition(name).kind is not Kind.BUTTON:
                raise NotAButton(name)
            self.world.bus.write(name, True, now)
            release_at = now + pulse_ticks(self.world.tick_rate) / self.world.tick_rate
            self._releases.append((release_at, name))
            return None
        if kind == "set_smoke":
            self.world.set_smoke(command[1], command[2])
        elif kind == "traffic":
            self.world.set_traffic(command[1])
        elif kind == "spawn":
            lane = self._lane_key(command[2], command[1])
            self.world.spawn(command[1], lane)
        elif kind == "fill_cellar":
            self.world.fill_cellar(command[1], command[2])
        elif kind == "set_light_intensity":
            self.world.set_light_intensity(command[1])
        elif kind == "toggle":
            self.world.toggle(command[1])
        elif kind == "delete_traffic":
            self.world.delete_traffic()
        elif kind == "expect":
            expect = command[1]
            return Expect(resolve_signal(self.world.bus, expect.signal),
                          expect.value, expect.within)
        else:
            raise ScenarioError(f"unknown command {kind!r}")
        return None

    def _lane_key(self, token: str, kind: VehicleKind) -> str:
        if token in self.world.lanes:
            if kind is VehicleKind.WRONG_WAY and self.world.lanes[token].direction > 0:
                raise ScenarioError(f"lane {token!r} is not a wrong-way overlay")
            return token
        # "1" or "2" pick the tube's default lane for the vehicle kind.
        if token in ("1", "2"):
            tube = int(token)
            suffix = "wrong" if kind is VehicleKind.WRONG_WAY else "lane0"
            key = f"tube{tube}_{suffix}"
            if key in self.world.lanes:
                return key
        raise ScenarioError(f"unknown lane {token!r}")

    def due_releases(self, now: float) -> List[str]:
        due = [name for at, name in self._releases if at <= now + 1e-9]
        self._releases = [(at, n) for at, n in self._releases if at > now + 1e-9]
        for name in due:
            self.world.bus.write(name, False, now)
        return due
