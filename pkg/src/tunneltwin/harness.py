"""Scenario runner: couples world, controller and scenario on one timeline.

The plant ticks at its configured rate and the PLC scans at its cycle
period on a shared microsecond grid; when both land on the same instant
the plant goes first.  Scenario commands apply at the next tick boundary.
Every signal flip is recorded; re-running a seed and scenario reproduces
the trace byte for byte.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

from .bus import BusError, ChangeEvent
from .gateway import (
    BindingError,
    ConnectionLost,
    InprocBinding,
    PlcRuntime,
    PolicyMismatch,
    ProtocolError,
    TcpBinding,
)
from .gts import GtsError, parse_gts
from .gts.model import Livelock
from .plant.world import World, WorldConfigError, build_world
from .scenario import (
    CommandExecutor,
    Expect,
    ScenarioError,
    ScenarioScript,
)
from .varlist import PolicyManifest, policy_from_defs

EXIT_OK = 0
EXIT_EXPECT_FAILED = 1
EXIT_LIVELOCK = 2
EXIT_CONFIG = 3


@dataclass
class TraceRow:
    time: float
    signal: str
    value: bool


@dataclass
class Verdict:
    expect: Expect
    passed: bool
    at: float  # satisfaction time, or the window end on failure


@dataclass
class RunResult:
    trace: List[TraceRow] = field(default_factory=list)
    verdicts: List[Verdict] = field(default_factory=list)
    livelock: Optional[Livelock] = None
    error: Optional[str] = None
    exit_code: int = EXIT_OK
    world: Optional[World] = None

    def trace_csv(self) -> str:
        lines = ["time,signal,value"]
        for row in self.trace:
            lines.append(f"{row.time:.6f},{row.signal},{int(row.value)}")
        return "\n".join(lines) + "\n"


class TraceRecorder:
    def __init__(self, world: World):
        self.rows: List[TraceRow] = []
        world.bus.subscribe(self._on_change)

    def _on_change(self, event: ChangeEvent) -> None:
        self.rows.append(TraceRow(event.time, event.name, event.value))


@dataclass
class _Watch:
    expect: Expect
    deadline: float


class Session:
    """A prepared run: world + optional controller binding + scenario."""

    def __init__(
        self,
        world_config: Optional[dict] = None,
        scenario: Optional[ScenarioScript] = None,
        spec_text: Optional[str] = None,
        plc_address: Optional[Tuple[str, int]] = None,
        cycle_ms: float = 10.0,
        duration: Optional[float] = None,
        check_invariants: bool = True,
    ):
        config = dict(world_config or {})
        self.scenario = scenario or ScenarioScript()
        if self.scenario.seed is not None:
            config["seed"] = self.scenario.seed
        self.world = build_world(config, initialize=False)
        self.recorder = TraceRecorder(self.world)
        self.world.initialize()
        self.executor = CommandExecutor(self.world)
        self.policy: PolicyManifest = policy_from_defs(self.world.bus.signals())
        self.cycle_period_us = max(1, round(cycle_ms * 1000))
        self.check = check_invariants
        self.binding = None
        self.livelock: Optional[Livelock] = None
        self.error: Optional[str] = None
        if spec_text is not None and plc_address is not None:
            raise WorldConfigError("give either a controller spec or a PLC address")
        if spec_text is not None:
            spec = parse_gts(spec_text)
            runtime = PlcRuntime(spec, self.policy,
                                 cycle_period=self.cycle_period_us / 1e6)
            self.binding = InprocBinding(self.world.bus, runtime)
        elif plc_address is not None:
            host, port = plc_address
            self.binding = TcpBinding(self.world.bus, self.policy, host, port)
        explicit = duration if duration is not None else self.scenario.duration
        if explicit is None:
            last = max((e.at for e in self.scenario.events), default=0.0)
            explicit = last + 10.0
        self.duration = explicit
        self.verdicts: List[Verdict] = []
        self._watches: List[_Watch] = []
        self._pending = list(self.scenario.events)
        self._cycle_index = 0

    # -- command plumbing shared with the WebSocket API ------------------

    def apply_command(self, command: Tuple, now: float) -> None:
        watch = self.executor.execute(command, now)
        if watch is not None:
            self._watches.append(_Watch(watch, now + watch.within))
            self._check_watches(now)

    def _apply_due_events(self, now: float) -> None:
        while self._pending and self._pending[0].at <= now + 1e-9:
            event = self._pending.pop(0)
            self.apply_command(event.command, now)
        self.executor.due_releases(now)

    def _check_watches(self, now: float) -> None:
        still: List[_Watch] = []
        for watch in self._watches:
            if self.world.bus.read(watch.expect.signal) == watch.expect.value:
                self.verdicts.append(Verdict(watch.expect, True, now))
            elif now >= watch.deadline - 1e-9:
                self.verdicts.append(Verdict(watch.expect, False, watch.deadline))
            else:
                still.append(watch)
        self._watches = still

    # -- the master loop ---------------------------------------------------

    def run(
        self,
        realtime: bool = False,
        on_tick: Optional[Callable[["Session"], None]] = None,
    ) -> RunResult:
        world = self.world
        dt_us = round(1_000_000 / world.tick_rate)
        cycle_us = self.cycle_period_us
        end_us = round(self.duration * 1_000_000)
        next_tick = dt_us
        next_cycle = cycle_us
        started = _time.monotonic()

        fault: Optional[str] = None
        try:
            self._apply_due_events(0.0)
        except (ScenarioError, BusError) as exc:
            fault = str(exc)
        now_us = 0
        while now_us < end_us and fault is None:
            now_us = min(next_tick, next_cycle)
            if realtime:
                lag = now_us / 1e6 - (_time.monotonic() - started)
                if lag > 0:
                    _time.sleep(lag)
            if now_us == next_tick:
                world.step()
                if self.check:
                    world.check_invariants()
                self._check_watches(world.sim_time)
                try:
                    self._apply_due_events(world.sim_time)
                except (ScenarioError, BusError) as exc:
                    fault = str(exc)
                    break
                self._check_watches(world.sim_time)
                next_tick += dt_us
                if on_tick is not None:
                    on_tick(self)
            if now_us == next_cycle:
                if self.binding is not None:
                    self._cycle_index += 1
                    sim_time = now_us / 1e6
                    try:
                        report = self.binding.step(self._cycle_index, sim_time)
                    except ConnectionLost as exc:
                        # The plant keeps simulating; outputs stay frozen.
                        self.error = f"connection lost: {exc}"
                        self.binding = None
                        report = None
                    if report is not None and report.livelock is not None:
                        self.livelock = report.livelock
                        break
                    self._check_watches(now_us / 1e6)
                next_cycle += cycle_us

        for watch in self._watches:
            self.verdicts.append(Verdict(watch.expect, False, watch.deadline))
        self._watches = []

        result = RunResult(
            trace=self.recorder.rows,
            verdicts=self.verdicts,
            livelock=self.livelock,
            error=fault or self.error,
            world=world,
        )
        if fault is not None:
            result.exit_code = EXIT_CONFIG
        elif self.livelock is not None:
            result.exit_code = EXIT_LIVELOCK
        elif any(not v.passed for v in self.verdicts):
            result.exit_code = EXIT_EXPECT_FAILED
        return result

    def close(self) -> None:
        if self.binding is not None:
            self.binding.close()
            self.binding = None


def run(
    world_config: Optional[dict] = None,
    scenario: Optional[ScenarioScript] = None,
    spec_text: Optional[str] = None,
    plc_address: Optional[Tuple[str, int]] = None,
    cycle_ms: float = 10.0,
    duration: Optional[float] = None,
    realtime: bool = False,
    check_invariants: bool = True,
    on_tick: Optional[Callable[[Session], None]] = None,
) -> RunResult:
    """Run a scenario to completion; see module docstring for semantics.

    Configuration and policy faults surface as ``RunResult.exit_code == 3``
    with the error message, matching the CLI contract.
    """
    try:
        session = Session(
            world_config=world_config,
            scenario=scenario,
            spec_text=spec_text,
            plc_address=plc_address,
            cycle_ms=cycle_ms,
            duration=duration,
            check_invariants=check_invariants,
        )
    except (WorldConfigError, GtsError, BindingError, PolicyMismatch,
            ProtocolError, ScenarioError, BusError, ConnectionLost, OSError) as exc:
        return RunResult(error=str(exc), exit_code=EXIT_CONFIG)
    try:
        return session.run(realtime=realtime, on_tick=on_tick)
    finally:
        session.close()
