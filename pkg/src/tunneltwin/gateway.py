"""Gateway between the plant's signal bus and the soft PLC.

Both endpoints hold a policy manifest (signal names plus resolved
addresses) and refuse to talk unless the digests match.  Exchange is
change-driven and runs in lockstep: the simulation sends its input flips
followed by ``PING n``, the PLC scans once per ping and answers with its
output flips and ``PONG n``.  The in-process binding implements the same
cycle without sockets; one conformance suite runs against both.

Wire protocol v1 (newline-delimited UTF-8 records):
    HELLO <role> 1
    POLICY <digest> <count>   followed by <dir> <name> <address> lines,
    ENDPOLICY
    WRITE <seq> <name> 0|1
    PING <n> / PONG <n>
"""

from __future__ import annotations

import socket
import threading
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .bus import ChangeEvent, Direction, SignalBus
from .gts import GtsSpec, ScanReport, initial_state, scan
from .gts.runtime import LIVELOCK_CAP
from .varlist import PolicyEntry, PolicyManifest

DEFAULT_PORT = 8510  # stand-in for the PLC's :851, which is privileged
PROTOCOL_VERSION = "1"


class ProtocolError(Exception):
    pass


class PolicyMismatch(Exception):
    def __init__(self, local_only: Sequence[str], remote_only: Sequence[str]):
        self.local_only = list(local_only)
        self.remote_only = list(remote_only)
        parts = []
        if self.local_only:
            parts.append("local-only signals: " + ", ".join(self.local_only))
        if self.remote_only:
            parts.append("remote-only signals: " + ", ".join(self.remote_only))
        super().__init__("; ".join(parts) or "policy digests differ")


class ConnectionLost(Exception):
    pass


class BindingError(Exception):
    pass


# -- controller/policy name binding ----------------------------------------


@dataclass
class SpecBinding:
    """Resolved links between controller variables and policy signals."""

    input_by_signal: Dict[str, str]  # signal name -> bare input-bool name
    outputs: List[Tuple[str, str]]  # (output key, signal name), declaration order
    output_filter: Set[str]


def _match(signal: str, var: str) -> bool:
    return signal == var or signal.endswith("_" + var)


def bind_spec_to_policy(spec: GtsSpec, policy: PolicyManifest) -> SpecBinding:
    """Match controller variables to policy signals by name suffix.

    Every declared input Boolean must resolve to exactly one input-direction
    signal.  Discrete Booleans matching an output signal become published
    actuator values; several candidates for one name are a wiring fault.
    """
    inputs = [e.name for e in policy.inputs()]
    outputs = [e.name for e in policy.outputs()]

    input_by_signal: Dict[str, str] = {}
    for name in spec.declared_input_names():
        candidates = [s for s in inputs if _match(s, name)]
        if not candidates:
            raise BindingError(f"input Boolean {name!r} matches no policy signal")
        if len(candidates) > 1:
            raise BindingError(
                f"input Boolean {name!r} is ambiguous: {', '.join(candidates)}"
            )
        if candidates[0] in input_by_signal:
            raise BindingError(
                f"signal {candidates[0]} feeds both "
                f"{input_by_signal[candidates[0]]!r} and {name!r}"
            )
        input_by_signal[candidates[0]] = name

    bound_outputs: List[Tuple[str, str]] = []
    used_signals: Dict[str, str] = {}
    for aut in spec.automata:
        for var in aut.disc_bools:
            key = spec.output_key(aut.name, var)
            candidates = [s for s in outputs if _match(s, var)]
            if len(candidates) > 1:
                raise BindingError(
                    f"discrete Boolean {var!r} is ambiguous: {', '.join(candidates)}"
                )
            if candidates:
                signal = candidates[0]
                if signal in used_signals:
                    raise BindingError(
                        f"signal {signal} is driven by both "
                        f"{used_signals[signal]!r} and {key!r}"
                    )
                used_signals[signal] = key
                bound_outputs.append((key, signal))
    return SpecBinding(
        input_by_signal=input_by_signal,
        outputs=bound_outputs,
        output_filter={key for key, _ in bound_outputs},
    )


# -- PLC runtime shared by both transports -----------------------------------


class PlcRuntime:
    """Controller state plus the per-cycle scan, keyed by signal names."""

    def __init__(self, spec: GtsSpec, policy: PolicyManifest,
                 cycle_period: float = 0.01, cap: int = LIVELOCK_CAP):
        self.spec = spec
        self.policy = policy
        self.binding = bind_spec_to_policy(spec, policy)
        self.cycle_period = cycle_period
        self.cap = cap
        self.state = initial_state(spec)
        self.inputs: Dict[str, bool] = {
            name: False for name in spec.declared_input_names()
        }
        self.outputs: Dict[str, bool] = {}

    def reset(self) -> None:
        self.state = initial_state(self.spec)
        self.inputs = {name: False for name in self.spec.declared_input_names()}
        self.outputs = {}

    def apply_input(self, signal: str, value: bool) -> None:
        name = self.binding.input_by_signal.get(signal)
        if name is not None:
            self.inputs[name] = value

    def cycle(self) -> Tuple[List[Tuple[str, bool]], List[Tuple[str, bool]], ScanReport]:
        """One scan; actuator writes in declaration order.

        Returns the full output image, the changed subset and the report.
        """
        self.state, outputs, report = scan(
            self.spec, self.state, self.inputs, self.cycle_period,
            cap=self.cap, output_filter=self.binding.output_filter,
        )
        image = [(signal, outputs[key]) for key, signal in self.binding.outputs]
        changed_keys = {key for key, _ in report.outputs_changed}
        changed = [
            (signal, outputs[key])
            for key, signal in self.binding.outputs
            if key in changed_keys
        ]
        self.outputs = outputs
        return image, changed, report


# -- line-oriented wire codec -------------------------------------------------


class _LineChannel:
    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._file = sock.makefile("rwb")

    def send(self, line: str) -> None:
        try:
            self._file.write(line.encode("utf-8") + b"\n")
        except OSError as exc:
            raise ConnectionLost(str(exc)) from exc

    def flush(self) -> None:
        try:
            self._file.flush()
        except OSError as exc:
            raise ConnectionLost(str(exc)) from exc

    def recv(self) -> str:
        try:
            raw = self._file.readline()
        except OSError as exc:
            raise ConnectionLost(str(exc)) from exc
        if not raw:
            raise ConnectionLost("peer closed the connection")
        return raw.decode("utf-8").rstrip("\n")

    def close(self) -> None:
        try:
            self._file.close()
            self._sock.close()
        except OSError:
            pass


def _send_policy(channel: _LineChannel, role: str, policy: PolicyManifest) -> None:
    channel.send(f"HELLO {role} {PROTOCOL_VERSION}")
    channel.send(f"POLICY {policy.digest} {len(policy.entries)}")
    for entry in policy.entries:
        channel.send(f"{entry.direction.value} {entry.name} {entry.address}")
    channel.send("ENDPOLICY")
    channel.flush()


def _recv_policy(channel: _LineChannel) -> Tuple[str, PolicyManifest]:
    hello = channel.recv().split(" ")
    if len(hello) != 3 or hello[0] != "HELLO" or hello[2] != PROTOCOL_VERSION:
        raise ProtocolError(f"bad hello: {' '.join(hello)!r}")
    role = hello[1]
    head = channel.recv().split(" ")
    if len(head) != 3 or head[0] != "POLICY":
        raise ProtocolError("expected POLICY")
    digest, count = head[1], int(head[2])
    entries = []
    for _ in range(count):
        parts = channel.recv().split(" ")
        if len(parts) != 3:
            raise ProtocolError("bad policy line")
        entries.append(PolicyEntry(Direction(parts[0]), parts[1], parts[2]))
    if channel.recv() != "ENDPOLICY":
        raise ProtocolError("expected ENDPOLICY")
    policy = PolicyManifest(entries)
    if policy.digest != digest:
        raise ProtocolError("policy digest does not match its body")
    return role, policy


def _check_policies(local: PolicyManifest, remote: PolicyManifest) -> None:
    if local.digest == remote.digest:
        return
    local_names = set(local.names())
    remote_names = set(remote.names())
    raise PolicyMismatch(
        sorted(local_names - remote_names), sorted(remote_names - local_names)
    )


@dataclass
class Session:
    role: str
    policy_digest: str
    seq_out: int = 0
    seq_in: int = 0

    def next_seq(self) -> int:
        self.seq_out += 1
        return self.seq_out

    def accept_seq(self, seq: int) -> None:
        if seq != self.seq_in + 1:
            raise ProtocolError(f"write seq {seq} after {self.seq_in}")
        self.seq_in = seq


def _parse_write(parts: List[str], session: Session) -> Tuple[str, bool]:
    if len(parts) != 4:
        raise ProtocolError("bad WRITE record")
    session.accept_seq(int(parts[1]))
    if parts[3] not in ("0", "1"):
        raise ProtocolError(f"bad WRITE value {parts[3]!r}")
    return parts[2], parts[3] == "1"


# -- transport bindings --------------------------------------------------------


class InprocBinding:
    """Couple a controller to the bus directly, same cycle semantics as TCP."""

    def __init__(self, bus: SignalBus, runtime: PlcRuntime):
        self.bus = bus
        self.runtime = runtime

    def step(self, cycle_index: int, sim_time: float) -> ScanReport:
        for signal in self.runtime.binding.input_by_signal:
            self.runtime.apply_input(signal, self.bus.read(signal))
        image, _, report = self.runtime.cycle()
        # The change-guarded bus makes applying the full image equivalent
        # to applying the changed subset the TCP path sends.
        for signal, value in image:
            self.bus.write(signal, value, sim_time)
        return report

    def close(self) -> None:
        pass


class TcpBinding:
    """Sim side of the wire protocol; one lockstep exchange per PLC cycle."""

    def __init__(self, bus: SignalBus, policy: PolicyManifest,
                 host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 connect_timeout: float = 5.0):
        self.bus = bus
        self.policy = policy
        self.host = host
        self.port = port
        self._connect_timeout = connect_timeout
        self._staged: List[Tuple[str, bool]] = []
        self._input_names = [e.name for e in policy.inputs()]
        self.bus.subscribe(self._on_change)
        self._channel: Optional[_LineChannel] = None
        self.session: Optional[Session] = None
        self._fresh = True
        self.connect()

    # Bus flips of input-direction signals are staged for the next cycle.
    def _on_change(self, event: ChangeEvent) -> None:
        if self._channel is None:
            return
        definition = self.bus.definition(event.name)
        if definition.direction is Direction.INPUT:
            self._staged.append((event.name, event.value))

    def connect(self) -> None:
        sock = socket.create_connection((self.host, self.port),
                                        timeout=self._connect_timeout)
        sock.settimeout(30.0)
        channel = _LineChannel(sock)
        _send_policy(channel, "Sim", self.policy)
        role, remote_policy = _recv_policy(channel)
        if role != "Plc":
            raise ProtocolError(f"expected Plc peer, got {role!r}")
        _check_policies(self.policy, remote_policy)
        self._channel = channel
        self.session = Session(role="Sim", policy_digest=self.policy.digest)
        self._staged = []
        self._fresh = True

    def step(self, cycle_index: int, sim_time: float) -> None:
        channel = self._channel
        if channel is None:
            raise ConnectionLost("not connected")
        session = self.session
        assert session is not None
        try:
            if self._fresh:
                # Full image resync on a fresh session.
                for name in self._input_names:
                    value = self.bus.read(name)
                    channel.send(f"WRITE {session.next_seq()} {name} {int(value)}")
                self._fresh = False
                self._staged = []
            else:
                for name, value in self._staged:
                    channel.send(f"WRITE {session.next_seq()} {name} {int(value)}")
                self._staged = []
            channel.send(f"PING {cycle_index}")
            channel.flush()
            writes: List[Tuple[str, bool]] = []
            while True:
                parts = channel.recv().split(" ")
                if parts[0] == "WRITE":
                    writes.append(_parse_write(parts, session))
                elif parts[0] == "PONG":
                    if int(parts[1]) != cycle_index:
                        raise ProtocolError(f"PONG {parts[1]} for PING {cycle_index}")
                    break
                else:
                    raise ProtocolError(f"unexpected record {parts[0]!r}")
        except ConnectionLost:
            self._channel = None
            raise
        # Apply the whole cycle's output image atomically from the sim's view.
        for name, value in writes:
            self.bus.write(name, value, sim_time)

    def close(self) -> None:
        if self._channel is not None:
            self._channel.close()
            self._channel = None


class PlcServer:
    """Controller endpoint: accepts one sim at a time, scans once per PING."""

    def __init__(self, spec: GtsSpec, policy: PolicyManifest,
                 host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 cycle_ms: float = 10.0, cap: int = LIVELOCK_CAP):
        self.spec = spec
        self.policy = policy
        self.runtime = PlcRuntime(spec, policy, cycle_period=cycle_ms / 1000.0, cap=cap)
        self._listener = socket.create_server((host, port))
        self.port = self._listener.getsockname()[1]
        self._stop = threading.Event()
        self.livelock = None

    def serve_forever(self, max_sessions: Optional[int] = None) -> None:
        sessions = 0
        self._listener.settimeout(0.2)
        while not self._stop.is_set():
            try:
                sock, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                self._serve_session(sock)
            except (ConnectionLost, ProtocolError, PolicyMismatch):
                pass
            sessions += 1
            if max_sessions is not None and sessions >= max_sessions:
                break
        self._listener.close()

    def stop(self) -> None:
        self._stop.set()

    def _serve_session(self, sock: socket.socket) -> None:
        sock.settimeout(30.0)
        channel = _LineChannel(sock)
        try:
            role, remote_policy = _recv_policy(channel)
            if role != "Sim":
                raise ProtocolError(f"expected Sim peer, got {role!r}")
            _send_policy(channel, "Plc", self.policy)
            _check_policies(self.policy, remote_policy)
            self.runtime.reset()
            session = Session(role="Plc", policy_digest=self.policy.digest)
            first_cycle = True
            while not self._stop.is_set():
                parts = channel.recv().split(" ")
                if parts[0] == "WRITE":
                    name, value = _parse_write(parts, session)
                    self.runtime.apply_input(name, value)
                elif parts[0] == "PING":
                    image, changed, report = self.runtime.cycle()
                    # Fresh sessions resync the full output image once.
                    writes = image if first_cycle else changed
                    first_cycle = False
                    for signal, value in writes:
                        channel.send(f"WRITE {session.next_seq()} {signal} {int(value)}")
                    channel.send(f"PONG {parts[1]}")
                    channel.flush()
                    if report.livelock is not None:
                        self.livelock = report.livelock
                        break
                else:
                    raise ProtocolError(f"unexpected record {parts[0]!r}")
        finally:
            channel.close()
