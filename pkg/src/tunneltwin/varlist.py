"""PLC variable-list parsing and signal manifest generation.

Two text files describe the PLC side: the INPUTS global-variable list and
the STATE structure holding all discrete variables.  This module parses
them, classifies each variable as actuator / sensor / button / skip using
the name-and-type filter rules, and emits the policy document both gateway
endpoints must agree on.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Sequence, Tuple

from .bus import (
    Direction,
    Kind,
    NamingRule,
    SignalDef,
    INPUT_RULE,
    OUTPUT_RULE,
    derive_group,
)


class FileKind(Enum):
    INPUTS = "inputs"
    STATE = "state"


class DeclaredType(Enum):
    BOOL = "BOOL"
    ENUM_E = "enum_E"
    OTHER = "other"


class RecordKind(Enum):
    ACTUATOR = "actuator"
    SENSOR = "sensor"
    BUTTON = "button"
    SKIP = "skip"


class DuplicateVariable(Exception):
    pass


# First/last lines of the editor panes plus STRUCT framing carry no variables.
_HEADER_TOKENS = {"VAR_GLOBAL", "END_VAR", "TYPE", "STRUCT", "END_STRUCT", "END_TYPE"}


@dataclass(frozen=True)
class VariableRecord:
    raw_line: str
    var_name: str
    declared_type: DeclaredType
    source: FileKind


@dataclass
class VarlistParse:
    records: List[VariableRecord] = field(default_factory=list)
    skipped_lines: List[str] = field(default_factory=list)


def parse_varlist(text: str, source: FileKind) -> VarlistParse:
    """One record per code line; headers, footers and blanks are tallied."""
    result = VarlistParse()
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            result.skipped_lines.append(line)
            continue
        var_name = stripped.split()[0]
        if var_name in _HEADER_TOKENS:
            result.skipped_lines.append(line)
            continue
        if "enum_E" in line:
            declared = DeclaredType.ENUM_E
        elif "BOOL" in line:
            declared = DeclaredType.BOOL
        else:
            declared = DeclaredType.OTHER
        result.records.append(VariableRecord(line, var_name, declared, source))
    return result


def print_varlist(records: Sequence[VariableRecord]) -> str:
    """Inverse of :func:`parse_varlist` on the record list (raw lines)."""
    return "\n".join(rec.raw_line for rec in records)


def classify(rec: VariableRecord) -> RecordKind:
    """Total, deterministic partition of a record into its signal role.

    Actuators are Boolean ``dvar`` hardware-mapping variables; buttons are
    operator-interface points on either side (``ivar`` with a ``button``
    token, or Boolean ``dvar`` GUI feedback); everything else starting with
    ``ivar`` is a sensor.
    """
    name = rec.var_name
    if name.startswith("dvar") and rec.declared_type is DeclaredType.BOOL:
        if "GUI" in name:
            return RecordKind.BUTTON
        if "_HW_" in rec.raw_line:
            return RecordKind.ACTUATOR
        return RecordKind.SKIP
    if name.startswith("ivar"):
        if "button" in name:
            return RecordKind.BUTTON
        return RecordKind.SENSOR
    return RecordKind.SKIP


@dataclass
class SignalManifest:
    """Generated catalog of actuators, sensors and buttons."""

    entries: List[SignalDef] = field(default_factory=list)
    source_digest: str = ""

    def by_kind(self, kind: Kind) -> List[SignalDef]:
        return [e for e in self.entries if e.kind is kind]


def source_digest(state_text: str, inputs_text: str) -> str:
    """Content hash of both variable-list files (stale-policy detection)."""
    digest = hashlib.sha256()
    digest.update(state_text.encode("utf-8"))
    digest.update(b"\x00")
    digest.update(inputs_text.encode("utf-8"))
    return digest.hexdigest()


def _entry_for(rec: VariableRecord, role: RecordKind) -> SignalDef:
    group = derive_group(rec.var_name)
    if rec.var_name.startswith("dvar"):
        # GUI feedback lamps are outputs on the wire; the bus contract
        # allows only actuators in the output direction.
        return SignalDef(rec.var_name, Direction.OUTPUT, Kind.ACTUATOR, group)
    kind = Kind.BUTTON if role is RecordKind.BUTTON else Kind.SENSOR
    return SignalDef(rec.var_name, Direction.INPUT, kind, group)


def generate_manifest(
    records: Iterable[VariableRecord],
    digest: str = "",
    include_gui_buttons: bool = False,
) -> SignalManifest:
    """One entry per non-skip record, in the given (file) order.

    Button-classified records are dropped unless ``include_gui_buttons``
    is set, mirroring the opt-in generation of GUI logic components.
    """
    manifest = SignalManifest(source_digest=digest)
    seen = set()
    for rec in records:
        role = classify(rec)
        if role is RecordKind.SKIP:
            continue
        if role is RecordKind.BUTTON and not include_gui_buttons:
            continue
        if rec.var_name in seen:
            raise DuplicateVariable(rec.var_name)
        seen.add(rec.var_name)
        manifest.entries.append(_entry_for(rec, role))
    return manifest


# -- policy document ------------------------------------------------------

POLICY_HEADER = "tunneltwin-policy v1"


@dataclass(frozen=True)
class PolicyEntry:
    direction: Direction
    name: str
    address: str


@dataclass
class PolicyManifest:
    """Signal/address catalog both gateway endpoints must agree on."""

    entries: List[PolicyEntry] = field(default_factory=list)

    @property
    def digest(self) -> str:
        body = "\n".join(
            f"{e.direction.value}\t{e.name}\t{e.address}" for e in self.entries
        )
        return hashlib.sha256(body.encode("utf-8")).hexdigest()

    def names(self) -> List[str]:
        return [e.name for e in self.entries]

    def inputs(self) -> List[PolicyEntry]:
        return [e for e in self.entries if e.direction is Direction.INPUT]

    def outputs(self) -> List[PolicyEntry]:
        return [e for e in self.entries if e.direction is Direction.OUTPUT]


class PolicyFormatError(Exception):
    pass


def policy_from_defs(
    defs: Sequence[SignalDef],
    in_rule: NamingRule = INPUT_RULE,
    out_rule: NamingRule = OUTPUT_RULE,
) -> PolicyManifest:
    """Resolve addresses for signal definitions, outputs before inputs."""
    entries = []
    for sig in defs:
        if sig.direction is Direction.OUTPUT:
            entries.append(PolicyEntry(sig.direction, sig.name, out_rule.resolve(sig.name)))
    for sig in defs:
        if sig.direction is Direction.INPUT:
            entries.append(PolicyEntry(sig.direction, sig.name, in_rule.resolve(sig.name)))
    return PolicyManifest(entries)


def emit_policy(
    manifest: SignalManifest,
    in_rule: NamingRule = INPUT_RULE,
    out_rule: NamingRule = OUTPUT_RULE,
) -> str:
    """Serialize the manifest as the line-oriented policy document."""
    policy = policy_from_defs(manifest.entries, in_rule, out_rule)
    return render_policy(policy)


def render_policy(policy: PolicyManifest) -> str:
    lines = [POLICY_HEADER, f"digest {policy.digest}"]
    for entry in policy.entries:
        lines.append(f"{entry.direction.value}\t{entry.name}\t{entry.address}")
    return "\n".join(lines) + "\n"


def parse_policy(text: str) -> PolicyManifest:
    lines = text.splitlines()
    if not lines or lines[0] != POLICY_HEADER:
        raise PolicyFormatError("missing policy header")
    if len(lines) < 2 or not lines[1].startswith("digest "):
        raise PolicyFormatError("missing digest line")
    declared_digest = lines[1].split(" ", 1)[1]
    entries = []
    for idx, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise PolicyFormatError(f"line {idx}: expected dir\\tname\\taddress")
        dir_token, name, address = parts
        try:
            direction = Direction(dir_token)
        except ValueError:
            raise PolicyFormatError(f"line {idx}: bad direction {dir_token!r}") from None
        entries.append(PolicyEntry(direction, name, address))
    names = [e.name for e in entries]
    if len(set(names)) != len(names):
        raise PolicyFormatError("duplicate signal names in policy")
    policy = PolicyManifest(entries)
    if policy.digest != declared_digest:
        raise PolicyFormatError("digest does not match policy body")
    return policy


# -- variable-list rendering (fixtures and round-trip tests) ---------------


def render_varlists(defs: Sequence[SignalDef]) -> Tuple[str, str]:
    """PLC-editor-style (state, inputs) panes for a signal catalog."""
    state_lines = ["TYPE STATE :", "STRUCT"]
    for sig in defs:
        if sig.direction is Direction.OUTPUT:
            state_lines.append(f"    {sig.name} AT %Q* : BOOL;")
    state_lines += ["END_STRUCT", "END_TYPE"]
    input_lines = ["VAR_GLOBAL"]
    for sig in defs:
        if sig.direction is Direction.INPUT:
            input_lines.append(f"    {sig.name} AT %I* : BOOL;")
    input_lines.append("END_VAR")
    return "\n".join(state_lines) + "\n", "\n".join(input_lines) + "\n"
