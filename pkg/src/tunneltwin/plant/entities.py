"""Controlled entities: each reads its actuator signals and publishes its
sensor signals every tick.

Entities with an exactly-one actuator convention (barriers, lights,
escape-route signs, ...) raise a warning flag when more than one actuator
in their group is true, since a resource controller should never receive
conflicting commands.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Sequence, Tuple

from ..bus import Direction, Kind, SignalDef
from .vehicles import intervals_overlap


def level_from_intensity(value: float, i_min: float, i_max: float) -> int:
    """Map an intensity reading onto the 0..8 level scale.

    Linear interpolation between the calibration bounds, rounded half away
    from zero and clamped for out-of-range readings.
    """
    if not i_min < i_max:
        raise ValueError("need i_min < i_max")
    scaled = (value - i_min) / (i_max - i_min) * 8.0
    if scaled >= 0:
        level = math.floor(scaled + 0.5)
    else:
        level = math.ceil(scaled - 0.5)
    return max(0, min(8, level))


def one_hot_apply(acts: Sequence[bool], previous: int) -> Tuple[int, bool]:
    """Resolve a nine-Boolean one-hot level command.

    Exactly one true selects that index; none keeps the previous level;
    several keep the lowest true index and flag a warning.
    """
    true_indices = [i for i, v in enumerate(acts) if v]
    if len(true_indices) == 1:
        return true_indices[0], False
    if not true_indices:
        return previous, False
    return true_indices[0], True


def _flat(group: str) -> str:
    return group.replace("/", "_")


class Entity:
    """Base: owns signal naming and bookkeeping for one controlled entity."""

    actuator_shorts: Sequence[str] = ()
    sensor_shorts: Sequence[str] = ()
    exclusive = False  # exactly-one actuator convention

    def __init__(self, group: str):
        self.group = group
        self.warning = False

    def act_name(self, short: str) -> str:
        return f"dvar_M_M_HW_{_flat(self.group)}_{short}"

    def sens_name(self, short: str) -> str:
        return f"ivar_M_M_HW_{_flat(self.group)}_{short}"

    def signal_defs(self) -> List[SignalDef]:
        defs = [
            SignalDef(self.act_name(s), Direction.OUTPUT, Kind.ACTUATOR, self.group)
            for s in self.actuator_shorts
        ]
        defs += [
            SignalDef(self.sens_name(s), Direction.INPUT, Kind.SENSOR, self.group)
            for s in self.sensor_shorts
        ]
        return defs

    # Subclasses implement tick(world) -> {sensor short: bool}.

    def read_acts(self, world) -> Dict[str, bool]:
        acts = {s: world.bus.read(self.act_name(s)) for s in self.actuator_shorts}
        if self.exclusive:
            self.warning = world.bus.count_true_actuators(self.group) > 1
        return acts

    def toggle(self, element: str) -> None:
        raise KeyError(f"{self.group} has no toggleable element {element!r}")

    def view(self) -> Dict[str, object]:
        return {}


class Barrier(Entity):
    """Boom barrier or emergency passage driven by a rotational motor.

    The actuator priority chain is noChoice > open > close > stop with a
    default stop; noChoice leaves the motor direction untouched.  The beam
    angle integrates at a constant rate and clamps to [closed, open].
    """

    actuator_shorts = ("a_noChoice", "a_open", "a_stop", "a_close")
    exclusive = True

    def __init__(
        self,
        group: str,
        rot_vel: float = 9.0,
        sensor_offset: float = 1.0,
        default_open: bool = True,
        obstacle_zone: Optional[Tuple[float, float]] = None,
        stop_zone: Optional[Tuple[float, float]] = None,
        lanes: Tuple[str, ...] = (),
    ):
        super().__init__(group)
        self.rot_vel = rot_vel
        self.open_rotation = 90.0
        self.closed_rotation = 0.0
        self.sensor_offset = sensor_offset
        if sensor_offset <= 0:
            raise ValueError("sensor_offset must be positive")
        self.default_open = default_open
        self.theta = self.open_rotation if default_open else self.closed_rotation
        self.direction = 0
        self.obstacle_zone = obstacle_zone
        self.stop_zone = stop_zone
        self.lanes = lanes
        self.stop_active = not default_open
        self.last_sensors: Dict[str, bool] = {}

    @property
    def sensor_shorts(self) -> Sequence[str]:
        shorts = ["s_opened", "s_opening", "s_stopped", "s_closing", "s_closed"]
        if self.obstacle_zone is not None:
            shorts += ["s_obst_on", "s_obst_off"]
        return shorts

    def tick(self, world) -> Dict[str, bool]:
        acts = self.read_acts(world)
        if self.warning:
            self.direction = 0
        elif acts["a_noChoice"]:
            pass  # keep the current direction
        elif acts["a_open"]:
            self.direction = 1
        elif acts["a_close"]:
            self.direction = -1
        else:
            # a_stop and the all-false default both stop the motor
            self.direction = 0
        self.theta += self.direction * self.rot_vel * world.dt
        self.theta = max(self.closed_rotation, min(self.open_rotation, self.theta))

        opened = abs(self.open_rotation - self.theta) < self.sensor_offset
        closed = (abs(self.theta - self.closed_rotation) < self.sensor_offset) and not opened
        sensors = {
            "s_opened": opened,
            "s_closed": closed,
            "s_opening": not opened and not closed and self.direction == 1,
            "s_closing": not opened and not closed and self.direction == -1,
            "s_stopped": not opened and not closed and self.direction == 0,
        }
        # Vehicles are stopped by the beam except in the fully-open state.
        self.stop_active = not opened
        if self.obstacle_zone is not None:
            occupied = any(
                intervals_overlap(v.body, self.obstacle_zone)
                for v in world.lane_vehicles(self.lanes)
            )
            sensors["s_obst_on"] = occupied
            sensors["s_obst_off"] = not occupied
        self.last_sensors = sensors
        return sensors

    def view(self) -> Dict[str, object]:
        return {"theta": round(self.theta, 3), "warning": self.warning}


class TrafficLight(Entity):
    """Off, green, red or flashing yellow; red activates its stop line."""

    actuator_shorts = ("a_noChoice", "a_off", "a_green", "a_red", "a_yellowFlashing")
    exclusive = True
    STATES = ("off", "green", "red", "yellowFlashing")

    def __init__(self, group: str, stop_zone: Optional[Tuple[float, float]] = None,
                 lanes: Tuple[str, ...] = ()):
        super().__init__(group)
        self.state = "off"
        self.stop_zone = stop_zone
        self.lanes = lanes
        self.stop_active = False

    def tick(self, world) -> Dict[str, bool]:
        acts = self.read_acts(world)
        if not self.warning and not acts["a_noChoice"]:
            chosen = [s for s in self.STATES if acts["a_" + s]]
            if len(chosen) == 1:
                self.state = chosen[0]
        self.stop_active = self.state == "red"
        return {}

    def view(self) -> Dict[str, object]:
        return {"state": self.state, "warning": self.warning}


class J32Sign(Entity):
    """Electronic warning sign; displays the red cross while turned on."""

    actuator_shorts = ("a_on",)

    def __init__(self, group: str):
        super().__init__(group)
        self.on = False

    def tick(self, world) -> Dict[str, bool]:
        self.on = self.read_acts(world)["a_on"]
        return {}

    def view(self) -> Dict[str, object]:
        return {"on": self.on}


class HeightDetection(Entity):
    """Beam across the road; trips while an overheight vehicle crosses it."""

    sensor_shorts = ("s_heightdetect",)

    def __init__(self, group: str, position: float, beam_height: float = 4.1,
                 lanes: Tuple[str, ...] = ()):
        super().__init__(group)
        self.position = position
        self.beam_height = beam_height
        self.lanes = lanes
        self.detected = False

    def tick(self, world) -> Dict[str, bool]:
        self.detected = any(
            v.height > self.beam_height and v.body[0] <= self.position <= v.body[1]
            for v in world.lane_vehicles(self.lanes)
        )
        return {"s_heightdetect": self.detected}

    def view(self) -> Dict[str, object]:
        return {"detected": self.detected, "position": self.position}


class LightBank(Entity):
    """Tunnel lighting with nine one-hot level commands."""

    actuator_shorts = tuple(f"a_state{i}" for i in range(9))
    exclusive = True

    def __init__(self, group: str, intensity_factor: float = 1.0):
        super().__init__(group)
        self.level = 0
        self.intensity_factor = intensity_factor

    def tick(self, world) -> Dict[str, bool]:
        acts = self.read_acts(world)
        # read_acts already derived the conflict warning from the group.
        self.level, _ = one_hot_apply(
            [acts[f"a_state{i}"] for i in range(9)], self.level
        )
        return {}

    @property
    def intensity(self) -> float:
        return self.level * self.intensity_factor

    def view(self) -> Dict[str, object]:
        return {"level": self.level, "warning": self.warning}


class Ventilation(Entity):
    """Fan group; the one-hot level scales the signed blade velocity."""

    actuator_shorts = tuple(f"a_state{i}" for i in range(9))
    exclusive = True

    def __init__(self, group: str, rpm_factor: float = 50.0):
        super().__init__(group)
        self.level = 0
        self.rpm_factor = rpm_factor

    def tick(self, world) -> Dict[str, bool]:
        acts = self.read_acts(world)
        self.level, _ = one_hot_apply(
            [acts[f"a_state{i}"] for i in range(9)], self.level
        )
        return {}

    @property
    def rpm(self) -> float:
        return self.level * self.rpm_factor

    def view(self) -> Dict[str, object]:
        return {"level": self.level, "rpm": self.rpm}


class LevelSensorEntity(Entity):
    """Shared shape of the light sensor and the smoke detector."""

    sensor_shorts = tuple(f"s_level{i}" for i in range(9))

    def __init__(self, group: str, i_min: float, i_max: float):
        super().__init__(group)
        self.i_min = i_min
        self.i_max = i_max
        self.level = 0

    def reading(self, world) -> float:
        raise NotImplementedError

    def tick(self, world) -> Dict[str, bool]:
        self.level = level_from_intensity(self.reading(world), self.i_min, self.i_max)
        return {f"s_level{i}": i == self.level for i in range(9)}

    def view(self) -> Dict[str, object]:
        return {"level": self.level}


class LightSensor(LevelSensorEntity):
    def __init__(self, group: str, i_min: float = 0.0, i_max: float = 1.0):
        super().__init__(group, i_min, i_max)

    def reading(self, world) -> float:
        return world.ambient_intensity


class SmokeDetector(LevelSensorEntity):
    """Smoke density is the particle alpha, calibrated 0..1 by definition."""

    def __init__(self, group: str, tube: int):
        super().__init__(group, 0.0, 1.0)
        self.tube = tube

    def reading(self, world) -> float:
        return world.smoke_alpha[self.tube]


class SosSystem(Entity):
    """Reports dangerous traffic present in the tube."""

    sensor_shorts = ("s_speeding", "s_wrongWay", "s_stationary")

    def __init__(self, group: str, tube: int):
        super().__init__(group)
        self.tube = tube

    def tick(self, world) -> Dict[str, bool]:
        kinds = {v.kind.value for v in world.tube_vehicles(self.tube)}
        return {
            "s_speeding": "speeding" in kinds,
            "s_wrongWay": "wrongway" in kinds,
            "s_stationary": "stationary" in kinds,
        }


class Broadcast(Entity):
    """Audio broadcast modeled as timestamped event-log entries."""

    actuator_shorts = ("a_broadcast_off", "a_broadcast_live", "a_broadcast_message")
    sensor_shorts = ("s_recordingStopped",)
    exclusive = True
    STATES = ("off", "live", "message")

    def __init__(self, group: str, message_seconds: float = 5.0):
        super().__init__(group)
        self.state = "off"
        self.message_seconds = message_seconds
        self._message_until = -1.0

    def tick(self, world) -> Dict[str, bool]:
        acts = self.read_acts(world)
        if not self.warning:
            chosen = [s for s in self.STATES if acts["a_broadcast_" + s]]
            if len(chosen) == 1 and chosen[0] != self.state:
                self.state = chosen[0]
                world.log_event(self.group, f"broadcast_{self.state}")
                if self.state == "message":
                    self._message_until = world.sim_time + self.message_seconds
        playing = self.state == "message" and world.sim_time < self._message_until
        return {"s_recordingStopped": not playing}

    def view(self) -> Dict[str, object]:
        return {"state": self.state}


class BroadcastSync(Entity):
    """Synchronization timer; reset rearms the timeout after T_sync."""

    actuator_shorts = ("a_off", "a_reset")
    sensor_shorts = ("s_timerGB_timeout",)

    def __init__(self, group: str, t_sync: float = 30.0):
        super().__init__(group)
        self.t_sync = t_sync
        self.timer = 0.0

    def tick(self, world) -> Dict[str, bool]:
        acts = self.read_acts(world)
        if acts["a_off"] or acts["a_reset"]:
            self.timer = 0.0
        else:
            self.timer += world.dt
        return {"s_timerGB_timeout": self.timer >= self.t_sync}


class EmergencyExit(Entity):
    """Clickable door with contour lighting and a sound beacon."""

    actuator_shorts = ("a_contour", "a_beacon")
    sensor_shorts = ("s_open",)

    def __init__(self, group: str):
        super().__init__(group)
        self.door_open = False
        self.contour_on = False
        self.beacon_on = False

    def toggle(self, element: str) -> None:
        if element in ("door", ""):
            self.door_open = not self.door_open
        else:
            raise KeyError(f"{self.group} has no toggleable element {element!r}")

    def tick(self, world) -> Dict[str, bool]:
        acts = self.read_acts(world)
        self.contour_on = acts["a_contour"]
        beacon = acts["a_beacon"]
        if beacon != self.beacon_on:
            self.beacon_on = beacon
            world.log_event(self.group, "beacon_on" if beacon else "beacon_off")
        return {"s_open": self.door_open}

    def view(self) -> Dict[str, object]:
        return {"open": self.door_open, "contour": self.contour_on,
                "beacon": self.beacon_on}


class MainDoor(Entity):
    """Central-corridor head door with open and closed feedback."""

    sensor_shorts = ("s_open", "s_closed")

    def __init__(self, group: str):
        super().__init__(group)
        self.door_open = False

    def toggle(self, element: str) -> None:
        if element in ("door", ""):
            self.door_open = not self.door_open
        else:
            raise KeyError(f"{self.group} has no toggleable element {element!r}")

    def tick(self, world) -> Dict[str, bool]:
        return {"s_open": self.door_open, "s_closed": not self.door_open}

    def view(self) -> Dict[str, object]:
        return {"open": self.door_open}


class AidCabinet(Entity):
    """Cabinet with a clickable door and clickable equipment inside."""

    def __init__(self, group: str, elements: Sequence[str]):
        super().__init__(group)
        self.elements = {name: False for name in elements}
        self.door_open = False

    @property
    def sensor_shorts(self) -> Sequence[str]:
        return ["s_opened"] + [f"s_{name}" for name in self.elements]

    def toggle(self, element: str) -> None:
        if element in ("door", ""):
            self.door_open = not self.door_open
        elif element in self.elements:
            self.elements[element] = not self.elements[element]
        else:
            raise KeyError(f"{self.group} has no toggleable element {element!r}")

    def tick(self, world) -> Dict[str, bool]:
        sensors = {"s_opened": self.door_open}
        for name, active in self.elements.items():
            sensors[f"s_{name}"] = active
        return sensors

    def view(self) -> Dict[str, object]:
        return {"open": self.door_open, **self.elements}


class EscapeRouteIndication(Entity):
    actuator_shorts = ("a_off", "a_ascending", "a_descending")
    exclusive = True
    STATES = ("off", "ascending", "descending")

    def __init__(self, group: str):
        super().__init__(group)
        self.state = "off"

    def tick(self, world) -> Dict[str, bool]:
        acts = self.read_acts(world)
        if not self.warning:
            chosen = [s for s in self.STATES if acts["a_" + s]]
            if len(chosen) == 1:
                self.state = chosen[0]
        return {}

    def view(self) -> Dict[str, object]:
        return {"state": self.state}


class Overpressure(Entity):
    actuator_shorts = ("a_off", "a_left", "a_right")
    exclusive = True
    STATES = ("off", "left", "right")

    def __init__(self, group: str):
        super().__init__(group)
        self.state = "off"

    def tick(self, world) -> Dict[str, bool]:
        acts = self.read_acts(world)
        if not self.warning:
            chosen = [s for s in self.STATES if acts["a_" + s]]
            if len(chosen) == 1:
                self.state = chosen[0]
        return {}

    def view(self) -> Dict[str, object]:
        return {"state": self.state}


class CorridorLighting(Entity):
    actuator_shorts = ("a_on",)

    def __init__(self, group: str):
        super().__init__(group)
        self.on = False

    def tick(self, world) -> Dict[str, bool]:
        self.on = self.read_acts(world)["a_on"]
        return {}

    def view(self) -> Dict[str, object]:
        return {"on": self.on}


class PumpCellar(Entity):
    """Water basin with named level thresholds and one pump."""

    actuator_shorts = ("a_pump_on",)

    def __init__(
        self,
        group: str,
        thresholds: Dict[str, float],
        h_max: float = 2.0,
        pump_rate: float = 0.05,
        h: float = 0.0,
    ):
        super().__init__(group)
        values = list(thresholds.values())
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("thresholds must be strictly increasing")
        self.thresholds = dict(thresholds)
        self.h_max = h_max
        self.pump_rate = pump_rate
        self.h = h
        self.inflow = 0.0

    @property
    def sensor_shorts(self) -> Sequence[str]:
        shorts = []
        for name in self.thresholds:
            shorts += [f"s_{name}_on", f"s_{name}_off"]
        return shorts

    def tick(self, world) -> Dict[str, bool]:
        pump_on = self.read_acts(world)["a_pump_on"]
        rate = self.inflow - (self.pump_rate if pump_on else 0.0)
        self.h = max(0.0, min(self.h_max, self.h + rate * world.dt))
        sensors = {}
        for name, limit in self.thresholds.items():
            above = self.h >= limit
            sensors[f"s_{name}_on"] = above
            sensors[f"s_{name}_off"] = not above
        return sensors

    def view(self) -> Dict[str, object]:
        return {"h": round(self.h, 4), "inflow": self.inflow}


class TubeControl(Entity):
    """Aggregated safety feedback over both lights and both barriers."""

    sensor_shorts = (
        "s_bothTL_off", "s_bothTL_flashing", "s_bothTL_red",
        "s_bothBB_opening", "s_bothBB_opened", "s_bothBB_stopped",
        "s_bothBB_closing", "s_bothBB_closed",
    )

    def __init__(self, group: str, lights: Sequence[TrafficLight],
                 barriers: Sequence[Barrier]):
        super().__init__(group)
        if len(lights) != 2 or len(barriers) != 2:
            raise ValueError("a tube aggregates two lights and two barriers")
        self.lights = list(lights)
        self.barriers = list(barriers)

    def tick(self, world) -> Dict[str, bool]:
        out = {
            "s_bothTL_off": all(l.state == "off" for l in self.lights),
            "s_bothTL_flashing": all(l.state == "yellowFlashing" for l in self.lights),
            "s_bothTL_red": all(l.state == "red" for l in self.lights),
        }
        for motion in ("opening", "opened", "stopped", "closing", "closed"):
            key = f"s_{motion}"
            out[f"s_bothBB_{motion}"] = all(
                b.last_sensors.get(key, False) for b in self.barriers
            )
        return out
