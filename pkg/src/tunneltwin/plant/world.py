"""World assembly and the fixed-timestep update loop.

Update order inside one tick is fixed: spawners, then vehicles (blocking
evaluated against pre-move positions), then entities, then sensor
publication through the signal bus.  All randomness flows through the
world's seeded generator, so a seed plus a scenario replays exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..bus import Direction, Kind, SignalBus, SignalDef
from .entities import (
    AidCabinet,
    Barrier,
    Broadcast,
    BroadcastSync,
    CorridorLighting,
    EmergencyExit,
    Entity,
    EscapeRouteIndication,
    HeightDetection,
    J32Sign,
    LightBank,
    LightSensor,
    MainDoor,
    Overpressure,
    PumpCellar,
    SmokeDetector,
    SosSystem,
    TrafficLight,
    TubeControl,
    Ventilation,
)
from .vehicles import Spawner, Vehicle, VehicleKind, is_blocked, vehicle_tick


class WorldConfigError(Exception):
    pass


@dataclass
class Lane:
    key: str
    tube: int
    index: int
    length: float
    direction: int = 1  # -1 marks the wrong-way overlay
    spawner: Optional[Spawner] = None
    destroyer: float = 1000.0
    fixtures: List[Tuple[str, float]] = field(default_factory=list)

    def validate(self) -> None:
        positions = [pos for _, pos in self.fixtures]
        if any(not 0 <= p <= self.length for p in positions):
            raise WorldConfigError(f"lane {self.key}: fixture outside [0, length]")
        if any(b <= a for a, b in zip(positions, positions[1:])):
            raise WorldConfigError(f"lane {self.key}: fixtures not strictly ordered")


class World:
    def __init__(self, tick_rate: int = 50, seed: int = 1):
        if tick_rate <= 0:
            raise WorldConfigError("tick_rate must be positive")
        self.tick_rate = tick_rate
        self.dt = 1.0 / tick_rate
        self.tick_count = 0
        self.rng = random.Random(seed)
        self.seed = seed
        self.bus = SignalBus()
        self.lanes: Dict[str, Lane] = {}
        self.vehicles: Dict[int, Vehicle] = {}
        self.entities: List[Entity] = []
        self.event_log: List[dict] = []
        self.smoke_alpha: Dict[int, float] = {1: 0.0, 2: 0.0}
        self.ambient_intensity = 0.0
        self._next_vid = 1
        self._scenario_spawn_pos = 500.0

    @property
    def sim_time(self) -> float:
        return self.tick_count / self.tick_rate

    # -- construction ---------------------------------------------------

    def add_lane(self, lane: Lane) -> Lane:
        lane.validate()
        if lane.key in self.lanes:
            raise WorldConfigError(f"duplicate lane {lane.key}")
        self.lanes[lane.key] = lane
        return lane

    def add_entity(self, entity: Entity) -> Entity:
        for sig in entity.signal_defs():
            self.bus.register(sig)
        self.entities.append(entity)
        return entity

    def add_button(self, name: str, group: str = "Operator") -> SignalDef:
        return self.bus.register(SignalDef(name, Direction.INPUT, Kind.BUTTON, group))

    # -- queries ----------------------------------------------------------

    def lane_vehicles(self, lanes) -> List[Vehicle]:
        if isinstance(lanes, str):
            lanes = (lanes,)
        keys = set(lanes or ())
        return [v for v in self.vehicles.values() if v.alive and v.lane in keys]

    def tube_vehicles(self, tube: int) -> List[Vehicle]:
        keys = {lane.key for lane in self.lanes.values() if lane.tube == tube}
        return [v for v in self.vehicles.values() if v.alive and v.lane in keys]

    def log_event(self, channel: str, kind: str) -> None:
        self.event_log.append({"time": self.sim_time, "channel": channel, "kind": kind})

    def stop_zones(self, lane: Lane) -> List[Tuple[float, float]]:
        """Active blocking intervals for a lane (none on wrong-way overlays)."""
        if lane.direction < 0:
            return []
        zones = []
        for entity in self.entities:
            zone = getattr(entity, "stop_zone", None)
            if zone is None or not getattr(entity, "stop_active", False):
                continue
            if lane.key in getattr(entity, "lanes", ()):
                zones.append(zone)
        return zones

    # -- scenario-facing mutations ---------------------------------------

    def set_traffic(self, enabled: bool) -> None:
        for lane in self.lanes.values():
            if lane.spawner is not None and lane.direction > 0:
                lane.spawner.enabled = enabled

    def set_smoke(self, tube: int, level: int) -> None:
        if tube not in self.smoke_alpha:
            raise WorldConfigError(f"no tube {tube}")
        if not 0 <= level <= 8:
            raise WorldConfigError("smoke level must be 0..8")
        self.smoke_alpha[tube] = level / 8.0

    def set_light_intensity(self, value: float) -> None:
        self.ambient_intensity = value

    def fill_cellar(self, name: str, inflow: float) -> None:
        aliases = {"clean": "PumpCellarClean", "dirty": "PumpCellarDirty",
                   "fire": "FireExtinguishing"}
        needle = aliases.get(name, name)
        matches = [
            e for e in self.entities
            if isinstance(e, PumpCellar) and needle in e.group
        ]
        if len(matches) != 1:
            raise WorldConfigError(f"cellar {name!r} matches {len(matches)} entities")
        matches[0].inflow = inflow

    def toggle(self, path: str) -> None:
        """Click-to-interact: ``Group/Path[/element]`` flips a door or part."""
        for entity in self.entities:
            if path == entity.group:
                entity.toggle("door")
                return
            if path.startswith(entity.group + "/"):
                entity.toggle(path[len(entity.group) + 1 :])
                return
        raise WorldConfigError(f"nothing toggleable at {path!r}")

    def spawn(self, kind: VehicleKind, lane_key: str,
              position: Optional[float] = None) -> Vehicle:
        lane = self.lanes.get(lane_key)
        if lane is None:
            raise WorldConfigError(f"no lane {lane_key!r}")
        if position is None:
            if kind is VehicleKind.STATIONARY:
                position = self._scenario_spawn_pos
            elif lane.spawner is not None:
                position = lane.spawner.position
            else:
                position = 0.0
        vehicle = Vehicle.create(self._next_vid, kind, lane.key, position)
        self._next_vid += 1
        self.vehicles[vehicle.vid] = vehicle
        self.log_event(lane.key, f"spawn_{kind.value}")
        return vehicle

    def delete_traffic(self) -> None:
        for vehicle in self.vehicles.values():
            vehicle.alive = False
        self.vehicles.clear()
        self.log_event("traffic", "delete_all")

    # -- stepping ---------------------------------------------------------

    def initialize(self) -> None:
        """Publish the initial sensor image at t=0 without moving physics."""
        saved = self.dt
        self.dt = 0.0
        try:
            self._tick_entities()
        finally:
            self.dt = saved

    def step(self) -> None:
        self.tick_count += 1
        self._tick_spawners()
        self._tick_vehicles()
        self._tick_entities()

    def _tick_spawners(self) -> None:
        for lane in self.lanes.values():
            spawner = lane.spawner
            if spawner is None:
                continue
            kind = spawner.tick(self.rng, self.dt)
            if kind is not None:
                vehicle = self.spawn(kind, lane.key, spawner.position)
                spawner.last_spawned = vehicle.vid
            last = self.vehicles.get(spawner.last_spawned) if spawner.last_spawned else None
            spawner.update_gate(last)

    def _tick_vehicles(self) -> None:
        # Blocking is evaluated against pre-move positions for every vehicle.
        zones = {lane.key: self.stop_zones(lane) for lane in self.lanes.values()}
        alive = [v for v in self.vehicles.values() if v.alive]
        peers: Dict[str, List[Vehicle]] = {}
        for vehicle in alive:
            peers.setdefault(vehicle.lane, []).append(vehicle)
        blocked = {
            v.vid: is_blocked(v, zones[v.lane], peers[v.lane]) for v in alive
        }
        for vehicle in alive:
            vehicle_tick(vehicle, blocked[vehicle.vid], self.dt)
        # Despawn on crossing the destroyer; occupancy releases immediately.
        for vehicle in alive:
            if vehicle.s > self.lanes[vehicle.lane].destroyer:
                vehicle.alive = False
                del self.vehicles[vehicle.vid]
                self.log_event(vehicle.lane, f"despawn_{vehicle.kind.value}")

    def _tick_entities(self) -> None:
        t = self.sim_time
        for entity in self.entities:
            sensors = entity.tick(self)
            for short in entity.sensor_shorts:
                self.bus.write(entity.sens_name(short), sensors[short], t)

    # -- integrity ---------------------------------------------------------

    def check_invariants(self) -> None:
        for vehicle in self.vehicles.values():
            assert vehicle.speed >= 0, f"vehicle {vehicle.vid} reversed"
        by_lane: Dict[str, List[Vehicle]] = {}
        for vehicle in self.vehicles.values():
            by_lane.setdefault(vehicle.lane, []).append(vehicle)
        for lane_key, group in by_lane.items():
            group.sort(key=lambda v: v.s)
            for left, right in zip(group, group[1:]):
                assert left.s <= right.s - right.length + 1e-9, (
                    f"overlap in {lane_key}: #{left.vid} and #{right.vid}"
                )
        for entity in self.entities:
            if isinstance(entity, Barrier) and entity.last_sensors:
                motion = [
                    entity.last_sensors[k]
                    for k in ("s_opened", "s_opening", "s_stopped",
                              "s_closing", "s_closed")
                ]
                assert sum(motion) == 1, f"{entity.group}: motion sensors {motion}"
            if isinstance(entity, PumpCellar):
                assert 0 <= entity.h <= entity.h_max

    # -- ui ------------------------------------------------------------------

    def snapshot_entities(self) -> Dict[str, dict]:
        return {e.group: e.view() for e in self.entities if e.view()}

    def snapshot_vehicles(self) -> List[dict]:
        return [
            {
                "id": v.vid,
                "kind": v.kind.value,
                "lane": v.lane,
                "s": round(v.s, 2),
                "speed": round(v.speed, 1),
                "length": v.length,
            }
            for v in self.vehicles.values()
            if v.alive
        ]


# -- profiles ----------------------------------------------------------------

# Left-lane traffic is car-heavy, the right lane carries the trucks.
# Overheight trucks are never part of background traffic; scenarios add them.
_LEFT_MIX = [VehicleKind.CAR, VehicleKind.CAR, VehicleKind.CAR, VehicleKind.SMALL_TRUCK]
_RIGHT_MIX = [VehicleKind.CAR, VehicleKind.SMALL_TRUCK, VehicleKind.LOW_TRUCK]

_CLEAN_THRESHOLDS = {"low": 0.2, "start": 0.8, "maxStart": 1.2,
                     "lowHigh": 1.5, "highHigh": 1.8}
_DIRTY_THRESHOLDS = {"low": 0.2}
_FIRE_THRESHOLDS = {"low": 0.3, "high": 1.5}

DEFAULT_BUTTONS = (
    "ivar_M_M_HW_Operator_button_close_tube_1",
    "ivar_M_M_HW_Operator_button_open_tube_1",
    "ivar_M_M_HW_Operator_button_close_tube_2",
    "ivar_M_M_HW_Operator_button_open_tube_2",
)


def _spawner(lane_key: str, mix, cfg: dict) -> Spawner:
    spawner = Spawner(
        lane=lane_key,
        position=0.0,
        mix=list(mix),
        t_inter_min=cfg.get("t_inter_min", 2.0),
        t_inter_max=cfg.get("t_inter_max", 6.0),
        min_spawn_dist=cfg.get("min_spawn_dist", 50.0),
    )
    return spawner


def _tube_lane(world: World, tube: int, index: int, length: float,
               spawner: Optional[Spawner]) -> Lane:
    fixtures = [
        ("spawner", 0.0),
        ("barrier", 120.0),
        ("barrier", 140.0),
        ("beam", 150.0),
        ("stop_line", 160.0),
        ("stop_line", 170.0),
        ("destroyer", length),
    ]
    return world.add_lane(Lane(
        key=f"tube{tube}_lane{index}", tube=tube, index=index, length=length,
        direction=1, spawner=spawner, destroyer=length, fixtures=fixtures,
    ))


def _build_tube(world: World, tube: int, cfg: dict) -> None:
    length = cfg.get("lane_length", 1000.0)
    spawn_cfg = cfg.get("spawner", {})
    lane0 = _tube_lane(world, tube, 0, length,
                       _spawner(f"tube{tube}_lane0", _LEFT_MIX, spawn_cfg))
    lane1 = _tube_lane(world, tube, 1, length,
                       _spawner(f"tube{tube}_lane1", _RIGHT_MIX, spawn_cfg))
    world.add_lane(Lane(
        key=f"tube{tube}_wrong", tube=tube, index=0, length=length,
        direction=-1, spawner=None, destroyer=length,
        fixtures=[("spawner", 0.0), ("destroyer", length)],
    ))
    lanes = (lane0.key, lane1.key)
    prefix = f"TrafficTube_{tube}"

    barriers = []
    for n, pos in ((1, 120.0), (2, 140.0)):
        barriers.append(world.add_entity(Barrier(
            f"{prefix}/BoomBarrier_{n}",
            obstacle_zone=(pos - 3.0, pos + 3.0),
            stop_zone=(pos, pos + 0.5),
            lanes=lanes,
        )))
    lights = []
    for n, pos in ((1, 160.0), (2, 170.0)):
        lights.append(world.add_entity(TrafficLight(
            f"{prefix}/TrafficLight_{n}", stop_zone=(pos, pos + 0.5), lanes=lanes,
        )))
    world.add_entity(J32Sign(f"{prefix}/J32_1"))
    world.add_entity(HeightDetection(
        f"{prefix}/HeightDetection_1", position=150.0, lanes=lanes,
    ))
    world.add_entity(LightBank(f"{prefix}/LightBank_1"))
    ambient = cfg.get("ambient", {})
    world.add_entity(LightSensor(
        f"{prefix}/LightSensor_1",
        i_min=ambient.get("i_min", 0.0), i_max=ambient.get("i_max", 1.0),
    ))
    world.add_entity(SmokeDetector(f"{prefix}/SmokeDetector_1", tube=tube))
    world.add_entity(SosSystem(f"{prefix}/SOS_1", tube=tube))
    world.add_entity(Broadcast(f"{prefix}/Broadcast_1"))
    world.add_entity(EmergencyExit(f"{prefix}/EmergencyExit_1"))
    world.add_entity(AidCabinet(f"{prefix}/AidCabinetA_1",
                                ("telephone", "extinguisher", "hose")))
    world.add_entity(AidCabinet(f"{prefix}/AidCabinetC_1",
                                ("telephone", "handExtinguisher")))
    world.add_entity(Ventilation(f"{prefix}/Ventilation_1"))
    world.add_entity(TubeControl(f"{prefix}/TubeControl_1", lights, barriers))


def _build_corridor(world: World) -> None:
    prefix = "CentralCorridor"
    world.add_entity(MainDoor(f"{prefix}/MainDoor_1"))
    world.add_entity(MainDoor(f"{prefix}/MainDoor_2"))
    world.add_entity(EscapeRouteIndication(f"{prefix}/EscapeRoute_1"))
    world.add_entity(CorridorLighting(f"{prefix}/Lighting_1"))
    world.add_entity(Overpressure(f"{prefix}/Overpressure_1"))
    world.add_entity(Broadcast(f"{prefix}/Broadcast_1"))


def _build_other_systems(world: World) -> None:
    world.add_entity(BroadcastSync("BroadcastSync_1"))
    for name in ("EmergencyPassage_North", "EmergencyPassage_South"):
        world.add_entity(Barrier(name, default_open=False, obstacle_zone=None))
    world.add_entity(PumpCellar("PumpCellarClean_1", _CLEAN_THRESHOLDS))
    world.add_entity(PumpCellar("PumpCellarDirty_1", _DIRTY_THRESHOLDS))
    world.add_entity(PumpCellar("FireExtinguishing_1", _FIRE_THRESHOLDS, h=1.0))


def _apply_overrides(world: World, overrides: Dict[str, dict]) -> None:
    by_group = {e.group: e for e in world.entities}
    for group, params in overrides.items():
        entity = by_group.get(group)
        if entity is None:
            raise WorldConfigError(f"override for unknown entity {group!r}")
        for key, value in params.items():
            if not hasattr(entity, key):
                raise WorldConfigError(f"{group}: no parameter {key!r}")
            setattr(entity, key, value)
        if isinstance(entity, Barrier):
            entity.theta = entity.open_rotation if entity.default_open else 0.0


def build_world(config: Optional[dict] = None, initialize: bool = True) -> World:
    """Assemble a world from a config mapping (see README for the schema).

    With ``initialize=False`` the caller publishes the initial sensor image
    itself (the harness does this after attaching its trace recorder).
    """
    cfg = dict(config or {})
    world = World(tick_rate=cfg.get("tick_rate", 50), seed=cfg.get("seed", 1))
    world._scenario_spawn_pos = cfg.get("stationary_pos", 500.0)
    profile = cfg.get("profile", "tunnel")
    if profile == "tunnel":
        for tube in (1, 2):
            _build_tube(world, tube, cfg)
        _build_corridor(world)
        _build_other_systems(world)
        for name in cfg.get("buttons", DEFAULT_BUTTONS):
            world.add_button(name)
    elif profile == "single_barrier":
        length = cfg.get("lane_length", 1000.0)
        lane = world.add_lane(Lane(
            key="tube1_lane0", tube=1, index=0, length=length, direction=1,
            spawner=_spawner("tube1_lane0", _LEFT_MIX, cfg.get("spawner", {})),
            destroyer=length,
            fixtures=[("spawner", 0.0), ("barrier", 120.0), ("destroyer", length)],
        ))
        world.add_entity(Barrier(
            "TrafficTube_1/BoomBarrier_1",
            obstacle_zone=(117.0, 123.0),
            stop_zone=(120.0, 120.5),
            lanes=(lane.key,),
        ))
        for name in cfg.get("buttons", ()):
            world.add_button(name)
    else:
        raise WorldConfigError(f"unknown profile {profile!r}")
    _apply_overrides(world, cfg.get("overrides", {}))
    if cfg.get("traffic_on", False):
        world.set_traffic(True)
    for lane in world.lanes.values():
        if lane.spawner is not None:
            lane.spawner.prime(world.rng)
    if initialize:
        world.initialize()
    return world
