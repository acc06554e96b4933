"""Single-lane vehicle kinematics and spawning.

Speeds are km/h, accelerations km/h per second, positions meters along the
lane.  A vehicle occupies [s - length, s] with s the front bumper and
senses [s, s + sense_range] ahead; it brakes while anything blocking sits
in that window and accelerates back towards its top speed otherwise.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Sequence, Tuple


class VehicleKind(Enum):
    CAR = "car"
    SMALL_TRUCK = "small_truck"
    LOW_TRUCK = "low_truck"
    HIGH_TRUCK = "high_truck"
    SPEEDING = "speeding"
    STATIONARY = "stationary"
    WRONG_WAY = "wrongway"


@dataclass(frozen=True)
class KindParams:
    length: float
    height: float
    max_speed: float
    acc: float
    dec: float
    sense_range: float


# Dimensions follow the modeled vehicles; kinematic defaults are chosen so
# the braking distance at top speed stays inside the sense range
# (100 km/h at 40 km/h/s stops in ~34.7 m < 40 m).
KIND_PARAMS = {
    VehicleKind.CAR: KindParams(4.2, 1.4, 100.0, 10.0, 40.0, 40.0),
    VehicleKind.SMALL_TRUCK: KindParams(6.6, 3.25, 90.0, 8.0, 40.0, 40.0),
    VehicleKind.LOW_TRUCK: KindParams(6.6, 3.65, 90.0, 8.0, 40.0, 40.0),
    VehicleKind.HIGH_TRUCK: KindParams(16.6, 4.65, 90.0, 8.0, 40.0, 40.0),
    # Speeding vehicles need a longer horizon: 160 km/h brakes in ~88.9 m.
    VehicleKind.SPEEDING: KindParams(4.2, 1.4, 160.0, 15.0, 40.0, 100.0),
    VehicleKind.STATIONARY: KindParams(4.2, 1.4, 0.0, 0.0, 40.0, 40.0),
    VehicleKind.WRONG_WAY: KindParams(4.2, 1.4, 100.0, 10.0, 40.0, 40.0),
}


@dataclass
class Vehicle:
    vid: int
    kind: VehicleKind
    lane: str
    s: float
    speed: float
    max_speed: float
    acc: float
    dec: float
    length: float
    height: float
    sense_range: float
    alive: bool = True

    @classmethod
    def create(cls, vid: int, kind: VehicleKind, lane: str, s: float) -> "Vehicle":
        p = KIND_PARAMS[kind]
        # New vehicles start with half the maximum speed.
        return cls(
            vid=vid, kind=kind, lane=lane, s=s, speed=p.max_speed / 2,
            max_speed=p.max_speed, acc=p.acc, dec=p.dec,
            length=p.length, height=p.height, sense_range=p.sense_range,
        )

    @property
    def body(self) -> Tuple[float, float]:
        return (self.s - self.length, self.s)

    @property
    def sense_zone(self) -> Tuple[float, float]:
        return (self.s, self.s + self.sense_range)


def intervals_overlap(a: Tuple[float, float], b: Tuple[float, float]) -> bool:
    """Positive-measure overlap; touching endpoints do not count."""
    return min(a[1], b[1]) > max(a[0], b[0])


def vehicle_tick(vehicle: Vehicle, blocked: bool, dt: float) -> None:
    """Advance one step: accelerate or brake, never reverse, then move."""
    if blocked:
        vehicle.speed -= vehicle.dec * dt
    elif vehicle.speed < vehicle.max_speed:
        vehicle.speed = min(vehicle.speed + vehicle.acc * dt, vehicle.max_speed)
    if vehicle.speed < 0.0:
        vehicle.speed = 0.0
    vehicle.s += vehicle.speed / 3.6 * dt


def is_blocked(
    vehicle: Vehicle,
    stop_zones: Sequence[Tuple[float, float]],
    others: Iterable[Vehicle],
) -> bool:
    zone = vehicle.sense_zone
    for stop in stop_zones:
        if intervals_overlap(zone, stop):
            return True
    for other in others:
        if other.vid != vehicle.vid and other.alive:
            if intervals_overlap(zone, other.body):
                return True
    return False


@dataclass
class Spawner:
    lane: str
    position: float
    mix: List[VehicleKind]
    t_inter_min: float = 2.0
    t_inter_max: float = 6.0
    min_spawn_dist: float = 50.0
    enabled: bool = False
    timer: float = 0.0
    last_spawned: Optional[int] = None
    # Gate distance carried between ticks; a disabled spawner keeps it open.
    _last_dist: float = field(default=0.0, repr=False)

    def __post_init__(self) -> None:
        if not (0 < self.t_inter_min <= self.t_inter_max):
            raise ValueError("need 0 < t_inter_min <= t_inter_max")
        self._last_dist = self.min_spawn_dist + 1.0

    def prime(self, rng: random.Random) -> None:
        self.timer = rng.uniform(self.t_inter_min, self.t_inter_max)

    def tick(self, rng: random.Random, dt: float) -> Optional[VehicleKind]:
        """Count the timer down; returns a kind to spawn when due.

        The caller creates the vehicle and then refreshes the gate with
        :meth:`update_gate` so the distance check sees the newest spawn.
        """
        self.timer -= dt
        if self.timer < 0 and self._last_dist > self.min_spawn_dist and self.enabled:
            self.timer = rng.uniform(self.t_inter_min, self.t_inter_max)
            return self.mix[rng.randrange(len(self.mix))]
        return None

    def update_gate(self, last_vehicle: Optional[Vehicle]) -> None:
        """Track distance to the last spawned vehicle.

        A disabled spawner holds the gate open so spawning can resume
        immediately when re-enabled; a despawned vehicle reopens it too.
        """
        if self.enabled and last_vehicle is not None and last_vehicle.alive:
            self._last_dist = abs(last_vehicle.s - self.position)
        else:
            self._last_dist = self.min_spawn_dist + 1.0
