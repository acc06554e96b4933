"""Deterministic fixed-timestep plant: lanes, vehicles and controlled entities."""

from .vehicles import Vehicle, VehicleKind, Spawner, KIND_PARAMS  # noqa: F401
from .entities import (  # noqa: F401
    Barrier,
    level_from_intensity,
    one_hot_apply,
)
from .world import World, Lane, build_world  # noqa: F401
