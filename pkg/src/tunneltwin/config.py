"""World configuration files and bundled assets.

A world config is a JSON object; every key is optional:

    profile          "tunnel" (default) or "single_barrier"
    tick_rate        plant update rate in Hz (default 50)
    seed             RNG seed (default 1)
    lane_length      meters (default 1000)
    stationary_pos   where scenario-spawned breakdown vehicles appear
    traffic_on       start with spawners enabled (default false)
    spawner          {t_inter_min, t_inter_max, min_spawn_dist}
    ambient          {i_min, i_max} light-sensor calibration
    buttons          list of operator button signal names
    overrides        {entity group: {parameter: value}}

``builtin:<name>`` references resolve to files bundled under
``tunneltwin/data``.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Union

from .plant.world import WorldConfigError


def data_path(name: str) -> Path:
    base = resources.files("tunneltwin") / "data"
    path = Path(str(base / name))
    if not path.exists():
        raise WorldConfigError(f"no bundled asset {name!r}")
    return path


def read_text(ref: Union[str, Path]) -> str:
    """Read a file path or a ``builtin:<name>`` bundled asset."""
    ref = str(ref)
    if ref.startswith("builtin:"):
        return data_path(ref[len("builtin:") :]).read_text(encoding="utf-8")
    return Path(ref).read_text(encoding="utf-8")


def load_world_config(ref: Union[str, Path, None]) -> dict:
    if ref is None:
        return {}
    try:
        config = json.loads(read_text(ref))
    except json.JSONDecodeError as exc:
        raise WorldConfigError(f"{ref}: not valid JSON ({exc})") from exc
    if not isinstance(config, dict):
        raise WorldConfigError(f"{ref}: config must be a JSON object")
    return config
