"""Bundled test worlds (128 x 256 cells at 0.1 m unless noted).

corridor   long corridors with offices and a strip of storage rooms
cluttered  open hall with scattered boxes and a walled suite
multiroom  grid of small rooms joined by doors
tworoom    8 x 8 m toy world used for training smoke tests
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..worldsim import WorldMap, load_world

BUNDLED = ("corridor", "cluttered", "multiroom", "tworoom")
TEST_WORLDS = ("corridor", "cluttered", "multiroom")


def resolve_world(name: str, base_dir: Path | str = ".") -> Path:
    if name in BUNDLED:
        return Path(str(resources.files(__name__).joinpath(f"{name}.txt")))
    path = Path(name)
    if not path.is_absolute():
        path = Path(base_dir) / path
    if not path.is_file():
        raise FileNotFoundError(f"world file not found: {path}")
    return path


def load_named(name: str, base_dir: Path | str = ".") -> WorldMap:
    return load_world(resolve_world(name, base_dir).read_text())
