"""Deterministic outdoor scene simulation and software rendering."""
from importlib.resources import files
from pathlib import Path

__version__ = "0.1.0"


def demo_scene_path() -> Path:
    """Path of the bundled bay demo scene."""
    return Path(str(files(__name__) / "demo" / "scene.toml"))
