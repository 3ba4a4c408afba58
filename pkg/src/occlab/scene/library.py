import os
from os import path

from ..config import load_toml, resolve_inherit
from ..errors import ConfigurationError
from .oracle import Primitive, SceneOracle


__all__ = ["library_path", "load_scene", "available_scenes"]

_LIBRARY_DIR = path.join(path.dirname(path.dirname(__file__)), "scene_libraries")


def available_scenes():
    return sorted(
        path.splitext(f)[0] for f in os.listdir(_LIBRARY_DIR) if f.endswith(".toml")
    )


def library_path(name):
    """A shipped scene library by name, or any TOML file by path."""
    if path.isfile(name):
        return name
    candidate = path.join(_LIBRARY_DIR, f"{name}.toml")
    if not path.isfile(candidate):
        raise ConfigurationError(
            f"Unknown scene '{name}', expected a file or one of {available_scenes()}"
        )
    return candidate


def load_scene(name, **kwargs):
    """
    Builds a SceneOracle from a primitive library. Each table is one primitive and may
    `inherit` another table; the optional [scene] table lists which primitives make up the
    scene (all of them by default).

    Args:
        name (str): Library name under occlab/scene_libraries, or a path
        gt_threshold (float, optional): Ground-truth occupancy threshold. Defaults to the
            library's value, else 0.5.

    Returns:
        SceneOracle: The analytic scene
    """
    file_name = library_path(name)
    data = load_toml(file_name)
    tables = resolve_inherit({k: v for k, v in data.items() if isinstance(v, dict)})
    scene = tables.pop("scene", {})
    names = scene.get("primitives", list(tables))
    primitives = []
    for primitive_name in names:
        if primitive_name not in tables:
            raise ConfigurationError(f"Scene lists unknown primitive '{primitive_name}'")
        table = dict(tables[primitive_name])
        if "kind" not in table:
            raise ConfigurationError(f"Primitive '{primitive_name}' has no kind")
        primitives.append(Primitive(table.pop("kind"), name=primitive_name, **table))
    return SceneOracle(
        primitives,
        gt_threshold=kwargs.get("gt_threshold", scene.get("gt_threshold", 0.5)),
        name=scene.get("name", path.splitext(path.basename(file_name))[0]),
    )
