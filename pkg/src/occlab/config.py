"""
Experiment configuration: TOML presets with `inherit`, one small class per section, command
line overrides and the content hashes echoed into every output manifest.
"""

import copy
import hashlib
import logging
import os
from os import path

from .errors import ConfigurationError, reject_unknown_keys, require
from .fields.networks import NetworkConfig
from .losses import LossWeights

logger = logging.getLogger(__name__)

__all__ = [
    "load_toml",
    "parse_toml_string",
    "resolve_inherit",
    "deep_merge",
    "preset_path",
    "load_config",
    "apply_override",
    "blob_hash",
    "input_hashes",
    "resolve_output_dir",
    "ExperimentConfig",
    "OUTPUT_ROOT_ENV",
]

OUTPUT_ROOT_ENV = "OCCLAB_OUTPUT_ROOT"

_PACKAGE_DIR = path.dirname(__file__)


###########################################################
# TOML plumbing
###########################################################


def load_toml(file_name):
    """Reads a TOML file with tomllib on Python 3.11+ and the toml package before."""
    from sys import version_info

    if not path.isfile(file_name):
        raise ConfigurationError(f"Config file not found: {file_name}")
    try:
        if version_info < (3, 11):
            import toml

            return toml.load(file_name)
        import tomllib

        with open(file_name, "rb") as f:
            return tomllib.load(f)
    except ConfigurationError:
        raise
    except Exception as err:
        raise ConfigurationError(f"Could not parse {file_name}: {err}") from err


def parse_toml_string(text):
    from sys import version_info

    if version_info < (3, 11):
        import toml

        return toml.loads(text)
    import tomllib

    return tomllib.loads(text)


def deep_merge(base, override):
    """Returns a copy of `base` with the tables of `override` merged in recursively."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def resolve_inherit(tables):
    """
    Resolves `inherit` keys between the tables of one TOML database. A child starts from a copy
    of its (recursively resolved) parent and its own keys take precedence.

    Args:
        tables (dict): Table name -> table dict, as loaded from a TOML library

    Returns:
        dict: The same tables with every `inherit` key expanded and removed
    """
    resolved = {}

    def resolve(name, chain):
        if name in resolved:
            return resolved[name]
        if name not in tables:
            raise ConfigurationError(f"Table '{chain[-1]}' inherits unknown table '{name}'")
        if name in chain:
            raise ConfigurationError(f"Inheritance cycle: {' -> '.join(chain + [name])}")
        table = tables[name]
        if not isinstance(table, dict):
            resolved[name] = table
            return table
        table = dict(table)
        parent = table.pop("inherit", None)
        if parent is not None:
            table = deep_merge(resolve(parent, chain + [name]), table)
        resolved[name] = table
        return table

    for name in tables:
        resolve(name, [])
    return resolved


def preset_path(name):
    """Path of a shipped preset, or `name` itself when it points to an existing file."""
    if path.isfile(name):
        return name
    candidate = path.join(_PACKAGE_DIR, "presets", f"{name}.toml")
    if not path.isfile(candidate):
        raise ConfigurationError(f"Unknown preset '{name}'")
    return candidate


def _load_with_inherit(file_name, chain=()):
    """Loads a config file and the chain of files or presets it inherits from."""
    file_name = path.abspath(file_name)
    if file_name in chain:
        raise ConfigurationError(f"Config inheritance cycle through {file_name}")
    data = load_toml(file_name)
    files = [file_name]
    parent = data.pop("inherit", None)
    if parent is None:
        return data, files
    candidate = path.join(path.dirname(file_name), parent)
    parent_file = candidate if path.isfile(candidate) else preset_path(parent)
    base, base_files = _load_with_inherit(parent_file, chain + (file_name,))
    return deep_merge(base, data), base_files + files


def apply_override(data, assignment):
    """
    Applies one `section.key=value` override. The value is read as a TOML literal, and falls
    back to a plain string when it is not one.
    """
    if "=" not in assignment:
        raise ConfigurationError(f"Override '{assignment}' is not of the form key=value")
    key, raw = assignment.split("=", 1)
    key = key.strip()
    try:
        value = parse_toml_string(f"value = {raw.strip()}")["value"]
    except Exception:
        value = raw.strip()
    parts = key.split(".")
    target = data
    for part in parts[:-1]:
        target = target.setdefault(part, {})
        if not isinstance(target, dict):
            raise ConfigurationError(f"Override '{key}' does not name a config table")
    target[parts[-1]] = value
    return data


###########################################################
# Hashes and output locations
###########################################################


def blob_hash(content):
    """Git blob hash of bytes: sha1 of 'blob <len>\\0' followed by the content."""
    header = f"blob {len(content)}\0".encode()
    return hashlib.sha1(header + content).hexdigest()


def input_hashes(file_names):
    """Maps each input file's base name to its git blob hash."""
    hashes = {}
    for file_name in file_names:
        with open(file_name, "rb") as f:
            hashes[path.basename(file_name)] = blob_hash(f.read())
    return dict(sorted(hashes.items()))


def resolve_output_dir(directory):
    """Relative output directories resolve against $OCCLAB_OUTPUT_ROOT when it is set."""
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.isabs(directory):
        return path.join(root, directory)
    return directory


###########################################################
# Sections
###########################################################


class ConfigSection:
    """
    A flat table of the experiment config. Subclasses list their keys and defaults in
    DEFAULTS and check ranges in `validate`.
    """

    NAME = ""
    DEFAULTS = {}

    def __init__(self, **kwargs):
        reject_unknown_keys(self.NAME, kwargs, self.DEFAULTS)
        for key, default in self.DEFAULTS.items():
            setattr(self, key, copy.deepcopy(kwargs.get(key, default)))
        self.validate()

    def __repr__(self):
        return f"occlab ConfigSection - [{self.NAME}]"

    def validate(self):
        pass

    def as_dict(self):
        return {key: getattr(self, key) for key in self.DEFAULTS}


class SceneSection(ConfigSection):
    NAME = "scene"
    DEFAULTS = {
        "library": "desk",
        "cameras": 24,
        "width": 64,
        "height": 64,
        "fov_deg": 45.0,
        "distance": 3.2,
        "min_elevation_deg": 15.0,
        "max_elevation_deg": 75.0,
        "quadrature": 1024,
        "gt_threshold": 0.5,
        "val_stride": 8,
        "background": [0.0, 0.0, 0.0],
        "bounds": [-1.0, 1.0],
        "dataset_dir": "dataset",
    }

    def validate(self):
        require(self.cameras >= 1, "scene.cameras must be at least 1")
        require(self.width >= 1 and self.height >= 1, "scene image size must be positive")
        require(0 < self.fov_deg < 180, "scene.fov_deg must lie in (0, 180)")
        require(self.quadrature >= 512, "scene.quadrature must be at least 512")
        require(self.val_stride >= 2, "scene.val_stride must be at least 2")
        require(len(self.background) == 3, "scene.background needs 3 values")
        require(len(self.bounds) == 2 and self.bounds[1] > self.bounds[0], "bad scene.bounds")
        require(self.distance > 0, "scene.distance must be positive")


class LossSection(ConfigSection):
    NAME = "loss"
    DEFAULTS = {
        "w_r": 1.0,
        "w_o": 0.01,
        "w_d": 0.1,
        "v": 8,
        "occupancy_loss": "imbalanced",
    }

    def validate(self):
        LossWeights(w_r=self.w_r, w_o=self.w_o, w_d=self.w_d)
        require(int(self.v) >= 1, "loss.v must be at least 1")
        if self.occupancy_loss not in ("imbalanced", "balanced"):
            raise ConfigurationError("loss.occupancy_loss must be 'imbalanced' or 'balanced'")

    @property
    def weights(self):
        return LossWeights(w_r=self.w_r, w_o=self.w_o, w_d=self.w_d)


class SamplerSection(ConfigSection):
    NAME = "sampler"
    DEFAULTS = {
        "rays_per_batch": 128,
        "samples_per_ray": 64,
        "coarse_samples": 128,
        "split_factor": 8,
        "dense_samples": 512,
        "jitter": True,
    }

    def validate(self):
        require(self.rays_per_batch >= 1, "sampler.rays_per_batch must be at least 1")
        require(self.samples_per_ray >= 2, "sampler.samples_per_ray must be at least 2")
        require(self.coarse_samples >= 2, "sampler.coarse_samples must be at least 2")
        require(self.split_factor >= 1, "sampler.split_factor must be at least 1")
        require(self.dense_samples >= 2, "sampler.dense_samples must be at least 2")


class OptimizerSection(ConfigSection):
    NAME = "optimizer"
    DEFAULTS = {"lr": 5e-4, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8}

    def validate(self):
        require(self.lr > 0, "optimizer.lr must be positive")
        require(0 <= self.beta1 < 1 and 0 <= self.beta2 < 1, "optimizer betas lie in [0, 1)")
        require(self.eps > 0, "optimizer.eps must be positive")


class TrainSection(ConfigSection):
    NAME = "train"
    DEFAULTS = {
        "steps": 5000,
        "log_every": 50,
        "stats_every": 50,
        "checkpoint_every": 1000,
    }

    def validate(self):
        require(self.steps >= 0, "train.steps must be nonnegative")
        for key in ("log_every", "stats_every", "checkpoint_every"):
            require(getattr(self, key) >= 1, f"train.{key} must be at least 1")


class GridSection(ConfigSection):
    NAME = "grid"
    DEFAULTS = {
        "resolution": 32,
        "decay": 0.95,
        "threshold": 0.01,
        "update_every": 16,
        "cell_fraction": 1.0,
        "warmup_updates": 0,
        "initial_value": 1.0,
        "track_with_occupancy": True,
        "steps": 2000,
    }

    def validate(self):
        require(self.resolution >= 1, "grid.resolution must be at least 1")
        require(0 < self.decay <= 1, "grid.decay must lie in (0, 1]")
        require(self.threshold >= 0, "grid.threshold must be nonnegative")
        require(self.update_every >= 1, "grid.update_every must be at least 1")
        require(0 < self.cell_fraction <= 1, "grid.cell_fraction must lie in (0, 1]")
        require(self.steps >= 0, "grid.steps must be nonnegative")


class GuidedSection(ConfigSection):
    NAME = "guided"
    DEFAULTS = {
        "steps": 2000,
        "rays_per_batch": 64,
        "layers": 8,
        "width": 64,
        "sampler": "network",
        "eval_every": 500,
        "occupancy_checkpoint": "occupancy/final.ckpt",
        "grid_snapshot": "grid_baseline/final.grid",
    }

    def validate(self):
        require(self.steps >= 0, "guided.steps must be nonnegative")
        require(self.rays_per_batch >= 1, "guided.rays_per_batch must be at least 1")
        require(self.layers >= 1 and self.width >= 1, "guided MLP size must be positive")
        require(self.eval_every >= 1, "guided.eval_every must be at least 1")
        if self.sampler not in ("network", "grid", "dense"):
            raise ConfigurationError("guided.sampler must be 'network', 'grid' or 'dense'")


class EvalSection(ConfigSection):
    NAME = "eval"
    DEFAULTS = {
        "resolution": 32,
        "probes": 1,
        "jitter": False,
        "depth_opacity": 0.5,
        "depth_source": "oracle",
        "pointcloud_rays": 256,
        "pointcloud_mode": "rgba",
    }

    def validate(self):
        require(self.resolution >= 8, "eval.resolution must be at least 8")
        require(self.probes >= 1, "eval.probes must be at least 1")
        require(0 < self.depth_opacity <= 1, "eval.depth_opacity must lie in (0, 1]")
        if self.pointcloud_mode not in ("rgb", "rgba"):
            raise ConfigurationError("eval.pointcloud_mode must be 'rgb' or 'rgba'")
        if self.depth_source not in ("oracle", "occupancy"):
            raise ConfigurationError("eval.depth_source must be 'oracle' or 'occupancy'")


class BenchSection(ConfigSection):
    NAME = "bench"
    DEFAULTS = {"resolutions": [32, 64, 128], "repeats": 3, "rays": 256}

    def validate(self):
        require(all(r >= 1 for r in self.resolutions), "bench.resolutions must be positive")
        require(self.repeats >= 1 and self.rays >= 1, "bench sizes must be positive")


class SeedSection(ConfigSection):
    NAME = "seeds"
    DEFAULTS = {"scene": 0, "network": 0, "sampling": 0}


SECTIONS = {
    cls.NAME: cls
    for cls in (
        SceneSection,
        LossSection,
        SamplerSection,
        OptimizerSection,
        TrainSection,
        GridSection,
        GuidedSection,
        EvalSection,
        BenchSection,
        SeedSection,
    )
}


class ExperimentConfig:
    """
    The resolved configuration of an experiment. Every section is an attribute named after its
    table; `network` is a NetworkConfig.
    """

    def __init__(self, data=None, **kwargs):
        data = dict(data or {})
        self.output_dir = data.pop("output_dir", "runs/desk")
        self.inputs = list(kwargs.get("inputs", []))
        known = set(SECTIONS) | {"network"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"Unknown config table(s): {', '.join(unknown)}")
        for name, cls in SECTIONS.items():
            setattr(self, name, cls(**data.get(name, {})))
        self.network = NetworkConfig(**data.get("network", {}))

    def __repr__(self):
        return f"occlab ExperimentConfig - output to {self.output_dir}"

    def as_dict(self):
        out = {"output_dir": self.output_dir, "network": self.network.as_dict()}
        for name in SECTIONS:
            out[name] = getattr(self, name).as_dict()
        return dict(sorted(out.items()))

    def input_hashes(self):
        return input_hashes(self.inputs)

    @property
    def resolved_output_dir(self):
        return resolve_output_dir(self.output_dir)


def load_config(file_name=None, preset=None, overrides=()):
    """
    Builds an ExperimentConfig from a preset, a config file and `section.key=value` overrides,
    applied in that order.

    Args:
        file_name (str, optional): Config TOML; may `inherit` a preset or a relative file
        preset (str, optional): Shipped preset name. Defaults to "desk" without a file.
        overrides (iterable, optional): Override assignments

    Returns:
        ExperimentConfig: The validated configuration
    """
    data = {}
    inputs = []
    if preset is not None or file_name is None:
        data, inputs = _load_with_inherit(preset_path(preset or "desk"))
    if file_name is not None:
        file_data, file_inputs = _load_with_inherit(file_name)
        data = deep_merge(data, file_data)
        inputs += [f for f in file_inputs if f not in inputs]
    for assignment in overrides:
        apply_override(data, assignment)
    logger.debug("config assembled from %s", ", ".join(inputs))
    return ExperimentConfig(data, inputs=inputs)
