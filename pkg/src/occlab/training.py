"""
Training loops.

OccupancyTrainer fits the gated field (occupancy network, scene sub-networks and empty-space
network) end to end with w_r L_r + w_o L_o + w_d L_d. RadianceTrainer fits a plain radiance
field under one of three samplers: guided by a frozen occupancy network, guided by a momentum
grid, or dense stratified sampling.

Both trainers write through a RunWriter: a CSV log, periodic checkpoints and a final
checkpoint. A non-finite loss or gradient stops training after the last good parameters have
been written to last_good.ckpt.
"""

import logging

import numpy as np
from tqdm import tqdm

from .diffcore import Adam
from .errors import ConfigurationError, NumericalError
from .evaluation.metrics import psnr
from .evaluation.stats import OccStatsLog, collect_occ_stats
from .fields import NetworkConfig, OccupancyField, RadianceField
from .grid import OccGrid
from .losses import (
    RoutingStats,
    balanced_loss,
    density_loss,
    final_loss,
    imbalanced_occupancy_loss,
    rendering_loss,
)
from .rendering import (
    GuidedSampler,
    StratifiedSampler,
    composite,
    render_image,
)

logger = logging.getLogger(__name__)

__all__ = [
    "OccupancyTrainer",
    "RadianceTrainer",
    "load_occupancy_field",
    "load_radiance_field",
    "make_grid",
    "checkpoint_name",
]


def checkpoint_name(step):
    return f"checkpoints/step_{step:06d}.ckpt"


def _scalar(value):
    if value is None:
        return None
    return value.item() if hasattr(value, "item") else float(value)


def make_grid(config):
    """A fresh momentum grid from the [grid] and [scene] sections."""
    return OccGrid(
        config.grid.resolution,
        bounds=tuple(config.scene.bounds),
        decay=config.grid.decay,
        threshold=config.grid.threshold,
        initial_value=config.grid.initial_value,
    )


def load_occupancy_field(checkpoint, fallback=None):
    """
    Rebuilds an OccupancyField from a checkpoint, using the network config stored in its header
    and falling back to `fallback` for checkpoints without one.
    """
    network = checkpoint.config.get("network")
    config = NetworkConfig(**network) if network else (fallback or NetworkConfig())
    field = OccupancyField(config)
    checkpoint.load_into(field.store, moments=False)
    return field


def load_radiance_field(checkpoint, fallback=None):
    data = checkpoint.extra.get("radiance_network")
    config = NetworkConfig(**data) if data else (fallback or NetworkConfig(scene_layers=8))
    field = RadianceField(config)
    checkpoint.load_into(field.store, moments=False)
    return field


class _Trainer:
    """Shared loop: batches, optimizer steps, logging, checkpoints and failure handling."""

    KIND = ""
    COLUMNS = []

    def __init__(self, config, dataset, writer=None, **kwargs):
        self.config = config
        self.dataset = dataset
        self.writer = writer
        self.progress = kwargs.get("progress", False)
        self.optimizer = Adam(**config.optimizer.as_dict())
        self.rng = np.random.default_rng(config.seeds.sampling)
        self.background = tuple(dataset.background)
        self.log_rows = []
        self.step = 0

    @property
    def store(self):
        return self.field.store

    def checkpoint_extra(self):
        return {}

    def write_checkpoint(self, name):
        if self.writer is None:
            return None
        extra = {"seed": self.config.seeds.network, **self.checkpoint_extra()}
        return self.writer.checkpoint(name, self.store, self.KIND, extra=extra)

    def sample_batch(self, rays_per_batch):
        return self.dataset.sample_rays(self.rng, rays_per_batch)

    def train_step(self, step):
        raise NotImplementedError

    def on_step(self, step, record):
        pass

    def finish(self):
        pass

    def run(self, steps):
        """
        Runs `steps` optimizer steps. With zero steps only the initial checkpoint is written.

        Returns:
            dict: Summary of the run for the manifest

        Raises:
            NumericalError: After writing last_good.ckpt
        """
        log_every = self.config.train.log_every
        checkpoint_every = self.config.train.checkpoint_every
        if steps == 0:
            self.write_checkpoint("final.ckpt")
            return self.summary()

        bar = tqdm(range(1, steps + 1), desc=f"train {self.KIND}", disable=not self.progress)
        for step in bar:
            try:
                record = self.train_step(step)
            except NumericalError as err:
                logger.error("step %d: %s; writing last good parameters", step, err)
                err.diagnostics.setdefault("step", step)
                self.write_checkpoint("last_good.ckpt")
                self.write_log()
                raise
            self.step = step
            self.on_step(step, record)
            if step % log_every == 0:
                self.log_rows.append({"step": step, **record})
                bar.set_postfix(loss=f"{record['L_r']:.4g}")
                logger.debug("step %d: %s", step, record)
            if step % checkpoint_every == 0 and step < steps:
                self.write_checkpoint(checkpoint_name(step))
        self.write_checkpoint("final.ckpt")
        self.finish()
        self.write_log()
        return self.summary()

    def write_log(self):
        if self.writer is not None:
            self.writer.csv("train_log.csv", self.COLUMNS, self.log_rows)

    def summary(self):
        return {"kind": self.KIND, "steps": self.step, "last": self.log_rows[-1:] or None}

    @staticmethod
    def check_finite(loss, step, terms):
        if not np.isfinite(loss.item()):
            raise NumericalError(
                "Non-finite loss",
                diagnostics={
                    "step": step,
                    "terms": {k: v for k, v in terms.items() if v is not None},
                },
            )


###########################################################
# Occupancy training
###########################################################


class OccupancyTrainer(_Trainer):
    """
    Trains the gated field and, when [grid] track_with_occupancy is set, keeps a momentum grid
    updated from the same field so both occupancy estimates can be compared afterwards.
    """

    KIND = "occupancy"
    COLUMNS = ["step", "L_r", "L_o", "L_d", "L_f", "f_e", "density_ratio"]

    def __init__(self, config, dataset, writer=None, **kwargs):
        super().__init__(config, dataset, writer, **kwargs)
        self.field = OccupancyField(config.network, seed=config.seeds.network)
        self.weights = config.loss.weights
        self.sampler = StratifiedSampler(
            config.sampler.samples_per_ray, jitter=config.sampler.jitter
        )
        self.stats = OccStatsLog()
        self.grid = make_grid(config) if config.grid.track_with_occupancy else None
        self.grid_rng = np.random.default_rng([config.seeds.sampling, 1])
        if self.weights.w_d == 0:
            logger.info("density loss disabled (w_d = 0)")

    def __repr__(self):
        return f"occlab OccupancyTrainer - {self.field}"

    def losses(self, rays, target):
        """
        Forward pass and loss terms of one batch.

        Returns:
            tuple: (L_f DiffValue, record dict, samples, field output)
        """
        samples = self.sampler(rays, self.rng)
        output = self.field.forward(samples.positions, samples.directions)
        color, _ = composite(output.sigma, output.rgb, samples, self.background)
        l_r = rendering_loss(color, target)

        l_o = None
        f_e = None
        if output.gates is not None:
            routing = RoutingStats(output.gates, v=self.config.loss.v)
            f_e = routing.empty_fraction
            if self.config.loss.occupancy_loss == "balanced":
                l_o = balanced_loss(routing)
            else:
                l_o = imbalanced_occupancy_loss(routing)

        l_d, sigma_e, sigma_s = None, None, None
        if self.weights.w_d > 0 and output.gates is not None:
            l_d, sigma_e, sigma_s = density_loss(output.gates, output.sigma)

        l_f = final_loss(l_r, l_o, l_d, self.weights)
        record = {
            "L_r": _scalar(l_r),
            "L_o": _scalar(l_o),
            "L_d": _scalar(l_d),
            "L_f": _scalar(l_f),
            "f_e": f_e,
            "density_ratio": sigma_e / sigma_s if sigma_s else None,
        }
        return l_f, record, samples, output

    def train_step(self, step):
        rays, target = self.sample_batch(self.config.sampler.rays_per_batch)
        self.store.zero_grad()
        l_f, record, samples, output = self.losses(rays, target)
        self.check_finite(l_f, step, record)
        l_f.backward()
        self.optimizer.step(self.store)
        if step % self.config.train.stats_every == 0 and len(samples):
            self.stats.append(
                collect_occ_stats(
                    step, output.sigma.data[:, 0], samples.deltas, output.routed_to_empty
                )
            )
        return record

    def on_step(self, step, record):
        if self.grid is not None and step % self.config.grid.update_every == 0:
            self.update_grid()

    def update_grid(self):
        warm = self.grid.updates < self.config.grid.warmup_updates
        self.grid.update(
            self.field.query_density,
            self.grid_rng,
            fraction=1.0 if warm else self.config.grid.cell_fraction,
        )

    def finish(self):
        if self.writer is None:
            return
        self.stats.write(self.writer)
        if self.grid is not None:
            self.writer.grid("final.grid", self.grid, extra={"source": "occupancy field"})

    def summary(self):
        out = super().summary()
        last = self.stats.last
        out["empty_fraction"] = last.fraction_empty if last else None
        out["parameters"] = self.field.parameter_count
        if self.grid is not None:
            out["grid_occupied_fraction"] = self.grid.occupied_fraction
        return out


###########################################################
# Radiance training
###########################################################


class RadianceTrainer(_Trainer):
    """
    Trains a fresh RadianceField with one of three samplers.

    mode "network": coarse samples are filtered by a frozen occupancy network.
    mode "grid": coarse samples are filtered by a momentum grid; with `update_grid` the grid is
        refreshed from the radiance field being trained, otherwise it stays fixed.
    mode "dense": plain stratified sampling with sampler.dense_samples per ray.

    The main-field and coarse evaluation counters make the sampling cost of the modes
    comparable.
    """

    KIND = "radiance"
    COLUMNS = ["step", "L_r", "field_evaluations", "coarse_evaluations", "samples_per_ray"]

    def __init__(self, config, dataset, writer=None, **kwargs):
        """
        Args:
            config (ExperimentConfig): Experiment configuration
            dataset (Dataset): Training and validation images
            writer (RunWriter, optional): Artifact destination
            mode (str, optional): "network", "grid" or "dense". Defaults to guided.sampler.
            occupancy (OccupancyField, optional): Frozen occupancy network for mode "network"
            grid (OccGrid, optional): Grid for mode "grid". Defaults to a fresh grid.
            update_grid (bool, optional): Refresh the grid from the trained field
            progress (bool, optional): Show a progress bar
        """
        super().__init__(config, dataset, writer, **kwargs)
        self.mode = kwargs.get("mode", config.guided.sampler)
        self.network_config = config.network.derive(
            scene_layers=config.guided.layers, width=config.guided.width
        )
        self.field = RadianceField(self.network_config, seed=config.seeds.network)
        self.occupancy = kwargs.get("occupancy")
        self.grid = kwargs.get("grid")
        self.update_grid_every = (
            config.grid.update_every if kwargs.get("update_grid", False) else None
        )
        self.grid_rng = np.random.default_rng([config.seeds.sampling, 2])
        self.field_evaluations = 0
        self.coarse_evaluations = 0
        self.rays_seen = 0
        self.psnr_rows = []

        sampler = config.sampler
        if self.mode == "network":
            if self.occupancy is None:
                raise ConfigurationError("network-guided training needs an occupancy field")
            self.occupancy.store.freeze()
            predicate = self.occupancy.predict_occupied
        elif self.mode == "grid":
            if self.grid is None:
                self.grid = make_grid(config)
            predicate = self.grid.query
        elif self.mode == "dense":
            predicate = None
        else:
            raise ConfigurationError(f"Unknown sampling mode {self.mode}")
        if predicate is None:
            self.sampler = StratifiedSampler(sampler.dense_samples, jitter=sampler.jitter)
            self.eval_sampler = StratifiedSampler(sampler.dense_samples, jitter=False)
        else:
            self.sampler = GuidedSampler(
                predicate, sampler.coarse_samples, sampler.split_factor, jitter=sampler.jitter
            )
            self.eval_sampler = GuidedSampler(
                predicate, sampler.coarse_samples, sampler.split_factor, jitter=False
            )

    def __repr__(self):
        return f"occlab RadianceTrainer - {self.mode} sampling, {self.field}"

    def checkpoint_extra(self):
        return {"mode": self.mode, "radiance_network": self.network_config.as_dict()}

    def train_step(self, step):
        rays, target = self.sample_batch(self.config.guided.rays_per_batch)
        self.store.zero_grad()
        samples = self.sampler(rays, self.rng)
        output = self.field.forward(samples.positions, samples.directions)
        color, _ = composite(output.sigma, output.rgb, samples, self.background)
        l_r = rendering_loss(color, target)
        record = {
            "L_r": l_r.item(),
            "field_evaluations": len(samples),
            "coarse_evaluations": samples.coarse_evaluations,
            "samples_per_ray": len(samples) / len(rays),
        }
        self.check_finite(l_r, step, record)
        l_r.backward()
        self.optimizer.step(self.store)
        self.field_evaluations += len(samples)
        self.coarse_evaluations += samples.coarse_evaluations
        self.rays_seen += len(rays)
        return record

    def on_step(self, step, record):
        if self.update_grid_every and step % self.update_grid_every == 0:
            warm = self.grid.updates < self.config.grid.warmup_updates
            self.grid.update(
                self.field.query_density,
                self.grid_rng,
                fraction=1.0 if warm else self.config.grid.cell_fraction,
            )
        if step % self.config.guided.eval_every == 0:
            self.evaluate(step)

    def evaluate(self, step):
        """Mean PSNR over the validation cameras."""
        values = []
        for i in self.dataset.val_indices:
            rendered = render_image(
                self.dataset.cameras[i],
                self.field,
                self.eval_sampler,
                bounds=self.dataset.bounds,
                background=self.background,
                seed=self.config.seeds.sampling,
            )
            values.append(psnr(rendered.rgb, self.dataset.images[i]))
        value = float(np.mean(values)) if values else None
        self.psnr_rows.append({"step": step, "psnr": value})
        logger.info("step %d: validation PSNR %s dB", step, value)
        return value

    def finish(self):
        if not self.psnr_rows or self.psnr_rows[-1]["step"] != self.step:
            self.evaluate(self.step)
        if self.writer is None:
            return
        self.writer.csv("psnr.csv", ["step", "psnr"], self.psnr_rows)
        if self.update_grid_every:
            self.writer.grid("final.grid", self.grid, extra={"source": "radiance field"})

    @property
    def evaluations_per_ray(self):
        return self.field_evaluations / self.rays_seen if self.rays_seen else 0.0

    def summary(self):
        out = super().summary()
        out.update(
            {
                "mode": self.mode,
                "field_evaluations": self.field_evaluations,
                "coarse_evaluations": self.coarse_evaluations,
                "field_evaluations_per_ray": self.evaluations_per_ray,
                "final_psnr": self.psnr_rows[-1]["psnr"] if self.psnr_rows else None,
                "parameters": self.field.parameter_count,
            }
        )
        return out
