"""
The `occlab` command line.

Every subcommand reads one experiment config (a preset, a TOML file and `--set` overrides),
writes its artifacts below the config's output directory and a manifest.json next to them.
Exit codes: 0 on success, 2 for configuration and usage errors, 3 for numerical failures.
"""

import argparse
import logging
import os
import time
from os import path

import numpy as np

from . import __version__
from .config import load_config
from .errors import ConfigurationError, NumericalError
from .evaluation import (
    METRIC_COLUMNS,
    export_pointcloud,
    field_pointcloud,
    network_to_grid,
    occupancy_metrics,
    psnr,
    render_depth_grid,
    resample_grid,
)
from .fields import count_parameters
from .grid import OccGrid, memory_report
from .reader import read_checkpoint, read_dataset, read_grid_snapshot
from .rendering import GuidedSampler, StratifiedSampler, render_image
from .scene import CameraRig, SceneOracle, load_scene, make_dataset, oracle_occupancy_grid
from .scene.library import library_path
from .training import (
    OccupancyTrainer,
    RadianceTrainer,
    load_occupancy_field,
    load_radiance_field,
    make_grid,
)
from .writer import RunWriter

logger = logging.getLogger(__name__)

__all__ = ["main", "build_parser", "COMMANDS", "RUN_DIRS"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# run directory of a radiance field trained with each sampler
RUN_DIRS = {
    "network": "guided_network",
    "grid": "guided_grid",
    "dense": "guided_dense",
    "grid_baseline": "grid_baseline",
}

DEPTH_RULE = "mark the cell containing origin + direction * depth / opacity, opacity >= {}"


###########################################################
# Shared plumbing
###########################################################


def run_path(config, name):
    """`name` relative to the resolved output directory unless it is absolute."""
    if path.isabs(name):
        return name
    return path.join(config.resolved_output_dir, name)


def _track_input(config, file_name):
    if file_name not in config.inputs:
        config.inputs.append(file_name)


def _writer(config, args, name, **kwargs):
    return RunWriter(run_path(config, name), config=config, force=args.force, **kwargs)


def _load_dataset(config, with_depth=False):
    return read_dataset(run_path(config, config.scene.dataset_dir), with_depth)


def _load_occupancy(config):
    file_name = run_path(config, config.guided.occupancy_checkpoint)
    checkpoint = read_checkpoint(file_name, kind="occupancy")
    _track_input(config, file_name)
    return load_occupancy_field(checkpoint, config.network)


def _load_grid(config):
    file_name = run_path(config, config.guided.grid_snapshot)
    grid = read_grid_snapshot(file_name)
    _track_input(config, file_name)
    return grid


def _bounds(config):
    return tuple(config.scene.bounds)


def _radiance_sampler(config, mode, occupancy=None, grid=None):
    """Deterministic evaluation sampler matching how a radiance field was trained."""
    s = config.sampler
    if mode == "dense":
        return StratifiedSampler(s.dense_samples, jitter=False)
    if mode == "network":
        occupancy = occupancy or _load_occupancy(config)
        predicate = occupancy.predict_occupied
    else:
        grid = grid or _load_grid(config)
        predicate = grid.query
    return GuidedSampler(predicate, s.coarse_samples, s.split_factor, jitter=False)


def _finish(writer, command, summary=None):
    writer.manifest({"command": command, "summary": summary or {}})
    logger.info("%s: wrote %d artifacts to %s", command, len(writer.artifacts), writer.directory)
    return EXIT_OK


def _train(writer, command, trainer, steps):
    try:
        summary = trainer.run(steps)
    except NumericalError as err:
        writer.manifest(
            {"command": command, "failed": str(err), "diagnostics": err.diagnostics}
        )
        raise
    return _finish(writer, command, summary)


###########################################################
# Subcommands
###########################################################


def cmd_generate_scene(config, args):
    """Renders the ground-truth dataset of the configured scene."""
    scene = config.scene
    _track_input(config, library_path(scene.library))
    oracle = load_scene(scene.library, gt_threshold=scene.gt_threshold)
    rig = CameraRig(
        scene.cameras,
        width=scene.width,
        height=scene.height,
        fov_deg=scene.fov_deg,
        distance=scene.distance,
        target=oracle.centroid,
        min_elevation_deg=scene.min_elevation_deg,
        max_elevation_deg=scene.max_elevation_deg,
    )
    writer = _writer(config, args, scene.dataset_dir)
    make_dataset(
        oracle,
        rig,
        writer,
        quadrature=scene.quadrature,
        bounds=_bounds(config),
        background=scene.background,
        val_stride=scene.val_stride,
        seed=config.seeds.scene,
        threads=args.threads,
        progress=args.progress,
    )
    logger.info("generate-scene: %d images in %s", len(rig), writer.directory)
    return EXIT_OK


def cmd_train_occupancy(config, args):
    dataset = _load_dataset(config)
    writer = _writer(config, args, "occupancy")
    trainer = OccupancyTrainer(config, dataset, writer, progress=args.progress)
    return _train(writer, "train-occupancy", trainer, config.train.steps)


def cmd_train_guided(config, args):
    """Trains a radiance field with the sampler named by guided.sampler."""
    mode = config.guided.sampler
    dataset = _load_dataset(config)
    occupancy = _load_occupancy(config) if mode == "network" else None
    grid = _load_grid(config) if mode == "grid" else None
    before = {k: v.copy() for k, v in occupancy.store.values().items()} if occupancy else None
    writer = _writer(config, args, RUN_DIRS[mode])
    trainer = RadianceTrainer(
        config,
        dataset,
        writer,
        mode=mode,
        occupancy=occupancy,
        grid=grid,
        progress=args.progress,
    )
    code = _train(writer, "train-guided", trainer, config.guided.steps)
    if occupancy is not None:
        after = occupancy.store.values()
        unchanged = all(np.array_equal(before[k], after[k]) for k in before)
        if not unchanged:
            raise NumericalError("occupancy parameters changed during guided training")
    return code


def cmd_train_grid_baseline(config, args):
    """Trains a radiance field sampled through a momentum grid refreshed from that field."""
    dataset = _load_dataset(config)
    writer = _writer(config, args, RUN_DIRS["grid_baseline"])
    trainer = RadianceTrainer(
        config,
        dataset,
        writer,
        mode="grid",
        grid=make_grid(config),
        update_grid=True,
        progress=args.progress,
    )
    return _train(writer, "train-grid-baseline", trainer, config.grid.steps)


def _export_pointclouds(config, dataset, field, writer, prefix):
    rng = np.random.default_rng(config.seeds.sampling)
    rays, _ = dataset.sample_rays(rng, config.eval.pointcloud_rays, split="val")
    sampler = StratifiedSampler(config.sampler.samples_per_ray, jitter=False)
    points = field_pointcloud(field, rays, sampler)
    return export_pointcloud(
        writer,
        prefix,
        points["positions"],
        points["sigma"],
        points["rgb"],
        points["deltas"],
        routed_to_empty=points["routed_to_empty"],
        mode=config.eval.pointcloud_mode,
    )


def _metric_row(method, predicted, reference, parameters):
    row = {"Method": method, **occupancy_metrics(predicted, reference)}
    row["Param number"] = parameters
    return row


def cmd_eval(config, args):
    """
    Compares every available occupancy estimate with the ground-truth grid, and the PSNR of
    every trained radiance field on the validation cameras.
    """
    dataset = _load_dataset(config)
    oracle = SceneOracle.from_dict(dataset.manifest["scene"])
    bounds = _bounds(config)
    resolution = config.eval.resolution
    reference = oracle_occupancy_grid(oracle, resolution, bounds)
    writer = _writer(config, args, "eval", resume=True)

    occupancy = _load_occupancy(config)
    predicted = network_to_grid(
        occupancy.predict_occupied,
        resolution,
        bounds,
        probes=config.eval.probes,
        jitter=config.eval.jitter,
        rng=np.random.default_rng(config.seeds.sampling),
    )
    occupancy_params = count_parameters(occupancy.config, "occupancy")
    rows = [_metric_row("occupancy network", predicted, reference, occupancy_params)]

    grids = {
        "momentum grid (occupancy run)": run_path(config, "occupancy/final.grid"),
        "momentum grid (grid baseline)": run_path(config, config.guided.grid_snapshot),
    }
    grid_cells = None
    for method, file_name in grids.items():
        if not path.isfile(file_name):
            logger.info("eval: no grid at %s", file_name)
            continue
        grid = read_grid_snapshot(file_name)
        _track_input(config, file_name)
        grid_cells = grid.cells
        rows.append(
            _metric_row(method, resample_grid(grid, resolution, bounds), reference, grid.cells)
        )

    if config.eval.depth_source == "oracle":
        depth_source = oracle
        depth_sampler = StratifiedSampler(config.scene.quadrature, jitter=False)
    else:
        depth_source = occupancy
        depth_sampler = StratifiedSampler(config.sampler.samples_per_ray, jitter=False)
    depth_grid = render_depth_grid(
        dataset.cameras,
        depth_source,
        depth_sampler,
        resolution,
        bounds=bounds,
        threads=args.threads,
        seed=config.seeds.sampling,
        min_opacity=config.eval.depth_opacity,
    )
    rows.append(
        _metric_row(f"depth maps ({config.eval.depth_source})", depth_grid, reference, None)
    )
    columns = ["Method"] + METRIC_COLUMNS[:4] + ["Param number", "Occupancy ratio"]
    writer.csv("occupancy_metrics.csv", columns + ["TP", "FP", "FN", "TN"], rows)

    psnr_rows = []
    for mode, run_dir in RUN_DIRS.items():
        file_name = run_path(config, path.join(run_dir, "final.ckpt"))
        if not path.isfile(file_name):
            continue
        checkpoint = read_checkpoint(file_name, kind="radiance")
        _track_input(config, file_name)
        field = load_radiance_field(checkpoint)
        # the grid baseline writes the snapshot that grid-guided training reads
        sampler_mode = "grid" if mode == "grid_baseline" else mode
        sampler = _radiance_sampler(config, sampler_mode, occupancy=occupancy)
        values = []
        for i in dataset.val_indices:
            rendered = render_image(
                dataset.cameras[i],
                field,
                sampler,
                bounds=bounds,
                background=dataset.background,
                threads=args.threads,
                seed=config.seeds.sampling,
            )
            values.append(psnr(rendered.rgb, dataset.images[i]))
        psnr_rows.append(
            {"run": run_dir, "psnr": float(np.mean(values)), "parameters": field.parameter_count}
        )
    writer.csv("psnr.csv", ["run", "psnr", "parameters"], psnr_rows)

    _export_pointclouds(config, dataset, occupancy, writer, "pointcloud/occupancy")

    summary = {
        "resolution": resolution,
        "reference_occupied_fraction": float(reference.mean()),
        "depth_rule": DEPTH_RULE.format(config.eval.depth_opacity),
        "occupancy_parameters": occupancy_params,
        "stats": "occupancy/occ_stats.csv",
    }
    if grid_cells:
        summary["parameters_per_grid_cell"] = occupancy_params / grid_cells
    writer.json("occupancy_metrics.json", {"rows": rows, **summary})
    return _finish(writer, "eval", summary)


def _time_steps(trainer, repeats):
    times = []
    for step in range(1, repeats + 1):
        start = time.perf_counter()
        record = trainer.train_step(step)
        times.append(time.perf_counter() - start)
    return float(np.mean(times)), record


def cmd_bench(config, args):
    """
    Times one radiance training step under dense, grid-guided and network-guided sampling and
    reports the memory each occupancy estimate needs.
    """
    dataset = _load_dataset(config)
    oracle = SceneOracle.from_dict(dataset.manifest["scene"])
    occupancy = _load_occupancy(config)
    bench = config.bench
    rows = []

    def measure(mode, resolution=None, cells=None, memory_bytes=0, parameters=None, **kwargs):
        trainer = RadianceTrainer(config, dataset, None, mode=mode, **kwargs)
        seconds, record = _time_steps(trainer, bench.repeats)
        rows.append(
            {
                "mode": mode,
                "resolution": resolution,
                "cells": cells,
                "parameters": parameters,
                "memory_bytes": memory_bytes,
                "seconds_per_step": seconds,
                "field_evaluations_per_ray": record["samples_per_ray"],
                "coarse_evaluations_per_ray": record["coarse_evaluations"]
                / config.guided.rays_per_batch,
            }
        )

    measure("dense")
    for resolution in bench.resolutions:
        # filled once from the scene densities, so it marks exactly the occupied cells
        grid = OccGrid(
            resolution,
            bounds=_bounds(config),
            decay=config.grid.decay,
            threshold=config.grid.threshold,
            initial_value=0.0,
        )
        grid.update(oracle.density, jitter=False)
        report = memory_report(resolution)
        measure(
            "grid",
            resolution,
            report["cells"],
            report["total_bytes"],
            grid=grid,
        )
    params = count_parameters(occupancy.config, "occupancy")
    measure("network", parameters=params, memory_bytes=8 * params, occupancy=occupancy)

    columns = [
        "mode",
        "resolution",
        "cells",
        "parameters",
        "memory_bytes",
        "seconds_per_step",
        "field_evaluations_per_ray",
        "coarse_evaluations_per_ray",
    ]
    writer = _writer(config, args, "bench")
    writer.csv("bench.csv", columns, rows)
    writer.json("bench.json", {"rows": rows, "repeats": bench.repeats})
    return _finish(writer, "bench", {"modes": sorted({r["mode"] for r in rows})})


def cmd_export_pointcloud(config, args):
    dataset = _load_dataset(config)
    occupancy = _load_occupancy(config)
    writer = _writer(config, args, "pointcloud")
    files = _export_pointclouds(config, dataset, occupancy, writer, "occupancy")
    return _finish(writer, "export-pointcloud", {"files": [path.basename(f) for f in files]})


def cmd_render(config, args):
    """Renders the dataset cameras (or a subset) with the oracle or a trained field."""
    dataset = _load_dataset(config)
    bounds = _bounds(config)
    if args.source == "oracle":
        source = SceneOracle.from_dict(dataset.manifest["scene"])
        sampler = StratifiedSampler(config.scene.quadrature, jitter=False)
    elif args.source == "occupancy":
        source = _load_occupancy(config)
        sampler = StratifiedSampler(config.sampler.samples_per_ray, jitter=False)
    else:
        file_name = run_path(config, path.join(RUN_DIRS[args.source], "final.ckpt"))
        source = load_radiance_field(read_checkpoint(file_name, kind="radiance"))
        _track_input(config, file_name)
        mode = "grid" if args.source == "grid_baseline" else args.source
        sampler = _radiance_sampler(config, mode)
    cameras = args.camera if args.camera else range(len(dataset))
    writer = _writer(config, args, path.join("render", args.source))
    values = []
    for i in cameras:
        if not 0 <= i < len(dataset):
            raise ConfigurationError(f"Camera {i} does not exist; the dataset has {len(dataset)}")
        rendered = render_image(
            dataset.cameras[i],
            source,
            sampler,
            bounds=bounds,
            background=dataset.background,
            threads=args.threads,
            seed=config.seeds.sampling,
        )
        writer.png(f"{i:03d}.png", rendered.rgb)
        writer.ppm(f"{i:03d}.ppm", rendered.rgb)
        writer.depth(f"{i:03d}.depth", rendered.depth)
        values.append({"camera": i, "psnr": psnr(rendered.rgb, dataset.images[i])})
    writer.csv("psnr.csv", ["camera", "psnr"], values)
    return _finish(writer, "render", {"source": args.source, "cameras": len(values)})


COMMANDS = {
    "generate-scene": cmd_generate_scene,
    "train-occupancy": cmd_train_occupancy,
    "train-guided": cmd_train_guided,
    "train-grid-baseline": cmd_train_grid_baseline,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "export-pointcloud": cmd_export_pointcloud,
    "render": cmd_render,
}


###########################################################
# Entry point
###########################################################


def build_parser():
    parser = argparse.ArgumentParser(
        prog="occlab", description="Learned occupancy for radiance fields at desk scale"
    )
    parser.add_argument("--version", action="version", version=f"occlab {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Experiment config TOML")
    common.add_argument("--preset", help="Shipped preset (desk, mega, block)")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override one config value (repeatable)",
    )
    common.add_argument("--output-dir", help="Replace the config's output_dir")
    common.add_argument(
        "--threads", type=int, default=os.cpu_count() or 1, help="Worker threads for rendering"
    )
    common.add_argument("--force", action="store_true", help="Overwrite a non-empty run dir")
    common.add_argument("--no-progress", dest="progress", action="store_false")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name, fn in COMMANDS.items():
        command = sub.add_parser(name, parents=[common], help=(fn.__doc__ or "").strip())
        if name == "render":
            command.add_argument(
                "--source",
                default="oracle",
                choices=["oracle", "occupancy"] + list(RUN_DIRS),
                help="What to render",
            )
            command.add_argument(
                "--camera", type=int, action="append", help="Camera index (repeatable)"
            )
    return parser


def configure_logging(args):
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)


def main(argv=None):
    """
    Runs one subcommand.

    Returns:
        int: Exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        # argparse exits with 2 on usage errors and 0 after --help
        return exit_.code if isinstance(exit_.code, int) else EXIT_CONFIG
    configure_logging(args)
    try:
        if args.threads < 1:
            raise ConfigurationError("--threads must be at least 1")
        config = load_config(args.config, args.preset, args.set)
        if args.output_dir:
            config.output_dir = args.output_dir
        return COMMANDS[args.command](config, args)
    except ConfigurationError as err:
        logger.error("%s", err)
        return EXIT_CONFIG
    except NumericalError as err:
        logger.error("numerical failure: %s", err)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
