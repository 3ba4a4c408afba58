"""
Occupancy and image metrics, occupancy-grid conversions, routing statistics and point-cloud
export.
"""

from .metrics import ConfusionCounts, confusion_counts, occupancy_metrics, psnr, METRIC_COLUMNS
from .occupancy import network_to_grid, resample_grid, depth_to_grid, render_depth_grid
from .stats import OccStats, OccStatsLog, collect_occ_stats, sample_alpha
from .pointcloud import export_pointcloud, field_pointcloud, POINTCLOUD_MODES
