import numpy as np

from ..errors import require
from ..rendering.rays import Camera


__all__ = ["CameraRig"]

_GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


class CameraRig:
    """
    Cameras spread over a hemisphere band around a target point, all looking at the target
    with +z up. Elevations rise evenly from the lowest to the highest camera and azimuths
    advance by the golden angle, so any subset of consecutive cameras still surrounds the
    scene.
    """

    def __init__(self, count=24, **kwargs):
        """
        Args:
            count (int, optional): Number of cameras. Defaults to 24.
            width, height (int, optional): Image size. Default to 64.
            fov_deg (float, optional): Horizontal field of view. Defaults to 45.
            distance (float, optional): Distance from the target. Defaults to 3.2.
            target (list, optional): Look-at point. Defaults to the origin.
            min_elevation_deg, max_elevation_deg (float, optional): Elevation band.
                Default to 15 and 75.
        """
        self.count = int(count)
        self.width = int(kwargs.get("width", 64))
        self.height = int(kwargs.get("height", self.width))
        self.fov_deg = float(kwargs.get("fov_deg", 45.0))
        self.distance = float(kwargs.get("distance", 3.2))
        self.target = np.asarray(kwargs.get("target", (0.0, 0.0, 0.0)), dtype=np.float64)
        self.min_elevation_deg = float(kwargs.get("min_elevation_deg", 15.0))
        self.max_elevation_deg = float(kwargs.get("max_elevation_deg", 75.0))
        require(self.count >= 1, "a camera rig needs at least one camera")
        require(
            -90.0 < self.min_elevation_deg <= self.max_elevation_deg < 90.0,
            "camera elevations must satisfy -90 < min <= max < 90",
        )
        self.cameras = [self._camera(i) for i in range(self.count)]

    def __repr__(self):
        return f"occlab CameraRig - {self.count} cameras at distance {self.distance}"

    def __len__(self):
        return self.count

    def __iter__(self):
        return iter(self.cameras)

    def __getitem__(self, index):
        return self.cameras[index]

    def _camera(self, i):
        fraction = (i + 0.5) / self.count
        elevation = np.deg2rad(
            self.min_elevation_deg
            + fraction * (self.max_elevation_deg - self.min_elevation_deg)
        )
        azimuth = i * _GOLDEN_ANGLE
        offset = self.distance * np.array(
            [
                np.cos(elevation) * np.cos(azimuth),
                np.cos(elevation) * np.sin(azimuth),
                np.sin(elevation),
            ]
        )
        return Camera.look_at(
            self.target + offset,
            self.target,
            width=self.width,
            height=self.height,
            fov_deg=self.fov_deg,
        )

    def split(self, val_stride=8):
        """Every `val_stride`-th camera, starting with the first, is held out for validation."""
        val = [i for i in range(self.count) if i % val_stride == 0]
        train = [i for i in range(self.count) if i % val_stride != 0]
        return train, val

    def as_dict(self):
        return {
            "count": self.count,
            "width": self.width,
            "height": self.height,
            "fov_deg": self.fov_deg,
            "distance": self.distance,
            "target": self.target.tolist(),
            "min_elevation_deg": self.min_elevation_deg,
            "max_elevation_deg": self.max_elevation_deg,
        }
