import numpy as np

from ..errors import ConfigurationError


__all__ = ["Camera", "RayBundle", "generate_rays", "clip_to_bounds"]


class Camera:
    """
    Pinhole camera. `pose` is the 4x4 camera-to-world matrix; the camera looks down its local -z
    axis with +y up, so pixel (0, 0) is the top-left corner.
    """

    def __init__(self, pose, **kwargs):
        """
        Args:
            pose (array_like): 3x4 or 4x4 camera-to-world matrix
            width (int, optional): Image width in pixels. Defaults to 64.
            height (int, optional): Image height in pixels. Defaults to `width`.
            fx, fy (float, optional): Focal lengths in pixels. Default from fov_deg.
            cx, cy (float, optional): Principal point. Defaults to the image center.
            fov_deg (float, optional): Horizontal field of view. Defaults to 45.
        """
        pose = np.asarray(pose, dtype=np.float64)
        if pose.shape == (3, 4):
            pose = np.vstack([pose, [0.0, 0.0, 0.0, 1.0]])
        if pose.shape != (4, 4):
            raise ConfigurationError(f"Camera pose must be 3x4 or 4x4, got {pose.shape}")
        self.pose = pose
        self.width = int(kwargs.get("width", 64))
        self.height = int(kwargs.get("height", self.width))
        fov = np.deg2rad(kwargs.get("fov_deg", 45.0))
        default_focal = 0.5 * self.width / np.tan(0.5 * fov)
        self.fx = float(kwargs.get("fx", default_focal))
        self.fy = float(kwargs.get("fy", self.fx))
        self.cx = float(kwargs.get("cx", 0.5 * self.width))
        self.cy = float(kwargs.get("cy", 0.5 * self.height))
        self.validate()

    def __repr__(self):
        return f"occlab Camera - {self.width}x{self.height} at {self.origin.round(3).tolist()}"

    @classmethod
    def look_at(cls, eye, target, up=(0.0, 0.0, 1.0), **kwargs):
        eye = np.asarray(eye, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - eye
        norm = np.linalg.norm(forward)
        if norm == 0:
            raise ConfigurationError("Camera eye and target coincide")
        forward /= norm
        right = np.cross(forward, up)
        if np.linalg.norm(right) < 1e-9:
            raise ConfigurationError("Camera up vector is parallel to the view direction")
        right /= np.linalg.norm(right)
        true_up = np.cross(right, forward)
        pose = np.eye(4)
        pose[:3, 0] = right
        pose[:3, 1] = true_up
        pose[:3, 2] = -forward
        pose[:3, 3] = eye
        return cls(pose, **kwargs)

    def validate(self):
        if not np.all(np.isfinite(self.pose)):
            raise ConfigurationError("Camera pose contains non-finite values")
        rotation = self.pose[:3, :3]
        if not np.allclose(rotation.T @ rotation, np.eye(3), atol=1e-6):
            raise ConfigurationError("Camera rotation is not orthonormal")
        if np.linalg.det(rotation) < 0:
            raise ConfigurationError("Camera rotation is a reflection")
        if self.width < 1 or self.height < 1:
            raise ConfigurationError("Image size must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigurationError("Focal lengths must be positive")

    @property
    def origin(self):
        return self.pose[:3, 3]

    @property
    def intrinsics(self):
        return {
            "width": self.width,
            "height": self.height,
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
        }

    def as_dict(self):
        return {"pose": self.pose.tolist(), **self.intrinsics}

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        return cls(data.pop("pose"), **data)


class RayBundle:
    """
    Rays with their [near, far] interval. Rays that miss the scene bounds have near == far and
    receive no samples.
    """

    def __init__(self, origins, directions, near=None, far=None):
        self.origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
        self.directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
        count = self.origins.shape[0]
        self.near = np.zeros(count) if near is None else np.asarray(near, dtype=np.float64)
        self.far = np.ones(count) if far is None else np.asarray(far, dtype=np.float64)

    def __repr__(self):
        return f"occlab RayBundle - {len(self)} rays, {int(self.valid.sum())} valid"

    def __len__(self):
        return self.origins.shape[0]

    @property
    def valid(self):
        return self.near < self.far

    def subset(self, index):
        return RayBundle(
            self.origins[index], self.directions[index], self.near[index], self.far[index]
        )


def generate_rays(camera):
    """
    One ray per pixel through the pixel center, row-major from the top-left pixel.

    Args:
        camera (Camera): Pose and intrinsics

    Returns:
        RayBundle: width*height rays with unit directions; near/far default to [0, 1] until
            clipped to scene bounds
    """
    camera.validate()
    i, j = np.meshgrid(
        np.arange(camera.width, dtype=np.float64),
        np.arange(camera.height, dtype=np.float64),
        indexing="xy",
    )
    local = np.stack(
        [
            (i + 0.5 - camera.cx) / camera.fx,
            -(j + 0.5 - camera.cy) / camera.fy,
            -np.ones_like(i),
        ],
        axis=-1,
    ).reshape(-1, 3)
    directions = local @ camera.pose[:3, :3].T
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    origins = np.broadcast_to(camera.origin, directions.shape).copy()
    return RayBundle(origins, directions)


def clip_to_bounds(rays, bounds=(-1.0, 1.0)):
    """
    Sets near/far to the intersection of every ray with the axis-aligned cube
    [bounds[0], bounds[1]]^3 (slab method). Rays that miss get near == far == 0.
    """
    lo, hi = bounds
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / rays.directions
        t0 = (lo - rays.origins) * inv
        t1 = (hi - rays.origins) * inv
        tmin = np.minimum(t0, t1)
        tmax = np.maximum(t0, t1)
    # 0 * inf: the origin sits exactly on a slab plane of a parallel ray
    tmin = np.where(np.isnan(tmin), -np.inf, tmin)
    tmax = np.where(np.isnan(tmax), np.inf, tmax)
    near = np.maximum(tmin.max(axis=1), 0.0)
    far = tmax.min(axis=1)
    miss = ~(far > near)
    near[miss] = 0.0
    far[miss] = 0.0
    return RayBundle(rays.origins, rays.directions, near, far)
