import numpy as np

from ..errors import ConfigurationError, require
from ..grid import cell_centers


__all__ = ["Primitive", "SceneOracle", "oracle_occupancy_grid", "PRIMITIVE_KINDS"]

PRIMITIVE_KINDS = ("sphere", "box", "slab")

# sigmoid(-30) is below 1e-13; beyond it the indicator is exactly zero
_CUTOFF = 30.0


class Primitive:
    """
    One solid of a synthetic scene with a smooth boundary.

    The density is sigma0 * sigmoid(-d / falloff) for the signed distance d to the surface
    (negative inside), so it equals sigma0 deep inside, sigma0 / 2 on the surface and falls off
    over a few `falloff` widths outside.
    """

    def __init__(self, kind, **kwargs):
        """
        Args:
            kind (str): "sphere", "box" or "slab"
            center (list, optional): Center point. Defaults to the origin.
            radius (float, optional): Sphere radius. Defaults to 0.5.
            half_size (list, optional): Box half extents. Defaults to 0.25 on every axis.
            extent (float, optional): Slab half width in x and y. Defaults to 0.9.
            thickness (float, optional): Slab thickness along z. Defaults to 0.1.
            sigma0 (float, optional): Interior density. Defaults to 50.
            falloff (float, optional): Boundary width. Defaults to 0.02.
            albedo (list, optional): RGB color in [0, 1]. Defaults to mid gray.
            name (str, optional): Label used in manifests
        """
        if kind not in PRIMITIVE_KINDS:
            raise ConfigurationError(f"Unknown primitive kind {kind}")
        self.kind = kind
        self.name = kwargs.get("name", kind)
        self.center = np.asarray(kwargs.get("center", (0.0, 0.0, 0.0)), dtype=np.float64)
        self.radius = float(kwargs.get("radius", 0.5))
        self.sigma0 = float(kwargs.get("sigma0", 50.0))
        self.falloff = float(kwargs.get("falloff", 0.02))
        self.albedo = np.asarray(kwargs.get("albedo", (0.5, 0.5, 0.5)), dtype=np.float64)
        if kind == "slab":
            extent = float(kwargs.get("extent", 0.9))
            thickness = float(kwargs.get("thickness", 0.1))
            self.half_size = np.array([extent, extent, 0.5 * thickness])
        else:
            self.half_size = np.asarray(
                kwargs.get("half_size", (0.25, 0.25, 0.25)), dtype=np.float64
            )

        require(self.center.shape == (3,), f"{self.name}: center needs 3 values")
        require(self.albedo.shape == (3,), f"{self.name}: albedo needs 3 values")
        require(self.sigma0 >= 0, f"{self.name}: sigma0 must be nonnegative")
        require(self.falloff > 0, f"{self.name}: falloff must be positive")
        require(self.radius > 0, f"{self.name}: radius must be positive")
        require(np.all(self.half_size > 0), f"{self.name}: half sizes must be positive")

    def __repr__(self):
        return f"occlab Primitive - {self.kind} {self.name}"

    def signed_distance(self, x):
        """Exact signed distance of (M, 3) points to the surface, negative inside."""
        p = np.atleast_2d(x) - self.center
        if self.kind == "sphere":
            return np.linalg.norm(p, axis=1) - self.radius
        q = np.abs(p) - self.half_size
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(q.max(axis=1), 0.0)
        return outside + inside

    def indicator(self, x, distance=None):
        """Smooth occupancy in [0, 1]; exactly zero beyond 30 falloff widths."""
        d = self.signed_distance(x) if distance is None else distance
        scaled = d / self.falloff
        out = 0.5 * (1.0 + np.tanh(-0.5 * scaled))
        out[scaled > _CUTOFF] = 0.0
        return out

    def as_dict(self):
        data = {
            "kind": self.kind,
            "name": self.name,
            "center": self.center.tolist(),
            "sigma0": self.sigma0,
            "falloff": self.falloff,
            "albedo": self.albedo.tolist(),
        }
        if self.kind == "sphere":
            data["radius"] = self.radius
        elif self.kind == "box":
            data["half_size"] = self.half_size.tolist()
        else:
            data["extent"] = float(self.half_size[0])
            data["thickness"] = float(2.0 * self.half_size[2])
        return data


class SceneOracle:
    """
    Analytic density and color field with exact ground-truth occupancy.

    sigma(x) = min(sum_k indicator_k(x) * sigma0_k, max_k sigma0_k). The color is the albedo of
    the primitive with the smallest signed distance, or black where that primitive's indicator
    is below 1e-6. Empty space has zero density.
    """

    def __init__(self, primitives=(), **kwargs):
        self.primitives = list(primitives)
        self.gt_threshold = float(kwargs.get("gt_threshold", 0.5))
        self.name = kwargs.get("name", "scene")
        require(self.gt_threshold >= 0, "scene.gt_threshold must be nonnegative")

    def __repr__(self):
        return f"occlab SceneOracle - {self.name} with {len(self.primitives)} primitives"

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        primitives = [Primitive(**dict(p)) for p in data.pop("primitives", [])]
        return cls(primitives, **data)

    def as_dict(self):
        return {
            "name": self.name,
            "gt_threshold": self.gt_threshold,
            "primitives": [p.as_dict() for p in self.primitives],
        }

    @property
    def centroid(self):
        if not self.primitives:
            return np.zeros(3)
        return np.mean([p.center for p in self.primitives], axis=0)

    @property
    def lipschitz_bound(self):
        """Bound on |grad sigma|: each indicator changes at most 1/(4 falloff) per unit."""
        return float(sum(p.sigma0 / (4.0 * p.falloff) for p in self.primitives))

    def density_color(self, x):
        """
        Args:
            x (np.ndarray): (M, 3) points

        Returns:
            tuple: (sigma (M,), color (M, 3))
        """
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        sigma = np.zeros(x.shape[0])
        color = np.zeros((x.shape[0], 3))
        if not self.primitives:
            return sigma, color
        distances = np.stack([p.signed_distance(x) for p in self.primitives], axis=1)
        indicators = np.stack(
            [p.indicator(x, distances[:, k]) for k, p in enumerate(self.primitives)], axis=1
        )
        amplitudes = np.array([p.sigma0 for p in self.primitives])
        sigma = np.minimum(indicators @ amplitudes, amplitudes.max())
        nearest = np.argmin(distances, axis=1)
        visible = indicators[np.arange(x.shape[0]), nearest] >= 1e-6
        albedo = np.stack([p.albedo for p in self.primitives])
        color[visible] = albedo[nearest[visible]]
        return sigma, color

    def density(self, x):
        return self.density_color(x)[0]

    def query(self, positions, directions=None):
        """Same interface as the learned fields; the oracle ignores view directions."""
        return self.density_color(positions)

    def occupied(self, x):
        return self.density(x) > self.gt_threshold


def oracle_occupancy_grid(oracle, resolution, bounds=(-1.0, 1.0)):
    """
    Ground-truth grid: a cell is occupied when the oracle density at its center exceeds the
    ground-truth threshold.

    Returns:
        np.ndarray: (R, R, R) booleans indexed (ix, iy, iz)
    """
    require(int(resolution) >= 8, "oracle grids need a resolution of at least 8")
    centers = cell_centers(int(resolution), bounds)
    return oracle.occupied(centers).reshape((int(resolution),) * 3)
