import numpy as np

from ..errors import ConfigurationError


__all__ = ["write_ply"]


def write_ply(file_path, positions, colors, alpha=None, comment=None):
    """
    Writes an ASCII PLY 1.0 point cloud.

    Args:
        file_path (str): Output path
        positions (np.ndarray): (N, 3) vertex positions
        colors (np.ndarray): (N, 3) colors in [0, 1], stored as uchar
        alpha (np.ndarray, optional): (N,) opacities in [0, 1], stored as a uchar alpha
            property when given
        comment (str, optional): Header comment line
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    colors = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
    if colors.shape[0] != positions.shape[0]:
        raise ConfigurationError("PLY colors and positions differ in length")
    rgb = np.round(np.clip(colors, 0.0, 1.0) * 255.0).astype(np.int64)
    if alpha is not None:
        alpha = np.asarray(alpha, dtype=np.float64).reshape(-1)
        if alpha.shape[0] != positions.shape[0]:
            raise ConfigurationError("PLY alpha and positions differ in length")
        alpha = np.round(np.clip(alpha, 0.0, 1.0) * 255.0).astype(np.int64)

    header = ["ply", "format ascii 1.0"]
    if comment:
        header.append(f"comment {comment}")
    header.append(f"element vertex {positions.shape[0]}")
    header += ["property float x", "property float y", "property float z"]
    header += ["property uchar red", "property uchar green", "property uchar blue"]
    if alpha is not None:
        header.append("property uchar alpha")
    header.append("end_header")

    with open(file_path, "w", newline="\n") as f:
        f.write("\n".join(header) + "\n")
        for i in range(positions.shape[0]):
            x, y, z = positions[i]
            row = f"{x:.6f} {y:.6f} {z:.6f} {rgb[i, 0]} {rgb[i, 1]} {rgb[i, 2]}"
            if alpha is not None:
                row += f" {alpha[i]}"
            f.write(row + "\n")
