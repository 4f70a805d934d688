"""Binary portable pixmap (P6) rendering of square matrices."""

from __future__ import annotations

from pathlib import Path

import numpy as np

# Anchors of a viridis-like ramp: 0 dark purple -> 1 bright yellow
_RAMP = np.array([
    [68, 1, 84],
    [71, 44, 122],
    [59, 81, 139],
    [44, 113, 142],
    [33, 144, 141],
    [39, 173, 129],
    [92, 200, 99],
    [170, 220, 50],
    [253, 231, 37],
], dtype=np.float64)

GRID_COLOR = (255, 255, 255)


def colorize(values: np.ndarray) -> np.ndarray:
    """Map values in [0, 1] to uint8 RGB; out-of-range values are clipped."""
    v = np.clip(np.nan_to_num(np.asarray(values, dtype=np.float64)), 0.0, 1.0)
    pos = v * (len(_RAMP) - 1)
    lo = np.minimum(np.floor(pos).astype(int), len(_RAMP) - 2)
    frac = (pos - lo)[..., None]
    rgb = _RAMP[lo] * (1 - frac) + _RAMP[lo + 1] * frac
    return np.rint(rgb).astype(np.uint8)


def render(values: np.ndarray, block_size: int | None = None, scale: int = 4) -> np.ndarray:
    """RGB image of ``values`` with optional grid lines every ``block_size`` cells."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    img = colorize(values)
    img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)
    if block_size:
        rows, cols = values.shape
        for k in range(block_size, rows, block_size):
            img[k * scale, :] = GRID_COLOR
        for k in range(block_size, cols, block_size):
            img[:, k * scale] = GRID_COLOR
    return img


def encode_ppm(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def decode_ppm(blob: bytes) -> np.ndarray:
    # header is exactly the three lines written by encode_ppm
    lines = blob.split(b"\n", 3)
    if len(lines) < 4 or lines[0] != b"P6" or lines[2] != b"255":
        raise ValueError("not an 8-bit binary PPM")
    w, h = (int(x) for x in lines[1].split())
    data = np.frombuffer(lines[3], dtype=np.uint8)
    if data.size != w * h * 3:
        raise ValueError("pixel data size does not match header")
    return data.reshape(h, w, 3)


def export_heatmap(values: np.ndarray, path, block_size: int | None = None, scale: int = 4):
    Path(path).write_bytes(encode_ppm(render(values, block_size=block_size, scale=scale)))
