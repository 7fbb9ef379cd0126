"""Diverging red-white-blue rasterization of activation planes.

Zero maps to exactly white (255, 255, 255); negative values fade linearly to
saturated red at position -1 and positive values to saturated blue at +1, so
negating a plane swaps the red and blue channels exactly.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .introspect import ColorScale


def color_at(position: float) -> tuple[int, int, int]:
    """RGB color for one normalized position in [-1, 1]."""
    p = min(1.0, max(-1.0, position))
    g = int(np.rint(255.0 * (1.0 - abs(p))))
    if p < 0:
        return (255, g, g)
    return (g, g, 255)


def plane_rgb(plane: np.ndarray, scale: ColorScale) -> np.ndarray:
    """Map a 2-D float plane to an (h, w, 3) uint8 raster under a ColorScale."""
    values = np.asarray(plane, dtype=np.float64)
    if scale.max_abs == 0.0:
        positions = np.zeros_like(values)
    else:
        positions = np.clip(values / scale.max_abs, -1.0, 1.0)
    fade = np.rint(255.0 * (1.0 - np.abs(positions))).astype(np.uint8)
    rgb = np.empty(values.shape + (3,), dtype=np.uint8)
    negative = positions < 0
    rgb[..., 0] = np.where(negative, 255, fade)
    rgb[..., 1] = fade
    rgb[..., 2] = np.where(negative, fade, 255)
    return rgb


def upscale(rgb: np.ndarray, factor: int) -> np.ndarray:
    """Integer nearest-neighbor upscaling (exact pixel replication)."""
    if factor < 1:
        raise ValueError(f"scale factor must be >= 1, got {factor}")
    if factor == 1:
        return rgb
    return np.repeat(np.repeat(rgb, factor, axis=0), factor, axis=1)


def render_plane(plane: np.ndarray, scale: ColorScale, factor: int = 1) -> Image.Image:
    """Render one channel plane to a PIL image."""
    return Image.fromarray(upscale(plane_rgb(plane, scale), factor), mode="RGB")
