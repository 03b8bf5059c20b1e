"""Shared fixtures: synthetic oriented-texture scenes and image writers."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from PIL import Image

SCENE_INTENSITIES = (0.65, 0.75, 0.85)


def make_scene(size: int = 256, patch: int = 16, target: tuple[int, int] = (6, 6),
               bg: float = 0.5) -> np.ndarray:
    """Oriented-texture scene: gray background textured with horizontal
    strokes, plus one 2x2-patch block of vertical strokes at ``target``.

    Every patch carries one full-length stroke per intensity, each landing
    in its own intensity layer, so per-layer patch directions are exactly
    axis-aligned: (1,0) in the background, (0,1) in the target block.
    """
    img = np.full((size, size, 3), bg)
    tr, tc = target
    tcells = {(tr, tc), (tr, tc + 1), (tr + 1, tc), (tr + 1, tc + 1)}
    for pr in range(size // patch):
        for pc in range(size // patch):
            y0, x0 = pr * patch, pc * patch
            for k, inten in enumerate(SCENE_INTENSITIES):
                off = 3 + 5 * k
                if (pr, pc) in tcells:
                    img[y0:y0 + patch, x0 + off] = inten
                else:
                    img[y0 + off, x0:x0 + patch] = inten
    return img


def scene_target_mask(size: int = 256, patch: int = 16,
                      target: tuple[int, int] = (6, 6)) -> np.ndarray:
    """Ground-truth salient patch grid for make_scene."""
    grid = np.zeros((size // patch, size // patch), dtype=bool)
    tr, tc = target
    grid[tr:tr + 2, tc:tc + 2] = True
    return grid


def save_rgb_png(path: Path, pixels: np.ndarray) -> Path:
    """Write a float [0,1] (H, W, 3) array as an 8-bit PNG."""
    data = np.rint(np.clip(pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path, format="PNG")
    return path


def save_gray_png(path: Path, values: np.ndarray) -> Path:
    """Write an integer (H, W) array as an 8-bit grayscale PNG."""
    Image.fromarray(values.astype(np.uint8), mode="L").save(path, format="PNG")
    return path


@pytest.fixture
def scene_png(tmp_path) -> Path:
    """Small (64x64) oriented-texture scene on disk, target block at (1,1)."""
    return save_rgb_png(tmp_path / "scene.png",
                        make_scene(size=64, target=(1, 1)))
