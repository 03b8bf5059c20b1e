"""Image loading and pre-processing: channel split, intensity layers, patch tiling.

An input image is normalized to [0, 1], zero-padded on the right and bottom
edges to a multiple of the patch size, and split into independent R, G and B
planes. Each plane is quantized into ordered intensity layers (strongest
signal in the top layer), and each layer is tiled into non-overlapping
square patches that act as the receptive fields of the downstream learners.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import UnsupportedFormatError, ValidationError

CHANNELS = ("R", "G", "B")

ACCEPTED_FORMATS = ("PNG", "PPM")


@dataclass
class RgbImage:
    """Normalized RGB image, padded so both dimensions divide evenly into patches.

    ``pixels`` is a float64 array of shape (height, width, 3) with values in
    [0, 1]. ``source_width``/``source_height`` record the pre-padding size;
    padded pixels are zero in every channel.
    """

    pixels: np.ndarray
    source_width: int
    source_height: int

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_array(cls, arr: np.ndarray, pad_multiple: int = 16) -> "RgbImage":
        """Wrap an (H, W, 3) float array in [0, 1], zero-padding to the next
        multiple of ``pad_multiple`` on each axis."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValidationError(f"expected (H, W, 3) array, got shape {arr.shape}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValidationError("pixel values must lie in [0, 1]")
        h, w = arr.shape[:2]
        padded = _zero_pad(arr, pad_multiple)
        return cls(pixels=padded, source_width=w, source_height=h)


@dataclass
class ChannelPlane:
    """One color channel of an image; same padded dimensions as the source."""

    channel: str
    values: np.ndarray


@dataclass
class BinaryLayer:
    """One intensity layer of one channel.

    ``mask[p]`` is true iff the source intensity at ``p`` lies in the layer's
    half-open interval ``(j*eps, (j+1)*eps]``. Exact zeros belong to no layer.
    """

    channel: str
    layer_index: int
    mask: np.ndarray


@dataclass
class Patch:
    """A square boolean receptive field cut from one binary layer."""

    grid_row: int
    grid_col: int
    bits: np.ndarray

    @property
    def active_count(self) -> int:
        return int(self.bits.sum())


@dataclass
class RoiMap:
    """Pixelwise selection-frequency counts, padded to the evaluated image size."""

    counts: np.ndarray
    source_width: int = field(default=0)
    source_height: int = field(default=0)

    @property
    def width(self) -> int:
        return self.counts.shape[1]

    @property
    def height(self) -> int:
        return self.counts.shape[0]


def _zero_pad(arr: np.ndarray, multiple: int) -> np.ndarray:
    h, w = arr.shape[:2]
    ph = (multiple - h % multiple) % multiple
    pw = (multiple - w % multiple) % multiple
    if ph == 0 and pw == 0:
        return arr.copy()
    pad = [(0, ph), (0, pw)] + [(0, 0)] * (arr.ndim - 2)
    return np.pad(arr, pad, mode="constant")


def load_image(path: str | Path, pad_multiple: int = 16) -> RgbImage:
    """Load a PNG or PPM file as a normalized, padded RgbImage.

    8-bit channel values are divided by 255. Alpha channels are ignored.
    Raises OSError for unreadable files and UnsupportedFormatError for
    anything that is not a decodable PNG or PPM.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            fmt = im.format
            if fmt not in ACCEPTED_FORMATS:
                raise UnsupportedFormatError(
                    f"{path}: format {fmt!r} not supported (want PNG or PPM)")
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64) / 255.0
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(f"{path}: not a decodable image") from exc
    return RgbImage.from_array(arr, pad_multiple=pad_multiple)


def split_channels(img: RgbImage) -> tuple[ChannelPlane, ChannelPlane, ChannelPlane]:
    """Split an image into its three independent color planes."""
    r, g, b = (img.pixels[:, :, i].copy() for i in range(3))
    return (ChannelPlane("R", r), ChannelPlane("G", g), ChannelPlane("B", b))


def layer_index_map(values: np.ndarray, num_layers: int) -> np.ndarray:
    """Assign every pixel its layer index in [0, num_layers-1], or -1 for zeros.

    Layer j covers the interval (j/n, (j+1)/n]; the assignment is computed as
    ceil(v*n) - 1 so that each nonzero intensity lands in exactly one layer
    and 1.0 lands in the top layer.
    """
    scaled = np.ceil(values * num_layers) - 1
    idx = np.clip(scaled, 0, num_layers - 1).astype(np.int64)
    idx[values <= 0.0] = -1
    return idx


def decompose_layers(plane: ChannelPlane, epsilon: float = 0.1) -> list[BinaryLayer]:
    """Quantize a channel plane into 1/epsilon ordered intensity layers.

    Zero-intensity pixels are excluded from every layer; every other pixel is
    true in exactly one layer.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValidationError(f"epsilon must be in (0, 1], got {epsilon}")
    num_layers = round(1.0 / epsilon)
    if not math.isclose(num_layers * epsilon, 1.0, rel_tol=1e-9):
        raise ValidationError(f"epsilon {epsilon} does not evenly divide [0, 1]")
    if plane.values.size and (plane.values.min() < 0.0 or plane.values.max() > 1.0):
        raise ValidationError("plane values must lie in [0, 1]")

    idx = layer_index_map(plane.values, num_layers)
    return [BinaryLayer(plane.channel, j, idx == j) for j in range(num_layers)]


def tile_patches(layer: BinaryLayer, patch_size: int = 16) -> list[list[Patch]]:
    """Cut a layer into its non-overlapping (h/ps) x (w/ps) grid of patches."""
    h, w = layer.mask.shape
    if h % patch_size or w % patch_size:
        raise ValidationError(
            f"layer dims {w}x{h} are not multiples of patch size {patch_size}")
    rows, cols = h // patch_size, w // patch_size
    return [
        [
            Patch(r, c, layer.mask[r * patch_size:(r + 1) * patch_size,
                                   c * patch_size:(c + 1) * patch_size])
            for c in range(cols)
        ]
        for r in range(rows)
    ]


def reassemble_layer(patches: list[list[Patch]], patch_size: int = 16) -> np.ndarray:
    """Inverse of tile_patches; used to check the tiling bijection."""
    rows, cols = len(patches), len(patches[0])
    out = np.zeros((rows * patch_size, cols * patch_size), dtype=bool)
    for row in patches:
        for p in row:
            out[p.grid_row * patch_size:(p.grid_row + 1) * patch_size,
                p.grid_col * patch_size:(p.grid_col + 1) * patch_size] = p.bits
    return out


def load_roi_map(path: str | Path, target_size: tuple[int, int],
                 patch_size: int = 16) -> RoiMap:
    """Load an ROI frequency map and zero-pad it to the padded image size.

    ``target_size`` is (width, height) of the evaluated image after padding.
    Accepts a grayscale image (pixel value = selection count) or a CSV grid
    of non-negative integers. The map may be smaller than the target only by
    less than one patch along each axis (the padding strip); anything else is
    a dimension mismatch.
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        counts = _read_csv_grid(path)
    else:
        try:
            with Image.open(path) as im:
                counts = np.asarray(im.convert("L"), dtype=np.int64)
        except UnidentifiedImageError as exc:
            raise UnsupportedFormatError(f"{path}: not a decodable image") from exc

    h, w = counts.shape
    tw, th = target_size
    if not (0 <= tw - w < patch_size and 0 <= th - h < patch_size):
        raise ValidationError(
            f"ROI map {w}x{h} does not match target {tw}x{th} within padding")
    padded = np.zeros((th, tw), dtype=np.int64)
    padded[:h, :w] = counts
    return RoiMap(counts=padded, source_width=w, source_height=h)


def _read_csv_grid(path: Path) -> np.ndarray:
    rows: list[list[int]] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            try:
                values = [int(cell) for cell in row]
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: non-integer cell") from exc
            if any(v < 0 for v in values):
                raise ValidationError(f"{path}:{lineno}: negative count")
            rows.append(values)
    if not rows:
        raise ValidationError(f"{path}: empty ROI grid")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValidationError(f"{path}: ragged rows in ROI grid")
    return np.asarray(rows, dtype=np.int64)
