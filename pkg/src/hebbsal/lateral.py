"""Lateral comparison of learned patch vectors and salient-region extraction.

Stage 2 of the pipeline: each patch's learned direction is compared with its
up-to-8 neighbors through dot products. Per channel, dissimilar-neighbor
counts are summed over all intensity layers and thresholded into a salient
mask; masks are aggregated across channels into per-patch frequencies, and a
dataset-derived expected value cuts off patches that are salient no more
often than chance.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .ingest import BinaryLayer, RgbImage, decompose_layers, split_channels, tile_patches
from .oja import (
    STATUS_DEGENERATE,
    LearnConfig,
    WeightVector,
    derive_patch_seed,
    learn_patch,
)

_NEIGHBOR_OFFSETS = ((-1, -1), (-1, 0), (-1, 1),
                     (0, -1), (0, 1),
                     (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class SaliencyConfig:
    """Stage-2 decision thresholds.

    A neighbor is dissimilar when the (absolute) dot product of the two unit
    vectors falls below ``dissim_threshold``; a channel flags a patch salient
    when its dissimilar count summed over layers strictly exceeds
    ``count_threshold``. ``use_absolute_dot`` compares |w_c . w_i| so that the
    learner's inherent sign ambiguity cannot make identical textures read as
    dissimilar; switching it off preserves the raw signed rule for ablation.
    """

    dissim_threshold: float = 0.1
    count_threshold: int = 10
    use_absolute_dot: bool = True

    def __post_init__(self):
        if not 0.0 <= self.dissim_threshold <= 1.0:
            raise ValidationError(
                f"dissim_threshold must be in [0, 1], got {self.dissim_threshold}")
        if self.count_threshold < 0:
            raise ValidationError(
                f"count_threshold must be >= 0, got {self.count_threshold}")


@dataclass
class LayerWeightGrid:
    """Learned unit vectors for every patch of one (channel, layer) grid.

    ``vectors`` is (rows, cols, 2) float64 with NaN rows marking inactive
    (degenerate) patches; ``status`` holds the per-patch learner label.
    """

    channel: str
    layer_index: int
    vectors: np.ndarray
    status: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.vectors.shape[:2]

    @property
    def active(self) -> np.ndarray:
        return ~np.isnan(self.vectors[:, :, 0])

    def weight_at(self, row: int, col: int) -> WeightVector | None:
        if np.isnan(self.vectors[row, col, 0]):
            return None
        return WeightVector(float(self.vectors[row, col, 0]),
                            float(self.vectors[row, col, 1]))


@dataclass
class SaliencyGrid:
    """Every per-patch accumulator of the pipeline plus the final salient set."""

    channels: tuple[str, ...]
    dissim_counts: dict[str, np.ndarray]
    channel_masks: dict[str, np.ndarray]
    frequencies: np.ndarray
    salient: np.ndarray
    expected_value: float
    weight_grids: dict[str, list[LayerWeightGrid]] | None = None

    @property
    def width_patches(self) -> int:
        return self.salient.shape[1]

    @property
    def height_patches(self) -> int:
        return self.salient.shape[0]


def similarity(w_c: WeightVector, w_i: WeightVector) -> float:
    """Dot product of two weight vectors; the cosine of their angle when both
    are unit-norm (callers keep stored vectors normalized within 0.01)."""
    return w_c[0] * w_i[0] + w_c[1] * w_i[1]


def count_dissimilar(grid: LayerWeightGrid, row: int, col: int,
                     cfg: SaliencyConfig) -> int:
    """Number of the up-to-8 in-bounds active neighbors dissimilar to the
    center patch. Inactive center yields 0; inactive or out-of-bounds
    neighbors are skipped, never counted as dissimilar."""
    rows, cols = grid.shape
    if not (0 <= row < rows and 0 <= col < cols):
        raise ValidationError(f"patch ({row},{col}) outside {rows}x{cols} grid")
    center = grid.weight_at(row, col)
    if center is None:
        return 0
    count = 0
    for dr, dc in _NEIGHBOR_OFFSETS:
        r, c = row + dr, col + dc
        if not (0 <= r < rows and 0 <= c < cols):
            continue
        nb = grid.weight_at(r, c)
        if nb is None:
            continue
        sim = similarity(center, nb)
        if cfg.use_absolute_dot:
            sim = abs(sim)
        if sim < cfg.dissim_threshold:
            count += 1
    return count


def layer_dissim_grid(grid: LayerWeightGrid, cfg: SaliencyConfig) -> np.ndarray:
    """Dissimilar-neighbor counts for every cell at once.

    Equivalent to calling count_dissimilar per cell, computed with shifted
    array views so whole-grid counting stays cheap.
    """
    rows, cols = grid.shape
    active = grid.active
    vecs = np.where(active[:, :, None], grid.vectors, 0.0)
    counts = np.zeros((rows, cols), dtype=np.int64)
    for dr, dc in _NEIGHBOR_OFFSETS:
        r0, r1 = max(0, -dr), rows - max(0, dr)
        c0, c1 = max(0, -dc), cols - max(0, dc)
        if r0 >= r1 or c0 >= c1:
            continue
        ctr = np.s_[r0:r1, c0:c1]
        nbr = np.s_[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
        dots = np.einsum("ijk,ijk->ij", vecs[ctr], vecs[nbr])
        if cfg.use_absolute_dot:
            dots = np.abs(dots)
        hit = active[ctr] & active[nbr] & (dots < cfg.dissim_threshold)
        counts[ctr] += hit
    counts[~active] = 0
    return counts


def channel_saliency(layers: list[LayerWeightGrid],
                     cfg: SaliencyConfig) -> tuple[np.ndarray, np.ndarray]:
    """Sum dissimilarity counts over a channel's layers and threshold them.

    The mask is strict: a patch is salient for the channel only when its
    summed count exceeds ``count_threshold``.
    """
    if not layers:
        raise ValidationError("channel_saliency needs at least one layer grid")
    shape = layers[0].shape
    if any(g.shape != shape for g in layers):
        raise ValidationError("layer grids of one channel must share dimensions")
    counts = np.zeros(shape, dtype=np.int64)
    for g in layers:
        counts += layer_dissim_grid(g, cfg)
    return counts, counts > cfg.count_threshold


def aggregate_channels(masks: list[np.ndarray]) -> np.ndarray:
    """Per-patch count of channels whose salient mask is set."""
    shape = masks[0].shape
    if any(m.shape != shape for m in masks):
        raise ValidationError("channel masks must share dimensions")
    freq = np.zeros(shape, dtype=np.int64)
    for m in masks:
        freq += m.astype(np.int64)
    return freq


def expected_value_cutoff(frequencies: np.ndarray,
                          per_channel_layer_salient_total: int,
                          total_patches: int) -> tuple[np.ndarray, float]:
    """Keep patches whose cross-channel frequency reaches the chance level.

    The expected value is the ratio of salient incidences to the number of
    patches tiling the figure once; patches with frequency below it, or zero,
    are cut. The raw ratio is returned so callers can surface it.
    """
    if total_patches <= 0:
        raise ValidationError("total_patches must be positive")
    expected = per_channel_layer_salient_total / total_patches
    salient = (frequencies >= expected) & (frequencies > 0)
    return salient, expected


def build_weight_grid(layer: BinaryLayer, channel_idx: int, global_seed: int,
                      learn_cfg: LearnConfig,
                      patch_size: int = 16) -> LayerWeightGrid:
    """Stage 1 over one (channel, layer): learn every patch's direction.

    Stored vectors are renormalized to exact unit length so stage-2 dot
    products are true cosines; the learner's raw norm is an observable of
    oja_learn itself, not of the grid.
    """
    patches = tile_patches(layer, patch_size)
    rows, cols = len(patches), len(patches[0])
    vectors = np.full((rows, cols, 2), np.nan)
    status = np.full((rows, cols), STATUS_DEGENERATE, dtype=object)
    for prow in patches:
        for p in prow:
            if p.active_count < 2:
                continue
            seed = derive_patch_seed(global_seed, channel_idx, layer.layer_index,
                                     p.grid_row, p.grid_col)
            w, st = learn_patch(p, replace(learn_cfg, seed=seed))
            if w is None:
                continue
            norm = w.norm()
            if not np.isfinite(norm) or norm < 1e-12:
                continue
            vectors[p.grid_row, p.grid_col] = (w.w1 / norm, w.w2 / norm)
            status[p.grid_row, p.grid_col] = st
    return LayerWeightGrid(layer.channel, layer.layer_index, vectors, status)


def compute_saliency_from_grids(weight_grids: dict[str, list[LayerWeightGrid]],
                                cfg: SaliencyConfig) -> SaliencyGrid:
    """Stage 2: from stored weight grids to the final salient set.

    The expected-value numerator counts, over all channels, the patches each
    channel flagged salient (the per-channel rule already folds every
    intensity layer into its count sum).
    """
    channels = tuple(weight_grids)
    counts: dict[str, np.ndarray] = {}
    masks: dict[str, np.ndarray] = {}
    for ch in channels:
        counts[ch], masks[ch] = channel_saliency(weight_grids[ch], cfg)
    frequencies = aggregate_channels([masks[ch] for ch in channels])
    incidences = int(sum(int(masks[ch].sum()) for ch in channels))
    total_patches = int(frequencies.size)
    salient, expected = expected_value_cutoff(frequencies, incidences, total_patches)
    return SaliencyGrid(channels=channels, dissim_counts=counts,
                        channel_masks=masks, frequencies=frequencies,
                        salient=salient, expected_value=expected,
                        weight_grids=dict(weight_grids))


def detect(img: RgbImage, cfg: SaliencyConfig = SaliencyConfig(),
           learn_cfg: LearnConfig = LearnConfig(), *, num_layers: int = 10,
           patch_size: int = 16, seed: int = 0) -> SaliencyGrid:
    """Full pipeline: channels -> intensity layers -> patch learning ->
    lateral comparison -> cross-channel aggregation -> expected-value cutoff.

    Deterministic for a given seed: each patch learner draws its shuffle from
    a seed derived from (seed, channel, layer, row, col).
    """
    if img.height % patch_size or img.width % patch_size:
        raise ValidationError(
            f"image {img.width}x{img.height} not padded to patch size {patch_size}")
    planes = split_channels(img)
    epsilon = 1.0 / num_layers
    grids: dict[str, list[LayerWeightGrid]] = {}
    for ch_idx, plane in enumerate(planes):
        layers = decompose_layers(plane, epsilon)
        grids[plane.channel] = [
            build_weight_grid(layer, ch_idx, seed, learn_cfg, patch_size)
            for layer in layers
        ]
    return compute_saliency_from_grids(grids, cfg)


def saliency_to_json_dict(grid: SaliencyGrid) -> dict:
    """Wire format for a saliency result (row-major arrays)."""
    return {
        "width_patches": grid.width_patches,
        "height_patches": grid.height_patches,
        "expected_value": grid.expected_value,
        "per_channel_counts": {
            ch: [int(v) for v in grid.dissim_counts[ch].ravel()]
            for ch in grid.channels
        },
        "frequencies": [int(v) for v in grid.frequencies.ravel()],
        "salient": [int(v) for v in grid.salient.ravel()],
    }


def salient_mask_array(grid: SaliencyGrid, patch_size: int = 16) -> np.ndarray:
    """Salient set upsampled to pixel resolution as a 0/255 uint8 mask."""
    block = np.ones((patch_size, patch_size), dtype=np.uint8)
    return np.kron(grid.salient.astype(np.uint8), block) * 255
