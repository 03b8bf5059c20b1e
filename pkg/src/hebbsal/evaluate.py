"""Patch-level evaluation of a salient set against an ROI frequency map.

Patches are classified by whether they were selected and whether they
contain any nonzero ROI count; the four metrics are the standard
precision/recall pair plus frequency-weighted variants that credit the
detector more for regions many subjects selected. Metrics with a zero
denominator are reported as not-applicable (None), never as a silent zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ingest import RgbImage, RoiMap

CSV_COLUMNS = ("image", "recall", "precision", "weighted_recall", "weighted_precision")

OVERLAY_OUTLINE = (1.0, 1.0, 0.0)
HEAT_ALPHA = 0.5


@dataclass
class PatchClassification:
    """Patch coordinate sets for the three confusion classes (tn implicit)."""

    tp_set: frozenset
    fp_set: frozenset
    fn_set: frozenset

    @property
    def tp(self) -> int:
        return len(self.tp_set)

    @property
    def fp(self) -> int:
        return len(self.fp_set)

    @property
    def fn(self) -> int:
        return len(self.fn_set)


@dataclass
class EvalReport:
    """Four-metric result for one image, plus diagnostic counts.

    ``selected_mass`` is the raw sum of (count + 1) over all selected
    patches (true and false positives alike); it is exposed for diagnosis
    only and is not itself a recall.
    """

    image: str
    recall: float | None
    precision: float | None
    weighted_recall: float | None
    weighted_precision: float | None
    tp: int
    fp: int
    fn: int
    selected_mass: float


def _block_view(arr: np.ndarray, patch_size: int) -> np.ndarray:
    h, w = arr.shape
    return arr.reshape(h // patch_size, patch_size, w // patch_size, patch_size)


def _check_dims(salient: np.ndarray, roi: RoiMap, patch_size: int) -> None:
    rows, cols = salient.shape
    if roi.height != rows * patch_size or roi.width != cols * patch_size:
        raise ValidationError(
            f"ROI {roi.width}x{roi.height} does not match "
            f"{cols}x{rows} patch grid at patch size {patch_size}")


def roi_positive_patches(roi: RoiMap, patch_size: int = 16) -> np.ndarray:
    """Boolean patch grid: true where the patch footprint holds any nonzero
    ROI count."""
    return _block_view(roi.counts > 0, patch_size).any(axis=(1, 3))


def classify_patches(salient: np.ndarray, roi: RoiMap,
                     patch_size: int = 16) -> PatchClassification:
    """Split the patch grid into tp / fp / fn against the ROI map."""
    _check_dims(salient, roi, patch_size)
    positive = roi_positive_patches(roi, patch_size)
    tp = salient & positive
    fp = salient & ~positive
    fn = ~salient & positive
    as_set = lambda m: frozenset(zip(*np.nonzero(m)))
    return PatchClassification(as_set(tp), as_set(fp), as_set(fn))


def precision(c: PatchClassification) -> float | None:
    """tp/(tp+fp); None when nothing was selected."""
    denom = c.tp + c.fp
    return c.tp / denom if denom else None


def recall(c: PatchClassification) -> float | None:
    """tp/(tp+fn); None when no patch is ROI-positive."""
    denom = c.tp + c.fn
    return c.tp / denom if denom else None


def weighted_precision(salient: np.ndarray, roi: RoiMap,
                       patch_size: int = 16) -> float | None:
    """Share of the ROI probability density captured by the selected patches.

    The ROI map is normalized to sum 1; the result is the density mass
    inside the selection. None when the map is all zero.
    """
    _check_dims(salient, roi, patch_size)
    total = float(roi.counts.sum())
    if total == 0.0:
        return None
    per_patch = _block_view(roi.counts, patch_size).sum(axis=(1, 3))
    return float(per_patch[salient].sum()) / total


def weighted_recall(salient: np.ndarray, roi: RoiMap,
                    patch_size: int = 16) -> float | None:
    """Mass-weighted recall: tp mass over tp+fn mass.

    Patch mass is the sum of (count + 1) over its pixels, so that
    zero-count pixels still contribute area. None when no patch is
    ROI-positive.
    """
    _check_dims(salient, roi, patch_size)
    positive = roi_positive_patches(roi, patch_size)
    if not positive.any():
        return None
    mass = _block_view(roi.counts + 1, patch_size).sum(axis=(1, 3)).astype(np.float64)
    tp_mass = float(mass[salient & positive].sum())
    fn_mass = float(mass[~salient & positive].sum())
    return tp_mass / (tp_mass + fn_mass)


def selected_mass(salient: np.ndarray, roi: RoiMap,
                  patch_size: int = 16) -> float:
    """Raw (count + 1) mass over every selected patch; diagnostic only."""
    _check_dims(salient, roi, patch_size)
    mass = _block_view(roi.counts + 1, patch_size).sum(axis=(1, 3))
    return float(mass[salient].sum())


def evaluate_image(image_id: str, salient: np.ndarray, roi: RoiMap,
                   patch_size: int = 16) -> EvalReport:
    """Compute every metric for one (salient grid, ROI map) pair."""
    c = classify_patches(salient, roi, patch_size)
    return EvalReport(
        image=image_id,
        recall=recall(c),
        precision=precision(c),
        weighted_recall=weighted_recall(salient, roi, patch_size),
        weighted_precision=weighted_precision(salient, roi, patch_size),
        tp=c.tp, fp=c.fp, fn=c.fn,
        selected_mass=selected_mass(salient, roi, patch_size),
    )


def _fmt(v: float | None) -> str:
    return "n/a" if v is None else f"{v:.12g}"


def reports_to_csv(reports: list[EvalReport]) -> str:
    """CSV with one row per image and a final average row.

    Averages are taken over defined entries only; a column with no defined
    entry averages to n/a.
    """
    lines = [",".join(CSV_COLUMNS)]
    for r in reports:
        lines.append(",".join([r.image, _fmt(r.recall), _fmt(r.precision),
                               _fmt(r.weighted_recall), _fmt(r.weighted_precision)]))
    means = []
    for attr in CSV_COLUMNS[1:]:
        vals = [getattr(r, attr) for r in reports if getattr(r, attr) is not None]
        means.append(_fmt(sum(vals) / len(vals) if vals else None))
    lines.append(",".join(["average"] + means))
    return "\n".join(lines) + "\n"


def report_to_json_dict(r: EvalReport) -> dict:
    return {
        "image": r.image,
        "recall": r.recall,
        "precision": r.precision,
        "weighted_recall": r.weighted_recall,
        "weighted_precision": r.weighted_precision,
        "tp": r.tp,
        "fp": r.fp,
        "fn": r.fn,
        "selected_mass": r.selected_mass,
    }


def render_overlay(img: RgbImage, salient: np.ndarray,
                   roi: RoiMap | None = None,
                   patch_size: int = 16) -> RgbImage:
    """Image with salient patch outlines, over an optional ROI heat layer.

    ROI counts render blue (least selected) to red (most selected), alpha
    blended under the outlines. With no ROI and no salient patches the
    output equals the input.
    """
    rows, cols = salient.shape
    if img.height != rows * patch_size or img.width != cols * patch_size:
        raise ValidationError(
            f"image {img.width}x{img.height} does not match "
            f"{cols}x{rows} patch grid at patch size {patch_size}")
    out = img.pixels.copy()
    if roi is not None:
        if roi.height != img.height or roi.width != img.width:
            raise ValidationError("ROI dimensions do not match image")
        peak = roi.counts.max()
        if peak > 0:
            t = roi.counts / peak
            heat = np.stack([t, np.zeros_like(t), 1.0 - t], axis=-1)
            hot = roi.counts > 0
            out[hot] = (1 - HEAT_ALPHA) * out[hot] + HEAT_ALPHA * heat[hot]
    color = np.asarray(OVERLAY_OUTLINE)
    for r, c in zip(*np.nonzero(salient)):
        y0, x0 = r * patch_size, c * patch_size
        y1, x1 = y0 + patch_size, x0 + patch_size
        out[y0, x0:x1] = color
        out[y1 - 1, x0:x1] = color
        out[y0:y1, x0] = color
        out[y0:y1, x1 - 1] = color
    return RgbImage(pixels=out, source_width=img.source_width,
                    source_height=img.source_height)
