"""Bottom-up visual saliency detection from intensity-layer patch statistics.

The pipeline splits an image into R/G/B planes, quantizes each plane into
ordered intensity layers, learns the principal direction of every 16x16
patch with a normalized Hebbian rule, compares neighbors through dot
products, and aggregates dissimilarity evidence across layers and channels
into a binary salient-patch map. An evaluation module scores results
against human region-of-interest frequency maps.
"""

from .config import RunConfig
from .errors import (
    DegenerateInputError,
    HebbsalError,
    UnsupportedFormatError,
    ValidationError,
)
from .evaluate import (
    EvalReport,
    PatchClassification,
    classify_patches,
    evaluate_image,
    precision,
    recall,
    render_overlay,
    weighted_precision,
    weighted_recall,
)
from .ingest import (
    BinaryLayer,
    ChannelPlane,
    Patch,
    RgbImage,
    RoiMap,
    decompose_layers,
    load_image,
    load_roi_map,
    split_channels,
    tile_patches,
)
from .lateral import (
    LayerWeightGrid,
    SaliencyConfig,
    SaliencyGrid,
    aggregate_channels,
    channel_saliency,
    count_dissimilar,
    detect,
    expected_value_cutoff,
    similarity,
)
from .oja import (
    CoordinateSample,
    LearnConfig,
    WeightVector,
    batch_pca_oracle,
    hebbian_step,
    neuron_output,
    oja_learn,
    oja_step,
    patch_to_samples,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryLayer",
    "ChannelPlane",
    "CoordinateSample",
    "DegenerateInputError",
    "EvalReport",
    "HebbsalError",
    "LayerWeightGrid",
    "LearnConfig",
    "Patch",
    "PatchClassification",
    "RgbImage",
    "RoiMap",
    "RunConfig",
    "SaliencyConfig",
    "SaliencyGrid",
    "UnsupportedFormatError",
    "ValidationError",
    "WeightVector",
    "aggregate_channels",
    "batch_pca_oracle",
    "channel_saliency",
    "classify_patches",
    "count_dissimilar",
    "decompose_layers",
    "detect",
    "evaluate_image",
    "expected_value_cutoff",
    "hebbian_step",
    "load_image",
    "load_roi_map",
    "neuron_output",
    "oja_learn",
    "oja_step",
    "patch_to_samples",
    "precision",
    "recall",
    "render_overlay",
    "similarity",
    "split_channels",
    "tile_patches",
    "weighted_precision",
    "weighted_recall",
]
