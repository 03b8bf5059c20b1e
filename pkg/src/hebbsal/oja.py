"""Per-patch principal-direction learning.

Each active patch feeds the centered (x, y) coordinates of its set pixels to
a two-input linear neuron. The plain Hebbian rule grows weights without
bound, so learning uses the normalized variant whose fixed point is the unit
first principal component of the inputs. A closed-form 2x2 eigensolver over
the sample covariance serves as the batch oracle the online rule is tested
against.

The learner expects zero-mean samples: it converges to the dominant
eigenvector of the second-moment matrix, which equals the covariance PC1
only for centered data. ``patch_to_samples`` centers at the active-pixel
centroid for exactly this reason.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateInputError, ValidationError
from .ingest import Patch

# Eigenvalue tie-break below this gap counts as an isotropic patch.
ISOTROPY_TOL = 1e-9

STATUS_OK = "ok"
STATUS_ISOTROPIC = "isotropic"
STATUS_DEGENERATE = "degenerate"


class CoordinateSample(NamedTuple):
    """Pixel coordinate offset from the patch's active-pixel centroid."""

    x: float
    y: float


class WeightVector(NamedTuple):
    """Synaptic weight pair; approximately unit-norm after convergence."""

    w1: float
    w2: float

    def norm(self) -> float:
        return math.hypot(self.w1, self.w2)


@dataclass(frozen=True)
class LearnConfig:
    """Knobs for the online learner.

    mu is the learning rate, alpha the forgetting rate of the plain Hebbian
    rule (unused by the normalized rule), epochs the number of presentations
    of each sample, and seed drives the per-epoch sample shuffle.
    """

    mu: float = 0.01
    epochs: int = 5
    alpha: float = 1.0
    seed: int = 0
    init: tuple[float, float] = (0.1, 0.5)

    def __post_init__(self):
        if self.mu <= 0:
            raise ValidationError(f"mu must be positive, got {self.mu}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.init[0] == 0.0 and self.init[1] == 0.0:
            raise ValidationError("initial weight vector must be nonzero")


def neuron_output(w: WeightVector, x: CoordinateSample) -> float:
    """Linear response of the neuron: the dot product of weights and input."""
    return w[0] * x[0] + w[1] * x[1]


def hebbian_step(w: WeightVector, x: CoordinateSample, mu: float,
                 alpha: float) -> WeightVector:
    """One plain Hebbian update: w + mu*(y*x - alpha*w) with y = w.x.

    With alpha = 0 the norm grows strictly whenever y != 0, which is why the
    normalized rule below is used for actual learning.
    """
    y = w[0] * x[0] + w[1] * x[1]
    return WeightVector(w[0] + mu * (y * x[0] - alpha * w[0]),
                        w[1] + mu * (y * x[1] - alpha * w[1]))


def oja_step(w: WeightVector, x: CoordinateSample, mu: float) -> WeightVector:
    """One normalized Hebbian update: w + mu*(y*x - y^2*w) with y = w.x."""
    y = w[0] * x[0] + w[1] * x[1]
    return WeightVector(w[0] + mu * (y * x[0] - y * y * w[0]),
                        w[1] + mu * (y * x[1] - y * y * w[1]))


def _oja_loop_py(xs, w1, w2, mu, order):
    # Must mirror oja_step exactly; the two paths are asserted bit-identical.
    for k in range(order.shape[0]):
        i = order[k]
        x0 = xs[i, 0]
        x1 = xs[i, 1]
        y = w1 * x0 + w2 * x1
        w1 = w1 + mu * (y * x0 - y * y * w1)
        w2 = w2 + mu * (y * x1 - y * y * w2)
    return w1, w2


try:
    from numba import njit

    _oja_loop = njit(cache=True, nogil=True)(_oja_loop_py)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _oja_loop = _oja_loop_py


def _as_sample_array(samples: Sequence[CoordinateSample]) -> np.ndarray:
    xs = np.asarray(samples, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[1] != 2 or xs.shape[0] < 2:
        raise DegenerateInputError(
            f"need at least 2 coordinate samples, got shape {xs.shape}")
    if not (xs != xs[0]).any():
        raise DegenerateInputError("all samples are collocated")
    return xs


def oja_learn(samples: Sequence[CoordinateSample],
              cfg: LearnConfig = LearnConfig()) -> WeightVector:
    """Run the normalized Hebbian rule over the sample set.

    The initial vector is normalized to unit length, then every sample is
    presented ``cfg.epochs`` times, reshuffled each epoch with the seeded
    generator. Returns the final weight vector, which approximates the unit
    first principal component of centered input data.
    """
    xs = _as_sample_array(samples)
    n = xs.shape[0]
    w0 = np.asarray(cfg.init, dtype=np.float64)
    w0 = w0 / math.hypot(w0[0], w0[1])
    rng = np.random.default_rng(cfg.seed)
    order = np.concatenate([rng.permutation(n) for _ in range(cfg.epochs)])
    w1, w2 = _oja_loop(xs, float(w0[0]), float(w0[1]), cfg.mu, order)
    return WeightVector(float(w1), float(w2))


def sample_covariance(samples: Sequence[CoordinateSample]) -> np.ndarray:
    """Population (1/n) covariance matrix of the samples."""
    xs = _as_sample_array(samples)
    centered = xs - xs.mean(axis=0)
    return centered.T @ centered / xs.shape[0]


def eigen2x2(cov: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Closed-form eigendecomposition of a symmetric 2x2 matrix.

    Returns (lam1, lam2, v1) with lam1 >= lam2 and v1 the unit eigenvector
    of lam1, sign-fixed so its first nonzero component is positive.
    """
    a, b, c = float(cov[0, 0]), float(cov[0, 1]), float(cov[1, 1])
    half_tr = 0.5 * (a + c)
    disc = math.hypot(0.5 * (a - c), b)
    lam1, lam2 = half_tr + disc, half_tr - disc
    if b == 0.0:
        v = np.array([1.0, 0.0]) if a >= c else np.array([0.0, 1.0])
    else:
        v = np.array([lam1 - c, b])
        v = v / math.hypot(v[0], v[1])
    if v[0] < 0.0 or (v[0] == 0.0 and v[1] < 0.0):
        v = -v
    return lam1, lam2, v


def batch_pca_oracle(samples: Sequence[CoordinateSample]) -> WeightVector:
    """Unit first principal component via the closed-form covariance solve.

    Raises DegenerateInputError when the covariance is zero. For isotropic
    inputs (equal eigenvalues within ISOTROPY_TOL) any direction is valid;
    the tie-broken eigenvector is returned and ``is_isotropic`` reports the
    condition.
    """
    cov = sample_covariance(samples)
    lam1, lam2, v = eigen2x2(cov)
    if lam1 <= 0.0:
        raise DegenerateInputError("zero covariance: no principal direction")
    return WeightVector(float(v[0]), float(v[1]))


def is_isotropic(samples: Sequence[CoordinateSample]) -> bool:
    """True when the two covariance eigenvalues tie within ISOTROPY_TOL."""
    lam1, lam2, _ = eigen2x2(sample_covariance(samples))
    return (lam1 - lam2) <= ISOTROPY_TOL


def patch_to_samples(p: Patch) -> list[CoordinateSample]:
    """Centered (x, y) = (col, row) offsets of a patch's active pixels.

    Coordinates are offsets from the active-pixel centroid so the learner
    sees zero-mean data. Returns an empty list for an empty patch.
    """
    rows, cols = np.nonzero(p.bits)
    if rows.size == 0:
        return []
    cc, cr = cols.mean(), rows.mean()
    return [CoordinateSample(float(c) - cc, float(r) - cr)
            for r, c in zip(rows, cols)]


def learn_patch(p: Patch, cfg: LearnConfig) -> tuple[WeightVector | None, str]:
    """Stage-1 treatment of one patch: learned vector plus a status label.

    Patches with fewer than two active pixels carry no principal direction
    and come back (None, degenerate). Isotropic patches keep whatever vector
    the learner converged to but are labelled low-confidence.
    """
    if p.active_count < 2:
        return None, STATUS_DEGENERATE
    samples = patch_to_samples(p)
    lam1, lam2, _ = eigen2x2(sample_covariance(samples))
    status = STATUS_ISOTROPIC if (lam1 - lam2) <= ISOTROPY_TOL else STATUS_OK
    w = oja_learn(samples, cfg)
    return w, status


def derive_patch_seed(global_seed: int, channel_idx: int, layer_idx: int,
                      grid_row: int, grid_col: int) -> int:
    """Deterministic per-patch seed so grid learners are independent yet
    reproducible across runs and platforms."""
    ss = np.random.SeedSequence(
        [global_seed, channel_idx, layer_idx, grid_row, grid_col])
    return int(ss.generate_state(1)[0])


def line_angle_degrees(u: Sequence[float], v: Sequence[float]) -> float:
    """Angle in degrees between the lines spanned by u and v (sign-blind)."""
    nu = math.hypot(u[0], u[1])
    nv = math.hypot(v[0], v[1])
    if nu == 0.0 or nv == 0.0:
        raise ValidationError("zero vector has no direction")
    cosang = abs(u[0] * v[0] + u[1] * v[1]) / (nu * nv)
    return math.degrees(math.acos(min(cosang, 1.0)))
