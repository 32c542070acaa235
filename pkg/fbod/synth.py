"""
Seeded synthetic datasets: a tight Gaussian cluster with far planted outliers, and
grayscale frame sequences where a few frames carry a brightened (or darkened) patch.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from fbod.core import Dataset
from fbod.dataset_io import FrameDataset
from fbod.exceptions import InvalidParameterError

DEFAULT_CENTER_VALUE = 50.0
MAX_NORMAL_RADIUS = 4.0
DIRECTION_BIAS = 1.0
GRADIENT_LOW = 60.0
GRADIENT_HIGH = 180.0

logger = logging.getLogger('synth')


@dataclass(frozen=True)
class ClusterSpec:
    """
    Normal points are Gaussian around cluster_center with standard deviation cluster_spread,
    clipped radially at 4 spreads. Outliers sit exactly outlier_offset spreads from the center.
    """
    n_normal: int = 16
    n_outliers: int = 4
    dims: int = 2
    cluster_center: Optional[Tuple[float, ...]] = None
    cluster_spread: float = 1.0
    outlier_offset: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.dims < 1:
            raise InvalidParameterError(f"dims must be >= 1, got {self.dims}")
        if self.n_outliers < 0:
            raise InvalidParameterError(f"n_outliers must be >= 0, got {self.n_outliers}")
        if self.n_outliers >= self.n_normal:
            raise InvalidParameterError(f"n_outliers ({self.n_outliers}) must be < n_normal ({self.n_normal})")
        if self.n_normal + self.n_outliers < 2:
            raise InvalidParameterError("at least 2 objects are required")
        if not self.cluster_spread > 0:
            raise InvalidParameterError(f"cluster_spread must be positive, got {self.cluster_spread}")
        if self.outlier_offset < 10:
            raise InvalidParameterError(f"outlier_offset must be >= 10, got {self.outlier_offset}")
        if self.cluster_center is not None and len(self.cluster_center) != self.dims:
            raise InvalidParameterError(f"cluster_center has {len(self.cluster_center)} values "
                                        f"for {self.dims} dimensions")

    @property
    def center(self) -> np.ndarray:
        if self.cluster_center is None:
            return np.full(self.dims, DEFAULT_CENTER_VALUE)
        return np.asarray(self.cluster_center, dtype=np.float64)


@dataclass(frozen=True)
class Patch:
    x: int = 10
    y: int = 8
    width: int = 10
    height: int = 10
    delta: float = 80.0


@dataclass(frozen=True)
class FrameSpec:
    width: int = 40
    height: int = 30
    n_normal: int = 60
    n_anomalous: int = 3
    noise_amplitude: float = 10.0
    patch: Patch = field(default_factory=Patch)
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidParameterError(f"frame size must be positive, got {self.width}x{self.height}")
        if self.n_anomalous < 0:
            raise InvalidParameterError(f"n_anomalous must be >= 0, got {self.n_anomalous}")
        if self.n_anomalous >= self.n_normal:
            raise InvalidParameterError(f"n_anomalous ({self.n_anomalous}) must be < n_normal ({self.n_normal})")
        if self.n_normal + self.n_anomalous < 2:
            raise InvalidParameterError("at least 2 frames are required")
        if self.noise_amplitude < 0:
            raise InvalidParameterError(f"noise_amplitude must be >= 0, got {self.noise_amplitude}")
        patch = self.patch
        if patch.width < 1 or patch.height < 1 or patch.x < 0 or patch.y < 0 \
                or patch.x + patch.width > self.width or patch.y + patch.height > self.height:
            raise InvalidParameterError(f"patch {patch.width}x{patch.height} at ({patch.x}, {patch.y}) "
                                        f"does not fit in a {self.width}x{self.height} frame")


def make_clusters(spec: ClusterSpec) -> Dataset:
    """
    Objects come in a seeded random order. Outlier directions have all-positive components for
    even-numbered outliers and all-negative ones for odd-numbered outliers, so planted outliers
    land both above and below the cluster on every feature.
    """
    rng = np.random.default_rng(spec.seed)
    center = spec.center

    offsets = rng.standard_normal((spec.n_normal, spec.dims))
    radius = np.linalg.norm(offsets, axis=1, keepdims=True)
    offsets *= np.minimum(1.0, MAX_NORMAL_RADIUS / np.maximum(radius, 1e-300))
    normal = center + spec.cluster_spread * offsets

    directions = DIRECTION_BIAS + np.abs(rng.standard_normal((spec.n_outliers, spec.dims)))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    signs = np.where(np.arange(spec.n_outliers) % 2 == 0, 1.0, -1.0)[:, None]
    outliers = center + signs * directions * (spec.outlier_offset * spec.cluster_spread)

    points = np.vstack([normal, outliers])
    labels = np.concatenate([np.zeros(spec.n_normal, dtype=np.int8), np.ones(spec.n_outliers, dtype=np.int8)])
    order = rng.permutation(points.shape[0])
    names = tuple(f"x{d}" for d in range(spec.dims))
    logger.debug(f"Generated {spec.n_normal} normal and {spec.n_outliers} outlier points (seed={spec.seed})")
    return Dataset(points[order].T, names, labels[order])


def base_image(width: int, height: int) -> np.ndarray:
    """
    Diagonal gradient from GRADIENT_LOW at the top-left to GRADIENT_HIGH at the bottom-right
    """
    columns = np.linspace(0.0, 1.0, width)[None, :]
    rows = np.linspace(0.0, 1.0, height)[:, None]
    return GRADIENT_LOW + (GRADIENT_HIGH - GRADIENT_LOW) * (columns + rows) / 2.0


def make_frames(spec: FrameSpec) -> FrameDataset:
    """
    Integer-valued frames clamped to [0, 255]; anomalous frames sit at seeded positions
    """
    rng = np.random.default_rng(spec.seed)
    count = spec.n_normal + spec.n_anomalous
    anomalous = np.zeros(count, dtype=np.int8)
    anomalous[rng.choice(count, spec.n_anomalous, replace=False)] = 1

    base = base_image(spec.width, spec.height)
    noise = rng.uniform(-spec.noise_amplitude, spec.noise_amplitude, (count, spec.height, spec.width))
    frames = base[None, :, :] + noise
    patch = spec.patch
    rows = slice(patch.y, patch.y + patch.height)
    columns = slice(patch.x, patch.x + patch.width)
    frames[anomalous == 1, rows, columns] += patch.delta
    frames = np.clip(np.rint(frames), 0, 255)

    logger.debug(f"Generated {count} frames of {spec.width}x{spec.height} "
                 f"({spec.n_anomalous} anomalous, seed={spec.seed})")
    pixels = frames.reshape(count, spec.width * spec.height).T
    return FrameDataset(spec.width, spec.height, Dataset(pixels, labels=anomalous))
