__all__ = [
    "NoiseModel",
    "NoiseSpec",
    "portable_generator",
    "box_muller",
    "make_noise",
]
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .const import OUTLIER_AMPLITUDE, OUTLIER_FRACTION
from .errors import UnsupportedConfiguration
from .spaces import GridFunction, lr_norm

logger = logging.getLogger(__name__)


class NoiseModel(str, Enum):
    GAUSSIAN = "gaussian"
    OUTLIERS = "outliers"


@dataclass(frozen=True)
class NoiseSpec:
    """How synthetic data are perturbed

    :param level: delta; relative to max|u| unless ``absolute``
    :param model: Gaussian noise, or Gaussian noise plus outliers
    :param seed: Seed of the Philox counter-based generator
    :param outlier_fraction: Share of nodes replaced by outliers
    :param outlier_amplitude: Outlier offset as a multiple of max|u|
    :param absolute: Interpret ``level`` as an absolute standard deviation
    """

    level: float
    model: NoiseModel = NoiseModel.GAUSSIAN
    seed: int = 0
    outlier_fraction: float = OUTLIER_FRACTION
    outlier_amplitude: float = OUTLIER_AMPLITUDE
    absolute: bool = False

    def __post_init__(self):
        object.__setattr__(self, "model", NoiseModel(self.model))
        if self.level < 0.0:
            raise UnsupportedConfiguration("Noise level must be non-negative")
        if not 0.0 <= self.outlier_fraction <= 1.0:
            raise UnsupportedConfiguration("Outlier fraction must lie in [0, 1]")


def portable_generator(seed: int) -> np.random.Generator:
    """Philox-4x64 generator; the stream depends only on the seed"""
    return np.random.Generator(np.random.Philox(seed & 0xFFFF_FFFF_FFFF_FFFF))


def box_muller(rng: np.random.Generator, count: int) -> np.ndarray:
    """Standard normal variates by the Box-Muller transform

    Pairs of 53-bit uniforms (u1, u2) map to sqrt(-2 ln u1) (cos, sin)(2 pi u2),
    with u1 taken from (0, 1].
    """
    pairs = (count + 1) // 2
    uniforms = rng.random((pairs, 2))
    radius = np.sqrt(-2.0 * np.log(1.0 - uniforms[:, 0]))
    angle = 2.0 * math.pi * uniforms[:, 1]
    normals = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    return normals.ravel()[:count]


def make_noise(
    u_true: GridFunction, spec: NoiseSpec, r: float
) -> tuple[GridFunction, float]:
    """Noisy data u_delta and the realized noise level |u_delta - u_true|_r"""
    mesh = u_true.mesh
    if spec.level == 0.0 and spec.model is NoiseModel.GAUSSIAN:
        return u_true, 0.0
    rng = portable_generator(spec.seed)
    normals = box_muller(rng, mesh.n_nodes)
    peak = float(np.max(np.abs(u_true.values)))
    scale = spec.level if spec.absolute else spec.level * peak
    values = u_true.values + scale * normals
    if spec.model is NoiseModel.OUTLIERS:
        count = math.ceil(spec.outlier_fraction * mesh.n_nodes)
        nodes = rng.choice(mesh.n_nodes, size=count, replace=False)
        values[nodes] = u_true.values[nodes] + spec.outlier_amplitude * peak * np.sign(
            normals[nodes]
        )
        logger.debug("Placed %s outliers", count)
    u_delta = GridFunction(values, mesh)
    delta_eff = lr_norm(u_delta - u_true, r, mesh)
    logger.info("Noise: nominal %s, realized %s in L^%s", spec.level, delta_eff, r)
    return u_delta, delta_eff
