"""Edit-region localization: discrepancy maps, patch region growing, and
the distance-aware soft mask.

The discrepancy map is the per-pixel L2 norm (across channels) of the
difference between target- and source-conditioned velocities evaluated at
the noised source latent.  Patch means of the averaged map seed a region
grow from the maximum-discrepancy patch; the resulting binary mask is
softened with a sigmoid profile over a band of width d_max around the
boundary.
"""

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import accel
from .config import GuidanceConfig
from .errors import DataError, ShapeError
from .flow import guided_velocity, noised_source
from .providers import SRC, TAR, VelocityProvider

log = logging.getLogger("fusionedit.maskgen")


@dataclass
class DiscrepancyMap:
    map: np.ndarray   # (height, width), >= 0
    repeats: int


@dataclass
class PatchGrid:
    patch_size: int
    rows: int
    cols: int
    means: np.ndarray  # (rows, cols)
    height: int        # pixel dimensions the grid was built from
    width: int


def discrepancy_once(provider: VelocityProvider, x_src, t_prime: float,
                     guidance: GuidanceConfig, rng_seed: int) -> np.ndarray:
    """Single-draw discrepancy map S at timestep t_prime.

    Draws noise from ``rng_seed``, noises the source latent, and returns
    sqrt(sum over channels of (v_tar - v_src)^2) per pixel.
    """
    x_src = np.asarray(x_src, dtype=np.float64)
    if x_src.ndim != 3:
        raise ShapeError(f"source latent must be rank 3, got rank {x_src.ndim}")
    rng = np.random.default_rng(rng_seed)
    noise = rng.standard_normal(x_src.shape)
    z = noised_source(x_src, noise, t_prime)
    v_tar = guided_velocity(provider, z, t_prime, TAR, guidance.tar_scale)
    v_src = guided_velocity(provider, z, t_prime, SRC, guidance.src_scale)
    diff = v_tar - v_src
    return np.sqrt((diff * diff).sum(axis=0))


def discrepancy_avg(provider: VelocityProvider, x_src, t_prime: float,
                    guidance: GuidanceConfig, repeats: int, rng_seed: int) -> DiscrepancyMap:
    """Mean of discrepancy_once over ``repeats`` fresh noise draws (seeds rng_seed + i)."""
    if repeats < 1:
        raise DataError("repeats must be >= 1")
    acc = None
    for i in range(repeats):
        s = discrepancy_once(provider, x_src, t_prime, guidance, rng_seed + i)
        acc = s if acc is None else acc + s
    return DiscrepancyMap(map=acc / repeats, repeats=repeats)


def patch_means(s, patch_size: int) -> PatchGrid:
    """Mean discrepancy over non-overlapping patches; edge patches may be smaller."""
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2:
        raise ShapeError(f"scalar map must be rank 2, got rank {s.ndim}")
    if patch_size < 1:
        raise DataError("patch_size must be >= 1")
    h, w = s.shape
    rows = -(-h // patch_size)
    cols = -(-w // patch_size)
    means = np.empty((rows, cols))
    for r in range(rows):
        for c in range(cols):
            block = s[r * patch_size:(r + 1) * patch_size,
                      c * patch_size:(c + 1) * patch_size]
            means[r, c] = block.mean()
    return PatchGrid(patch_size=patch_size, rows=rows, cols=cols, means=means,
                     height=h, width=w)


def region_grow(grid: PatchGrid, merge_ratio: float) -> np.ndarray:
    """Grow a coherent patch region from the maximum-mean patch.

    BFS over 4-connected patch neighbors; a neighbor joins when its mean is
    at least merge_ratio times the seed mean.  The accepted patches are
    rasterized to a {0,1} pixel mask.  An all-zero grid has no meaningful
    edit region: the result is all zeros and a warning is logged.
    """
    if not 0.0 < merge_ratio <= 1.0:
        raise DataError("merge_ratio must lie in (0, 1]")
    means = grid.means
    mask = np.zeros((grid.height, grid.width), dtype=np.uint8)
    seed_flat = int(np.argmax(means))
    seed = (seed_flat // grid.cols, seed_flat % grid.cols)
    seed_mean = means[seed]
    if seed_mean <= 0.0:
        log.warning("all-zero discrepancy grid: empty edit region")
        return mask

    threshold = merge_ratio * seed_mean
    accepted = np.zeros((grid.rows, grid.cols), dtype=bool)
    accepted[seed] = True
    queue = deque([seed])
    while queue:
        r, c = queue.popleft()
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= nr < grid.rows and 0 <= nc < grid.cols and not accepted[nr, nc]:
                if means[nr, nc] >= threshold:
                    accepted[nr, nc] = True
                    queue.append((nr, nc))

    ps = grid.patch_size
    for r, c in zip(*np.nonzero(accepted)):
        mask[r * ps:(r + 1) * ps, c * ps:(c + 1) * ps] = 1
    return mask


def distance_to_boundary(mask) -> np.ndarray:
    """Distance of each pixel to the nearest opposite-valued pixel, minus one.

    Exact Euclidean; pixels 4-adjacent to the boundary sit at D = 0.  A
    degenerate all-0 or all-1 mask has no boundary and returns +inf
    everywhere, which downstream softening treats as "keep the binary
    value".
    """
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ShapeError(f"mask must be rank 2, got rank {m.ndim}")
    ones = m != 0
    n_ones = int(ones.sum())
    if n_ones == 0 or n_ones == m.size:
        return np.full(m.shape, np.inf)
    d2_to_ones = accel.edt_squared(np.ascontiguousarray(ones.astype(np.uint8)))
    d2_to_zeros = accel.edt_squared(np.ascontiguousarray((~ones).astype(np.uint8)))
    dist = np.sqrt(np.where(ones, d2_to_zeros, d2_to_ones))
    return np.maximum(dist - 1.0, 0.0)


def soften(mask, dist, d_max: float, k: float) -> np.ndarray:
    """Distance-aware soft mask over a band of half-width d_max.

    Outside the region (mask 0) band pixels get the sigmoid
    1 / (1 + exp(k * (D - d_max/2))); inside they get its reflection
    1 - sigmoid, so weights rise monotonically into the region on the
    inside and fall monotonically away from it on the outside, crossing
    0.5 at D = d_max/2 on each side.  Beyond the band the weight equals
    the binary value exactly.
    """
    m = np.asarray(mask)
    d = np.asarray(dist, dtype=np.float64)
    if m.shape != d.shape:
        raise ShapeError(f"mask shape {m.shape} != distance shape {d.shape}")
    if d_max <= 0 or k <= 0:
        raise DataError("d_max and k must be > 0")
    ones = m != 0
    weights = np.where(ones, 1.0, 0.0)
    in_band = d <= d_max
    sig = 1.0 / (1.0 + np.exp(k * (d[in_band] - d_max / 2.0)))
    band_vals = np.where(ones[in_band], 1.0 - sig, sig)
    weights[in_band] = band_vals
    return weights


def soft_mask_from_binary(mask, d_max: float, k: float) -> np.ndarray:
    """Convenience: distance transform + soften in one call."""
    return soften(mask, distance_to_boundary(mask), d_max, k)
