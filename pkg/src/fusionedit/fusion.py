"""Latent fusion and banded total-variation refinement.

``fuse_latents`` blends the editing latent with the source under per-pixel
weights; ``tv_refine`` then minimizes a quadratic smoothness + fidelity
objective over the transition band only, leaving every other pixel
bit-exactly frozen.
"""

import numpy as np
from dataclasses import dataclass

from . import accel
from .config import TvConfig
from .errors import OptimizationError, ShapeError
from .tensorio import as_channels


@dataclass
class FusedLatent:
    """Fusion output plus the transition band it was produced with.

    ``band`` marks exactly the pixels whose mask weight was strictly
    between 0 and 1; only those take part in TV refinement.
    """

    tensor: np.ndarray        # (channels, height, width)
    band: np.ndarray          # (height, width) bool


def _broadcast_mask(mask, spatial):
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != spatial:
        raise ShapeError(f"mask shape {mask.shape} != spatial shape {spatial}")
    return mask


def fuse_latents(x_mid, x_src, mask) -> FusedLatent:
    """Per-pixel convex blend m * x_mid + (1 - m) * x_src.

    The mask broadcasts over channels; the recorded band is the set of
    fractional-weight pixels.
    """
    x_mid = as_channels(np.asarray(x_mid, dtype=np.float64))
    x_src = as_channels(np.asarray(x_src, dtype=np.float64))
    if x_mid.shape != x_src.shape:
        raise ShapeError(f"shape mismatch: {x_mid.shape} vs {x_src.shape}")
    m = _broadcast_mask(mask, x_mid.shape[-2:])
    fusedt = m[None, :, :] * x_mid + (1.0 - m)[None, :, :] * x_src
    band = (m > 0.0) & (m < 1.0)
    return FusedLatent(tensor=fusedt, band=band)


def fuse_binary(x_tar, x_src, mask) -> np.ndarray:
    """Hard blend M * x_tar + (1 - M) * x_src for a {0,1} mask."""
    x_tar = as_channels(np.asarray(x_tar, dtype=np.float64))
    x_src = as_channels(np.asarray(x_src, dtype=np.float64))
    if x_tar.shape != x_src.shape:
        raise ShapeError(f"shape mismatch: {x_tar.shape} vs {x_src.shape}")
    m = _broadcast_mask(mask, x_tar.shape[-2:])
    return np.where(m[None, :, :] != 0.0, x_tar, x_src)


def tv_loss(fused: FusedLatent, x_hat, lam: float) -> float:
    """Band-restricted quadratic TV objective.

    Sum over band pixels of squared forward differences (right and down,
    replicate edges) plus lam times squared deviation from the snapshot
    x_hat, accumulated over channels.
    """
    x = as_channels(np.asarray(fused.tensor, dtype=np.float64))
    x_hat = as_channels(np.asarray(x_hat, dtype=np.float64))
    if x.shape != x_hat.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    band = fused.band.astype(np.float64)
    return float(accel.tv_loss_kernel(np.ascontiguousarray(x),
                                      np.ascontiguousarray(x_hat), band, float(lam)))


def tv_refine(fused: FusedLatent, config: TvConfig, return_losses: bool = False):
    """Gradient descent on the band pixels of a fused latent.

    The snapshot x_hat is the fusion result itself.  Pixels outside the
    band never change; iteration stops when the loss decrease drops below
    config.tol or config.max_iters is reached.  With ``return_losses`` the
    recorded loss sequence is returned alongside the tensor.
    """
    x0 = as_channels(np.asarray(fused.tensor, dtype=np.float64))
    band = fused.band
    if band.shape != x0.shape[-2:]:
        raise ShapeError(f"band shape {band.shape} != spatial shape {x0.shape[-2:]}")
    if not band.any():
        out = x0.copy()
        return (out, np.array([])) if return_losses else out

    x = np.ascontiguousarray(x0.copy())
    x_hat = np.ascontiguousarray(x0.copy())
    band_f = np.ascontiguousarray(band.astype(np.float64))
    losses = np.empty(config.max_iters + 1)
    n = accel.tv_descend(x, x_hat, band_f, float(config.lam), float(config.step),
                         int(config.max_iters), float(config.tol), losses)
    if n < 0:
        raise OptimizationError(
            f"non-finite TV loss at iteration {-n}; step size {config.step} diverges"
        )
    if return_losses:
        return x, losses[: n + 1].copy()
    return x
