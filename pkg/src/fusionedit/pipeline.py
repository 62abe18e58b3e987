"""End-to-end orchestration used by the CLI: discrepancy -> mask -> edit."""

import logging
from dataclasses import dataclass

import numpy as np

from .config import EditConfig
from .dam import mean_disparity
from .errors import ConfigurationError, ShapeError
from .flow import edit_trajectory
from .maskgen import (DiscrepancyMap, discrepancy_avg, patch_means,
                      region_grow, soft_mask_from_binary)
from .providers import VelocityProvider

log = logging.getLogger("fusionedit.pipeline")

MASK_MODES = ("soft", "binary", "off")


@dataclass
class EditResult:
    edited: np.ndarray
    sbar: DiscrepancyMap
    binary_mask: np.ndarray
    soft_mask: np.ndarray
    empty_region: bool


def run_edit(provider: VelocityProvider, x_src, config: EditConfig,
             mask_mode: str = "soft") -> EditResult:
    """Full pipeline on one source latent.

    An all-zero discrepancy map means there is nothing to edit; the source
    latent is returned unchanged with empty masks.
    """
    if mask_mode not in MASK_MODES:
        raise ShapeError(f"mask_mode must be one of {MASK_MODES}")
    if config.dam_enabled and not provider.supports_values:
        raise ConfigurationError(
            f"value modulation is enabled but {type(provider).__name__} does not "
            "expose value tensors; disable it or pick a value-capable provider"
        )
    x_src = np.asarray(x_src, dtype=np.float64)

    sbar = discrepancy_avg(provider, x_src, config.t_prime, config.guidance(),
                           config.repeats, config.seed)
    grid = patch_means(sbar.map, config.patch_size)
    binary = region_grow(grid, config.merge_ratio)

    if not binary.any():
        log.warning("empty edit region: returning the source latent unchanged")
        soft = np.zeros_like(sbar.map)
        return EditResult(edited=x_src.copy(), sbar=sbar, binary_mask=binary,
                          soft_mask=soft, empty_region=True)

    soft = soft_mask_from_binary(binary, config.d_max, config.k)
    if mask_mode == "soft":
        mask = soft
    elif mask_mode == "binary":
        mask = binary.astype(np.float64)
    else:
        mask = None

    dam = config.dam() if config.dam_enabled else None
    delta_bar = mean_disparity(sbar) if dam is not None else 0.0
    edited = edit_trajectory(provider, x_src, config, mask=mask, dam=dam,
                             rng_seed=config.seed, delta_bar=delta_bar)
    return EditResult(edited=edited, sbar=sbar, binary_mask=binary,
                      soft_mask=soft, empty_region=False)
