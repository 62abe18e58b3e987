"""Disparity-aware value modulation: channel statistics transfer and the
adaptive blend schedule."""

import numpy as np
from dataclasses import dataclass

from .config import DamConfig
from .errors import ShapeError


@dataclass(frozen=True)
class ChannelStats:
    mean: np.ndarray  # per channel
    std: np.ndarray   # per channel, population convention (divide by N)


def channel_stats(v) -> ChannelStats:
    """Per-channel spatial mean and population standard deviation."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 3:
        raise ShapeError(f"expected rank-3 tensor, got rank {v.ndim}")
    mean = v.mean(axis=(1, 2))
    std = v.std(axis=(1, 2))  # ddof=0
    return ChannelStats(mean=mean, std=std)


def adain(v, v_ref, epsilon: float = 1e-6) -> np.ndarray:
    """Renormalize v to the channel-wise mean/std of v_ref.

    sigma(v_ref) * (v - mu(v)) / (sigma(v) + epsilon) + mu(v_ref); epsilon
    keeps constant channels from dividing by zero.
    """
    v = np.asarray(v, dtype=np.float64)
    v_ref = np.asarray(v_ref, dtype=np.float64)
    if v.shape != v_ref.shape:
        raise ShapeError(f"shape mismatch: {v.shape} vs {v_ref.shape}")
    s = channel_stats(v)
    s_ref = channel_stats(v_ref)
    mu = s.mean[:, None, None]
    sigma = s.std[:, None, None]
    return s_ref.std[:, None, None] * (v - mu) / (sigma + epsilon) + s_ref.mean[:, None, None]


def adaptive_alpha(config: DamConfig, t: float, delta_bar: float) -> float:
    """Blend weight beta * (1-t) * (1 - gamma * (delta_bar - eta)), clipped to [0, 1].

    Larger overall prompt disparity lowers alpha, restraining statistics
    injection when large semantic changes are required.
    """
    raw = config.beta * (1.0 - t) * (1.0 - config.gamma * (delta_bar - config.eta))
    return float(min(max(raw, 0.0), 1.0))


def mean_disparity(s_bar) -> float:
    """Mean of the discrepancy map after max-normalization to [0, 1].

    An all-zero map yields 0.  Accepts a DiscrepancyMap or a raw array.
    """
    arr = np.asarray(getattr(s_bar, "map", s_bar), dtype=np.float64)
    peak = arr.max()
    if peak <= 0.0:
        return 0.0
    return float((arr / peak).mean())


def fuse_values(v, v_ref, alpha: float, epsilon: float = 1e-6) -> np.ndarray:
    """alpha * adain(v, v_ref) + (1 - alpha) * v; exact at alpha in {0, 1}."""
    v = np.asarray(v, dtype=np.float64)
    if alpha == 0.0:
        return v.copy()
    styled = adain(v, v_ref, epsilon)
    if alpha == 1.0:
        return styled
    return alpha * styled + (1.0 - alpha) * v
