"""Full-reference quality metrics: MSE, PSNR, SSIM.

SSIM uses 8x8 uniform windows with stride 1 (constants C1 = (0.01*peak)^2,
C2 = (0.03*peak)^2, population statistics), averaged over channels and
windows.  An optional pixel mask restricts MSE/PSNR to the marked pixels
and SSIM to windows that lie entirely inside the marked set.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError
from .tensorio import as_channels

WINDOW = 8


@dataclass
class MetricReport:
    mse: float
    psnr: float          # dB; +inf sentinel when mse == 0
    ssim: float | None   # None when a mask leaves no complete window

    def to_dict(self) -> dict:
        return {"mse": self.mse, "psnr": self.psnr, "ssim": self.ssim}


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b, mask=None) -> float:
    """Mean squared element-wise difference, optionally over masked pixels only."""
    a, b = _pair(a, b)
    sq = (a - b) ** 2
    if mask is None:
        return float(sq.mean())
    sel = _mask_bool(mask, a.shape)
    if not sel.any():
        raise DataError("mask selects no pixels")
    return float(as_channels(sq)[:, sel].mean())


def psnr(a, b, peak: float = 1.0, mask=None) -> float:
    """10 * log10(peak^2 / mse); +inf for identical inputs."""
    if peak <= 0:
        raise DataError("peak must be > 0")
    return psnr_from_mse(mse(a, b, mask=mask), peak)


def psnr_from_mse(err: float, peak: float = 1.0) -> float:
    if err < 0:
        raise DataError("mse must be >= 0")
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def _mask_bool(mask, shape):
    sel = np.asarray(mask) != 0
    if sel.shape != shape[-2:]:
        raise ShapeError(f"mask shape {sel.shape} != spatial shape {shape[-2:]}")
    return sel


def _window_sums(x):
    # Box sums over all WINDOW x WINDOW positions via a 2-D cumulative sum.
    c = np.cumsum(np.cumsum(x, axis=-2), axis=-1)
    c = np.pad(c, [(0, 0)] * (x.ndim - 2) + [(1, 0), (1, 0)])
    w = WINDOW
    return (c[..., w:, w:] - c[..., :-w, w:] - c[..., w:, :-w] + c[..., :-w, :-w])


def ssim(a, b, peak: float = 1.0, mask=None) -> float | None:
    """Mean local SSIM over 8x8 uniform windows, stride 1, over all channels."""
    a, b = _pair(a, b)
    if peak <= 0:
        raise DataError("peak must be > 0")
    a = as_channels(a)
    b = as_channels(b)
    h, w = a.shape[-2:]
    if h < WINDOW or w < WINDOW:
        raise ShapeError(f"image {h}x{w} smaller than {WINDOW}x{WINDOW} window")

    n = float(WINDOW * WINDOW)
    mu_a = _window_sums(a) / n
    mu_b = _window_sums(b) / n
    var_a = _window_sums(a * a) / n - mu_a * mu_a
    var_b = _window_sums(b * b) / n - mu_b * mu_b
    cov = _window_sums(a * b) / n - mu_a * mu_b

    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    ssim_map = ((2 * mu_a * mu_b + c1) * (2 * cov + c2) /
                ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)))

    if mask is None:
        return float(ssim_map.mean())
    sel = _mask_bool(mask, a.shape)
    full = _window_sums(sel[None].astype(np.float64))[0] == n  # windows fully inside
    if not full.any():
        return None
    return float(ssim_map[:, full].mean())


def report(a, b, peak: float = 1.0, mask=None) -> MetricReport:
    err = mse(a, b, mask=mask)
    return MetricReport(mse=err, psnr=psnr_from_mse(err, peak), ssim=ssim(a, b, peak, mask=mask))
