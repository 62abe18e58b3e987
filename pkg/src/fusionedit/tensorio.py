"""Dense tensor data model and bit-exact persistence.

On disk every tensor is an NPY version 1.0 file with dtype ``<f4`` in C
order.  Rank-3 arrays (channels, height, width) carry latents, velocities
and value tensors; rank-2 arrays carry scalar maps (discrepancy, distance
fields, masks).  Masks can additionally be exported as 8-bit grayscale PNG
for inspection.

All functions are pure apart from file I/O; arrays are never modified in
place.
"""

import io
import os

import numpy as np
from numpy.lib import format as npy_format
from PIL import Image

from .errors import DataError, FormatError, ShapeError

_DTYPE = np.dtype("<f4")


def validate_tensor(arr: np.ndarray, name: str = "tensor") -> np.ndarray:
    """Check rank (2 or 3), positive dims and finiteness; returns the array."""
    arr = np.asarray(arr)
    if arr.ndim not in (2, 3):
        raise ShapeError(f"{name} must have rank 2 or 3, got rank {arr.ndim}")
    if any(d < 1 for d in arr.shape):
        raise ShapeError(f"{name} has non-positive dimension: {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError(f"{name} contains non-finite values")
    return arr


def read_tensor(path) -> np.ndarray:
    """Read an NPY v1.0 ``<f4`` C-order file of rank 2 or 3.

    Returns a float32 array with the file's exact values and shape.  Rank-2
    files serve as scalar maps / masks, rank-3 files as latents.
    """
    with open(path, "rb") as fh:
        try:
            version = npy_format.read_magic(fh)
        except ValueError as exc:
            raise FormatError(f"{path}: not an NPY file ({exc})") from exc
        if version != (1, 0):
            raise FormatError(f"{path}: expected NPY version 1.0, got {version}")
        try:
            shape, fortran_order, dtype = npy_format.read_array_header_1_0(fh)
        except ValueError as exc:
            raise FormatError(f"{path}: malformed NPY header ({exc})") from exc
        if dtype != _DTYPE:
            raise FormatError(f"{path}: expected dtype <f4, got {dtype}")
        if fortran_order:
            raise FormatError(f"{path}: fortran_order files are not supported")
        if len(shape) not in (2, 3):
            raise ShapeError(f"{path}: expected rank 2 or 3, got rank {len(shape)}")
        if any(d < 1 for d in shape):
            raise ShapeError(f"{path}: non-positive dimension in shape {shape}")
        count = int(np.prod(shape))
        payload = fh.read()
    data = np.frombuffer(payload, dtype=_DTYPE)
    if data.size != count:
        raise FormatError(
            f"{path}: payload holds {data.size} values, header promises {count}"
        )
    if not np.isfinite(data).all():
        raise DataError(f"{path}: payload contains non-finite values")
    return data.reshape(shape).copy()


def write_tensor(arr: np.ndarray, path) -> None:
    """Write a rank-2/3 array as NPY v1.0 ``<f4`` C order, readable back bit-exactly."""
    arr = validate_tensor(arr)
    out = np.ascontiguousarray(arr, dtype=_DTYPE)
    buf = io.BytesIO()
    npy_format.write_array(buf, out, version=(1, 0))
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def export_mask_image(weights: np.ndarray, path) -> None:
    """Export weights in [0, 1] as an 8-bit grayscale PNG.

    Pixel value is round(weight * 255) with halves rounded away from zero,
    so the mapping is identical on every platform.
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2:
        raise ShapeError(f"mask image must be rank 2, got rank {w.ndim}")
    if not np.isfinite(w).all():
        raise DataError("mask weights contain non-finite values")
    if w.min() < 0.0 or w.max() > 1.0:
        raise DataError("mask weights must lie in [0, 1]")
    pixels = np.floor(w * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(pixels, mode="L").save(os.fspath(path), format="PNG")


def as_channels(arr: np.ndarray) -> np.ndarray:
    """View a rank-2 map as a single-channel rank-3 tensor; rank-3 passes through."""
    arr = np.asarray(arr)
    if arr.ndim == 2:
        return arr[None, :, :]
    if arr.ndim == 3:
        return arr
    raise ShapeError(f"expected rank 2 or 3, got rank {arr.ndim}")
