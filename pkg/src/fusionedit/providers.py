"""Velocity providers: pluggable conditional velocity fields v(x, t, c).

Conditionings are opaque string tags; the editing pipeline uses "src",
"tar" and (for guidance scales != 1) "null".  Providers are read-only after
construction and safe for concurrent evaluation.

Three built-ins cover the verification axes:

* ``AnalyticGaussianProvider`` -- closed-form field for a point mass at a
  per-conditioning mean, for ODE accuracy checks.
* ``GridProvider`` -- replays recorded velocity tensors from a JSON
  manifest keyed by conditioning and step, for real-model replay.
* ``TwoBlobProvider`` -- src/tar fields differing only inside a rectangle,
  for mask-recovery and localization tests.
"""

import json
import os
from abc import ABC, abstractmethod

import numpy as np

from .errors import ConfigurationError, ShapeError
from .tensorio import read_tensor

SRC = "src"
TAR = "tar"
NULL = "null"


class VelocityProvider(ABC):
    """Abstract conditional velocity field.

    ``evaluate`` must be deterministic given (x, t, c) and return an array
    of the input's shape.  Providers that expose per-step value tensors set
    ``supports_values``; for the built-ins the value tensor is the latent
    itself, and a modulated value re-enters evaluation as the input latent.
    """

    supports_values: bool = False

    @property
    @abstractmethod
    def conditionings(self) -> frozenset:
        """Tags accepted by evaluate."""

    @abstractmethod
    def evaluate(self, x: np.ndarray, t: float, c: str) -> np.ndarray:
        """Velocity at latent ``x``, timestep ``t`` in [0, 1], conditioning ``c``."""

    def _check_conditioning(self, c: str) -> None:
        if c not in self.conditionings:
            raise ConfigurationError(
                f"unknown conditioning {c!r}; provider declares {sorted(self.conditionings)}"
            )

    def value_tensor(self, x: np.ndarray, t: float, c: str) -> np.ndarray:
        """Per-step value tensor exposed for attention-style modulation."""
        if not self.supports_values:
            raise ConfigurationError(
                f"{type(self).__name__} does not expose value tensors"
            )
        return np.asarray(x, dtype=np.float64)

    def evaluate_with_values(self, x, t, c):
        """(velocity, value tensor) in one call."""
        value = self.value_tensor(x, t, c)
        return self.evaluate(x, t, c), value


def _load_mean(spec, shape, base_dir):
    if isinstance(spec, dict) and "file" in spec:
        arr = np.asarray(read_tensor(os.path.join(base_dir, spec["file"])), np.float64)
        if arr.shape != tuple(shape):
            raise ConfigurationError(
                f"mean file shape {arr.shape} does not match provider shape {tuple(shape)}"
            )
        return arr
    if isinstance(spec, (int, float)):
        return np.full(shape, float(spec))
    arr = np.asarray(spec, dtype=np.float64)
    if arr.shape != tuple(shape):
        raise ConfigurationError(
            f"mean shape {arr.shape} does not match provider shape {tuple(shape)}"
        )
    return arr


class AnalyticGaussianProvider(VelocityProvider):
    """Closed-form velocity for a point mass at mean mu_c.

    Along the linear interpolation path x_t = (1-t)*x0 + t*n the marginal
    velocity is E[n - x0 | x_t].  Conditioning on the point mass x0 = mu
    gives n = (x_t - (1-t)*mu) / t, hence

        v(x, t, c) = (x - mu_c) / max(t, eps).

    Backward Euler integration (x <- x - h*v) is exact for this field and
    lands on mu_c at t=0, which makes the provider a precise ODE oracle.
    eps guards the t -> 0 singularity.
    """

    supports_values = True

    def __init__(self, means: dict, eps: float = 1e-4):
        if not means:
            raise ConfigurationError("provider needs at least one conditioning")
        shapes = {np.asarray(m).shape for m in means.values()}
        if len(shapes) != 1:
            raise ConfigurationError(f"conditioning means disagree on shape: {shapes}")
        self._means = {c: np.asarray(m, dtype=np.float64) for c, m in means.items()}
        self._shape = next(iter(shapes))
        self._eps = float(eps)

    @property
    def conditionings(self):
        return frozenset(self._means)

    @property
    def shape(self):
        return self._shape

    def evaluate(self, x, t, c):
        self._check_conditioning(c)
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self._shape:
            raise ShapeError(f"latent shape {x.shape} != provider shape {self._shape}")
        return (x - self._means[c]) / max(float(t), self._eps)

    @classmethod
    def from_params(cls, path) -> "AnalyticGaussianProvider":
        base_dir = os.path.dirname(os.path.abspath(path))
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        shape = raw.get("shape")
        if not shape or len(shape) != 3:
            raise ConfigurationError(f"{path}: 'shape' must be [channels, height, width]")
        means_raw = raw.get("means")
        if not isinstance(means_raw, dict) or not means_raw:
            raise ConfigurationError(f"{path}: 'means' must map conditionings to values")
        means = {c: _load_mean(spec, shape, base_dir) for c, spec in means_raw.items()}
        return cls(means, eps=float(raw.get("epsilon", 1e-4)))


class TwoBlobProvider(VelocityProvider):
    """Constant fields whose src/tar difference lives inside one rectangle.

    v(src) = v(null) = base; v(tar) adds a per-channel delta inside ``rect``
    (top, left, height, width) plus an optional uniform background ``drift``.
    With drift = 0 the src/tar discrepancy is exactly zero outside the
    rectangle; a small nonzero drift models global leakage so that masked
    and unmasked edits become distinguishable in preserved regions.
    """

    supports_values = True

    def __init__(self, shape, rect, delta, base: float = 0.0, drift: float = 0.0):
        self._shape = tuple(int(d) for d in shape)
        if len(self._shape) != 3:
            raise ConfigurationError("shape must be (channels, height, width)")
        c, h, w = self._shape
        top, left, rh, rw = (int(v) for v in rect)
        if not (0 <= top and 0 <= left and top + rh <= h and left + rw <= w and rh > 0 and rw > 0):
            raise ConfigurationError(f"rect {rect} does not fit inside {h}x{w}")
        delta = np.asarray(delta, dtype=np.float64).reshape(-1)
        if delta.size != c:
            raise ConfigurationError(f"delta needs {c} channel values, got {delta.size}")
        self._rect = (top, left, rh, rw)
        self._delta = delta
        self._base = float(base)
        self._drift = float(drift)

    @property
    def conditionings(self):
        return frozenset((SRC, TAR, NULL))

    @property
    def shape(self):
        return self._shape

    @property
    def rect(self):
        return self._rect

    def evaluate(self, x, t, c):
        self._check_conditioning(c)
        x = np.asarray(x)
        if x.shape != self._shape:
            raise ShapeError(f"latent shape {x.shape} != provider shape {self._shape}")
        v = np.full(self._shape, self._base)
        if c == TAR:
            top, left, rh, rw = self._rect
            v[:, top:top + rh, left:left + rw] += self._delta[:, None, None]
            v += self._drift
        return v

    @classmethod
    def from_params(cls, path) -> "TwoBlobProvider":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        for key in ("shape", "rect", "delta"):
            if key not in raw:
                raise ConfigurationError(f"{path}: missing key {key!r}")
        return cls(raw["shape"], raw["rect"], raw["delta"],
                   base=float(raw.get("base", 0.0)), drift=float(raw.get("drift", 0.0)))


class GridProvider(VelocityProvider):
    """Replays recorded velocity tensors keyed by (conditioning, step).

    The manifest is a JSON object {"conditionings": [...], "steps": N,
    "files": {"<cond>/<step>": "rel.npy"}, "latent_shape": [c, h, w]?}.
    Every (conditioning, step) pair must resolve to an existing NPY file of
    a single consistent shape; validation happens eagerly at load.

    Evaluation ignores the latent and returns the tensor whose step index
    is nearest to (1 - t) * steps, so replay matches the uniform grid the
    tensors were recorded on.
    """

    supports_values = False

    def __init__(self, conditionings, steps: int, tensors: dict):
        self._conditionings = frozenset(conditionings)
        self._steps = int(steps)
        self._tensors = tensors
        self._shape = next(iter(tensors.values())).shape

    @property
    def conditionings(self):
        return self._conditionings

    @property
    def steps(self):
        return self._steps

    @property
    def shape(self):
        return self._shape

    def evaluate(self, x, t, c):
        self._check_conditioning(c)
        x = np.asarray(x)
        if x.shape != self._shape:
            raise ShapeError(f"latent shape {x.shape} != provider shape {self._shape}")
        idx = int(round((1.0 - float(t)) * self._steps))
        idx = min(max(idx, 0), self._steps - 1)
        return self._tensors[(c, idx)]

    @classmethod
    def from_manifest(cls, path) -> "GridProvider":
        base_dir = os.path.dirname(os.path.abspath(path))
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"manifest not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc

        conds = raw.get("conditionings")
        steps = raw.get("steps")
        files = raw.get("files")
        if not isinstance(conds, list) or not conds:
            raise ConfigurationError(f"{path}: 'conditionings' must be a non-empty list")
        if not isinstance(steps, int) or steps < 1:
            raise ConfigurationError(f"{path}: 'steps' must be a positive integer")
        if not isinstance(files, dict):
            raise ConfigurationError(f"{path}: 'files' must be an object")

        expected_shape = None
        if "latent_shape" in raw:
            expected_shape = tuple(int(d) for d in raw["latent_shape"])

        tensors = {}
        for c in conds:
            for i in range(steps):
                key = f"{c}/{i}"
                if key not in files:
                    raise ConfigurationError(f"{path}: manifest is missing key {key!r}")
                fpath = os.path.join(base_dir, files[key])
                if not os.path.exists(fpath):
                    raise ConfigurationError(
                        f"{path}: file for key {key!r} does not exist: {files[key]}"
                    )
                arr = np.asarray(read_tensor(fpath), dtype=np.float64)
                if expected_shape is None:
                    expected_shape = arr.shape
                elif arr.shape != expected_shape:
                    raise ConfigurationError(
                        f"{path}: key {key!r} has shape {arr.shape}, expected {expected_shape}"
                    )
                tensors[(c, i)] = arr
        return cls(conds, steps, tensors)


def provider_from_spec(spec: str) -> VelocityProvider:
    """Build a provider from a CLI spec string.

    Accepts ``analytic:<params.json>``, ``twoblob:<params.json>`` or a path
    to a grid manifest JSON.
    """
    if spec.startswith("analytic:"):
        return AnalyticGaussianProvider.from_params(spec[len("analytic:"):])
    if spec.startswith("twoblob:"):
        return TwoBlobProvider.from_params(spec[len("twoblob:"):])
    if not os.path.exists(spec):
        raise ConfigurationError(f"provider manifest not found: {spec}")
    return GridProvider.from_manifest(spec)
