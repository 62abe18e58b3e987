"""Pipeline configuration objects and JSON loading.

Defaults reproduce the reference operating point: 28 uniform timesteps,
guidance 1.5 (source) / 5.5 (target), discrepancy timestep 0.89 with 3
repeats, transition band d_max=3 with sharpness k=5, TV trade-off 50, and
value-fusion schedule beta=0.1, gamma=0.5, eta=0.5.
"""

import json
import math
from dataclasses import dataclass, fields

from .errors import ConfigurationError


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigurationError(msg)


@dataclass(frozen=True)
class GuidanceConfig:
    """Classifier-free guidance scales for the source and target branches."""

    src_scale: float = 1.5
    tar_scale: float = 5.5

    def __post_init__(self):
        for name in ("src_scale", "tar_scale"):
            v = getattr(self, name)
            _require(math.isfinite(v) and v >= 0, f"{name} must be finite and >= 0")


@dataclass(frozen=True)
class TvConfig:
    """Banded total-variation refinement parameters.

    step_size defaults to 1 / (8 + 2*lam), a safe step for the quadratic
    objective under the forward-difference stencil.
    """

    lam: float = 50.0
    step_size: float | None = None
    max_iters: int = 500
    tol: float = 1e-8

    def __post_init__(self):
        _require(math.isfinite(self.lam) and self.lam > 0, "lam must be finite and > 0")
        _require(self.max_iters >= 1, "max_iters must be >= 1")
        _require(self.tol > 0, "tol must be > 0")
        if self.step_size is not None:
            _require(self.step_size > 0, "step_size must be > 0")

    @property
    def step(self) -> float:
        return self.step_size if self.step_size is not None else 1.0 / (8.0 + 2.0 * self.lam)


@dataclass(frozen=True)
class DamConfig:
    """Value-fusion modulation: base strength, sensitivity, neutral threshold."""

    beta: float = 0.1
    gamma: float = 0.5
    eta: float = 0.5
    epsilon: float = 1e-6

    def __post_init__(self):
        _require(math.isfinite(self.beta) and self.beta >= 0, "beta must be finite and >= 0")
        _require(math.isfinite(self.gamma), "gamma must be finite")
        _require(math.isfinite(self.eta), "eta must be finite")
        _require(self.epsilon > 0, "epsilon must be > 0")


@dataclass(frozen=True)
class EditConfig:
    """Every pipeline hyperparameter in one place.

    ``lam`` is serialized as "lambda" in JSON config files.
    """

    t_prime: float = 0.89
    repeats: int = 3
    patch_size: int = 8
    merge_ratio: float = 0.5
    d_max: float = 3.0
    k: float = 5.0
    lam: float = 50.0
    beta: float = 0.1
    gamma: float = 0.5
    eta: float = 0.5
    steps: int = 28
    src_guidance: float = 1.5
    tar_guidance: float = 5.5
    seed: int = 0
    tv_every_step: bool = True
    dam_enabled: bool = True

    def __post_init__(self):
        _require(0.0 < self.t_prime < 1.0, "t_prime must lie in (0, 1)")
        _require(self.repeats >= 1, "repeats must be >= 1")
        _require(self.patch_size >= 1, "patch_size must be >= 1")
        _require(0.0 < self.merge_ratio <= 1.0, "merge_ratio must lie in (0, 1]")
        _require(self.d_max > 0, "d_max must be > 0")
        _require(self.k > 0, "k must be > 0")
        _require(self.lam > 0, "lam (lambda) must be > 0")
        _require(self.steps >= 1, "steps must be >= 1")
        for name in ("t_prime", "merge_ratio", "d_max", "k", "lam", "beta",
                     "gamma", "eta", "src_guidance", "tar_guidance"):
            _require(math.isfinite(getattr(self, name)), f"{name} must be finite")
        _require(self.src_guidance >= 0 and self.tar_guidance >= 0,
                 "guidance scales must be >= 0")

    def guidance(self) -> GuidanceConfig:
        return GuidanceConfig(self.src_guidance, self.tar_guidance)

    def tv(self) -> TvConfig:
        return TvConfig(lam=self.lam)

    def dam(self) -> DamConfig:
        return DamConfig(beta=self.beta, gamma=self.gamma, eta=self.eta)

    @classmethod
    def from_dict(cls, raw: dict) -> "EditConfig":
        data = dict(raw)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "EditConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise ConfigurationError(f"{path}: config must be a JSON object")
        return cls.from_dict(raw)
