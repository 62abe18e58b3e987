"""Rectified-flow integration and the inversion-free editing trajectory.

The editing ODE evolves an intermediate latent from the source toward the
target under the displacement field

    dV(t) = v_guided(Z_tar, t, "tar") - v_guided(Z_src, t, "src"),
    Z_src = (1-t) * x_src + t * n,
    Z_tar = x_mid  - t * x_src + t * n,

discretized on a uniform grid of ``steps`` points with t running from 1
toward 0.  Sign convention: the displacement is accumulated additively,
x_mid <- x_mid + (1/steps) * dV, so that identical src/tar conditionings
leave x_src fixed and a constant field d0 moves the latent by exactly +d0
over the unit time budget (toward the target semantics).
"""

import numpy as np
from dataclasses import dataclass

from .config import DamConfig, EditConfig, GuidanceConfig, TvConfig
from .dam import adaptive_alpha, fuse_values
from .errors import ConfigurationError, ShapeError
from .fusion import fuse_latents, tv_refine
from .providers import NULL, SRC, TAR, VelocityProvider


@dataclass
class TrajectoryState:
    """One step of the editing trajectory: intermediate latent plus bookkeeping."""

    x_mid: np.ndarray
    x_src: np.ndarray
    noise: np.ndarray
    t: float
    step_index: int


def _check_same_shape(*arrays):
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ShapeError(f"operands disagree on shape: {shapes}")


def euler_integrate(provider: VelocityProvider, x1, c: str, steps: int) -> np.ndarray:
    """Integrate dx = v dt backward from t=1 to t=0 with forward Euler.

    Uniform grid t_i = 1 - i/steps; update x <- x - (1/steps) * v(x, t_i, c).
    """
    if steps < 1:
        raise ConfigurationError("steps must be >= 1")
    x = np.array(x1, dtype=np.float64)
    h = 1.0 / steps
    for i in range(steps):
        t = 1.0 - i / steps
        v = np.asarray(provider.evaluate(x, t, c))
        if v.shape != x.shape:
            raise ShapeError(f"provider returned shape {v.shape} for input {x.shape}")
        x = x - h * v
    return x


def noised_source(x_src, noise, t: float) -> np.ndarray:
    """(1-t) * x_src + t * noise."""
    x_src = np.asarray(x_src, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    _check_same_shape(x_src, noise)
    if not 0.0 <= t <= 1.0:
        raise ConfigurationError(f"t must lie in [0, 1], got {t}")
    return (1.0 - t) * x_src + t * noise


def projected_target(x_mid, x_src, noise, t: float) -> np.ndarray:
    """x_mid - t * x_src + t * noise: projects the intermediate latent into noise space."""
    x_mid = np.asarray(x_mid, dtype=np.float64)
    x_src = np.asarray(x_src, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    _check_same_shape(x_mid, x_src, noise)
    if not 0.0 <= t <= 1.0:
        raise ConfigurationError(f"t must lie in [0, 1], got {t}")
    return x_mid - t * x_src + t * noise


def guided_velocity(provider: VelocityProvider, x, t: float, c: str, scale: float) -> np.ndarray:
    """Classifier-free guidance: v_null + scale * (v_c - v_null).

    scale == 1 short-circuits to the conditioned velocity, so providers
    without a "null" conditioning work at unit scale.
    """
    if scale == 1.0:
        return np.asarray(provider.evaluate(x, t, c), dtype=np.float64)
    if NULL not in provider.conditionings:
        raise ConfigurationError(
            f"guidance scale {scale} requires a {NULL!r} conditioning, "
            f"provider declares {sorted(provider.conditionings)}"
        )
    v_null = np.asarray(provider.evaluate(x, t, NULL), dtype=np.float64)
    v_c = np.asarray(provider.evaluate(x, t, c), dtype=np.float64)
    return v_null + scale * (v_c - v_null)


def delta_velocity(provider: VelocityProvider, state: TrajectoryState,
                   guidance: GuidanceConfig) -> np.ndarray:
    """Displacement field between the target- and source-conditioned branches."""
    z_src = noised_source(state.x_src, state.noise, state.t)
    z_tar = projected_target(state.x_mid, state.x_src, state.noise, state.t)
    v_tar = guided_velocity(provider, z_tar, state.t, TAR, guidance.tar_scale)
    v_src = guided_velocity(provider, z_src, state.t, SRC, guidance.src_scale)
    return v_tar - v_src


def edit_trajectory(provider: VelocityProvider, x_src, config: EditConfig,
                    mask=None, dam: DamConfig | None = None, rng_seed: int = 0,
                    delta_bar: float = 0.0) -> np.ndarray:
    """Run the editing ODE from x_src and return the edited latent.

    One standard-normal noise tensor is drawn from ``rng_seed`` and reused
    at every timestep.  When ``mask`` (per-pixel weights in [0, 1]) is
    given, the latent is fused with the source after each step and the
    transition band is TV-refined (every step, or only after the last step
    when config.tv_every_step is off).  When ``dam`` is given the provider
    must expose value tensors; a parallel reference trajectory is evolved
    without mask constraints and its per-step value tensor is blended into
    the editing branch with weight alpha(t, delta_bar) before evaluation.
    """
    x_src = np.asarray(x_src, dtype=np.float64)
    if dam is not None and not provider.supports_values:
        raise ConfigurationError(
            f"value modulation requested but {type(provider).__name__} "
            "does not expose value tensors"
        )
    if mask is not None:
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != x_src.shape[-2:]:
            raise ShapeError(f"mask shape {mask.shape} != spatial shape {x_src.shape[-2:]}")

    rng = np.random.default_rng(rng_seed)
    noise = rng.standard_normal(x_src.shape)
    guidance = config.guidance()
    tv_cfg = config.tv()
    steps = config.steps
    h = 1.0 / steps

    x = x_src.copy()
    x_ref = x_src.copy() if dam is not None else None

    for i in range(steps):
        t = 1.0 - i / steps
        if dam is None:
            dv = delta_velocity(provider, TrajectoryState(x, x_src, noise, t, i), guidance)
            x = x + h * dv
        else:
            z_src = noised_source(x_src, noise, t)
            v_src = guided_velocity(provider, z_src, t, SRC, guidance.src_scale)
            z_tar = projected_target(x, x_src, noise, t)
            z_tar_ref = projected_target(x_ref, x_src, noise, t)
            # Blend the reference stream's value tensor into the editing
            # branch; for latent-valued providers the modulated value is
            # simply re-evaluated as the input.
            alpha = adaptive_alpha(dam, t, delta_bar)
            val = provider.value_tensor(z_tar, t, TAR)
            val_ref = provider.value_tensor(z_tar_ref, t, TAR)
            modulated = fuse_values(val, val_ref, alpha, dam.epsilon)
            v_tar = guided_velocity(provider, modulated, t, TAR, guidance.tar_scale)
            v_tar_ref = guided_velocity(provider, z_tar_ref, t, TAR, guidance.tar_scale)
            x = x + h * (v_tar - v_src)
            x_ref = x_ref + h * (v_tar_ref - v_src)

        if mask is not None:
            fused = fuse_latents(x, x_src, mask)
            x = fused.tensor
            if fused.band.any() and (config.tv_every_step or i == steps - 1):
                x = tv_refine(fused, tv_cfg)
    return x
