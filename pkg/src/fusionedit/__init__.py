"""Training-free latent image editing over pluggable velocity fields."""

from .config import DamConfig, EditConfig, GuidanceConfig, TvConfig
from .dam import (ChannelStats, adain, adaptive_alpha, channel_stats,
                  fuse_values, mean_disparity)
from .errors import (ConfigurationError, DataError, FormatError,
                     FusionEditError, OptimizationError, ShapeError)
from .flow import (TrajectoryState, delta_velocity, edit_trajectory,
                   euler_integrate, guided_velocity, noised_source,
                   projected_target)
from .fusion import FusedLatent, fuse_binary, fuse_latents, tv_loss, tv_refine
from .maskgen import (DiscrepancyMap, PatchGrid, discrepancy_avg,
                      discrepancy_once, distance_to_boundary, patch_means,
                      region_grow, soft_mask_from_binary, soften)
from .metrics import MetricReport, mse, psnr, ssim
from .pipeline import EditResult, run_edit
from .providers import (NULL, SRC, TAR, AnalyticGaussianProvider,
                        GridProvider, TwoBlobProvider, VelocityProvider,
                        provider_from_spec)
from .tensorio import export_mask_image, read_tensor, write_tensor

__version__ = "0.1.0"
