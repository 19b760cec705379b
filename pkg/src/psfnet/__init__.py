"""Parallel-stream fusion reconstruction for accelerated multi-coil MRI.

Fuses a scan-specific linear k-space interpolation kernel with a small
trained convolutional de-aliasing network inside a cascade of strict
data-consistency stages, together with zero-filled, SPIRiT, serial-fusion
and conv-only baselines, synthetic phantom simulation, supervised and
self-supervised training, and evaluation metrics.
"""

from .calibration import SSKernel, calibrate_kernel, spirit_reconstruct, ss_apply
from .cascade import (ModelParams, coil_combine, dc_project, init_model,
                      modl_forward, psfnet_forward, psfnet_serial_forward)
from .errors import ConfigError, CxtError, NumericError
from .metrics import psnr, ssim, wilcoxon_signed_rank
from .netdiff import SGBlockParams, Tape, init_params, sg_forward
from .sampling import SamplingMask, make_mask, split_for_selfsup
from .simulate import (PhantomConfig, Scan, make_phantom, make_scan_set,
                       make_sens_maps, shepp_logan_ellipses, simulate_scan)
from .tensorfft import fft2c, ifft2c, lp_norm
from .training import (AdamState, TrainConfig, adam_step, hybrid_loss, infer,
                       train_selfsup, train_supervised)

__version__ = "0.1.0"
