"""Supervised and self-supervised training loops, Adam, and inference.

Scans are normalized so the zero-filled image peaks at 1 before training
(absolute intensity scales are otherwise arbitrary).  Kernels are
calibrated once per training scan and cached; they are fixed data, not
trained.  Self-supervision masks the forward input down to the DC subset
of acquired samples and evaluates the loss on the held-out subset.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .calibration import calibrate_kernel, spirit_reconstruct
from .cascade import (MODEL_KINDS, ModelParams, build_forward_graph, coil_combine,
                      init_model, param_leaves)
from .errors import ConfigError
from .netdiff import Tape
from .simulate import Scan
from .tensorfft import fft2c, ifft2c

__all__ = [
    "TrainConfig",
    "AdamState",
    "hybrid_loss",
    "adam_step",
    "flatten_params",
    "normalize_scan",
    "train_supervised",
    "train_selfsup",
    "infer",
    "reconstruct_scan",
]


@dataclass
class TrainConfig:
    """Training and model hyperparameters.

    Adam settings, epoch count and small-batch size default to the
    published operating point; channels and kernel size default to desk
    scale.
    """

    mode: str = "supervised"
    model: str = "psfnet"
    epochs: int = 200
    batch_size: int = 2
    lr: float = 1e-4
    beta1: float = 0.90
    beta2: float = 0.99
    adam_eps: float = 1e-8
    seed: int = 0
    cascades: int = 5
    channels: int = 16
    kernel_size: int = 5
    kappa: float = 1e-2
    loss_frac: float = 0.4
    normalize: bool = True
    final_dc: bool = False

    def validate(self):
        if self.mode not in ("supervised", "selfsup"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model {self.model!r}")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.lr < 0:
            raise ConfigError("lr must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        return self


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, params: dict) -> "AdamState":
        return cls(
            m={k: np.zeros_like(v) for k, v in params.items()},
            v={k: np.zeros_like(v) for k, v in params.items()},
        )


def hybrid_loss(pred, target) -> float:
    """Per-element l1 plus per-element l2 distance: |d|_1/n + |d|_2/sqrt(n)."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    d = pred - target
    n = d.size
    return float(np.sum(np.abs(d))) / n + float(np.linalg.norm(d.ravel())) / math.sqrt(n)


def adam_step(params: dict, grads: dict, state: AdamState, lr, beta1=0.90,
              beta2=0.99, eps=1e-8) -> AdamState:
    """Standard bias-corrected Adam update, applied in place to params."""
    state.step += 1
    t = state.step
    for key, p in params.items():
        g = grads.get(key)
        if g is None:
            continue
        g = np.asarray(g, dtype=np.float64)
        state.m[key] = beta1 * state.m[key] + (1.0 - beta1) * g
        state.v[key] = beta2 * state.v[key] + (1.0 - beta2) * g * g
        m_hat = state.m[key] / (1.0 - beta1**t)
        v_hat = state.v[key] / (1.0 - beta2**t)
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return state


def flatten_params(params: ModelParams, kind: str) -> dict:
    """Live views of the trainable arrays, keyed like the graph leaves."""
    out = {}
    for i, (w, b) in enumerate(zip(params.sg.weights, params.sg.biases)):
        out[f"sg_w{i}"] = w
        out[f"sg_b{i}"] = b
    if kind == "psfnet":
        out["eta"] = params.eta
        out["gamma"] = params.gamma
    return out


def normalize_scan(scan: Scan) -> Scan:
    """Scale a scan so the zero-filled image magnitude peaks at 1."""
    peak = float(np.max(np.abs(ifft2c(scan.und_ksp))))
    if peak == 0:
        return scan
    return replace(
        scan,
        truth_img=scan.truth_img / peak,
        full_ksp=scan.full_ksp / peak,
        und_ksp=scan.und_ksp / peak,
    )


def _needs_kernel(model: str) -> bool:
    return model in ("psfnet", "psfnet_serial")


def _prepare(scans, cfg: TrainConfig, selfsup: bool):
    if not scans:
        raise ConfigError("empty scan list")
    if selfsup:
        for s in scans:
            if s.mask.split is None:
                raise ConfigError(
                    f"scan {s.scan_id} has no DC/loss split; self-supervision "
                    "needs split masks"
                )
    scans = [normalize_scan(s) if cfg.normalize else s for s in scans]
    kernels = {}
    if _needs_kernel(cfg.model):
        for s in scans:
            und = s.und_ksp * s.mask.dc_mask[None] if selfsup else s.und_ksp
            kernels[s.scan_id] = calibrate_kernel(
                und, s.mask.calib, cfg.kernel_size, cfg.kappa
            )
    return scans, kernels


def _scan_loss(tape, params, leaves, cfg, scan, kernels, selfsup: bool):
    kernel = kernels.get(scan.scan_id)
    if selfsup:
        dc_m = scan.mask.dc_mask
        und = scan.und_ksp * dc_m[None]
        out = build_forward_graph(tape, cfg.model, params, leaves, kernel, und, dc_m)
        out_ksp = tape.linear_map(out, fft2c, ifft2c)
        loss_m = scan.mask.loss_mask.astype(bool)
        return tape.hybrid_loss(
            tape.gather(out_ksp, loss_m), scan.und_ksp[:, loss_m]
        )
    out = build_forward_graph(tape, cfg.model, params, leaves, kernel,
                              scan.und_ksp, scan.mask.mask)
    return tape.hybrid_loss(out, scan.truth_img)


def _train(scans, cfg: TrainConfig, selfsup: bool):
    cfg.validate()
    scans, kernels = _prepare(scans, cfg, selfsup)
    z = scans[0].truth_img.shape[0]
    params = init_model(z, cfg.channels, cfg.cascades, seed=cfg.seed)

    flat = flatten_params(params, cfg.model)
    state = AdamState.for_params(flat)
    rng = np.random.default_rng(cfg.seed)
    history = []
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(scans))
        for start in range(0, len(scans), cfg.batch_size):
            batch = [scans[i] for i in order[start : start + cfg.batch_size]]
            tape = Tape()
            leaves = param_leaves(tape, params, cfg.model)
            total = _scan_loss(tape, params, leaves, cfg, batch[0], kernels, selfsup)
            for scan in batch[1:]:
                total = tape.add(
                    total,
                    _scan_loss(tape, params, leaves, cfg, scan, kernels, selfsup),
                )
            total = tape.scale(1.0 / len(batch), total)
            tape.backward(total)
            if cfg.lr != 0.0:
                grads = {k: leaves[k].grad for k in flat if leaves[k].grad is not None}
                adam_step(flat, grads, state, cfg.lr, cfg.beta1, cfg.beta2,
                          cfg.adam_eps)
            step += 1
            history.append((epoch, step, float(total.value)))
    return params, history


def train_supervised(scans, cfg: TrainConfig):
    """Minimize the hybrid loss between cascade outputs and ground truth."""
    if cfg.mode != "supervised":
        cfg = replace(cfg, mode="supervised")
    for s in scans:
        if s.truth_img is None:
            raise ConfigError(f"scan {s.scan_id} carries no ground truth")
    return _train(scans, cfg, selfsup=False)


def train_selfsup(scans, cfg: TrainConfig):
    """Train from undersampled data only, using each mask's DC/loss split."""
    if cfg.mode != "selfsup":
        cfg = replace(cfg, mode="selfsup")
    return _train(scans, cfg, selfsup=True)


def infer(params: ModelParams, scan: Scan, cfg: TrainConfig) -> np.ndarray:
    """Reconstruct one scan with frozen conv weights; returns the combined image.

    The scan-specific kernel is calibrated online from the test scan's own
    calibration window; the full acquired mask serves as the DC set.
    """
    und = scan.und_ksp
    scale = 1.0
    if cfg.normalize:
        peak = float(np.max(np.abs(ifft2c(und))))
        if peak > 0:
            scale = peak
            und = und / scale
    kernel = None
    if _needs_kernel(cfg.model):
        kernel = calibrate_kernel(und, scan.mask.calib, cfg.kernel_size, cfg.kappa)
    tape = Tape()
    leaves = param_leaves(tape, params, cfg.model)
    node = build_forward_graph(tape, cfg.model, params, leaves, kernel, und,
                               scan.mask.mask, final_dc=cfg.final_dc)
    return coil_combine(node.value, scan.sens_maps) * scale


def reconstruct_scan(method: str, scan: Scan, *, params: ModelParams | None = None,
                     kernel_size=5, kappa=1e-2, n_iter=13, final_dc=False,
                     normalize=True) -> np.ndarray:
    """Dispatch one scan through a named reconstruction method."""
    if method == "zf":
        return coil_combine(ifft2c(scan.und_ksp), scan.sens_maps)
    if method == "spirit":
        kernel = calibrate_kernel(scan.und_ksp, scan.mask.calib, kernel_size, kappa)
        x = spirit_reconstruct(scan.und_ksp, scan.mask.mask, kernel, n_iter)
        return coil_combine(x, scan.sens_maps)
    if method in MODEL_KINDS:
        if params is None:
            raise ConfigError(f"method {method!r} requires trained parameters")
        cfg = TrainConfig(model=method, kernel_size=kernel_size, kappa=kappa,
                          cascades=params.cascades, normalize=normalize,
                          final_dc=final_dc)
        return infer(params, scan, cfg)
    raise ConfigError(f"unknown method {method!r}")
