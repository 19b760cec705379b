"""Cascaded forward models: parallel-stream fusion and its baselines.

Every variant starts from the zero-filled image and runs K cascades of
tied blocks; only the per-cascade fusion scalars differ across stages.
The parallel model fuses a data-consistent kernel-interpolation stream
with a data-consistent conv-network stream; the serial variants chain the
blocks instead.
"""

from dataclasses import dataclass

import numpy as np

from .calibration import SSKernel, ss_apply, ss_apply_adjoint
from .dc import dc_linear, dc_project
from .errors import ConfigError
from .netdiff import SGBlockParams, Tape, init_params, sg_graph
from .tensorfft import ifft2c

__all__ = [
    "ModelParams",
    "MODEL_KINDS",
    "init_model",
    "coil_combine",
    "param_leaves",
    "build_forward_graph",
    "psfnet_forward",
    "modl_forward",
    "psfnet_serial_forward",
    "dc_project",
]

MODEL_KINDS = ("psfnet", "modl", "psfnet_serial")


@dataclass
class ModelParams:
    """Shared conv block plus per-cascade fusion scalars eta/gamma."""

    sg: SGBlockParams
    eta: np.ndarray
    gamma: np.ndarray
    lambda_dc: float = np.inf

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=np.float64)
        self.gamma = np.asarray(self.gamma, dtype=np.float64)
        if self.eta.size < 1 or self.eta.shape != self.gamma.shape:
            raise ConfigError("eta and gamma must be equal-length, K >= 1")
        if not (np.all(np.isfinite(self.eta)) and np.all(np.isfinite(self.gamma))):
            raise ConfigError("fusion scalars must be finite")

    @property
    def cascades(self) -> int:
        return self.eta.size


def init_model(z, channels, cascades, seed=0) -> ModelParams:
    """Fresh parameters; both streams start equally weighted at 0.5."""
    sg = init_params(z, channels, seed=seed)
    return ModelParams(sg, 0.5 * np.ones(cascades), 0.5 * np.ones(cascades))


def coil_combine(x, sens_maps) -> np.ndarray:
    """Conjugate-weighted sum over coils; SNR-optimal for RSS-normalized maps."""
    x = np.asarray(x)
    sens_maps = np.asarray(sens_maps)
    if x.shape != sens_maps.shape:
        raise ValueError(f"shape mismatch: image {x.shape}, maps {sens_maps.shape}")
    return np.sum(np.conj(sens_maps) * x, axis=0)


def param_leaves(tape: Tape, params: ModelParams, kind: str) -> dict:
    """Create the trainable leaves for one forward/backward pass."""
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}")
    leaves = {}
    for i, (w, b) in enumerate(zip(params.sg.weights, params.sg.biases)):
        leaves[f"sg_w{i}"] = tape.leaf(w)
        leaves[f"sg_b{i}"] = tape.leaf(b)
    if kind == "psfnet":
        leaves["eta"] = tape.leaf(params.eta)
        leaves["gamma"] = tape.leaf(params.gamma)
    return leaves


def build_forward_graph(tape: Tape, kind: str, params: ModelParams, leaves: dict,
                        kernel, und_ksp, dc_mask, final_dc=False):
    """Record the K-cascade forward pass; returns the output image node."""
    lam = params.lambda_dc
    w_nodes = [leaves[f"sg_w{i}"] for i in range(len(params.sg.weights))]
    b_nodes = [leaves[f"sg_b{i}"] for i in range(len(params.sg.biases))]

    def dc_f(v):
        return dc_project(v, und_ksp, dc_mask, lam)

    def dc_a(g):
        return dc_linear(g, dc_mask, lam)

    if kind != "modl":
        if kernel is None:
            raise ConfigError(f"{kind} requires a calibrated kernel")

        def ss_f(v):
            return ss_apply(kernel, v)

        def ss_a(g):
            return ss_apply_adjoint(kernel, g)

    x = tape.leaf(ifft2c(und_ksp))
    for k in range(params.cascades):
        if kind == "psfnet":
            ss_out = tape.linear_map(tape.linear_map(x, ss_f, ss_a), dc_f, dc_a)
            sg_out = tape.linear_map(sg_graph(tape, x, w_nodes, b_nodes), dc_f, dc_a)
            x = tape.add(
                tape.scale(tape.pick(leaves["eta"], k), ss_out),
                tape.scale(tape.pick(leaves["gamma"], k), sg_out),
            )
        elif kind == "modl":
            x = tape.linear_map(sg_graph(tape, x, w_nodes, b_nodes), dc_f, dc_a)
        else:  # psfnet_serial
            h = tape.linear_map(x, ss_f, ss_a)
            x = tape.linear_map(sg_graph(tape, h, w_nodes, b_nodes), dc_f, dc_a)
    if final_dc:
        x = tape.linear_map(x, dc_f, dc_a)
    return x


def _run(kind, params, kernel, und_ksp, dc_mask, final_dc):
    tape = Tape()
    leaves = param_leaves(tape, params, kind)
    node = build_forward_graph(tape, kind, params, leaves, kernel, und_ksp,
                               dc_mask, final_dc=final_dc)
    return node.value


def psfnet_forward(params: ModelParams, kernel: SSKernel, und_ksp, dc_mask,
                   final_dc=False) -> np.ndarray:
    """Parallel-stream fusion cascade from the zero-filled image."""
    return _run("psfnet", params, kernel, und_ksp, dc_mask, final_dc)


def modl_forward(params: ModelParams, und_ksp, dc_mask, final_dc=False) -> np.ndarray:
    """Serial conv-then-DC cascade (no kernel stream, no fusion scalars)."""
    return _run("modl", params, None, und_ksp, dc_mask, final_dc)


def psfnet_serial_forward(params: ModelParams, kernel: SSKernel, und_ksp, dc_mask,
                          final_dc=False) -> np.ndarray:
    """Ablation variant chaining kernel, conv block and DC serially."""
    return _run("psfnet_serial", params, kernel, und_ksp, dc_mask, final_dc)
