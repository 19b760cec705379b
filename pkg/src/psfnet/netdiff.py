"""Reverse-mode differentiation for the cascade's operator set.

A Tape records every operation as a node holding its value, its parent
nodes, and a vector-Jacobian function.  Creation order is a topological
order, so backward() is one reversed sweep that accumulates cotangents
into node.grad.

Complex arrays follow the real-pair convention: for a real loss L and a
complex array x the stored gradient is dL/dRe(x) + 1j*dL/dIm(x).  Under
this convention the cotangent map of a complex-linear operator is its
adjoint, and packing a complex tensor into stacked real/imaginary
channels is gradient-transparent.

Fixed (non-trainable) linear or affine operators — the Fourier pair, the
k-space kernel and the data-consistency restore — enter the graph through
linear_map(fwd, adj), where adj must be the adjoint of fwd's linear part.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError

__all__ = ["Node", "Tape", "SGBlockParams", "init_params", "sg_forward",
           "sg_graph", "identity_sg_params", "SG_LAYERS"]


class Node:
    __slots__ = ("value", "grad", "_parents", "_vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = value
        self.grad = None
        self._parents = parents
        self._vjp = vjp


class Tape:
    """Append-only operation record supporting a single backward sweep."""

    def __init__(self):
        self._nodes = []
        self._swept = False

    def _push(self, value, parents=(), vjp=None) -> Node:
        node = Node(value, parents, vjp)
        self._nodes.append(node)
        return node

    # -- leaves ------------------------------------------------------------

    def leaf(self, value) -> Node:
        return self._push(np.asarray(value))

    # -- elementwise / structural ops ---------------------------------------

    def add(self, a: Node, b: Node) -> Node:
        return self._push(a.value + b.value, (a, b), lambda g: (g, g))

    def scale(self, s, x: Node) -> Node:
        """Multiply tensor node x by a real scalar (Node or plain float)."""
        if isinstance(s, Node):
            sv = float(s.value)

            def vjp(g):
                gs = np.float64(np.sum((np.conj(x.value) * g).real))
                return gs, sv * g

            return self._push(sv * x.value, (s, x), vjp)
        sv = float(s)
        return self._push(sv * x.value, (x,), lambda g: (sv * g,))

    def pick(self, vec: Node, k: int) -> Node:
        def vjp(g):
            gv = np.zeros_like(vec.value)
            gv[k] = g
            return (gv,)

        return self._push(np.asarray(vec.value[k]), (vec,), vjp)

    def relu(self, x: Node) -> Node:
        on = x.value > 0

        def vjp(g):
            return (np.where(on, g, 0.0),)

        return self._push(np.where(on, x.value, 0.0), (x,), vjp)

    def pack(self, x: Node) -> Node:
        """Complex [z,h,w] -> real [2z,h,w], real parts first."""
        def vjp(g):
            z = g.shape[0] // 2
            return (g[:z] + 1j * g[z:],)

        return self._push(
            np.concatenate([x.value.real, x.value.imag], axis=0), (x,), vjp
        )

    def unpack(self, x: Node) -> Node:
        """Real [2z,h,w] -> complex [z,h,w]."""
        z = x.value.shape[0] // 2

        def vjp(g):
            return (np.concatenate([g.real, g.imag], axis=0),)

        return self._push(x.value[:z] + 1j * x.value[z:], (x,), vjp)

    # -- trainable convolution ----------------------------------------------

    def conv2d(self, x: Node, w: Node, b: Node) -> Node:
        if x.value.shape[0] != w.value.shape[1]:
            raise ValueError(
                f"channel mismatch: input has {x.value.shape[0]}, "
                f"weights expect {w.value.shape[1]}"
            )
        out = _kernels.conv2d(x.value, w.value, b.value)
        kh, kw = w.value.shape[2], w.value.shape[3]

        def vjp(g):
            gx = _kernels.conv2d_input_grad(g, w.value)
            gw = _kernels.conv2d_weight_grad(x.value, g, kh, kw)
            gb = g.sum(axis=(1, 2))
            return gx, gw, gb

        return self._push(out, (x, w, b), vjp)

    # -- fixed operators ------------------------------------------------------

    def linear_map(self, x: Node, fwd, adj) -> Node:
        """Record y = fwd(x) with cotangent map adj (adjoint of the linear part)."""
        return self._push(fwd(x.value), (x,), lambda g: (adj(g),))

    def gather(self, x: Node, where) -> Node:
        """Select entries of a [z,h,w] node at a boolean [h,w] mask."""
        m = np.asarray(where).astype(bool)

        def vjp(g):
            gx = np.zeros_like(x.value)
            gx[:, m] = g
            return (gx,)

        return self._push(x.value[:, m], (x,), vjp)

    # -- scalar reductions -----------------------------------------------------

    def sumsq(self, x: Node) -> Node:
        def vjp(g):
            return (2.0 * float(g) * x.value,)

        return self._push(np.float64(np.sum(np.abs(x.value) ** 2)), (x,), vjp)

    def hybrid_loss(self, pred: Node, target) -> Node:
        """Per-element-normalized l1 + l2 distance to a constant target."""
        t = np.asarray(target)
        if pred.value.shape != t.shape:
            raise ValueError(
                f"shape mismatch: pred {pred.value.shape}, target {t.shape}"
            )
        d = pred.value - t
        n = d.size
        mags = np.abs(d)
        l2 = float(np.linalg.norm(d.ravel()))
        val = float(mags.sum()) / n + l2 / math.sqrt(n)

        def vjp(g):
            safe = np.where(mags > 0, mags, 1.0)
            g1 = np.where(mags > 0, d / safe, 0.0) / n
            g2 = d / (l2 * math.sqrt(n)) if l2 > 0 else np.zeros_like(d)
            return (float(g) * (g1 + g2),)

        return self._push(np.float64(val), (pred,), vjp)

    # -- reverse sweep -----------------------------------------------------------

    def backward(self, loss: Node) -> None:
        """Accumulate gradients of a recorded scalar node into every leaf."""
        if self._swept:
            raise RuntimeError("backward already ran on this tape")
        if not any(loss is n for n in self._nodes):
            raise RuntimeError("loss node was not recorded on this tape")
        if np.asarray(loss.value).shape != ():
            raise ValueError("backward expects a scalar loss node")
        self._swept = True
        loss.grad = np.float64(1.0)
        for node in reversed(self._nodes):
            if node.grad is None or node._vjp is None:
                continue
            for parent, contrib in zip(node._parents, node._vjp(node.grad)):
                parent.grad = contrib if parent.grad is None else parent.grad + contrib


# ---------------------------------------------------------------------------
# the image-domain de-aliasing block

SG_LAYERS = 6  # input conv, four hidden convs, output conv; all 3x3


@dataclass
class SGBlockParams:
    """Conv stack weights: 2z -> C, 4x (C -> C), C -> 2z, ReLU except output."""

    weights: list
    biases: list

    @property
    def channels(self) -> int:
        return self.weights[0].shape[0]

    @property
    def coils(self) -> int:
        return self.weights[0].shape[1] // 2

    def param_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)


def init_params(z, channels, seed=0) -> SGBlockParams:
    """He-style fan-in-scaled uniform weights, zero biases, per-seed bitwise."""
    rng = np.random.default_rng(seed)
    shapes = [(channels, 2 * z)]
    shapes += [(channels, channels)] * (SG_LAYERS - 2)
    shapes += [(2 * z, channels)]
    weights, biases = [], []
    for c_out, c_in in shapes:
        fan_in = c_in * 9
        bound = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(c_out, c_in, 3, 3)))
        biases.append(np.zeros(c_out))
    return SGBlockParams(weights, biases)


def identity_sg_params(z, bound) -> SGBlockParams:
    """Exact pass-through block for inputs with |components| < bound.

    Dirac kernels chain each channel through every layer; a +shift bias on
    the input conv keeps all ReLU inputs positive and the output conv
    subtracts it again, so the ReLUs never clip.
    """
    shift = 2.0 ** math.ceil(math.log2(max(4.0 * bound, 1.0)))
    c = 2 * z
    dirac = np.zeros((c, c, 3, 3))
    for i in range(c):
        dirac[i, i, 1, 1] = 1.0
    weights = [dirac.copy() for _ in range(SG_LAYERS)]
    biases = [np.zeros(c) for _ in range(SG_LAYERS)]
    biases[0][:] = shift
    biases[-1][:] = -shift
    return SGBlockParams(weights, biases)


def sg_forward(params: SGBlockParams, x) -> np.ndarray:
    """Run the conv stack on a complex [z,h,w] image without recording."""
    x = np.asarray(x)
    if x.shape[0] != params.coils:
        raise ValueError(
            f"channel mismatch: image has {x.shape[0]} coils, "
            f"block expects {params.coils}"
        )
    h = np.concatenate([x.real, x.imag], axis=0)
    for i in range(SG_LAYERS):
        h = _kernels.conv2d(h, params.weights[i], params.biases[i])
        if i < SG_LAYERS - 1:
            h = np.where(h > 0, h, 0.0)
    z = h.shape[0] // 2
    return h[:z] + 1j * h[z:]


def sg_graph(tape: Tape, x: Node, w_nodes, b_nodes) -> Node:
    """Record the conv stack on a tape; equals sg_forward value-for-value."""
    if len(w_nodes) != SG_LAYERS or len(b_nodes) != SG_LAYERS:
        raise ConfigError(f"expected {SG_LAYERS} conv layers")
    h = tape.pack(x)
    for i in range(SG_LAYERS):
        h = tape.conv2d(h, w_nodes[i], b_nodes[i])
        if i < SG_LAYERS - 1:
            h = tape.relu(h)
    return tape.unpack(h)
