"""Fixed-shape tanh MLP with exact input gradients and mixed second derivatives.

The network maps R^2 -> R. Values and input gradients are propagated jointly
through the layers; ``backprop`` runs the adjoint of that paired recurrence,
which yields the exact parameter gradient of any scalar that is linear in the
values and input gradients (the Ritz energy is built from exactly such terms).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Architecture",
    "EvalBatch",
    "init_glorot",
    "forward",
    "backprop",
    "vjp",
    "shift_output_bias",
    "unflatten",
    "flatten",
]


@dataclass(frozen=True)
class Architecture:
    input_dim: int = 2
    output_dim: int = 1
    hidden_layers: int = 4
    hidden_width: int = 14
    activation: str = "tanh"

    def __post_init__(self):
        if min(self.input_dim, self.output_dim, self.hidden_layers, self.hidden_width) <= 0:
            raise ValueError("architecture sizes must be positive")
        if self.activation != "tanh":
            raise ValueError(f"unsupported activation {self.activation!r}")

    @property
    def widths(self) -> tuple[int, ...]:
        return (self.input_dim,) + (self.hidden_width,) * self.hidden_layers + (self.output_dim,)

    @cached_property
    def layout(self) -> tuple[tuple[int, int, int, int], ...]:
        """Per layer ``(w_offset, b_offset, fan_out, fan_in)``.

        Each layer stores its weight matrix row-major, immediately followed by
        its bias vector.
        """
        out = []
        offset = 0
        w = self.widths
        for n_in, n_out in zip(w[:-1], w[1:]):
            out.append((offset, offset + n_out * n_in, n_out, n_in))
            offset += n_out * n_in + n_out
        return tuple(out)

    @property
    def n_params(self) -> int:
        w = self.widths
        return sum(n_out * n_in + n_out for n_in, n_out in zip(w[:-1], w[1:]))


DEFAULT_ARCH = Architecture()


def _arch_for(params: np.ndarray, arch: Architecture | None) -> Architecture:
    arch = arch or DEFAULT_ARCH
    if params.shape != (arch.n_params,):
        raise ValueError(f"expected {arch.n_params} parameters, got shape {params.shape}")
    return arch


def unflatten(params, arch=None):
    """Split a flat parameter vector into ``[(W, b), ...]`` views."""
    params = np.asarray(params, dtype=np.float64)
    arch = _arch_for(params, arch)
    layers = []
    for w_off, b_off, n_out, n_in in arch.layout:
        W = params[w_off:b_off].reshape(n_out, n_in)
        b = params[b_off:b_off + n_out]
        layers.append((W, b))
    return layers


def flatten(layers) -> np.ndarray:
    return np.concatenate([np.concatenate([W.ravel(), b.ravel()]) for W, b in layers])


def init_glorot(arch: Architecture | None = None, seed: int = 0) -> np.ndarray:
    """Glorot-uniform weights, zero biases.

    Uses ``numpy.random.Generator(PCG64(seed))``; weights are drawn layer by
    layer, row-major within each matrix, from U(-a, a) with
    ``a = sqrt(6 / (fan_in + fan_out))``.
    """
    arch = arch or DEFAULT_ARCH
    rng = np.random.Generator(np.random.PCG64(seed))
    params = np.zeros(arch.n_params)
    for w_off, b_off, n_out, n_in in arch.layout:
        bound = np.sqrt(6.0 / (n_in + n_out))
        params[w_off:b_off] = rng.uniform(-bound, bound, size=n_out * n_in)
    return params


@dataclass(frozen=True)
class EvalBatch:
    points: np.ndarray       # (B, 2)
    values: np.ndarray       # (B,)
    input_grads: np.ndarray  # (B, 2)

    def __post_init__(self):
        n = len(self.points)
        if len(self.values) != n or len(self.input_grads) != n:
            raise ValueError("batch arrays must share one length")


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError("points must have shape (B, d)")
    return x


def _forward_cache(layers, x):
    # H stacks [a; da/dx_1; ...; da/dx_d] on axis 0, shape (1 + d, B, width),
    # so one matrix product per layer propagates values and tangents together.
    B, d = x.shape
    H = np.zeros((1 + d, B, d))
    H[0] = x
    for k in range(d):
        H[1 + k, :, k] = 1.0
    cache = []
    for W, b in layers[:-1]:
        n_out = W.shape[0]
        Z = (H.reshape(-1, H.shape[2]) @ W.T).reshape(1 + d, B, n_out)
        t = np.tanh(Z[0] + b)
        s = 1.0 - t * t
        cache.append((H, t, s, Z[1:]))
        H = np.empty_like(Z)
        H[0] = t
        H[1:] = Z[1:] * s
    W, b = layers[-1]
    cache.append((H, None, None, None))
    out = (H.reshape(-1, H.shape[2]) @ W.T).reshape(1 + d, B)
    u = out[0] + b[0]
    g = out[1:].T
    return u, g, cache


def forward(params, points, arch: Architecture | None = None) -> EvalBatch:
    """Evaluate values and exact input gradients at ``points``."""
    x = _as_points(points)
    layers = unflatten(params, arch)
    u, g, _ = _forward_cache(layers, x)
    return EvalBatch(points=x, values=u, input_grads=np.ascontiguousarray(g))


def _check_cotangents(x, value_weights, grad_weights):
    a_w = np.asarray(value_weights, dtype=np.float64).reshape(-1)
    b_w = np.asarray(grad_weights, dtype=np.float64)
    if b_w.ndim == 1 and len(x) == 1:
        b_w = b_w[None, :]
    if len(a_w) != len(x) or b_w.shape != x.shape:
        raise ValueError(
            f"cotangent shapes {a_w.shape}, {b_w.shape} do not match points {x.shape}"
        )
    return a_w, b_w


def _pullback(layers, cache, a_w, b_w):
    d = b_w.shape[1]
    B = len(a_w)
    grads = []
    # output layer is affine: adjoint of the stacked pre-activation is the seed
    Zbar = np.concatenate([a_w[None, :], b_w.T])[:, :, None]   # (1 + d, B, 1)
    for (W, _), (H, t, s, dZ) in zip(layers[::-1], cache[::-1]):
        if t is not None:
            # a = tanh(z), J_k = s * dz_k, with ds/dz = -2 t s
            Hbar = Zbar
            Zbar = np.empty_like(Hbar)
            Zbar[0] = Hbar[0] * s - 2.0 * t * s * np.einsum("kbo,kbo->bo", Hbar[1:], dZ)
            Zbar[1:] = Hbar[1:] * s
        flat = Zbar.reshape(-1, W.shape[0])
        gW = flat.T @ H.reshape(-1, H.shape[2])
        gb = Zbar[0].sum(axis=0)
        grads.append((gW, gb))
        Zbar = (flat @ W).reshape(1 + d, B, W.shape[1])
    return flatten(grads[::-1])


def backprop(params, points, value_weights, grad_weights, arch: Architecture | None = None) -> np.ndarray:
    """Gradient w.r.t. the flat parameters of

        S(theta) = sum_i a_i u(x_i) + sum_i b_i . grad_x u(x_i)

    with ``a = value_weights`` (B,) and ``b = grad_weights`` (B, 2).
    """
    x = _as_points(points)
    a_w, b_w = _check_cotangents(x, value_weights, grad_weights)
    layers = unflatten(params, arch)
    _, _, cache = _forward_cache(layers, x)
    return _pullback(layers, cache, a_w, b_w)


def vjp(params, points, arch: Architecture | None = None):
    """``forward`` plus a pullback ``(a, b) -> parameter gradient`` sharing its cache."""
    x = _as_points(points)
    layers = unflatten(params, arch)
    u, g, cache = _forward_cache(layers, x)

    def pullback(value_weights, grad_weights):
        a_w, b_w = _check_cotangents(x, value_weights, grad_weights)
        return _pullback(layers, cache, a_w, b_w)

    return EvalBatch(points=x, values=u, input_grads=np.ascontiguousarray(g)), pullback


def shift_output_bias(params, t: float, arch: Architecture | None = None) -> np.ndarray:
    """Return parameters realizing ``x -> u(x) + t``."""
    params = np.array(params, dtype=np.float64)
    arch = _arch_for(params, arch)
    _, b_off, n_out, _ = arch.layout[-1]
    params[b_off:b_off + n_out] += t
    return params
