"""Six-layer residual encoder, mirrored decoder and reconstruction error.

Encoder (every layer ReLU, skips enter layers 1, 3 and 5)::

    h0 = relu(b0 + W0 x)
    h1 = relu(b1 + W1 h0 + Wm x)
    h2 = relu(b2 + W2 h1)
    h3 = relu(b3 + W3 h2 + h1)
    h4 = relu(b4 + W4 h3)
    h5 = relu(b5 + W5 h4 + h3)

Decoder, fed with the (memory-read) latent z::

    g4 = relu(c5 + V5 z)
    g3 = relu(c4 + V4 g4 + z)
    g2 = relu(c3 + V3 g3)
    g1 = relu(c2 + V2 g2 + g3)
    g0 = relu(c1 + V1 g1)
    x_hat = c0 + V0 g0 + Vm g1          (linear output)
"""

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError, check_dim, xavier_init

DEPTH = 6


@dataclass
class EncoderParams:
    W: list  # W[0]: (D_h, D_x); W[1:]: (D_h, D_h)
    b: list  # each (D_h,)
    Wm: np.ndarray  # (D_h, D_x)

    @classmethod
    def init(cls, d_x, d_h, rng):
        W = [xavier_init(d_h, d_x, rng)] + [xavier_init(d_h, d_h, rng) for _ in range(DEPTH - 1)]
        b = [np.zeros(d_h) for _ in range(DEPTH)]
        return cls(W, b, xavier_init(d_h, d_x, rng))

    @property
    def d_x(self):
        return self.W[0].shape[1]

    @property
    def d_h(self):
        return self.W[0].shape[0]

    def named(self):
        out = {}
        for l in range(DEPTH):
            out[f"enc.W{l}"] = self.W[l]
            out[f"enc.b{l}"] = self.b[l]
        out["enc.Wm"] = self.Wm
        return out


@dataclass
class DecoderParams:
    W: list  # W[0]: (D_x, D_h); W[1:]: (D_h, D_h)
    b: list  # b[0]: (D_x,); b[1:]: (D_h,)
    Wm: np.ndarray  # (D_x, D_h)

    @classmethod
    def init(cls, d_x, d_h, rng):
        W = [xavier_init(d_x, d_h, rng)] + [xavier_init(d_h, d_h, rng) for _ in range(DEPTH - 1)]
        b = [np.zeros(d_x)] + [np.zeros(d_h) for _ in range(DEPTH - 1)]
        return cls(W, b, xavier_init(d_x, d_h, rng))

    def named(self):
        out = {}
        for l in range(DEPTH):
            out[f"dec.W{l}"] = self.W[l]
            out[f"dec.b{l}"] = self.b[l]
        out["dec.Wm"] = self.Wm
        return out


@dataclass
class EncodeTrace:
    h: list  # post-activation h0..h5
    pre: list  # pre-activation values


@dataclass
class DecodeTrace:
    g: list  # g[l] is the decoder activation mirrored to h_l, l = 0..4
    pre: list  # pre-activations matching g
    x_hat: np.ndarray


def encode(x, params):
    check_dim(x, params.d_x, "encoder input")
    W, b = params.W, params.b
    pre = [None] * DEPTH
    h = [None] * DEPTH
    pre[0] = b[0] + W[0] @ x
    h[0] = np.maximum(pre[0], 0.0)
    pre[1] = b[1] + W[1] @ h[0] + params.Wm @ x
    h[1] = np.maximum(pre[1], 0.0)
    for l in (2, 3, 4, 5):
        a = b[l] + W[l] @ h[l - 1]
        if l % 2 == 1:
            a = a + h[l - 2]
        pre[l] = a
        h[l] = np.maximum(a, 0.0)
    return EncodeTrace(h, pre)


def decode(z, params):
    W, b = params.W, params.b
    check_dim(z, W[5].shape[1], "decoder input")
    g = [None] * (DEPTH - 1)
    pre = [None] * (DEPTH - 1)
    # g[l] = relu(b[l+1] + W[l+1] g[l+1] (+ skip)), with g[5] := z
    above = z
    for l in (4, 3, 2, 1, 0):
        a = b[l + 1] + W[l + 1] @ above
        if l == 3:
            a = a + z
        elif l == 1:
            a = a + g[3]
        pre[l] = a
        g[l] = np.maximum(a, 0.0)
        above = g[l]
    x_hat = b[0] + W[0] @ g[0] + params.Wm @ g[1]
    return DecodeTrace(g, pre, x_hat)


def reconstruction_error(x, x_hat):
    if x.shape != x_hat.shape:
        raise DimensionError(f"reconstruction_error: {x.shape} vs {x_hat.shape}")
    d = x - x_hat
    return float(d @ d)


def decode_backward(z, trace, params, d_xhat):
    """Backpropagate d(loss)/d(x_hat) through the decoder.

    Returns (grads keyed like ``DecoderParams.named()``, d(loss)/dz).
    """
    W, g, pre = params.W, trace.g, trace.pre
    grads = {"dec.b0": d_xhat, "dec.W0": d_xhat[:, None] * g[0], "dec.Wm": d_xhat[:, None] * g[1]}
    dg = [None] * (DEPTH - 1)
    dg[0] = W[0].T @ d_xhat
    dg[1] = params.Wm.T @ d_xhat
    dz = np.zeros_like(z)
    for l in range(DEPTH - 1):
        da = dg[l] * (pre[l] > 0)
        below = z if l == 4 else g[l + 1]
        grads[f"dec.b{l + 1}"] = da
        grads[f"dec.W{l + 1}"] = da[:, None] * below
        back = W[l + 1].T @ da
        if l == 4:
            dz += back
        elif dg[l + 1] is None:
            dg[l + 1] = back
        else:
            dg[l + 1] = dg[l + 1] + back
        if l == 3:
            dz += da
        elif l == 1:
            dg[3] = da if dg[3] is None else dg[3] + da
    return grads, dz


def encode_backward(x, trace, params, dh):
    """Backpropagate per-layer gradients ``dh[l]`` = d(loss)/d(h_l) into the encoder."""
    W, h, pre = params.W, trace.h, trace.pre
    dh = [d.copy() for d in dh]
    grads = {}
    for l in (5, 4, 3, 2, 1, 0):
        da = dh[l] * (pre[l] > 0)
        grads[f"enc.b{l}"] = da
        inp = x if l == 0 else h[l - 1]
        grads[f"enc.W{l}"] = da[:, None] * inp
        if l >= 1:
            dh[l - 1] += W[l].T @ da
        if l in (3, 5):
            dh[l - 2] += da
        if l == 1:
            grads["enc.Wm"] = da[:, None] * x
    return grads
