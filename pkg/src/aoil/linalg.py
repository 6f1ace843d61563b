"""Numeric substrate: initialization, activations, similarity and Adam.

Matrices and vectors are plain float64 numpy arrays. Everything else in the
package builds on these few primitives.
"""

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Raised when array shapes do not line up."""


def check_dim(v, n, what="vector"):
    if v.ndim != 1 or v.shape[0] != n:
        raise DimensionError(f"{what}: expected dim {n}, got shape {v.shape}")


def xavier_init(rows, cols, rng):
    """Uniform Xavier/Glorot draw of shape (rows, cols).

    Entries lie in [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))], which gives
    variance 2/(rows+cols).
    """
    if rows < 1 or cols < 1:
        raise DimensionError(f"xavier_init needs positive shape, got ({rows}, {cols})")
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def relu(v):
    return np.maximum(v, 0.0)


def softmax(v):
    v = np.asarray(v)
    if v.size == 0:
        raise DimensionError("softmax of an empty vector")
    e = np.exp(v - v.max())
    return e / e.sum()


def cosine_similarity(a, b):
    """a.b / (|a||b|); defined as 0 when either norm vanishes."""
    if a.shape != b.shape:
        raise DimensionError(f"cosine_similarity: {a.shape} vs {b.shape}")
    na = np.sqrt(a @ a)
    nb = np.sqrt(b @ b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float((a @ b) / (na * nb))


@dataclass
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def like(cls, param, **kw):
        return cls(np.zeros_like(param), np.zeros_like(param), **kw)

    def reset(self):
        self.first_moment[...] = 0.0
        self.second_moment[...] = 0.0
        self.step_count = 0


def adam_update(param, grad, m, v, lr, bc1, bc2, beta1, beta2, epsilon):
    """Raw in-place Adam arithmetic; ``bc1``/``bc2`` may be scalars or arrays."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    param -= (lr / bc1) * m / (np.sqrt(v / bc2) + epsilon)


def adam_step(param, grad, state, lr):
    """In-place Adam update of ``param`` with bias correction.

    Returns ``param`` for convenience; ``state`` is mutated as well.
    """
    if param.shape != grad.shape or param.shape != state.first_moment.shape:
        raise DimensionError(
            f"adam_step: param {param.shape}, grad {grad.shape}, "
            f"state {state.first_moment.shape}"
        )
    state.step_count += 1
    t = state.step_count
    adam_update(param, grad, state.first_moment, state.second_moment, lr,
                1.0 - state.beta1**t, 1.0 - state.beta2**t,
                state.beta1, state.beta2, state.epsilon)
    return param
