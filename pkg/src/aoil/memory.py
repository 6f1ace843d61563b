"""Memory-addressed latent reconstruction with hard shrinkage and entropy penalty."""

from dataclasses import dataclass

import numpy as np

from .linalg import check_dim, softmax, xavier_init


@dataclass
class MemoryModule:
    M: np.ndarray  # (N, D_h), one prototype per row
    shrink_epsilon: float = 1e-12
    lam: float = 0.0002

    @classmethod
    def init(cls, n_units, d_h, rng, **kw):
        return cls(xavier_init(n_units, d_h, rng), **kw)

    @property
    def n_units(self):
        return self.M.shape[0]

    def named(self):
        return {"mem.M": self.M}


def _similarities(h5, M):
    """Cosine similarity of h5 with every row of M plus the norms used."""
    hn = np.sqrt(h5 @ h5)
    mn = np.sqrt(np.einsum("ij,ij->i", M, M))
    denom = hn * mn
    safe = np.where(denom > 0, denom, 1.0)
    s = np.where(denom > 0, (M @ h5) / safe, 0.0)
    return s, hn, mn


def address(h5, mem):
    check_dim(h5, mem.M.shape[1], "memory query")
    s, _, _ = _similarities(h5, mem.M)
    return softmax(s)


def _shrink_raw(w, eps):
    return np.maximum(w, 0.0) * w / (np.abs(w) + eps)


def shrink(w, mem):
    """Hard shrinkage followed by renormalization onto the simplex.

    If every component is shrunk to zero the uniform vector is returned.
    """
    u = _shrink_raw(w, mem.shrink_epsilon)
    total = u.sum()
    if total <= 0.0:
        return np.full_like(w, 1.0 / w.shape[0])
    return u / total


def read(w_hat, mem):
    check_dim(w_hat, mem.n_units, "addressing vector")
    return w_hat @ mem.M


def entropy_reg(w_hat):
    p = w_hat[w_hat > 0]
    return float(-(p * np.log(p)).sum())


@dataclass
class MemoryTrace:
    sim: np.ndarray
    w: np.ndarray
    w_hat: np.ndarray
    h5_hat: np.ndarray
    h_norm: float
    m_norms: np.ndarray
    shrunk_total: float


def memory_forward(h5, mem):
    check_dim(h5, mem.M.shape[1], "memory query")
    s, hn, mn = _similarities(h5, mem.M)
    w = softmax(s)
    u = _shrink_raw(w, mem.shrink_epsilon)
    total = float(u.sum())
    w_hat = u / total if total > 0 else np.full_like(w, 1.0 / w.shape[0])
    return MemoryTrace(s, w, w_hat, w_hat @ mem.M, hn, mn, total)


def memory_backward(h5, trace, mem, d_read, lam):
    """Gradients of (downstream + lam * entropy) through the memory read.

    ``d_read`` is d(downstream)/d(h5_hat). Returns (dM, dh5).
    """
    M = mem.M
    w_hat = trace.w_hat
    dM = w_hat[:, None] * d_read
    dw_hat = M @ d_read
    if lam:
        pos = w_hat > 0
        dent = np.zeros_like(w_hat)
        dent[pos] = -(np.log(w_hat[pos]) + 1.0)
        dw_hat = dw_hat + lam * dent
    if trace.shrunk_total <= 0:
        return dM, np.zeros_like(h5)
    # renormalization u -> u / sum(u)
    du = (dw_hat - dw_hat @ w_hat) / trace.shrunk_total
    w, eps = trace.w, mem.shrink_epsilon
    dw = np.where(w > 0, du * (w * w + 2.0 * w * eps) / (w + eps) ** 2, 0.0)
    ds = w * (dw - dw @ w)
    hn, mn, s = trace.h_norm, trace.m_norms, trace.sim
    if hn == 0.0:
        return dM, np.zeros_like(h5)
    live = mn > 0
    ds = np.where(live, ds, 0.0)
    inv = np.where(live, 1.0 / np.where(live, mn, 1.0), 0.0)
    # d s_i / d h5 = m_i / (|h||m_i|) - s_i h / |h|^2
    dh5 = (ds * inv) @ M / hn - (ds @ s) * h5 / (hn * hn)
    # d s_i / d m_i = h / (|h||m_i|) - s_i m_i / |m_i|^2
    dM += (ds * inv / hn)[:, None] * h5 - (ds * s * inv * inv)[:, None] * M
    return dM, dh5
