"""Self-attention fusion of the encoder activations and the softmax classifier."""

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError, softmax, xavier_init

PROB_FLOOR = 1e-12


@dataclass
class AttentionParams:
    Ws1: np.ndarray  # (d_a, D_h)
    ws2: np.ndarray  # (d_a,)

    @classmethod
    def init(cls, d_a, d_h, rng):
        return cls(xavier_init(d_a, d_h, rng), xavier_init(1, d_a, rng)[0])

    def named(self):
        return {"att.Ws1": self.Ws1, "att.ws2": self.ws2}


@dataclass
class ClassifierParams:
    Wf: np.ndarray  # (D_h, D_y)
    bf: np.ndarray  # (D_y,)

    @classmethod
    def init(cls, d_h, d_y, rng):
        if d_y < 2:
            raise DimensionError("classifier needs at least two classes")
        return cls(xavier_init(d_h, d_y, rng), np.zeros(d_y))

    def named(self):
        return {"clf.Wf": self.Wf, "clf.bf": self.bf}


@dataclass
class FusionTrace:
    H: np.ndarray  # (L+1, D_h)
    E: np.ndarray  # tanh(Ws1 H^T), (d_a, L+1)
    A: np.ndarray
    C: np.ndarray
    y_hat: np.ndarray


def _attention_tanh(H, params):
    if H.ndim != 2 or H.shape[1] != params.Ws1.shape[1]:
        raise DimensionError(f"attend: H has shape {H.shape}, Ws1 {params.Ws1.shape}")
    return np.tanh(params.Ws1 @ H.T)


def attend(H, params):
    return softmax(params.ws2 @ _attention_tanh(H, params))


def fuse(A, H):
    if A.shape[0] != H.shape[0]:
        raise DimensionError(f"fuse: {A.shape[0]} weights for {H.shape[0]} rows")
    return A @ H


def classify(C, params):
    if C.shape[0] != params.Wf.shape[0]:
        raise DimensionError(f"classify: context dim {C.shape[0]}, Wf {params.Wf.shape}")
    return softmax(C @ params.Wf + params.bf)


def cross_entropy(y, y_hat):
    if y.shape != y_hat.shape:
        raise DimensionError(f"cross_entropy: {y.shape} vs {y_hat.shape}")
    return float(-(y * np.log(np.maximum(y_hat, PROB_FLOOR))).sum())


def fusion_forward(H, attention, classifier, A=None):
    """Attend, fuse and classify. Passing ``A`` overrides the computed weights."""
    E = _attention_tanh(H, attention)
    if A is None:
        A = softmax(attention.ws2 @ E)
    C = fuse(A, H)
    return FusionTrace(H, E, A, C, classify(C, classifier))


def fusion_backward(y, trace, attention, classifier):
    """Gradients of the cross-entropy loss for a one-hot ``y``.

    Returns (grads for attention and classifier tensors, dH) where dH carries
    only the path through C with the alignment weights held fixed.
    """
    y_hat = trace.y_hat
    # the probability floor only guards the reported loss; the logit gradient
    # stays y_hat - y so a saturated wrong prediction can still recover
    dz = y_hat - y
    grads = {"clf.Wf": trace.C[:, None] * dz, "clf.bf": dz}
    dC = classifier.Wf @ dz
    A, E, H = trace.A, trace.E, trace.H
    dA = H @ dC
    dlogits = A * (dA - dA @ A)
    grads["att.ws2"] = E @ dlogits
    dpre = attention.ws2[:, None] * dlogits * (1.0 - E * E)
    grads["att.Ws1"] = dpre @ H
    dH = A[:, None] * dC
    return grads, dH
