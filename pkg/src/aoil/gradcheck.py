"""Central finite-difference check of every analytic gradient tensor.

The numeric side re-evaluates the total loss in extended precision
(``np.longdouble``) so cancellation noise stays far below the relative
tolerance even for tiny gradient entries. Entries whose +/- perturbations
flip a ReLU gate straddle a kink; they are counted and skipped.
"""

import copy
from dataclasses import dataclass

import numpy as np

from .learner import ModelState, backward, forward, one_hot

FD_STEP = 1e-5
TOLERANCE = 1e-4
REL_FLOOR = 1e-8


@dataclass
class TensorCheck:
    name: str
    max_rel_error: float
    n_checked: int
    n_kinks: int

    @property
    def passed(self):
        return self.max_rel_error < TOLERANCE


def _gates(trace):
    parts = [p > 0 for p in trace.enc.pre] + [p > 0 for p in trace.dec.pre]
    return np.concatenate(parts)


def _extended(model):
    ext = copy.deepcopy(model)
    for holder in (ext.encoder, ext.decoder):
        holder.W = [w.astype(np.longdouble) for w in holder.W]
        holder.b = [b.astype(np.longdouble) for b in holder.b]
        holder.Wm = holder.Wm.astype(np.longdouble)
    if ext.memory is not None:
        ext.memory.M = ext.memory.M.astype(np.longdouble)
    ext.attention.Ws1 = ext.attention.Ws1.astype(np.longdouble)
    ext.attention.ws2 = ext.attention.ws2.astype(np.longdouble)
    ext.classifier.Wf = ext.classifier.Wf.astype(np.longdouble)
    ext.classifier.bf = ext.classifier.bf.astype(np.longdouble)
    return ext


def numeric_gradients(model, x, y, step=FD_STEP, names=None):
    """Finite-difference gradients of the total loss.

    Encoder tensors are differentiated with the alignment weights pinned at
    their unperturbed value, matching the stop-gradient contract.
    Returns (grads, kink_masks).
    """
    ext = _extended(model)
    xl, yl = x.astype(np.longdouble), y.astype(np.longdouble)
    A0 = forward(xl, yl, ext).fusion.A
    params = ext.parameters()
    grads, kinks = {}, {}
    for name in names or params:
        p = params[name]
        pin = A0 if name.startswith("enc.") else None
        g = np.zeros(p.shape)
        kink = np.zeros(p.shape, dtype=bool)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + step
            tp = forward(xl, yl, ext, A=pin)
            p[idx] = orig - step
            tm = forward(xl, yl, ext, A=pin)
            p[idx] = orig
            g[idx] = float((tp.losses.total - tm.losses.total) / (2 * step))
            kink[idx] = not np.array_equal(_gates(tp), _gates(tm))
        grads[name] = g
        kinks[name] = kink
    return grads, kinks


def relative_errors(analytic, numeric):
    return np.abs(analytic - numeric) / np.maximum(np.abs(numeric), REL_FLOOR)


def random_instance(seed, d_x=5, d_h=8, n_memory=4, d_a=6, d_y=2, use_memory=True, lam=0.1):
    rng = np.random.default_rng(seed + 10_000)
    model = ModelState.create(d_x, d_y=d_y, d_h=d_h, d_a=d_a, n_memory=n_memory, lam=lam,
                              seed=seed, use_memory=use_memory)
    # nonzero biases so no unit sits exactly on a gate boundary
    for name, p in model.parameters().items():
        if ".b" in name:
            p[...] = rng.normal(0.0, 0.1, size=p.shape)
    x = rng.normal(size=d_x)
    y = one_hot(int(rng.integers(d_y)), d_y)
    return model, x, y


def check_model(model, x, y, corrupt=None):
    """Compare analytic and numeric gradients tensor by tensor.

    ``corrupt`` names one tensor whose analytic gradient is deliberately
    perturbed (negative control).
    """
    analytic = backward(forward(x, y, model), x, y, model)
    if corrupt is not None:
        analytic[corrupt] = analytic[corrupt] * 1.01 + 1e-3
    numeric, kinks = numeric_gradients(model, x, y)
    results = []
    for name in model.parameters():
        err = relative_errors(analytic[name], numeric[name])
        ok = ~kinks[name]
        worst = float(err[ok].max()) if ok.any() else 0.0
        results.append(TensorCheck(name, worst, int(ok.sum()), int((~ok).sum())))
    return results
