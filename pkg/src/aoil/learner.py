"""Full AOIL model: forward pass, total loss, gradients and online updates.

The prediction-loss gradient reaches the encoder only through the fused
context ``C = sum_j a_j h_j`` with the alignment weights held fixed, so layer
``l`` collects ``sum_{j>=l} a_j dL_pre/dh_j`` routed back through the
residual stack. The attention parameters still get the full gradient,
including the path through the softmax over alignment logits.
"""

import copy
from dataclasses import dataclass, field

import numpy as np

from .autoencoder import (
    DecoderParams,
    EncoderParams,
    decode,
    decode_backward,
    encode,
    encode_backward,
    reconstruction_error,
)
from .fusion import AttentionParams, ClassifierParams, cross_entropy, fusion_backward, fusion_forward
from .linalg import AdamState, DimensionError, adam_update
from .memory import MemoryModule, entropy_reg, memory_backward, memory_forward

CHECKPOINT_VERSION = 1


class ContractError(RuntimeError):
    """A call broke a precondition that shapes alone do not catch."""


@dataclass
class LossBreakdown:
    prediction: float = 0.0
    reconstruction: float = 0.0
    entropy: float = 0.0
    total: float = 0.0


@dataclass
class NoiseConfig:
    corruption_variance: float = 0.1
    corruption_fraction: float = 1.0
    enabled: bool = False

    def __post_init__(self):
        if self.corruption_variance < 0:
            raise ValueError("corruption_variance must be >= 0")
        if not 0.0 <= self.corruption_fraction <= 1.0:
            raise ValueError("corruption_fraction must lie in [0, 1]")


@dataclass
class ModelState:
    encoder: EncoderParams
    decoder: DecoderParams
    memory: MemoryModule | None
    attention: AttentionParams
    classifier: ClassifierParams
    learning_rate: float = 0.01
    seed: int = 0
    adam: dict = field(default_factory=dict)

    @classmethod
    def create(cls, d_x, d_y=2, d_h=30, d_a=30, n_memory=50, lam=0.0002,
               learning_rate=0.01, seed=0, use_memory=True, shrink_epsilon=1e-12):
        rng = np.random.default_rng(seed)
        enc = EncoderParams.init(d_x, d_h, rng)
        dec = DecoderParams.init(d_x, d_h, rng)
        mem = MemoryModule.init(n_memory, d_h, rng, shrink_epsilon=shrink_epsilon, lam=lam) if use_memory else None
        att = AttentionParams.init(d_a, d_h, rng)
        clf = ClassifierParams.init(d_h, d_y, rng)
        return cls(enc, dec, mem, att, clf, learning_rate=learning_rate, seed=seed)

    def __post_init__(self):
        self._pack()

    def _pack(self):
        # All tensors become views into one flat buffer (and likewise the Adam
        # moments) so an update is a handful of vectorized operations.
        old_adam = self.adam
        named = self.parameters()
        self._names = list(named)
        self._sizes = np.array([v.size for v in named.values()])
        self._theta = np.concatenate([v.ravel() for v in named.values()]).astype(np.float64)
        self._m = np.zeros_like(self._theta)
        self._v = np.zeros_like(self._theta)
        self.adam = {}
        off = 0
        for name, v in named.items():
            sl = slice(off, off + v.size)
            self._set_tensor(name, self._theta[sl].reshape(v.shape))
            st = AdamState(self._m[sl].reshape(v.shape), self._v[sl].reshape(v.shape))
            if name in old_adam:
                st.first_moment[...] = old_adam[name].first_moment
                st.second_moment[...] = old_adam[name].second_moment
                st.step_count = old_adam[name].step_count
            self.adam[name] = st
            off += v.size

    def _set_tensor(self, name, arr):
        prefix, attr = name.split(".")
        holder = {"enc": self.encoder, "dec": self.decoder, "mem": self.memory,
                  "att": self.attention, "clf": self.classifier}[prefix]
        if prefix in ("enc", "dec") and attr[1:].isdigit():
            getattr(holder, attr[0])[int(attr[1:])] = arr
        else:
            setattr(holder, attr, arr)

    def __deepcopy__(self, memo):
        clone = ModelState(
            copy.deepcopy(self.encoder, memo), copy.deepcopy(self.decoder, memo),
            copy.deepcopy(self.memory, memo), copy.deepcopy(self.attention, memo),
            copy.deepcopy(self.classifier, memo), self.learning_rate, self.seed,
            copy.deepcopy(self.adam, memo),
        )
        return clone

    @property
    def d_x(self):
        return self.encoder.d_x

    @property
    def d_y(self):
        return self.classifier.bf.shape[0]

    @property
    def lam(self):
        return self.memory.lam if self.memory is not None else 0.0

    def parameters(self):
        """Name -> live parameter array (mutating these mutates the model)."""
        out = {}
        out.update(self.encoder.named())
        out.update(self.decoder.named())
        if self.memory is not None:
            out.update(self.memory.named())
        out.update(self.attention.named())
        out.update(self.classifier.named())
        return out


@dataclass
class FullTrace:
    x_in: np.ndarray
    enc: object
    mem: object
    latent: np.ndarray  # decoder input: memory read, or h5 without memory
    dec: object
    fusion: object
    losses: LossBreakdown


def one_hot(label, n):
    y = np.zeros(n)
    y[label] = 1.0
    return y


def forward(x, y, model, x_in=None, A=None):
    """Run one full pass. ``x`` is the reconstruction target; ``x_in`` (default
    ``x``) is what the encoder sees. ``A`` optionally pins the alignment weights."""
    if y.shape[0] != model.d_y:
        raise DimensionError(f"label dim {y.shape[0]} but model has {model.d_y} classes")
    x_in = x if x_in is None else x_in
    enc = encode(x_in, model.encoder)
    h5 = enc.h[5]
    if model.memory is not None:
        mem = memory_forward(h5, model.memory)
        latent = mem.h5_hat
        ent = entropy_reg(mem.w_hat)
    else:
        mem, latent, ent = None, h5, 0.0
    dec = decode(latent, model.decoder)
    fus = fusion_forward(np.stack(enc.h), model.attention, model.classifier, A=A)
    pred = cross_entropy(y, fus.y_hat)
    rec = reconstruction_error(x, dec.x_hat)
    total = pred + rec + model.lam * ent
    return FullTrace(x_in, enc, mem, latent, dec, fus, LossBreakdown(pred, rec, ent, total))


def backward(trace, x, y, model):
    """Gradient of the total loss for every parameter tensor, keyed by name."""
    if trace.x_in.shape[0] != model.d_x or trace.fusion.y_hat.shape != y.shape:
        raise ContractError("trace does not belong to this model/example")
    grads, dH = fusion_backward(y, trace.fusion, model.attention, model.classifier)
    d_xhat = 2.0 * (trace.dec.x_hat - x)
    dgrads, d_latent = decode_backward(trace.latent, trace.dec, model.decoder, d_xhat)
    grads.update(dgrads)
    dh = list(dH)
    if model.memory is not None:
        dM, dh5 = memory_backward(trace.enc.h[5], trace.mem, model.memory, d_latent, model.lam)
        grads["mem.M"] = dM
        dh[5] = dh[5] + dh5
    else:
        dh[5] = dh[5] + d_latent
    grads.update(encode_backward(trace.x_in, trace.enc, model.encoder, dh))
    return grads


def apply_gradients(model, grads):
    """One Adam step on every tensor, equivalent to ``adam_step`` per tensor."""
    g = np.concatenate([grads[n].ravel() for n in model._names])
    states = [model.adam[n] for n in model._names]
    steps = np.array([st.step_count + 1 for st in states])
    for st in states:
        st.step_count += 1
    ref = states[0]
    b1, b2 = ref.beta1, ref.beta2
    if (steps == steps[0]).all():
        t = steps[0]
        bc1, bc2 = 1.0 - b1**t, 1.0 - b2**t
    else:
        bc1 = np.repeat(1.0 - b1**steps, model._sizes)
        bc2 = np.repeat(1.0 - b2**steps, model._sizes)
    adam_update(model._theta, g, model._m, model._v, model.learning_rate,
                bc1, bc2, b1, b2, ref.epsilon)


def train_step(x, y, model, x_in=None, trace=None):
    """Forward, backward and one Adam update; returns the pre-update losses."""
    if trace is None:
        trace = forward(x, y, model, x_in=x_in)
    grads = backward(trace, x, y, model)
    apply_gradients(model, grads)
    return trace.losses


def corrupt(x, cfg, rng):
    """Additive Gaussian corruption for the denoising variant."""
    if not cfg.enabled or cfg.corruption_variance == 0.0:
        return x
    noise = rng.normal(0.0, np.sqrt(cfg.corruption_variance), size=x.shape)
    if cfg.corruption_fraction < 1.0:
        noise *= rng.random(x.shape) < cfg.corruption_fraction
    return x + noise


def save_checkpoint(model, path):
    arrays = {f"param/{k}": v for k, v in model.parameters().items()}
    for k, st in model.adam.items():
        arrays[f"adam_m/{k}"] = st.first_moment
        arrays[f"adam_v/{k}"] = st.second_moment
        arrays[f"adam_t/{k}"] = np.array(st.step_count)
    meta = np.array([CHECKPOINT_VERSION, model.seed], dtype=np.int64)
    scal = np.array([model.learning_rate, model.lam,
                     model.memory.shrink_epsilon if model.memory is not None else 0.0])
    np.savez(path, _meta=meta, _scalars=scal, **arrays)


def load_checkpoint(path):
    with np.load(path) as f:
        meta, scal = f["_meta"], f["_scalars"]
        if int(meta[0]) != CHECKPOINT_VERSION:
            raise ContractError(f"unsupported checkpoint version {int(meta[0])}")
        params = {k[len("param/"):]: f[k] for k in f.files if k.startswith("param/")}
        enc_W0 = params["enc.W0"]
        d_h, d_x = enc_W0.shape
        model = ModelState.create(
            d_x, d_y=params["clf.bf"].shape[0], d_h=d_h, d_a=params["att.ws2"].shape[0],
            n_memory=params["mem.M"].shape[0] if "mem.M" in params else 1,
            lam=float(scal[1]), learning_rate=float(scal[0]), seed=int(meta[1]),
            use_memory="mem.M" in params, shrink_epsilon=float(scal[2]) or 1e-12,
        )
        live = model.parameters()
        if set(live) != set(params):
            raise ContractError("checkpoint tensors do not match the model layout")
        for k, v in params.items():
            live[k][...] = v
            st = model.adam[k]
            st.first_moment[...] = f[f"adam_m/{k}"]
            st.second_moment[...] = f[f"adam_v/{k}"]
            st.step_count = int(f[f"adam_t/{k}"])
    return model
