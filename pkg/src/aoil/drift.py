"""Loss-window drift detection, shared-layer snapshot/restore and hard-example replay."""

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .learner import ContractError, LossBreakdown, train_step
from .linalg import xavier_init

SHARED_TENSORS = ("enc.W0", "enc.b0", "enc.W1", "enc.b1", "enc.Wm", "enc.W2", "enc.b2")
PRIVATE_LAYERS = (3, 4, 5)


class SlidingLossWindow:
    def __init__(self, capacity=10):
        if capacity < 1:
            raise ValueError("window capacity must be >= 1")
        self.capacity = capacity
        self.losses = deque(maxlen=capacity)

    def __len__(self):
        return len(self.losses)

    @property
    def full(self):
        return len(self.losses) == self.capacity

    def stats(self, spread="std"):
        """(mean, spread) of the current contents; spread is 'std' or 'variance'."""
        if not self.losses:
            return 0.0, 0.0
        a = np.fromiter(self.losses, dtype=float, count=len(self.losses))
        mu = float(a.mean())
        var = float(a.var()) if a.size > 1 else 0.0
        return mu, (var if spread == "variance" else float(np.sqrt(var)))


def push_loss(window, loss):
    """Append a loss (evicting the oldest when full); return (mean, std)."""
    if not math.isfinite(loss):
        raise ValueError(f"non-finite loss {loss!r}")
    window.losses.append(float(loss))
    return window.stats()


class State(Enum):
    SEARCHING = "searching"
    MONITORING = "monitoring"


class Event(Enum):
    STABLE = "stable"
    DRIFT = "drift"


@dataclass
class DriftController:
    delta_mu: float = 0.2
    delta_sigma: float = 0.01
    spread: str = "variance"  # statistic compared with delta_sigma: 'variance' or 'std'
    state: State = State.SEARCHING
    mu_stable: float = 0.0
    sigma_stable: float = 0.0
    snapshot: dict = field(default_factory=dict)
    events: list = field(default_factory=list)  # (index, Event, window_mean, window_std)

    def __post_init__(self):
        if self.spread not in ("variance", "std"):
            raise ValueError(f"unknown spread statistic {self.spread!r}")


def snapshot_shared(model):
    params = model.parameters()
    return {k: params[k].copy() for k in SHARED_TENSORS}


def check(controller, window, model, index=None):
    """Advance the stable/drift state machine; returns an Event or None.

    Runs only on a full window. On DRIFT the caller applies ``on_drift``.
    """
    if not window.full:
        return None
    c = controller
    mu, spread = window.stats(c.spread)
    sd = spread if c.spread == "std" else float(np.sqrt(spread))
    if c.state is State.SEARCHING:
        if mu < c.delta_mu and spread < c.delta_sigma:
            c.mu_stable, c.sigma_stable = mu, spread
            c.snapshot = snapshot_shared(model)
            c.state = State.MONITORING
            c.events.append((index, Event.STABLE, mu, sd))
            return Event.STABLE
        return None
    if mu > c.mu_stable + c.sigma_stable:
        c.state = State.SEARCHING
        c.events.append((index, Event.DRIFT, mu, sd))
        return Event.DRIFT
    return None


def on_drift(model, snapshot, rng):
    """Restore the shared encoder layers and redraw the private ones."""
    if not snapshot:
        raise ContractError("on_drift called without a shared-layer snapshot")
    params = model.parameters()
    for k, saved in snapshot.items():
        params[k][...] = saved
    for l in PRIVATE_LAYERS:
        W = params[f"enc.W{l}"]
        W[...] = xavier_init(*W.shape, rng)
        params[f"enc.b{l}"][...] = 0.0
    for k in SHARED_TENSORS + tuple(f"enc.{p}{l}" for l in PRIVATE_LAYERS for p in "Wb"):
        model.adam[k].reset()
    return model


class HardBuffer:
    """The ``capacity`` highest-loss examples offered since the last clear."""

    def __init__(self, capacity=5):
        self.capacity = capacity
        self.entries = []  # (x, y, loss) in insertion order

    def __len__(self):
        return len(self.entries)

    def clear(self):
        self.entries.clear()

    def losses(self):
        return [e[2] for e in self.entries]


def offer_hard(buffer, x, y, loss):
    entries = buffer.entries
    if len(entries) < buffer.capacity:
        entries.append((x, y, loss))
        return buffer
    # evict the smallest loss; among equal minima the latest-inserted goes first
    j = min(range(len(entries)), key=lambda i: (entries[i][2], -i))
    if loss > entries[j][2]:
        del entries[j]
        entries.append((x, y, loss))
    return buffer


def replay(buffer, model):
    """One train step per buffered example; returns the mean pre-update losses."""
    if not buffer.entries:
        return LossBreakdown()
    parts = [train_step(x, y, model) for x, y, _ in buffer.entries]
    n = len(parts)
    return LossBreakdown(
        sum(p.prediction for p in parts) / n,
        sum(p.reconstruction for p in parts) / n,
        sum(p.entropy for p in parts) / n,
        sum(p.total for p in parts) / n,
    )
