"""Prequential (test-then-train) evaluation, metrics, stage-wise accuracy and
the online-gradient-descent logistic baseline."""

import os
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .drift import (
    Event,
    HardBuffer,
    SlidingLossWindow,
    check,
    offer_hard,
    on_drift,
    push_loss,
    replay,
)
from .learner import NoiseConfig, corrupt, forward, one_hot, train_step
from .linalg import DimensionError

N_STAGES = 5


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    def add(self, truth, pred, positive=1):
        if pred == positive:
            if truth == positive:
                self.tp += 1
            else:
                self.fp += 1
        elif truth == positive:
            self.fn += 1
        else:
            self.tn += 1


@dataclass
class ScoreStore:
    scores: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    def add(self, score, label):
        self.scores.append(float(score))
        self.labels.append(int(label))

    def __len__(self):
        return len(self.scores)


def auc(store):
    """Mann-Whitney AUC with midranks; NaN when only one class is present."""
    s = np.asarray(store.scores, dtype=float)
    pos = np.asarray(store.labels) == 1
    n_pos = int(pos.sum())
    n_neg = s.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = rankdata(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def metrics(counts, scores=None):
    if counts.total == 0:
        raise ValueError("metrics need at least one example")
    c = counts
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": (c.tp + c.tn) / c.total,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "auc": auc(scores) if scores is not None else float("nan"),
    }


def stage_slices(n, k=N_STAGES):
    """k consecutive slices of size n // k; the remainder joins the last one."""
    size = n // k
    bounds = [i * size for i in range(k)] + [n]
    return [slice(bounds[i], bounds[i + 1]) for i in range(k)]


def stage_deltas(correct):
    correct = np.asarray(correct, dtype=float)
    if correct.size < N_STAGES:
        raise ValueError(f"need at least {N_STAGES} examples for stage accuracies")
    stages = np.array([correct[s].mean() for s in stage_slices(correct.size)])
    return stages, np.diff(stages)


@dataclass
class RunSettings:
    window: int = 10
    buffer_size: int = 5
    replay_every: int = 50
    clear_buffer_on_drift: bool = True
    dae: NoiseConfig = field(default_factory=NoiseConfig)
    accuracy_window: int = 500
    seed: int = 0


@dataclass
class RunReport:
    metrics: dict
    correct: np.ndarray
    predictions: np.ndarray
    labels: np.ndarray
    scores: np.ndarray
    losses: np.ndarray  # (n, 4): prediction, reconstruction, entropy, total
    events: list
    stages: np.ndarray
    deltas: np.ndarray
    duration: float
    accuracy_window: int = 500

    @property
    def n(self):
        return self.correct.size

    @property
    def accuracy(self):
        return self.metrics.get("accuracy", float("nan"))

    def windowed_accuracy(self):
        c = np.cumsum(self.correct, dtype=float)
        w = self.accuracy_window
        out = np.empty_like(c)
        out[:w] = c[:w] / np.arange(1, min(w, c.size) + 1)
        out[w:] = (c[w:] - c[:-w]) / w
        return out


def _finish(start, correct, preds, labels, scores, losses, events, acc_window):
    correct = np.asarray(correct, dtype=bool)
    counts = ConfusionCounts()
    for t, p in zip(labels, preds):
        counts.add(t, p)
    if correct.size:
        store = ScoreStore(list(scores), list(labels))
        m = metrics(counts, store)
    else:
        m = {}
    if correct.size >= N_STAGES:
        stages, deltas = stage_deltas(correct)
    else:
        stages, deltas = np.array([]), np.array([])
    return RunReport(m, correct, np.asarray(preds, dtype=int), np.asarray(labels, dtype=int),
                     np.asarray(scores, dtype=float), np.asarray(losses, dtype=float).reshape(-1, 4),
                     events, stages, deltas, time.perf_counter() - start, acc_window)


def prequential_run(model, controller, stream, settings=None, on_event=None):
    """Single pass of test-then-train over ``stream``.

    ``controller=None`` turns off drift handling and hard-example replay.
    ``on_event(index, event, model, before)`` is called after every detector
    event; for drift ``before`` holds the parameters just ahead of the reset.
    """
    settings = settings or RunSettings()
    start = time.perf_counter()
    rng = np.random.default_rng(settings.seed)
    window = SlidingLossWindow(settings.window)
    buffer = HardBuffer(settings.buffer_size)
    correct, preds, labels, scores, losses = [], [], [], [], []
    dae = settings.dae
    for t, ex in enumerate(stream):
        if ex.x.shape[0] != model.d_x:
            raise DimensionError(f"example {ex.index}: {ex.x.shape[0]} features, model expects {model.d_x}")
        if not 0 <= ex.y < model.d_y:
            raise DimensionError(f"example {ex.index}: label {ex.y} outside {model.d_y} classes")
        y = one_hot(ex.y, model.d_y)
        trace = forward(ex.x, y, model)
        y_hat = trace.fusion.y_hat
        pred = int(np.argmax(y_hat))
        correct.append(pred == ex.y)
        preds.append(pred)
        labels.append(ex.y)
        scores.append(y_hat[1])
        if dae.enabled:
            lb = train_step(ex.x, y, model, x_in=corrupt(ex.x, dae, rng))
        else:
            lb = train_step(ex.x, y, model, trace=trace)
        losses.append((lb.prediction, lb.reconstruction, lb.entropy, lb.total))
        if controller is None:
            continue
        push_loss(window, lb.total)
        offer_hard(buffer, ex.x, y, lb.total)
        ev = check(controller, window, model, index=t)
        before = None
        if ev is Event.DRIFT:
            if on_event is not None:
                before = {k: v.copy() for k, v in model.parameters().items()}
            on_drift(model, controller.snapshot, rng)
            if settings.clear_buffer_on_drift:
                buffer.clear()
        if ev is not None and on_event is not None:
            on_event(t, ev, model, before)
        if settings.replay_every and (t + 1) % settings.replay_every == 0:
            replay(buffer, model)
    return _finish(start, correct, preds, labels, scores, losses,
                   list(controller.events) if controller is not None else [], settings.accuracy_window)


def ogd_baseline(stream, lr=0.01):
    """Logistic regression by plain online gradient descent, test-then-train."""
    start = time.perf_counter()
    w = None
    b = 0.0
    correct, preds, labels, scores, losses = [], [], [], [], []
    for ex in stream:
        if w is None:
            w = np.zeros(ex.x.shape[0])
        z = float(w @ ex.x + b)
        p = 0.5 * (1.0 + np.tanh(0.5 * z))  # logistic sigmoid without overflow
        pred = int(p > 0.5)
        correct.append(pred == ex.y)
        preds.append(pred)
        labels.append(ex.y)
        scores.append(p)
        q = p if ex.y == 1 else 1.0 - p
        ce = -np.log(max(q, 1e-12))
        losses.append((ce, 0.0, 0.0, ce))
        g = p - ex.y
        w -= lr * g * ex.x
        b -= lr * g
    return _finish(start, correct, preds, labels, scores, losses, [], 500)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_report(report, outdir, config=None):
    """Write summary.txt, trace.csv and drift_events.csv (plus config.txt).

    Wall-clock duration is deliberately left out so reruns are byte-identical.
    """
    os.makedirs(outdir, exist_ok=True)
    paths = {}
    lines = [f"examples = {report.n}"]
    lines += [f"{k} = {_fmt(v)}" for k, v in report.metrics.items()]
    for i, s in enumerate(report.stages):
        lines.append(f"stage_{i + 1}_accuracy = {_fmt(s)}")
    for i, d in enumerate(report.deltas):
        lines.append(f"stage_delta_{i + 1} = {_fmt(d)}")
    lines.append(f"stable_events = {sum(1 for e in report.events if e[1] is Event.STABLE)}")
    lines.append(f"drift_events = {sum(1 for e in report.events if e[1] is Event.DRIFT)}")
    paths["summary"] = os.path.join(outdir, "summary.txt")
    with open(paths["summary"], "w") as fh:
        fh.write("\n".join(lines) + "\n")

    paths["trace"] = os.path.join(outdir, "trace.csv")
    wacc = report.windowed_accuracy() if report.n else []
    with open(paths["trace"], "w") as fh:
        fh.write("index,label,prediction,score,correct,prediction_loss,"
                 "reconstruction_loss,entropy,total_loss,windowed_accuracy\n")
        for i in range(report.n):
            lp, lr_, le, lt = report.losses[i]
            fh.write(",".join([
                str(i), str(report.labels[i]), str(report.predictions[i]), _fmt(report.scores[i]),
                str(int(report.correct[i])), _fmt(lp), _fmt(lr_), _fmt(le), _fmt(lt), _fmt(wacc[i]),
            ]) + "\n")

    paths["events"] = os.path.join(outdir, "drift_events.csv")
    with open(paths["events"], "w") as fh:
        fh.write("example_index,event,window_mean,window_std\n")
        for idx, ev, mu, sd in report.events:
            fh.write(f"{idx},{ev.value},{_fmt(mu)},{_fmt(sd)}\n")

    if config is not None:
        paths["config"] = os.path.join(outdir, "config.txt")
        with open(paths["config"], "w") as fh:
            for k in sorted(config):
                fh.write(f"{k} = {config[k]}\n")
    return paths
