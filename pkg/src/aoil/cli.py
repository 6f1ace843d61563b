"""Command-line entry point: ``aoil generate | run | gradcheck``.

Configuration comes from flags, from a flat ``key = value`` file, or both;
flags win. Every run writes a config echo next to its reports.
"""

import argparse
import dataclasses
import os
import sys
import time
from dataclasses import dataclass

from .drift import DriftController
from .evaluation import RunSettings, ogd_baseline, prequential_run, write_report
from .gradcheck import TOLERANCE, check_model, random_instance
from .learner import ModelState, NoiseConfig
from .streams import (
    HyperplaneConfig,
    SeaConfig,
    hyperplane_generate,
    inject_noise,
    load_delimited,
    minmax_scaled,
    sea_generate,
    standardized,
    write_delimited,
)

MODES = ("aoil", "aoil-dae", "oil-base", "aoil-no-memory", "ogd")
GENERATORS = ("sea", "hyperplane", "file")
SCALINGS = ("minmax", "zscore", "none")


class ConfigError(ValueError):
    pass


def _bool(s):
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _floats(s):
    if isinstance(s, (list, tuple)):
        return [float(v) for v in s]
    parts = [p for p in str(s).replace(" ", "").split(",") if p]
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"not a comma-separated list of numbers: {s!r}") from None


@dataclass
class RunConfig:
    mode: str = "aoil"
    seed: int = 0
    # stream
    generator: str = "sea"
    data: str = ""
    label_column: int = -1
    delimiter: str = ","
    thresholds: list = dataclasses.field(default_factory=lambda: [4.0, 7.0, 4.0, 7.0])
    segment_length: int = 12_500
    sea_noise: float = 0.0
    hp_dim: int = 10
    hp_drift: float = 0.001
    n_examples: int = 50_000
    scaling: str = "minmax"
    noise_fraction: float = 0.0
    noise_variance: float = 0.1
    # model
    d_h: int = 30
    d_a: int = 30
    n_memory: int = 50
    lam: float = 0.0002
    lr: float = 0.01
    corruption_variance: float = 0.1
    # drift handling
    window: int = 10
    buffer_size: int = 5
    replay_every: int = 50
    clear_buffer_on_drift: bool = True
    delta_mu: float = 0.2
    delta_sigma: float = 0.01
    spread: str = "variance"
    # baseline
    ogd_lr: float = 0.01

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}; got {self.mode!r}")
        if self.generator not in GENERATORS:
            raise ConfigError(f"generator must be one of {', '.join(GENERATORS)}")
        if self.generator == "file" and not self.data:
            raise ConfigError("generator 'file' needs data=<path>")
        if self.data and self.generator != "file":
            raise ConfigError(f"data file given but generator is {self.generator!r}")
        if self.scaling not in SCALINGS:
            raise ConfigError(f"scaling must be one of {', '.join(SCALINGS)}")
        if self.spread not in ("variance", "std"):
            raise ConfigError("spread must be 'variance' or 'std'")
        if not self.thresholds:
            raise ConfigError("thresholds must not be empty")
        for name in ("segment_length", "hp_dim", "n_examples", "d_h", "d_a", "n_memory",
                     "window", "buffer_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("lr", "delta_mu", "delta_sigma", "ogd_lr"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("lam", "replay_every", "noise_variance", "corruption_variance", "hp_drift"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("sea_noise", "noise_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.hp_dim < 2:
            raise ConfigError("hp_dim must be >= 2")
        return self

    def echo(self):
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = ",".join(repr(x) for x in v) if isinstance(v, list) else v
        return out


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(key, value):
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    default = _FIELDS[key].default
    if key == "thresholds":
        return _floats(value)
    if isinstance(default, bool):
        return _bool(value)
    try:
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None
    return str(value)


def read_config_file(path):
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            k = k.replace("-", "_")
            if k == "out":
                continue  # the output location is not part of a run's identity
            try:
                values[k] = _coerce(k, v)
            except ConfigError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def build_config(file_values=None, overrides=None):
    values = dict(file_values or {})
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = _coerce(k, v)
    if values.get("data") and "generator" not in (overrides or {}) and "generator" not in (file_values or {}):
        values["generator"] = "file"
    return RunConfig(**values).validate()


def make_stream(cfg):
    if cfg.generator == "sea":
        stream = sea_generate(SeaConfig(cfg.thresholds, cfg.segment_length, cfg.sea_noise, cfg.seed))
    elif cfg.generator == "hyperplane":
        stream = hyperplane_generate(HyperplaneConfig(cfg.hp_dim, cfg.hp_drift, cfg.n_examples, cfg.seed))
    else:
        stream = load_delimited(cfg.data, cfg.label_column, cfg.delimiter)
    if cfg.noise_fraction > 0 and cfg.noise_variance > 0:
        # perturb raw features before scaling; own seed so labels and noise are independent
        stream = inject_noise(stream, cfg.noise_fraction, cfg.noise_variance, cfg.seed + 1)
    if cfg.scaling == "minmax":
        stream = minmax_scaled(stream)
    elif cfg.scaling == "zscore":
        stream = standardized(stream)
    return stream


def execute(cfg):
    """Build the model for ``cfg.mode`` and run it over the configured stream."""
    stream = make_stream(cfg)
    if cfg.mode == "ogd":
        return ogd_baseline(stream, lr=cfg.ogd_lr)
    stream = iter(stream)
    try:
        first = next(stream)
    except StopIteration:
        raise ConfigError("stream is empty") from None
    # file labels are mapped on first appearance, so the class count is only
    # known after a full pass; binary is the supported case
    model = ModelState.create(
        first.x.shape[0], d_y=2, d_h=cfg.d_h, d_a=cfg.d_a, n_memory=cfg.n_memory, lam=cfg.lam,
        learning_rate=cfg.lr, seed=cfg.seed, use_memory=cfg.mode not in ("oil-base", "aoil-no-memory"),
    )
    controller = None
    if cfg.mode != "oil-base":
        controller = DriftController(cfg.delta_mu, cfg.delta_sigma, cfg.spread)
    settings = RunSettings(
        window=cfg.window, buffer_size=cfg.buffer_size, replay_every=cfg.replay_every,
        clear_buffer_on_drift=cfg.clear_buffer_on_drift,
        dae=NoiseConfig(cfg.corruption_variance, 1.0, enabled=cfg.mode == "aoil-dae"),
        seed=cfg.seed,
    )

    def chained():
        yield first
        yield from stream

    return prequential_run(model, controller, chained(), settings)


def cmd_run(cfg, outdir):
    report = execute(cfg)
    paths = write_report(report, outdir, config=cfg.echo())
    return report, paths


def cmd_generate(cfg, path):
    if cfg.generator == "file":
        raise ConfigError("generate needs a synthetic generator (sea or hyperplane)")
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d):
        raise ConfigError(f"output directory does not exist: {d}")
    raw = dataclasses.replace(cfg, scaling="none", noise_fraction=0.0)
    n = write_delimited(make_stream(raw), path)
    keys = ("generator", "seed", "thresholds", "segment_length", "sea_noise", "hp_dim", "hp_drift", "n_examples")
    echo = raw.echo()
    with open(path + ".config.txt", "w") as fh:
        for k in keys:
            fh.write(f"{k} = {echo[k]}\n")
        fh.write(f"rows = {n}\n")
    return n


def cmd_gradcheck(seed=0, d_x=5, d_h=8, n_memory=4, d_a=6, corrupt=None, out=None):
    out = out or sys.stdout
    model, x, y = random_instance(seed, d_x=d_x, d_h=d_h, n_memory=n_memory, d_a=d_a)
    if corrupt is not None and corrupt not in model.parameters():
        raise ConfigError(f"unknown tensor {corrupt!r}")
    results = check_model(model, x, y, corrupt=corrupt)
    for r in results:
        status = "ok" if r.passed else "FAIL"
        print(f"{r.name:10s} max_rel_err={r.max_rel_error:.3e} checked={r.n_checked} "
              f"kinks={r.n_kinks} {status}", file=out)
    ok = all(r.passed for r in results)
    print(f"gradcheck {'passed' if ok else 'failed'} (tolerance {TOLERANCE:g})", file=out)
    return ok, results


def _add_config_flags(p):
    for name, f in _FIELDS.items():
        flag = "--" + name.replace("_", "-")
        if name == "mode":
            p.add_argument(flag, choices=MODES, default=None)
        elif name == "generator":
            p.add_argument(flag, choices=GENERATORS, default=None)
        else:
            p.add_argument(flag, default=None, metavar=name.upper())
    p.add_argument("--config", help="flat key = value file; flags override it")


def _parser():
    ap = argparse.ArgumentParser(prog="aoil", description="Adaptive online incremental learning on data streams")
    sub = ap.add_subparsers(dest="command", required=True)
    gen = sub.add_parser("generate", help="materialize a synthetic stream as CSV")
    _add_config_flags(gen)
    gen.add_argument("--out", required=True, help="CSV path to write")
    run = sub.add_parser("run", help="prequential run with reports")
    _add_config_flags(run)
    run.add_argument("--out", help="report directory (default: runs/<mode>-<timestamp>)")
    gc = sub.add_parser("gradcheck", help="finite-difference check of every gradient")
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--d-x", type=int, default=5)
    gc.add_argument("--d-h", type=int, default=8)
    gc.add_argument("--n-memory", type=int, default=4)
    gc.add_argument("--d-a", type=int, default=6)
    gc.add_argument("--corrupt", metavar="TENSOR", help=argparse.SUPPRESS)
    return ap


def _config_from_args(args):
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {k: getattr(args, k) for k in _FIELDS if getattr(args, k, None) is not None}
    return build_config(file_values, overrides)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "gradcheck":
            ok, _ = cmd_gradcheck(args.seed, args.d_x, args.d_h, args.n_memory, args.d_a, args.corrupt)
            return 0 if ok else 1
        cfg = _config_from_args(args)
        if args.command == "generate":
            n = cmd_generate(cfg, args.out)
            print(f"wrote {n} rows to {args.out}")
            return 0
        outdir = args.out or os.path.join("runs", f"{cfg.mode}-{time.strftime('%Y%m%d-%H%M%S')}")
        for k, v in cfg.echo().items():
            print(f"{k} = {v}")
        report, paths = cmd_run(cfg, outdir)
        print(f"accuracy = {report.accuracy:.4f} over {report.n} examples")
        print(f"reports in {outdir}")
        return 0
    except (ConfigError, ValueError, OSError) as exc:
        print(f"aoil: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
