"""Random versus controlled sampling experiments over many repetitions.

Each repetition draws a ground truth from the prior, an initial training set
and a fixed evaluation set, then grows the training set one point at a time
under both strategies, refitting the OBC after every addition.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .distributions import ParameterError, RngStream
from .gibbs import GibbsConfig, run_gibbs
from .model import Dataset, Hyperparameters, ModelParams, draw_true_params, generate_labeled_set, generate_sample
from .obc import ObcClassifier, estimate_error
from .sampler import SamplerConfig, choose_next_class

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "StepRecord",
    "ScenarioResult",
    "METHODS",
    "config_from_dict",
    "config_to_dict",
    "load_config",
    "repetition_setup",
    "run_repetition",
    "run_scenario",
    "mean_curves",
    "write_raw_csv",
    "write_mean_csv",
    "read_raw_csv",
    "emit_plot",
]

log = logging.getLogger(__name__)

METHODS = ("random", "controlled")
RAW_HEADER = ["repetition", "method", "training_size", "chosen_class", "error"]
MEAN_HEADER = ["method", "training_size", "mean_error", "stderr"]


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    hyper: Hyperparameters
    initial_n: int = 10
    added_n: int = 30
    repetitions: int = 2000
    test_size: int = 10000
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    master_seed: int = 0
    parallelism: int = 1

    def __post_init__(self):
        for name in ("initial_n", "added_n", "repetitions", "test_size", "parallelism"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class StepRecord:
    repetition: int
    method: str
    training_size: int
    chosen_class: int
    error: float


# ---------------------------------------------------------------- config I/O

_HYPER_KEYS = ("c", "a0", "b0", "e0", "f0", "num_genes")
_SAMPLER_KEYS = ("candidate_draws", "inner_test_size", "common_random_numbers")
_GIBBS_KEYS = ("iterations", "burn_in", "thin")
_TOP_KEYS = ("initial_n", "added_n", "repetitions", "test_size", "master_seed", "parallelism")
_REQUIRED = ("c", "a0", "b0", "e0", "f0")
_BOOL_KEYS = {"common_random_numbers"}
_INT_KEYS = {"num_genes", "candidate_draws", "inner_test_size", *_GIBBS_KEYS, *_TOP_KEYS}
CONFIG_KEYS = _HYPER_KEYS + _TOP_KEYS + _SAMPLER_KEYS + _GIBBS_KEYS


def config_from_dict(doc: dict) -> ScenarioConfig:
    """Build a config from the flat key/value form used in config files."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")
    for key, value in doc.items():
        if key in _BOOL_KEYS:
            if not isinstance(value, bool):
                raise ConfigError(f"{key} must be true or false, got {value!r}")
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{key} must be finite, got {value!r}")
        if key in _INT_KEYS and int(value) != value:
            raise ConfigError(f"{key} must be an integer, got {value!r}")

    def convert(k):
        if k in _BOOL_KEYS:
            return doc[k]
        return int(doc[k]) if k in _INT_KEYS else float(doc[k])

    def pick(keys):
        return {k: convert(k) for k in keys if k in doc}

    try:
        return ScenarioConfig(
            hyper=Hyperparameters(**pick(_HYPER_KEYS)),
            sampler=SamplerConfig(**pick(_SAMPLER_KEYS), gibbs=GibbsConfig(**pick(_GIBBS_KEYS))),
            **pick(_TOP_KEYS),
        )
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(scn: ScenarioConfig) -> dict:
    h, s, g = scn.hyper, scn.sampler, scn.sampler.gibbs
    doc = {k: getattr(h, k) for k in _HYPER_KEYS}
    doc.update({k: getattr(scn, k) for k in _TOP_KEYS})
    doc.update({k: getattr(s, k) for k in _SAMPLER_KEYS})
    doc.update({k: getattr(g, k) for k in _GIBBS_KEYS})
    return doc


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


# ---------------------------------------------------------------- simulation


def repetition_setup(scn: ScenarioConfig, rep_index: int) -> tuple[ModelParams, Dataset, Dataset]:
    """Ground truth, initial training set and evaluation set of one repetition."""
    rep = RngStream(scn.master_seed).child("rep", rep_index)
    truth = draw_true_params(scn.hyper, rep.child("truth"))
    initial = generate_labeled_set(truth, scn.hyper.c, scn.initial_n, rep.child("initial"))
    test = generate_labeled_set(truth, scn.hyper.c, scn.test_size, rep.child("test"))
    return truth, initial, test


def _run_strategy(scn: ScenarioConfig, rep_index: int, method: str, truth: ModelParams,
                  initial: Dataset, test: Dataset) -> list[StepRecord]:
    hyper, c = scn.hyper, scn.hyper.c
    rep = RngStream(scn.master_seed).child("rep", rep_index)
    data = initial
    out = []
    for step in range(1, scn.added_n + 1):
        srng = rep.child(method, step)
        if method == "random":
            label = 0 if srng.child("label").random() < c else 1
        else:
            label = choose_next_class(data, hyper, scn.sampler, srng.child("choose"))
        data = data.with_point(generate_sample(truth, label, srng.child("point")))
        post = run_gibbs(data, hyper, scn.sampler.gibbs, srng.child("fit"))
        err = estimate_error(ObcClassifier(post, c), test).total
        out.append(StepRecord(rep_index, method, data.n, label, err))
    return out


def run_repetition(scn: ScenarioConfig, rep_index: int) -> list[StepRecord]:
    """Both strategies from the same truth, initial data and test set.

    Returns ``2 * added_n`` records, all random-strategy steps first.
    """
    truth, initial, test = repetition_setup(scn, rep_index)
    records = []
    for method in METHODS:
        records.extend(_run_strategy(scn, rep_index, method, truth, initial, test))
    return records


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    records: list[StepRecord]

    def curves(self) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
        return mean_curves(self.records)

    def error_matrix(self, method: str) -> tuple[np.ndarray, np.ndarray]:
        """``(training_sizes, errors)`` with ``errors`` shaped ``(repetitions, steps)``."""
        return error_matrix(self.records, method)


def error_matrix(records, method: str) -> tuple[np.ndarray, np.ndarray]:
    rows = [r for r in records if r.method == method]
    reps = sorted({r.repetition for r in rows})
    sizes = sorted({r.training_size for r in rows})
    ri = {v: i for i, v in enumerate(reps)}
    si = {v: i for i, v in enumerate(sizes)}
    m = np.full((len(reps), len(sizes)), np.nan)
    for r in rows:
        m[ri[r.repetition], si[r.training_size]] = r.error
    return np.asarray(sizes), m


def mean_curves(records) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per method: training sizes, mean error and its standard error across repetitions."""
    out = {}
    for method in METHODS:
        sizes, m = error_matrix(records, method)
        if m.size == 0:
            continue
        mean = m.mean(axis=0)
        if m.shape[0] > 1:
            se = m.std(axis=0, ddof=1) / math.sqrt(m.shape[0])
        else:
            se = np.full(len(sizes), np.nan)
        out[method] = (sizes, mean, se)
    return out


def run_scenario(scn: ScenarioConfig, out_dir=None, plot: bool = False) -> ScenarioResult:
    """Run every repetition, then write ``raw.csv`` and ``mean.csv`` to ``out_dir`` if given.

    Repetitions are spread over ``scn.parallelism`` worker processes. Results are
    collected in repetition order, so the output does not depend on the
    number of workers.
    """
    work = partial(run_repetition, scn)
    reps = range(scn.repetitions)
    records: list[StepRecord] = []
    if scn.parallelism == 1:
        for i in reps:
            records.extend(work(i))
            log.info("repetition %d/%d done", i + 1, scn.repetitions)
    else:
        with ProcessPoolExecutor(max_workers=scn.parallelism) as pool:
            for i, recs in enumerate(pool.map(work, reps)):
                records.extend(recs)
                log.info("repetition %d/%d done", i + 1, scn.repetitions)
    result = ScenarioResult(scn, records)
    if out_dir is not None:
        out_dir = Path(out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
        write_raw_csv(records, out_dir / "raw.csv")
        write_mean_csv(result.curves(), out_dir / "mean.csv")
        if plot:
            emit_plot(result.curves(), out_dir / "curves.svg")
    return result


# ---------------------------------------------------------------- CSV


def _open_for_write(path):
    try:
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_raw_csv(records, path) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RAW_HEADER)
        for r in records:
            w.writerow([r.repetition, r.method, r.training_size, r.chosen_class, repr(float(r.error))])


def write_mean_csv(curves, path) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MEAN_HEADER)
        for method in METHODS:
            if method not in curves:
                continue
            for size, mean, se in zip(*curves[method]):
                w.writerow([method, int(size), repr(float(mean)), repr(float(se))])


def read_raw_csv(path) -> list[StepRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        StepRecord(int(r["repetition"]), r["method"], int(r["training_size"]),
                   int(r["chosen_class"]), float(r["error"]))
        for r in rows
    ]


# ---------------------------------------------------------------- SVG

_COLORS = {"random": "red", "controlled": "blue"}
_W, _H = 640, 420
_ML, _MR, _MT, _MB = 70, 150, 30, 55


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def emit_plot(curves, path=None) -> str:
    """Render mean-error curves as a standalone SVG; random in red, controlled in blue.

    ``curves`` maps method name to ``(training_sizes, mean_errors, ...)``.
    Returns the document and also writes it to ``path`` when given.
    """
    series = {m: (np.asarray(v[0], float), np.asarray(v[1], float)) for m, v in curves.items()}
    if not series or any(len(x) == 0 for x, _ in series.values()):
        raise ValueError("emit_plot needs at least one non-empty curve")
    xs = np.concatenate([x for x, _ in series.values()])
    ys = np.concatenate([y for _, y in series.values()])
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 1.0, x_hi + 1.0
    pad = 0.05 * (y_hi - y_lo) if y_hi > y_lo else 0.01
    y_lo, y_hi = max(0.0, y_lo - pad), y_hi + pad
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return _MT + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_ML}" y1="{_MT + ph}" x2="{_ML + pw}" y2="{_MT + ph}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + ph}" stroke="black"/>',
    ]
    for t in _ticks(x_lo, x_hi):
        parts.append(f'<text x="{px(t):.2f}" y="{_MT + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y_lo, y_hi):
        parts.append(f'<text x="{_ML - 6}" y="{py(t) + 4:.2f}" text-anchor="end">{t:.3f}</text>')
    parts.append(f'<text x="{_ML + pw / 2}" y="{_H - 12}" text-anchor="middle">training set size</text>')
    parts.append(f'<text x="18" y="{_MT + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {_MT + ph / 2})">mean error</text>')
    for i, (method, (x, y)) in enumerate(series.items()):
        color = _COLORS.get(method, "black")
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        parts.append(f'<polyline data-method="{escape(method)}" fill="none" stroke="{color}" '
                     f'stroke-width="2" points="{pts}"/>')
        ly = _MT + 20 + 20 * i
        lx = _ML + pw + 15
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 32}" y="{ly + 4}">{escape(method)}</text>')
    parts.append("</svg>")
    doc = "\n".join(parts) + "\n"
    if path is not None:
        try:
            Path(path).write_text(doc)
        except OSError as exc:
            raise OSError(f"cannot write plot to {path}: {exc}") from exc
    return doc
