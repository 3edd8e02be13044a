"""Datasets: CSV ingestion, lagged features, scaling, splits, synthetic data.

Every random operation takes an integer seed and draws from
``numpy.random.Generator(PCG64(seed))``, whose bit stream is fixed across
platforms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import InsufficientHistoryError, InvalidInputError, ParseError
from .network import TwoLayerNet


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple = ()
    index: np.ndarray | None = None
    target_divisor: float = 1.0

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, ndmin=2)
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise InvalidInputError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if np.isnan(X).any() or np.isnan(y).any():
            raise InvalidInputError("dataset contains NaN entries")
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise InvalidInputError("one feature name per column is required")
        index = np.arange(y.shape[0]) if self.index is None else np.asarray(self.index).reshape(-1)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "index", index)

    def __len__(self):
        return self.y.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> Dataset:
        rows = np.asarray(rows)
        return replace(self, X=self.X[rows], y=self.y[rows], index=self.index[rows])


# -- CSV ---------------------------------------------------------------------


def load_csv(path, features=None, target=None) -> Dataset:
    """Read a comma-separated file with a header row.

    ``features`` lists the input columns (default: every column except the
    target); ``target`` names the output column (default: the last one).
    Rows are numbered as in the file, header = row 1.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc.strerror})") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ParseError(f"{path}: empty file")
        header = [h.strip() for h in header]
        target = target or header[-1]
        if features is None:
            features = [h for h in header if h != target]
        missing = [c for c in [*features, target] if c not in header]
        if missing:
            raise ParseError(f"{path}: missing column(s) {', '.join(missing)}")
        cols = [header.index(c) for c in features]
        tcol = header.index(target)
        X, y = [], []
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: row {rownum}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(row[c]) for c in cols]
                target_val = float(row[tcol])
            except ValueError:
                raise ParseError(f"{path}: row {rownum}: non-numeric or missing value") from None
            if any(math.isnan(v) for v in vals) or math.isnan(target_val):
                raise ParseError(f"{path}: row {rownum}: missing value")
            X.append(vals)
            y.append(target_val)
    if not y:
        raise ParseError(f"{path}: no data rows")
    return Dataset(np.array(X).reshape(len(y), len(features)), np.array(y), tuple(features))


def save_csv(ds: Dataset, path, target_name: str = "y") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*ds.feature_names, target_name])
        for xrow, yval in zip(ds.X, ds.y):
            writer.writerow([f"{v:.17g}" for v in xrow] + [f"{yval:.17g}"])


# -- lagged features ---------------------------------------------------------


@dataclass(frozen=True)
class LagSchema:
    """Feature columns as ``(series, lag)`` pairs plus the lead-``horizon`` target."""

    columns: tuple
    target_series: str
    horizon: int = 4

    @property
    def max_lag(self) -> int:
        return max(lag for _, lag in self.columns)

    def names(self) -> tuple:
        return tuple(s if lag == 0 else f"{s}_lag{lag}" for s, lag in self.columns)


COPPER_SCHEMA = LagSchema(
    columns=(
        ("crude_oil", 0),
        ("copper_yr", 0),
        ("copper_yr", 1),
        ("copper_yr", 2),
        ("copper_yr", 3),
        ("copper_lme", 0),
        ("gold", 0),
        ("silver", 0),
        ("nickel", 0),
        ("aluminum", 0),
        ("zinc", 0),
        ("iron", 0),
        ("us_inflation", 0),
        ("cn_inflation", 0),
        ("usd_clp", 0),
        ("usd_pen", 0),
        ("usd_rmb", 0),
        ("usd_eur", 0),
    ),
    target_series="copper_yr",
    horizon=4,
)


def build_lagged_features(raw, schema: LagSchema = COPPER_SCHEMA) -> Dataset:
    """Assemble one row per usable epoch from aligned series.

    ``raw`` maps series name to a 1-D array over a common time index. Row
    ``t`` holds each ``series[t - lag]`` and targets ``target[t + horizon]``,
    so a series of length ``T`` yields ``T - max_lag - horizon`` rows.
    """
    series = {name: np.asarray(vals, dtype=np.float64) for name, vals in raw.items()}
    needed = {s for s, _ in schema.columns} | {schema.target_series}
    missing = sorted(needed - series.keys())
    if missing:
        raise InvalidInputError(f"missing series: {', '.join(missing)}")
    lengths = {len(series[s]) for s in needed}
    if len(lengths) != 1:
        raise InvalidInputError("all series must share the same time index")
    T = lengths.pop()
    lo, hi = schema.max_lag, T - schema.horizon
    if hi - lo < 1:
        raise InsufficientHistoryError(
            f"need at least {schema.max_lag + schema.horizon + 1} epochs, got {T}"
        )
    t = np.arange(lo, hi)
    X = np.column_stack([series[s][t - lag] for s, lag in schema.columns])
    y = series[schema.target_series][t + schema.horizon]
    return Dataset(X, y, schema.names(), index=t)


# -- scaling -----------------------------------------------------------------


def normalize_target(ds: Dataset, divisor: float) -> Dataset:
    if not divisor > 0:
        raise InvalidInputError("divisor must be positive")
    return replace(ds, y=ds.y / divisor, target_divisor=ds.target_divisor * divisor)


def denormalize_target(ds: Dataset) -> Dataset:
    return replace(ds, y=ds.y * ds.target_divisor, target_divisor=1.0)


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    """Per-column affine map of the fitted range onto [0, 1]."""

    lo: np.ndarray
    span: np.ndarray

    @classmethod
    def fit(cls, ds: Dataset) -> MinMaxScaler:
        lo = ds.X.min(axis=0)
        span = ds.X.max(axis=0) - lo
        return cls(lo, np.where(span > 0, span, 1.0))

    def transform(self, ds: Dataset) -> Dataset:
        return replace(ds, X=(ds.X - self.lo) / self.span)


# -- splitting ---------------------------------------------------------------


def random_split(ds: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Sample ``round(train_fraction * N)`` training rows without replacement."""
    if not 0 < train_fraction < 1:
        raise InvalidInputError("train_fraction must lie in (0, 1)")
    N = len(ds)
    k = int(math.floor(train_fraction * N + 0.5))
    perm = np.random.default_rng(seed).permutation(N)
    return ds.subset(np.sort(perm[:k])), ds.subset(np.sort(perm[k:]))


# -- synthetic data ----------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    n_instances: int = 200
    n_features: int = 5
    target: str = "teacher"  # or "piecewise-linear"
    noise_sd: float = 0.0
    seed: int = 0
    teacher_nodes: int = 5

    def __post_init__(self):
        if self.n_instances < 10:
            raise InvalidInputError("n_instances must be >= 10")
        if self.n_features < 1:
            raise InvalidInputError("n_features must be >= 1")
        if self.target not in ("teacher", "piecewise-linear"):
            raise InvalidInputError(f"unknown synthetic target {self.target!r}")
        if self.noise_sd < 0:
            raise InvalidInputError("noise_sd must be >= 0")


def _random_teacher(rng, m, p) -> TwoLayerNet:
    # kinks placed through random points of the unit cube so every node bends inside it
    w = rng.standard_normal((p, m))
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    anchors = rng.uniform(0.2, 0.8, size=(p, m))
    bias = -np.sum(w * anchors, axis=1)
    out = np.concatenate([[0.5], rng.uniform(-0.6, 0.6, size=p)])
    return TwoLayerNet(np.column_stack([bias, w]), out)


def _hinge_teacher(m) -> TwoLayerNet:
    # 0.3 + 0.8 |s - 0.5| - 0.6 relu(x1 - 0.7), s = mean of the inputs
    mean_w = np.full(m, 1.0 / m)
    first = np.zeros(m)
    first[0] = 1.0
    hidden = np.array([
        np.concatenate([[-0.5], mean_w]),
        np.concatenate([[0.5], -mean_w]),
        np.concatenate([[-0.7], first]),
    ])
    return TwoLayerNet(hidden, [0.3, 0.8, 0.8, -0.6])


def synthetic_teacher(spec: SynthSpec) -> TwoLayerNet:
    """The noiseless target function used by ``generate_synthetic``."""
    if spec.target == "piecewise-linear":
        return _hinge_teacher(spec.n_features)
    return _random_teacher(np.random.default_rng(spec.seed), spec.n_features, spec.teacher_nodes)


def generate_synthetic(spec: SynthSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    if spec.target == "teacher":
        teacher = _random_teacher(rng, spec.n_features, spec.teacher_nodes)
    else:
        teacher = _hinge_teacher(spec.n_features)
    X = rng.uniform(0.0, 1.0, size=(spec.n_instances, spec.n_features))
    y = teacher(X)
    if spec.noise_sd > 0:
        y = y + rng.normal(0.0, spec.noise_sd, size=spec.n_instances)
    return Dataset(X, y)
