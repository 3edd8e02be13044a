"""Stage-wise training loop: interpret, pick, understand or cram, organize.

Every stage adds at least one instance to the acceptable set, so a run on
``N`` instances finishes in at most ``N`` stages. After each sub-step the
largest residual over the current subset is checked against ``epsilon``
and logged as a checkpoint; a violation raises ``InvalidStateError``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .agdo import AgdoConfig, agdo_run
from .cramming import cram, find_cram_params
from .errors import DegenerateInstanceError, InvalidInputError, InvalidStateError
from .network import Batch, TwoLayerNet, max_abs_residual
from .organizing import OrganizeConfig, PruneEvent, organize
from .selection import Mode, interpret, pick

log = logging.getLogger(__name__)

UNDERSTANDING = "understanding"
CRAMMING = "cramming"


@dataclass(frozen=True)
class PlmConfig:
    epsilon: float = 0.04836
    epsilon1: float = 1e-7
    eta_understanding: float = 1e-2
    eta_organizing: float = 1e-3
    stop_fraction: float = 0.97
    mode: str = "LTS"
    reg_epochs: int = 100
    lam: float = 1e-4
    init_epochs: int = 5000
    seed: int = 0
    max_outer: int = 50
    inner_epochs: int = 100
    # tuning budget after a node removal during organizing
    prune_max_outer: int = 50
    prune_inner_epochs: int = 100
    check_each_step: bool = False

    def __post_init__(self):
        if not 0 < self.stop_fraction <= 1:
            raise InvalidInputError("stop_fraction must lie in (0, 1]")
        if not self.epsilon > 0:
            raise InvalidInputError("epsilon must be positive")
        Mode.parse(self.mode)

    @property
    def label(self) -> str:
        return f"{Mode.parse(self.mode).value}:{self.reg_epochs}"

    def understanding_agdo(self, max_outer=None) -> AgdoConfig:
        return AgdoConfig(
            eta_init=self.eta_understanding,
            epsilon=self.epsilon,
            epsilon1=self.epsilon1,
            max_outer=max_outer or self.max_outer,
            inner_epochs=self.inner_epochs,
            check_each_step=self.check_each_step,
        )

    def organize_config(self) -> OrganizeConfig:
        return OrganizeConfig(
            reg_epochs=self.reg_epochs,
            lam=self.lam,
            eta_init=self.eta_organizing,
            epsilon=self.epsilon,
            epsilon1=self.epsilon1,
            agdo=AgdoConfig(
                eta_init=self.eta_organizing,
                epsilon=self.epsilon,
                epsilon1=self.epsilon1,
                max_outer=self.prune_max_outer,
                inner_epochs=self.prune_inner_epochs,
                check_each_step=self.check_each_step,
            ),
        )


@dataclass(frozen=True)
class StageRecord:
    stage: int
    n: int
    p_before: int
    p_after: int
    route: str
    prunes: int
    d_n: float
    wall_ms: float = 0.0


@dataclass(frozen=True)
class Checkpoint:
    stage: int
    point: str  # interpret | understanding | cramming | organize
    n: int
    d_n: float


@dataclass
class TrainReport:
    config: PlmConfig
    n_instances: int
    stages: list = field(default_factory=list)
    final_net: TwoLayerNet | None = None
    initial_p: int = 1
    n_acceptable_trace: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)
    prune_events: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    total_time: float = 0.0

    @property
    def target(self) -> int:
        return math.floor(self.config.stop_fraction * (self.n_instances - len(self.skipped)))

    @property
    def final_n_acceptable(self) -> int:
        return self.n_acceptable_trace[-1] if self.n_acceptable_trace else 0

    @property
    def total_prunes(self) -> int:
        return sum(s.prunes for s in self.stages)

    @property
    def route_frequencies(self) -> dict:
        """Percentage of stages taking each route; empty when no stage ran."""
        if not self.stages:
            return {}
        k = sum(s.route == UNDERSTANDING for s in self.stages)
        n = len(self.stages)
        return {UNDERSTANDING: 100.0 * k / n, CRAMMING: 100.0 * (n - k) / n}

    @property
    def tolerance_violations(self) -> list:
        return [c for c in self.checkpoints if not c.d_n <= self.config.epsilon]

    def to_text(self, include_timing: bool = False) -> str:
        """Line-oriented report.

        Lines: ``config`` key=value pairs; ``summary``; one ``stage`` line per
        stage with fields ``stage n p_before p_after route prunes d_n``
        (plus ``wall_ms`` when ``include_timing``); one ``skipped`` line per
        skipped instance. Without timing the text is fully deterministic.
        """
        cfg = " ".join(f"{k}={v}" for k, v in asdict(self.config).items())
        rf = self.route_frequencies
        lines = [
            f"config {cfg}",
            "summary N={} target={} stages={} initial_p={} final_p={} final_n_acceptable={} "
            "prunes={} understanding_pct={:.2f} cramming_pct={:.2f}".format(
                self.n_instances,
                self.target,
                len(self.stages),
                self.initial_p,
                self.final_net.p if self.final_net is not None else 0,
                self.final_n_acceptable,
                self.total_prunes,
                rf.get(UNDERSTANDING, 0.0),
                rf.get(CRAMMING, 0.0),
            ),
        ]
        for s in self.stages:
            line = f"stage {s.stage} {s.n} {s.p_before} {s.p_after} {s.route} {s.prunes} {s.d_n:.17g}"
            if include_timing:
                line += f" {s.wall_ms:.3f}"
            lines.append(line)
        lines.extend(f"skipped {i}" for i in self.skipped)
        if include_timing:
            lines.append(f"time total_s={self.total_time:.6f}")
        return "\n".join(lines) + "\n"


def initialize(dataset, cfg: PlmConfig, rng: np.random.Generator | None = None) -> TwoLayerNet:
    """One-hidden-node network, uniform [-0.5, 0.5] weights, tuned on all data."""
    if len(dataset.y) == 0:
        raise InvalidInputError("empty dataset")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    net = TwoLayerNet.random(dataset.X.shape[1], 1, rng, scale=0.5)
    if cfg.init_epochs <= 0:
        return net
    outer = max(1, math.ceil(cfg.init_epochs / cfg.inner_epochs))
    batch = Batch.from_arrays(dataset.X, dataset.y)
    return agdo_run(net, batch, cfg.understanding_agdo(max_outer=outer)).net


def find_contradictions(dataset, epsilon: float) -> list:
    """Index pairs with identical inputs whose targets differ by more than ``2 epsilon``."""
    groups: dict = {}
    for i, row in enumerate(dataset.X):
        groups.setdefault(row.tobytes(), []).append(i)
    bad = []
    for rows in groups.values():
        if len(rows) < 2:
            continue
        ys = dataset.y[rows]
        lo, hi = rows[int(np.argmin(ys))], rows[int(np.argmax(ys))]
        if dataset.y[hi] - dataset.y[lo] > 2 * epsilon:
            bad.append((lo, hi))
    return bad


class _Subset:
    __slots__ = ("X", "y")

    def __init__(self, X, y):
        self.X, self.y = X, y


def train(dataset, cfg: PlmConfig = PlmConfig()) -> TrainReport:
    N = len(dataset.y)
    if N < 2:
        raise InvalidInputError("training needs at least 2 instances")
    bad = find_contradictions(dataset, cfg.epsilon)
    if bad:
        i, j = bad[0]
        raise DegenerateInstanceError(
            f"instances {i} and {j} share inputs but their targets differ by more than 2*epsilon",
            (i, j),
        )

    t0 = time.perf_counter()
    eps = cfg.epsilon
    mode = Mode.parse(cfg.mode)
    rng = np.random.default_rng(cfg.seed)
    understanding = cfg.understanding_agdo()
    org_cfg = cfg.organize_config()
    report = TrainReport(config=cfg, n_instances=N)

    net = initialize(dataset, cfg, rng)
    report.initial_p = net.p
    rows = np.arange(N)  # dataset rows still in play (skips remove entries)
    work = _Subset(dataset.X, dataset.y)

    def check(stage, point, batch):
        d = max_abs_residual(net, batch)
        report.checkpoints.append(Checkpoint(stage, point, len(batch), d))
        if not d <= eps:
            raise InvalidStateError(f"stage {stage}: max residual {d!r} exceeds epsilon after {point}")

    stage = 0
    while True:
        order = interpret(net, work, eps, mode)
        report.n_acceptable_trace.append(order.n_acceptable)
        if order.n_acceptable:
            check(stage, "interpret", pick(order, order.n_acceptable, work))
        target = math.floor(cfg.stop_fraction * len(rows))
        if order.n_acceptable >= target:
            break
        if stage >= N:
            raise InvalidStateError("stage bound exceeded without reaching the stopping target")

        stage += 1
        ts = time.perf_counter()
        n = order.n_acceptable + 1
        batch = pick(order, n, work)
        saved = net
        p_before = net.p
        result = agdo_run(net, batch, understanding)
        if result.accepted:
            net = result.net
            route = UNDERSTANDING
        else:
            net = saved
            try:
                params = find_cram_params(batch, n - 1, rng)
            except DegenerateInstanceError as exc:
                # duplicate input within tolerance: drop the instance and re-interpret
                skipped = int(rows[batch.index[-1]])
                log.warning("skipping instance %d: %s", skipped, exc)
                report.skipped.append(skipped)
                rows = np.delete(rows, batch.index[-1])
                work = _Subset(dataset.X[rows], dataset.y[rows])
                stage -= 1
                continue
            net = cram(net, batch, n - 1, params, epsilon=eps)
            route = CRAMMING
        check(stage, route, batch)

        net, prunes = organize(net, batch, org_cfg, events=report.prune_events)
        check(stage, "organize", batch)
        report.stages.append(
            StageRecord(
                stage=stage,
                n=n,
                p_before=p_before,
                p_after=net.p,
                route=route,
                prunes=prunes,
                d_n=max_abs_residual(net, batch),
                wall_ms=1e3 * (time.perf_counter() - ts),
            )
        )
        log.debug("stage %d n=%d p=%d->%d %s prunes=%d", stage, n, p_before, net.p, route, prunes)

    report.final_net = net
    report.total_time = time.perf_counter() - t0
    return report


__all__ = [
    "CRAMMING",
    "UNDERSTANDING",
    "Checkpoint",
    "PlmConfig",
    "PruneEvent",
    "StageRecord",
    "TrainReport",
    "find_contradictions",
    "initialize",
    "train",
]
