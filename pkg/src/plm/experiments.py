"""Experiment matrix: versions x datasets, baseline comparison, summary tables.

A *version* is an ordering mode plus a regularizing-epoch budget, written
``MODE:REG_EPOCHS`` (e.g. ``LTS:500``). Dataset ``i`` of a matrix uses seed
``seed + i`` for data generation, the train/test split and the trainer.

Each run directory holds

* ``report.txt``  deterministic stage log (see ``TrainReport.to_text``)
* ``stages.csv``  ``stage,n,p_before,p_after,route,prunes,d_n``
* ``metrics.csv`` MAE figures of the final network
* ``network.txt`` final network snapshot
* ``timing.csv``  wall-clock times (the only non-deterministic file)
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import network
from .baselines import fit_backprop_2lnn, fit_linear, mae, mae_majority_split, summary_stats
from .data import MinMaxScaler, SynthSpec, generate_synthetic, load_csv, normalize_target, random_split
from .errors import InvalidInputError, ParseError
from .selection import Mode
from .trainer import CRAMMING, UNDERSTANDING, PlmConfig, TrainReport, train


@dataclass(frozen=True, order=True)
class Version:
    mode: str
    reg_epochs: int

    @classmethod
    def parse(cls, text: str) -> Version:
        try:
            mode, reg = str(text).split(":")
            return cls(Mode.parse(mode).value, int(reg))
        except ValueError:
            raise InvalidInputError(f"version must look like MODE:REG_EPOCHS, got {text!r}") from None

    @property
    def label(self) -> str:
        return f"{self.mode}:{self.reg_epochs}"

    @property
    def dirname(self) -> str:
        return f"{self.mode}-{self.reg_epochs}"


STANDARD_VERSIONS = tuple(Version.parse(v) for v in ("PO:100", "LTS:0", "LTS:100", "LTS:500"))


@dataclass(frozen=True)
class DataSource:
    """Where datasets come from: a CSV file or a synthetic generator."""

    csv_path: str | None = None
    features: tuple | None = None
    target: str | None = None
    divisor: float = 1.0
    scale_x: bool = False
    synth: SynthSpec | None = None
    train_fraction: float = 0.6

    def __post_init__(self):
        if (self.csv_path is None) == (self.synth is None):
            raise InvalidInputError("give exactly one of a CSV path or synthetic settings")

    def make(self, i: int, seed: int):
        """Train/test pair for dataset ``i``."""
        if self.synth is not None:
            full = generate_synthetic(replace(self.synth, seed=seed + i))
        else:
            full = load_csv(self.csv_path, list(self.features) if self.features else None, self.target)
        if self.divisor != 1.0:
            full = normalize_target(full, self.divisor)
        tr, te = random_split(full, self.train_fraction, seed + i)
        if self.scale_x:
            scaler = MinMaxScaler.fit(tr)
            tr, te = scaler.transform(tr), scaler.transform(te)
        return tr, te


@dataclass
class RunResult:
    version: Version
    dataset: int
    report: TrainReport
    majority_mae: float
    non_majority_mae: float | None
    test_mae: float | None

    @property
    def final_p(self) -> int:
        return self.report.final_net.p


def majority_count(n: int, stop_fraction: float) -> int:
    return max(1, math.floor(stop_fraction * n))


def run_one(train_ds, test_ds, cfg: PlmConfig, version: Version, dataset: int) -> RunResult:
    report = train(train_ds, cfg)
    net = report.final_net
    maj, non_maj = mae_majority_split(net, train_ds, majority_count(len(train_ds), cfg.stop_fraction))
    test = mae(net, test_ds) if test_ds is not None and len(test_ds) else None
    return RunResult(version, dataset, report, maj, non_maj, test)


def _run_job(job):
    source, version, i, seed, cfg = job
    tr, te = source.make(i, seed)
    cfg = replace(cfg, mode=version.mode, reg_epochs=version.reg_epochs, seed=seed + i)
    return run_one(tr, te, cfg, version, i)


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_matrix(source: DataSource, versions, n_datasets: int, cfg: PlmConfig = PlmConfig(),
               seed: int = 0, workers: int = 1) -> list[RunResult]:
    """Train every version on every dataset; results ordered by version, then dataset."""
    if not versions:
        raise InvalidInputError("at least one version is required")
    if n_datasets < 1:
        raise InvalidInputError("n_datasets must be >= 1")
    jobs = [(source, v, i, seed, cfg) for v in versions for i in range(n_datasets)]
    return _map(_run_job, jobs, workers)


# -- per-run files -----------------------------------------------------------


def stages_csv(report: TrainReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "n", "p_before", "p_after", "route", "prunes", "d_n"])
    for s in report.stages:
        w.writerow([s.stage, s.n, s.p_before, s.p_after, s.route, s.prunes, f"{s.d_n:.17g}"])
    return buf.getvalue()


def _fmt(v):
    return "" if v is None else f"{v:.17g}"


def write_run(result: RunResult, out_dir) -> Path:
    d = Path(out_dir) / result.version.dirname / f"run_{result.dataset:03d}"
    d.mkdir(parents=True, exist_ok=True)
    r = result.report
    (d / "report.txt").write_text(r.to_text(), encoding="utf-8")
    (d / "stages.csv").write_text(stages_csv(r), encoding="utf-8")
    network.save(r.final_net, d / "network.txt")
    (d / "metrics.csv").write_text(
        "version,dataset,majority_mae,non_majority_mae,test_mae\n"
        f"{result.version.label},{result.dataset},{_fmt(result.majority_mae)},"
        f"{_fmt(result.non_majority_mae)},{_fmt(result.test_mae)}\n",
        encoding="utf-8",
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "wall_ms"])
    for s in r.stages:
        w.writerow([s.stage, f"{s.wall_ms:.3f}"])
    w.writerow(["total", f"{1e3 * r.total_time:.3f}"])
    (d / "timing.csv").write_text(buf.getvalue(), encoding="utf-8")
    return d


# -- aggregation -------------------------------------------------------------


@dataclass
class RunSummary:
    """Figures of one run, recomputed from its files."""

    version: str
    dataset: int
    stages: int
    understanding_pct: float | None
    cramming_pct: float | None
    final_p: int
    prunes: int
    train_time_s: float | None
    majority_mae: float | None
    non_majority_mae: float | None
    test_mae: float | None
    trajectory: list  # (stage, n, p_after)


def _opt_float(s):
    return float(s) if s not in (None, "") else None


def read_run(run_dir) -> RunSummary:
    d = Path(run_dir)
    try:
        with (d / "stages.csv").open(encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        with (d / "metrics.csv").open(encoding="utf-8") as fh:
            metrics = next(csv.DictReader(fh))
        final_p = network.load(d / "network.txt").p
    except (OSError, StopIteration) as exc:
        raise ParseError(f"{d}: incomplete run directory ({exc})") from None
    total = None
    if (d / "timing.csv").exists():
        with (d / "timing.csv").open(encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                if row["stage"] == "total":
                    total = float(row["wall_ms"]) / 1e3
    n_stages = len(rows)
    k = sum(r["route"] == UNDERSTANDING for r in rows)
    return RunSummary(
        version=metrics["version"],
        dataset=int(metrics["dataset"]),
        stages=n_stages,
        understanding_pct=100.0 * k / n_stages if n_stages else None,
        cramming_pct=100.0 * (n_stages - k) / n_stages if n_stages else None,
        final_p=final_p,
        prunes=sum(int(r["prunes"]) for r in rows),
        train_time_s=total,
        majority_mae=_opt_float(metrics["majority_mae"]),
        non_majority_mae=_opt_float(metrics["non_majority_mae"]),
        test_mae=_opt_float(metrics["test_mae"]),
        trajectory=[(int(r["stage"]), int(r["n"]), int(r["p_after"])) for r in rows],
    )


def collect_runs(out_dir) -> list[RunSummary]:
    dirs = sorted(p.parent for p in Path(out_dir).glob("*/run_*/report.txt"))
    if not dirs:
        raise ParseError(f"{out_dir}: no run directories found")
    return [read_run(d) for d in dirs]


def summarize(results) -> list[RunSummary]:
    """RunSummary objects straight from in-memory results."""
    out = []
    for r in results:
        rep = r.report
        rf = rep.route_frequencies
        out.append(RunSummary(
            version=r.version.label,
            dataset=r.dataset,
            stages=len(rep.stages),
            understanding_pct=rf.get(UNDERSTANDING),
            cramming_pct=rf.get(CRAMMING),
            final_p=r.final_p,
            prunes=rep.total_prunes,
            train_time_s=rep.total_time,
            majority_mae=r.majority_mae,
            non_majority_mae=r.non_majority_mae,
            test_mae=r.test_mae,
            trajectory=[(s.stage, s.n, s.p_after) for s in rep.stages],
        ))
    return out


def _version_key(label):
    v = Version.parse(label)
    return (v.mode != "PO", v.reg_epochs)


def format_table(title, columns, rows, fmt="{:.4f}") -> str:
    """Aligned text table; ``rows`` are ``(label, [values...])``."""
    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, (int, np.integer)):
            return str(v)
        return v if isinstance(v, str) else fmt.format(v)

    body = [[label, *map(cell, vals)] for label, vals in rows]
    header = ["", *columns]
    widths = [max(len(r[j]) for r in [header, *body]) for j in range(len(header))]
    line = lambda r: "  ".join(s.rjust(w) for s, w in zip(r, widths))
    rule = "-" * len(line(header))
    return "\n".join([title, rule, line(header), rule, *map(line, body), rule]) + "\n"


def _stat_rows(by_version, attr, fmt_pct=False):
    labels = list(by_version)
    stats = {}
    for v in labels:
        vals = [getattr(s, attr) for s in by_version[v] if getattr(s, attr) is not None]
        stats[v] = summary_stats(vals) if vals else None
    return [(k, [stats[v][k] if stats[v] else None for v in labels]) for k in ("Min", "Max", "Avg", "SD")]


def report_tables(summaries) -> str:
    """Route frequencies, final/pruned nodes, training time and MAE tables."""
    by_version: dict = {}
    for s in sorted(summaries, key=lambda s: (_version_key(s.version), s.dataset)):
        by_version.setdefault(s.version, []).append(s)
    cols = list(by_version)
    out = [
        format_table("Understanding route frequency (%)", cols, _stat_rows(by_version, "understanding_pct"), "{:.2f}"),
        format_table("Cramming route frequency (%)", cols, _stat_rows(by_version, "cramming_pct"), "{:.2f}"),
        format_table("Hidden nodes at the end of learning", cols, _stat_rows(by_version, "final_p"), "{:.2f}"),
        format_table("Hidden nodes pruned over learning", cols, _stat_rows(by_version, "prunes"), "{:.2f}"),
    ]
    if all(s.train_time_s is not None for s in summaries):
        out.append(format_table("Training time (s)", cols, _stat_rows(by_version, "train_time_s"), "{:.2f}"))
    for attr, title in (("majority_mae", "MAE training data (majority)"),
                        ("non_majority_mae", "MAE training data (non-majority)"),
                        ("test_mae", "MAE testing data")):
        out.append(format_table(title, cols, _stat_rows(by_version, attr)))
    ratios = []
    for v in cols:
        test = [s.test_mae for s in by_version[v] if s.test_mae is not None]
        maj = [s.majority_mae for s in by_version[v] if s.majority_mae is not None]
        ratios.append(float(np.mean(test) / np.mean(maj)) if test and maj else None)
    out.append(format_table("Ratio of average test MAE to average majority MAE", cols, [("ratio", ratios)], "{:.3f}"))
    return "\n".join(out)


def summaries_csv(summaries, include_time: bool = True) -> str:
    """One row per run; without time the output is deterministic."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["version", "dataset", "stages", "understanding_pct", "cramming_pct", "final_p", "prunes"]
    tail = ["majority_mae", "non_majority_mae", "test_mae"]
    w.writerow(cols + (["train_time_s"] if include_time else []) + tail)
    for s in summaries:
        row = [s.version, s.dataset, s.stages, _fmt(s.understanding_pct), _fmt(s.cramming_pct),
               s.final_p, s.prunes]
        if include_time:
            row.append(_fmt(s.train_time_s))
        w.writerow(row + [_fmt(s.majority_mae), _fmt(s.non_majority_mae), _fmt(s.test_mae)])
    return buf.getvalue()


def trajectories_csv(summaries) -> str:
    """``version,dataset,stage,n,p`` rows for hidden-node trajectory plots."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["version", "dataset", "stage", "n", "p"])
    for s in summaries:
        for stage, n, p in s.trajectory:
            w.writerow([s.version, s.dataset, stage, n, p])
    return buf.getvalue()


# -- comparison against baselines -------------------------------------------

COMPARE_MODELS = ("Linear Regression", "2LNN_13", "2LNN_23", "2LNN_v", "PLM-LTS-500")


@dataclass
class CompareResult:
    epsilon: float
    linear_train_avg: float
    train_mae: dict  # model -> list over datasets
    test_mae: dict
    plm_p: list
    models: tuple = COMPARE_MODELS

    def table(self) -> str:
        cols = list(self.models)
        parts = [f"epsilon = {self.epsilon:.17g} (2 x average linear-regression training MAE)\n"]
        for title, data in (("MAE training data", self.train_mae), ("MAE testing data", self.test_mae)):
            stats = {m: summary_stats(data[m]) for m in cols}
            rows = [(k, [stats[m][k] for m in cols]) for k in ("Min", "Max", "Avg", "SD")]
            parts.append(format_table(title, cols, rows))
        return "\n".join(parts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "model", "train_mae", "test_mae"])
        for i in range(len(self.plm_p)):
            for m in self.models:
                w.writerow([i, m, _fmt(self.train_mae[m][i]), _fmt(self.test_mae[m][i])])
        return buf.getvalue()


def _compare_job(job):
    source, i, seed, cfg, epsilon, epochs, fixed_sizes = job
    tr, te = source.make(i, seed)
    plm_cfg = replace(cfg, mode="LTS", reg_epochs=500, epsilon=epsilon, seed=seed + i)
    result = run_one(tr, te, plm_cfg, Version("LTS", 500), i)
    trained = {}
    for name, p in (*((f"2LNN_{k}", k) for k in fixed_sizes), ("2LNN_v", result.final_p)):
        net = fit_backprop_2lnn(tr, p, epochs=epochs, seed=seed + i, eta=cfg.eta_understanding).net
        trained[name] = (mae(net, tr), mae(net, te))
    return result, trained


def compare(source: DataSource, n_datasets: int, cfg: PlmConfig = PlmConfig(), seed: int = 0,
            workers: int = 1, epochs: int = 500, fixed_sizes=(13, 23)) -> CompareResult:
    """Linear regression, fixed-size backprop networks and the LTS:500 trainer.

    The trainer's epsilon is twice the linear model's training MAE averaged
    over all datasets; ``2LNN_v`` uses the trainer's final node count.
    """
    splits = [source.make(i, seed) for i in range(n_datasets)]
    lin = [fit_linear(tr) for tr, _ in splits]
    lin_train = [mae(model, tr) for model, (tr, _) in zip(lin, splits)]
    lin_test = [mae(model, te) for model, (_, te) in zip(lin, splits)]
    avg = float(np.mean(lin_train))
    epsilon = 2.0 * avg
    jobs = [(source, i, seed, cfg, epsilon, epochs, tuple(fixed_sizes)) for i in range(n_datasets)]
    results = _map(_compare_job, jobs, workers)
    models = ("Linear Regression", *(f"2LNN_{k}" for k in fixed_sizes), "2LNN_v", "PLM-LTS-500")
    train_mae = {m: [] for m in models}
    test_mae = {m: [] for m in models}
    train_mae["Linear Regression"], test_mae["Linear Regression"] = lin_train, lin_test
    for plm_result, trained in results:
        train_mae["PLM-LTS-500"].append(plm_result.majority_mae)
        test_mae["PLM-LTS-500"].append(plm_result.test_mae)
        for name, (tr_mae, te_mae) in trained.items():
            train_mae[name].append(tr_mae)
            test_mae[name].append(te_mae)
    return CompareResult(epsilon, avg, train_mae, test_mae, [r.final_p for r, _ in results], models)
