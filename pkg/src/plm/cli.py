"""Command-line driver.

    python -m plm train   --synthetic n=200 m=5 --version LTS:500 --seed 7
    python -m plm compare --dataset copper.csv --target y --divisor 100000 --scale-x
    python -m plm report  --out runs/
    python -m plm synth-data --synthetic n=500 m=5 noise=0.05 --out data.csv

Settings come from an optional INI file (``--config``) with sections
``[data]``, ``[run]`` and ``[plm]``; command-line flags override it. Any
``PlmConfig`` field can be set in ``[plm]`` or with ``--set key=value``.
The default output directory is taken from ``$PLM_OUT`` (else ``plm_runs``).
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .data import SynthSpec, generate_synthetic, save_csv
from .errors import PLMError
from .experiments import (
    STANDARD_VERSIONS,
    DataSource,
    Version,
    collect_runs,
    compare,
    format_table,
    report_tables,
    run_matrix,
    summaries_csv,
    summarize,
    trajectories_csv,
    write_run,
)
from .trainer import PlmConfig

log = logging.getLogger("plm")

SYNTH_KEYS = {"n": "n_instances", "m": "n_features", "target": "target", "noise": "noise_sd",
              "teacher_nodes": "teacher_nodes"}


class UsageError(Exception):
    pass


def _parse_pairs(tokens, what):
    out = {}
    for tok in tokens:
        for part in tok.replace(",", " ").split():
            if "=" not in part:
                raise UsageError(f"{what}: expected key=value, got {part!r}")
            k, v = part.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _coerce(field_type, value):
    if isinstance(value, str):
        kind = str(field_type)
        if "bool" in kind:
            if value.lower() not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise UsageError(f"expected a boolean, got {value!r}")
            return _truthy(value)
        if "int" in kind:
            return int(value)
        if "float" in kind:
            return float(value)
    return value


def parse_synth(tokens) -> SynthSpec:
    pairs = _parse_pairs(tokens, "--synthetic")
    kwargs = {}
    types = {f.name: f.type for f in dataclasses.fields(SynthSpec)}
    for k, v in pairs.items():
        if k not in SYNTH_KEYS:
            raise UsageError(f"--synthetic: unknown key {k!r} (known: {', '.join(SYNTH_KEYS)})")
        name = SYNTH_KEYS[k]
        kwargs[name] = _coerce(types[name], v)
    return SynthSpec(**kwargs)


def plm_config(overrides: dict) -> PlmConfig:
    fields = {f.name: f.type for f in dataclasses.fields(PlmConfig)}
    kwargs = {}
    for k, v in overrides.items():
        if k not in fields:
            raise UsageError(f"unknown PLM setting {k!r}")
        kwargs[k] = _coerce(fields[k], v)
    return PlmConfig(**kwargs)


def _read_config(path):
    cp = configparser.ConfigParser()
    if path:
        if not Path(path).exists():
            raise UsageError(f"config file not found: {path}")
        try:
            cp.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise UsageError(f"config file {path}: {exc}") from None
    return {s: dict(cp[s]) for s in cp.sections()}


def _truthy(v):
    return str(v).lower() in ("1", "true", "yes", "on")


def resolve(args) -> dict:
    """Merge config-file values with command-line flags (flags win)."""
    cfg = _read_config(args.config)
    data, run, plm = cfg.get("data", {}), cfg.get("run", {}), dict(cfg.get("plm", {}))
    plm.update(_parse_pairs(args.set or [], "--set"))
    if args.epsilon is not None:
        plm["epsilon"] = args.epsilon

    synth_tokens = args.synthetic if args.synthetic is not None else (
        [data["synthetic"]] if "synthetic" in data else None)
    dataset = args.dataset or data.get("dataset")
    source = None
    if synth_tokens is not None or dataset:
        if synth_tokens is not None and dataset:
            raise UsageError("use either --dataset or --synthetic, not both")
        features = args.features or data.get("features")
        source = DataSource(
            csv_path=dataset,
            features=tuple(f.strip() for f in features.split(",")) if features else None,
            target=args.target or data.get("target"),
            divisor=float(args.divisor if args.divisor is not None else data.get("divisor", 1.0)),
            scale_x=args.scale_x or _truthy(data.get("scale_x", "false")),
            synth=parse_synth(synth_tokens) if synth_tokens is not None else None,
            train_fraction=float(args.train_fraction if args.train_fraction is not None
                                 else data.get("train_fraction", 0.6)),
        )

    version_texts = args.version or [v for v in run.get("versions", "").replace(",", " ").split() if v]
    versions = [Version.parse(v) for v in version_texts] or list(STANDARD_VERSIONS)
    return {
        "source": source,
        "versions": versions,
        "n_datasets": int(args.n_datasets if args.n_datasets is not None else run.get("n_datasets", 1)),
        "seed": int(args.seed if args.seed is not None else run.get("seed", 0)),
        "workers": int(args.workers if args.workers is not None else run.get("workers", 1)),
        "out": Path(args.out or run.get("out") or os.environ.get("PLM_OUT", "plm_runs")),
        "plm": plm_config(plm),
    }


def _require_source(settings):
    if settings["source"] is None:
        raise UsageError("no dataset given: pass --dataset PATH or --synthetic key=value ...")
    return settings["source"]


def cmd_train(args) -> int:
    s = resolve(args)
    source = _require_source(s)
    results = run_matrix(source, s["versions"], s["n_datasets"], s["plm"], s["seed"], s["workers"])
    out = s["out"]
    for r in results:
        write_run(r, out)
    summaries = summarize(results)
    (out / "summary.csv").write_text(summaries_csv(summaries, include_time=False), encoding="utf-8")
    (out / "trajectories.csv").write_text(trajectories_csv(summaries), encoding="utf-8")
    rows = [(f"{x.version} #{x.dataset}", [x.stages, x.final_p, x.prunes,
                                          x.understanding_pct, x.cramming_pct]) for x in summaries]
    print(format_table("Runs", ["stages", "final_p", "prunes", "understanding %", "cramming %"], rows, "{:.2f}"))
    print(f"wrote {len(results)} runs to {out}")
    return 0


def cmd_compare(args) -> int:
    s = resolve(args)
    source = _require_source(s)
    res = compare(source, s["n_datasets"], s["plm"], s["seed"], s["workers"])
    out = s["out"]
    out.mkdir(parents=True, exist_ok=True)
    text = res.table()
    (out / "compare.txt").write_text(text, encoding="utf-8")
    (out / "compare.csv").write_text(res.to_csv(), encoding="utf-8")
    print(text)
    return 0


def cmd_report(args) -> int:
    s = resolve(args)
    summaries = collect_runs(s["out"])
    text = report_tables(summaries)
    (s["out"] / "tables.txt").write_text(text, encoding="utf-8")
    (s["out"] / "runs.csv").write_text(summaries_csv(summaries), encoding="utf-8")
    (s["out"] / "trajectories.csv").write_text(trajectories_csv(summaries), encoding="utf-8")
    print(text)
    return 0


def cmd_synth_data(args) -> int:
    s = resolve(args)
    source = _require_source(s)
    if source.synth is None:
        raise UsageError("synth-data needs --synthetic")
    spec = dataclasses.replace(source.synth, seed=s["seed"])
    out = s["out"]
    path = out if out.suffix == ".csv" else out / f"synthetic_seed{spec.seed}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    save_csv(generate_synthetic(spec), path)
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [data], [run], [plm] sections")
    common.add_argument("--dataset", help="CSV file (header row, decimal values)")
    common.add_argument("--target", help="target column of --dataset (default: last)")
    common.add_argument("--features", help="comma-separated feature columns (default: all but target)")
    common.add_argument("--divisor", type=float, help="divide the target by this value")
    common.add_argument("--scale-x", action="store_true", help="min-max scale inputs on the training split")
    common.add_argument("--train-fraction", type=float, help="training share of each random split (default 0.6)")
    common.add_argument("--synthetic", nargs="*", metavar="KEY=VALUE",
                        help="synthetic data: n, m, target=teacher|piecewise-linear, noise, teacher_nodes")
    common.add_argument("--version", action="append", metavar="MODE:REG_EPOCHS",
                        help="trainer version, repeatable (default: PO:100 LTS:0 LTS:100 LTS:500)")
    common.add_argument("--n-datasets", type=int, help="number of random datasets (default 1)")
    common.add_argument("--seed", type=int, help="base seed (default 0)")
    common.add_argument("--epsilon", type=float, help="acceptability tolerance")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a PlmConfig field")
    common.add_argument("--out", help="output directory (default $PLM_OUT or ./plm_runs)")
    common.add_argument("--workers", type=int, help="parallel worker processes (default 1)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="plm", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
        ("train", cmd_train, "train versions x datasets and write per-run reports"),
        ("compare", cmd_compare, "compare against linear regression and fixed-size networks"),
        ("report", cmd_report, "aggregate run directories into summary tables"),
        ("synth-data", cmd_synth_data, "write a synthetic dataset as CSV"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"plm {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except PLMError as exc:
        print(f"plm {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
