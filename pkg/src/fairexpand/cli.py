"""Command-line interface: train / ablate / sweep / census / synth.

A run directory receives runlog.jsonl, summary.csv, edges_trajectory.csv,
and config_resolved.txt; the resolved config file is itself a valid
``--config`` input and reproduces the run exactly.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .data import generate_synthetic, load_dataset, make_splits, save_dataset, SPLIT_RATIOS
from .errors import ConfigError, FairExpandError
from .pipeline import (AblationRow, FairExpandConfig, PipelineError, RunLog,
                       run_ablation, run_fairexpand, run_sweep)
from .similarity import threshold_census

SUMMARY_HEADER = "dataset,strategy,seed,k,f1,bias,balance,nor,edges"
TRAJECTORY_HEADER = "k,i,j,score,origin"

# Per-dataset defaults for the published desk-scale setups.
DATASET_DEFAULTS: dict[str, dict] = {
    "coauthor": {"s0_count": 50, "m_add": 10, "tau": 0.7, "lr": 0.01, "hidden_dim": 32},
    "amazon": {"s0_count": 50, "m_add": 10, "tau": 0.9, "lr": 0.005, "hidden_dim": 64},
    "flickr": {"s0_count": 20, "m_add": 10, "tau": 0.7, "lr": 0.01, "hidden_dim": 128},
    "pubmed": {"s0_count": 20, "m_add": 10, "tau": 0.7, "lr": 0.01, "hidden_dim": 16},
    "cora": {"s0_count": 20, "m_add": 10, "tau": 0.4, "lr": 0.005, "hidden_dim": 64},
    "citeseer": {"s0_count": 20, "m_add": 10, "tau": 0.4, "lr": 0.01, "hidden_dim": 64},
}

# config-file key -> FairExpandConfig field
_KEY_TO_FIELD = {"lambda": "lambda_", "k": "k_iters",
                 "feature_split": "feature_split_mode"}
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}
_PATH_KEYS = ("dataset", "edges", "features", "labels")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise UsageError(f"{message}\n{self.format_usage()}")


def _config_keys() -> dict[str, type]:
    out = {}
    for f in fields(FairExpandConfig):
        key = _FIELD_TO_KEY.get(f.name, f.name)
        if f.name in ("split_seed", "sim_seed"):
            out[key] = int
        elif f.type in ("bool",):
            out[key] = bool
        elif f.type in ("int",):
            out[key] = int
        elif f.type in ("float",):
            out[key] = float
        else:
            out[key] = str
    return out


def _parse_value(key: str, text: str, kind: type):
    text = text.strip()
    if kind is bool:
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"config key {key!r}: expected a boolean, got {text!r}")
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"config key {key!r}: could not parse {text!r}") from None


def read_config_file(path) -> dict:
    """Parse flat ``key = value`` lines; '#' starts a comment."""
    kinds = _config_keys()
    out = {}
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in text.split("=", 1))
            if key in _PATH_KEYS:
                out[key] = value
            elif key in kinds:
                out[key] = _parse_value(key, value, kinds[key])
            else:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
    return out


def resolve_config(file_values: dict, cli_values: dict) -> dict:
    """Defaults <- per-dataset table <- config file <- CLI flags."""
    resolved: dict = {}
    for f in fields(FairExpandConfig):
        resolved[_FIELD_TO_KEY.get(f.name, f.name)] = f.default
    for key in _PATH_KEYS:
        resolved[key] = None
    name = cli_values.get("dataset") or file_values.get("dataset")
    if name and name.lower() in DATASET_DEFAULTS:
        resolved.update(DATASET_DEFAULTS[name.lower()])
    if name:
        resolved["dataset"] = name
    resolved.update(file_values)
    resolved.update({k: v for k, v in cli_values.items() if v is not None})
    return resolved


def config_from_resolved(resolved: dict) -> FairExpandConfig:
    kwargs = {}
    for f in fields(FairExpandConfig):
        key = _FIELD_TO_KEY.get(f.name, f.name)
        if key in resolved and resolved[key] is not None:
            kwargs[f.name] = resolved[key]
    return FairExpandConfig(**kwargs)


def write_config_resolved(path: Path, resolved: dict,
                          config: FairExpandConfig) -> None:
    """Persist the fully-resolved run settings, seeds pinned."""
    final = dict(resolved)
    final["split_seed"] = config.resolved_split_seed
    final["sim_seed"] = config.resolved_sim_seed
    with path.open("w") as fh:
        for key in sorted(final):
            if final[key] is None:
                continue
            fh.write(f"{key} = {final[key]}\n")


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def _summary_line(dataset: str, strategy: str, seed: int, rec) -> str:
    return (f"{dataset},{strategy},{seed},{rec.k},{_fmt(rec.test_f1)},"
            f"{_fmt(rec.bias)},{_fmt(rec.balance)},{_fmt(rec.nor)},{rec.edges}")


def write_run_outputs(out_dir: Path, runlog: RunLog) -> None:
    with (out_dir / "summary.csv").open("w") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for rec in runlog.records:
            fh.write(_summary_line(runlog.dataset, runlog.strategy,
                                   runlog.seed, rec) + "\n")
    write_runlog_jsonl(out_dir / "runlog.jsonl", runlog)
    write_trajectory(out_dir / "edges_trajectory.csv", runlog)


def write_runlog_jsonl(path: Path, runlog: RunLog, append: bool = False) -> None:
    mode = "a" if append else "w"
    with path.open(mode) as fh:
        for rec in runlog.records:
            fh.write(json.dumps({
                "dataset": runlog.dataset, "strategy": runlog.strategy,
                "seed": runlog.seed, "k": rec.k, "f1": rec.test_f1,
                "bias": rec.bias, "balance": rec.balance, "nor": rec.nor,
                "edges": rec.edges, "epochs": rec.epochs,
                "wall_ms": rec.wall_ms}) + "\n")


def write_trajectory(path: Path, runlog: RunLog) -> None:
    with path.open("w") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for k, edge in runlog.trajectory:
            fh.write(f"{k},{edge.i},{edge.j},{edge.score:.6f},{edge.origin}\n")


def _add_dataset_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--edges", required=required, help="edge list file ('i j' per line)")
    p.add_argument("--features", required=required, help="headerless feature CSV")
    p.add_argument("--labels", required=required, help="one integer label per line")
    p.add_argument("--dataset", help="dataset name (selects built-in defaults)")


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--strategy",
                   choices=["dot_product", "gcn", "pull", "epsilon_greedy_pull"])
    p.add_argument("--feature-split", action="store_true", default=None,
                   help="use half the features for similarity, half for the model")
    p.add_argument("--out-dir", default="fairexpand_out")


def build_parser() -> _Parser:
    parser = _Parser(prog="fairexpand",
                     description="Individually fair node representations "
                                 "from partial similarity information.")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p_train = sub.add_parser("train", help="one full FairExpand run")
    _add_dataset_args(p_train)
    _add_run_args(p_train)

    p_ablate = sub.add_parser("ablate", help="strategy ablation table")
    _add_dataset_args(p_ablate)
    _add_run_args(p_ablate)
    p_ablate.add_argument("--strategies",
                          default="dot_product,gcn,pull,epsilon_greedy_pull",
                          help="comma-separated strategy list")

    p_sweep = sub.add_parser("sweep", help="(|S0|, m_add) sensitivity grid")
    _add_dataset_args(p_sweep)
    _add_run_args(p_sweep)
    p_sweep.add_argument("--s0-counts", required=True,
                         help="comma-separated |S0| values")
    p_sweep.add_argument("--m-adds", required=True,
                         help="comma-separated m_add values")

    p_census = sub.add_parser("census", help="similar-pair counts per threshold")
    _add_dataset_args(p_census)
    _add_run_args(p_census)
    p_census.add_argument("--taus", default="0.4,0.5,0.6,0.7,0.8,0.9")
    p_census.add_argument("--subset", choices=["train", "all"], default="train")

    p_synth = sub.add_parser("synth", help="emit a synthetic dataset to files")
    p_synth.add_argument("--blocks", default="20,20",
                         help="comma-separated block sizes")
    p_synth.add_argument("--p-in", type=float, default=0.5)
    p_synth.add_argument("--p-out", type=float, default=0.05)
    p_synth.add_argument("--dim", type=int, default=8)
    p_synth.add_argument("--noise", type=float, default=0.3)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out-dir", default="fairexpand_out")
    return parser


def _resolve_run(args) -> tuple[dict, FairExpandConfig]:
    file_values = read_config_file(args.config) if args.config else {}
    cli_values = {"dataset": args.dataset, "edges": args.edges,
                  "features": args.features, "labels": args.labels,
                  "seed": args.seed, "strategy": args.strategy,
                  "feature_split": args.feature_split}
    resolved = resolve_config(file_values, cli_values)
    for key in ("edges", "features", "labels"):
        if not resolved.get(key):
            raise UsageError(f"missing --{key} (or config key '{key}')")
    return resolved, config_from_resolved(resolved)


def _load(resolved) -> "Dataset":
    return load_dataset(resolved["edges"], resolved["features"],
                        resolved["labels"], name=resolved.get("dataset"))


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated integer list, got {text!r}") from None


def _cmd_train(args) -> int:
    resolved, config = _resolve_run(args)
    dataset = _load(resolved)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config_resolved(out_dir / "config_resolved.txt", resolved, config)
    try:
        _, runlog = run_fairexpand(dataset, config)
    except PipelineError as exc:
        write_runlog_jsonl(out_dir / "runlog.jsonl", exc.runlog)
        raise
    write_run_outputs(out_dir, runlog)
    print(f"wrote {out_dir}/summary.csv "
          f"(final f1={runlog.final.f1:.4f}, bias={runlog.final.bias:.4f})")
    return 0


def _cmd_ablate(args) -> int:
    resolved, config = _resolve_run(args)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    dataset = _load(resolved)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config_resolved(out_dir / "config_resolved.txt", resolved, config)
    rows = run_ablation(dataset, config, strategies)
    with (out_dir / "summary.csv").open("w") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for row in rows:
            if row.runlog is None:
                fh.write(f"{dataset.name},{row.name},{config.seed},,,,,,\n")
                continue
            final = row.runlog.final
            last = row.runlog.records[-1]
            fh.write(f"{dataset.name},{row.name},{config.seed},{last.k},"
                     f"{_fmt(final.f1)},{_fmt(final.bias)},{_fmt(final.balance)},"
                     f"{_fmt(final.nor)},{last.edges}\n")
    first = True
    for row in rows:
        if row.runlog is None:
            print(f"row {row.name} failed: {row.error}", file=sys.stderr)
            continue
        write_runlog_jsonl(out_dir / "runlog.jsonl", row.runlog, append=not first)
        first = False
        write_trajectory(out_dir / f"edges_trajectory_{row.name}.csv", row.runlog)
    print(f"wrote {out_dir}/summary.csv ({len(rows)} rows)")
    return 0


def _cmd_sweep(args) -> int:
    resolved, config = _resolve_run(args)
    dataset = _load(resolved)
    s0_counts = _int_list(args.s0_counts)
    m_adds = _int_list(args.m_adds)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config_resolved(out_dir / "config_resolved.txt", resolved, config)
    cells = run_sweep(dataset, config, s0_counts, m_adds)
    with (out_dir / "sweep.csv").open("w") as fh:
        fh.write("s0_count,m_add,f1,bias\n")
        for cell in cells:
            if cell.record is None:
                fh.write(f"{cell.s0_count},{cell.m_add},,\n")
            else:
                fh.write(f"{cell.s0_count},{cell.m_add},"
                         f"{_fmt(cell.record.f1)},{_fmt(cell.record.bias)}\n")
    with (out_dir / "summary.csv").open("w") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for cell in cells:
            if cell.record is None:
                continue
            fh.write(f"{dataset.name},{config.strategy},{config.seed},"
                     f"{config.k_iters},{_fmt(cell.record.f1)},"
                     f"{_fmt(cell.record.bias)},{_fmt(cell.record.balance)},"
                     f"{_fmt(cell.record.nor)},\n")
    print(f"wrote {out_dir}/sweep.csv ({len(cells)} cells)")
    return 0


def _cmd_census(args) -> int:
    resolved, config = _resolve_run(args)
    dataset = _load(resolved)
    taus = [float(tok) for tok in args.taus.split(",") if tok.strip()]
    if args.subset == "train":
        splits = make_splits(dataset.n, SPLIT_RATIOS,
                             np.random.default_rng(config.resolved_split_seed))
        subset = splits.train
    else:
        subset = np.arange(dataset.n)
    counts = threshold_census(dataset.features, subset, taus)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "census.csv").open("w") as fh:
        fh.write("tau,count\n")
        for tau in taus:
            fh.write(f"{tau},{counts[tau]}\n")
    print(f"wrote {out_dir}/census.csv")
    return 0


def _cmd_synth(args) -> int:
    blocks = _int_list(args.blocks)
    dataset = generate_synthetic(blocks, args.p_in, args.p_out, args.dim,
                                 args.noise, np.random.default_rng(args.seed))
    paths = save_dataset(dataset, args.out_dir)
    print(f"wrote {paths['edges']}, {paths['features']}, {paths['labels']} "
          f"(n={dataset.n}, m={dataset.graph.num_edges})")
    return 0


_COMMANDS = {"train": _cmd_train, "ablate": _cmd_ablate, "sweep": _cmd_sweep,
             "census": _cmd_census, "synth": _cmd_synth}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage())
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (FairExpandError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
