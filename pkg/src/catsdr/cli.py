"""Command-line interface: estimate, tune, order, simulate, bench, project.

Every run writes its outputs as CSV plus a plain-text manifest of resolved
parameters in the same key=value format the --config flag reads, so a run
can be reproduced with `catsdr <command> --config <manifest>`.

Exit codes: 0 success, 1 usage, 2 data error, 3 estimation failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .baselines import BaselineSpec, fit_baseline
from .data import LabeledDataset
from .datasets import load_csv, merge_labels, split
from .errors import DataError, EstimationError, ParameterError
from .localfit import OptimizerConfig
from .made import made_fit
from .opcg import opcg_fit
from .order import predictor_augmentation
from .simbench import SimConfig, generate_simulation, run_table1
from .tuning import (
    default_grid,
    tune_kfold,
    tune_supervised,
    tune_unsupervised,
    tune_weighted,
)

__all__ = ["main"]

COMMANDS = ("estimate", "tune", "order", "simulate", "bench", "project")
METHODS = ("opcg", "made", "opg", "pw_opcg", "pl_opcg", "sir")
TUNE_METHODS = ("km", "skm", "wkm", "kfold")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route through the 0/1/2/3
    # convention instead
    def error(self, message):
        raise _UsageError(message)


@dataclass
class RunConfig:
    """Resolved parameters of one CLI run; also the manifest content."""

    command: str
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    def require(self, *names):
        missing = [n for n in names if self.values.get(n) is None]
        if missing:
            raise _UsageError(
                f"{self.command} requires {', '.join('--' + n.replace('_', '-') for n in missing)}"
            )


def _read_config(path) -> dict:
    values = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise _UsageError(f"cannot read config {path}: {exc}") from None
    with fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise _UsageError(f"{path}: line {line_number}: expected key=value")
            key, _, value = line.partition("=")
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _write_manifest(path, config: RunConfig):
    with open(path, "w") as fh:
        fh.write(f"command={config.command}\n")
        fh.write(f"version={__version__}\n")
        for key, value in sorted(config.values.items()):
            if value is None or key == "config":
                continue
            if isinstance(value, (list, tuple)):
                value = ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            fh.write(f"{key}={value}\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _matrix_rows(M):
    return [[float(v) for v in row] for row in np.atleast_2d(M)]


def _parse_grid(text) -> np.ndarray:
    if text is None:
        return default_grid()
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise _UsageError(f"grid {text!r}: expected low:high:size")
        low, high, size = float(parts[0]), float(parts[1]), int(parts[2])
        return default_grid(low, high, size)
    return np.array(sorted(float(v) for v in text.split(",")))


def _parse_clusters(text):
    if text is None:
        return 2
    text = str(text)
    if "," in text:
        return [int(v) for v in text.split(",")]
    return int(text)


def _parse_merge(text):
    groups = []
    for part in str(text).split(";"):
        part = part.strip()
        if part:
            groups.append(tuple(int(v) for v in part.split(",")))
    if not groups:
        raise _UsageError(f"merge {text!r}: expected groups like '1,2;3'")
    return groups


def _load_input(config: RunConfig) -> LabeledDataset:
    config.require("input", "label_column")
    data = load_csv(config.input, config.label_column, is_ordinal=config.ordinal)
    if config.values.get("merge"):
        data = merge_labels(data, _parse_merge(config.merge))
    return data


def _optimizer_config(config: RunConfig):
    max_iters = config.values.get("max_iters")
    if max_iters is None:
        return None
    return OptimizerConfig(max_iters=int(max_iters))


def _out(config: RunConfig, name: str) -> str:
    import os

    out_dir = config.values.get("out_dir") or "."
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _write_basis_outputs(config: RunConfig, fit, p: int):
    d = fit.basis.shape[1]
    _write_csv(_out(config, "basis.csv"),
               [f"b{j+1}" for j in range(d)], _matrix_rows(fit.basis))
    _write_csv(_out(config, "basis_std.csv"),
               [f"b{j+1}" for j in range(d)], _matrix_rows(fit.basis_std))
    record = fit.record
    _write_csv(_out(config, "standardization.csv"),
               ["mean", "scale"],
               [[float(m), float(s)] for m, s in zip(record.mean, record.scale)])
    eigenvalues = getattr(fit, "eigenvalues", None)
    if eigenvalues is not None:
        _write_csv(_out(config, "eigenvalues.csv"), ["eigenvalue"],
                   [[float(v)] for v in eigenvalues])


def _cmd_estimate(config: RunConfig) -> int:
    config.require("method", "d")
    data = _load_input(config)
    method = config.method
    if method not in METHODS:
        raise _UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    d = int(config.d)
    opt = _optimizer_config(config)
    threads = int(config.values.get("threads") or 1)
    if method == "opcg":
        config.require("h")
        fit = opcg_fit(data, float(config.h), d, config=opt,
                       refine=int(config.values.get("refine", 5)), threads=threads)
        print(f"opcg: eigenvalues {np.round(fit.eigenvalues[:d], 6).tolist()}")
    elif method == "made":
        config.require("h")
        fit = made_fit(data, float(config.h), d, config=opt,
                       refine=int(config.values.get("refine", 1)) > 0)
        print(f"made: objective {fit.objective!r} "
              f"outer_iterations {fit.outer_iterations} converged {fit.converged}")
    else:
        h = float(config.h) if config.values.get("h") is not None else None
        spec = BaselineSpec(method=method, d=d, h=h,
                            tikhonov=float(config.values.get("tikhonov", 0.0)))
        fit = fit_baseline(spec, data, config=opt)
    _write_basis_outputs(config, fit, data.p)
    _write_manifest(_out(config, "manifest.txt"), config)
    print(f"basis written to {_out(config, 'basis.csv')}")
    return 0


def _cmd_tune(config: RunConfig) -> int:
    config.require("d")
    data = _load_input(config)
    method = config.values.get("tune_method") or "kfold"
    if method not in TUNE_METHODS:
        raise _UsageError(
            f"unknown tuning method {method!r}; choose from {', '.join(TUNE_METHODS)}"
        )
    grid = _parse_grid(config.values.get("grid"))
    d = int(config.d)
    k_total = int(config.values.get("k_total") or data.m)
    clusters = _parse_clusters(config.values.get("clusters_per_class"))
    opt = _optimizer_config(config)
    seed = int(config.values.get("seed") or 0)
    if method == "kfold":
        curve = tune_kfold(data, grid, d, k_total, clusters,
                           folds=int(config.values.get("folds") or 3),
                           config=opt, seed=seed)
    else:
        tune_path = config.values.get("tune_input")
        if tune_path:
            tune_set = load_csv(tune_path, config.label_column,
                                is_ordinal=config.ordinal)
            if config.values.get("merge"):
                tune_set = merge_labels(tune_set, _parse_merge(config.merge))
        else:
            data, tune_set = split(data, 2 / 3, stratified=True, seed=seed)
        if method == "km":
            curve = tune_unsupervised(data, tune_set, grid, d, k_total,
                                      config=opt, seed=seed)
        elif method == "skm":
            curve = tune_supervised(data, tune_set, grid, d, clusters,
                                    config=opt, seed=seed)
        else:
            curve = tune_weighted(data, tune_set, grid, d, k_total, clusters,
                                  config=opt, seed=seed)
    _write_csv(_out(config, "tuning_curve.csv"),
               ["h", "ratio_km", "ratio_skm", "ratio_weighted"],
               [[float(h), float(a), float(b), float(c)] for h, a, b, c in
                zip(curve.grid, curve.ratio_km, curve.ratio_skm, curve.ratio_weighted)])
    _write_manifest(_out(config, "manifest.txt"), config)
    print(f"h_selected={curve.h_selected!r} (method {curve.method})")
    return 0


def _cmd_order(config: RunConfig) -> int:
    config.require("h", "d_max")
    data = _load_input(config)
    est = predictor_augmentation(
        data,
        float(config.h),
        int(config.d_max),
        r=int(config.r) if config.values.get("r") is not None else None,
        reps=int(config.values.get("reps") or 200),
        seed=int(config.values.get("seed") or 0),
        config=_optimizer_config(config),
    )
    _write_csv(_out(config, "order_curve.csv"),
               ["k", "objective", "eigenvector_component", "eigenvalue_component"],
               [[k, float(est.objective_curve[k]), float(est.eigenvector_curve[k]),
                 float(est.eigenvalue_curve[k])]
                for k in range(est.objective_curve.size)])
    _write_manifest(_out(config, "manifest.txt"), config)
    print(f"d_hat={est.d_hat}")
    return 0


def _write_dataset_csv(path, data: LabeledDataset):
    names = data.column_names or tuple(f"x{i+1}" for i in range(data.p))
    rows = [[float(v) for v in row] + [int(label)]
            for row, label in zip(data.X, data.labels)]
    _write_csv(path, list(names) + ["label"], rows)


def _cmd_simulate(config: RunConfig) -> int:
    sim = SimConfig(
        n_per_cluster_train=int(config.values.get("n_train") or 50),
        n_per_cluster_tune=int(config.values.get("n_tune") or 30),
        n_per_cluster_test=int(config.values.get("n_test") or 30),
        cluster_sd=float(config.values.get("cluster_sd") or 0.5),
        seed=int(config.values.get("seed") or 0),
    )
    train, tune_set, test, beta_true = generate_simulation(sim)
    _write_dataset_csv(_out(config, "train.csv"), train)
    _write_dataset_csv(_out(config, "tune.csv"), tune_set)
    _write_dataset_csv(_out(config, "test.csv"), test)
    _write_csv(_out(config, "beta_true.csv"),
               [f"b{j+1}" for j in range(beta_true.shape[1])],
               _matrix_rows(beta_true))
    _write_manifest(_out(config, "manifest.txt"), config)
    print(f"simulation written to {config.values.get('out_dir') or '.'} "
          f"(n={train.n}/{tune_set.n}/{test.n})")
    return 0


def _cmd_bench(config: RunConfig) -> int:
    mode = config.values.get("mode") or "backends"
    if mode == "backends":
        from .benchmarks import run_backend_benchmark

        rows = run_backend_benchmark(seed=int(config.values.get("seed") or 0))
        _write_csv(_out(config, "bench_backends.csv"),
                   ["kernel", "backend", "best_us_per_call", "speedup"],
                   rows)
        for kernel, backend, us, speedup in rows:
            print(f"{kernel:12s} {backend:8s} {us:10.1f} us/call  x{speedup:.2f}")
    elif mode == "table1":
        n_seeds = int(config.values.get("seeds") or 20)
        result = run_table1(range(n_seeds), h=float(config.values.get("h") or 1.0),
                            d=int(config.values.get("d") or 2),
                            out_path=_out(config, "table1.csv"))
        for method, value in result["mean"].items():
            print(f"{method:8s} mean distance {value:.4f}")
    else:
        raise _UsageError(f"unknown bench mode {mode!r}; choose backends or table1")
    _write_manifest(_out(config, "manifest.txt"), config)
    return 0


def _read_basis_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(cell) for cell in row] for row in reader if row]
    if not rows:
        raise DataError(f"{path}: no basis rows")
    basis = np.asarray(rows)
    if len(header) != basis.shape[1]:
        raise DataError(f"{path}: header/body width mismatch")
    return basis


def _cmd_project(config: RunConfig) -> int:
    config.require("basis")
    data = _load_input(config)
    basis = _read_basis_csv(config.basis)
    if basis.shape[0] != data.p:
        raise DataError(
            f"basis has {basis.shape[0]} rows but data has {data.p} predictors"
        )
    proj = data.X @ basis
    _write_csv(_out(config, "projected.csv"),
               [f"sp{j+1}" for j in range(proj.shape[1])] + ["label"],
               [[float(v) for v in row] + [int(label)]
                for row, label in zip(proj, data.labels)])
    _write_manifest(_out(config, "manifest.txt"), config)
    print(f"projected predictors written to {_out(config, 'projected.csv')}")
    return 0


_DISPATCH = {
    "estimate": _cmd_estimate,
    "tune": _cmd_tune,
    "order": _cmd_order,
    "simulate": _cmd_simulate,
    "bench": _cmd_bench,
    "project": _cmd_project,
}

# flag name, value metavar (None for store_true), help
_FLAGS = {
    "estimate": [
        ("input", "CSV", "input dataset"),
        ("label-column", "NAME", "label column name"),
        ("ordinal", None, "treat labels as ordered"),
        ("merge", "GROUPS", "merge classes, e.g. '1,2,3;4;5,6'"),
        ("method", "NAME", "opcg | made | opg | pw_opcg | pl_opcg | sir"),
        ("h", "REAL", "bandwidth"),
        ("d", "INT", "target dimension"),
        ("refine", "INT", "refinement rounds (opcg) or on/off (made)"),
        ("tikhonov", "REAL", "SIR covariance regularization"),
        ("max-iters", "INT", "local solver iteration cap"),
        ("threads", "INT", "worker cap for per-anchor fits"),
        ("out-dir", "DIR", "output directory"),
    ],
    "tune": [
        ("input", "CSV", "training dataset"),
        ("tune-input", "CSV", "separate tuning dataset (km/skm/wkm)"),
        ("label-column", "NAME", "label column name"),
        ("ordinal", None, "treat labels as ordered"),
        ("merge", "GROUPS", "merge classes"),
        ("tune-method", "NAME", "km | skm | wkm | kfold (default kfold)"),
        ("grid", "SPEC", "comma list or low:high:size (default 0.3:10:20)"),
        ("d", "INT", "target dimension"),
        ("k-total", "INT", "clusters for the unsupervised criterion"),
        ("clusters-per-class", "SPEC", "scalar or comma list"),
        ("folds", "INT", "folds for kfold (default 3)"),
        ("seed", "INT", "RNG seed (default 0)"),
        ("max-iters", "INT", "local solver iteration cap"),
        ("out-dir", "DIR", "output directory"),
    ],
    "order": [
        ("input", "CSV", "input dataset"),
        ("label-column", "NAME", "label column name"),
        ("ordinal", None, "treat labels as ordered"),
        ("merge", "GROUPS", "merge classes"),
        ("h", "REAL", "bandwidth"),
        ("d-max", "INT", "largest candidate dimension"),
        ("r", "INT", "appended noise predictors (default ceil(p/5))"),
        ("reps", "INT", "replications (default 200)"),
        ("seed", "INT", "RNG seed (default 0)"),
        ("max-iters", "INT", "local solver iteration cap"),
        ("out-dir", "DIR", "output directory"),
    ],
    "simulate": [
        ("seed", "INT", "RNG seed (default 0)"),
        ("n-train", "INT", "training points per cluster (default 50)"),
        ("n-tune", "INT", "tuning points per cluster (default 30)"),
        ("n-test", "INT", "test points per cluster (default 30)"),
        ("cluster-sd", "REAL", "within-cluster standard deviation (default 0.5)"),
        ("out-dir", "DIR", "output directory"),
    ],
    "bench": [
        ("mode", "NAME", "backends | table1 (default backends)"),
        ("seeds", "INT", "seeds for table1 mode (default 20)"),
        ("h", "REAL", "bandwidth for table1 mode (default 1)"),
        ("d", "INT", "dimension for table1 mode (default 2)"),
        ("seed", "INT", "RNG seed (default 0)"),
        ("out-dir", "DIR", "output directory"),
    ],
    "project": [
        ("input", "CSV", "input dataset"),
        ("label-column", "NAME", "label column name"),
        ("ordinal", None, "treat labels as ordered"),
        ("merge", "GROUPS", "merge classes"),
        ("basis", "CSV", "basis file from estimate"),
        ("out-dir", "DIR", "output directory"),
    ],
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="catsdr",
                     description="Forward sufficient dimension reduction for "
                                 "categorical and ordinal responses")
    parser.add_argument("--version", action="version", version=f"catsdr {__version__}")
    subparsers = parser.add_subparsers(dest="command")
    for command in COMMANDS:
        sub = subparsers.add_parser(command, add_help=True)
        sub.add_argument("--config", metavar="FILE",
                         help="key=value file of defaults (a manifest works)")
        for name, metavar, help_text in _FLAGS[command]:
            flag = "--" + name
            if metavar is None:
                sub.add_argument(flag, action="store_true", default=None,
                                 help=help_text)
            else:
                sub.add_argument(flag, metavar=metavar, help=help_text)
    return parser


def _resolve(args: argparse.Namespace, file_values: dict) -> RunConfig:
    values = dict(file_values)
    for key, value in vars(args).items():
        if key in ("command",) or value is None:
            continue
        values[key] = value
    ordinal = values.get("ordinal")
    values["ordinal"] = str(ordinal).lower() in ("1", "true", "yes", "on") \
        if not isinstance(ordinal, bool) else ordinal
    return RunConfig(command=args.command, values=values)


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _build_parser()
    try:
        # a manifest names its command, so `catsdr --config manifest` runs as-is
        if "--config" in argv:
            file_values = _read_config(argv[argv.index("--config") + 1])
            has_command = any(a in COMMANDS for a in argv)
            if not has_command:
                command = file_values.get("command")
                if command not in COMMANDS:
                    raise _UsageError(f"config names no valid command (got {command!r})")
                argv = [command] + argv
        else:
            file_values = {}
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        return _DISPATCH[args.command](_resolve(args, file_values))
    except _UsageError as exc:
        print(f"catsdr: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"catsdr: missing file: {exc}", file=sys.stderr)
        return 1
    except ParameterError as exc:
        print(f"catsdr: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"catsdr: data error: {exc}", file=sys.stderr)
        return 2
    except EstimationError as exc:
        print(f"catsdr: estimation failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
