"""Experiment runner: sweep mechanisms and privacy budgets, report mean accuracy.

Usage::

    ldpnb run configs/car.toml -o car.csv --jobs 4
    ldpnb run configs/diabetes.toml --epsilons 0.5 1 2 --format table

Exit codes: 0 success, 2 bad configuration, 3 file-system problem,
4 bad data or schema.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dataio import CsvHints, Dataset, load_csv, split
from .errors import ConfigError, LDPNBError
from .freq_mech import Mechanism
from .pipeline import Assignment, ContinuousMode, RunConfig, prepare, reference_accuracy, run_once
from .privacy import DEFAULT_THETA, PrivacyParams

log = logging.getLogger("ldpnb")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DATA = 0, 2, 3, 4

COLUMNS = ("dataset", "mechanism", "strategy", "epsilon", "mean_accuracy",
           "std_accuracy", "reps", "reference_accuracy")
REFERENCE = "none"
DEFAULT_EPSILONS = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0)


@dataclass(frozen=True)
class Strategy:
    name: str
    mode: ContinuousMode = ContinuousMode.DISCRETIZE
    n_bins: int = 4
    approach: int = 3
    class_hiding: bool = True
    dimred: str | None = None
    dims: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    path: Path
    hints: CsvHints
    epsilons: tuple[float, ...]
    mechanisms: tuple[Mechanism, ...]
    strategies: tuple[Strategy, ...]
    theta: float = DEFAULT_THETA
    repetitions: int = 100
    split: float = 0.8
    seed: int = 0
    assignment: Assignment = Assignment.ROUND_ROBIN

    def run_config(self, strategy: Strategy, mechanism: Mechanism, epsilon: float) -> RunConfig:
        return RunConfig(
            mechanism=mechanism, privacy=PrivacyParams(epsilon, self.theta), mode=strategy.mode,
            n_bins=strategy.n_bins, approach=strategy.approach, class_hiding=strategy.class_hiding,
            dimred=strategy.dimred, dimred_dims=strategy.dims, assignment=self.assignment,
            split=self.split, repetitions=self.repetitions, seed=self.seed)


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    mechanism: str
    strategy: str
    epsilon: float
    mean_accuracy: float
    std_accuracy: float
    reps: int
    reference_accuracy: float


# -- configuration -----------------------------------------------------------------

def _get(table: dict, key: str, kind, path: str, default=...):
    where = f"{path}.{key}" if path else key
    if key not in table:
        if default is ...:
            raise ConfigError("missing required field", field=where)
        return default
    value = table[key]
    # bool is an int subclass; keep them apart
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise ConfigError(f"expected {getattr(kind, '__name__', kind)}, got {value!r}", field=where)
    return value


def _section(doc: dict, name: str, required=True) -> dict:
    if name not in doc:
        if required:
            raise ConfigError("missing section", field=name)
        return {}
    if not isinstance(doc[name], dict):
        raise ConfigError("expected a table", field=name)
    return doc[name]


def _parse_strategy(table: dict, path: str) -> Strategy:
    name = _get(table, "name", str, path)
    try:
        mode = ContinuousMode(_get(table, "mode", str, path, "discretize"))
    except ValueError:
        raise ConfigError("must be 'discretize' or 'gaussian'", field=f"{path}.mode") from None
    n_bins = _get(table, "n_bins", int, path, 4)
    if n_bins < 2:
        raise ConfigError("need at least 2 bins", field=f"{path}.n_bins")
    approach = _get(table, "approach", int, path, 3)
    if approach not in (1, 2, 3):
        raise ConfigError("must be 1, 2 or 3", field=f"{path}.approach")
    dimred = _get(table, "dimred", str, path, "none").lower()
    if dimred not in ("none", "pca", "dca"):
        raise ConfigError("must be 'none', 'pca' or 'dca'", field=f"{path}.dimred")
    dims = _get(table, "dims", int, path, 1)
    if dims < 1:
        raise ConfigError("must be >= 1", field=f"{path}.dims")
    return Strategy(name, mode, n_bins, approach, _get(table, "class_hiding", bool, path, True),
                    None if dimred == "none" else dimred, dims)


def parse_config(doc: dict, base_dir: Path | str = ".") -> ExperimentConfig:
    """Validate a decoded TOML document; errors name the offending field."""
    ds = _section(doc, "dataset")
    name = _get(ds, "name", str, "dataset")
    path = Path(_get(ds, "path", str, "dataset"))
    if not path.is_absolute():
        path = Path(base_dir) / path
    continuous = ds.get("continuous", [])
    if not (continuous == "all" or (isinstance(continuous, list)
                                    and all(isinstance(c, (str, int)) for c in continuous))):
        raise ConfigError("expected \"all\" or a list of column names", field="dataset.continuous")
    class_column = ds.get("class_column", -1)
    if not isinstance(class_column, (str, int)) or isinstance(class_column, bool):
        raise ConfigError("expected a column name or position", field="dataset.class_column")
    hints = CsvHints(
        class_column=class_column,
        delimiter=_get(ds, "delimiter", str, "dataset", ","),
        header=_get(ds, "header", bool, "dataset", True),
        continuous=continuous,
        missing=_get(ds, "missing", str, "dataset", "?"),
    )

    priv = _section(doc, "privacy", required=False)
    eps = priv.get("epsilons", list(DEFAULT_EPSILONS))
    if not isinstance(eps, list) or not eps:
        raise ConfigError("expected a non-empty list", field="privacy.epsilons")
    epsilons = []
    for i, e in enumerate(eps):
        if isinstance(e, bool) or not isinstance(e, (int, float)) or not e > 0:
            raise ConfigError(f"must be a positive number, got {e!r}", field=f"privacy.epsilons[{i}]")
        epsilons.append(float(e))
    theta = _get(priv, "theta", float, "privacy", DEFAULT_THETA)
    if not 0.0 < theta < 1.0:
        raise ConfigError(f"must lie strictly between 0 and 1, got {theta}", field="privacy.theta")

    exp = _section(doc, "experiment", required=False)
    mechs = exp.get("mechanisms", [m.value for m in Mechanism])
    if not isinstance(mechs, list) or not mechs:
        raise ConfigError("expected a non-empty list", field="experiment.mechanisms")
    mechanisms = []
    for i, m in enumerate(mechs):
        try:
            mechanisms.append(Mechanism.parse(m))
        except (LDPNBError, ValueError, AttributeError):
            raise ConfigError(f"unknown mechanism {m!r}", field=f"experiment.mechanisms[{i}]") from None
    reps = _get(exp, "repetitions", int, "experiment", 100)
    if reps < 1:
        raise ConfigError("must be >= 1", field="experiment.repetitions")
    frac = _get(exp, "split", float, "experiment", 0.8)
    if not 0.0 < frac < 1.0:
        raise ConfigError("must lie in (0, 1)", field="experiment.split")
    try:
        assignment = Assignment(_get(exp, "assignment", str, "experiment", "round_robin"))
    except ValueError:
        raise ConfigError("must be 'round_robin' or 'uniform_random'", field="experiment.assignment") from None

    raw = doc.get("strategy", [{"name": "default"}])
    if not isinstance(raw, list) or not raw:
        raise ConfigError("expected at least one [[strategy]] table", field="strategy")
    strategies = []
    for i, t in enumerate(raw):
        if not isinstance(t, dict):
            raise ConfigError("expected a table", field=f"strategy[{i}]")
        strategies.append(_parse_strategy(t, f"strategy[{i}]"))
    names = [s.name for s in strategies]
    if len(set(names)) != len(names):
        raise ConfigError("strategy names must be unique", field="strategy")

    return ExperimentConfig(name, path, hints, tuple(epsilons), tuple(mechanisms), tuple(strategies),
                            theta, reps, frac, _get(exp, "seed", int, "experiment", 0), assignment)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with path.open("rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"not valid TOML: {exc}") from None
    return parse_config(doc, path.parent)


# -- running -------------------------------------------------------------------------

def _task(args):
    config, data, s_idx, rep = args
    strategy = config.strategies[s_idx]
    train, test = split(data, config.split, np.random.default_rng([config.seed, rep]))
    base = config.run_config(strategy, config.mechanisms[0], config.epsilons[0])
    train, test = prepare(train, test, base)
    accs = {}
    for m_idx, mech in enumerate(config.mechanisms):
        for e_idx, eps in enumerate(config.epsilons):
            rng = np.random.default_rng([config.seed, rep, s_idx, m_idx, e_idx])
            accs[m_idx, e_idx] = run_once(train, test, config.run_config(strategy, mech, eps), rng)
    return s_idx, rep, reference_accuracy(train, test), accs


def run_experiment(config: ExperimentConfig, jobs: int = 1, data: Dataset | None = None) -> list[ResultRow]:
    """Average accuracy per (strategy, mechanism, epsilon) cell plus a reference row per strategy.

    Every repetition of a strategy shares one train/test split across all
    cells, so differences between mechanisms are paired.  Results do not
    depend on ``jobs``.
    """
    if data is None:
        _, data = load_csv(config.path, config.hints)
    tasks = [(config, data, s, r) for s in range(len(config.strategies)) for r in range(config.repetitions)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outputs = [_task(t) for t in tasks]

    S, M, E, R = len(config.strategies), len(config.mechanisms), len(config.epsilons), config.repetitions
    acc = np.empty((S, M, E, R))
    ref = np.empty((S, R))
    for s_idx, rep, ref_acc, cells in outputs:
        ref[s_idx, rep] = ref_acc
        for (m_idx, e_idx), a in cells.items():
            acc[s_idx, m_idx, e_idx, rep] = a

    rows = []
    for s_idx, strategy in enumerate(config.strategies):
        ref_mean = float(ref[s_idx].mean())
        for m_idx, mech in enumerate(config.mechanisms):
            for e_idx in np.argsort(config.epsilons, kind="stable"):
                cell = acc[s_idx, m_idx, e_idx]
                rows.append(ResultRow(config.dataset, mech.value, strategy.name, config.epsilons[e_idx],
                                      float(cell.mean()), float(cell.std()), R, ref_mean))
        rows.append(ResultRow(config.dataset, REFERENCE, strategy.name, math.inf, ref_mean,
                              float(ref[s_idx].std()), R, ref_mean))
    return rows


# -- output --------------------------------------------------------------------------

def _cells(row: ResultRow) -> list[str]:
    return [row.dataset, row.mechanism, row.strategy, repr(row.epsilon), repr(row.mean_accuracy),
            repr(row.std_accuracy), str(row.reps), repr(row.reference_accuracy)]


def format_rows(rows: Sequence[ResultRow], fmt: str = "csv") -> str:
    if not rows:
        raise LDPNBError("no results to emit")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        writer.writerows(_cells(r) for r in rows)
        return buf.getvalue()
    if fmt == "table":
        body = [[r.dataset, r.mechanism, r.strategy, f"{r.epsilon:g}", f"{r.mean_accuracy:.4f}",
                 f"{r.std_accuracy:.4f}", str(r.reps), f"{r.reference_accuracy:.4f}"] for r in rows]
        widths = [max(len(c), *(len(b[i]) for b in body)) for i, c in enumerate(COLUMNS)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(COLUMNS, widths))]
        lines.append("  ".join("-" * w for w in widths))
        lines += ["  ".join(c.rjust(w) if i >= 3 else c.ljust(w) for i, (c, w) in enumerate(zip(b, widths)))
                  for b in body]
        return "\n".join(lines) + "\n"
    raise ConfigError(f"unknown output format {fmt!r}", field="format")


def emit(rows: Sequence[ResultRow], fmt: str = "csv", out=None) -> None:
    """Write ``rows`` to the path ``out`` or, when it is None, to stdout."""
    text = format_rows(rows, fmt)
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def read_results(path) -> list[ResultRow]:
    with Path(path).open(newline="") as fh:
        return [ResultRow(r["dataset"], r["mechanism"], r["strategy"], float(r["epsilon"]),
                          float(r["mean_accuracy"]), float(r["std_accuracy"]), int(r["reps"]),
                          float(r["reference_accuracy"]))
                for r in csv.DictReader(fh)]


# -- entry point ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldpnb", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an accuracy-vs-epsilon sweep from a TOML config")
    run.add_argument("config", type=Path, help="experiment configuration (TOML)")
    run.add_argument("-o", "--output", type=Path, help="write results here instead of stdout")
    run.add_argument("--epsilons", type=float, nargs="+", metavar="EPS", help="override privacy.epsilons")
    run.add_argument("--seed", type=int, help="override experiment.seed")
    run.add_argument("--reps", type=int, help="override experiment.repetitions")
    run.add_argument("-j", "--jobs", type=int, default=1, help="worker processes (default 1)")
    run.add_argument("--format", choices=("csv", "table"), default="csv")
    return parser


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.epsilons:
        if any(not e > 0 for e in args.epsilons):
            raise ConfigError("epsilons must be positive", field="--epsilons")
        changes["epsilons"] = tuple(args.epsilons)
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.reps is not None:
        if args.reps < 1:
            raise ConfigError("must be >= 1", field="--reps")
        changes["repetitions"] = args.reps
    if args.jobs < 1:
        raise ConfigError("must be >= 1", field="--jobs")
    return replace(config, **changes)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _apply_overrides(load_config(args.config), args)
        rows = run_experiment(config, jobs=args.jobs)
        emit(rows, args.format, args.output)
    except ConfigError as exc:
        print(f"ldpnb: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"ldpnb: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except LDPNBError as exc:
        print(f"ldpnb: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
