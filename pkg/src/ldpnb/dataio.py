"""Dataset loading, schema handling, splitting and normalization.

Categorical values are mapped to 1-based indices in first-seen order and
class labels likewise.  A :class:`Dataset` keeps features in a float matrix;
categorical columns simply hold integral values.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import DegenerateColumnError, EmptyInputError, InvalidInputError, ParseError, SchemaError

log = logging.getLogger(__name__)

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"


@dataclass(frozen=True)
class Column:
    name: str
    kind: str = CATEGORICAL
    categories: tuple[str, ...] = ()
    lo: float | None = None
    hi: float | None = None

    @property
    def n_values(self) -> int:
        return len(self.categories)

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL

    def index_of(self, value: str) -> int:
        """1-based index of a category string, 0 if it was never seen."""
        try:
            return self.categories.index(value) + 1
        except ValueError:
            return 0

    def value_of(self, index: int) -> str:
        return self.categories[index - 1]


@dataclass(frozen=True)
class DatasetSchema:
    columns: tuple[Column, ...]
    class_name: str
    classes: tuple[str, ...]

    def __post_init__(self):
        if len(self.classes) < 1:
            raise SchemaError("schema needs at least one class")
        for col in self.columns:
            if not col.is_categorical and col.lo is not None and not col.lo < col.hi:
                raise SchemaError(f"column {col.name!r}: min must be < max")

    @property
    def n(self) -> int:
        return len(self.columns)

    @property
    def k(self) -> int:
        return len(self.classes)

    @property
    def n_values(self) -> list[int]:
        return [c.n_values for c in self.columns]

    @property
    def all_categorical(self) -> bool:
        return all(c.is_categorical for c in self.columns)

    @property
    def all_continuous(self) -> bool:
        return not any(c.is_categorical for c in self.columns)

    def to_dict(self):
        return {
            "class_name": self.class_name,
            "classes": list(self.classes),
            "columns": [
                {"name": c.name, "kind": c.kind, "categories": list(c.categories), "min": c.lo, "max": c.hi}
                for c in self.columns
            ],
        }


class Record(NamedTuple):
    values: tuple
    label: int


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    schema: DatasetSchema

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise SchemaError(f"feature matrix {X.shape} does not match {y.shape[0]} labels")
        if X.shape[1] != self.schema.n:
            raise SchemaError(f"{X.shape[1]} feature columns but schema has {self.schema.n}")
        if y.size and (y.min() < 1 or y.max() > self.schema.k):
            raise SchemaError("class index outside [1, k]")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.y)

    @property
    def m(self) -> int:
        return len(self.y)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], self.schema)

    def with_features(self, X, columns) -> "Dataset":
        return Dataset(X, self.y, replace(self.schema, columns=tuple(columns)))

    def records(self) -> Iterator[Record]:
        for row, label in zip(self.X, self.y):
            vals = tuple(int(v) if c.is_categorical else float(v)
                         for v, c in zip(row, self.schema.columns))
            yield Record(vals, int(label))


@dataclass
class CsvHints:
    """How to read a delimited file.

    ``class_column`` is a column name (with a header) or a 0-based position;
    negative positions count from the end.  ``continuous`` lists columns to
    parse as reals, or is ``"all"``.
    """

    class_column: str | int = -1
    delimiter: str = ","
    header: bool = True
    continuous: Sequence[str | int] | str = ()
    missing: str = "?"
    classes: Sequence[str] | None = None
    names: Sequence[str] | None = None


def _resolve(column, names):
    if isinstance(column, int):
        if not -len(names) <= column < len(names):
            raise SchemaError(f"column position {column} out of range")
        return column % len(names)
    if column not in names:
        raise SchemaError(f"unknown column {column!r}")
    return names.index(column)


def load_csv(path, hints: CsvHints | None = None) -> tuple[DatasetSchema, Dataset]:
    hints = hints or CsvHints()
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh, delimiter=hints.delimiter), start=1)
                if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ParseError(f"{path} contains no data")
    if hints.header:
        _, names = rows.pop(0)
        names = [n.strip() for n in names]
    else:
        names = list(hints.names) if hints.names else [f"c{i}" for i in range(len(rows[0][1]) if rows else 0)]
    if not rows:
        raise ParseError(f"{path} has a header but no records")
    width = len(names)
    for lineno, r in rows:
        if len(r) != width:
            raise ParseError(f"expected {width} fields, found {len(r)}", line=lineno)

    class_idx = _resolve(hints.class_column, names)
    feature_idx = [i for i in range(width) if i != class_idx]
    if hints.continuous == "all":
        cont = set(feature_idx)
    else:
        cont = {_resolve(c, names) for c in hints.continuous}

    kept = [(lineno, [c.strip() for c in r]) for lineno, r in rows]
    before = len(kept)
    kept = [(lineno, r) for lineno, r in kept if hints.missing not in r]
    if len(kept) < before:
        log.info("dropped %d of %d rows containing missing marker %r", before - len(kept), before, hints.missing)
    if not kept:
        raise ParseError(f"{path}: every row contains missing values")

    classes = list(hints.classes) if hints.classes is not None else []
    fixed_classes = hints.classes is not None
    y = np.empty(len(kept), dtype=np.int64)
    X = np.empty((len(kept), len(feature_idx)))
    cats = {i: [] for i in feature_idx if i not in cont}
    for row_no, (lineno, r) in enumerate(kept):
        label = r[class_idx]
        if label not in classes:
            if fixed_classes:
                raise SchemaError(f"line {lineno}: unknown class value {label!r}")
            classes.append(label)
        y[row_no] = classes.index(label) + 1
        for j, i in enumerate(feature_idx):
            cell = r[i]
            if i in cont:
                try:
                    X[row_no, j] = float(cell)
                except ValueError:
                    raise ParseError(f"column {names[i]!r}: {cell!r} is not a number", line=lineno) from None
            else:
                seen = cats[i]
                if cell not in seen:
                    seen.append(cell)
                X[row_no, j] = seen.index(cell) + 1
    columns = tuple(
        Column(names[i], CONTINUOUS) if i in cont else Column(names[i], CATEGORICAL, tuple(cats[i]))
        for i in feature_idx
    )
    schema = DatasetSchema(columns, names[class_idx], tuple(classes))
    return schema, Dataset(X, y, schema)


def split(data: Dataset, fraction: float, rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    """Random train/test split with ``ceil(fraction * m)`` training rows."""
    if not 0.0 < fraction < 1.0:
        raise InvalidInputError(f"split fraction must lie in (0, 1), got {fraction}")
    m = len(data)
    if m < 2:
        raise EmptyInputError("need at least 2 records to split")
    n_train = min(max(math.ceil(fraction * m), 1), m - 1)
    perm = rng.permutation(m)
    return data.subset(perm[:n_train]), data.subset(perm[n_train:])


def fit_ranges(train: Dataset) -> DatasetSchema:
    """Schema with min/max of every continuous column taken from ``train``."""
    cols = []
    for j, col in enumerate(train.schema.columns):
        if col.is_categorical:
            cols.append(col)
            continue
        lo, hi = float(train.X[:, j].min()), float(train.X[:, j].max())
        if not lo < hi:
            raise DegenerateColumnError(f"column {col.name!r} is constant in the training data")
        cols.append(replace(col, lo=lo, hi=hi))
    return replace(train.schema, columns=tuple(cols))


def normalize(data: Dataset, schema: DatasetSchema) -> Dataset:
    """Map continuous columns affinely onto [-1, 1] using ``schema`` ranges; clip the rest."""
    X = data.X.copy()
    for j, col in enumerate(schema.columns):
        if col.is_categorical:
            continue
        if col.lo is None or not col.lo < col.hi:
            raise DegenerateColumnError(f"column {col.name!r} has no usable range")
        X[:, j] = np.clip(2.0 * (X[:, j] - col.lo) / (col.hi - col.lo) - 1.0, -1.0, 1.0)
    return Dataset(X, data.y, schema)


def normalize_value(x: float, lo: float, hi: float) -> float:
    if not lo < hi:
        raise DegenerateColumnError("min must be < max")
    return float(np.clip(2.0 * (x - lo) / (hi - lo) - 1.0, -1.0, 1.0))
