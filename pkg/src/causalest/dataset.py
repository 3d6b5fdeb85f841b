"""Analytic dataset: outcome, binary treatment and confounder columns."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError

OUTCOME_TYPES = ("binary", "bounded")
MISSING_POLICIES = ("fail", "drop_rows")


@dataclass(frozen=True)
class ColumnSpec:
    """Names of the outcome, treatment and (ordered) confounder columns."""

    outcome_name: str
    treatment_name: str
    confounder_names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "confounder_names", tuple(self.confounder_names))
        names = [self.outcome_name, self.treatment_name, *self.confounder_names]
        dupes = sorted({x for x in names if names.count(x) > 1})
        if dupes:
            raise ConfigError(f"column names must be distinct, repeated: {dupes}")

    @property
    def columns(self) -> list[str]:
        return [self.outcome_name, self.treatment_name, *self.confounder_names]


def infer_kind(values: np.ndarray) -> str:
    """Classify a confounder column as ``binary``, ``categorical`` or ``continuous``."""
    values = np.asarray(values, dtype=float)
    if values.size and np.all((values == 0) | (values == 1)):
        return "binary"
    if np.all(np.isfinite(values)) and np.all(values == np.round(values)):
        return "categorical"
    return "continuous"


def _check_binary(values, name, offset=0):
    bad = np.flatnonzero(~((values == 0) | (values == 1)))
    if bad.size:
        row = int(bad[0])
        raise DataError(
            f"column {name!r} must be coded 0/1; row {row + offset} has value {values[row]!r}"
        )


@dataclass(frozen=True)
class ObservationTable:
    """Validated, read-only analytic dataset.

    ``y`` holds the outcome (0/1, or any value in [0, 1] when
    ``outcome_type == "bounded"``), ``a`` the 0/1 treatment and ``w`` the
    ``n x p`` confounder matrix whose columns follow ``spec.confounder_names``.
    """

    y: np.ndarray
    a: np.ndarray
    w: np.ndarray
    spec: ColumnSpec
    kinds: tuple[str, ...] = ()
    outcome_type: str = "binary"
    dropped_rows: int = 0
    _validated: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        a = np.array(self.a, dtype=float)
        w = np.array(self.w, dtype=float)
        if w.ndim == 1:
            w = w.reshape(-1, 1) if w.size else w.reshape(len(y), 0)
        n = len(y)
        if self.outcome_type not in OUTCOME_TYPES:
            raise ConfigError(f"outcome_type must be one of {OUTCOME_TYPES}")
        if len(a) != n or w.shape[0] != n:
            raise DataError(f"length mismatch: y={n}, a={len(a)}, w rows={w.shape[0]}")
        if w.shape[1] != len(self.spec.confounder_names):
            raise ConfigError(
                f"{w.shape[1]} confounder columns but {len(self.spec.confounder_names)} names"
            )
        if not self._validated:
            if n < 2:
                raise DataError(f"need at least 2 rows, got {n}")
            for name, v in (("outcome", y), ("treatment", a)):
                if np.isnan(v).any():
                    raise DataError(f"{name} column contains missing values")
            if np.isnan(w).any():
                raise DataError("confounder matrix contains missing values")
            _check_binary(a, self.spec.treatment_name)
            if self.outcome_type == "binary":
                _check_binary(y, self.spec.outcome_name)
            elif np.any((y < 0) | (y > 1)):
                raise DataError(f"bounded outcome {self.spec.outcome_name!r} must lie in [0, 1]")
        n1 = int(a.sum())
        if n1 == 0 or n1 == n:
            raise DataError(
                f"treatment {self.spec.treatment_name!r} has an empty arm "
                f"({n1} treated, {n - n1} control)"
            )
        kinds = tuple(self.kinds) or tuple(infer_kind(col) for col in w.T)
        for arr in (y, a, w):
            arr.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "kinds", kinds)

    @classmethod
    def from_arrays(cls, y, a, w=None, confounder_names=None, *, outcome_name="Y",
                    treatment_name="A", outcome_type="binary"):
        y = np.asarray(y, dtype=float)
        if w is None:
            w = np.empty((len(y), 0))
        w = np.asarray(w, dtype=float)
        if w.ndim == 1:
            w = w.reshape(-1, 1)
        if confounder_names is None:
            confounder_names = [f"W{j + 1}" for j in range(w.shape[1])]
        spec = ColumnSpec(outcome_name, treatment_name, tuple(confounder_names))
        return cls(y=y, a=a, w=w, spec=spec, outcome_type=outcome_type)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return self.w.shape[1]

    @property
    def confounder_names(self) -> tuple[str, ...]:
        return self.spec.confounder_names

    def take(self, rows) -> "ObservationTable":
        """Row subset or resample (rows may repeat); confounder kinds are kept."""
        rows = np.asarray(rows)
        return ObservationTable(
            y=self.y[rows], a=self.a[rows], w=self.w[rows], spec=self.spec,
            kinds=self.kinds, outcome_type=self.outcome_type, _validated=True,
        )

    def select(self, names: Sequence[str]) -> "ObservationTable":
        """Same rows, restricted to the named confounders (in the given order)."""
        names = list(names)
        missing = [x for x in names if x not in self.confounder_names]
        if missing:
            raise ConfigError(f"unknown confounders {missing}")
        idx = [self.confounder_names.index(x) for x in names]
        spec = ColumnSpec(self.spec.outcome_name, self.spec.treatment_name, tuple(names))
        return ObservationTable(
            y=self.y, a=self.a, w=self.w[:, idx], spec=spec,
            kinds=tuple(self.kinds[i] for i in idx), outcome_type=self.outcome_type,
            dropped_rows=self.dropped_rows, _validated=True,
        )

    def to_frame(self) -> pd.DataFrame:
        data = {self.spec.outcome_name: self.y, self.spec.treatment_name: self.a.astype(int)}
        for name, kind, col in zip(self.confounder_names, self.kinds, self.w.T):
            data[name] = col.astype(np.int64) if kind != "continuous" else col
        frame = pd.DataFrame(data)
        if self.outcome_type == "binary":
            frame[self.spec.outcome_name] = frame[self.spec.outcome_name].astype(int)
        return frame


def one_hot(frame: pd.DataFrame, columns: Sequence[str]) -> tuple[pd.DataFrame, list[str]]:
    """Expand integer-coded columns to indicators, dropping the lowest level."""
    out = frame.copy()
    created = []
    for col in columns:
        levels = np.sort(out[col].unique())
        pos = out.columns.get_loc(col)
        new = {f"{col}={lvl:g}": (out[col] == lvl).astype(int) for lvl in levels[1:]}
        out = out.drop(columns=col)
        for k, (name, values) in enumerate(new.items()):
            out.insert(pos + k, name, values)
        created.extend(new)
    return out, created


def load_csv(path, spec: ColumnSpec, missing_policy: str = "fail",
             one_hot_columns: Sequence[str] = ()) -> ObservationTable:
    """Read and validate the analytic dataset from a comma-separated file.

    Parameters
    ----------
    path : str or Path
        UTF-8 CSV with a header row.
    spec : ColumnSpec
        Which columns play the outcome, treatment and confounder roles.
    missing_policy : {"fail", "drop_rows"}
        ``fail`` refuses rows with missing values; ``drop_rows`` removes them
        and records the count in ``ObservationTable.dropped_rows``.
    one_hot_columns : sequence of str
        Categorical confounders to expand into indicators instead of entering
        them as a single numeric code.

    Returns
    -------
    ObservationTable
    """
    if missing_policy not in MISSING_POLICIES:
        raise ConfigError(f"missing_policy must be one of {MISSING_POLICIES}")
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"input file not found: {path}")
    frame = pd.read_csv(path, encoding="utf-8")
    absent = [c for c in spec.columns if c not in frame.columns]
    if absent:
        raise ConfigError(f"columns missing from {path.name}: {absent}")
    frame = frame[spec.columns]

    non_numeric = [c for c in spec.columns if not pd.api.types.is_numeric_dtype(frame[c])]
    if non_numeric:
        col = non_numeric[0]
        coerced = pd.to_numeric(frame[col], errors="coerce")
        row = int(np.flatnonzero(coerced.isna() & frame[col].notna())[0])
        raise DataError(f"column {col!r} row {row + 1} is not numeric: {frame[col].iloc[row]!r}")

    dropped = 0
    incomplete = frame.isna().any(axis=1).to_numpy()
    if incomplete.any():
        if missing_policy == "fail":
            cols = [c for c in spec.columns if frame[c].isna().any()]
            raise DataError(
                f"{int(incomplete.sum())} rows have missing values (columns {cols}); "
                "use missing_policy='drop_rows' to discard them"
            )
        dropped = int(incomplete.sum())
        frame = frame.loc[~incomplete].reset_index(drop=True)

    # row numbers in messages are 1-based data rows
    _check_binary(frame[spec.outcome_name].to_numpy(float), spec.outcome_name, offset=1)
    _check_binary(frame[spec.treatment_name].to_numpy(float), spec.treatment_name, offset=1)

    confounders = frame[list(spec.confounder_names)]
    names = list(spec.confounder_names)
    if one_hot_columns:
        unknown = [c for c in one_hot_columns if c not in names]
        if unknown:
            raise ConfigError(f"one-hot columns are not confounders: {unknown}")
        confounders, _ = one_hot(confounders, one_hot_columns)
        names = list(confounders.columns)

    return ObservationTable(
        y=frame[spec.outcome_name].to_numpy(float),
        a=frame[spec.treatment_name].to_numpy(float),
        w=confounders.to_numpy(float),
        spec=ColumnSpec(spec.outcome_name, spec.treatment_name, tuple(names)),
        dropped_rows=dropped,
    )


def write_csv(table: ObservationTable, path) -> None:
    """Write ``table`` so that ``load_csv`` reproduces it (floats via repr)."""
    table.to_frame().to_csv(path, index=False, encoding="utf-8")


def arm_counts(table: ObservationTable) -> tuple[int, int]:
    n_treated = int(table.a.sum())
    return n_treated, table.n - n_treated
