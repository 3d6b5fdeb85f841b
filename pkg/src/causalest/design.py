"""Design-matrix builders: main terms, pairwise interactions, saturated cells.

A ``Design`` is fitted on training columns (it remembers the cell levels of
a saturated design) and can then be applied to counterfactual copies of the
same columns, e.g. with the treatment column overwritten.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConfigError, PositivityError

TERMS = ("main", "interactions", "saturated")


def _is_binary(col):
    return bool(np.all((col == 0) | (col == 1)))


@dataclass(frozen=True)
class Design:
    kind: str
    input_names: tuple[str, ...]
    names: tuple[str, ...]
    include_intercept: bool
    levels: np.ndarray | None = None
    squared: tuple[int, ...] = ()

    @classmethod
    def fit(cls, kind: str, x, names=None) -> "Design":
        if kind not in TERMS:
            raise ConfigError(f"terms must be one of {TERMS}, got {kind!r}")
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(x.shape[1]))
        if kind == "main":
            return cls(kind, names, names, True)
        if kind == "interactions":
            squared = tuple(j for j in range(x.shape[1]) if not _is_binary(x[:, j]))
            out = list(names)
            out += [f"{names[i]}*{names[j]}" for i, j in combinations(range(len(names)), 2)]
            out += [f"{names[j]}^2" for j in squared]
            return cls(kind, names, tuple(out), True, squared=squared)
        levels = np.unique(x, axis=0) if x.shape[1] else np.zeros((1, 0))
        cell_names = tuple(
            "cell[" + ",".join(f"{nm}={v:g}" for nm, v in zip(names, row)) + "]" for row in levels
        )
        return cls(kind, names, cell_names, False, levels=levels)

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.shape[1] != len(self.input_names):
            raise ConfigError(f"expected {len(self.input_names)} input columns, got {x.shape[1]}")
        if self.kind == "main":
            return x
        if self.kind == "interactions":
            cols = [x]
            pairs = list(combinations(range(x.shape[1]), 2))
            if pairs:
                cols.append(np.column_stack([x[:, i] * x[:, j] for i, j in pairs]))
            if self.squared:
                cols.append(x[:, list(self.squared)] ** 2)
            return np.column_stack(cols)
        match = np.all(x[:, None, :] == self.levels[None, :, :], axis=2)
        unseen = ~match.any(axis=1)
        if unseen.any():
            rows = np.unique(x[unseen], axis=0)
            raise PositivityError(
                f"{len(rows)} covariate pattern(s) absent from the fitting data, e.g. {rows[0]}",
                strata=[tuple(r) for r in rows],
            )
        return match.astype(float)


def build(kind: str, x, names=None) -> tuple[Design, np.ndarray]:
    design = Design.fit(kind, x, names)
    return design, design.transform(x)
