"""Result container returned by every effect estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

ESTIMANDS = ("ATE", "ATT", "RR", "OR")


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, "item") and getattr(value, "ndim", 1) == 0:
        return _clean(value.item())
    if hasattr(value, "tolist"):
        return _clean(value.tolist())
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


@dataclass(frozen=True)
class EffectEstimate:
    """Point estimate of a causal contrast plus optional inference.

    ``components`` carries the estimator's working objects (potential-outcome
    predictions, TMLE state, ...) and is left out of ``to_dict``.
    """

    estimand: str
    value: float
    method: str
    se: float | None = None
    ci: tuple[float, float] | None = None
    mu1: float | None = None
    mu0: float | None = None
    n: int | None = None
    diagnostics: dict = field(default_factory=dict)
    components: Any = field(default=None, repr=False, compare=False)

    def __float__(self):
        return float(self.value)

    def to_dict(self) -> dict:
        out = {
            "estimand": self.estimand,
            "method": self.method,
            "value": float(self.value),
            "se": None if self.se is None else float(self.se),
            "ci": None if self.ci is None else [float(self.ci[0]), float(self.ci[1])],
            "mu1": None if self.mu1 is None else float(self.mu1),
            "mu0": None if self.mu0 is None else float(self.mu0),
            "n": self.n,
            "diagnostics": self.diagnostics,
        }
        return _clean(out)
