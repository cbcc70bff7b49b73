"""Binary search over sorted candidate thresholds, shared by every learner."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np


def n_iterations(n: int) -> int:
    """``ceil(log2(n + 1))``: evaluations needed to bisect ``n`` candidates plus "select nothing"."""
    return int(n).bit_length()


@dataclass
class SearchOutcome:
    best: tuple[float, float, Any] | None = None  # last feasible (tau, u, info)
    minimum: tuple[float, float, Any] | None = None  # bound-minimizing (tau, u, info)
    trace: list[tuple[float, float, Any]] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.best is not None


def threshold_search(
    values: np.ndarray, evaluate: Callable[[float], tuple[float, Any]], eps: float
) -> SearchOutcome:
    """Bisect the ascending ``values`` for the smallest threshold with bound <= ``eps``.

    A feasible candidate moves the search toward smaller thresholds (more
    selection), an infeasible one toward larger. Positions ``-1`` and
    ``len(values)`` are virtual endpoints that are never evaluated, so every
    observed score is reachable and at most ``n_iterations(len(values))``
    candidates are evaluated.
    """
    out = SearchOutcome()
    lo, hi = -1, len(values)
    while hi - lo > 1:
        mid = (lo + hi + 1) // 2
        tau = float(values[mid])
        u, info = evaluate(tau)
        out.trace.append((tau, u, info))
        if out.minimum is None or u <= out.minimum[1]:
            out.minimum = (tau, u, info)
        if u <= eps:
            out.best = (tau, u, info)
            hi = mid
        else:
            lo = mid
    return out
