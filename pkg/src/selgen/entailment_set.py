"""Conformal entailment-set learning with a PAC false-entailment-rate guarantee.

The estimated entailment set is ``{y' : f_e(y', y) >= tau_e}``. A record is
pseudo-entailed when its entailment score clears ``tau_e``. The threshold
is the smallest observed score whose upper binomial bound on the number of
non-entailed records inside the set stays below ``eps_e``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ValidationError
from .records import Dataset, ScoredRecord

__all__ = ["EntailmentSetParam", "SENTINEL", "learn_entailment_set", "pseudo_label", "sorted_by_entailment"]

SENTINEL = math.inf


@dataclass(frozen=True)
class EntailmentSetParam:
    """Entailment threshold; ``tau_e = inf`` encodes the empty set (FER is 0)."""

    tau_e: float
    feasible: bool

    def __post_init__(self):
        if self.feasible == math.isinf(self.tau_e):
            raise ValueError("feasible must be False exactly when tau_e is the sentinel")

    @classmethod
    def empty(cls) -> "EntailmentSetParam":
        return cls(SENTINEL, False)

    def to_json(self):
        return {"tau_e": None if not self.feasible else self.tau_e, "feasible": self.feasible}


def sorted_by_entailment(z_e: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Labeled entailment scores sorted ascending (stable) with aligned labels."""
    cols = z_e.columns
    if len(cols) and np.any(cols.e < 0):
        raise ValidationError("entailment-set learning needs e on every record")
    order = np.argsort(cols.f_e, kind="stable")
    return np.ascontiguousarray(cols.f_e[order]), np.ascontiguousarray(cols.e[order])


def _param(fe_sorted: np.ndarray, idx: int) -> EntailmentSetParam:
    if idx < 0:
        return EntailmentSetParam.empty()
    return EntailmentSetParam(float(fe_sorted[idx]), True)


def learn_entailment_set(z_e: Dataset, eps_e: float, delta_e: float) -> EntailmentSetParam:
    """Learn ``tau_e`` so that FER <= ``eps_e`` with probability >= ``1 - delta_e``.

    Parameters
    ----------
    z_e : Dataset
        Labeled records; only ``f_e`` and ``e`` are read.
    eps_e, delta_e : float
        Target false entailment rate and failure probability.

    Returns
    -------
    EntailmentSetParam
        The empty-set sentinel when no observed score is feasible or
        ``z_e`` is empty.

    Examples
    --------
    >>> from selgen.records import ScoredRecord, Dataset
    >>> recs = [ScoredRecord(str(i), 0.5, f, 1, e=e)
    ...         for i, (f, e) in enumerate([(0.1, 0), (0.4, 1), (0.6, 0), (0.9, 1)])]
    >>> learn_entailment_set(Dataset(tuple(recs)), 0.5, 0.5).tau_e
    0.4
    """
    if not 0.0 <= eps_e <= 1.0 or not 0.0 < delta_e < 1.0:
        raise ValueError(f"need eps_e in [0, 1] and delta_e in (0, 1), got {eps_e}, {delta_e}")
    fe, e = sorted_by_entailment(z_e)
    idx = _backend.kernels().es_search(fe, e, float(eps_e), float(delta_e))
    return _param(fe, idx)


def pseudo_label(param: EntailmentSetParam, r: ScoredRecord | float) -> int:
    """``1`` when the record's entailment score is inside the learned set."""
    f_e = r if isinstance(r, (int, float)) else r.f_e
    return int(f_e >= param.tau_e)
