"""Semi-supervised selector learning with a certified FDR-E bound.

Three learners share one contract: search thresholds on the selection
scores, bound the FDR-E of every visited selector with
:func:`selgen.fdr_bounds.fdr_e_bound`, and return a :class:`CertifiedResult`.
Each evaluation gets an equal share of the confidence budget, so the
returned bound holds simultaneously over the whole search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any

import numpy as np

from ._search import n_iterations, threshold_search
from .errors import MissingScoreError
from .fdr_bounds import ComposedBound, SslArrays, _fdr_e_bound
from .records import SELECTION_KEYS, Columns, Dataset, RiskBudget, ScoredRecord

__all__ = [
    "Bounded",
    "Selector",
    "CertifiedResult",
    "sgen_semi_single",
    "sgen_semi_double",
    "sgen_semi_ms",
]


class Bounded(str, Enum):
    SUCCESS = "Success"
    FAIL = "Fail"


def _threshold_to_json(t: float):
    return "inf" if math.isinf(t) else t


@dataclass(frozen=True)
class Selector:
    """Accept an answer when every ``score >= threshold`` term holds.

    A threshold of ``inf`` rejects everything.
    """

    terms: tuple[tuple[str, float], ...]

    def __post_init__(self):
        terms = tuple((str(k), float(t)) for k, t in self.terms)
        object.__setattr__(self, "terms", terms)
        if not 1 <= len(terms) <= 2:
            raise ValueError(f"a selector needs one or two terms, got {len(terms)}")
        keys = [k for k, _ in terms]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate score keys in {keys}")
        for k, t in terms:
            if k not in SELECTION_KEYS:
                raise ValueError(f"unknown selection score {k!r}")
            if math.isnan(t):
                raise ValueError("threshold must not be NaN")

    @classmethod
    def single(cls, key: str, tau: float) -> "Selector":
        return cls(((key, tau),))

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.terms)

    def accepts(self, r: ScoredRecord) -> bool:
        return all(r.score(k) >= t for k, t in self.terms)

    def mask(self, cols: Columns) -> np.ndarray:
        keep = np.ones(len(cols), dtype=bool)
        for k, t in self.terms:
            s = cols.score(k)
            if np.isnan(s).any():
                raise MissingScoreError(f"selector needs {k} on every record")
            keep &= s >= t
        return keep

    def to_json(self) -> dict[str, Any]:
        return {"terms": [[k, _threshold_to_json(t)] for k, t in self.terms]}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "Selector":
        return cls(tuple((k, math.inf if t == "inf" else float(t)) for k, t in obj["terms"]))


@dataclass(frozen=True)
class CertifiedResult:
    """A learned selector with its FDR-E bound ``u_hat``.

    ``bounded`` is Success when some visited selector met the target; then
    ``u_hat <= eps``. On Fail the selector is the one with the smallest bound.
    ``diagnostics`` records the per-evaluation budget and the full candidate
    trace in visit order.
    """

    selector: Selector
    u_hat: float
    bounded: Bounded
    score_set_used: str
    diagnostics: dict[str, Any] = field(default_factory=dict, compare=False)
    bound: ComposedBound | None = field(default=None, compare=False, repr=False)

    def to_json(self) -> dict[str, Any]:
        out = {
            "selector": self.selector.to_json(),
            "u_hat": self.u_hat,
            "bounded": self.bounded.value,
            "score_set_used": self.score_set_used,
            "diagnostics": self.diagnostics,
        }
        if self.bound is not None:
            out["bound"] = self.bound.to_json()
        return out


class _Prepared:
    """Partitioned arrays, both sides sorted by entailment score."""

    def __init__(self, z_e: Dataset, z_u: Dataset, keys: tuple[str, ...]):
        for k in keys:
            for part in (z_e, z_u):
                if not part.has_score(k):
                    raise MissingScoreError(f"every record needs {k} for this learner")
        self.arrays = SslArrays.from_datasets(z_e, z_u)
        ol = np.argsort(z_e.columns.f_e, kind="stable")
        ou = np.argsort(z_u.columns.f_e, kind="stable")
        self.s_l = {k: z_e.columns.score(k)[ol] for k in keys}
        self.s_u = {k: z_u.columns.score(k)[ou] for k in keys}
        self.n = len(ol) + len(ou)

    def candidates(self, key: str) -> np.ndarray:
        return np.sort(np.concatenate([self.s_l[key], self.s_u[key]]), kind="stable")

    def bound(self, thresholds: dict[str, float], b: RiskBudget) -> ComposedBound:
        ml = np.ones(self.arrays.n_l, dtype=bool)
        mu = np.ones(self.arrays.n_u, dtype=bool)
        for k, t in thresholds.items():
            ml &= self.s_l[k] >= t
            mu &= self.s_u[k] >= t
        return _fdr_e_bound(self.arrays.take(ml, mu), b.delta_s, b.q, b.delta_e, b.delta_w)


def _trace_entry(thresholds: dict[str, float], cb: ComposedBound, eps: float) -> dict[str, Any]:
    return {
        "thresholds": dict(thresholds),
        "u": cb.u,
        "n_l": cb.ssl.n_l if cb.ssl else 0,
        "n_u": cb.ssl.n_u if cb.ssl else 0,
        "feasible": cb.u <= eps,
    }


def _vacuous(keys: tuple[str, ...], name: str, reason: str) -> CertifiedResult:
    return CertifiedResult(
        selector=Selector(tuple((k, math.inf) for k in keys)),
        u_hat=1.0,
        bounded=Bounded.FAIL,
        score_set_used=name,
        diagnostics={"reason": reason, "trace": []},
    )


def _single(p: _Prepared, key: str, budget: RiskBudget) -> CertifiedResult:
    iters = n_iterations(p.n)
    b = budget.split(iters)
    trace: list[dict[str, Any]] = []

    def evaluate(tau):
        cb = p.bound({key: tau}, b)
        trace.append(_trace_entry({key: tau}, cb, budget.eps_s))
        return cb.u, cb

    out = threshold_search(p.candidates(key), evaluate, budget.eps_s)
    tau, u, cb = out.best if out.success else out.minimum
    return CertifiedResult(
        selector=Selector.single(key, tau),
        u_hat=u,
        bounded=Bounded.SUCCESS if out.success else Bounded.FAIL,
        score_set_used=key,
        diagnostics={"iterations": iters, "eval_budget": b.to_json(), "trace": trace},
        bound=cb,
    )


def sgen_semi_single(key: str, z_e: Dataset, z_u: Dataset, budget: RiskBudget) -> CertifiedResult:
    """Learn ``score >= tau`` on one selection score.

    Every candidate bound uses ``budget.split(I)`` with
    ``I = ceil(log2(N + 1))`` for ``N = |z_e| + |z_u|``.

    Examples
    --------
    >>> from selgen.records import Dataset, RiskBudget
    >>> r = sgen_semi_single("f_m1", Dataset(()), Dataset(()), RiskBudget.from_total(0.25, 0.02))
    >>> r.bounded.value, r.u_hat
    ('Fail', 1.0)
    """
    if key not in SELECTION_KEYS:
        raise ValueError(f"unknown selection score {key!r}")
    p = _Prepared(z_e, z_u, (key,))
    if p.n == 0:
        return _vacuous((key,), key, "no calibration records")
    return _single(p, key, budget)


def _double(p: _Prepared, budget: RiskBudget) -> CertifiedResult:
    iters = n_iterations(p.n)
    b = budget.split(iters * iters)
    eps = budget.eps_s
    trace: list[dict[str, Any]] = []
    c2 = p.candidates("f_m2")

    def outer(t1):
        def inner(t2):
            th = {"f_m1": t1, "f_m2": t2}
            cb = p.bound(th, b)
            trace.append(_trace_entry(th, cb, eps))
            return cb.u, cb

        res = threshold_search(c2, inner, eps)
        return res.minimum[1], res

    out = threshold_search(p.candidates("f_m1"), outer, eps)
    if out.success:
        t1, _, res = out.best
        t2, u, cb = res.best
    else:
        t1, _, res = out.minimum
        t2, u, cb = res.minimum
    return CertifiedResult(
        selector=Selector((("f_m1", t1), ("f_m2", t2))),
        u_hat=u,
        bounded=Bounded.SUCCESS if out.success else Bounded.FAIL,
        score_set_used="f_m1,f_m2",
        diagnostics={"iterations": iters, "eval_budget": b.to_json(), "trace": trace},
        bound=cb,
    )


def sgen_semi_double(z_e: Dataset, z_u: Dataset, budget: RiskBudget) -> CertifiedResult:
    """Learn ``f_m1 >= t1 and f_m2 >= t2`` by nested threshold search.

    The outer search over ``f_m1`` moves toward more selection when some
    inner ``f_m2`` candidate is feasible. Each of the at most ``I**2``
    evaluations uses ``budget.split(I**2)``.
    """
    p = _Prepared(z_e, z_u, ("f_m1", "f_m2"))
    if p.n == 0:
        return _vacuous(("f_m1", "f_m2"), "f_m1,f_m2", "no calibration records")
    return _double(p, budget)


_BRANCHES = ("f_m1", "f_m2", "f_m1,f_m2")


def sgen_semi_ms(z_e: Dataset, z_u: Dataset, budget: RiskBudget) -> CertifiedResult:
    """Pick among the ``f_m1``, ``f_m2`` and two-score selector classes.

    Each class is learned with a third of the budget. Among the classes that
    met the target the one with the largest bound wins (the selector using
    the most of the allowed risk); if none did, the smallest bound wins.
    Ties go to the earlier class. A class whose score is missing counts as
    Fail with bound 1.
    """
    b = budget.split(3)
    results = []
    for name in _BRANCHES:
        keys = tuple(name.split(","))
        try:
            if len(keys) == 1:
                r = sgen_semi_single(keys[0], z_e, z_u, b)
            else:
                r = sgen_semi_double(z_e, z_u, b)
        except MissingScoreError as exc:
            r = _vacuous(keys, name, str(exc))
        results.append(r)
    wins = [r for r in results if r.bounded is Bounded.SUCCESS]
    if wins:
        chosen = max(wins, key=lambda r: r.u_hat)
    else:
        chosen = min(results, key=lambda r: r.u_hat)
    summary = [
        {"score_set": r.score_set_used, "bounded": r.bounded.value, "u_hat": r.u_hat, "selector": r.selector.to_json()}
        for r in results
    ]
    return replace(chosen, diagnostics={**chosen.diagnostics, "branches": summary})
