"""Apply learned selectors to labeled test data and run repeated-split experiments."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

import numpy as np

from ._io import atomic_write_text
from .baselines import PslConfig, sgen_em, sgen_psl, sgen_sup
from .calibrate import CertifiedResult, Selector, sgen_semi_double, sgen_semi_ms, sgen_semi_single
from .errors import ConfigurationError, UndefinedRiskError, ValidationError
from .records import Dataset, RiskBudget, ScoredRecord, split_labeled_fraction

__all__ = [
    "Decision",
    "EvalReport",
    "apply_selector",
    "evaluate",
    "METHODS",
    "run_method",
    "SplitRun",
    "repeated_splits",
    "whisker_summary",
    "reports_csv",
    "write_reports_csv",
]


class Decision(str, Enum):
    ACCEPT = "accept"
    IDK = "idk"


@dataclass(frozen=True)
class EvalReport:
    """Empirical FDR-E and selection efficiency on a test set.

    ``fdr_e`` is ``None`` when nothing was selected; it is never reported as 0.
    """

    n_test: int
    n_selected: int
    fdr_e: float | None
    efficiency: float
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def defined(self) -> bool:
        return self.fdr_e is not None

    def to_json(self) -> dict[str, Any]:
        return {
            "n_test": self.n_test,
            "n_selected": self.n_selected,
            "fdr_e": self.fdr_e,
            "fdr_e_defined": self.defined,
            "efficiency": self.efficiency,
            "metadata": self.metadata,
        }


def apply_selector(sel: Selector, r: ScoredRecord) -> Decision:
    """``accept`` when every ``score >= threshold`` term holds, else ``idk``."""
    return Decision.ACCEPT if sel.accepts(r) else Decision.IDK


def evaluate(sel: Selector, test: Dataset, **metadata) -> EvalReport:
    """Count non-entailed answers among the selected test records.

    Every test record needs ``e``, whatever its visibility flag.
    """
    cols = test.columns
    if np.any(cols.e < 0):
        bad = next(r.id for r in test.records if r.e is None)
        raise ValidationError(f"test record {bad!r} has no entailment label")
    n = len(cols)
    keep = sel.mask(cols) if n else np.zeros(0, dtype=bool)
    m = int(keep.sum())
    fdr = int(np.count_nonzero(cols.e[keep] == 0)) / m if m else None
    return EvalReport(n, m, fdr, m / n if n else 0.0, dict(metadata))


METHODS = ("semi-ms", "semi-single", "semi-double", "sup", "psl", "em")


def run_method(
    method: str,
    cal: Dataset,
    budget: RiskBudget,
    score_key: str = "f_m1",
    psl: PslConfig = PslConfig(),
) -> CertifiedResult:
    """Calibrate ``method`` on ``cal``.

    Semi-supervised methods use the full budget split; the baselines get
    ``eps = budget.eps_s`` and ``delta = budget.total_delta``.
    """
    z_e, z_u = cal.partition()
    eps, delta = budget.eps_s, budget.total_delta
    if method == "semi-ms":
        return sgen_semi_ms(z_e, z_u, budget)
    if method == "semi-single":
        return sgen_semi_single(score_key, z_e, z_u, budget)
    if method == "semi-double":
        return sgen_semi_double(z_e, z_u, budget)
    if method == "sup":
        return sgen_sup(score_key, z_e, eps, delta)
    if method == "psl":
        return sgen_psl(score_key, z_e, z_u, eps, delta, psl)
    if method == "em":
        return sgen_em(score_key, cal, eps, delta)
    raise ConfigurationError(f"unknown method {method!r}; choose from {METHODS}")


@dataclass(frozen=True)
class SplitRun:
    split: int
    method: str
    result: CertifiedResult
    report: EvalReport
    true_fdr_e: float | None = None


def repeated_splits(
    ds: Dataset,
    method: str | Callable[[Dataset], CertifiedResult],
    budget: RiskBudget,
    n_splits: int,
    seed: int,
    cal_fraction: float = 0.8,
    labeled_fraction: float | None = None,
    score_key: str = "f_m1",
    psl: PslConfig = PslConfig(),
    true_risk: Callable[[Selector], float] | None = None,
) -> list[SplitRun]:
    """Calibrate on a random ``cal_fraction`` of ``ds`` and evaluate on the rest, ``n_splits`` times.

    Split ``i`` shuffles with ``SeedSequence([seed, i])``. With
    ``labeled_fraction`` the calibration part keeps only that fraction of
    its labels. ``true_risk`` (a simulator oracle) adds the population
    FDR-E of each learned selector.
    """
    if n_splits < 1:
        raise ValueError("n_splits must be >= 1")
    if not 0.0 < cal_fraction < 1.0:
        raise ValueError(f"cal_fraction must lie in (0, 1), got {cal_fraction}")
    name = method if isinstance(method, str) else getattr(method, "__name__", "custom")
    runs = []
    n = len(ds)
    n_cal = math.floor(cal_fraction * n)
    for i in range(n_splits):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        order = rng.permutation(n)
        cal = Dataset(tuple(ds.records[j] for j in order[:n_cal]), ds.provenance)
        test = Dataset(tuple(ds.records[j] for j in order[n_cal:]), ds.provenance)
        if labeled_fraction is not None:
            cal = split_labeled_fraction(cal, labeled_fraction, int(rng.integers(2**31)))
        if isinstance(method, str):
            res = run_method(method, cal, budget, score_key, psl)
        else:
            res = method(cal)
        rep = evaluate(res.selector, test, split=i, method=name)
        truth = None
        if true_risk is not None:
            try:
                truth = true_risk(res.selector)
            except UndefinedRiskError:
                truth = None
        runs.append(SplitRun(i, name, res, rep, truth))
    return runs


def whisker_summary(runs: list[SplitRun], eps: float, delta: float) -> dict[str, Any]:
    """Per-method quantile summary of test FDR-E and efficiency.

    Whiskers sit at the ``delta`` and ``1 - delta`` quantiles. Splits that
    selected nothing are counted but excluded from FDR-E statistics.
    """
    out: dict[str, Any] = {}
    for method in dict.fromkeys(r.method for r in runs):
        rs = [r for r in runs if r.method == method]
        fdr = np.array([r.report.fdr_e for r in rs if r.report.defined], dtype=float)
        eff = np.array([r.report.efficiency for r in rs], dtype=float)
        entry: dict[str, Any] = {
            "n_splits": len(rs),
            "n_undefined": len(rs) - len(fdr),
            "efficiency": _quantiles(eff, delta),
            "fdr_e": _quantiles(fdr, delta) if len(fdr) else None,
            "test_violation_rate": float(np.mean(fdr > eps)) if len(fdr) else None,
            "success_rate": float(np.mean([r.result.bounded.value == "Success" for r in rs])),
        }
        truths = [r.true_fdr_e for r in rs if r.true_fdr_e is not None]
        if truths:
            entry["true_violation_rate"] = float(np.mean(np.array(truths) > eps))
        out[method] = entry
    return out


def _quantiles(x: np.ndarray, delta: float) -> dict[str, float]:
    return {
        "low": float(np.quantile(x, delta)),
        "median": float(np.median(x)),
        "high": float(np.quantile(x, 1 - delta)),
        "mean": float(np.mean(x)),
    }


def reports_csv(runs: list[SplitRun]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["split", "method", "fdr_e", "efficiency"])
    for r in runs:
        w.writerow([r.split, r.method, "" if r.report.fdr_e is None else repr(r.report.fdr_e), repr(r.report.efficiency)])
    return buf.getvalue()


def write_reports_csv(runs: list[SplitRun], path) -> None:
    atomic_write_text(path, reports_csv(runs))
