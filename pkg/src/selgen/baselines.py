"""Comparison learners: supervised, heuristic pseudo-labeling, and exact match.

All three bound the loss rate among selected records with a single
binomial tail bound; they differ only in which records and which loss
labels feed it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from ._search import n_iterations, threshold_search
from .binom import u_binom
from .calibrate import Bounded, CertifiedResult, Selector
from .errors import MissingScoreError, ValidationError
from .records import SELECTION_KEYS, Dataset

__all__ = ["PslConfig", "sgen_sup", "sgen_psl", "sgen_em", "loss_search"]


@dataclass(frozen=True)
class PslConfig:
    """Pseudo-label threshold ``tau_pl``; ``filter`` drops low-confidence unlabeled records."""

    tau_pl: float = 0.9
    filter: bool = True

    def __post_init__(self):
        if not 0.0 <= self.tau_pl <= 1.0:
            raise ValueError(f"tau_pl must lie in [0, 1], got {self.tau_pl}")


def loss_search(key: str, scores: np.ndarray, loss: np.ndarray, eps: float, delta: float, name: str) -> CertifiedResult:
    """Threshold search on ``scores`` bounding the rate of ``loss == 1`` among selected.

    Each candidate ``tau`` selects ``m`` records with ``k`` losses and is
    feasible when ``u_binom(k, m, delta / I) <= eps``.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    n = len(scores)
    if n == 0:
        return CertifiedResult(Selector.single(key, math.inf), 1.0, Bounded.FAIL, key, {"method": name, "reason": "no records", "trace": []})
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    # losses at sorted positions >= i
    loss_ge = np.concatenate([np.cumsum(loss[order][::-1])[::-1], [0]])
    iters = n_iterations(n)
    d = delta / iters
    trace: list[dict[str, Any]] = []

    def evaluate(tau):
        start = int(np.searchsorted(s, tau, side="left"))
        m, k = n - start, int(loss_ge[start])
        u = u_binom(k, m, d)
        trace.append({"thresholds": {key: tau}, "u": u, "m": m, "k": k, "feasible": u <= eps})
        return u, None

    out = threshold_search(s, evaluate, eps)
    tau, u, _ = out.best if out.success else out.minimum
    return CertifiedResult(
        selector=Selector.single(key, tau),
        u_hat=u,
        bounded=Bounded.SUCCESS if out.success else Bounded.FAIL,
        score_set_used=key,
        diagnostics={"method": name, "iterations": iters, "eval_budget": {"delta": d}, "trace": trace},
    )


def _scores(ds: Dataset, key: str) -> np.ndarray:
    if key not in SELECTION_KEYS:
        raise ValueError(f"unknown selection score {key!r}")
    if not ds.has_score(key):
        raise MissingScoreError(f"every record needs {key}")
    return ds.columns.score(key)


def sgen_sup(key: str, z_e: Dataset, eps: float, delta: float) -> CertifiedResult:
    """Supervised learner on labeled records only; loss is ``e == 0``.

    Examples
    --------
    >>> from selgen.records import Dataset
    >>> sgen_sup("f_m1", Dataset(()), 0.25, 0.02).u_hat
    1.0
    """
    e = z_e.columns.e
    if np.any(e < 0):
        raise ValidationError("supervised learning needs e on every record")
    return loss_search(key, _scores(z_e, key), (e == 0).astype(np.int64), eps, delta, "sup")


def pseudo_labeled(z_e: Dataset, z_u: Dataset, cfg: PslConfig) -> tuple[np.ndarray, np.ndarray]:
    """Merged keep-mask over ``z_u`` and the pseudo labels of the kept records."""
    fe = z_u.columns.f_e
    keep = np.maximum(fe, 1.0 - fe) >= cfg.tau_pl if cfg.filter else np.ones(len(fe), dtype=bool)
    return keep, (fe[keep] >= cfg.tau_pl).astype(np.int8)


def sgen_psl(key: str, z_e: Dataset, z_u: Dataset, eps: float, delta: float, cfg: PslConfig = PslConfig()) -> CertifiedResult:
    """Heuristic semi-supervised learner; unlabeled records get ``e~ = 1(f_e >= tau_pl)``.

    The pseudo labels are trusted as if they were true labels, so the
    returned bound carries no guarantee on the true FDR-E.
    """
    e = z_e.columns.e
    if np.any(e < 0):
        raise ValidationError("labeled records need e")
    keep, e_tilde = pseudo_labeled(z_e, z_u, cfg)
    scores = np.concatenate([_scores(z_e, key), _scores(z_u, key)[keep]])
    labels = np.concatenate([e, e_tilde])
    res = loss_search(key, scores, (labels == 0).astype(np.int64), eps, delta, "psl")
    res.diagnostics["n_pseudo"] = int(keep.sum())
    return res


def sgen_em(key: str, z_all: Dataset, eps: float, delta: float) -> CertifiedResult:
    """Exact-match learner on all records; loss is ``em == 0``.

    Controls the exact-match FDR, which over-counts errors when several
    answers are acceptable.
    """
    em = z_all.columns.em
    if np.any(em < 0):
        raise MissingScoreError("every record needs the em flag")
    return loss_search(key, _scores(z_all, key), (em == 0).astype(np.int64), eps, delta, "em")
