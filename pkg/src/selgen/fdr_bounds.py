"""Semi-supervised FDR-E upper bounds.

For a labeled set ``z_e`` and an unlabeled set ``z_u`` drawn from the same
(selected) distribution, the rate of non-entailed answers is bounded by::

    u_ssl = eps_e - L(ell; |z_e|, delta_e/2) + U(k; |z_u|, delta_s/2)

where ``eps_e`` bounds the false entailment rate of a learned pseudo-labeler,
``ell`` counts labeled records that are entailed but not pseudo-entailed,
and ``k`` counts unlabeled records that are not pseudo-entailed. The
composed bound mixes this with the labeled-only bound, weighted by upper
bounds on the labeled and unlabeled proportions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .binom import u_binom
from .entailment_set import EntailmentSetParam, _param, sorted_by_entailment
from .records import Dataset

__all__ = [
    "SslBound",
    "ComposedBound",
    "SslArrays",
    "compute_u_ssl",
    "compute_u_ssl_opt",
    "fdr_e_bound",
]


def _clamp(x: float) -> float:
    return min(max(x, 0.0), 1.0)


@dataclass(frozen=True)
class SslArrays:
    """Entailment scores of ``z_e`` (sorted, with labels) and ``z_u`` (sorted).

    Boolean-mask subsets keep the sort order, so selections can be taken
    without re-sorting.
    """

    fe_l: np.ndarray
    e_l: np.ndarray
    fe_u: np.ndarray

    @classmethod
    def from_datasets(cls, z_e: Dataset, z_u: Dataset) -> "SslArrays":
        fe_l, e_l = sorted_by_entailment(z_e)
        fe_u = np.ascontiguousarray(np.sort(z_u.columns.f_e, kind="stable"))
        return cls(fe_l, e_l, fe_u)

    @property
    def n_l(self) -> int:
        return len(self.fe_l)

    @property
    def n_u(self) -> int:
        return len(self.fe_u)

    def take(self, mask_l: np.ndarray, mask_u: np.ndarray) -> "SslArrays":
        return SslArrays(self.fe_l[mask_l], self.e_l[mask_l], self.fe_u[mask_u])


@dataclass(frozen=True)
class SslBound:
    """One evaluation of ``u_ssl`` with its ingredients.

    ``ell`` and ``k`` are the false-non-entailment and non-entailment counts
    behind ``fner_lower`` and ``ner_upper``. For the grid-optimized bound,
    ``grid`` holds every candidate in grid order.
    """

    u_ssl: float
    eps_e_used: float
    tau_e: EntailmentSetParam
    fner_lower: float
    ner_upper: float
    ell: int = 0
    k: int = 0
    n_l: int = 0
    n_u: int = 0
    grid: tuple["SslBound", ...] = field(default=(), compare=False, repr=False)

    def to_json(self) -> dict:
        return {
            "u_ssl": self.u_ssl,
            "eps_e_used": self.eps_e_used,
            "tau_e": self.tau_e.to_json(),
            "fner_lower": self.fner_lower,
            "ner_upper": self.ner_upper,
            "ell": self.ell,
            "k": self.k,
        }


@dataclass(frozen=True)
class ComposedBound:
    """``u = clamp(w_sl * u_sl + w_ssl * u_ssl_opt)``."""

    w_sl: float
    u_sl: float
    w_ssl: float
    u_ssl_opt: float
    u: float
    ssl: SslBound | None = field(default=None, compare=False, repr=False)

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in ("w_sl", "u_sl", "w_ssl", "u_ssl_opt", "u")}
        if self.ssl is not None:
            out["ssl"] = self.ssl.to_json()
        return out


def _u_ssl(a: SslArrays, delta_s: float, eps_e: float, delta_e: float) -> SslBound:
    idx, ell, k, lower, upper = _backend.kernels().u_ssl_core(
        a.fe_l, a.e_l, a.fe_u, float(eps_e), delta_e / 2, delta_e / 2, delta_s / 2
    )
    return SslBound(
        u_ssl=_clamp(eps_e - lower + upper),
        eps_e_used=float(eps_e),
        tau_e=_param(a.fe_l, idx),
        fner_lower=lower,
        ner_upper=upper,
        ell=int(ell),
        k=int(k),
        n_l=a.n_l,
        n_u=a.n_u,
    )


def _u_ssl_opt(a: SslArrays, delta_s: float, q: int, delta_e: float) -> SslBound:
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if a.n_l == 0:
        return SslBound(1.0, 0.0, EntailmentSetParam.empty(), 0.0, 1.0, 0, a.n_u, 0, a.n_u)
    eps_max = int(np.count_nonzero(a.e_l == 0)) / a.n_l
    grid = tuple(_u_ssl(a, delta_s / q, eps_max * (q - i + 1) / q, delta_e / q) for i in range(1, q + 1))
    best = grid[0]
    for cand in grid[1:]:
        # ties go to the later, smaller eps_e
        if cand.u_ssl <= best.u_ssl:
            best = cand
    return SslBound(**{**best.__dict__, "grid": grid})


def _fdr_e_bound(a: SslArrays, delta_s: float, q: int, delta_e: float, delta_w: float) -> ComposedBound:
    n_l, n_u = a.n_l, a.n_u
    n = n_l + n_u
    w_sl = u_binom(n_l, n, delta_w / 2)
    u_sl = u_binom(int(np.count_nonzero(a.e_l == 0)), n_l, delta_s / 2)
    w_ssl = u_binom(n_u, n, delta_w / 2)
    ssl = _u_ssl_opt(a, delta_s / 2, q, delta_e / 2)
    return ComposedBound(
        w_sl=w_sl,
        u_sl=u_sl,
        w_ssl=w_ssl,
        u_ssl_opt=ssl.u_ssl,
        u=_clamp(w_sl * u_sl + w_ssl * ssl.u_ssl),
        ssl=ssl,
    )


def compute_u_ssl(z_e: Dataset, z_u: Dataset, delta_s: float, eps_e: float, delta_e: float) -> SslBound:
    """Semi-supervised bound for a single target false entailment rate ``eps_e``.

    The pseudo-labeler is learned at level ``delta_e / 2``; the lower bound on
    the false-non-entailment rate uses ``delta_e / 2`` and the upper bound on
    the non-entailment rate uses ``delta_s / 2``.

    Empty subsets give the vacuous ``u_ssl = 1``.
    """
    _check_unit(delta_s=delta_s, delta_e=delta_e)
    if not 0.0 <= eps_e <= 1.0:
        raise ValueError(f"eps_e must lie in [0, 1], got {eps_e}")
    return _u_ssl(SslArrays.from_datasets(z_e, z_u), delta_s, eps_e, delta_e)


def compute_u_ssl_opt(z_e: Dataset, z_u: Dataset, delta_s: float, q: int, delta_e: float) -> SslBound:
    """Minimum of :func:`compute_u_ssl` over ``q`` values of ``eps_e``.

    The grid runs linearly from ``eps_max`` (fraction of non-entailed labeled
    records) down to ``eps_max / q``; each candidate gets ``delta_s / q`` and
    ``delta_e / q``.
    """
    _check_unit(delta_s=delta_s, delta_e=delta_e)
    return _u_ssl_opt(SslArrays.from_datasets(z_e, z_u), delta_s, q, delta_e)


def fdr_e_bound(
    z_e: Dataset, z_u: Dataset, delta_s: float, q: int, delta_e: float, delta_w: float
) -> ComposedBound:
    """Composed FDR-E bound over labeled and unlabeled records.

    Holds with probability at least ``1 - delta_s - delta_e - delta_w``.

    Examples
    --------
    >>> from selgen.records import Dataset
    >>> fdr_e_bound(Dataset(()), Dataset(()), 0.01, 5, 0.01, 1e-5).u
    1.0
    """
    _check_unit(delta_s=delta_s, delta_e=delta_e, delta_w=delta_w)
    return _fdr_e_bound(SslArrays.from_datasets(z_e, z_u), delta_s, q, delta_e, delta_w)


def _check_unit(**kw: float) -> None:
    for name, value in kw.items():
        if not 0.0 < value < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {value}")
