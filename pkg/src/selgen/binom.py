"""Exact binomial CDF and the Clopper-Pearson style tail bounds.

``u_binom(k, n, delta)`` is the smallest ``theta`` with
``F(k; n, theta) <= delta`` (or 1 when none exists): an upper confidence
bound on a Bernoulli mean after ``k`` losses in ``n`` trials. ``l_binom`` is
the matching lower bound, the largest ``theta`` with
``P(X >= k) <= delta`` (or 0).

Both are found by bisection to 1e-10 and always return the conservative
endpoint. The CDF is Cephes ``bdtr`` (regularized incomplete beta).
"""
from __future__ import annotations

from dataclasses import dataclass

from . import _backend

__all__ = ["BoundQuery", "binom_cdf", "u_binom", "l_binom"]


@dataclass(frozen=True)
class BoundQuery:
    """Loss count ``k`` out of ``n`` trials at confidence level ``delta``."""

    k: int
    n: int
    delta: float

    def __post_init__(self):
        _check(self.k, self.n)
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


def _check(k: int, n: int) -> None:
    if n < 0 or k < 0:
        raise ValueError(f"need k, n >= 0, got k={k}, n={n}")
    if k > n:
        raise ValueError(f"need k <= n, got k={k}, n={n}")


def binom_cdf(k: int, n: int, theta: float) -> float:
    """``P(X <= k)`` for ``X ~ Binomial(n, theta)``."""
    _check(k, n)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    return _backend.kernels().binom_cdf(int(k), int(n), float(theta))


def _unpack(q, n, delta):
    if isinstance(q, BoundQuery):
        return q.k, q.n, q.delta
    if n is None or delta is None:
        raise TypeError("pass a BoundQuery or all of k, n, delta")
    BoundQuery(q, n, delta)
    return q, n, delta


def u_binom(q: BoundQuery | int, n: int | None = None, delta: float | None = None) -> float:
    """Upper binomial tail bound. Accepts a :class:`BoundQuery` or ``(k, n, delta)``.

    Examples
    --------
    >>> round(u_binom(0, 10, 0.05), 6)
    0.258866
    >>> u_binom(10, 10, 0.05)
    1.0
    """
    k, n, delta = _unpack(q, n, delta)
    return _backend.kernels().u_binom(int(k), int(n), float(delta))


def l_binom(q: BoundQuery | int, n: int | None = None, delta: float | None = None) -> float:
    """Lower binomial tail bound, ``P{R >= l_binom} >= 1 - delta``.

    Examples
    --------
    >>> round(l_binom(10, 10, 0.05), 6)
    0.741134
    >>> l_binom(0, 10, 0.05)
    0.0
    """
    k, n, delta = _unpack(q, n, delta)
    return _backend.kernels().l_binom(int(k), int(n), float(delta))
