"""Pure-Python kernels, used when the compiled extension is unavailable.

Same operations, same floating-point order as ``_kernels.pyx``.
"""
from __future__ import annotations

from bisect import bisect_left

import numpy as np
from scipy.special.cython_special import bdtr, bdtrc

MAX_ITER = 60
TOL = 1e-10


def binom_cdf(k: int, n: int, theta: float) -> float:
    if k >= n:
        return 1.0
    return bdtr(float(k), int(n), theta)


def u_binom(k: int, n: int, delta: float) -> float:
    if n <= 0 or k >= n:
        return 1.0
    k = float(k)
    n = int(n)
    lo, hi = 0.0, 1.0
    for _ in range(MAX_ITER):
        if hi - lo <= TOL:
            break
        mid = 0.5 * (lo + hi)
        if bdtr(k, n, mid) <= delta:
            hi = mid
        else:
            lo = mid
    return hi


def l_binom(k: int, n: int, delta: float) -> float:
    if n <= 0 or k <= 0:
        return 0.0
    km1 = float(k - 1)
    n = int(n)
    lo, hi = 0.0, 1.0
    for _ in range(MAX_ITER):
        if hi - lo <= TOL:
            break
        mid = 0.5 * (lo + hi)
        if bdtrc(km1, n, mid) <= delta:
            lo = mid
        else:
            hi = mid
    return lo


def es_search(fe: np.ndarray, e: np.ndarray, eps: float, delta: float) -> int:
    n = len(fe)
    # neg_ge[i] = #{e == 0 at sorted positions >= i}
    neg_ge = np.concatenate([np.cumsum((e == 0)[::-1])[::-1], [0]]).tolist()
    fe_list = fe.tolist()
    lo, hi, best = -1, n, -1
    while hi - lo > 1:
        mid = (lo + hi + 1) // 2
        start = bisect_left(fe_list, fe_list[mid], 0, mid)
        if u_binom(neg_ge[start], n, delta) <= eps:
            hi = mid
            best = start
        else:
            lo = mid
    return best


def u_ssl_core(fe_l, e_l, fe_u, eps_e, es_delta, l_delta, u_delta):
    n_l, n_u = len(fe_l), len(fe_u)
    idx = es_search(fe_l, e_l, eps_e, es_delta)
    if idx < 0:
        ell = int(np.count_nonzero(e_l == 1))
        k = n_u
    else:
        ell = int(np.count_nonzero(e_l[:idx] == 1))
        k = int(np.searchsorted(fe_u, fe_l[idx], side="left"))
    return idx, ell, k, l_binom(ell, n_l, l_delta), u_binom(k, n_u, u_delta)
