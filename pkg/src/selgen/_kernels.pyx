# cython: language_level=3
"""Compiled kernels: exact binomial tail bounds and the entailment-set search.

Mirrors ``selgen._pykernels`` operation for operation, so both backends
return bit-identical results (both call scipy's Cephes ``bdtr``/``bdtrc``).
"""
from scipy.special.cython_special cimport bdtr, bdtrc

DEF MAX_ITER = 60
DEF TOL = 1e-10


cpdef double binom_cdf(long k, long n, double theta) noexcept:
    if k >= n:
        return 1.0
    return bdtr(<double>k, n, theta)


cpdef double u_binom(long k, long n, double delta) noexcept:
    cdef double lo = 0.0, hi = 1.0, mid
    cdef int it
    if n <= 0 or k >= n:
        return 1.0
    for it in range(MAX_ITER):
        if hi - lo <= TOL:
            break
        mid = 0.5 * (lo + hi)
        if bdtr(<double>k, n, mid) <= delta:
            hi = mid
        else:
            lo = mid
    return hi


cpdef double l_binom(long k, long n, double delta) noexcept:
    cdef double lo = 0.0, hi = 1.0, mid
    cdef int it
    if n <= 0 or k <= 0:
        return 0.0
    for it in range(MAX_ITER):
        if hi - lo <= TOL:
            break
        mid = 0.5 * (lo + hi)
        if bdtrc(<double>(k - 1), n, mid) <= delta:
            lo = mid
        else:
            hi = mid
    return lo


cdef inline Py_ssize_t _tie_start(const double[:] fe, Py_ssize_t i) noexcept:
    cdef double value = fe[i]
    while i > 0 and fe[i - 1] == value:
        i -= 1
    return i


cpdef Py_ssize_t es_search(const double[:] fe, const signed char[:] e, double eps, double delta):
    """Smallest sorted position whose threshold keeps U_Binom(k) <= eps, else -1.

    ``fe`` must be sorted ascending with ``e`` aligned. ``k`` counts e = 0
    records with score >= the candidate threshold.
    """
    cdef Py_ssize_t n = fe.shape[0]
    cdef Py_ssize_t lo = -1, hi = n, mid, start, j, best = -1
    cdef long k
    while hi - lo > 1:
        mid = (lo + hi + 1) // 2
        start = _tie_start(fe, mid)
        k = 0
        for j in range(start, n):
            if e[j] == 0:
                k += 1
        if u_binom(k, n, delta) <= eps:
            hi = mid
            best = start
        else:
            lo = mid
    return best


cpdef tuple u_ssl_core(const double[:] fe_l, const signed char[:] e_l, const double[:] fe_u,
                       double eps_e, double es_delta, double l_delta, double u_delta):
    """One pseudo-labeler and its two count bounds.

    Returns ``(index, ell, k, fner_lower, ner_upper)`` where ``index`` is the
    sorted position of the entailment threshold (-1 for the empty set).
    """
    cdef Py_ssize_t n_l = fe_l.shape[0], n_u = fe_u.shape[0]
    cdef Py_ssize_t idx, j, lo, hi, mid
    cdef long ell = 0, k
    cdef double tau
    idx = es_search(fe_l, e_l, eps_e, es_delta)
    if idx < 0:
        for j in range(n_l):
            if e_l[j] == 1:
                ell += 1
        k = n_u
    else:
        tau = fe_l[idx]
        for j in range(idx):
            if e_l[j] == 1:
                ell += 1
        lo = 0
        hi = n_u
        while lo < hi:
            mid = (lo + hi) // 2
            if fe_u[mid] < tau:
                lo = mid + 1
            else:
                hi = mid
        k = lo
    return idx, ell, k, l_binom(ell, n_l, l_delta), u_binom(k, n_u, u_delta)
