"""Independent brute-force references for the search-based learners."""
import math

import numpy as np

from selgen._search import n_iterations
from selgen.binom import l_binom, u_binom
from selgen.calibrate import Bounded
from selgen.records import Dataset, ScoredRecord


def labeled(fe, e, f_m1=None, **kw):
    f_m1 = [0.5] * len(fe) if f_m1 is None else f_m1
    return Dataset(tuple(ScoredRecord(f"l{i}", float(s), float(f), 1, e=int(y), **kw)
                         for i, (s, f, y) in enumerate(zip(f_m1, fe, e))))


def unlabeled(fe, f_m1=None):
    f_m1 = [0.5] * len(fe) if f_m1 is None else f_m1
    return Dataset(tuple(ScoredRecord(f"u{i}", float(s), float(f), 0) for i, (s, f) in enumerate(zip(f_m1, fe))))


def es_exhaustive(fe, e, eps, delta):
    """Smallest observed f_e whose set keeps u_binom(#non-entailed inside) <= eps, else inf."""
    fe, e = np.asarray(fe, float), np.asarray(e)
    n = len(fe)
    for tau in sorted(set(fe.tolist())):
        k = int(np.sum((e == 0) & (fe >= tau)))
        if u_binom(k, n, delta) <= eps:
            return tau
    return math.inf


def u_ssl_by_hand(fe_l, e_l, fe_u, delta_s, eps_e, delta_e):
    fe_l, e_l, fe_u = np.asarray(fe_l, float), np.asarray(e_l), np.asarray(fe_u, float)
    tau = es_exhaustive(fe_l, e_l, eps_e, delta_e / 2)
    ell = int(np.sum((e_l == 1) & (fe_l < tau)))
    k = int(np.sum(fe_u < tau))
    u = eps_e - l_binom(ell, len(fe_l), delta_e / 2) + u_binom(k, len(fe_u), delta_s / 2)
    return min(max(u, 0.0), 1.0), tau, ell, k


def loss_candidates(scores, loss, delta_each):
    """(tau, u) for every distinct observed score, ascending."""
    scores, loss = np.asarray(scores, float), np.asarray(loss)
    out = []
    for tau in sorted(set(scores.tolist())):
        sel = scores >= tau
        out.append((tau, u_binom(int(loss[sel].sum()), int(sel.sum()), delta_each)))
    return out


def bisection_path(sorted_scores, eps, bound):
    """Replay the documented schedule: virtual ends -1 and N, upper midpoint, stop when adjacent."""
    lo, hi, path = -1, len(sorted_scores), []
    while hi - lo > 1:
        mid = (lo + hi + 1) // 2
        tau = sorted_scores[mid]
        u = bound(tau)
        path.append((tau, u))
        if u <= eps:
            hi = mid
        else:
            lo = mid
    return path


def check_against_exhaustive(res, scores, loss, eps, delta):
    """The search result against every distinct candidate threshold and the visited path."""
    cands = loss_candidates(scores, loss, delta / n_iterations(len(scores)))
    path = bisection_path(sorted(scores), eps, dict(cands).get)
    feasible = [c for c in path if c[1] <= eps]
    if feasible:
        expected = feasible[-1]
    else:
        u_min = min(u for _, u in path)
        expected = [c for c in path if c[1] == u_min][-1]
    got = (res.selector.terms[0][1], res.u_hat)
    assert got == expected
    assert (res.bounded is Bounded.SUCCESS) == bool(feasible)
    flags = [u <= eps for _, u in cands]
    if any(flags) and flags == sorted(flags):
        # monotone feasibility: the search finds the smallest feasible threshold
        assert got == next(c for c in cands if c[1] <= eps)
