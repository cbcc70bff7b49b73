import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import labeled, u_ssl_by_hand, unlabeled
from selgen.binom import u_binom
from selgen.fdr_bounds import compute_u_ssl, compute_u_ssl_opt, fdr_e_bound
from selgen.records import Dataset
from selgen.simulator import identity_world, sample_dataset, trial_rng


def _sim_split(seed, n_l=40, n_u=200):
    w = identity_world()
    ds = sample_dataset(w, n_l + n_u, trial_rng(seed, 0))
    recs = ds.records
    from dataclasses import replace

    z_e = Dataset(tuple(replace(r, v=1) for r in recs[:n_l]))
    z_u = Dataset(tuple(replace(r, v=0) for r in recs[n_l:]))
    return z_e, z_u


def test_everything_pseudo_entailed_leaves_only_ner_term():
    z_e = labeled([0.2, 0.5, 0.9], [1, 1, 1])
    z_u = unlabeled([0.3, 0.6, 0.95, 0.99])
    b = compute_u_ssl(z_e, z_u, 0.2, 0.9, 0.4)
    assert b.tau_e.tau_e == 0.2
    assert (b.ell, b.k, b.fner_lower) == (0, 0, 0.0)
    assert b.u_ssl == pytest.approx(min(0.9 + u_binom(0, 4, 0.1), 1.0))


def test_small_hand_example():
    # Labeled scores and labels: (0.1, 0), (0.4, 1), (0.6, 0), (0.9, 1); unlabeled: 0.2, 0.7.
    # With delta_e / 2 = 0.25 the pseudo-labeler threshold is 0.9: at 0.6 one
    # non-entailed record remains and u_binom(1, 4, 0.25) ~ 0.544 > 0.5.
    z_e = labeled([0.1, 0.4, 0.6, 0.9], [0, 1, 0, 1])
    z_u = unlabeled([0.2, 0.7])
    b = compute_u_ssl(z_e, z_u, 0.5, 0.5, 0.5)
    # (1 - t)^4 + 4 t (1 - t)^3 = 0.25
    root = mpmath.findroot(lambda t: (1 - t) ** 4 + 4 * t * (1 - t) ** 3 - mpmath.mpf("0.25"), 0.5)
    assert u_binom(1, 4, 0.25) == pytest.approx(float(root), abs=1e-9)
    assert b.tau_e.tau_e == 0.9
    assert (b.ell, b.k) == (1, 2)
    assert b.ner_upper == 1.0
    assert b.u_ssl == 1.0
    assert u_binom(1, 2, 0.25) == pytest.approx(0.866, abs=1e-3)


def test_empty_unlabeled_is_vacuous():
    b = compute_u_ssl(labeled([0.2, 0.7], [1, 0]), Dataset(()), 0.1, 0.3, 0.1)
    assert b.u_ssl == 1.0


@settings(max_examples=150, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 10), st.integers(0, 1)), max_size=40),
    st.lists(st.integers(0, 10), max_size=40),
    st.floats(0, 1),
    st.floats(1e-3, 0.9),
    st.floats(1e-3, 0.9),
)
def test_u_ssl_matches_hand_composition(rows, fu, eps_e, d_s, d_e):
    fe_l = [s / 10 for s, _ in rows]
    e_l = [y for _, y in rows]
    fe_u = [s / 10 for s in fu]
    b = compute_u_ssl(labeled(fe_l, e_l), unlabeled(fe_u), d_s, eps_e, d_e)
    u, tau, ell, k = u_ssl_by_hand(fe_l, e_l, fe_u, d_s, eps_e, d_e)
    assert (b.u_ssl, b.tau_e.tau_e, b.ell, b.k) == (u, tau, ell, k)
    assert b.u_ssl == min(max(b.eps_e_used - b.fner_lower + b.ner_upper, 0.0), 1.0)


def test_single_point_grid_equals_single_bound():
    z_e, z_u = _sim_split(1)
    eps_max = sum(r.e == 0 for r in z_e) / len(z_e)
    opt = compute_u_ssl_opt(z_e, z_u, 0.05, 1, 0.05)
    one = compute_u_ssl(z_e, z_u, 0.05, eps_max, 0.05)
    assert opt == one


def test_all_entailed_grid_is_degenerate():
    z_e = labeled([0.2, 0.5, 0.9, 0.95], [1, 1, 1, 1])
    z_u = unlabeled([0.3, 0.8])
    opt = compute_u_ssl_opt(z_e, z_u, 0.1, 5, 0.1)
    assert [g.eps_e_used for g in opt.grid] == [0.0] * 5
    assert not opt.tau_e.feasible
    # every labeled record is entailed but outside the empty set: ell = 4, k = 2
    assert (opt.ell, opt.k) == (4, 2)
    assert opt.u_ssl == pytest.approx(1.0 - (0.1 / 5 / 2) ** (1 / 4), abs=1e-9)


def test_empty_labeled_grid_is_vacuous():
    opt = compute_u_ssl_opt(Dataset(()), unlabeled([0.3]), 0.1, 5, 0.1)
    assert (opt.u_ssl, opt.eps_e_used) == (1.0, 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_grid_optimum_equals_recomputed_minimum(seed):
    z_e, z_u = _sim_split(seed)
    q, d_s, d_e = 5, 0.04, 0.06
    opt = compute_u_ssl_opt(z_e, z_u, d_s, q, d_e)
    eps_max = sum(r.e == 0 for r in z_e) / len(z_e)
    singles = [compute_u_ssl(z_e, z_u, d_s / q, eps_max * (q - i + 1) / q, d_e / q) for i in range(1, q + 1)]
    assert opt.u_ssl == min(s.u_ssl for s in singles)
    assert all(opt.u_ssl <= s.u_ssl for s in singles)
    # ties go to the smallest eps_e
    best = [s for s in singles if s.u_ssl == opt.u_ssl][-1]
    assert opt.eps_e_used == best.eps_e_used


def test_composed_bound_without_unlabeled():
    z_e = labeled([0.2, 0.5, 0.9, 0.95], [1, 0, 1, 1])
    cb = fdr_e_bound(z_e, Dataset(()), 0.05, 5, 0.05, 1e-4)
    assert cb.w_sl == 1.0
    assert cb.w_ssl == pytest.approx(1 - (1e-4 / 2) ** (1 / 4), abs=1e-9)
    assert cb.u_sl == u_binom(1, 4, 0.025)
    assert cb.u == min(cb.u_sl + cb.w_ssl * cb.u_ssl_opt, 1.0)


def test_composed_bound_without_labeled():
    z_u = unlabeled([0.2, 0.5, 0.9])
    cb = fdr_e_bound(Dataset(()), z_u, 0.05, 5, 0.05, 1e-4)
    assert cb.w_sl == pytest.approx(1 - (1e-4 / 2) ** (1 / 3), abs=1e-9)
    assert cb.u_sl == 1.0
    assert cb.w_ssl == 1.0 and cb.u_ssl_opt == 1.0
    assert cb.u == 1.0


def test_composed_bound_both_empty():
    assert fdr_e_bound(Dataset(()), Dataset(()), 0.05, 5, 0.05, 1e-4).u == 1.0


@pytest.mark.parametrize("seed", range(3))
def test_composed_bound_recomposition(seed):
    z_e, z_u = _sim_split(seed)
    d_s, q, d_e, d_w = 0.01, 5, 0.01, 1e-5
    cb = fdr_e_bound(z_e, z_u, d_s, q, d_e, d_w)
    n_l, n_u = len(z_e), len(z_u)
    w_sl = u_binom(n_l, n_l + n_u, d_w / 2)
    u_sl = u_binom(sum(r.e == 0 for r in z_e), n_l, d_s / 2)
    w_ssl = u_binom(n_u, n_l + n_u, d_w / 2)
    u_opt = compute_u_ssl_opt(z_e, z_u, d_s / 2, q, d_e / 2).u_ssl
    assert (cb.w_sl, cb.u_sl, cb.w_ssl, cb.u_ssl_opt) == (w_sl, u_sl, w_ssl, u_opt)
    assert cb.u == min(max(w_sl * u_sl + w_ssl * u_opt, 0.0), 1.0)
    for f in (cb.w_sl, cb.u_sl, cb.w_ssl, cb.u_ssl_opt, cb.u):
        assert 0.0 <= f <= 1.0


def test_more_unlabeled_data_shrinks_ner_bound_on_average():
    w = identity_world()
    means = []
    for n_u in (100, 400, 1600):
        vals = []
        for seed in range(10):
            rng = trial_rng(seed, n_u)
            l = sample_dataset(w, 100, rng)
            u = sample_dataset(w, n_u, rng)
            z_e = labeled([r.f_e for r in l], [r.e for r in l])
            vals.append(compute_u_ssl(z_e, unlabeled([r.f_e for r in u]), 0.02, 0.2, 0.02).ner_upper)
        means.append(np.mean(vals))
    assert means[0] > means[1] > means[2]


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1])
def test_budget_validation(bad):
    with pytest.raises(ValueError):
        fdr_e_bound(Dataset(()), Dataset(()), bad, 5, 0.1, 0.1)
    with pytest.raises(ValueError):
        compute_u_ssl(Dataset(()), Dataset(()), 0.1, 0.2, bad)
