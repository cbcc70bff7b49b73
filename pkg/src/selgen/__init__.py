"""Selective generation with a certified false discovery rate under textual entailment.

Learn when a generator should abstain so that, with probability at least
``1 - delta`` over the calibration data, the rate of non-entailed answers
among those it returns is at most ``eps``.
"""
from .baselines import PslConfig, sgen_em, sgen_psl, sgen_sup
from .binom import BoundQuery, binom_cdf, l_binom, u_binom
from .calibrate import Bounded, CertifiedResult, Selector, sgen_semi_double, sgen_semi_ms, sgen_semi_single
from .entailment_set import EntailmentSetParam, learn_entailment_set, pseudo_label
from .errors import ConfigurationError, MissingScoreError, SelgenError, UndefinedRiskError, ValidationError
from .evaluate import EvalReport, apply_selector, evaluate, repeated_splits
from .fdr_bounds import ComposedBound, SslBound, compute_u_ssl, compute_u_ssl_opt, fdr_e_bound
from .records import Dataset, RiskBudget, ScoredRecord, load_dataset, split_labeled_fraction
from .simulator import TrueRisk, WorldSpec, lemma4_curve, mc_verify, sample_dataset, true_fdr_e

__version__ = "0.1.0"

__all__ = [
    "BoundQuery", "binom_cdf", "u_binom", "l_binom",
    "ScoredRecord", "Dataset", "RiskBudget", "load_dataset", "split_labeled_fraction",
    "EntailmentSetParam", "learn_entailment_set", "pseudo_label",
    "SslBound", "ComposedBound", "compute_u_ssl", "compute_u_ssl_opt", "fdr_e_bound",
    "Selector", "Bounded", "CertifiedResult", "sgen_semi_single", "sgen_semi_double", "sgen_semi_ms",
    "PslConfig", "sgen_sup", "sgen_psl", "sgen_em",
    "WorldSpec", "TrueRisk", "sample_dataset", "true_fdr_e", "mc_verify", "lemma4_curve",
    "EvalReport", "apply_selector", "evaluate", "repeated_splits",
    "SelgenError", "ValidationError", "MissingScoreError", "ConfigurationError", "UndefinedRiskError",
]
