"""Synthetic worlds with known true risks, and Monte Carlo audits of the bounds.

A world draws a selection score ``s = f_m1`` from ``score_law``, the label
``e ~ Bernoulli(pi(s))`` through a calibration curve ``pi``, the entailment
score ``f_e`` from a class-conditional beta law, an optional second score
``f_m2 = expit(gain * logit(pi(s)) + noise * Z)``, an exact-match flag with
``P(em = 1 | e)`` and a visibility flag ``v ~ Bernoulli(p_v)``.

Because ``f_e`` and ``f_m2`` depend on ``s`` and ``e`` only through the
stated laws, every population risk reduces to a one-dimensional integral
over ``s``. Sampled records keep ``e`` even when ``v = 0`` so audits can
score them; the learners never read labels of unlabeled records.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable

import numpy as np
from scipy import integrate, stats
from scipy.special import expit, logit, ndtr

from .binom import u_binom
from .calibrate import Selector, sgen_semi_ms, sgen_semi_single
from .entailment_set import EntailmentSetParam, learn_entailment_set
from .errors import ConfigurationError, UndefinedRiskError
from .fdr_bounds import compute_u_ssl
from .records import Dataset, RiskBudget, ScoredRecord

__all__ = [
    "ScoreLaw",
    "CalibrationCurve",
    "EntailLaw",
    "M2Law",
    "EmLaw",
    "WorldSpec",
    "TrueRisk",
    "AuditReport",
    "identity_world",
    "sample_arrays",
    "sample_dataset",
    "true_fdr_e",
    "plug_in_fdr_e",
    "mc_verify",
    "lemma4_curve",
    "CLAIMS",
]


def _prob(name: str, x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise ConfigurationError(f"{name} must lie in [0, 1], got {x}")


def _positive(name: str, x: float) -> None:
    if not (x > 0 and math.isfinite(x)):
        raise ConfigurationError(f"{name} must be positive and finite, got {x}")


@dataclass(frozen=True)
class ScoreLaw:
    """``uniform`` or ``beta(a, b)`` law of ``f_m1``."""

    kind: str = "uniform"
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in ("uniform", "beta"):
            raise ConfigurationError(f"unknown score law {self.kind!r}")
        _positive("a", self.a)
        _positive("b", self.b)

    def dist(self):
        return stats.uniform() if self.kind == "uniform" else stats.beta(self.a, self.b)


@dataclass(frozen=True)
class CalibrationCurve:
    """``pi(s) = P(e = 1 | f_m1 = s)``.

    ``identity``: ``pi(s) = s``; ``logistic``: ``expit(slope * (s - offset))``;
    ``constant``: ``pi(s) = p``.
    """

    kind: str = "identity"
    slope: float = 1.0
    offset: float = 0.5
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in ("identity", "logistic", "constant"):
            raise ConfigurationError(f"unknown calibration curve {self.kind!r}")
        _prob("p", self.p)
        if not (math.isfinite(self.slope) and math.isfinite(self.offset)):
            raise ConfigurationError("slope and offset must be finite")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "identity":
            return s
        if self.kind == "logistic":
            return expit(self.slope * (s - self.offset))
        return np.full_like(s, self.p)


@dataclass(frozen=True)
class EntailLaw:
    """``f_e | e = 1 ~ Beta(a1, b1)`` and ``f_e | e = 0 ~ Beta(a0, b0)``."""

    a1: float = 8.0
    b1: float = 1.0
    a0: float = 1.0
    b0: float = 8.0

    def __post_init__(self):
        for name in ("a1", "b1", "a0", "b0"):
            _positive(name, getattr(self, name))

    def dist(self, e: int):
        return stats.beta(self.a1, self.b1) if e == 1 else stats.beta(self.a0, self.b0)


@dataclass(frozen=True)
class M2Law:
    """``f_m2 = expit(gain * logit(pi(s)) + noise * Z)`` with ``Z ~ N(0, 1)``."""

    gain: float = 1.0
    noise: float = 0.5

    def __post_init__(self):
        _positive("gain", self.gain)
        _positive("noise", self.noise)


@dataclass(frozen=True)
class EmLaw:
    """``P(em = 1 | e = 1)`` and ``P(em = 1 | e = 0)``."""

    p1: float = 0.6
    p0: float = 0.0

    def __post_init__(self):
        _prob("p1", self.p1)
        _prob("p0", self.p0)


@dataclass(frozen=True)
class WorldSpec:
    score_law: ScoreLaw = field(default_factory=ScoreLaw)
    calibration_curve: CalibrationCurve = field(default_factory=CalibrationCurve)
    entail_score_law: EntailLaw = field(default_factory=EntailLaw)
    f_m2_law: M2Law | None = field(default_factory=M2Law)
    p_v: float = 0.2
    em_law: EmLaw = field(default_factory=EmLaw)
    seed: int = 0

    def __post_init__(self):
        _prob("p_v", self.p_v)
        if self.calibration_curve.kind == "identity" and self.score_law.kind != "uniform":
            raise ConfigurationError("the identity calibration curve requires a uniform score law")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigurationError(f"seed must be a non-negative integer, got {self.seed!r}")

    @property
    def is_identity(self) -> bool:
        return self.calibration_curve.kind == "identity"

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "WorldSpec":
        known = {"score_law", "calibration_curve", "entail_score_law", "f_m2_law", "p_v", "em_law", "seed"}
        unknown = set(obj) - known
        if unknown:
            raise ConfigurationError(f"unknown WorldSpec fields: {sorted(unknown)}")
        try:
            kw: dict[str, Any] = {}
            for name, typ in (("score_law", ScoreLaw), ("calibration_curve", CalibrationCurve),
                              ("entail_score_law", EntailLaw), ("em_law", EmLaw)):
                if name in obj:
                    kw[name] = typ(**obj[name])
            if "f_m2_law" in obj:
                kw["f_m2_law"] = None if obj["f_m2_law"] is None else M2Law(**obj["f_m2_law"])
            for name in ("p_v", "seed"):
                if name in obj:
                    kw[name] = obj[name]
            return cls(**kw)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None


def identity_world(**kw) -> WorldSpec:
    """Uniform scores with ``P(e = 1 | s) = s``; true FDR-E of ``f_m1 >= t`` is ``(1 - t) / 2``."""
    return WorldSpec(**kw)


def sample_arrays(w: WorldSpec, n: int, rng: np.random.Generator | None = None) -> dict[str, np.ndarray]:
    """Draw ``n`` records as columns. Uses ``w.seed`` unless ``rng`` is given."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if rng is None:
        rng = np.random.default_rng(w.seed)
    sl, el = w.score_law, w.entail_score_law
    s = rng.uniform(size=n) if sl.kind == "uniform" else rng.beta(sl.a, sl.b, size=n)
    pi = w.calibration_curve(s)
    e = (rng.uniform(size=n) < pi).astype(np.int8)
    fe = np.where(e == 1, rng.beta(el.a1, el.b1, size=n), rng.beta(el.a0, el.b0, size=n))
    out = {"f_m1": s, "f_e": fe, "e": e}
    if w.f_m2_law is not None:
        z = rng.standard_normal(size=n)
        with np.errstate(divide="ignore"):
            out["f_m2"] = expit(w.f_m2_law.gain * logit(pi) + w.f_m2_law.noise * z)
    p_em = np.where(e == 1, w.em_law.p1, w.em_law.p0)
    out["em"] = (rng.uniform(size=n) < p_em).astype(np.int8)
    out["v"] = (rng.uniform(size=n) < w.p_v).astype(np.int8)
    return out


def sample_dataset(w: WorldSpec, n: int, rng: np.random.Generator | None = None) -> Dataset:
    """``n`` i.i.d. records, deterministic given the world seed (or ``rng``)."""
    cols = {k: v.tolist() for k, v in sample_arrays(w, n, rng).items()}
    m2 = cols.get("f_m2", [None] * n)
    records = tuple(
        ScoredRecord(
            id=f"r{i}",
            f_m1=cols["f_m1"][i],
            f_e=cols["f_e"][i],
            v=cols["v"][i],
            f_m2=m2[i],
            e=cols["e"][i],
            em=cols["em"][i],
        )
        for i in range(n)
    )
    return Dataset(records, provenance=f"simulated seed={w.seed}")


# ---------------------------------------------------------------- true risks


def _selection_prob(w: WorldSpec, sel: Selector | None) -> tuple[float, Callable[[np.ndarray], np.ndarray]]:
    """Lower integration limit and ``P(selected | s)`` for ``s`` above it."""
    t1, t2 = -math.inf, None
    if sel is not None:
        for k, t in sel.terms:
            if k == "f_m1":
                t1 = t
            elif k == "f_m2":
                if w.f_m2_law is None:
                    raise ConfigurationError("selector uses f_m2 but the world has no f_m2 law")
                t2 = t
    if t2 is None or t2 <= 0.0:
        return t1, lambda s: np.ones_like(np.asarray(s, dtype=float))
    if t2 >= 1.0:
        return t1, lambda s: np.zeros_like(np.asarray(s, dtype=float))
    law, curve, lt2 = w.f_m2_law, w.calibration_curve, float(logit(t2))

    def g(s):
        with np.errstate(divide="ignore"):
            return ndtr((law.gain * logit(curve(s)) - lt2) / law.noise)

    return t1, g


def _quad(f, a: float, b: float) -> float:
    if a >= b:
        return 0.0
    val, _ = integrate.quad(f, a, b, epsabs=1e-15, epsrel=1e-12, limit=200)
    return val


def _selected_moments(w: WorldSpec, sel: Selector | None) -> tuple[float, float]:
    """``(P(selected), P(selected and e = 0))``."""
    t1, g = _selection_prob(w, sel)
    lo = max(t1, 0.0)
    pdf, curve = w.score_law.dist().pdf, w.calibration_curve
    mass = _quad(lambda s: float(pdf(s) * g(s)), lo, 1.0)
    bad = _quad(lambda s: float(pdf(s) * g(s) * (1.0 - curve(s))), lo, 1.0)
    return mass, bad


def true_fdr_e(w: WorldSpec, selector: Selector | None, method: str = "auto") -> float:
    """Population FDR-E ``P(e = 0 | selected)``.

    ``method="auto"`` uses a closed form when one exists (identity world with
    an ``f_m1`` threshold gives ``(1 - t) / 2``; a constant curve gives
    ``1 - p``) and adaptive quadrature otherwise. ``"quad"`` always
    integrates. ``selector=None`` means select everything.

    Raises
    ------
    UndefinedRiskError
        When the selected region has zero probability.
    """
    if method not in ("auto", "quad"):
        raise ValueError(f"unknown method {method!r}")
    keys = () if selector is None else selector.keys
    if method == "auto" and "f_m2" not in keys:
        t = -math.inf if selector is None else dict(selector.terms)["f_m1"]
        tail = float(w.score_law.dist().sf(t)) if t > 0 else 1.0
        if tail <= 0.0:
            raise UndefinedRiskError(f"selector {selector} selects a zero-probability region")
        if w.is_identity:
            return (1.0 - max(t, 0.0)) / 2.0
        if w.calibration_curve.kind == "constant":
            return 1.0 - w.calibration_curve.p
    mass, bad = _selected_moments(w, selector)
    if mass <= 0.0:
        raise UndefinedRiskError(f"selector {selector} selects a zero-probability region")
    return min(max(bad / mass, 0.0), 1.0)


def plug_in_fdr_e(w: WorldSpec, selector: Selector | None, n: int = 10**6, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of FDR-E and its standard error from ``n`` fresh draws."""
    cols = sample_arrays(w, n, np.random.default_rng(seed))
    keep = np.ones(n, dtype=bool)
    if selector is not None:
        for k, t in selector.terms:
            keep &= cols[k] >= t
    m = int(keep.sum())
    if m == 0:
        raise UndefinedRiskError("no simulated record was selected")
    p = float(np.mean(cols["e"][keep] == 0))
    return p, math.sqrt(max(p * (1 - p), 0.0) / m)


@dataclass(frozen=True)
class TrueRisk:
    """Population risks of a world, conditional on a selector.

    ``fer_at`` is ``P(e = 0, f_e >= tau_e | selected)`` and ``ner_at`` is
    ``P(f_e < tau_e | selected)``.
    """

    world: WorldSpec

    def fdr_e_at(self, selector: Selector | None) -> float:
        return true_fdr_e(self.world, selector)

    def _tau(self, tau_e) -> float:
        return tau_e.tau_e if isinstance(tau_e, EntailmentSetParam) else float(tau_e)

    def fer_at(self, tau_e, selector: Selector | None = None) -> float:
        t = self._tau(tau_e)
        if math.isinf(t):
            return 0.0
        q0 = self.fdr_e_at(selector)
        return q0 * float(self.world.entail_score_law.dist(0).sf(t))

    def ner_at(self, tau_e, selector: Selector | None = None) -> float:
        t = self._tau(tau_e)
        if math.isinf(t):
            return 1.0
        q0 = self.fdr_e_at(selector)
        law = self.world.entail_score_law
        return q0 * float(law.dist(0).cdf(t)) + (1.0 - q0) * float(law.dist(1).cdf(t))


# ------------------------------------------------------------------- audits

CLAIMS = ("fer", "u_ssl", "theorem1", "theorem2")


@dataclass(frozen=True)
class AuditReport:
    claim: str
    trials: int
    violations: int
    frequency: float
    ci_low: float
    ci_high: float
    passed: bool
    delta: float
    allowed: int
    undefined: int = 0

    def to_json(self) -> dict[str, Any]:
        return {
            "claim": self.claim,
            "trials": self.trials,
            "violations": self.violations,
            "frequency": self.frequency,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "pass": self.passed,
            "delta": self.delta,
            "allowed": self.allowed,
            "undefined": self.undefined,
        }


def allowed_violations(trials: int, delta: float) -> int:
    """``ceil(trials * (delta + 3 sigma))`` with ``sigma = sqrt(delta (1 - delta) / trials)``."""
    sigma = math.sqrt(delta * (1 - delta) / trials)
    return math.ceil(trials * (delta + 3 * sigma) - 1e-9)


def clopper_pearson(k: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    lo = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def mc_verify(
    claim: str,
    w: WorldSpec,
    trials: int = 200,
    n_e: int = 500,
    n_u: int = 2000,
    eps: float = 0.25,
    delta: float = 0.02,
    q: int = 5,
    eps_e: float = 0.1,
    theta: float = 0.2,
    seed: int | None = None,
) -> AuditReport:
    """Repeat a learner on fresh draws and count bound violations.

    Each trial draws ``n_e + n_u`` records with visibility rate
    ``n_e / (n_e + n_u)`` from its own stream ``(seed, trial)``. The
    confidence budget is ``RiskBudget.from_total(eps, delta, q)``.

    ``fer``
        entailment set at ``(eps_e, delta_e)``; violation when true FER > ``eps_e``.
    ``u_ssl``
        single-``eps_e`` semi-supervised bound on the unselected population;
        nominal failure rate ``delta_e + delta_s / 2``.
    ``theorem1``
        model-selecting learner (single-threshold when the world has no
        ``f_m2``); violation when true FDR-E of the selector exceeds ``u_hat``.
    ``theorem2``
        ``K ~ Binomial(n_e, theta)``; violation when ``theta > u_binom(K, n_e, delta)``.

    The audit passes when violations do not exceed
    :func:`allowed_violations` at the nominal failure rate.
    """
    if claim not in CLAIMS:
        raise ValueError(f"unknown claim {claim!r}; choose from {CLAIMS}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seed = w.seed if seed is None else seed
    budget = RiskBudget.from_total(eps, delta, q)
    n = n_e + n_u
    world = replace(w, p_v=n_e / n) if n else w
    risk = TrueRisk(world)
    violations = undefined = 0

    if claim == "fer":
        nominal = budget.delta_e
    elif claim == "u_ssl":
        nominal = budget.delta_e + budget.delta_s / 2
    elif claim == "theorem1":
        nominal = budget.total_delta
    else:
        nominal = delta

    for t in range(trials):
        rng = trial_rng(seed, t)
        if claim == "theorem2":
            k = int(rng.binomial(n_e, theta))
            violations += theta > u_binom(k, n_e, delta)
            continue
        ds = sample_dataset(world, n, rng)
        z_e, z_u = ds.partition()
        if claim == "fer":
            param = learn_entailment_set(z_e, eps_e, budget.delta_e)
            violations += risk.fer_at(param) > eps_e
        elif claim == "u_ssl":
            b = compute_u_ssl(z_e, z_u, budget.delta_s, eps_e, budget.delta_e)
            violations += risk.fdr_e_at(None) > b.u_ssl
        else:
            if world.f_m2_law is not None:
                res = sgen_semi_ms(z_e, z_u, budget)
            else:
                res = sgen_semi_single("f_m1", z_e, z_u, budget)
            try:
                violations += risk.fdr_e_at(res.selector) > res.u_hat
            except UndefinedRiskError:
                undefined += 1

    allowed = allowed_violations(trials, nominal)
    lo, hi = clopper_pearson(violations, trials)
    return AuditReport(
        claim=claim,
        trials=trials,
        violations=int(violations),
        frequency=violations / trials,
        ci_low=lo,
        ci_high=hi,
        passed=violations <= allowed,
        delta=nominal,
        allowed=allowed,
        undefined=undefined,
    )


def lemma4_curve(w: WorldSpec, taus) -> list[tuple[float, float]]:
    """True FDR-E of ``f_m1 >= tau`` on a perfectly calibrated world.

    Refuses worlds whose calibration curve is not the identity and raises
    ``RuntimeError`` if the curve increases anywhere on the grid.
    """
    if not w.is_identity:
        raise ConfigurationError("the monotone curve needs a perfectly calibrated (identity) world")
    curve = [(float(t), true_fdr_e(w, Selector.single("f_m1", float(t)))) for t in taus]
    ordered = sorted(curve)
    for (_, a), (_, b) in zip(ordered, ordered[1:]):
        if b > a:
            raise RuntimeError("true FDR-E increased with the threshold")
    return curve
