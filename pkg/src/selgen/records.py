"""Scored calibration/test records, datasets, risk budgets, and JSONL I/O.

One JSONL line holds one record::

    {"id": "a", "f_m1": 0.9, "f_m2": 0.7, "f_e": 0.8, "e": 1, "em": 0, "v": 1}

``f_m2``, ``e`` and ``em`` are optional; ``v = 1`` requires ``e``. Unknown
keys are kept in :attr:`ScoredRecord.extra` and written back unchanged.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Literal

import numpy as np

from .errors import ConfigurationError, MissingScoreError, ValidationError

SCORE_FIELDS = ("f_m1", "f_m2", "f_e")
SELECTION_KEYS = ("f_m1", "f_m2")
_KNOWN = ("id", "f_m1", "f_m2", "f_e", "e", "em", "v")


@dataclass(frozen=True)
class ScoredRecord:
    """One generated answer with its scores and (possibly hidden) labels."""

    id: str
    f_m1: float
    f_e: float
    v: int
    f_m2: float | None = None
    e: int | None = None
    em: int | None = None
    extra: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        _check_record(self)

    @property
    def labeled(self) -> bool:
        return self.v == 1

    def score(self, key: str) -> float:
        value = getattr(self, key)
        if value is None:
            raise MissingScoreError(f"record {self.id!r} has no {key}")
        return value

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "f_m1": self.f_m1}
        if self.f_m2 is not None:
            out["f_m2"] = self.f_m2
        out["f_e"] = self.f_e
        if self.e is not None:
            out["e"] = self.e
        if self.em is not None:
            out["em"] = self.em
        out["v"] = self.v
        out.update(self.extra)
        return out


def _check_record(r: ScoredRecord) -> None:
    if not isinstance(r.id, str) or not r.id:
        raise ValidationError("id must be a non-empty string")
    for name in SCORE_FIELDS:
        value = getattr(r, name)
        if value is None:
            if name == "f_m2":
                continue
            raise ValidationError(f"{name} is required")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{name} must be a number")
        if not math.isfinite(value) or not 0.0 <= value <= 1.0:
            raise ValidationError(f"{name} out of range: {value!r}")
    for name in ("e", "em", "v"):
        value = getattr(r, name)
        if value is None and name != "v":
            continue
        if value not in (0, 1) or isinstance(value, float):
            raise ValidationError(f"{name} must be 0 or 1, got {value!r}")
    if r.v == 1 and r.e is None:
        raise ValidationError("v=1 requires an entailment label e")


@dataclass(frozen=True)
class Columns:
    """Column view of a dataset. Missing values: NaN for scores, -1 for flags."""

    f_m1: np.ndarray
    f_m2: np.ndarray
    f_e: np.ndarray
    e: np.ndarray
    em: np.ndarray
    v: np.ndarray

    def __len__(self) -> int:
        return len(self.f_e)

    def score(self, key: str) -> np.ndarray:
        if key not in SELECTION_KEYS:
            raise ValueError(f"unknown selection score {key!r}")
        return getattr(self, key)

    def take(self, idx) -> "Columns":
        return Columns(*(getattr(self, f)[idx] for f in ("f_m1", "f_m2", "f_e", "e", "em", "v")))


@dataclass(frozen=True)
class Dataset:
    records: tuple[ScoredRecord, ...]
    provenance: str = ""

    def __post_init__(self):
        if not isinstance(self.records, tuple):
            object.__setattr__(self, "records", tuple(self.records))
        seen: set[str] = set()
        for r in self.records:
            if r.id in seen:
                raise ValidationError(f"duplicate id {r.id!r}")
            seen.add(r.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @cached_property
    def columns(self) -> Columns:
        recs = self.records
        nan = float("nan")
        return Columns(
            f_m1=np.fromiter((r.f_m1 for r in recs), float, len(recs)),
            f_m2=np.fromiter((nan if r.f_m2 is None else r.f_m2 for r in recs), float, len(recs)),
            f_e=np.fromiter((r.f_e for r in recs), float, len(recs)),
            e=np.fromiter((-1 if r.e is None else r.e for r in recs), np.int8, len(recs)),
            em=np.fromiter((-1 if r.em is None else r.em for r in recs), np.int8, len(recs)),
            v=np.fromiter((r.v for r in recs), np.int8, len(recs)),
        )

    @property
    def labeled(self) -> "Dataset":
        """Z_E: records whose entailment label is visible."""
        return self.subset(r.v == 1 for r in self.records)

    @property
    def unlabeled(self) -> "Dataset":
        """Z_U: records whose entailment label is hidden."""
        return self.subset(r.v == 0 for r in self.records)

    def partition(self) -> tuple["Dataset", "Dataset"]:
        return self.labeled, self.unlabeled

    def subset(self, keep: Iterable[bool]) -> "Dataset":
        return Dataset(tuple(r for r, k in zip(self.records, keep) if k), self.provenance)

    def has_score(self, key: str) -> bool:
        return all(getattr(r, key) is not None for r in self.records)

    def __add__(self, other: "Dataset") -> "Dataset":
        return Dataset(self.records + other.records, self.provenance or other.provenance)


@dataclass(frozen=True)
class RiskBudget:
    """Target FDR-E ``eps_s`` and the confidence split of the semi-supervised bound.

    The three deltas are failure probabilities for the selection/NER bounds,
    the entailment-set bounds and the visibility-weight bounds; their sum is
    the overall failure probability.
    """

    eps_s: float
    delta_s: float
    delta_e: float
    delta_w: float
    q: int = 5

    def __post_init__(self):
        if not 0.0 < self.eps_s <= 1.0:
            raise ConfigurationError(f"eps_s must lie in (0, 1], got {self.eps_s}")
        for name in ("delta_s", "delta_e", "delta_w"):
            d = getattr(self, name)
            if not 0.0 < d < 1.0:
                raise ConfigurationError(f"{name} must lie in (0, 1), got {d}")
        if self.total_delta >= 1.0:
            raise ConfigurationError("delta_s + delta_e + delta_w must be < 1")
        if isinstance(self.q, bool) or not isinstance(self.q, int) or self.q < 1:
            raise ConfigurationError(f"q must be a positive integer, got {self.q!r}")

    @classmethod
    def from_total(cls, eps: float, delta: float, q: int = 5, delta_w: float = 1e-5) -> "RiskBudget":
        """Map a user-level ``(eps, delta)`` pair to the four-way split.

        ``delta_s = delta_e = (delta - delta_w) / 2``.
        """
        if not delta_w < delta:
            raise ConfigurationError(f"delta_w ({delta_w}) must be smaller than delta ({delta})")
        half = (delta - delta_w) / 2
        return cls(eps_s=eps, delta_s=half, delta_e=half, delta_w=delta_w, q=q)

    @property
    def total_delta(self) -> float:
        return self.delta_s + self.delta_e + self.delta_w

    def split(self, parts: int) -> "RiskBudget":
        """Budget for one of ``parts`` union-bounded sub-problems."""
        return replace(
            self,
            delta_s=self.delta_s / parts,
            delta_e=self.delta_e / parts,
            delta_w=self.delta_w / parts,
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "eps_s": self.eps_s,
            "delta_s": self.delta_s,
            "delta_e": self.delta_e,
            "delta_w": self.delta_w,
            "q": self.q,
        }


def record_from_json(obj: Any, line: int | None = None) -> ScoredRecord:
    if not isinstance(obj, dict):
        raise ValidationError("expected a JSON object", line)
    missing = [k for k in ("id", "f_m1", "f_e", "v") if k not in obj]
    if missing:
        raise ValidationError(f"missing field(s): {', '.join(missing)}", line)
    kw = {k: obj.get(k) for k in _KNOWN}
    for flag in ("e", "em", "v"):
        if isinstance(kw[flag], bool):
            kw[flag] = int(kw[flag])
    extra = {k: v for k, v in obj.items() if k not in _KNOWN}
    try:
        return ScoredRecord(extra=extra, **kw)
    except ValidationError as exc:
        raise ValidationError(str(exc), line) from None


def load_dataset(path: str | Path, mode: Literal["calibration", "test"] = "calibration") -> Dataset:
    """Read and validate a JSONL file.

    In ``test`` mode every record must carry ``e`` regardless of ``v``.
    Errors report the offending 1-based line number.
    """
    if mode not in ("calibration", "test"):
        raise ValueError(f"unknown schema mode {mode!r}")
    path = Path(path)
    records = []
    seen: dict[str, int] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"malformed JSON: {exc.msg}", lineno) from None
            rec = record_from_json(obj, lineno)
            if mode == "test" and rec.e is None:
                raise ValidationError("test records need an entailment label e", lineno)
            if rec.id in seen:
                raise ValidationError(f"duplicate id {rec.id!r} (first on line {seen[rec.id]})", lineno)
            seen[rec.id] = lineno
            records.append(rec)
    return Dataset(tuple(records), provenance=str(path))


def dumps_dataset(ds: Dataset) -> str:
    return "".join(json.dumps(r.to_json()) + "\n" for r in ds.records)


def write_dataset(ds: Dataset, path: str | Path) -> None:
    from ._io import atomic_write_text

    atomic_write_text(path, dumps_dataset(ds))


def split_labeled_fraction(ds: Dataset, fraction: float, seed: int) -> Dataset:
    """Hide the labels of a random ``1 - fraction`` of the labeled records.

    Exactly ``floor(fraction * |Z_E|)`` records keep ``v = 1``. The hidden
    records keep their ``e`` value but get ``v = 0``, so every algorithm
    treats them as unlabeled.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    labeled_idx = [i for i, r in enumerate(ds.records) if r.v == 1]
    keep = math.floor(fraction * len(labeled_idx))
    if keep == len(labeled_idx):
        return ds
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(labeled_idx))
    hidden = {labeled_idx[i] for i in order[keep:]}
    records = tuple(replace(r, v=0) if i in hidden else r for i, r in enumerate(ds.records))
    return Dataset(records, ds.provenance)
