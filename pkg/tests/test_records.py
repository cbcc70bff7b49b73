import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selgen.errors import ConfigurationError, MissingScoreError, ValidationError
from selgen.records import (
    Dataset,
    RiskBudget,
    ScoredRecord,
    dumps_dataset,
    load_dataset,
    record_from_json,
    split_labeled_fraction,
    write_dataset,
)


def _write(tmp_path, lines):
    p = tmp_path / "d.jsonl"
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return p


def test_labeled_line_goes_to_z_e(tmp_path):
    ds = load_dataset(_write(tmp_path, ['{"id":"a","f_m1":0.9,"f_e":0.8,"e":1,"v":1}']))
    assert [r.id for r in ds.labeled] == ["a"]
    assert len(ds.unlabeled) == 0


def test_unlabeled_line_goes_to_z_u(tmp_path):
    ds = load_dataset(_write(tmp_path, ['{"id":"b","f_m1":0.4,"f_e":0.2,"v":0}']))
    assert [r.id for r in ds.unlabeled] == ["b"]


def test_out_of_range_score_reports_field_and_line(tmp_path):
    p = _write(tmp_path, ['{"id":"a","f_m1":0.5,"f_e":0.2,"v":0}', '{"id":"c","f_m1":1.3,"f_e":0.2,"v":0}'])
    with pytest.raises(ValidationError, match="line 2: f_m1 out of range") as exc:
        load_dataset(p)
    assert exc.value.line == 2


@pytest.mark.parametrize(
    "line, message",
    [
        ('{"id":"a","f_m1":0.5,"f_e":0.2,"v":1}', "requires an entailment label"),
        ('{"id":"a","f_m1":0.5,"f_e":0.2,', "malformed JSON"),
        ('{"id":"a","f_m1":0.5,"f_e":NaN,"v":0}', "out of range"),
        ('{"id":"a","f_m1":0.5,"v":0}', "missing field"),
        ('{"id":"a","f_m1":0.5,"f_e":0.2,"v":2}', "v must be 0 or 1"),
        ('{"id":"a","f_m1":"x","f_e":0.2,"v":0}', "f_m1 must be a number"),
        ('[1, 2]', "expected a JSON object"),
    ],
)
def test_invalid_lines_are_rejected(tmp_path, line, message):
    with pytest.raises(ValidationError, match=message):
        load_dataset(_write(tmp_path, [line]))


def test_duplicate_ids_rejected(tmp_path):
    p = _write(tmp_path, ['{"id":"a","f_m1":0.5,"f_e":0.2,"v":0}'] * 2)
    with pytest.raises(ValidationError, match="line 2: duplicate id"):
        load_dataset(p)


def test_test_mode_requires_labels(tmp_path):
    p = _write(tmp_path, ['{"id":"a","f_m1":0.5,"f_e":0.2,"v":0}'])
    load_dataset(p, "calibration")
    with pytest.raises(ValidationError, match="entailment label"):
        load_dataset(p, "test")


def test_unknown_fields_survive_round_trip(tmp_path):
    line = '{"id": "a", "f_m1": 0.5, "f_e": 0.25, "v": 0, "question": "who?"}'
    ds = load_dataset(_write(tmp_path, [line]))
    assert ds.records[0].extra == {"question": "who?"}
    assert json.loads(dumps_dataset(ds)) == json.loads(line)


def test_missing_f_m2_fails_fast():
    r = ScoredRecord("a", 0.5, 0.5, 0)
    with pytest.raises(MissingScoreError):
        r.score("f_m2")
    assert not Dataset((r,)).has_score("f_m2")


_unit = st.floats(0.0, 1.0, allow_nan=False)


@st.composite
def records(draw, i=0):
    v = draw(st.integers(0, 1))
    e = draw(st.integers(0, 1)) if v else draw(st.one_of(st.none(), st.integers(0, 1)))
    return ScoredRecord(
        id=f"id{i}",
        f_m1=draw(_unit),
        f_e=draw(_unit),
        v=v,
        f_m2=draw(st.one_of(st.none(), _unit)),
        e=e,
        em=draw(st.one_of(st.none(), st.integers(0, 1))),
    )


@st.composite
def datasets(draw):
    n = draw(st.integers(0, 20))
    return Dataset(tuple(draw(records(i)) for i in range(n)))


@settings(max_examples=60, deadline=None)
@given(datasets())
def test_serialize_load_round_trip_is_exact(tmp_path_factory, ds):
    p = tmp_path_factory.mktemp("rt") / "d.jsonl"
    write_dataset(ds, p)
    back = load_dataset(p)
    assert back.records == ds.records


@settings(max_examples=60, deadline=None)
@given(datasets())
def test_partition_is_exhaustive_and_disjoint(ds):
    z_e, z_u = ds.partition()
    assert len(z_e) + len(z_u) == len(ds)
    assert not {r.id for r in z_e} & {r.id for r in z_u}


def test_columns_encode_missing_values():
    ds = Dataset((ScoredRecord("a", 0.5, 0.25, 0), ScoredRecord("b", 0.1, 0.2, 1, f_m2=0.3, e=0, em=1)))
    c = ds.columns
    assert np.isnan(c.f_m2[0]) and c.f_m2[1] == 0.3
    assert list(c.e) == [-1, 0] and list(c.em) == [-1, 1]


def _labeled(n):
    return Dataset(tuple(ScoredRecord(f"r{i}", 0.5, 0.5, 1, e=i % 2) for i in range(n)))


def test_split_fraction_one_is_identity():
    ds = _labeled(10)
    assert split_labeled_fraction(ds, 1.0, 3) is ds


def test_split_fraction_zero_hides_everything():
    out = split_labeled_fraction(_labeled(10), 0.0, 3)
    assert len(out.labeled) == 0
    assert [r.e for r in out] == [r.e for r in _labeled(10)]


def test_split_keeps_floor_fraction_and_is_deterministic():
    a = split_labeled_fraction(_labeled(100), 0.75, 7)
    b = split_labeled_fraction(_labeled(100), 0.75, 7)
    assert len(a.labeled) == 75
    assert a.records == b.records
    assert len(split_labeled_fraction(_labeled(7), 0.5, 0).labeled) == 3


def test_split_rejects_bad_fraction():
    with pytest.raises(ValueError):
        split_labeled_fraction(_labeled(3), 1.5, 0)


def test_budget_from_total_matches_default_mapping():
    b = RiskBudget.from_total(0.25, 0.02)
    assert b.delta_w == 1e-5
    assert b.delta_s == b.delta_e == (0.02 - 1e-5) / 2
    assert b.q == 5
    assert b.total_delta == pytest.approx(0.02, abs=1e-17)


@pytest.mark.parametrize(
    "kw",
    [
        dict(eps_s=0.0, delta_s=0.1, delta_e=0.1, delta_w=0.1),
        dict(eps_s=0.2, delta_s=0.5, delta_e=0.5, delta_w=0.1),
        dict(eps_s=0.2, delta_s=0.1, delta_e=0.1, delta_w=0.1, q=0),
    ],
)
def test_budget_validation(kw):
    with pytest.raises(ConfigurationError):
        RiskBudget(**kw)


def test_budget_split_divides_every_delta():
    b = RiskBudget(0.2, 0.03, 0.06, 0.09).split(3)
    assert (b.delta_s, b.delta_e, b.delta_w) == (0.01, 0.02, 0.03)


def test_record_from_json_accepts_boolean_flags():
    r = record_from_json({"id": "a", "f_m1": 0.5, "f_e": 0.5, "e": True, "v": True})
    assert r.e == 1 and r.v == 1
