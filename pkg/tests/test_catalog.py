import json
import math

import pytest
from hypothesis import given, strategies as st

from flexcover.catalog import (
    CLASS_CARDINALITIES,
    IRClass,
    Stage,
    catalog_from_dict,
    catalog_to_dict,
    discovery_curve,
    fit_log_trend,
    load_catalog,
    query_irs,
    slugify,
    validate_catalog,
)
from flexcover.errors import CatalogError


def test_builtin_size_and_classes(catalog):
    assert len(catalog) == 68
    assert len(IRClass) == 9 and len(Stage) == 4
    for cls, n in CLASS_CARDINALITIES.items():
        assert len(catalog.by_class(cls)) == n
    assert [CLASS_CARDINALITIES[c] for c in IRClass] == [13, 7, 13, 7, 12, 9, 2, 3, 2]


def test_every_stage_used(catalog):
    for s in Stage:
        assert query_irs(catalog, stage_filter=s)


def test_builtin_validates(catalog):
    assert validate_catalog(catalog, CLASS_CARDINALITIES) == []
    assert all(ir.stages and ir.sources and ir.components for ir in catalog.irs)


def test_ids_are_slugs(catalog):
    assert len({ir.id for ir in catalog.irs}) == 68
    for ir in catalog.irs:
        assert ir.id == slugify(ir.id)
    assert "zone_air_temperature_setpoint" in catalog


def test_query_filters(catalog):
    assert len(query_irs(catalog, class_filter=IRClass.EvChargingInfrastructure)) == 12
    names = [ir.name.lower() for ir in query_irs(catalog, class_filter=IRClass.TimeBasedParameters)]
    assert names == ["day of the week", "time of the day"]
    assert query_irs(catalog) == list(catalog.irs)
    both = query_irs(catalog, IRClass.HvacSystemParameters, Stage.EnrollmentQualification)
    assert all(ir.ir_class is IRClass.HvacSystemParameters and Stage.EnrollmentQualification in ir.stages
               for ir in both)


def _doc():
    return {
        "version": "t",
        "works": [{"id": "w1", "citation": "a"}, {"id": "w2", "citation": "b"}],
        "irs": [
            {"id": "x", "name": "X", "ir_class": "HvacSystemParameters", "stages": ["EnrollmentQualification"],
             "sources": ["w1"], "components": [{"phrase": "x", "kind_hint": "Any"}]},
        ],
    }


def test_empty_components_violation():
    doc = _doc()
    doc["irs"][0]["components"] = []
    v = validate_catalog(catalog_from_dict(doc))
    assert [(x.ir_id, x.rule) for x in v] == [("x", "empty-components")]


def test_dangling_source_violation():
    doc = _doc()
    doc["irs"][0]["sources"] = ["w9"]
    v = validate_catalog(catalog_from_dict(doc))
    assert [(x.ir_id, x.rule, x.detail) for x in v] == [("x", "dangling-source", "w9")]


def test_duplicate_ids_violation():
    doc = _doc()
    doc["irs"].append(dict(doc["irs"][0]))
    doc["works"].append({"id": "w1"})
    rules = sorted(x.rule for x in validate_catalog(catalog_from_dict(doc)))
    assert rules == ["duplicate-ir-id", "duplicate-work-id"]


def test_load_errors(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text("")
    with pytest.raises(CatalogError, match="line 1"):
        load_catalog(empty)
    bad = tmp_path / "bad.json"
    bad.write_text('{\n "version": "x",\n "works": [,]\n}')
    with pytest.raises(CatalogError, match="line 3"):
        load_catalog(bad)
    dangling = tmp_path / "d.json"
    doc = _doc()
    doc["irs"][0]["sources"] = ["nope"]
    dangling.write_text(json.dumps(doc))
    with pytest.raises(CatalogError, match="dangling-source"):
        load_catalog(dangling)
    with pytest.raises(CatalogError, match="not found"):
        load_catalog(tmp_path / "missing.json")


def test_unknown_enum_rejected():
    doc = _doc()
    doc["irs"][0]["ir_class"] = "Weather"
    with pytest.raises(CatalogError, match="IRClass"):
        catalog_from_dict(doc)


def test_dict_round_trip(catalog):
    assert catalog_from_dict(catalog_to_dict(catalog)) == catalog


def test_default_curve(catalog):
    curve = discovery_curve(catalog)
    assert curve[-1][1] == 68
    assert [k for k, _ in curve] == list(range(1, len(catalog.works) + 1))
    assert all(b[1] >= a[1] for a, b in zip(curve, curve[1:]))


def test_curve_rejects_bad_orderings(catalog):
    ids = [w.id for w in catalog.works]
    with pytest.raises(CatalogError, match="unknown"):
        discovery_curve(catalog, ids + ["zzz"])
    with pytest.raises(CatalogError, match="duplicate"):
        discovery_curve(catalog, ids + ids[:1])
    with pytest.raises(CatalogError, match="omits"):
        discovery_curve(catalog, ids[:1])


@given(st.randoms(use_true_random=False))
def test_curve_monotone_any_permutation(r):
    c = load_catalog()
    ids = [w.id for w in c.works]
    r.shuffle(ids)
    ys = [n for _, n in discovery_curve(c, ids)]
    assert ys == sorted(ys) and ys[-1] == len(c)


def test_log_fit_exact():
    pts = [(x, 3 * math.log(x) + 1) for x in range(1, 30)]
    a, b, r2 = fit_log_trend(pts)
    assert a == pytest.approx(3, abs=1e-9) and b == pytest.approx(1, abs=1e-9)
    assert r2 == pytest.approx(1.0, abs=1e-9)


def test_log_fit_two_points():
    assert fit_log_trend([(1, 2), (5, 7)])[2] == pytest.approx(1.0, abs=1e-12)


def test_log_fit_errors():
    with pytest.raises(ValueError):
        fit_log_trend([(1, 1)])
    with pytest.raises(ValueError):
        fit_log_trend([(2, 1), (2, 3)])
    with pytest.raises(ValueError):
        fit_log_trend([(0, 1), (2, 3)])


@given(
    st.floats(-50, 50, allow_nan=False),
    st.floats(-50, 50, allow_nan=False),
    st.integers(2, 60),
)
def test_log_fit_recovers_synthetic(a, b, n):
    pts = [(x, a * math.log(x) + b) for x in range(1, n + 1)]
    fa, fb, r2 = fit_log_trend(pts)
    assert fa == pytest.approx(a, abs=1e-7) and fb == pytest.approx(b, abs=1e-7)
    assert 0.0 <= r2 <= 1.0
    if abs(a) > 1e-3:
        assert r2 == pytest.approx(1.0, abs=1e-9)


def test_log_fit_r2_range(rng):
    for _ in range(50):
        pts = [(x, rng.uniform(-10, 10)) for x in range(1, rng.randint(3, 20))]
        assert 0.0 <= fit_log_trend(pts)[2] <= 1.0
