from __future__ import annotations

import json

import pytest

from fridgepref.catalog import (
    ATTRIBUTE_VOCAB,
    CATEGORIES,
    DEFAULT_CATALOG,
    GENERAL_LOCATIONS,
    SPECIFIC_LOCATIONS,
    Catalog,
    Category,
    GeneralLocation,
    ObjectSpec,
    Shelf,
    Side,
    SpecificLocation,
    UnknownObjectError,
    canonical_order,
    expand,
    lookup,
)

L = SpecificLocation


def test_five_categories_six_specifics_five_generals():
    assert len(CATEGORIES) == 5
    assert len(SPECIFIC_LOCATIONS) == 6
    assert len(GENERAL_LOCATIONS) == 5
    assert {(l.shelf, l.side) for l in SPECIFIC_LOCATIONS} == {(s, d) for s in Shelf for d in Side}


def test_expand_examples():
    assert expand(GeneralLocation.TOP_SHELF) == {L.LEFT_OF_TOP, L.RIGHT_OF_TOP}
    assert expand(GeneralLocation.LEFT_SIDE) == {L.LEFT_OF_TOP, L.LEFT_OF_MIDDLE, L.LEFT_OF_BOTTOM}
    union = set().union(*(expand(g) for g in GENERAL_LOCATIONS))
    assert union == set(SPECIFIC_LOCATIONS)


def test_general_member_counts_match_kind():
    for g in GENERAL_LOCATIONS:
        size = 3 if g in (GeneralLocation.LEFT_SIDE, GeneralLocation.RIGHT_SIDE) else 2
        assert len(g.members) == size


def test_canonical_order_is_top_left_first():
    assert canonical_order([L.RIGHT_OF_BOTTOM, L.LEFT_OF_TOP, L.RIGHT_OF_TOP]) == [
        L.LEFT_OF_TOP,
        L.RIGHT_OF_TOP,
        L.RIGHT_OF_BOTTOM,
    ]


def test_location_parts_round_trip():
    for loc in SPECIFIC_LOCATIONS:
        assert SpecificLocation.of(loc.shelf, loc.side) is loc
    assert SpecificLocation.of("middle", "right") is L.RIGHT_OF_MIDDLE


def test_lookup_examples():
    cheese = lookup("cheese")
    assert cheese.category is Category.DAIRY and "cheese" in cheese.attributes
    assert lookup("apple").category is Category.FRUITS
    with pytest.raises(UnknownObjectError):
        lookup("xyzzy")


def test_catalog_size_and_attribute_coverage():
    for c in CATEGORIES:
        objs = DEFAULT_CATALOG.in_category(c)
        assert len(objs) >= 8
        assert sum(1 for o in objs if o.attributes) >= 2
        for o in objs:
            assert o.width in (6, 8, 10, 12, 15)
            assert set(o.attributes) <= set(ATTRIBUTE_VOCAB[c])


def test_catalog_json_round_trip(tmp_path):
    doc = DEFAULT_CATALOG.to_json()
    assert doc["schemaVersion"] == 1
    path = tmp_path / "cat.json"
    path.write_text(json.dumps(doc))
    again = Catalog.load(path)
    assert dict(again) == dict(DEFAULT_CATALOG)


def test_catalog_rejects_bad_objects():
    with pytest.raises(ValueError):
        Catalog([ObjectSpec("x", Category.FRUITS, frozenset(), 0)])
    with pytest.raises(ValueError):
        Catalog([ObjectSpec("x", Category.FRUITS, frozenset({"leafy"}), 8)])
    spec = ObjectSpec("x", Category.FRUITS, frozenset(), 8)
    with pytest.raises(ValueError):
        Catalog([spec, spec])
