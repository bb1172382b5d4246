from __future__ import annotations

import pytest

from fridgepref.catalog import Category, GeneralLocation, SPECIFIC_LOCATIONS, SpecificLocation
from fridgepref.preference import (
    ConditionalOnSpace,
    ExceptionForAttribute,
    GeneralLoc,
    MalformedRequirementError,
    Preference,
    SameShelfAs,
    SpecificLoc,
    TogetherSameCategory,
    UncoveredCategoryError,
    admissible_locations,
    canonicalize,
    requirement_from_json,
)

from .helpers import build

L = SpecificLocation
DAIRY, VEG, FRUIT = Category.DAIRY, Category.VEGETABLES, Category.FRUITS


def test_specific_is_singleton():
    assert admissible_locations(SpecificLoc(L.LEFT_OF_MIDDLE), (), build(), FRUIT) == [L.LEFT_OF_MIDDLE]


def test_general_top_shelf():
    req = GeneralLoc(GeneralLocation.TOP_SHELF)
    assert admissible_locations(req, (), build(), FRUIT) == [L.LEFT_OF_TOP, L.RIGHT_OF_TOP]


def test_conditional_full_primary_goes_to_fallback():
    state = build(("whole milk", "top", 40), ("yogurt", "top", 55))
    req = ConditionalOnSpace(L.RIGHT_OF_TOP, 2, L.RIGHT_OF_MIDDLE)
    assert admissible_locations(req, (), state, DAIRY) == [L.RIGHT_OF_MIDDLE]


def test_conditional_counts_only_own_category():
    state = build(("apple", "top", 40), ("pear", "top", 55))
    req = ConditionalOnSpace(L.RIGHT_OF_TOP, 2, L.RIGHT_OF_MIDDLE)
    assert admissible_locations(req, (), state, DAIRY) == [L.RIGHT_OF_TOP]


def test_together_follows_existing_vegetables():
    state = build(("cucumber", "middle", 40), ("carrot", "middle", 52))
    assert admissible_locations(TogetherSameCategory(), (), state, VEG) == [L.RIGHT_OF_MIDDLE]


def test_together_without_anchor_allows_everything():
    assert admissible_locations(TogetherSameCategory(), (), build(), VEG) == list(SPECIFIC_LOCATIONS)


def test_same_shelf_as_uses_both_halves_of_the_anchor_shelf():
    state = build(("apple", "bottom", 5))
    req = SameShelfAs(FRUIT)
    assert admissible_locations(req, (), state, DAIRY) == [L.LEFT_OF_BOTTOM, L.RIGHT_OF_BOTTOM]


def test_exception_dispatch_on_attribute():
    req = ExceptionForAttribute(L.RIGHT_OF_TOP, "cheese", L.LEFT_OF_BOTTOM)
    assert admissible_locations(req, {"cheese"}, build(), DAIRY) == [L.LEFT_OF_BOTTOM]
    assert admissible_locations(req, {"milk"}, build(), DAIRY) == [L.RIGHT_OF_TOP]


def test_admissible_accepts_a_semantic_view():
    state = build(("cucumber", "middle", 40))
    req = TogetherSameCategory()
    assert admissible_locations(req, (), state.semantic_view(), VEG) == admissible_locations(req, (), state, VEG)


def test_canonicalize_idempotent_and_order_free():
    a = Preference({FRUIT: SpecificLoc(L.LEFT_OF_TOP), DAIRY: GeneralLoc(GeneralLocation.TOP_SHELF)})
    b = Preference({DAIRY: GeneralLoc(GeneralLocation.TOP_SHELF), FRUIT: SpecificLoc(L.LEFT_OF_TOP)})
    assert a == b and a.dumps() == b.dumps() and hash(a) == hash(b)
    assert canonicalize(canonicalize(a)) == canonicalize(a)


@pytest.mark.parametrize(
    "req",
    [
        ExceptionForAttribute(L.LEFT_OF_TOP, "cheese", L.LEFT_OF_TOP),
        ConditionalOnSpace(L.LEFT_OF_TOP, 2, L.LEFT_OF_TOP),
        ConditionalOnSpace(L.LEFT_OF_TOP, 0, L.RIGHT_OF_TOP),
        ConditionalOnSpace(L.LEFT_OF_TOP, 4, L.RIGHT_OF_TOP),
        SameShelfAs(DAIRY),
    ],
)
def test_malformed_requirements_rejected(req):
    with pytest.raises(MalformedRequirementError):
        canonicalize({DAIRY: req})


def test_requirement_json_rejects_unknown_type():
    with pytest.raises(MalformedRequirementError):
        requirement_from_json({"type": "somewhere"})
    with pytest.raises(MalformedRequirementError):
        requirement_from_json({"type": "specific", "loc": "under-the-sink"})


def test_uncovered_category():
    p = Preference({FRUIT: SpecificLoc(L.LEFT_OF_TOP)})
    with pytest.raises(UncoveredCategoryError):
        p[DAIRY]


def test_json_round_trip_is_byte_stable():
    p = Preference(
        {
            FRUIT: ExceptionForAttribute(L.RIGHT_OF_MIDDLE, "big", L.LEFT_OF_BOTTOM),
            DAIRY: ConditionalOnSpace(L.RIGHT_OF_TOP, 2, L.RIGHT_OF_MIDDLE),
            VEG: SameShelfAs(FRUIT),
            Category.JUICE: TogetherSameCategory(),
        }
    )
    again = Preference.from_json(p.to_json())
    assert again == p and again.dumps() == p.dumps()


def test_describe_mentions_locations():
    text = SpecificLoc(L.LEFT_OF_TOP).describe(FRUIT)
    assert text == "fruits on the left side of top shelf"
