"""Hand-built scenarios for reflect-and-refine and scripted replanning."""

from __future__ import annotations

from dataclasses import dataclass, field

from .catalog import DEFAULT_CATALOG, Category, GeneralLocation, Shelf, SpecificLocation
from .harness import Mutation
from .preference import ConditionalOnSpace, GeneralLoc, Preference, SpecificLoc, TogetherSameCategory
from .world2d import FridgeState, Placement, apply_action, empty_state

L = SpecificLocation


@dataclass(frozen=True)
class Fixture:
    name: str
    s0: FridgeState
    task: tuple[str, ...]
    theta: Preference
    script: tuple[Mutation, ...] = field(default=())


def _state(*items: tuple[str, Shelf, float]) -> FridgeState:
    state = empty_state()
    for name, shelf, x in items:
        state = apply_action(state, Placement(DEFAULT_CATALOG.lookup(name), shelf, x))
    return state


def two_objects_one_slot() -> Fixture:
    """Left of the bottom shelf has room for the pineapple or the bell pepper
    but not both. The pepper is allowed anywhere on the bottom shelf, so the
    second attempt should move it to the right half."""
    return Fixture(
        "two-objects-one-slot",
        _state(("apple", Shelf.BOTTOM, 4.0), ("cucumber", Shelf.BOTTOM, 56.0)),
        ("pineapple", "bell pepper"),
        Preference(
            {
                Category.FRUITS: SpecificLoc(L.LEFT_OF_BOTTOM),
                Category.VEGETABLES: GeneralLoc(GeneralLocation.BOTTOM_SHELF),
            }
        ),
    )


def addition() -> Fixture:
    """Someone fills the left of the top shelf after the first placement;
    the remaining vegetables must find another spot on the left side."""
    return Fixture(
        "addition",
        _state(("cheese", Shelf.TOP, 4.0)),
        ("cucumber", "bell pepper", "apple"),
        Preference(
            {
                Category.VEGETABLES: GeneralLoc(GeneralLocation.LEFT_SIDE),
                Category.FRUITS: SpecificLoc(L.RIGHT_OF_TOP),
                Category.DAIRY: SpecificLoc(L.LEFT_OF_TOP),
            }
        ),
        (Mutation(1, "add", "whole milk", L.LEFT_OF_TOP),),
    )


def removal() -> Fixture:
    """Condiments go right of the top shelf while it holds none, else right
    of the middle. The mustard is taken out after the first action, which
    frees the primary spot for the relish."""
    return Fixture(
        "removal",
        _state(("mustard", Shelf.TOP, 56.0)),
        ("apple", "relish"),
        Preference(
            {
                Category.CONDIMENTS: ConditionalOnSpace(L.RIGHT_OF_TOP, 1, L.RIGHT_OF_MIDDLE),
                Category.FRUITS: SpecificLoc(L.LEFT_OF_BOTTOM),
            }
        ),
        (Mutation(1, "remove", "mustard"),),
    )


def relocation() -> Fixture:
    """Drinks are kept together. After the first action every drink is moved
    to the right of the top shelf, so the next drink follows them there."""
    return Fixture(
        "relocation",
        _state(("coke", Shelf.BOTTOM, 4.0), ("sprite", Shelf.BOTTOM, 14.0)),
        ("apple", "lemonade", "kiwi"),
        Preference(
            {
                Category.JUICE: TogetherSameCategory(),
                Category.FRUITS: SpecificLoc(L.LEFT_OF_MIDDLE),
            }
        ),
        (
            Mutation(1, "move", "coke", L.RIGHT_OF_TOP, 56.0),
            Mutation(1, "move", "sprite", L.RIGHT_OF_TOP, 46.0),
        ),
    )


REPLANNING = {"addition": addition, "removal": removal, "relocation": relocation}
