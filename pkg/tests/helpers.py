from __future__ import annotations

from fridgepref.catalog import DEFAULT_CATALOG, Shelf
from fridgepref.world2d import FridgeGeometry, FridgeState, Placement, apply_action, empty_state


def place(state: FridgeState, name: str, shelf: Shelf | str, x: float) -> FridgeState:
    return apply_action(state, Placement(DEFAULT_CATALOG.lookup(name), Shelf(shelf), x))


def build(*items, geometry: FridgeGeometry | None = None) -> FridgeState:
    state = empty_state(geometry)
    for name, shelf, x in items:
        state = place(state, name, shelf, x)
    return state
