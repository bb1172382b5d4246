"""Two-dimensional fridge world: shelves as 1-D intervals, collision checks and
the plan feasibility indicator.

Each shelf is a segment ``[0, shelf_width]``. Objects occupy
``[x - w/2, x + w/2]``; a new object must keep ``clearance`` cm from everything
already on its shelf. Items may also be held *loosely* (known semantic location,
no coordinate) which is how prompt-style states without geometry are read.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .catalog import (
    DEFAULT_CATALOG,
    SPECIFIC_LOCATIONS,
    Catalog,
    ObjectSpec,
    Shelf,
    Side,
    SpecificLocation,
)

STATE_SCHEMA_VERSION = 1
EPS = 1e-9


class CollisionError(ValueError):
    """Raised when applying a placement that collides or is out of bounds."""


@dataclass(frozen=True)
class FridgeGeometry:
    shelf_width: float = 60.0
    clearance: float = 1.0

    def __post_init__(self):
        if self.shelf_width <= 0:
            raise ValueError("shelf_width must be positive")
        if not 0 <= self.clearance < self.shelf_width / 4:
            raise ValueError("clearance must lie in [0, shelf_width/4)")

    @property
    def side_boundary(self) -> float:
        return self.shelf_width / 2

    def side_of(self, x: float) -> Side:
        return Side.LEFT if x < self.shelf_width / 2 else Side.RIGHT

    def half_bounds(self, side: Side) -> tuple[float, float]:
        if Side(side) is Side.LEFT:
            return 0.0, self.side_boundary
        return self.side_boundary, self.shelf_width

    def center_range(self, loc: SpecificLocation, width: float) -> tuple[float, float]:
        """Centers that keep an object of ``width`` fully inside ``loc``'s half."""
        lo, hi = self.half_bounds(loc.side)
        return lo + width / 2, hi - width / 2

    def to_json(self) -> dict:
        return {"shelfWidth": self.shelf_width, "clearance": self.clearance}

    @classmethod
    def from_json(cls, doc: Mapping) -> "FridgeGeometry":
        return cls(float(doc.get("shelfWidth", 60.0)), float(doc.get("clearance", 1.0)))


@dataclass(frozen=True)
class Placement:
    obj: ObjectSpec
    shelf: Shelf
    x: float

    @property
    def name(self) -> str:
        return self.obj.name

    @property
    def lo(self) -> float:
        return self.x - self.obj.width / 2

    @property
    def hi(self) -> float:
        return self.x + self.obj.width / 2

    def in_bounds(self, geometry: FridgeGeometry) -> bool:
        return self.lo >= -EPS and self.hi <= geometry.shelf_width + EPS


def semantic_location(p: Placement, geometry: FridgeGeometry | None = None) -> SpecificLocation:
    geometry = geometry or FridgeGeometry()
    return SpecificLocation.of(p.shelf, geometry.side_of(p.x))


@dataclass(frozen=True)
class FridgeState:
    geometry: FridgeGeometry = field(default_factory=FridgeGeometry)
    placements: tuple[Placement, ...] = ()
    loose: tuple[tuple[ObjectSpec, SpecificLocation], ...] = ()

    def __post_init__(self):
        names = [p.name for p in self.placements] + [o.name for o, _ in self.loose]
        if len(names) != len(set(names)):
            raise ValueError("object appears twice in fridge state")

    def location_of_placement(self, p: Placement) -> SpecificLocation:
        return semantic_location(p, self.geometry)

    def items(self) -> list[tuple[ObjectSpec, SpecificLocation]]:
        """Every object with its semantic location, placements first."""
        out = [(p.obj, self.location_of_placement(p)) for p in self.placements]
        out.extend(self.loose)
        return out

    def semantic_view(self) -> dict[SpecificLocation, list[ObjectSpec]]:
        view: dict[SpecificLocation, list[ObjectSpec]] = {l: [] for l in SPECIFIC_LOCATIONS}
        for p in sorted(self.placements, key=lambda p: (p.shelf.value, p.x, p.name)):
            view[self.location_of_placement(p)].append(p.obj)
        for obj, loc in self.loose:
            view[loc].append(obj)
        return view

    def object_names(self) -> set[str]:
        return {o.name for o, _ in self.items()}

    @cached_property
    def _intervals(self) -> dict[Shelf, list[tuple[float, float]]]:
        out: dict[Shelf, list[tuple[float, float]]] = {s: [] for s in Shelf}
        for p in self.placements:
            out[p.shelf].append((p.lo, p.hi))
        for v in out.values():
            v.sort()
        return out

    def shelf_intervals(self, shelf: Shelf) -> list[tuple[float, float]]:
        return self._intervals[shelf]

    def with_placement(self, p: Placement) -> "FridgeState":
        return FridgeState(self.geometry, self.placements + (p,), self.loose)

    def with_loose(self, obj: ObjectSpec, loc: SpecificLocation) -> "FridgeState":
        return FridgeState(self.geometry, self.placements, self.loose + ((obj, loc),))

    def without(self, names: Iterable[str]) -> "FridgeState":
        drop = set(names)
        return FridgeState(
            self.geometry,
            tuple(p for p in self.placements if p.name not in drop),
            tuple((o, l) for o, l in self.loose if o.name not in drop),
        )

    def occupancy_key(self) -> tuple:
        """Order-independent identity of the occupancy set."""
        return (
            self.geometry,
            frozenset((p.name, p.shelf, p.x) for p in self.placements),
            frozenset((o.name, l) for o, l in self.loose),
        )

    def free_gaps(self, loc: SpecificLocation) -> list[tuple[float, float]]:
        """Maximal free sub-intervals of ``loc``'s half, ignoring clearance."""
        lo, hi = self.geometry.half_bounds(loc.side)
        gaps = []
        cursor = lo
        for a, b in self.shelf_intervals(loc.shelf):
            if b <= lo or a >= hi:
                continue
            if a > cursor:
                gaps.append((cursor, min(a, hi)))
            cursor = max(cursor, b)
        if cursor < hi:
            gaps.append((cursor, hi))
        return gaps

    def to_json(self) -> dict:
        semantic: dict[str, dict[str, list[str]]] = {
            s.value: {side.value: [] for side in Side} for s in Shelf
        }
        for loc, objs in self.semantic_view().items():
            semantic[loc.shelf.value][loc.side.value] = [o.name for o in objs]
        return {
            "schemaVersion": STATE_SCHEMA_VERSION,
            "geometry": self.geometry.to_json(),
            "semantic": semantic,
            "placements": [
                {"object": p.name, "shelf": p.shelf.value, "x": p.x} for p in self.placements
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping, catalog: Catalog | None = None) -> "FridgeState":
        catalog = catalog or DEFAULT_CATALOG
        version = doc.get("schemaVersion", STATE_SCHEMA_VERSION)
        if version != STATE_SCHEMA_VERSION:
            raise ValueError(f"unsupported state schemaVersion {version!r}")
        geometry = FridgeGeometry.from_json(doc.get("geometry", {}))
        placements = tuple(
            Placement(catalog.lookup(p["object"]), Shelf(p["shelf"]), float(p["x"]))
            for p in doc.get("placements", ())
        )
        placed = {p.name for p in placements}
        loose = []
        for shelf, sides in doc.get("semantic", {}).items():
            for side, names in sides.items():
                loc = SpecificLocation.of(shelf, side)
                for name in names:
                    if name not in placed:
                        loose.append((catalog.lookup(name), loc))
        loose.sort(key=lambda item: (item[1].order, item[0].name))
        state = cls(geometry, (), tuple(loose))
        for p in placements:
            state = apply_action(state, p)
        return state


def empty_state(geometry: FridgeGeometry | None = None) -> FridgeState:
    return FridgeState(geometry or FridgeGeometry())


def collides(state: FridgeState, candidate: Placement) -> bool:
    """True if ``candidate`` leaves its shelf or comes within clearance of an
    object already on that shelf."""
    if not candidate.in_bounds(state.geometry):
        return True
    c = state.geometry.clearance
    lo, hi = candidate.lo - c, candidate.hi + c
    for a, b in state.shelf_intervals(candidate.shelf):
        if lo < b - EPS and a < hi - EPS:
            return True
    return False


def apply_action(state: FridgeState, p: Placement) -> FridgeState:
    if p.name in state.object_names():
        raise CollisionError(f"{p.name!r} is already in the fridge")
    if collides(state, p):
        raise CollisionError(f"placing {p.name!r} at {p.shelf.value} x={p.x} collides")
    return state.with_placement(p)


@dataclass(frozen=True)
class Action:
    """Pick-and-place of ``obj`` into ``target``; ``x`` is None when no
    collision-free coordinate was found."""

    obj: ObjectSpec
    target: SpecificLocation
    x: float | None = None

    @property
    def name(self) -> str:
        return self.obj.name

    def placement(self) -> Placement | None:
        if self.x is None:
            return None
        return Placement(self.obj, self.target.shelf, self.x)


@dataclass(frozen=True)
class Plan:
    initial_state: FridgeState
    actions: tuple[Action, ...] = ()
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        names = [a.name for a in self.actions]
        if len(names) != len(set(names)):
            raise ValueError("object names must be unique within a plan")
        g = self.initial_state.geometry
        for a in self.actions:
            if a.x is None:
                continue
            lo, hi = g.center_range(a.target, a.obj.width)
            if not lo - EPS <= a.x <= hi + EPS:
                raise ValueError(f"coordinate {a.x} for {a.name!r} lies outside {a.target.value}")

    @property
    def unplaced(self) -> list[str]:
        return [a.name for a in self.actions if a.x is None]

    def semantic(self) -> list[tuple[str, SpecificLocation]]:
        return [(a.name, a.target) for a in self.actions]

    def final_state(self) -> FridgeState:
        state = self.initial_state
        for a in self.actions:
            p = a.placement()
            if p is not None and not collides(state, p):
                state = state.with_placement(p)
        return state

    def to_json(self) -> dict:
        doc = {
            "schemaVersion": STATE_SCHEMA_VERSION,
            "initialState": self.initial_state.to_json(),
            "actions": [
                {"object": a.name, "target": a.target.value, "x": a.x} for a in self.actions
            ],
        }
        if self.meta:
            doc["meta"] = dict(self.meta)
        return doc

    @classmethod
    def from_json(cls, doc: Mapping, catalog: Catalog | None = None) -> "Plan":
        catalog = catalog or DEFAULT_CATALOG
        state = FridgeState.from_json(doc["initialState"], catalog)
        actions = tuple(
            Action(catalog.lookup(a["object"]), SpecificLocation(a["target"]), a.get("x"))
            for a in doc["actions"]
        )
        return cls(state, actions, doc.get("meta", {}))


def constraint(state0: FridgeState, plan: Plan | Sequence[Action]) -> tuple[int, list[str]]:
    """Geometric feasibility of a plan: ``(0, [])`` when every action has a
    collision-free coordinate, else ``(1, violators)``."""
    actions = plan.actions if isinstance(plan, Plan) else tuple(plan)
    state = state0
    violators = []
    for a in actions:
        p = a.placement()
        if p is None or collides(state, p):
            violators.append(a.name)
            continue
        state = state.with_placement(p)
    return (1, violators) if violators else (0, [])
