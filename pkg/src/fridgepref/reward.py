"""Preference reward of a plan, demonstration consistency, and the
value-equivalence test behind the accuracy metric."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .catalog import DEFAULT_CATALOG, Catalog, Category, ObjectSpec, SpecificLocation
from .preference import Preference, UncoveredCategoryError, admissible_locations
from .world2d import Action, FridgeState, Plan

__all__ = [
    "Demonstration",
    "Plan",
    "satisfies",
    "satisfaction",
    "reward",
    "demo_to_plan",
    "consistent_with_demos",
    "preference_equivalent",
]


@dataclass(frozen=True)
class Demonstration:
    before: FridgeState
    after: FridgeState
    put_away: tuple[str, ...]

    def __post_init__(self):
        before = self.before.object_names()
        after = self.after.object_names()
        if after != before | set(self.put_away) or before & set(self.put_away):
            raise ValueError("demonstration after-state must be before-state plus put-away objects")
        kept = {(p.name, p.shelf, p.x) for p in self.after.placements}
        for p in self.before.placements:
            if (p.name, p.shelf, p.x) not in kept:
                raise ValueError(f"demonstration moved pre-existing object {p.name!r}")

    def to_json(self) -> dict:
        return {
            "before": self.before.to_json(),
            "after": self.after.to_json(),
            "putAway": list(self.put_away),
        }

    @classmethod
    def from_json(cls, doc: Mapping, catalog: Catalog | None = None) -> "Demonstration":
        return cls(
            FridgeState.from_json(doc["before"], catalog),
            FridgeState.from_json(doc["after"], catalog),
            tuple(doc["putAway"]),
        )


def _spec(obj: ObjectSpec | str, catalog: Catalog | None) -> ObjectSpec:
    if isinstance(obj, ObjectSpec):
        return obj
    return (catalog or DEFAULT_CATALOG).lookup(obj)


def satisfies(
    action: Action | tuple[ObjectSpec | str, SpecificLocation],
    theta: Preference,
    state_at_action,
    catalog: Catalog | None = None,
) -> bool:
    """Whether putting the object at the action's location meets ``theta``
    given the fridge contents at that moment."""
    if isinstance(action, Action):
        obj, loc = action.obj, action.target
    else:
        obj, loc = _spec(action[0], catalog), SpecificLocation(action[1])
    req = theta[obj.category]
    return loc in admissible_locations(req, obj.attributes, state_at_action, obj.category)


def satisfaction(
    plan: Plan | tuple[FridgeState, Sequence[Action]],
    theta: Preference,
    categories: Iterable[Category] | None = None,
) -> list[bool | None]:
    """Per-action satisfaction, evaluated on the evolving semantic state.

    Actions whose category is outside ``categories`` are still applied to
    the state but reported as None.
    """
    if isinstance(plan, Plan):
        state, actions = plan.initial_state, plan.actions
    else:
        state, actions = plan
    keep = None if categories is None else {Category(c) for c in categories}
    view = {loc: list(objs) for loc, objs in state.semantic_view().items()}
    out: list[bool | None] = []
    for a in actions:
        if keep is not None and a.obj.category not in keep:
            out.append(None)
        else:
            req = theta[a.obj.category]
            out.append(a.target in admissible_locations(req, a.obj.attributes, view, a.obj.category))
        view[a.target].append(a.obj)
    return out


def reward(plan: Plan, theta: Preference) -> float:
    """Fraction of the plan's placements that satisfy ``theta``; 1.0 when empty."""
    sat = satisfaction(plan, theta)
    if not sat:
        return 1.0
    return sum(1 for s in sat if s) / len(sat)


def demo_to_plan(demo: Demonstration) -> Plan:
    """Actions for the put-away objects, ordered by location then name."""
    placed = {p.name: p for p in demo.after.placements}
    located = {o.name: (o, loc) for o, loc in demo.after.items()}
    actions = []
    for name in demo.put_away:
        obj, loc = located[name]
        p = placed.get(name)
        actions.append(Action(obj, loc, p.x if p is not None else None))
    actions.sort(key=lambda a: (a.target.order, a.name))
    return Plan(demo.before, tuple(actions))


def consistent_with_demos(
    theta: Preference,
    demos: Sequence[Demonstration | Plan],
    categories: Iterable[Category] | None = None,
) -> bool:
    """True iff every demonstrated placement satisfies ``theta``.

    With ``categories`` only placements of those categories are checked.
    Callers testing many preferences can pass ``demo_to_plan`` results
    instead of demonstrations to skip the conversion.
    """
    cats = None if categories is None else list(categories)
    for demo in demos:
        plan = demo if isinstance(demo, Plan) else demo_to_plan(demo)
        try:
            sat = satisfaction(plan, theta, cats)
        except UncoveredCategoryError:
            return False
        if not all(s for s in sat if s is not None):
            return False
    return True


def preference_equivalent(theta_i: Preference, plan_i: Plan, theta_star: Preference) -> bool:
    return reward(plan_i, theta_i) == 1.0 and reward(plan_i, theta_star) == 1.0
