"""Constraint-aware placement planner.

``plan_with_refinement`` alternates two passes until every object has a
collision-free coordinate or the attempt budget runs out:

1. ``semantic_plan`` picks a specific location per object from the
   preference's admissible set, skipping (object, location) pairs that failed
   before.
2. ``beam_search`` grounds those locations into shelf coordinates by sampling
   evenly spaced centers per region and keeping the best partial plans.

``brute_force_optimal`` is an exhaustive reference used to measure how far the
planner is from the best achievable reward on small instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .catalog import DEFAULT_CATALOG, SPECIFIC_LOCATIONS, Catalog, ObjectSpec, SpecificLocation
from .preference import (
    ConditionalOnSpace,
    Preference,
    SameShelfAs,
    TogetherSameCategory,
    admissible_locations,
)
from .reward import reward
from .world2d import Action, FridgeState, Placement, Plan, collides

MAX_ORACLE_OBJECTS = 5


class IntractableInstanceError(ValueError):
    pass


class InfeasibleInstanceError(ValueError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    beam_width: int = 10
    samples_per_region: int = 10
    max_refinements: int = 4

    def __post_init__(self):
        if min(self.beam_width, self.samples_per_region, self.max_refinements) < 1:
            raise ValueError("planner config values must be >= 1")


@dataclass(frozen=True)
class Feedback:
    infeasible_objects: tuple[str, ...]
    attempt: int = 1

    def __post_init__(self):
        if not self.infeasible_objects:
            raise ValueError("feedback needs at least one infeasible object")

    def message(self) -> str:
        return "the items that did not fit were: " + ", ".join(self.infeasible_objects)


class SemanticStep(NamedTuple):
    obj: ObjectSpec
    loc: SpecificLocation
    preferred: bool = True


@dataclass
class RefinementTrace:
    attempts: list[dict] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.attempts)

    def to_json(self) -> list[dict]:
        return self.attempts


def _resolve(objs: Iterable[ObjectSpec | str], catalog: Catalog | None) -> list[ObjectSpec]:
    catalog = catalog or DEFAULT_CATALOG
    return [o if isinstance(o, ObjectSpec) else catalog.lookup(o) for o in objs]


def _occupied_width(state: FridgeState, loc: SpecificLocation, extra: Sequence[ObjectSpec]) -> float:
    lo, hi = state.geometry.half_bounds(loc.side)
    used = sum(
        max(0.0, min(p.hi, hi) - max(p.lo, lo))
        for p in state.placements
        if p.shelf is loc.shelf
    )
    used += sum(o.width for o, l in state.loose if l is loc)
    return used + sum(o.width for o in extra)


def semantic_plan(
    s0: FridgeState,
    task: Sequence[ObjectSpec | str],
    theta: Preference,
    excluded: Mapping[str, Iterable[SpecificLocation]] | None = None,
    catalog: Catalog | None = None,
) -> list[SemanticStep]:
    """Assign each task object its first admissible, non-excluded location.

    When every admissible location is excluded the object goes to the least
    occupied location it has not failed at, and the step is marked
    ``preferred=False``.
    """
    excluded = {k: set(v) for k, v in (excluded or {}).items()}
    view = {loc: list(objs) for loc, objs in s0.semantic_view().items()}
    pending: dict[SpecificLocation, list[ObjectSpec]] = {loc: [] for loc in SPECIFIC_LOCATIONS}
    steps = []
    for obj in _resolve(task, catalog):
        banned = excluded.get(obj.name, set())
        options = admissible_locations(theta[obj.category], obj.attributes, view, obj.category)
        allowed = [l for l in options if l not in banned]
        if allowed:
            step = SemanticStep(obj, allowed[0], True)
        else:
            pool = [l for l in SPECIFIC_LOCATIONS if l not in banned] or list(SPECIFIC_LOCATIONS)
            loc = min(pool, key=lambda l: (_occupied_width(s0, l, pending[l]), l.order))
            step = SemanticStep(obj, loc, False)
        steps.append(step)
        view[step.loc].append(obj)
        pending[step.loc].append(obj)
    return steps


def _largest_gap(state: FridgeState, loc: SpecificLocation) -> float:
    return max((b - a for a, b in state.free_gaps(loc)), default=0.0)


def _largest_gap_total(state: FridgeState) -> float:
    return sum(_largest_gap(state, loc) for loc in SPECIFIC_LOCATIONS)


def _shelf_gap(state: FridgeState, shelf) -> float:
    return sum(_largest_gap(state, loc) for loc in SPECIFIC_LOCATIONS if loc.shelf is shelf)


@dataclass
class _Beam:
    state: FridgeState
    actions: tuple[Action, ...]
    view: dict
    placed: int
    satisfied: int
    free: float

    def score(self) -> tuple:
        xs = tuple(-1.0 if a.x is None else a.x for a in self.actions)
        return (-self.placed, -self.satisfied, -round(self.free, 9), xs)


def sample_centers(state: FridgeState, obj: ObjectSpec, loc: SpecificLocation, n: int) -> list[float]:
    lo, hi = state.geometry.center_range(loc, obj.width)
    if hi < lo:
        return []
    if n == 1:
        return [float(lo)]
    return [float(x) for x in np.linspace(lo, hi, n)]


def beam_search(
    s0: FridgeState,
    semantic: Sequence[SemanticStep | tuple[ObjectSpec, SpecificLocation]],
    theta: Preference,
    cfg: PlannerConfig | None = None,
    attempt: int = 1,
) -> tuple[Plan, Feedback | None]:
    """Ground a semantic plan into coordinates.

    Beams are ranked by objects placed, then satisfied placements, then the
    summed largest free gap per region (favouring tight packing).
    """
    cfg = cfg or PlannerConfig()
    view0 = {loc: list(objs) for loc, objs in s0.semantic_view().items()}
    beams = [_Beam(s0, (), view0, 0, 0, _largest_gap_total(s0))]
    for step in semantic:
        obj, loc = step[0], step[1]
        xs = sample_centers(s0, obj, loc, cfg.samples_per_region)
        grown = []
        for beam in beams:
            ok = admissible_locations(theta[obj.category], obj.attributes, beam.view, obj.category)
            sat = 1 if loc in ok else 0
            extended = False
            # only the target shelf's gaps change, so update the total locally
            base_free = beam.free - _shelf_gap(beam.state, loc.shelf)
            for x in xs:
                p = Placement(obj, loc.shelf, x)
                if collides(beam.state, p):
                    continue
                state = beam.state.with_placement(p)
                view = {k: list(v) for k, v in beam.view.items()}
                view[loc].append(obj)
                grown.append(
                    _Beam(
                        state,
                        beam.actions + (Action(obj, loc, x),),
                        view,
                        beam.placed + 1,
                        beam.satisfied + sat,
                        base_free + _shelf_gap(state, loc.shelf),
                    )
                )
                extended = True
            if not extended:
                grown.append(
                    _Beam(beam.state, beam.actions + (Action(obj, loc, None),), beam.view,
                          beam.placed, beam.satisfied, beam.free)
                )
        grown.sort(key=_Beam.score)
        beams = grown[: cfg.beam_width]
    best = beams[0]
    plan = Plan(s0, best.actions)
    missing = tuple(plan.unplaced)
    return plan, (Feedback(missing, attempt) if missing else None)


def plan_with_refinement(
    s0: FridgeState,
    task: Sequence[ObjectSpec | str],
    theta: Preference,
    cfg: PlannerConfig | None = None,
    catalog: Catalog | None = None,
) -> tuple[Plan, RefinementTrace]:
    """Semantic plan + beam search, retried with failed (object, location)
    pairs excluded until everything fits or ``cfg.max_refinements`` passes
    have run. Returns the best plan seen and the per-attempt trace."""
    cfg = cfg or PlannerConfig()
    objs = _resolve(task, catalog)
    excluded: dict[str, set[SpecificLocation]] = {}
    trace = RefinementTrace()
    best: tuple | None = None
    for attempt in range(1, cfg.max_refinements + 1):
        steps = semantic_plan(s0, objs, theta, excluded)
        plan, fb = beam_search(s0, steps, theta, cfg, attempt)
        r = reward(plan, theta)
        trace.attempts.append(
            {
                "attempt": attempt,
                "semantic": [[s.obj.name, s.loc.value, s.preferred] for s in steps],
                "infeasible": list(fb.infeasible_objects) if fb else [],
                "reward": r,
                "feedback": fb.message() if fb else None,
            }
        )
        sacrificed = [s.obj.name for s in steps if not s.preferred]
        key = (len(plan.actions) - len(plan.unplaced), r)
        if best is None or key > best[0]:
            meta = {"attempts": attempt, "sacrificed": sacrificed}
            best = (key, Plan(plan.initial_state, plan.actions, meta))
        if fb is None:
            break
        target = {s.obj.name: s.loc for s in steps}
        for name in fb.infeasible_objects:
            excluded.setdefault(name, set()).add(target[name])
    return best[1], trace


def _order_sensitive(theta: Preference, objs: Sequence[ObjectSpec]) -> bool:
    return any(
        isinstance(theta[o.category], (ConditionalOnSpace, TogetherSameCategory, SameShelfAs))
        for o in objs
    )


def _grid(lo: float, hi: float, step: float) -> list[float]:
    start = math.ceil((lo - 1e-9) / step)
    stop = math.floor((hi + 1e-9) / step)
    return [k * step for k in range(start, stop + 1)]


def _pack_region(
    state: FridgeState, loc: SpecificLocation, objs: Sequence[ObjectSpec], step: float
) -> list[float] | None:
    """Centers placing every object in ``objs`` inside ``loc`` without
    collisions (returned in the order of ``objs``), or None when impossible.

    Any feasible packing can be slid left until each object touches a wall
    or a neighbour, so trying every left-to-right order and taking the
    leftmost free center (from grid points and flush positions) is exact.
    """
    objs = list(objs)
    c = state.geometry.clearance
    for order in dict.fromkeys(itertools.permutations(range(len(objs)))):
        st = state
        xs: dict[int, float] = {}
        floor = -math.inf
        for i in order:
            o = objs[i]
            lo, hi = st.geometry.center_range(loc, o.width)
            cands = set(_grid(lo, hi, step)) | {lo}
            cands |= {b + c + o.width / 2 for _, b in st.shelf_intervals(loc.shelf)}
            x = next(
                (
                    x
                    for x in sorted(cands)
                    if max(lo, floor) - 1e-9 <= x <= hi + 1e-9
                    and not collides(st, Placement(o, loc.shelf, x))
                ),
                None,
            )
            if x is None:
                break
            xs[i] = x
            floor = x
            st = st.with_placement(Placement(o, loc.shelf, x))
        else:
            return [xs[i] for i in range(len(objs))]
    return None


def brute_force_optimal(
    s0: FridgeState,
    task: Sequence[ObjectSpec | str],
    theta: Preference,
    grid_step: float = 2.0,
    catalog: Catalog | None = None,
) -> Plan:
    """Highest-reward fully feasible plan over every location assignment and
    object order. Feasibility of a region is decided exactly by flush
    packing; ``grid_step`` only adds extra candidate centers. Ties go to the
    first plan in canonical enumeration order (task order, then canonical
    locations, then orderings)."""
    objs = _resolve(task, catalog)
    if len(objs) > MAX_ORACLE_OBJECTS:
        raise IntractableInstanceError(
            f"exhaustive planning supports at most {MAX_ORACLE_OBJECTS} objects, got {len(objs)}"
        )
    k = len(objs)
    if k == 0:
        return Plan(s0, ())
    ordered = _order_sensitive(theta, objs)
    # order-independent satisfaction per (object, location)
    fixed: list[set[SpecificLocation] | None] = []
    for o in objs:
        req = theta[o.category]
        if isinstance(req, (ConditionalOnSpace, TogetherSameCategory, SameShelfAs)):
            fixed.append(None)
        else:
            fixed.append(set(admissible_locations(req, o.attributes, {}, o.category)))

    pack_memo: dict[tuple, list[float] | None] = {}

    def packable(loc: SpecificLocation, members: list[int]) -> list[float] | None:
        key = (loc, tuple(sorted(members)))
        if key not in pack_memo:
            group = sorted((objs[i] for i in members), key=lambda o: (-o.width, o.name))
            pack_memo[key] = _pack_region(s0, loc, group, grid_step)
        return pack_memo[key]

    best: dict = {"score": -1, "plan": None}

    def evaluate(assign: list[SpecificLocation]):
        perms = itertools.permutations(range(k)) if ordered else [tuple(range(k))]
        for perm in perms:
            actions = tuple(Action(objs[i], assign[i], None) for i in perm)
            score = round(reward(Plan(s0, actions), theta) * k)
            if score > best["score"]:
                best["score"] = score
                best["plan"] = (perm, list(assign))
            if score == k:
                return

    def dfs(i: int, assign: list[SpecificLocation], groups: dict, sure: int):
        if best["score"] == k:
            return
        if sure + (k - i) <= best["score"]:
            return
        if i == k:
            evaluate(assign)
            return
        for loc in SPECIFIC_LOCATIONS:
            members = groups.get(loc, []) + [i]
            if packable(loc, members) is None:
                continue
            gain = 1 if fixed[i] is None or loc in fixed[i] else 0
            groups[loc] = members
            dfs(i + 1, assign + [loc], groups, sure + gain)
            groups[loc] = members[:-1]
            if not groups[loc]:
                del groups[loc]
            if best["score"] == k:
                return

    dfs(0, [], {}, 0)
    if best["plan"] is None:
        raise InfeasibleInstanceError("no assignment places every object collision-free")
    perm, assign = best["plan"]
    coords: dict[int, float] = {}
    for loc in SPECIFIC_LOCATIONS:
        members = [i for i in range(k) if assign[i] is loc]
        if not members:
            continue
        group = sorted(members, key=lambda i: (-objs[i].width, objs[i].name))
        xs = packable(loc, members)
        for i, x in zip(group, xs):
            coords[i] = x
    actions = tuple(Action(objs[i], assign[i], coords[i]) for i in perm)
    return Plan(s0, actions, {"oracle": True, "gridStep": grid_step})
