"""Seeded generator for the 100-case preference benchmark.

Each case has a ground-truth preference, two demonstrations (3 objects
already in the fridge, 4 put away) and a scenario (4 in the fridge, 6 to put
away). Demonstrations are built so the special requirement is visible in them,
and every scenario is certified solvable by the planner with reward 1 before
it is accepted.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .catalog import (
    CATEGORIES,
    DEFAULT_CATALOG,
    GENERAL_LOCATIONS,
    SPECIFIC_LOCATIONS,
    Catalog,
    Category,
    ObjectSpec,
    SpecificLocation,
)
from .planner import PlannerConfig, plan_with_refinement
from .preference import (
    ConditionalOnSpace,
    ExceptionForAttribute,
    GeneralLoc,
    Preference,
    SpecificLoc,
    TogetherSameCategory,
    admissible_locations,
)
from .reward import Demonstration, consistent_with_demos, demo_to_plan, reward, satisfaction
from .world2d import FridgeGeometry, FridgeState, Placement, Plan, collides, constraint

CASE_SCHEMA_VERSION = 1
CASES_PER_FAMILY = 20
DEMO_IN_FRIDGE, DEMO_PUT_AWAY = 3, 4
SCENARIO_IN_FRIDGE, SCENARIO_TASK = 4, 6


class GenerationRetryExhausted(RuntimeError):
    pass


class RealizationRetryExhausted(RuntimeError):
    pass


class Family(str, Enum):
    SPECIFIC = "specific-location"
    GENERAL = "general-location"
    RELATIVE = "relative-position"
    EXCEPTION = "subcategory-exception"
    CONDITIONAL = "conditional"


FAMILIES: tuple[Family, ...] = tuple(Family)


@dataclass(frozen=True)
class TestCase:
    id: str
    family: Family
    ground_truth: Preference
    demos: tuple[Demonstration, ...]
    initial_state: FridgeState
    task: tuple[str, ...]
    seed: int
    meta: Mapping = field(default_factory=dict, compare=False)

    __test__ = False  # not a pytest class

    def universe(self, catalog: Catalog | None = None) -> list[Category]:
        catalog = catalog or DEFAULT_CATALOG
        cats = set()
        for d in self.demos:
            cats |= {o.category for o, _ in d.after.items()}
        cats |= {o.category for o, _ in self.initial_state.items()}
        cats |= {catalog.lookup(n).category for n in self.task}
        return [c for c in CATEGORIES if c in cats]

    def to_json(self) -> dict:
        return {
            "schemaVersion": CASE_SCHEMA_VERSION,
            "id": self.id,
            "family": self.family.value,
            "seed": self.seed,
            "groundTruth": self.ground_truth.to_json(),
            "demos": [d.to_json() for d in self.demos],
            "scenario": {"initialState": self.initial_state.to_json(), "task": list(self.task)},
            "meta": dict(self.meta),
        }

    @classmethod
    def from_json(cls, doc: Mapping, catalog: Catalog | None = None) -> "TestCase":
        if doc.get("schemaVersion") != CASE_SCHEMA_VERSION:
            raise ValueError(f"unsupported case schemaVersion {doc.get('schemaVersion')!r}")
        return cls(
            id=doc["id"],
            family=Family(doc["family"]),
            ground_truth=Preference.from_json(doc["groundTruth"]),
            demos=tuple(Demonstration.from_json(d, catalog) for d in doc["demos"]),
            initial_state=FridgeState.from_json(doc["scenario"]["initialState"], catalog),
            task=tuple(doc["scenario"]["task"]),
            seed=int(doc["seed"]),
            meta=doc.get("meta", {}),
        )


def _pick(rng: np.random.Generator, seq: Sequence):
    return seq[int(rng.integers(len(seq)))]


def generate_ground_truth(
    family: Family | str,
    rng: np.random.Generator,
    n_special: int | None = None,
    catalog: Catalog | None = None,
) -> Preference:
    """A preference over all five categories conforming to ``family``.

    Non-special categories get distinct specific locations.
    """
    catalog = catalog or DEFAULT_CATALOG
    family = Family(family)
    slots = [SPECIFIC_LOCATIONS[i] for i in rng.permutation(len(SPECIFIC_LOCATIONS))]
    reqs = {c: SpecificLoc(slots[k]) for k, c in enumerate(CATEGORIES)}
    if family is Family.SPECIFIC:
        return Preference(reqs)
    if n_special is None:
        n_special = 1 + int(rng.integers(2))
    special = [CATEGORIES[i] for i in sorted(rng.choice(len(CATEGORIES), n_special, replace=False))]
    used_generals: set = set()
    for c in special:
        home = reqs[c].loc
        if family is Family.GENERAL:
            options = [g for g in GENERAL_LOCATIONS if g not in used_generals]
            g = _pick(rng, options)
            used_generals.add(g)
            reqs[c] = GeneralLoc(g)
        elif family is Family.RELATIVE:
            reqs[c] = TogetherSameCategory()
        elif family is Family.EXCEPTION:
            attr = _pick(rng, catalog.attributes_of(c))
            # exception location on a different shelf and side so no general location covers both
            others = [l for l in SPECIFIC_LOCATIONS if l.shelf is not home.shelf and l.side is not home.side]
            reqs[c] = ExceptionForAttribute(home, attr, _pick(rng, others))
        elif family is Family.CONDITIONAL:
            others = [l for l in SPECIFIC_LOCATIONS if l.shelf is not home.shelf and l.side is not home.side]
            reqs[c] = ConditionalOnSpace(home, 1 + int(rng.integers(3)), _pick(rng, others))
    return Preference(reqs)


def _sample_coordinates(
    rng: np.random.Generator,
    base: FridgeState,
    items: Sequence[tuple[ObjectSpec, SpecificLocation]],
    tries: int = 40,
) -> FridgeState | None:
    """Place each item collision-free inside its region, pushed flush against
    a wall or a neighbour (chosen at random among those spots)."""
    state = base
    c = state.geometry.clearance
    for obj, loc in items:
        lo, hi = state.geometry.center_range(loc, obj.width)
        if hi < lo:
            return None
        spots = {lo, hi}
        for a, b in state.shelf_intervals(loc.shelf):
            spots.add(b + c + obj.width / 2)
            spots.add(a - c - obj.width / 2)
        spots = sorted(
            x for x in (round(s, 1) for s in spots)
            if lo - 1e-9 <= x <= hi + 1e-9 and not collides(state, Placement(obj, loc.shelf, x))
        )
        if not spots:
            return None
        x = spots[int(rng.integers(len(spots)))]
        state = state.with_placement(Placement(obj, loc.shelf, x))
    return state


def _objects(
    rng: np.random.Generator,
    catalog: Catalog,
    category: Category,
    k: int,
    exclude: set[str],
    attr: str | None = None,
    with_attr: bool | None = None,
) -> list[ObjectSpec]:
    pool = [o for o in catalog.in_category(category) if o.name not in exclude]
    if attr is not None and with_attr is not None:
        pool = [o for o in pool if (attr in o.attributes) == with_attr]
    if len(pool) < k:
        raise RealizationRetryExhausted(f"not enough {category.value} objects")
    idx = rng.choice(len(pool), k, replace=False)
    return [pool[int(i)] for i in idx]


def _home(theta: Preference, obj: ObjectSpec, view, rng) -> SpecificLocation:
    """A location satisfying ``theta`` for ``obj`` given ``view``, chosen at random."""
    options = admissible_locations(theta[obj.category], obj.attributes, view, obj.category)
    return _pick(rng, options)


def _order_robust(demo: Demonstration, theta: Preference) -> bool:
    plan = demo_to_plan(demo)
    for perm in itertools.permutations(plan.actions):
        sat = satisfaction((plan.initial_state, perm), theta)
        if not all(sat):
            return False
    return True


def _special_categories(theta: Preference) -> list[Category]:
    return [c for c, r in theta.items() if not isinstance(r, SpecificLoc)]


def _demo_recipe(
    theta: Preference,
    which: int,
    rng: np.random.Generator,
    catalog: Catalog,
    anchors: dict[Category, SpecificLocation],
) -> tuple[list[tuple[ObjectSpec, SpecificLocation]], list[ObjectSpec]]:
    """Initial (object, location) items and put-away objects for demo ``which``.

    Special requirements are staged so they are observable: general locations
    show different members, together-categories have anchors at different
    places in the two demos, exceptions show both branches, and conditionals
    show the capacity boundary through the initial contents.
    """
    used: set[str] = set()
    initial: list[tuple[ObjectSpec, SpecificLocation]] = []
    put: list[ObjectSpec] = []
    special = _special_categories(theta)
    rng.shuffle(special)
    for c in special:
        req = theta[c]
        if isinstance(req, TogetherSameCategory):
            anchor = anchors[c]
            (a,) = _objects(rng, catalog, c, 1, used)
            used.add(a.name)
            initial.append((a, anchor))
            objs = _objects(rng, catalog, c, 1, used)
            used.update(o.name for o in objs)
            put.extend(objs)
        elif isinstance(req, ConditionalOnSpace):
            # demo 0: primary already at capacity, demo 1: one below capacity
            count = req.capacity if which == 0 else req.capacity - 1
            room = DEMO_IN_FRIDGE - len(initial)
            count = min(count, room)
            objs = _objects(rng, catalog, c, count, used)
            used.update(o.name for o in objs)
            initial.extend((o, req.primary) for o in objs)
            objs = _objects(rng, catalog, c, 1, used)
            used.update(o.name for o in objs)
            put.extend(objs)
        elif isinstance(req, ExceptionForAttribute):
            objs = _objects(rng, catalog, c, 1, used, req.attribute, True)
            objs += _objects(rng, catalog, c, 1, used | {o.name for o in objs}, req.attribute, False)
            used.update(o.name for o in objs)
            put.extend(objs)
        else:
            objs = _objects(rng, catalog, c, 2 if len(special) == 1 else 1, used)
            used.update(o.name for o in objs)
            put.extend(objs)
    rest = [c for c in CATEGORIES if c not in special]
    rng.shuffle(rest)
    while len(put) < DEMO_PUT_AWAY:
        c = rest[len(put) % len(rest)] if rest else _pick(rng, special)
        put.extend(_objects(rng, catalog, c, 1, used))
        used.add(put[-1].name)
    put = put[:DEMO_PUT_AWAY]
    while len(initial) < DEMO_IN_FRIDGE:
        c = _pick(rng, rest) if rest else _pick(rng, special)
        if isinstance(theta[c], (ConditionalOnSpace, TogetherSameCategory)):
            continue
        (o,) = _objects(rng, catalog, c, 1, used)
        used.add(o.name)
        initial.append((o, _home(theta, o, {}, rng)))
    return initial, put


def _claimed(theta: Preference) -> set[SpecificLocation]:
    """Locations some fixed-location requirement sends objects to."""
    out = set()
    for req in theta.values():
        if isinstance(req, SpecificLoc):
            out.add(req.loc)
        elif isinstance(req, ExceptionForAttribute):
            out |= {req.base, req.exception_loc}
        elif isinstance(req, ConditionalOnSpace):
            out |= {req.primary, req.fallback}
    return out


def _free_slots(theta: Preference, avoid: Iterable[SpecificLocation] = ()) -> list[SpecificLocation]:
    taken = _claimed(theta) | set(avoid)
    free = [l for l in SPECIFIC_LOCATIONS if l not in taken]
    if free:
        return free
    free = [l for l in SPECIFIC_LOCATIONS if l not in _claimed(theta)]
    return free or list(SPECIFIC_LOCATIONS)


def _anchor_pairs(theta: Preference, rng: np.random.Generator) -> list[dict[Category, SpecificLocation]]:
    """Distinct anchor locations per demo for every together-category."""
    out: list[dict[Category, SpecificLocation]] = [{}, {}]
    used: set[SpecificLocation] = set()
    for c, req in theta.items():
        if isinstance(req, TogetherSameCategory):
            for k in range(2):
                loc = _pick(rng, _free_slots(theta, used | {out[0].get(c)} - {None}))
                out[k][c] = loc
                used.add(loc)
    return out


def realize_demonstration(
    theta: Preference,
    rng: np.random.Generator,
    which: int = 0,
    anchors: dict[Category, SpecificLocation] | None = None,
    geometry: FridgeGeometry | None = None,
    catalog: Catalog | None = None,
    tries: int = 200,
) -> Demonstration:
    """A demonstration that satisfies ``theta`` under every put-away order."""
    catalog = catalog or DEFAULT_CATALOG
    geometry = geometry or FridgeGeometry()
    if anchors is None:
        anchors = _anchor_pairs(theta, rng)[which % 2]
    for _ in range(tries):
        try:
            initial, put = _demo_recipe(theta, which, rng, catalog, anchors)
        except RealizationRetryExhausted:
            continue
        before = _sample_coordinates(rng, FridgeState(geometry), initial)
        if before is None:
            continue
        view = {k: list(v) for k, v in before.semantic_view().items()}
        items = []
        for o in sorted(put, key=lambda o: o.name):
            loc = _home(theta, o, view, rng)
            view[loc].append(o)
            items.append((o, loc))
        after = _sample_coordinates(rng, before, items)
        if after is None:
            continue
        demo = Demonstration(before, after, tuple(o.name for o in put))
        if consistent_with_demos(theta, [demo]) and _order_robust(demo, theta):
            return demo
    raise RealizationRetryExhausted("could not realize a consistent demonstration")


def _demos_reveal(theta: Preference, demos: Sequence[Demonstration]) -> bool:
    """Special requirements must be distinguishable from a single specific
    location in the demonstrations."""
    for c in _special_categories(theta):
        locs = set()
        for d in demos:
            for a in demo_to_plan(d).actions:
                if a.obj.category is c:
                    locs.add(a.target)
        if len(locs) < 2:
            return False
    return True


def _scenario(
    theta: Preference,
    rng: np.random.Generator,
    catalog: Catalog,
    geometry: FridgeGeometry,
    exclude_anchors: Iterable[SpecificLocation] = (),
    task_size: int = SCENARIO_TASK,
) -> tuple[FridgeState, list[ObjectSpec]] | None:
    special = _special_categories(theta)
    used: set[str] = set()
    initial: list[tuple[ObjectSpec, SpecificLocation]] = []
    avoid = set(exclude_anchors)
    for c in special:
        req = theta[c]
        if isinstance(req, TogetherSameCategory):
            loc = _pick(rng, _free_slots(theta, avoid))
            avoid.add(loc)
            (o,) = _objects(rng, catalog, c, 1, used)
            used.add(o.name)
            initial.append((o, loc))
        elif isinstance(req, ConditionalOnSpace):
            k = int(rng.integers(0, req.capacity))
            for o in _objects(rng, catalog, c, k, used):
                used.add(o.name)
                initial.append((o, req.primary))
    while len(initial) < SCENARIO_IN_FRIDGE:
        c = _pick(rng, CATEGORIES)
        if isinstance(theta[c], (ConditionalOnSpace, TogetherSameCategory)):
            continue
        (o,) = _objects(rng, catalog, c, 1, used)
        used.add(o.name)
        initial.append((o, _home(theta, o, {}, rng)))
    initial = initial[:SCENARIO_IN_FRIDGE]
    s0 = _sample_coordinates(rng, FridgeState(geometry), initial)
    if s0 is None:
        return None
    task: list[ObjectSpec] = []
    for c in special:
        req = theta[c]
        if isinstance(req, ExceptionForAttribute):
            task += _objects(rng, catalog, c, 1, used, req.attribute, True)
            task += _objects(rng, catalog, c, 1, used | {o.name for o in task}, req.attribute, False)
        else:
            task += _objects(rng, catalog, c, 2, used)
        used.update(o.name for o in task)
    while len(task) < task_size:
        counts = {c: sum(1 for o in task if o.category is c) for c in CATEGORIES}
        c = _pick(rng, [c for c in CATEGORIES if counts[c] < 2])
        (o,) = _objects(rng, catalog, c, 1, used)
        used.add(o.name)
        task.append(o)
    task = task[:task_size]
    order = rng.permutation(len(task))
    return s0, [task[int(i)] for i in order]


def certify(
    theta: Preference, s0: FridgeState, task: Sequence[ObjectSpec | str], cfg: PlannerConfig | None = None
) -> Plan | None:
    """Planner plan with reward 1 and no constraint violation, else None."""
    plan, _ = plan_with_refinement(s0, task, theta, cfg)
    if reward(plan, theta) == 1.0 and constraint(s0, plan)[0] == 0:
        return plan
    return None


def _ambiguous(theta: Preference, demos: Sequence[Demonstration], universe: Sequence[Category], catalog) -> bool:
    from .oracle import consistent_requirements

    total = 1
    for c in universe:
        total *= len(consistent_requirements(c, demos, universe, catalog))
        if total >= 2:
            return True
    return False


def generate_case(
    case_id: str,
    family: Family | str,
    seed: int,
    n_special: int | None = None,
    geometry: FridgeGeometry | None = None,
    catalog: Catalog | None = None,
    planner_cfg: PlannerConfig | None = None,
    allow_unambiguous: bool = False,
    max_retries: int = 50,
    task_size: int = SCENARIO_TASK,
) -> TestCase:
    catalog = catalog or DEFAULT_CATALOG
    geometry = geometry or FridgeGeometry()
    family = Family(family)
    rng = np.random.default_rng(seed)
    for attempt in range(max_retries):
        theta = generate_ground_truth(family, rng, n_special, catalog)
        anchors = _anchor_pairs(theta, rng)
        try:
            demos = tuple(
                realize_demonstration(theta, rng, k, anchors[k], geometry, catalog) for k in range(2)
            )
        except RealizationRetryExhausted:
            continue
        if not _demos_reveal(theta, demos):
            continue
        used_anchor_locs = [l for a in anchors for l in a.values()]
        try:
            scen = _scenario(theta, rng, catalog, geometry, used_anchor_locs, task_size)
        except RealizationRetryExhausted:
            scen = None
        if scen is None:
            continue
        s0, task = scen
        if certify(theta, s0, task, planner_cfg) is None:
            continue
        case = TestCase(
            id=case_id,
            family=family,
            ground_truth=theta,
            demos=demos,
            initial_state=s0,
            task=tuple(o.name for o in task),
            seed=seed,
            meta={"attempts": attempt + 1, "nSpecial": len(_special_categories(theta))},
        )
        universe = case.universe(catalog)
        if not allow_unambiguous and not _ambiguous(theta, demos, universe, catalog):
            continue
        return case
    raise GenerationRetryExhausted(f"case {case_id}: no certified case after {max_retries} attempts")


def case_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def generate_dataset(
    seed: int = 0,
    families: Iterable[Family | str] | None = None,
    per_family: int = CASES_PER_FAMILY,
    geometry: FridgeGeometry | None = None,
    catalog: Catalog | None = None,
    allow_unambiguous: bool = False,
) -> list[TestCase]:
    """``per_family`` cases for each family, ids in family-major order.

    General-location and relative-position families split evenly between one
    and two special categories.
    """
    fams = [Family(f) for f in (families or FAMILIES)]
    cases = []
    for f in fams:
        fi = FAMILIES.index(f)
        for k in range(per_family):
            index = fi * per_family + k
            n_special = None
            if f in (Family.GENERAL, Family.RELATIVE):
                n_special = 1 if k < per_family // 2 else 2
            cases.append(
                generate_case(
                    f"{f.value}-{k:02d}",
                    f,
                    case_seed(seed, index),
                    n_special=n_special,
                    geometry=geometry,
                    catalog=catalog,
                    allow_unambiguous=allow_unambiguous,
                )
            )
    return cases


ROBOT_FIXTURE_SIZE = 9
ROBOT_TASK_SIZE = 5


def generate_robot_fixture(seed: int = 0, catalog: Catalog | None = None) -> list[TestCase]:
    """Nine smaller cases in the style of the real-robot trials: five objects
    to put away, small enough for the exhaustive planner to score exactly."""
    cases = []
    for k in range(ROBOT_FIXTURE_SIZE):
        family = FAMILIES[k % len(FAMILIES)]
        cases.append(
            generate_case(
                f"robot-{k}",
                family,
                case_seed(seed, 1000 + k),
                catalog=catalog,
                task_size=ROBOT_TASK_SIZE,
            )
        )
    return cases


def write_dataset(cases: Sequence[TestCase], out: str | Path, seed: int | None = None) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for case in cases:
        (out / f"{case.id}.json").write_text(json.dumps(case.to_json(), indent=1, sort_keys=True))
    manifest = {
        "schemaVersion": CASE_SCHEMA_VERSION,
        "seed": seed,
        "cases": [{"id": c.id, "family": c.family.value, "file": f"{c.id}.json"} for c in cases],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return out


def load_dataset(path: str | Path, catalog: Catalog | None = None) -> list[TestCase]:
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text())
    return [
        TestCase.from_json(json.loads((path / c["file"]).read_text()), catalog)
        for c in manifest["cases"]
    ]
