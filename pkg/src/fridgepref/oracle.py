"""Deterministic stand-ins for the language-model roles: proposing candidate
preferences from demonstrations, writing yes/no questions for candidate pairs,
and answering them (both as a likelihood and as a simulated user)."""

from __future__ import annotations

from dataclasses import dataclass
from math import log
from typing import Iterable, Sequence

import numpy as np

from .catalog import (
    CATEGORIES,
    DEFAULT_CATALOG,
    GENERAL_LOCATIONS,
    SPECIFIC_LOCATIONS,
    Catalog,
    Category,
)
from .preference import (
    MAX_CAPACITY,
    ConditionalOnSpace,
    ExceptionForAttribute,
    GeneralLoc,
    Preference,
    Requirement,
    SameShelfAs,
    SpecificLoc,
    TogetherSameCategory,
    requirement_from_json,
    requirement_key,
)
from .reward import Demonstration, consistent_with_demos, demo_to_plan

YES = "yes"
NO = "no"
ANSWERS = (YES, NO)


class InsufficientCandidatesError(ValueError):
    def __init__(self, found: list[Preference], wanted: int):
        super().__init__(f"only {len(found)} distinct consistent preferences, wanted {wanted}")
        self.found = found
        self.wanted = wanted


class IdenticalPreferenceError(ValueError):
    pass


@dataclass(frozen=True)
class Question:
    category: Category
    asserted: Requirement

    @property
    def key(self) -> tuple:
        return (CATEGORIES.index(self.category), self.asserted.type_id, requirement_key(self.asserted))

    @property
    def text(self) -> str:
        return f"Do you prefer {self.asserted.describe(self.category)}?"

    def to_json(self) -> dict:
        return {
            "category": self.category.value,
            "asserted": self.asserted.to_json(),
            "text": self.text,
        }

    @classmethod
    def from_json(cls, doc) -> "Question":
        return cls(Category(doc["category"]), requirement_from_json(doc["asserted"]))


@dataclass(frozen=True)
class AnswerModel:
    eta: float = 0.1

    def __post_init__(self):
        if not 0 <= self.eta < 0.5:
            raise ValueError("eta must lie in [0, 0.5)")

    @property
    def logit_gap(self) -> float:
        return float("inf") if self.eta == 0 else log((1 - self.eta) / self.eta)


def enumerate_requirements(
    category: Category,
    universe: Iterable[Category] = CATEGORIES,
    catalog: Catalog | None = None,
) -> list[Requirement]:
    """Every requirement the grammar allows for ``category``."""
    catalog = catalog or DEFAULT_CATALOG
    category = Category(category)
    reqs: list[Requirement] = [SpecificLoc(l) for l in SPECIFIC_LOCATIONS]
    reqs += [GeneralLoc(g) for g in GENERAL_LOCATIONS]
    reqs.append(TogetherSameCategory())
    reqs += [SameShelfAs(c) for c in CATEGORIES if c in set(universe) and c is not category]
    for base in SPECIFIC_LOCATIONS:
        for attr in catalog.attributes_of(category):
            for exc in SPECIFIC_LOCATIONS:
                if exc is not base:
                    reqs.append(ExceptionForAttribute(base, attr, exc))
    for primary in SPECIFIC_LOCATIONS:
        for cap in range(1, MAX_CAPACITY + 1):
            for fallback in SPECIFIC_LOCATIONS:
                if fallback is not primary:
                    reqs.append(ConditionalOnSpace(primary, cap, fallback))
    return reqs


def consistent_requirements(
    category: Category,
    demos: Sequence[Demonstration],
    universe: Iterable[Category] = CATEGORIES,
    catalog: Catalog | None = None,
) -> list[Requirement]:
    plans = [demo_to_plan(d) for d in demos]
    return [
        req
        for req in enumerate_requirements(category, universe, catalog)
        if consistent_with_demos(Preference({category: req}), plans, [category])
    ]


def _sample_type(groups: dict[int, list[Requirement]], used: dict[int, int], rng) -> int:
    types = sorted(groups)
    weights = np.array([1.0 / (1 + used.get(t, 0)) for t in types])
    return types[int(rng.choice(len(types), p=weights / weights.sum()))]


def propose_candidates(
    demos: Sequence[Demonstration],
    universe: Iterable[Category],
    n: int = 5,
    seed: int | np.random.Generator = 0,
    ground_truth: Preference | None = None,
    catalog: Catalog | None = None,
    max_draws: int = 200,
) -> list[Preference]:
    """``n`` distinct demo-consistent preferences over ``universe``.

    Each draw picks, per category, a requirement type with weight
    ``1 / (1 + times that type was already drawn for the category)`` and then
    a uniformly random requirement of that type. With ``ground_truth`` it is
    swapped in at a random slot unless already drawn.
    """
    if not demos:
        raise ValueError("at least one demonstration is required")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cats = [c for c in CATEGORIES if c in {Category(u) for u in universe}]
    groups: dict[Category, dict[int, list[Requirement]]] = {}
    for c in cats:
        by_type: dict[int, list[Requirement]] = {}
        for req in consistent_requirements(c, demos, cats, catalog):
            by_type.setdefault(req.type_id, []).append(req)
        if not by_type:
            raise InsufficientCandidatesError([], n)
        groups[c] = by_type

    used: dict[Category, dict[int, int]] = {c: {} for c in cats}
    out: list[Preference] = []
    seen: set[Preference] = set()
    for _ in range(max_draws):
        if len(out) == n:
            break
        reqs = {}
        for c in cats:
            t = _sample_type(groups[c], used[c], rng)
            members = groups[c][t]
            reqs[c] = members[int(rng.integers(len(members)))]
        pref = Preference(reqs)
        if pref in seen:
            continue
        seen.add(pref)
        out.append(pref)
        for c, req in reqs.items():
            used[c][req.type_id] = used[c].get(req.type_id, 0) + 1
    if ground_truth is not None:
        gt = ground_truth.restrict(cats)
        if gt not in seen:
            if len(out) < n:
                out.append(gt)
            else:
                out[int(rng.integers(len(out)))] = gt
    if len(out) < n:
        raise InsufficientCandidatesError(out, n)
    return out


def generate_questions(theta_i: Preference, theta_j: Preference, m: int = 2) -> list[Question]:
    """Up to ``m`` questions asserting each side's requirement on the
    categories where the two preferences differ."""
    if theta_i == theta_j:
        raise IdenticalPreferenceError("cannot write questions for identical preferences")
    out: list[Question] = []
    for c in CATEGORIES:
        a, b = theta_i.get(c), theta_j.get(c)
        if a == b:
            continue
        for req in (a, b):
            if req is not None:
                q = Question(c, req)
                if q not in out:
                    out.append(q)
    return out[:m]


def question_pool(candidates: Sequence[Preference], m: int = 2) -> list[Question]:
    """Deduplicated questions over all candidate pairs, in canonical order."""
    pool: dict[Question, None] = {}
    for i in range(len(candidates)):
        for j in range(i + 1, len(candidates)):
            if candidates[i] == candidates[j]:
                continue
            for q in generate_questions(candidates[i], candidates[j], m):
                pool.setdefault(q, None)
    return sorted(pool, key=lambda q: q.key)


def deterministic_answer(q: Question, theta: Preference) -> str:
    held = theta[q.category]
    return YES if requirement_key(held) == requirement_key(q.asserted) else NO


def likelihood(o: str, q: Question, theta: Preference, model: AnswerModel) -> float:
    """Bradley-Terry answer probability with logit gap ``ln((1-eta)/eta)``."""
    return 1 - model.eta if o == deterministic_answer(q, theta) else model.eta


def simulated_user(q: Question, theta_star: Preference, model: AnswerModel, rng: np.random.Generator) -> str:
    truth = deterministic_answer(q, theta_star)
    if model.eta > 0 and rng.random() < model.eta:
        return NO if truth == YES else YES
    return truth
