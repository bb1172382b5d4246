"""Structured preference grammar.

A preference assigns each category one requirement of five kinds:

* ``SpecificLoc``: one specific location.
* ``GeneralLoc``: any member of a general location.
* ``TogetherSameCategory`` / ``SameShelfAs``: relative placement.
* ``ExceptionForAttribute``: a base location plus an override for one attribute.
* ``ConditionalOnSpace``: a primary location while it holds fewer than
  ``capacity`` objects of the category, a fallback otherwise.

``admissible_locations`` turns a requirement into the specific locations that
satisfy it for a given object in a given fridge state; everything downstream
(reward, planning, answering questions) goes through it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

from .catalog import (
    CATEGORIES,
    SPECIFIC_LOCATIONS,
    Category,
    GeneralLocation,
    ObjectSpec,
    SpecificLocation,
    canonical_order,
)

PREFERENCE_SCHEMA_VERSION = 1
MAX_CAPACITY = 3


class MalformedRequirementError(ValueError):
    pass


class UncoveredCategoryError(KeyError):
    """A preference has no requirement for the category being asked about."""


@dataclass(frozen=True)
class SpecificLoc:
    loc: SpecificLocation
    type_id = 1

    def to_json(self) -> dict:
        return {"type": "specific", "loc": self.loc.value}

    def describe(self, category: Category) -> str:
        return f"{category.label} on the {self.loc.label}"


@dataclass(frozen=True)
class GeneralLoc:
    loc: GeneralLocation
    type_id = 2

    def to_json(self) -> dict:
        return {"type": "general", "loc": self.loc.value}

    def describe(self, category: Category) -> str:
        return f"{category.label} anywhere on the {self.loc.label}"


@dataclass(frozen=True)
class TogetherSameCategory:
    type_id = 3

    def to_json(self) -> dict:
        return {"type": "together"}

    def describe(self, category: Category) -> str:
        return (
            f"{category.label} placed together next to existing {category.label}, "
            "regardless of which shelf they are on"
        )


@dataclass(frozen=True)
class SameShelfAs:
    other: Category
    type_id = 3

    def to_json(self) -> dict:
        return {"type": "same-shelf-as", "other": self.other.value}

    def describe(self, category: Category) -> str:
        return (
            f"{category.label} on the same shelf next to {self.other.label}, "
            "whichever shelf that is"
        )


@dataclass(frozen=True)
class ExceptionForAttribute:
    base: SpecificLocation
    attribute: str
    exception_loc: SpecificLocation
    type_id = 4

    def to_json(self) -> dict:
        return {
            "type": "exception",
            "base": self.base.value,
            "attribute": self.attribute,
            "exceptionLoc": self.exception_loc.value,
        }

    def describe(self, category: Category) -> str:
        return (
            f"{category.label} on the {self.base.label}, but {self.attribute} "
            f"{category.label} on the {self.exception_loc.label}"
        )


@dataclass(frozen=True)
class ConditionalOnSpace:
    primary: SpecificLocation
    capacity: int
    fallback: SpecificLocation
    type_id = 5

    def to_json(self) -> dict:
        return {
            "type": "conditional",
            "primary": self.primary.value,
            "capacity": self.capacity,
            "fallback": self.fallback.value,
        }

    def describe(self, category: Category) -> str:
        return (
            f"{category.label} on the {self.primary.label} while it holds fewer than "
            f"{self.capacity} {category.label}, otherwise on the {self.fallback.label}"
        )


Requirement = Union[
    SpecificLoc,
    GeneralLoc,
    TogetherSameCategory,
    SameShelfAs,
    ExceptionForAttribute,
    ConditionalOnSpace,
]
REQUIREMENT_TYPES = (
    SpecificLoc,
    GeneralLoc,
    TogetherSameCategory,
    SameShelfAs,
    ExceptionForAttribute,
    ConditionalOnSpace,
)


def validate_requirement(req: Requirement, category: Category | None = None) -> Requirement:
    if not isinstance(req, REQUIREMENT_TYPES):
        raise MalformedRequirementError(f"not a requirement: {req!r}")
    if isinstance(req, SpecificLoc) and not isinstance(req.loc, SpecificLocation):
        raise MalformedRequirementError("SpecificLoc needs a SpecificLocation")
    if isinstance(req, GeneralLoc) and not isinstance(req.loc, GeneralLocation):
        raise MalformedRequirementError("GeneralLoc needs a GeneralLocation")
    if isinstance(req, ExceptionForAttribute) and req.base == req.exception_loc:
        raise MalformedRequirementError("exception location must differ from base")
    if isinstance(req, ConditionalOnSpace):
        if req.primary == req.fallback:
            raise MalformedRequirementError("fallback must differ from primary")
        if not 1 <= req.capacity <= MAX_CAPACITY:
            raise MalformedRequirementError(f"capacity must be in 1..{MAX_CAPACITY}")
    if isinstance(req, SameShelfAs) and category is not None and req.other == category:
        raise MalformedRequirementError("same-shelf-as must name another category")
    return req


def requirement_from_json(doc: Mapping) -> Requirement:
    kind = doc.get("type")
    try:
        if kind == "specific":
            req = SpecificLoc(SpecificLocation(doc["loc"]))
        elif kind == "general":
            req = GeneralLoc(GeneralLocation(doc["loc"]))
        elif kind == "together":
            req = TogetherSameCategory()
        elif kind == "same-shelf-as":
            req = SameShelfAs(Category(doc["other"]))
        elif kind == "exception":
            req = ExceptionForAttribute(
                SpecificLocation(doc["base"]),
                str(doc["attribute"]),
                SpecificLocation(doc["exceptionLoc"]),
            )
        elif kind == "conditional":
            req = ConditionalOnSpace(
                SpecificLocation(doc["primary"]),
                int(doc["capacity"]),
                SpecificLocation(doc["fallback"]),
            )
        else:
            raise MalformedRequirementError(f"unknown requirement type {kind!r}")
    except (KeyError, ValueError) as exc:
        if isinstance(exc, MalformedRequirementError):
            raise
        raise MalformedRequirementError(f"bad requirement {doc!r}: {exc}") from None
    return validate_requirement(req)


def requirement_key(req: Requirement) -> str:
    return json.dumps(req.to_json(), sort_keys=True, separators=(",", ":"))


class Preference(Mapping[Category, Requirement]):
    """Immutable map from category to requirement.

    Iteration follows the canonical category order, so two preferences with
    the same entries serialize identically no matter how they were built.
    """

    __slots__ = ("_reqs", "_key")

    def __init__(self, requirements: Mapping[Category | str, Requirement]):
        reqs = {}
        for cat, req in requirements.items():
            cat = Category(cat)
            reqs[cat] = validate_requirement(req, cat)
        self._reqs = {c: reqs[c] for c in CATEGORIES if c in reqs}
        self._key = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def __getitem__(self, category: Category) -> Requirement:
        try:
            return self._reqs[Category(category)]
        except KeyError:
            raise UncoveredCategoryError(category) from None

    def __iter__(self):
        return iter(self._reqs)

    def __len__(self) -> int:
        return len(self._reqs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Preference):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def __repr__(self) -> str:
        return f"Preference({self._key})"

    @property
    def key(self) -> str:
        return self._key

    def replace(self, category: Category, req: Requirement) -> "Preference":
        reqs = dict(self._reqs)
        reqs[Category(category)] = req
        return Preference(reqs)

    def restrict(self, categories: Iterable[Category]) -> "Preference":
        keep = {Category(c) for c in categories}
        return Preference({c: r for c, r in self._reqs.items() if c in keep})

    def describe(self) -> str:
        return "; ".join(req.describe(cat) for cat, req in self._reqs.items())

    def to_json(self) -> dict:
        return {
            "schemaVersion": PREFERENCE_SCHEMA_VERSION,
            "requirements": {c.value: r.to_json() for c, r in self._reqs.items()},
        }

    def dumps(self) -> str:
        return self._key

    @classmethod
    def from_json(cls, doc: Mapping) -> "Preference":
        version = doc.get("schemaVersion", PREFERENCE_SCHEMA_VERSION)
        if version != PREFERENCE_SCHEMA_VERSION:
            raise ValueError(f"unsupported preference schemaVersion {version!r}")
        return cls({Category(c): requirement_from_json(r) for c, r in doc["requirements"].items()})


def canonicalize(p: Preference | Mapping[Category, Requirement]) -> Preference:
    """Validated canonical form; idempotent."""
    if isinstance(p, Preference):
        return Preference.from_json(json.loads(p.dumps()))
    return Preference(p)


def _semantic(state) -> Mapping[SpecificLocation, list[ObjectSpec]]:
    if hasattr(state, "semantic_view"):
        return state.semantic_view()
    return state


_GENERAL_ORDERED = {g: tuple(canonical_order(g.members)) for g in GeneralLocation}


def admissible_locations(
    req: Requirement,
    attributes: Iterable[str],
    state,
    category: Category,
) -> list[SpecificLocation]:
    """Specific locations, in canonical order, where placing an object of
    ``category`` with ``attributes`` into ``state`` satisfies ``req``.

    ``state`` is a FridgeState or its semantic view.
    """
    category = Category(category)
    if isinstance(req, SpecificLoc):
        return [req.loc]
    if isinstance(req, GeneralLoc):
        return list(_GENERAL_ORDERED[req.loc])
    if isinstance(req, ExceptionForAttribute):
        return [req.exception_loc if req.attribute in set(attributes) else req.base]
    view = _semantic(state)
    if isinstance(req, ConditionalOnSpace):
        count = sum(1 for o in view.get(req.primary, ()) if o.category is category)
        return [req.primary if count < req.capacity else req.fallback]
    if isinstance(req, TogetherSameCategory):
        anchors = [l for l in SPECIFIC_LOCATIONS if any(o.category is category for o in view.get(l, ()))]
        return anchors if anchors else list(SPECIFIC_LOCATIONS)
    if isinstance(req, SameShelfAs):
        shelves = {l.shelf for l in SPECIFIC_LOCATIONS if any(o.category is req.other for o in view.get(l, ()))}
        if not shelves:
            return list(SPECIFIC_LOCATIONS)
        return [l for l in SPECIFIC_LOCATIONS if l.shelf in shelves]
    raise MalformedRequirementError(f"not a requirement: {req!r}")
