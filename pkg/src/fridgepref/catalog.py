"""Object ontology and the fridge location hierarchy.

The fridge has three shelves, each split into a left and right half, giving six
specific locations. Five general locations are fixed unions of those.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

CATALOG_SCHEMA_VERSION = 1


class UnknownObjectError(KeyError):
    """Raised when an object name is not in the catalog."""


class Category(str, Enum):
    FRUITS = "fruits"
    VEGETABLES = "vegetables"
    CONDIMENTS = "condiments"
    DAIRY = "dairy-products"
    JUICE = "juice-and-soft-drinks"

    @property
    def label(self) -> str:
        return _CATEGORY_LABELS[self]


_CATEGORY_LABELS = {
    Category.FRUITS: "fruits",
    Category.VEGETABLES: "vegetables",
    Category.CONDIMENTS: "condiments",
    Category.DAIRY: "dairy products",
    Category.JUICE: "juice and soft drinks",
}

CATEGORIES: tuple[Category, ...] = tuple(Category)


class Shelf(str, Enum):
    TOP = "top"
    MIDDLE = "middle"
    BOTTOM = "bottom"


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class SpecificLocation(str, Enum):
    # declaration order is the canonical location order
    LEFT_OF_TOP = "left-of-top"
    RIGHT_OF_TOP = "right-of-top"
    LEFT_OF_MIDDLE = "left-of-middle"
    RIGHT_OF_MIDDLE = "right-of-middle"
    LEFT_OF_BOTTOM = "left-of-bottom"
    RIGHT_OF_BOTTOM = "right-of-bottom"

    @property
    def shelf(self) -> Shelf:
        return _SPECIFIC_PARTS[self][0]

    @property
    def side(self) -> Side:
        return _SPECIFIC_PARTS[self][1]

    @property
    def order(self) -> int:
        return _SPECIFIC_ORDER[self]

    @property
    def label(self) -> str:
        return f"{self.side.value} side of {self.shelf.value} shelf"

    @classmethod
    def of(cls, shelf: Shelf | str, side: Side | str) -> "SpecificLocation":
        return _SPECIFIC_BY_PARTS[Shelf(shelf), Side(side)]


SPECIFIC_LOCATIONS: tuple[SpecificLocation, ...] = tuple(SpecificLocation)
_SPECIFIC_PARTS = {
    l: (Shelf(l.value.split("-of-")[1]), Side(l.value.split("-of-")[0])) for l in SPECIFIC_LOCATIONS
}
_SPECIFIC_BY_PARTS = {parts: l for l, parts in _SPECIFIC_PARTS.items()}
_SPECIFIC_ORDER = {loc: i for i, loc in enumerate(SPECIFIC_LOCATIONS)}


class GeneralLocation(str, Enum):
    LEFT_SIDE = "left-side-of-fridge"
    RIGHT_SIDE = "right-side-of-fridge"
    TOP_SHELF = "top-shelf"
    MIDDLE_SHELF = "middle-shelf"
    BOTTOM_SHELF = "bottom-shelf"

    @property
    def members(self) -> frozenset[SpecificLocation]:
        return _GENERAL_MEMBERS[self]

    @property
    def label(self) -> str:
        return _GENERAL_LABELS[self]


def _members(general: GeneralLocation) -> frozenset[SpecificLocation]:
    if general is GeneralLocation.LEFT_SIDE:
        return frozenset(l for l in SPECIFIC_LOCATIONS if l.side is Side.LEFT)
    if general is GeneralLocation.RIGHT_SIDE:
        return frozenset(l for l in SPECIFIC_LOCATIONS if l.side is Side.RIGHT)
    shelf = Shelf(general.value.split("-")[0])
    return frozenset(l for l in SPECIFIC_LOCATIONS if l.shelf is shelf)


_GENERAL_MEMBERS = {g: _members(g) for g in GeneralLocation}
_GENERAL_LABELS = {
    GeneralLocation.LEFT_SIDE: "left side of the fridge",
    GeneralLocation.RIGHT_SIDE: "right side of the fridge",
    GeneralLocation.TOP_SHELF: "top shelf",
    GeneralLocation.MIDDLE_SHELF: "middle shelf",
    GeneralLocation.BOTTOM_SHELF: "bottom shelf",
}
GENERAL_LOCATIONS: tuple[GeneralLocation, ...] = tuple(GeneralLocation)


def canonical_order(locs: Iterable[SpecificLocation]) -> list[SpecificLocation]:
    return sorted(set(locs), key=lambda l: l.order)


def expand(loc: GeneralLocation) -> frozenset[SpecificLocation]:
    """Specific locations a general location is made of."""
    return GeneralLocation(loc).members


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    category: Category
    attributes: frozenset[str]
    width: float

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "category": self.category.value,
            "attributes": sorted(self.attributes),
            "width": self.width,
        }


ATTRIBUTE_VOCAB: dict[Category, tuple[str, ...]] = {
    Category.FRUITS: ("big", "small"),
    Category.VEGETABLES: ("leafy", "root"),
    Category.CONDIMENTS: ("sauce", "spread"),
    Category.DAIRY: ("cheese", "milk"),
    Category.JUICE: ("soft-drink", "juice"),
}

ALLOWED_WIDTHS = (6, 8, 10, 12, 15)

# (name, category, attributes, width in cm)
_DEFAULT_OBJECTS: tuple[tuple[str, Category, tuple[str, ...], float], ...] = (
    ("apple", Category.FRUITS, (), 8),
    ("orange", Category.FRUITS, (), 8),
    ("pear", Category.FRUITS, (), 8),
    ("peach", Category.FRUITS, (), 8),
    ("banana", Category.FRUITS, (), 10),
    ("pineapple", Category.FRUITS, ("big",), 15),
    ("cantaloupe", Category.FRUITS, ("big",), 12),
    ("kiwi", Category.FRUITS, ("small",), 6),
    ("plum", Category.FRUITS, ("small",), 6),
    ("cucumber", Category.VEGETABLES, (), 8),
    ("bell pepper", Category.VEGETABLES, (), 10),
    ("broccoli", Category.VEGETABLES, (), 12),
    ("zucchini", Category.VEGETABLES, (), 8),
    ("corn", Category.VEGETABLES, (), 8),
    ("spinach", Category.VEGETABLES, ("leafy",), 10),
    ("lettuce", Category.VEGETABLES, ("leafy",), 12),
    ("carrot", Category.VEGETABLES, ("root",), 6),
    ("beet", Category.VEGETABLES, ("root",), 6),
    ("relish", Category.CONDIMENTS, (), 6),
    ("pickles", Category.CONDIMENTS, (), 10),
    ("salsa", Category.CONDIMENTS, (), 8),
    ("horseradish", Category.CONDIMENTS, (), 6),
    ("ketchup", Category.CONDIMENTS, ("sauce",), 8),
    ("mustard", Category.CONDIMENTS, ("sauce",), 6),
    ("hot sauce", Category.CONDIMENTS, ("sauce",), 6),
    ("mayonnaise", Category.CONDIMENTS, ("spread",), 8),
    ("jam", Category.CONDIMENTS, ("spread",), 8),
    ("yogurt", Category.DAIRY, (), 8),
    ("butter", Category.DAIRY, (), 6),
    ("sour cream", Category.DAIRY, (), 8),
    ("cream", Category.DAIRY, (), 6),
    ("whole milk", Category.DAIRY, ("milk",), 10),
    ("oat milk", Category.DAIRY, ("milk",), 10),
    ("cheese", Category.DAIRY, ("cheese",), 8),
    ("cheddar", Category.DAIRY, ("cheese",), 8),
    ("cream cheese", Category.DAIRY, ("cheese",), 6),
    ("lemonade", Category.JUICE, (), 10),
    ("iced tea", Category.JUICE, (), 10),
    ("sparkling water", Category.JUICE, (), 8),
    ("cold brew", Category.JUICE, (), 8),
    ("coke", Category.JUICE, ("soft-drink",), 8),
    ("sprite", Category.JUICE, ("soft-drink",), 8),
    ("ginger ale", Category.JUICE, ("soft-drink",), 8),
    ("orange juice", Category.JUICE, ("juice",), 10),
    ("apple juice", Category.JUICE, ("juice",), 10),
)


class Catalog(Mapping[str, ObjectSpec]):
    """Read-only name -> ObjectSpec mapping with category indexes."""

    def __init__(
        self,
        objects: Iterable[ObjectSpec],
        attribute_vocab: Mapping[Category, Iterable[str]] | None = None,
    ):
        vocab = attribute_vocab if attribute_vocab is not None else ATTRIBUTE_VOCAB
        self._vocab = {Category(c): tuple(v) for c, v in vocab.items()}
        self._objects: dict[str, ObjectSpec] = {}
        for spec in objects:
            if spec.name in self._objects:
                raise ValueError(f"duplicate object name {spec.name!r}")
            if spec.width <= 0:
                raise ValueError(f"object {spec.name!r} has non-positive width")
            unknown = set(spec.attributes) - set(self._vocab.get(spec.category, ()))
            if unknown:
                raise ValueError(
                    f"object {spec.name!r} has attributes {sorted(unknown)} outside "
                    f"the {spec.category.value} vocabulary"
                )
            self._objects[spec.name] = spec

    def __getitem__(self, name: str) -> ObjectSpec:
        return self._objects[name]

    def __iter__(self):
        return iter(self._objects)

    def __len__(self) -> int:
        return len(self._objects)

    def lookup(self, name: str) -> ObjectSpec:
        try:
            return self._objects[name]
        except KeyError:
            raise UnknownObjectError(name) from None

    def attributes_of(self, category: Category) -> tuple[str, ...]:
        return self._vocab.get(Category(category), ())

    def in_category(self, category: Category) -> list[ObjectSpec]:
        category = Category(category)
        return [o for o in self._objects.values() if o.category is category]

    def to_json(self) -> dict:
        return {
            "schemaVersion": CATALOG_SCHEMA_VERSION,
            "attributeVocab": {c.value: list(v) for c, v in self._vocab.items()},
            "objects": [o.to_json() for o in self._objects.values()],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "Catalog":
        version = doc.get("schemaVersion")
        if version != CATALOG_SCHEMA_VERSION:
            raise ValueError(f"unsupported catalog schemaVersion {version!r}")
        vocab = {Category(c): tuple(v) for c, v in doc["attributeVocab"].items()}
        objects = [
            ObjectSpec(
                name=o["name"],
                category=Category(o["category"]),
                attributes=frozenset(o.get("attributes", ())),
                width=float(o["width"]),
            )
            for o in doc["objects"]
        ]
        return cls(objects, vocab)

    @classmethod
    def load(cls, path: str | Path) -> "Catalog":
        return cls.from_json(json.loads(Path(path).read_text()))


def _build_default() -> Catalog:
    return Catalog(
        ObjectSpec(name, cat, frozenset(attrs), float(width))
        for name, cat, attrs, width in _DEFAULT_OBJECTS
    )


DEFAULT_CATALOG = _build_default()


def lookup(name: str, catalog: Catalog | None = None) -> ObjectSpec:
    return (catalog or DEFAULT_CATALOG).lookup(name)
