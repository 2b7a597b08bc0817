"""Entity type system: four coarse types plus a file-backed fine-type hierarchy.

The fine types come from a TSV mapping file (one row per entity name /
fine type pair) instead of a live knowledge base, so slot typing is
deterministic and works offline. A TypeSystem is immutable after loading
and safe to share across threads or processes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .errors import ParseError, SchemaError

_WS = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Case-fold and collapse internal whitespace. Used everywhere an
    entity surface string becomes a dictionary key."""
    return _WS.sub(" ", name.strip()).casefold()


class CoarseType(Enum):
    PERSON = "Person"
    LOCATION = "Location"
    ORGANIZATION = "Organization"
    MISCELLANEOUS = "Miscellaneous"

    @classmethod
    def parse(cls, text: str) -> "CoarseType":
        for member in cls:
            if member.value.casefold() == text.strip().casefold():
                return member
        raise SchemaError(f"unknown coarse type {text!r} (expected one of "
                          f"{', '.join(m.value for m in cls)})")


@dataclass(frozen=True)
class FineType:
    """A node of the fine-type hierarchy below one coarse type.

    depth is caller-supplied metadata (position in the source hierarchy);
    smaller depth means a more general type. Depth 0 is reserved for the
    coarse roots themselves and is rejected in mapping files.
    """
    name: str
    parent: CoarseType
    depth: int


SlotType = Union[CoarseType, FineType]


def slot_type_name(slot_type: SlotType) -> str:
    """Human-readable name of a slot type ("Person", "Athlete", ...)."""
    if isinstance(slot_type, CoarseType):
        return slot_type.value
    return slot_type.name


@dataclass
class TypeSystem:
    """Fine types plus an index from normalized entity name to its types.

    Per-entity type lists preserve mapping-file row order; that order is
    the documented tie-break when several fine types share the minimal
    depth.
    """
    fine_types: dict[str, FineType] = field(default_factory=dict)
    entity_index: dict[str, list[FineType]] = field(default_factory=dict)

    def lookup(self, name: str) -> list[FineType]:
        return self.entity_index.get(normalize_name(name), [])

    def fine_by_name(self, name: str) -> Optional[FineType]:
        return self.fine_types.get(name)

    def max_key_tokens(self) -> int:
        """Longest indexed name, in tokens. Bounds gazetteer scans."""
        if not self.entity_index:
            return 0
        return max(len(key.split(" ")) for key in self.entity_index)


def load_type_system(path) -> TypeSystem:
    """Load a TypeSystem from a TSV mapping file.

    Rows are `entity_name <TAB> fine_type <TAB> coarse_type <TAB> depth`;
    blank lines and `#` comments are ignored. Redefining a fine type with
    a different parent or depth is a schema error, as is depth < 1.
    """
    ts = TypeSystem()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            row = line.rstrip("\n")
            if not row.strip() or row.lstrip().startswith("#"):
                continue
            cols = row.split("\t")
            if len(cols) != 4:
                raise ParseError(f"expected 4 tab-separated columns, got {len(cols)}",
                                 path=path, line=lineno)
            entity, fine_name, coarse_text, depth_text = (c.strip() for c in cols)
            if not entity or not fine_name:
                raise ParseError("empty entity or fine type name", path=path, line=lineno)
            coarse = CoarseType.parse(coarse_text)
            try:
                depth = int(depth_text)
            except ValueError:
                raise ParseError(f"depth must be an integer, got {depth_text!r}",
                                 path=path, line=lineno) from None
            if depth < 1:
                raise SchemaError(f"{path}:{lineno}: depth must be >= 1 "
                                  "(0 is reserved for the coarse roots)")
            fine = FineType(name=fine_name, parent=coarse, depth=depth)
            known = ts.fine_types.get(fine_name)
            if known is not None and known != fine:
                raise SchemaError(f"{path}:{lineno}: fine type {fine_name!r} redefined "
                                  f"with different parent or depth")
            ts.fine_types.setdefault(fine_name, fine)
            ts.entity_index.setdefault(normalize_name(entity), []).append(fine)
    return ts


def resolve_slot_type(name: str, coarse: CoarseType, ts: TypeSystem) -> SlotType:
    """Slot type for an entity mention: the most general matching fine type.

    Among indexed fine types whose parent equals `coarse`, the one with
    minimal depth wins; equal depths fall back to mapping-file row order.
    Unindexed names (or no type under this coarse) resolve to the coarse
    type itself. Total function; never raises.
    """
    best: Optional[FineType] = None
    for fine in ts.lookup(name):
        if fine.parent is not coarse:
            continue
        if best is None or fine.depth < best.depth:
            best = fine
    return best if best is not None else coarse
