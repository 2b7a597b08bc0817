"""Render a filled template into a final caption string.

Chosen candidate names drop into their slots, unfillable slots fall back
to the slot type's own name as a generic word, and an EXIF capture date
is appended as " on <Month> <day> <year>".
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date
from typing import Optional

from .collective import Assignment
from .errors import ContractError
from .templatize import SlotItem, Template, WordItem
from .typesys import slot_type_name

# no space before these when they appear as standalone tokens
_NO_SPACE_BEFORE = {".", ",", "!", "?", ";", ":"}
# no space after an opening quote token
_OPENING_QUOTES = {'"', "“", "‘"}

_MONTHS = ["January", "February", "March", "April", "May", "June", "July",
           "August", "September", "October", "November", "December"]

_DATE_SUFFIX = re.compile(
    r" on (?:" + "|".join(_MONTHS) + r") \d{1,2} \d{4}\.?$")


@dataclass(frozen=True)
class ImageMeta:
    exif_date: Optional[date] = None
    geo: Optional[tuple[float, float]] = None   # carried through, not realized


def detokenize(tokens: list[str]) -> str:
    """Join tokens with single spaces, attaching punctuation: no space
    before .,!?;: and none after an opening quote."""
    out = ""
    glue_next = False
    for tok in tokens:
        if not tok:
            continue
        if out and not glue_next and tok not in _NO_SPACE_BEFORE:
            out += " "
        out += tok
        glue_next = tok in _OPENING_QUOTES
    return out


def fill(template: Template, assignment: Assignment) -> str:
    """Replace slots with their assigned candidate names.

    Every SlotItem must be either chosen or listed unfillable in the
    assignment, and the assignment must not reference positions that are
    not slots of this template; otherwise the call is a contract error.
    Unfillable slots render as the slot type's name ("Athlete" for an
    empty Athlete pool).
    """
    slot_positions = set(template.slot_positions())
    by_position = {ref.position: cand for ref, cand in assignment.chosen.items()}
    unfillable = {ref.position for ref in assignment.unfillable}
    stray = (set(by_position) | unfillable) - slot_positions
    if stray:
        raise ContractError(
            f"assignment references non-slot positions {sorted(stray)}")
    missing = slot_positions - set(by_position) - unfillable
    if missing:
        raise ContractError(
            f"slots at positions {sorted(missing)} neither filled nor marked unfillable")

    tokens = []
    for position, item in enumerate(template.items):
        if isinstance(item, WordItem):
            tokens.append(item.form)
        elif position in by_position:
            tokens.append(by_position[position].name)
        else:
            tokens.append(slot_type_name(item.slot_type))
    return detokenize(tokens)


def format_exif_date(when: date) -> str:
    """English month name, unpadded day, no comma: "April 26 2016"."""
    return f"{_MONTHS[when.month - 1]} {when.day} {when.year}"


def append_date(caption: str, meta: ImageMeta) -> str:
    """Append the capture date, keeping exactly one terminal period.

    Without an EXIF date the caption passes through untouched. A caption
    that already ends in a date suffix is left alone, so the operation
    cannot stack dates when applied twice.
    """
    if meta.exif_date is None:
        return caption
    if _DATE_SUFFIX.search(caption):
        return caption
    suffix = f" on {format_exif_date(meta.exif_date)}"
    if caption.endswith("."):
        return caption[:-1].rstrip() + suffix + "."
    return caption + suffix + "."
