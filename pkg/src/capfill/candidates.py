"""Candidate entity mining from a tag-indexed post corpus.

Retrieval finds posts that share a (not-too-common) tag with the query
inside a +/- N day window; the surviving posts' entity mentions become
frequency-ranked candidate pools and post-level co-occurrence counts.
The index is built once and read-only afterwards.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Optional

from .errors import DomainError
from .typesys import (CoarseType, TypeSystem, normalize_name, resolve_slot_type,
                      slot_type_name)

DEFAULT_WINDOW_DAYS = 7
DEFAULT_TAG_FREQ_CAP = 200
DEFAULT_TOP_K = 5


def normalize_tag(tag: str) -> str:
    return tag.strip().lstrip("#").casefold()


@dataclass
class Post:
    id: str
    tags: set[str]
    taken_date: date
    text: str
    mentions: list[tuple[str, CoarseType]] = field(default_factory=list)

    def __post_init__(self):
        self.tags = {normalize_tag(t) for t in self.tags if normalize_tag(t)}


@dataclass(frozen=True)
class CandidateEntity:
    name: str           # canonical surface form (case variants merged)
    slot_type: str      # slot type name, e.g. "Person" or "Athlete"
    freq: int           # number of context posts mentioning the name

    def __post_init__(self):
        if self.freq < 1:
            raise DomainError(f"candidate {self.name!r} has freq {self.freq} < 1")


@dataclass
class CandidatePool:
    """Per-slot-type candidate lists, each sorted by (freq desc, name asc)
    and truncated to the top k."""
    per_type: dict[str, list[CandidateEntity]] = field(default_factory=dict)

    def for_type(self, slot_type: str) -> list[CandidateEntity]:
        return self.per_type.get(slot_type, [])


@dataclass
class CooccurrenceStats:
    """Post-level mention counts: unary[c] posts mention c, pair[(a,b)]
    posts mention both. Keys are normalized names; pairs are stored with
    sorted keys so lookups are order-free."""
    unary: dict[str, int] = field(default_factory=dict)
    pairs: dict[tuple[str, str], int] = field(default_factory=dict)

    def unary_count(self, name: str) -> Optional[int]:
        return self.unary.get(normalize_name(name))

    def pair_count(self, a: str, b: str) -> int:
        ka, kb = normalize_name(a), normalize_name(b)
        if ka == kb:
            # a post co-mentions a name with itself iff it mentions it
            return self.unary.get(ka, 0)
        return self.pairs.get((min(ka, kb), max(ka, kb)), 0)


@dataclass(frozen=True)
class ContextQuery:
    tags: frozenset[str]
    taken_date: date
    id: Optional[str] = None

    @classmethod
    def make(cls, tags: Iterable[str], taken_date: date, id: Optional[str] = None):
        return cls(tags=frozenset(normalize_tag(t) for t in tags if normalize_tag(t)),
                   taken_date=taken_date, id=id)


class PostIndex:
    """Tag -> posts index over an immutable corpus."""

    def __init__(self, posts: Iterable[Post]):
        self.posts = list(posts)
        self.by_tag: dict[str, list[Post]] = {}
        for post in self.posts:
            for tag in post.tags:
                self.by_tag.setdefault(tag, []).append(post)

    def tag_document_frequency(self, tag: str) -> int:
        return len(self.by_tag.get(normalize_tag(tag), []))


def retrieve_context(query: ContextQuery,
                     index: PostIndex,
                     window_days: int = DEFAULT_WINDOW_DAYS,
                     tag_freq_cap: int = DEFAULT_TAG_FREQ_CAP) -> list[Post]:
    """Posts sharing at least one surviving query tag within the window.

    Query tags whose corpus document frequency exceeds `tag_freq_cap` are
    discarded before matching (over-common tags connect unrelated posts).
    The window is centered: |post date - query date| <= window_days. The
    query's own post, when present in the corpus, is excluded. Output is
    deduplicated and sorted by post id, so it does not depend on corpus
    order.
    """
    if window_days < 0:
        raise DomainError(f"window_days must be >= 0, got {window_days}")
    live_tags = [t for t in query.tags if index.tag_document_frequency(t) <= tag_freq_cap]
    hits: dict[str, Post] = {}
    for tag in live_tags:
        for post in index.by_tag.get(tag, []):
            if query.id is not None and post.id == query.id:
                continue
            if abs((post.taken_date - query.taken_date).days) <= window_days:
                hits[post.id] = post
    return [hits[pid] for pid in sorted(hits)]


def extract_candidates(context: list[Post], ts: TypeSystem,
                       top_k: int = DEFAULT_TOP_K) -> CandidatePool:
    """Group context mentions into per-type candidate lists.

    Mentions merge on (normalized name, coarse type); the display name is
    the first surface form seen in context order. Frequency is the number
    of distinct posts mentioning the name. Each type keeps the top_k
    candidates by (freq desc, name asc).
    """
    display: dict[tuple[str, CoarseType], str] = {}
    posts_seen: dict[tuple[str, CoarseType], set[str]] = {}
    for post in context:
        for surface, coarse in post.mentions:
            key = (normalize_name(surface), coarse)
            display.setdefault(key, surface)
            posts_seen.setdefault(key, set()).add(post.id)

    grouped: dict[str, list[CandidateEntity]] = {}
    for key, name in display.items():
        norm, coarse = key
        slot_type = slot_type_name(resolve_slot_type(name, coarse, ts))
        cand = CandidateEntity(name=name, slot_type=slot_type, freq=len(posts_seen[key]))
        grouped.setdefault(slot_type, []).append(cand)

    pool = CandidatePool()
    for slot_type, cands in grouped.items():
        cands.sort(key=lambda c: (-c.freq, c.name))
        pool.per_type[slot_type] = cands[:top_k]
    return pool


def gazetteer_match(text: str, ts: TypeSystem) -> list[tuple[str, CoarseType]]:
    """Longest-match scan of `text` against the type system's entity index.

    Matching is case-insensitive, non-overlapping, and word-aligned;
    leading/trailing punctuation on words is ignored when comparing, and
    the reported surface is the text span minus that edge punctuation.
    The coarse type comes from the matched entry's first fine type.
    """
    words = [(m.group(0), m.start(), m.end()) for m in re.finditer(r"\S+", text)]
    stripped = [w.strip("\"'.,!?;:()[]") for w, _, _ in words]
    max_len = ts.max_key_tokens()
    matches: list[tuple[str, CoarseType]] = []
    i = 0
    while i < len(words):
        found = None
        for length in range(min(max_len, len(words) - i), 0, -1):
            phrase = normalize_name(" ".join(stripped[i:i + length]))
            entry = ts.entity_index.get(phrase)
            if entry:
                start = words[i][1]
                end = words[i + length - 1][2]
                surface = text[start:end].strip("\"'.,!?;:()[]")
                found = (surface, entry[0].parent, length)
                break
        if found:
            surface, coarse, length = found
            matches.append((surface, coarse))
            i += length
        else:
            i += 1
    return matches


def cooccurrence(context: list[Post]) -> CooccurrenceStats:
    """Post-level co-occurrence statistics over the context's mentions.

    A name counts once per post regardless of repetitions; pair counts
    cover unordered pairs of distinct normalized names.
    """
    stats = CooccurrenceStats()
    for post in context:
        names = sorted({normalize_name(surface) for surface, _ in post.mentions})
        for name in names:
            stats.unary[name] = stats.unary.get(name, 0) + 1
        for i, a in enumerate(names):
            for b in names[i + 1:]:
                stats.pairs[(a, b)] = stats.pairs.get((a, b), 0) + 1
    return stats
