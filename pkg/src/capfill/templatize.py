"""Turn news-style captions into slot templates.

Three stages: preprocess the raw caption text, compress its dependency
parse by pruning non-whitelisted relations, and generalize entity
mentions into typed slots. All functions are pure; corpus-level work can
fan out per record.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union

from .errors import StructureError
from .typesys import CoarseType, SlotType, TypeSystem, resolve_slot_type, slot_type_name

# Grammatical relations kept during compression. The list mixes label
# inventories on purpose (obj/dobj, prep/pobj coexist); it is matched
# case-insensitively and callers may substitute their own set.
DEFAULT_RELATION_WHITELIST = frozenset({
    "nsubj", "obj", "iobj", "dobj", "acomp", "det", "neg", "nsubjpass",
    "pobj", "predet", "prep", "prt", "vmod", "nmod", "cc",
})

MIN_CAPTION_TOKENS = 10

_SENT_SPLIT = re.compile(r"(?<=[.!?])\s+")


@dataclass(frozen=True)
class Token:
    index: int          # 1-based surface position
    form: str
    head: int           # index of the governor, 0 for the root
    deprel: str


@dataclass(frozen=True)
class EntityMention:
    start: int          # 1-based token index
    end: int            # inclusive
    surface: str
    coarse: CoarseType


@dataclass
class ParsedCaption:
    """A caption's tokens with one head/relation per token, plus mentions.

    The head links must form a single tree over all tokens; mentions must
    cover disjoint, in-bounds spans whose joined forms equal the surface.
    `validate` checks all of it and raises StructureError otherwise.
    """
    tokens: list[Token]
    mentions: list[EntityMention] = field(default_factory=list)
    doc_id: str = ""

    def validate(self) -> None:
        n = len(self.tokens)
        if n == 0:
            raise StructureError(self._msg("empty token list"))
        by_index = {}
        roots = []
        for tok in self.tokens:
            if tok.index in by_index:
                raise StructureError(self._msg(f"duplicate token index {tok.index}"))
            by_index[tok.index] = tok
            if tok.head == tok.index:
                raise StructureError(self._msg(f"token {tok.index} is its own head"))
            if tok.head == 0:
                roots.append(tok.index)
        if sorted(by_index) != list(range(1, n + 1)):
            raise StructureError(self._msg("token indices are not 1..n"))
        if len(roots) != 1:
            raise StructureError(self._msg(f"expected exactly one root, found {len(roots)}"))
        for tok in self.tokens:
            if tok.head != 0 and tok.head not in by_index:
                raise StructureError(self._msg(f"token {tok.index} has out-of-range head {tok.head}"))
        # every token must reach the root (rules out cycles)
        for tok in self.tokens:
            seen = set()
            cur = tok
            while cur.head != 0:
                if cur.index in seen:
                    raise StructureError(self._msg(f"cycle through token {tok.index}"))
                seen.add(cur.index)
                cur = by_index[cur.head]
        covered: set[int] = set()
        for m in self.mentions:
            if not (1 <= m.start <= m.end <= n):
                raise StructureError(self._msg(f"mention span {m.start}..{m.end} out of bounds"))
            span = set(range(m.start, m.end + 1))
            if span & covered:
                raise StructureError(self._msg(f"overlapping mention at {m.start}..{m.end}"))
            covered |= span
            joined = " ".join(by_index[i].form for i in range(m.start, m.end + 1))
            if joined != m.surface:
                raise StructureError(self._msg(
                    f"mention surface {m.surface!r} != span forms {joined!r}"))

    def _msg(self, what: str) -> str:
        return f"{self.doc_id}: {what}" if self.doc_id else what

    def root_index(self) -> int:
        for tok in self.tokens:
            if tok.head == 0:
                return tok.index
        raise StructureError(self._msg("no root token"))

    def text(self) -> str:
        return " ".join(tok.form for tok in self.tokens)


@dataclass(frozen=True)
class WordItem:
    form: str


@dataclass(frozen=True)
class SlotItem:
    slot_type: SlotType


@dataclass
class Template:
    """An ordered mix of literal words and typed slot placeholders."""
    items: list[Union[WordItem, SlotItem]]
    doc_id: str = ""

    def text(self) -> str:
        """Space-joined token rendering; slots appear as <TypeName>."""
        parts = []
        for item in self.items:
            if isinstance(item, SlotItem):
                parts.append(f"<{slot_type_name(item.slot_type)}>")
            else:
                parts.append(item.form)
        return " ".join(parts)

    def slot_positions(self) -> list[int]:
        return [i for i, item in enumerate(self.items) if isinstance(item, SlotItem)]


def strip_parentheses(text: str) -> str:
    """Remove `( ... )` spans; nested parentheses count as one span from
    the outermost open to its matching close. An open parenthesis that
    never closes stays in the text verbatim."""
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth = 0
            j = i
            close = -1
            while j < len(text):
                if text[j] == "(":
                    depth += 1
                elif text[j] == ")":
                    depth -= 1
                    if depth == 0:
                        close = j
                        break
                j += 1
            if close >= 0:
                i = close + 1
                continue
        out.append(ch)
        i += 1
    return re.sub(r"\s+", " ", "".join(out)).strip()


def preprocess(raw: str, min_tokens: int = MIN_CAPTION_TOKENS) -> Optional[str]:
    """Clean a raw caption; returns None when the caption is rejected.

    Parenthesized spans go first. If several sentences remain, the one
    with the most whitespace tokens is kept (first wins on ties). The
    survivor is dropped when it has fewer than `min_tokens` tokens.
    """
    cleaned = strip_parentheses(raw)
    sentences = [s for s in _SENT_SPLIT.split(cleaned) if s.strip()]
    if not sentences:
        return None
    best = max(sentences, key=lambda s: len(s.split()))
    if len(best.split()) < min_tokens:
        return None
    return best.strip()


def compress(parse: ParsedCaption,
             whitelist: Iterable[str] = DEFAULT_RELATION_WHITELIST) -> ParsedCaption:
    """Prune the parse to whitelisted relations reachable from the root.

    Breadth-first from the root: a dependent survives iff its relation is
    whitelisted (case-insensitive) and its governor survived; the root
    always survives. Surviving tokens keep surface order and are
    re-numbered; heads re-target the nearest kept ancestor. Mentions not
    fully covered by survivors are dropped.
    """
    parse.validate()
    allowed = {rel.casefold() for rel in whitelist}
    by_index = {tok.index: tok for tok in parse.tokens}
    children: dict[int, list[int]] = {tok.index: [] for tok in parse.tokens}
    for tok in parse.tokens:
        if tok.head != 0:
            children[tok.head].append(tok.index)

    root = parse.root_index()
    kept = {root}
    queue = deque([root])
    while queue:
        governor = queue.popleft()
        for dep in children[governor]:
            if by_index[dep].deprel.casefold() in allowed:
                kept.add(dep)
                queue.append(dep)

    survivors = sorted(kept)
    renumber = {old: new for new, old in enumerate(survivors, start=1)}

    def kept_ancestor(index: int) -> int:
        cur = by_index[index].head
        while cur != 0 and cur not in kept:
            cur = by_index[cur].head
        return cur

    new_tokens = []
    for old in survivors:
        tok = by_index[old]
        head = kept_ancestor(old)
        new_tokens.append(Token(index=renumber[old],
                                form=tok.form,
                                head=renumber[head] if head else 0,
                                deprel=tok.deprel))

    new_mentions = []
    for m in parse.mentions:
        span = range(m.start, m.end + 1)
        if all(i in kept for i in span):
            new_mentions.append(replace(m, start=renumber[m.start], end=renumber[m.end]))

    return ParsedCaption(tokens=new_tokens, mentions=new_mentions, doc_id=parse.doc_id)


def generalize(parse: ParsedCaption, ts: TypeSystem) -> Template:
    """Replace each mention span with one typed slot; keep other tokens."""
    slot_at = {}
    in_mention = set()
    for m in parse.mentions:
        slot_at[m.start] = SlotItem(resolve_slot_type(m.surface, m.coarse, ts))
        in_mention.update(range(m.start, m.end + 1))
    items: list[Union[WordItem, SlotItem]] = []
    for tok in parse.tokens:
        if tok.index in slot_at:
            items.append(slot_at[tok.index])
        elif tok.index not in in_mention:
            items.append(WordItem(tok.form))
    return Template(items=items, doc_id=parse.doc_id)


@dataclass
class TemplatizeResult:
    templates: list[Template]
    skipped: int
    total: int


def build_pairs(corpus: Iterable[tuple[str, ParsedCaption]],
                ts: TypeSystem,
                whitelist: Iterable[str] = DEFAULT_RELATION_WHITELIST,
                min_tokens: int = MIN_CAPTION_TOKENS) -> TemplatizeResult:
    """Run preprocess -> compress -> generalize over (raw caption, parse)
    records. Parses are expected to be of the preprocessed captions;
    records whose caption is rejected by preprocess are skipped and
    counted. Structural errors carry the record's doc_id."""
    templates = []
    skipped = 0
    total = 0
    for raw, parse in corpus:
        total += 1
        if preprocess(raw, min_tokens=min_tokens) is None:
            skipped += 1
            continue
        templates.append(generalize(compress(parse, whitelist), ts))
    return TemplatizeResult(templates=templates, skipped=skipped, total=total)
