"""File formats: CoNLL-U parses and the JSONL artifacts between stages.

Every pipeline stage reads and writes line-oriented formats so any stage
can be inspected or replaced with hand-crafted fixtures. Writers sort
object keys and emit one JSON object per line; readers raise ParseError
with file and line on malformed input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Optional

from .candidates import CandidateEntity, CandidatePool, CooccurrenceStats, Post
from .collective import SlotRef
from .errors import ParseError, SchemaError
from .templatize import EntityMention, ParsedCaption, SlotItem, Template, Token, WordItem
from .typesys import CoarseType, TypeSystem, normalize_name, slot_type_name


def _json_lines(path):
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON ({exc.msg})", path=path, line=lineno) from None


def _need(obj: dict, key: str, path, lineno) -> object:
    if key not in obj:
        raise ParseError(f"missing field {key!r}", path=path, line=lineno)
    return obj[key]


def _parse_date(text: str, path=None, lineno=None) -> date:
    try:
        return date.fromisoformat(text)
    except (TypeError, ValueError):
        raise ParseError(f"bad date {text!r} (expected YYYY-MM-DD)",
                         path=path, line=lineno) from None


def write_jsonl(path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------- CoNLL-U

def read_conllu(path) -> list[ParsedCaption]:
    """Read dependency parses from a 10-column CoNLL-U file.

    Only ID, FORM, HEAD and DEPREL are used; multiword-token and empty
    node lines are skipped. A `# doc_id = X` comment names the sentence;
    otherwise the 0-based sentence position is used.
    """
    parses: list[ParsedCaption] = []
    tokens: list[Token] = []
    doc_id: Optional[str] = None

    def flush(lineno):
        nonlocal tokens, doc_id
        if tokens:
            parses.append(ParsedCaption(
                tokens=tokens,
                doc_id=doc_id if doc_id is not None else str(len(parses))))
        elif doc_id is not None:
            raise ParseError("doc_id comment without token lines", path=path, line=lineno)
        tokens = []
        doc_id = None

    with open(path, encoding="utf-8") as handle:
        lineno = 0
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                flush(lineno)
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("doc_id"):
                    _, _, value = body.partition("=")
                    doc_id = value.strip()
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise ParseError(f"expected 10 tab-separated columns, got {len(cols)}",
                                 path=path, line=lineno)
            if "-" in cols[0] or "." in cols[0]:
                continue    # multiword token ranges and empty nodes
            try:
                index = int(cols[0])
                head = int(cols[6])
            except ValueError:
                raise ParseError(f"non-integer ID or HEAD in {cols[0]!r}/{cols[6]!r}",
                                 path=path, line=lineno) from None
            tokens.append(Token(index=index, form=cols[1], head=head, deprel=cols[7]))
        flush(lineno + 1)
    return parses


def read_mentions(path) -> dict[str, list[EntityMention]]:
    """Mention sidecar: one JSON object per mention with doc_id, start,
    end (1-based, inclusive), surface, and coarse."""
    by_doc: dict[str, list[EntityMention]] = {}
    for lineno, obj in _json_lines(path):
        doc_id = str(_need(obj, "doc_id", path, lineno))
        try:
            coarse = CoarseType.parse(str(_need(obj, "coarse", path, lineno)))
        except SchemaError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from None
        mention = EntityMention(
            start=int(_need(obj, "start", path, lineno)),
            end=int(_need(obj, "end", path, lineno)),
            surface=str(_need(obj, "surface", path, lineno)),
            coarse=coarse)
        by_doc.setdefault(doc_id, []).append(mention)
    return by_doc


def read_captions(path) -> list[tuple[str, str]]:
    """Raw captions: JSONL objects {doc_id, caption}."""
    out = []
    for lineno, obj in _json_lines(path):
        out.append((str(_need(obj, "doc_id", path, lineno)),
                    str(_need(obj, "caption", path, lineno))))
    return out


# --------------------------------------------------------------- templates

def template_to_dict(template: Template) -> dict:
    items = []
    for item in template.items:
        if isinstance(item, SlotItem):
            items.append({"slot": slot_type_name(item.slot_type)})
        else:
            items.append({"w": item.form})
    return {"doc_id": template.doc_id, "items": items}


def _slot_type_from_name(name: str, ts: TypeSystem):
    for coarse in CoarseType:
        if coarse.value == name:
            return coarse
    fine = ts.fine_by_name(name)
    if fine is None:
        raise SchemaError(f"slot type {name!r} is neither coarse nor in the type system")
    return fine


def read_templates(path, ts: TypeSystem) -> list[Template]:
    templates = []
    for lineno, obj in _json_lines(path):
        doc_id = str(_need(obj, "doc_id", path, lineno))
        items = []
        for entry in _need(obj, "items", path, lineno):
            if "w" in entry:
                items.append(WordItem(str(entry["w"])))
            elif "slot" in entry:
                try:
                    items.append(SlotItem(_slot_type_from_name(str(entry["slot"]), ts)))
                except SchemaError as exc:
                    raise ParseError(str(exc), path=path, line=lineno) from None
            else:
                raise ParseError(f"template item needs 'w' or 'slot': {entry!r}",
                                 path=path, line=lineno)
        if not items:
            raise ParseError("template has no items", path=path, line=lineno)
        templates.append(Template(items=items, doc_id=doc_id))
    return templates


# ------------------------------------------------------------------- posts

def read_posts(path, ts: Optional[TypeSystem] = None) -> list[Post]:
    """Post corpus: JSONL {id, tags, taken_date, text, mentions?}.

    Posts without a mentions field fall back to gazetteer matching when a
    type system is supplied, else to no mentions.
    """
    from .candidates import gazetteer_match

    posts = []
    for lineno, obj in _json_lines(path):
        text = str(obj.get("text", ""))
        if "mentions" in obj:
            mentions = []
            for entry in obj["mentions"]:
                try:
                    coarse = CoarseType.parse(str(_need(entry, "coarse", path, lineno)))
                except SchemaError as exc:
                    raise ParseError(str(exc), path=path, line=lineno) from None
                mentions.append((str(_need(entry, "surface", path, lineno)), coarse))
        elif ts is not None:
            mentions = gazetteer_match(text, ts)
        else:
            mentions = []
        posts.append(Post(
            id=str(_need(obj, "id", path, lineno)),
            tags=set(_need(obj, "tags", path, lineno)),
            taken_date=_parse_date(_need(obj, "taken_date", path, lineno), path, lineno),
            text=text,
            mentions=mentions))
    seen = set()
    for post in posts:
        if post.id in seen:
            raise ParseError(f"duplicate post id {post.id!r}", path=path)
        seen.add(post.id)
    return posts


# ----------------------------------------------------------------- queries

@dataclass
class QueryMeta:
    doc_id: str
    tags: list[str]
    taken_date: date
    exif_date: Optional[date] = None


def read_queries(path) -> dict[str, QueryMeta]:
    """Per-image query metadata: JSONL {doc_id, tags, taken_date, exif_date?}."""
    queries = {}
    for lineno, obj in _json_lines(path):
        doc_id = str(_need(obj, "doc_id", path, lineno))
        exif = obj.get("exif_date")
        queries[doc_id] = QueryMeta(
            doc_id=doc_id,
            tags=[str(t) for t in _need(obj, "tags", path, lineno)],
            taken_date=_parse_date(_need(obj, "taken_date", path, lineno), path, lineno),
            exif_date=_parse_date(exif, path, lineno) if exif is not None else None)
    return queries


# ------------------------------------------------------- pools and stats

def pool_to_dict(pool: CandidatePool) -> dict:
    return {slot_type: [{"name": c.name, "slot_type": c.slot_type, "freq": c.freq}
                        for c in cands]
            for slot_type, cands in sorted(pool.per_type.items())}


def pool_from_dict(obj: dict) -> CandidatePool:
    pool = CandidatePool()
    for slot_type, entries in obj.items():
        pool.per_type[slot_type] = [
            CandidateEntity(name=str(e["name"]),
                            slot_type=str(e.get("slot_type", slot_type)),
                            freq=int(e["freq"]))
            for e in entries]
    return pool


def stats_to_dict(stats: CooccurrenceStats) -> dict:
    return {
        "unary": dict(sorted(stats.unary.items())),
        "pairs": [[a, b, count] for (a, b), count in sorted(stats.pairs.items())],
    }


def stats_from_dict(obj: dict) -> CooccurrenceStats:
    stats = CooccurrenceStats()
    for name, count in obj.get("unary", {}).items():
        stats.unary[normalize_name(str(name))] = int(count)
    for a, b, count in obj.get("pairs", []):
        ka, kb = normalize_name(str(a)), normalize_name(str(b))
        stats.pairs[(min(ka, kb), max(ka, kb))] = int(count)
    return stats


def read_instance(path) -> tuple[list[SlotRef], CandidatePool, CooccurrenceStats, bool]:
    """Solver instance: JSON {slots, pool, stats, allow_duplicates?}."""
    with open(path, encoding="utf-8") as handle:
        try:
            obj = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON ({exc.msg})", path=path) from None
    try:
        slots = [SlotRef(position=int(s["position"]), slot_type=str(s["slot_type"]))
                 for s in obj["slots"]]
        pool = pool_from_dict(obj["pool"])
        stats = stats_from_dict(obj["stats"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad instance: {exc}", path=path) from None
    return slots, pool, stats, bool(obj.get("allow_duplicates", True))


# ---------------------------------------------------------------- captions

def read_generated_captions(path) -> list[dict]:
    """Captions as written by the fill stage: {doc_id, caption, omega,
    unfillable, entities}."""
    out = []
    for lineno, obj in _json_lines(path):
        out.append({
            "doc_id": str(_need(obj, "doc_id", path, lineno)),
            "caption": str(_need(obj, "caption", path, lineno)),
            "entities": [str(e) for e in obj.get("entities", [])],
        })
    return out


def read_references(path) -> dict[str, dict]:
    """References: JSONL {doc_id, captions: [...], entities?: [...]}."""
    refs = {}
    for lineno, obj in _json_lines(path):
        doc_id = str(_need(obj, "doc_id", path, lineno))
        captions = [str(c) for c in _need(obj, "captions", path, lineno)]
        if not captions:
            raise ParseError("empty reference caption list", path=path, line=lineno)
        refs[doc_id] = {
            "captions": captions,
            "entities": [str(e) for e in obj.get("entities", [])],
        }
    return refs
