"""Command-line interface: the pipeline as composable subcommands.

Every stage reads and writes JSONL (or JSON) artifacts so stages can be
run separately, inspected, or fed hand-crafted fixtures. Exit codes:
0 success, 1 operational failure, 2 input-format failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from . import io
from .candidates import (ContextQuery, PostIndex, cooccurrence, extract_candidates,
                         retrieve_context)
from .collective import (OMEGA_TIE_TOLERANCE, solve, solve_beam, solve_bruteforce,
                         template_slots)
from .config import PipelineConfig, apply_setting, load_config
from .errors import (CapacityError, CapfillError, ParseError, SchemaError,
                     StructureError)
from .metrics import EvalPair, evaluate
from .realize import ImageMeta, append_date, fill
from .templatize import Template, compress, generalize, preprocess
from .typesys import TypeSystem, load_type_system

EXIT_OK = 0
EXIT_OPERATIONAL = 1
EXIT_FORMAT = 2


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


# ------------------------------------------------------------- templatize

def _templatize_one(payload):
    raw, parse, ts, whitelist, min_tokens = payload
    if preprocess(raw, min_tokens=min_tokens) is None:
        return None
    return io.template_to_dict(generalize(compress(parse, whitelist), ts))


def run_templatize(captions_path, conllu_path, mentions_path, type_map_path,
                   out_path, config: PipelineConfig) -> tuple[int, int, int]:
    """Returns (input, skipped, emitted) counts."""
    ts = load_type_system(type_map_path)
    captions = io.read_captions(captions_path)
    parses = {p.doc_id: p for p in io.read_conllu(conllu_path)}
    mentions = io.read_mentions(mentions_path) if mentions_path else {}
    for doc_id, doc_mentions in mentions.items():
        if doc_id in parses:
            parses[doc_id].mentions = doc_mentions

    payloads = []
    skipped = 0
    for doc_id, raw in sorted(captions):
        if preprocess(raw, min_tokens=config.min_caption_tokens) is None:
            skipped += 1
            continue
        parse = parses.get(doc_id)
        if parse is None:
            raise ParseError(f"no parse for doc_id {doc_id!r}", path=conllu_path)
        payloads.append((raw, parse, ts, config.relation_whitelist,
                         config.min_caption_tokens))

    records = [r for r in _map_jobs(_templatize_one, payloads, config.jobs)
               if r is not None]
    io.write_jsonl(out_path, records)
    return (len(captions), skipped, len(records))


# ------------------------------------------------------------- candidates

def _context_for(query: io.QueryMeta, index: PostIndex, config: PipelineConfig):
    ctx_query = ContextQuery.make(query.tags, query.taken_date, id=query.doc_id)
    return retrieve_context(ctx_query, index,
                            window_days=config.window_days,
                            tag_freq_cap=config.tag_freq_cap)


def run_candidates(queries_path, posts_path, type_map_path, out_path,
                   config: PipelineConfig) -> int:
    ts = load_type_system(type_map_path)
    index = PostIndex(io.read_posts(posts_path, ts))
    queries = io.read_queries(queries_path)
    records = []
    for doc_id in sorted(queries):
        context = _context_for(queries[doc_id], index, config)
        pool = extract_candidates(context, ts, top_k=config.top_k)
        stats = cooccurrence(context)
        records.append({"doc_id": doc_id,
                        "context_posts": [p.id for p in context],
                        "pool": io.pool_to_dict(pool),
                        "stats": io.stats_to_dict(stats)})
    io.write_jsonl(out_path, records)
    return len(records)


# ------------------------------------------------------------------- fill

def _fill_one(payload):
    template, query, index, ts, config = payload
    context = _context_for(query, index, config)
    pool = extract_candidates(context, ts, top_k=config.top_k)
    stats = cooccurrence(context)
    slots = template_slots(template)
    if config.beam_width is None:
        assignment = solve(slots, pool, stats, allow_duplicates=config.allow_duplicates)
    else:
        assignment = solve_beam(slots, pool, stats, beam_width=config.beam_width,
                                allow_duplicates=config.allow_duplicates)
    caption = append_date(fill(template, assignment), ImageMeta(exif_date=query.exif_date))
    entities = [assignment.chosen[ref].name for ref in sorted(assignment.chosen)]
    return {
        "doc_id": template.doc_id,
        "caption": caption,
        "omega": assignment.score,
        "ties": assignment.ties,
        "unfillable": [{"position": ref.position, "slot_type": ref.slot_type}
                       for ref in sorted(assignment.unfillable)],
        "entities": entities,
    }


def run_fill(templates_path, queries_path, posts_path, type_map_path, out_path,
             config: PipelineConfig) -> int:
    ts = load_type_system(type_map_path)
    templates = io.read_templates(templates_path, ts)
    queries = io.read_queries(queries_path)
    index = PostIndex(io.read_posts(posts_path, ts))

    payloads = []
    for template in sorted(templates, key=lambda t: t.doc_id):
        query = queries.get(template.doc_id)
        if query is None:
            _warn(f"no query metadata for doc_id {template.doc_id!r}; skipped")
            continue
        payloads.append((template, query, index, ts, config))

    records = list(_map_jobs(_fill_one, payloads, config.jobs))
    io.write_jsonl(out_path, records)
    return len(records)


# ------------------------------------------------------------------- eval

def _tokenize(caption: str) -> list[str]:
    return caption.lower().split()


def run_eval(captions_path, references_path, out_path,
             config: PipelineConfig) -> dict:
    generated = io.read_generated_captions(captions_path)
    references = io.read_references(references_path)
    pairs = []
    matched_ids = set()
    for record in sorted(generated, key=lambda r: r["doc_id"]):
        ref = references.get(record["doc_id"])
        if ref is None:
            _warn(f"no references for doc_id {record['doc_id']!r}; excluded")
            continue
        matched_ids.add(record["doc_id"])
        pairs.append(EvalPair(
            doc_id=record["doc_id"],
            candidate=_tokenize(record["caption"]),
            references=[_tokenize(c) for c in ref["captions"]],
            cand_entities=record["entities"],
            ref_entities=ref["entities"]))
    for doc_id in sorted(set(references) - matched_ids):
        _warn(f"no generated caption for doc_id {doc_id!r}; excluded")
    if not pairs:
        raise CapfillError("no matched doc_ids between captions and references")
    report = evaluate(pairs, jaccard_threshold=config.fuzzy_threshold)
    with open(out_path, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, sort_keys=True, indent=2, ensure_ascii=False)
        handle.write("\n")
    return report.to_dict()


# ----------------------------------------------------------- oracle-check

def run_oracle_check(instance_path) -> bool:
    slots, pool, stats, allow_duplicates = io.read_instance(instance_path)
    fast = solve(slots, pool, stats, allow_duplicates=allow_duplicates)
    naive = solve_bruteforce(slots, pool, stats, allow_duplicates=allow_duplicates)
    same_choice = ({ref: c.name for ref, c in fast.chosen.items()} ==
                   {ref: c.name for ref, c in naive.chosen.items()})
    same_score = abs(fast.score - naive.score) <= OMEGA_TIE_TOLERANCE
    return same_choice and same_score


# ------------------------------------------------------------ infrastructure

def _map_jobs(func, payloads, jobs: int):
    if jobs <= 1 or len(payloads) <= 1:
        return [func(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, payloads))


_OVERRIDE_KEYS = ["window_days", "tag_freq_cap", "top_k", "relation_whitelist",
                  "allow_duplicates", "beam_width", "min_caption_tokens",
                  "fuzzy_threshold", "jobs"]


def _resolve_config(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    for key in _OVERRIDE_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            apply_setting(config, key, str(value))
    config.validate()
    return config


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--jobs", type=int, default=None,
                        help="per-document worker processes")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed forwarded to randomized test tooling; unused here")


def _add_fill_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window-days", dest="window_days", type=int, default=None)
    parser.add_argument("--tag-freq-cap", dest="tag_freq_cap", type=int, default=None)
    parser.add_argument("--top-k", dest="top_k", type=int, default=None)
    parser.add_argument("--beam-width", dest="beam_width", type=int, default=None)
    duplicates = parser.add_mutually_exclusive_group()
    duplicates.add_argument("--allow-duplicates", dest="allow_duplicates",
                            action="store_const", const="true", default=None)
    duplicates.add_argument("--no-duplicates", dest="allow_duplicates",
                            action="store_const", const="false")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="capfill",
        description="Slot templates from captions, co-occurrence slot filling, "
                    "and caption evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("templatize", help="captions + parses -> slot templates")
    p.add_argument("--captions", required=True)
    p.add_argument("--parses", required=True)
    p.add_argument("--mentions")
    p.add_argument("--type-map", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-caption-tokens", dest="min_caption_tokens",
                   type=int, default=None)
    p.add_argument("--relation-whitelist", dest="relation_whitelist", default=None,
                   help="space- or comma-separated relation labels")
    _add_common(p)

    p = sub.add_parser("candidates", help="mine candidate pools and statistics")
    p.add_argument("--queries", required=True)
    p.add_argument("--posts", required=True)
    p.add_argument("--type-map", required=True)
    p.add_argument("--out", required=True)
    _add_fill_flags(p)
    _add_common(p)

    p = sub.add_parser("fill", help="fill template slots from the post corpus")
    p.add_argument("--templates", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--posts", required=True)
    p.add_argument("--type-map", required=True)
    p.add_argument("--out", required=True)
    _add_fill_flags(p)
    _add_common(p)

    p = sub.add_parser("eval", help="score generated captions against references")
    p.add_argument("--captions", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fuzzy-threshold", dest="fuzzy_threshold", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("pipeline", help="templatize, fill, and eval in one run")
    p.add_argument("--captions", required=True)
    p.add_argument("--parses", required=True)
    p.add_argument("--mentions")
    p.add_argument("--queries", required=True)
    p.add_argument("--posts", required=True)
    p.add_argument("--type-map", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--templates-out", required=True)
    p.add_argument("--captions-out", required=True)
    p.add_argument("--report-out", required=True)
    p.add_argument("--min-caption-tokens", dest="min_caption_tokens",
                   type=int, default=None)
    p.add_argument("--relation-whitelist", dest="relation_whitelist", default=None)
    p.add_argument("--fuzzy-threshold", dest="fuzzy_threshold", type=float, default=None)
    _add_fill_flags(p)
    _add_common(p)

    p = sub.add_parser("oracle-check",
                       help="cross-check the solver against naive enumeration")
    p.add_argument("--instance", required=True, nargs="+")
    _add_common(p)

    return parser


def cmd_templatize(args) -> int:
    config = _resolve_config(args)
    total, skipped, emitted = run_templatize(
        args.captions, args.parses, args.mentions, args.type_map, args.out, config)
    print(f"input={total} skipped={skipped} emitted={emitted}")
    return EXIT_OK


def cmd_candidates(args) -> int:
    config = _resolve_config(args)
    n = run_candidates(args.queries, args.posts, args.type_map, args.out, config)
    print(f"queries={n}")
    return EXIT_OK


def cmd_fill(args) -> int:
    config = _resolve_config(args)
    n = run_fill(args.templates, args.queries, args.posts, args.type_map,
                 args.out, config)
    print(f"filled={n}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _resolve_config(args)
    report = run_eval(args.captions, args.references, args.out, config)
    print(f"evaluated={report['n']}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = _resolve_config(args)
    total, skipped, emitted = run_templatize(
        args.captions, args.parses, args.mentions, args.type_map,
        args.templates_out, config)
    print(f"input={total} skipped={skipped} emitted={emitted}")
    filled = run_fill(args.templates_out, args.queries, args.posts, args.type_map,
                      args.captions_out, config)
    print(f"filled={filled}")
    report = run_eval(args.captions_out, args.references, args.report_out, config)
    print(f"evaluated={report['n']}")
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    status = EXIT_OK
    for path in args.instance:
        if run_oracle_check(path):
            print(f"{path}: OK")
        else:
            print(f"{path}: MISMATCH")
            status = EXIT_OPERATIONAL
    return status


_COMMANDS = {
    "templatize": cmd_templatize,
    "candidates": cmd_candidates,
    "fill": cmd_fill,
    "eval": cmd_eval,
    "pipeline": cmd_pipeline,
    "oracle-check": cmd_oracle_check,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, SchemaError, StructureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: file not found", file=sys.stderr)
        return EXIT_FORMAT
    except CapacityError as exc:
        print(f"error: {exc} (set --beam-width to enable beam search)", file=sys.stderr)
        return EXIT_OPERATIONAL
    except CapfillError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OPERATIONAL


if __name__ == "__main__":
    sys.exit(main())
