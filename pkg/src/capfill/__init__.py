"""capfill: slot templates from news captions, co-occurrence-based entity
slot filling over a tag-indexed post corpus, and caption evaluation."""

from .candidates import (CandidateEntity, CandidatePool, ContextQuery,
                         CooccurrenceStats, Post, PostIndex, cooccurrence,
                         extract_candidates, gazetteer_match, retrieve_context)
from .collective import (Assignment, CombinationGraph, SlotRef, edge_weight,
                         score_graph, solve, solve_beam, solve_bruteforce,
                         template_slots)
from .config import PipelineConfig, load_config
from .metrics import (EvalPair, EvalReport, bleu, cider, entity_f1, evaluate,
                      rouge_l)
from .realize import ImageMeta, append_date, detokenize, fill
from .templatize import (DEFAULT_RELATION_WHITELIST, EntityMention, ParsedCaption,
                         SlotItem, Template, Token, WordItem, build_pairs,
                         compress, generalize, preprocess)
from .typesys import (CoarseType, FineType, SlotType, TypeSystem,
                      load_type_system, normalize_name, resolve_slot_type,
                      slot_type_name)

__version__ = "0.1.0"
