"""Collective slot filling over candidate combination graphs.

Every way of drawing one candidate per slot forms a complete graph whose
edges are weighted by pairwise co-occurrence; the assignment with the
largest summed edge weight wins. `solve` enumerates exhaustively with
precomputed edge tables, `solve_bruteforce` is a deliberately naive
re-implementation kept free of shared scoring code so the two can check
each other, and `solve_beam` trades optimality for scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from .candidates import CandidateEntity, CandidatePool, CooccurrenceStats
from .errors import CapacityError, DomainError
from .templatize import SlotItem, Template
from .typesys import slot_type_name

# assignments whose scores differ by no more than this are co-optimal
OMEGA_TIE_TOLERANCE = 1e-9

DEFAULT_MAX_SLOTS = 8


@dataclass(frozen=True, order=True)
class SlotRef:
    position: int       # item index of the SlotItem within its Template
    slot_type: str


@dataclass
class CombinationGraph:
    assignment: dict[SlotRef, CandidateEntity]
    edge_weights: dict[tuple[SlotRef, SlotRef], float]
    total: float


@dataclass
class Assignment:
    chosen: dict[SlotRef, CandidateEntity]
    score: float
    ties: int
    unfillable: list[SlotRef] = field(default_factory=list)


def template_slots(template: Template) -> list[SlotRef]:
    """SlotRefs for a template's slot items, in template order."""
    return [SlotRef(position=i, slot_type=slot_type_name(item.slot_type))
            for i, item in enumerate(template.items) if isinstance(item, SlotItem)]


def edge_weight(f_ht: int, f_h: int, f_t: int) -> float:
    """Pair weight: co-occurrence count over the larger single count.

    Symmetric in the two single counts and always in [0, 1]. Counts
    outside the valid domain signal corrupted statistics.
    """
    if f_h < 1 or f_t < 1:
        raise DomainError(f"single counts must be >= 1, got f_h={f_h}, f_t={f_t}")
    if not 0 <= f_ht <= min(f_h, f_t):
        raise DomainError(
            f"pair count {f_ht} outside [0, min({f_h}, {f_t})]")
    return f_ht / max(f_h, f_t)


def score_graph(assignment: dict[SlotRef, CandidateEntity],
                stats: CooccurrenceStats) -> CombinationGraph:
    """Build and score the complete graph over an assignment's slots.

    Missing pair statistics count as zero co-occurrence; a candidate
    missing from the unary statistics is a domain error.
    """
    slots = sorted(assignment)
    unary = {}
    for slot in slots:
        name = assignment[slot].name
        count = stats.unary_count(name)
        if count is None:
            raise DomainError(f"candidate {name!r} has no unary statistic")
        unary[slot] = count
    edges = {}
    total = 0.0
    for a, b in itertools.combinations(slots, 2):
        weight = edge_weight(
            stats.pair_count(assignment[a].name, assignment[b].name),
            unary[a], unary[b])
        edges[(a, b)] = weight
        total += weight
    return CombinationGraph(assignment=dict(assignment), edge_weights=edges, total=total)


def _split_fillable(slots, pool: CandidatePool):
    fillable, unfillable = [], []
    for slot in slots:
        if pool.for_type(slot.slot_type):
            fillable.append(slot)
        else:
            unfillable.append(slot)
    return fillable, unfillable


def _tiebreak_key(slots, combo):
    """Preference among co-optimal combos: larger summed candidate
    frequency first, then lexicographically smaller candidate names in
    slot-position order."""
    freq_sum = sum(c.freq for c in combo)
    names = tuple(c.name for _, c in sorted(zip(slots, combo), key=lambda x: x[0]))
    return (-freq_sum, names)


def solve(slots: list[SlotRef],
          pool: CandidatePool,
          stats: CooccurrenceStats,
          allow_duplicates: bool = True,
          max_slots: int = DEFAULT_MAX_SLOTS) -> Assignment:
    """Exhaustive argmax over all candidate combinations.

    Slots whose type has an empty pool are reported unfillable and drop
    out of the product and the graph. With allow_duplicates off,
    combinations repeating a candidate name across slots are skipped.
    More fillable slots than `max_slots` is a capacity error; use
    solve_beam beyond that.
    """
    fillable, unfillable = _split_fillable(slots, pool)
    if len(fillable) > max_slots:
        raise CapacityError(
            f"{len(fillable)} fillable slots exceed the exhaustive limit of "
            f"{max_slots}; use the beam solver")

    cands = [pool.for_type(slot.slot_type) for slot in fillable]
    k = len(fillable)

    # one weight table per slot pair, indexed by candidate positions
    unary = [[_require_unary(stats, c.name) for c in lst] for lst in cands]
    table = {}
    for i, j in itertools.combinations(range(k), 2):
        table[(i, j)] = [
            [edge_weight(stats.pair_count(a.name, b.name), unary[i][ia], unary[j][jb])
             for jb, b in enumerate(cands[j])]
            for ia, a in enumerate(cands[i])]

    best_combo = None
    best_score = 0.0
    best_key = None
    ties = 0
    for picks in itertools.product(*(range(len(lst)) for lst in cands)):
        combo = tuple(cands[i][p] for i, p in enumerate(picks))
        if not allow_duplicates and len({c.name for c in combo}) != len(combo):
            continue
        score = 0.0
        for i, j in itertools.combinations(range(k), 2):
            score += table[(i, j)][picks[i]][picks[j]]
        if best_combo is None or score > best_score + OMEGA_TIE_TOLERANCE:
            best_combo, best_score, ties = combo, score, 1
            best_key = _tiebreak_key(fillable, combo)
        elif abs(score - best_score) <= OMEGA_TIE_TOLERANCE:
            ties += 1
            best_score = max(best_score, score)
            key = _tiebreak_key(fillable, combo)
            if key < best_key:
                best_combo, best_key = combo, key

    if best_combo is None:
        return Assignment(chosen={}, score=0.0, ties=1 if not fillable else 0,
                          unfillable=unfillable)
    return Assignment(chosen=dict(zip(fillable, best_combo)), score=best_score,
                      ties=ties, unfillable=unfillable)


def _require_unary(stats: CooccurrenceStats, name: str) -> int:
    count = stats.unary_count(name)
    if count is None:
        raise DomainError(f"candidate {name!r} has no unary statistic")
    return count


def solve_bruteforce(slots: list[SlotRef],
                     pool: CandidatePool,
                     stats: CooccurrenceStats,
                     allow_duplicates: bool = True) -> Assignment:
    """Naive enumeration oracle for `solve`.

    Recomputes every combination's score from the raw statistics with
    inline arithmetic (no edge_weight/score_graph calls) so a bug in the
    production scoring path cannot hide here too.
    """
    fillable, unfillable = _split_fillable(slots, pool)
    combos = []
    for combo in itertools.product(*(pool.for_type(s.slot_type) for s in fillable)):
        if not allow_duplicates and len({c.name for c in combo}) != len(combo):
            continue
        score = 0.0
        for a, b in itertools.combinations(combo, 2):
            fa = _require_unary(stats, a.name)
            fb = _require_unary(stats, b.name)
            together = stats.pair_count(a.name, b.name)
            if together < 0 or together > min(fa, fb):
                raise DomainError(f"pair count {together} outside [0, min({fa}, {fb})]")
            score += together / (fa if fa > fb else fb)
        combos.append((score, combo))

    if not combos:
        return Assignment(chosen={}, score=0.0, ties=1 if not fillable else 0,
                          unfillable=unfillable)
    top = max(score for score, _ in combos)
    optimal = [combo for score, combo in combos if abs(score - top) <= OMEGA_TIE_TOLERANCE]
    winner = min(optimal, key=lambda combo: (-sum(c.freq for c in combo),
                                             tuple(c.name for _, c in sorted(zip(fillable, combo),
                                                                             key=lambda x: x[0]))))
    return Assignment(chosen=dict(zip(fillable, winner)), score=top,
                      ties=len(optimal), unfillable=unfillable)


def solve_beam(slots: list[SlotRef],
               pool: CandidatePool,
               stats: CooccurrenceStats,
               beam_width: int,
               allow_duplicates: bool = True) -> Assignment:
    """Beam search over slots in input order, keeping the best
    `beam_width` partial assignments by partial score. The result's score
    never exceeds the exhaustive optimum; a beam at least as wide as the
    full product reproduces it exactly."""
    if beam_width < 1:
        raise DomainError(f"beam_width must be >= 1, got {beam_width}")
    fillable, unfillable = _split_fillable(slots, pool)

    beam: list[tuple[float, tuple[CandidateEntity, ...]]] = [(0.0, ())]
    for depth, slot in enumerate(fillable):
        grown = []
        for score, partial in beam:
            for cand in pool.for_type(slot.slot_type):
                if not allow_duplicates and any(c.name == cand.name for c in partial):
                    continue
                gain = 0.0
                f_new = _require_unary(stats, cand.name)
                for prev_slot, prev in zip(fillable[:depth], partial):
                    gain += edge_weight(stats.pair_count(prev.name, cand.name),
                                        _require_unary(stats, prev.name), f_new)
                grown.append((score + gain, partial + (cand,)))
        grown.sort(key=lambda entry: (-entry[0],) + _tiebreak_key(fillable[:depth + 1], entry[1]))
        beam = grown[:beam_width]
        if not beam:
            break

    if not beam or not fillable:
        return Assignment(chosen={}, score=0.0, ties=1 if not fillable else 0,
                          unfillable=unfillable)
    complete = [(score, combo) for score, combo in beam if len(combo) == len(fillable)]
    if not complete:
        return Assignment(chosen={}, score=0.0, ties=0, unfillable=unfillable)
    top = max(score for score, _ in complete)
    optimal = [combo for score, combo in complete if abs(score - top) <= OMEGA_TIE_TOLERANCE]
    winner = min(optimal, key=lambda combo: _tiebreak_key(fillable, combo))
    return Assignment(chosen=dict(zip(fillable, winner)), score=top,
                      ties=len(optimal), unfillable=unfillable)
