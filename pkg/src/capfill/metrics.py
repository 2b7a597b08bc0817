"""Caption evaluation: corpus BLEU, ROUGE-L, CIDEr, and fuzzy entity F1.

All text metrics work on pre-tokenized, lowercased token lists. Entity
F1 uses an algorithmic stand-in for manual fuzzy matching: containment
after normalization, or token-set Jaccard above a threshold, with greedy
one-to-one pairing.
"""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .errors import DomainError

BLEU_MAX_ORDER = 4
CIDER_MAX_ORDER = 4
CIDER_SIGMA = 6.0
CIDER_SCALE = 10.0
ROUGE_BETA = 1.2
DEFAULT_JACCARD_THRESHOLD = 0.5


@dataclass
class EvalPair:
    doc_id: str
    candidate: list[str]
    references: list[list[str]]
    cand_entities: list[str] = field(default_factory=list)
    ref_entities: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.references:
            raise DomainError(f"{self.doc_id}: references must be non-empty")
        self.candidate = [t.lower() for t in self.candidate]
        self.references = [[t.lower() for t in ref] for ref in self.references]


@dataclass
class EvalReport:
    bleu: list[float]
    rouge_l: float
    cider: Optional[float]   # None when the corpus is too small for idf
    entity_precision: float
    entity_recall: float
    entity_f1: float
    n: int
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "bleu_1": self.bleu[0], "bleu_2": self.bleu[1],
            "bleu_3": self.bleu[2], "bleu_4": self.bleu[3],
            "meteor": None,   # not computed; kept for table-shaped output
            "rouge_l": self.rouge_l,
            "cider": self.cider,
            "entity_precision": self.entity_precision,
            "entity_recall": self.entity_recall,
            "entity_f1": self.entity_f1,
            "metadata": self.metadata,
        }


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(pairs: list[EvalPair], max_n: int = BLEU_MAX_ORDER) -> list[float]:
    """Corpus-level BLEU-1..max_n with brevity penalty.

    Modified n-gram precision clips candidate counts against the
    per-n-gram maximum over the references. The reference length is the
    closest to the candidate's (shorter wins ties). An empty candidate
    simply contributes no matches.
    """
    if not pairs:
        raise DomainError("no pairs")
    matches = [0] * max_n
    totals = [0] * max_n
    cand_len = 0
    ref_len = 0
    for pair in pairs:
        c = len(pair.candidate)
        cand_len += c
        ref_len += min((len(r) for r in pair.references),
                       key=lambda rl: (abs(rl - c), rl))
        for n in range(1, max_n + 1):
            cand_counts = _ngrams(pair.candidate, n)
            max_ref: Counter = Counter()
            for ref in pair.references:
                for gram, count in _ngrams(ref, n).items():
                    if count > max_ref[gram]:
                        max_ref[gram] = count
            matches[n - 1] += sum(min(count, max_ref[gram])
                                  for gram, count in cand_counts.items())
            totals[n - 1] += max(0, c - n + 1)

    if cand_len == 0:
        return [0.0] * max_n
    bp = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / cand_len)
    precisions = [matches[i] / totals[i] if totals[i] else 0.0 for i in range(max_n)]
    scores = []
    for k in range(1, max_n + 1):
        if any(p == 0.0 for p in precisions[:k]):
            scores.append(0.0)
            continue
        log_mean = sum(math.log(p) for p in precisions[:k]) / k
        scores.append(bp * math.exp(log_mean))
    return scores


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(pairs: list[EvalPair], beta: float = ROUGE_BETA) -> float:
    """Mean over pairs of the best-reference LCS F-measure.

    F = (1 + beta^2) * P * R / (R + beta^2 * P) with P = LCS/|candidate|
    and R = LCS/|reference|.
    """
    if not pairs:
        raise DomainError("no pairs")
    total = 0.0
    for pair in pairs:
        best = 0.0
        for ref in pair.references:
            lcs = _lcs_length(pair.candidate, ref)
            if lcs == 0 or not pair.candidate or not ref:
                continue
            p = lcs / len(pair.candidate)
            r = lcs / len(ref)
            best = max(best, (1 + beta ** 2) * p * r / (r + beta ** 2 * p))
        total += best
    return total / len(pairs)


def _cider_vector(tokens: list[str], n: int, idf: dict, n_docs: int) -> dict:
    vec = {}
    for gram, count in _ngrams(tokens, n).items():
        vec[gram] = count * idf.get(gram, math.log(n_docs))
    return vec


def _cosine(a: dict, b: dict) -> float:
    norm_a = math.sqrt(sum(v * v for v in a.values()))
    norm_b = math.sqrt(sum(v * v for v in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    dot = sum(v * b[g] for g, v in a.items() if g in b)
    return dot / (norm_a * norm_b)


def cider_detail(pairs: list[EvalPair], max_n: int = CIDER_MAX_ORDER,
                 sigma: float = CIDER_SIGMA) -> list[list[float]]:
    """Per-pair, per-order consensus similarities (before averaging and
    scaling). n-gram document frequency counts the evaluation pairs whose
    reference set contains the n-gram; rarity boosts the tf-idf weight."""
    if len(pairs) < 2:
        raise DomainError("idf needs at least 2 pairs")
    n_docs = len(pairs)
    idf_by_n: list[dict] = []
    for n in range(1, max_n + 1):
        df: dict = defaultdict(int)
        for pair in pairs:
            grams = set()
            for ref in pair.references:
                grams.update(_ngrams(ref, n))
            for gram in grams:
                df[gram] += 1
        idf_by_n.append({gram: math.log(n_docs / count) for gram, count in df.items()})

    details = []
    for pair in pairs:
        per_order = []
        for n in range(1, max_n + 1):
            idf = idf_by_n[n - 1]
            cand_vec = _cider_vector(pair.candidate, n, idf, n_docs)
            sim = 0.0
            for ref in pair.references:
                penalty = math.exp(-((len(pair.candidate) - len(ref)) ** 2)
                                   / (2 * sigma ** 2))
                sim += penalty * _cosine(cand_vec, _cider_vector(ref, n, idf, n_docs))
            per_order.append(sim / len(pair.references))
        details.append(per_order)
    return details


def cider(pairs: list[EvalPair], max_n: int = CIDER_MAX_ORDER,
          sigma: float = CIDER_SIGMA) -> float:
    """Consensus score: tf-idf n-gram cosine with a Gaussian length
    penalty, averaged over references, orders, and pairs, scaled by 10."""
    details = cider_detail(pairs, max_n=max_n, sigma=sigma)
    per_pair = [sum(orders) / len(orders) for orders in details]
    return CIDER_SCALE * sum(per_pair) / len(per_pair)


_PUNCT = re.compile(r"[^\w\s]")


def _normalize_entity(name: str) -> str:
    return re.sub(r"\s+", " ", _PUNCT.sub("", name.casefold())).strip()


def _entity_match(pred: str, ref: str, threshold: float) -> tuple[bool, float]:
    a, b = _normalize_entity(pred), _normalize_entity(ref)
    ta, tb = set(a.split()), set(b.split())
    union = ta | tb
    jaccard = len(ta & tb) / len(union) if union else 0.0
    if not a or not b:
        return (False, jaccard)
    contained = a in b or b in a
    return (contained or jaccard >= threshold, jaccard)


def entity_f1(pairs: list[EvalPair],
              jaccard_threshold: float = DEFAULT_JACCARD_THRESHOLD) -> tuple[float, float, float]:
    """Micro-averaged precision/recall/F1 over fuzzy entity matches.

    A predicted entity matches a reference entity when one normalized
    string contains the other or their token-set Jaccard reaches the
    threshold. Matches are one-to-one, assigned greedily in descending
    Jaccard order.
    """
    matched = 0
    total_pred = 0
    total_ref = 0
    for pair in pairs:
        total_pred += len(pair.cand_entities)
        total_ref += len(pair.ref_entities)
        scored = []
        for i, pred in enumerate(pair.cand_entities):
            for j, ref in enumerate(pair.ref_entities):
                ok, jaccard = _entity_match(pred, ref, jaccard_threshold)
                if ok:
                    scored.append((-jaccard, i, j))
        used_pred: set[int] = set()
        used_ref: set[int] = set()
        for _, i, j in sorted(scored):
            if i in used_pred or j in used_ref:
                continue
            used_pred.add(i)
            used_ref.add(j)
            matched += 1
    precision = matched / total_pred if total_pred else 0.0
    recall = matched / total_ref if total_ref else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return (precision, recall, f1)


def evaluate(pairs: list[EvalPair],
             jaccard_threshold: float = DEFAULT_JACCARD_THRESHOLD,
             cider_sigma: float = CIDER_SIGMA) -> EvalReport:
    """Full report over a corpus of evaluation pairs."""
    bleu_scores = bleu(pairs)
    p, r, f1 = entity_f1(pairs, jaccard_threshold=jaccard_threshold)
    cider_score: Optional[float] = None
    cider_note = f"tf-idf cosine, sigma={cider_sigma}, x{CIDER_SCALE:g} scaling"
    if len(pairs) >= 2:
        cider_score = cider(pairs, sigma=cider_sigma)
    else:
        cider_note = "skipped: idf needs at least 2 pairs"
    return EvalReport(
        bleu=bleu_scores,
        rouge_l=rouge_l(pairs),
        cider=cider_score,
        entity_precision=p,
        entity_recall=r,
        entity_f1=f1,
        n=len(pairs),
        metadata={
            "bleu": "corpus-level, closest-reference brevity penalty",
            "rouge": f"ROUGE-L, beta={ROUGE_BETA}",
            "cider": cider_note,
            "entity_f1": ("fuzzy: containment or token-set Jaccard >= "
                          f"{jaccard_threshold}, greedy one-to-one"),
            "meteor": None,
        },
    )
