"""Evidence scoring for satisfying clauses and final result assembly.

A clause's score for a candidate value is the weighted sum of
per-condition confidences. Boolean conditions contribute 0 or 1 no matter
how often they hold; ``near`` contributes the best per-sentence
1/(1+distance); descriptor conditions sum per-sentence confidences over
the document and are clamped into [0, 1] so thresholds keep meaning
across corpora of any size. Evidence is gathered per document; results
from different documents are unioned.

Descriptor confidence per sentence follows
``max_i sum_j match(d_i, c_j)`` over expanded descriptors d_i and
decomposed clauses c_j, where a match requires the descriptor's words in
order (gaps allowed, case-insensitive) and scores k_i * l_j, damped by
1/(1+g) for the token gap g between the candidate and the matched words.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import Corpus, Sentence, detokenize
from .gsp import Bound, CandidateTuple
from .normalize import ENTITY, NODE, NormalizedQuery
from .resources import Clause, Expansion, Resources
from .syntax import SatCondition, SatisfyingClause, print_condition
from .textutil import (
    compile_pattern,
    find_token_seq,
    subsequence_positions,
    tokenize_literal,
)


@dataclass
class ConditionScore:
    index: int
    rendered: str
    weight: float
    m: float
    per_sentence: list[tuple[int, float]] = field(default_factory=list)

    @property
    def contribution(self) -> float:
        return self.weight * self.m


@dataclass
class EvidenceScore:
    value: str
    threshold: float
    conditions: list[ConditionScore]
    total: float
    passed: bool

    def describe(self) -> str:
        lines = [f"value {self.value!r}:"]
        for c in self.conditions:
            lines.append(
                f"  [{c.index}] ({c.rendered}) m={c.m:g} w={c.weight:g} w*m={c.contribution:g}"
            )
            for sid, conf in c.per_sentence:
                lines.append(f"      sid {sid}: {conf:g}")
        lines.append(
            f"  total {self.total:g} vs threshold {self.threshold:g}: "
            + ("pass" if self.passed else "fail")
        )
        return "\n".join(lines) + "\n"


@dataclass
class ResultRow:
    sid: int
    values: dict[str, str]
    scores: dict[str, EvidenceScore]
    passed: bool
    excluded_by: str | None = None

    def key(self) -> tuple:
        return (self.sid, tuple(sorted(self.values.items())), self.passed)

    def to_json(self) -> dict:
        row: dict = {"sid": self.sid, "values": self.values}
        if self.scores:
            row["scores"] = {
                var: {
                    "total": s.total,
                    "threshold": s.threshold,
                    "passed": s.passed,
                    "conditions": [
                        {"condition": c.rendered, "weight": c.weight, "m": c.m}
                        for c in s.conditions
                    ],
                }
                for var, s in self.scores.items()
            }
        return row


def conf_descriptor(expansions: list[Expansion], clauses: list[tuple[list[str], float]]) -> float:
    """Bare descriptor-vs-sentence confidence: max over expansions of the
    sum over clauses of k_i * l_j for in-order occurrences."""
    best = 0.0
    for e in expansions:
        total = 0.0
        for words, l_j in clauses:
            if subsequence_positions(words, list(e.words)) is not None:
                total += e.score * l_j
        best = max(best, total)
    return best


class EvidenceEvaluator:
    """Scores clause conditions for candidate values within one document."""

    def __init__(self, corpus: Corpus, resources: Resources, doc_sids: list[int]):
        self.corpus = corpus
        self.resources = resources
        self.doc_sids = doc_sids
        self._score_cache: dict[tuple[int, str], EvidenceScore] = {}

    # -- boolean conditions ----------------------------------------------

    def eval_boolean(self, cond: SatCondition, value: str) -> float:
        kind = cond.kind
        if kind == "contains":
            return 1.0 if find_token_seq(
                tokenize_literal(value), tokenize_literal(cond.arg)
            ) else 0.0
        if kind == "mentions":
            return 1.0 if cond.arg in value else 0.0
        if kind == "matches":
            return 1.0 if compile_pattern(cond.arg).fullmatch(value) else 0.0
        if kind == "in_dict":
            return 1.0 if self.resources.dict_contains(cond.arg, value) else 0.0
        if kind == "followed_by":
            return 1.0 if self._adjacent(value, cond.arg, after=True) else 0.0
        if kind == "preceded_by":
            return 1.0 if self._adjacent(value, cond.arg, after=False) else 0.0
        raise ValueError(f"{kind} is not a boolean condition")

    def _adjacent(self, value: str, literal: str, after: bool) -> bool:
        value_toks = tokenize_literal(value)
        lit_toks = tokenize_literal(literal)
        if not value_toks or not lit_toks:
            return False
        for sid in self.doc_sids:
            words = self.corpus.sentence(sid).words
            for start in find_token_seq(words, value_toks):
                if after:
                    nxt = start + len(value_toks)
                    if words[nxt : nxt + len(lit_toks)] == lit_toks:
                        return True
                else:
                    begin = start - len(lit_toks)
                    if begin >= 0 and words[begin:start] == lit_toks:
                        return True
        return False

    # -- near -------------------------------------------------------------

    def eval_near(self, value: str, literal: str) -> tuple[float, list[tuple[int, float]]]:
        """Best per-sentence 1/(1+gap); gap is tokens strictly between."""
        value_toks = tokenize_literal(value)
        lit_toks = tokenize_literal(literal)
        per_sentence: list[tuple[int, float]] = []
        if not value_toks or not lit_toks:
            return 0.0, per_sentence
        for sid in self.doc_sids:
            words = self.corpus.sentence(sid).words
            v_occ = find_token_seq(words, value_toks)
            l_occ = find_token_seq(words, lit_toks)
            if not v_occ or not l_occ:
                continue
            best = 0.0
            for v in v_occ:
                v_end = v + len(value_toks) - 1
                for l in l_occ:
                    l_end = l + len(lit_toks) - 1
                    if l > v_end:
                        gap = l - v_end - 1
                    elif v > l_end:
                        gap = v - l_end - 1
                    else:
                        gap = 0
                    best = max(best, 1.0 / (1.0 + gap))
            if best:
                per_sentence.append((sid, best))
        if not per_sentence:
            return 0.0, per_sentence
        if self.resources.near_mode == "sum":
            return min(1.0, sum(c for _, c in per_sentence)), per_sentence
        return max(c for _, c in per_sentence), per_sentence

    # -- descriptors --------------------------------------------------------

    def eval_descriptor(
        self, value: str, phrase: str, right_side: bool
    ) -> tuple[float, list[tuple[int, float]]]:
        expansions = self.resources.expand(phrase)
        value_toks = tokenize_literal(value)
        per_sentence: list[tuple[int, float]] = []
        if not value_toks:
            return 0.0, per_sentence
        for sid in self.doc_sids:
            sentence = self.corpus.sentence(sid)
            occurrences = find_token_seq(sentence.words, value_toks)
            if not occurrences:
                continue
            conf = 0.0
            clause_set = self.resources.decompose(sentence)
            for occ in occurrences:
                occ_end = occ + len(value_toks) - 1
                conf = max(
                    conf,
                    self._descriptor_conf(sentence, clause_set, expansions, occ, occ_end, right_side),
                )
            if conf:
                per_sentence.append((sid, conf))
        total = min(1.0, sum(c for _, c in per_sentence))
        return total, per_sentence

    def _descriptor_conf(
        self,
        sentence: Sentence,
        clause_set: list[Clause],
        expansions: list[Expansion],
        occ: int,
        occ_end: int,
        right_side: bool,
    ) -> float:
        words = sentence.words
        best = 0.0
        for e in expansions:
            total = 0.0
            for clause in clause_set:
                if right_side:
                    ids = [t for t in clause.token_ids if t > occ_end]
                else:
                    ids = [t for t in clause.token_ids if t < occ]
                if len(ids) < len(e.words):
                    continue
                positions = subsequence_positions([words[t] for t in ids], list(e.words))
                if positions is None:
                    continue
                if right_side:
                    gap = ids[positions[0]] - occ_end - 1
                else:
                    gap = occ - ids[positions[-1]] - 1
                total += e.score * clause.score / (1.0 + gap)
            best = max(best, total)
        return best

    # -- clause scoring ----------------------------------------------------------

    def score(self, clause: SatisfyingClause, clause_index: int, value: str) -> EvidenceScore:
        key = (clause_index, value)
        cached = self._score_cache.get(key)
        if cached is not None:
            return cached
        conditions: list[ConditionScore] = []
        total = 0.0
        for i, wc in enumerate(clause.conditions):
            cond = wc.condition
            per_sentence: list[tuple[int, float]] = []
            if cond.kind in ("contains", "mentions", "matches", "in_dict",
                             "followed_by", "preceded_by"):
                m = self.eval_boolean(cond, value)
            elif cond.kind == "near":
                m, per_sentence = self.eval_near(value, cond.arg)
            elif cond.kind == "similar_to":
                m = self.resources.similarity(value, cond.arg)
            elif cond.kind == "desc_right":
                m, per_sentence = self.eval_descriptor(value, cond.arg, right_side=True)
            elif cond.kind == "desc_left":
                m, per_sentence = self.eval_descriptor(value, cond.arg, right_side=False)
            else:
                raise ValueError(f"unknown condition kind {cond.kind!r}")
            total += wc.weight * m
            conditions.append(ConditionScore(
                index=i,
                rendered=print_condition(cond),
                weight=wc.weight,
                m=m,
                per_sentence=per_sentence,
            ))
        score = EvidenceScore(
            value=value,
            threshold=clause.threshold,
            conditions=conditions,
            total=total,
            passed=total >= clause.threshold,
        )
        self._score_cache[key] = score
        return score

    def condition_fires(self, cond: SatCondition, value: str) -> bool:
        """Excluding semantics: a condition fires when its confidence > 0."""
        if cond.kind in ("contains", "mentions", "matches", "in_dict",
                         "followed_by", "preceded_by"):
            return self.eval_boolean(cond, value) > 0.0
        if cond.kind == "near":
            return self.eval_near(value, cond.arg)[0] > 0.0
        if cond.kind == "similar_to":
            return self.resources.similarity(value, cond.arg) > 0.0
        m, _ = self.eval_descriptor(value, cond.arg, cond.kind == "desc_right")
        return m > 0.0


def apply_excluding(
    evaluator: EvidenceEvaluator, conditions, values: dict[str, str]
) -> str | None:
    """First excluding disjunct that fires for the tuple, rendered, or None."""
    for cond in conditions:
        target = values.get(cond.var)
        if target is None:
            continue
        if evaluator.condition_fires(cond, target):
            return print_condition(cond)
    return None


def value_of(sentence: Sentence, bound: Bound, kind: str) -> str:
    if kind == ENTITY and bound.rec is not None:
        return bound.rec.surface
    if kind == NODE:
        return sentence.tokens[bound.tid].text
    if bound.end < bound.start:
        return ""
    return detokenize(t.text for t in sentence.tokens[bound.start : bound.end + 1])


def finalize_results(
    n: NormalizedQuery,
    tuples: list[CandidateTuple],
    corpus: Corpus,
    resources: Resources,
    keep_failed: bool = False,
) -> list[ResultRow]:
    """Score satisfying clauses, apply the excluding clause and project
    output tuples. Queries with an empty extract clause deduplicate by
    value per document; everything else keeps bag semantics."""
    q = n.query
    evaluators: dict[int, EvidenceEvaluator] = {}
    rows: list[ResultRow] = []
    dedup: set[tuple] = set()
    dedup_mode = not q.defs and not q.constraints
    output_kinds = {name: n.var(name).kind for name, _ in q.outputs}

    for t in tuples:
        sentence = corpus.sentence(t.sid)
        doc_idx = corpus.doc_index_of(t.sid)
        evaluator = evaluators.get(doc_idx)
        if evaluator is None:
            doc = corpus.documents[doc_idx]
            evaluator = EvidenceEvaluator(corpus, resources, corpus.doc_sids(doc))
            evaluators[doc_idx] = evaluator
        values = {
            name: value_of(sentence, t.bindings[name], output_kinds[name])
            for name, _ in q.outputs
        }
        if dedup_mode:
            key = (doc_idx, tuple(sorted(values.items())))
            if key in dedup:
                continue
            dedup.add(key)
        scores: dict[str, EvidenceScore] = {}
        passed = True
        for ci, clause in enumerate(q.satisfying):
            var = clause.var
            value = values.get(var)
            if value is None:
                value = value_of(sentence, t.bindings[var], n.var(var).kind)
            s = evaluator.score(clause, ci, value)
            scores[var] = s
            passed = passed and s.passed
        excluded_by: str | None = None
        if passed and q.excluding:
            rendered = dict(values)
            for cond in q.excluding:
                if cond.var not in rendered:
                    rendered[cond.var] = value_of(
                        sentence, t.bindings[cond.var], n.var(cond.var).kind
                    )
            excluded_by = apply_excluding(evaluator, q.excluding, rendered)
        ok = passed and excluded_by is None
        if ok or keep_failed:
            rows.append(ResultRow(
                sid=t.sid, values=values, scores=scores,
                passed=ok, excluded_by=excluded_by,
            ))
    rows.sort(key=lambda r: (r.sid, tuple(sorted(r.values.items()))))
    return rows
