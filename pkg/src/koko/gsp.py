"""Per-sentence plan generation and nested-loop evaluation.

For every horizontal condition the planner greedily marks expensive
variables as skipped (highest estimated cost first) as long as neither
horizontal neighbour is already skipped; elastic variables sitting at a
condition boundary are never skipped because nothing pins their far edge.
Skipped variables are later derived from the token gap between their
bound neighbours instead of being enumerated.

Every surviving combination is validated against the real dependency
tree: each node variable's full path is re-checked by walking head links,
and all derived constraints (parentOf, ancestorOf, leftOf, in, eq) plus
elastic conditions are enforced. Index candidates are complete but not
exact, so these checks are what makes the final answer sound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

from .corpus import Corpus, Sentence
from .dpli import BindingTable
from .normalize import (
    ANY_ENTITY,
    COMPOSITE,
    ELASTIC,
    ENTITY,
    NODE,
    SUBTREE,
    WORDSEQ,
    NormalizedQuery,
    NormVar,
    dedupe_hidden,
)
from .syntax import Step
from .textutil import full_match
from .vocab import PL, POS, classify_label


class Bound(NamedTuple):
    """A runtime binding: inclusive span, token id for node vars, record."""

    start: int
    end: int  # end < start encodes the empty span at position start
    tid: int | None = None
    rec: object = None


@dataclass
class SkipPlan:
    per_condition: dict[int, list[str]] = field(default_factory=dict)

    @property
    def skipped(self) -> set[str]:
        out: set[str] = set()
        for names in self.per_condition.values():
            out.update(names)
        return out


@dataclass
class EvalStats:
    loop_iterations: int = 0
    tuples: int = 0
    sentences: int = 0


@dataclass
class CandidateTuple:
    sid: int
    bindings: dict[str, Bound]


def estimate_cost(var_name: str, sid: int, table: BindingTable, sentence_len: int) -> int:
    """Bindings to iterate for one variable in one sentence.

    Elastic variables cost t(t+1)/2 spans; everything else costs its
    candidate count, with subtree aliases priced as their base variable.
    """
    vb = table.bindings[var_name]
    kind = vb.var.kind
    if kind == ELASTIC:
        return sentence_len * (sentence_len + 1) // 2
    if kind == SUBTREE:
        return table.bindings[vb.var.of].count(sid)
    if kind == COMPOSITE:
        return 0
    return vb.count(sid)


def generate_skip_plan(
    n: NormalizedQuery, table: BindingTable, sid: int, sentence_len: int
) -> SkipPlan:
    plan = SkipPlan()
    for ci, cond in enumerate(n.horizontal):
        atoms = list(cond.atoms)
        if len(atoms) < 2 or len(set(atoms)) != len(atoms):
            continue
        costs = {v: estimate_cost(v, sid, table, sentence_len) for v in atoms}
        ranked = sorted(atoms, key=lambda v: (-costs[v], n.var(v).def_index))
        chosen: list[str] = []
        for v in ranked:
            i = atoms.index(v)
            left = atoms[i - 1] if i > 0 else None
            right = atoms[i + 1] if i + 1 < len(atoms) else None
            if n.var(v).kind == ELASTIC and (left is None or right is None):
                continue
            if (left is None or left not in chosen) and (right is None or right not in chosen):
                chosen.append(v)
        if chosen:
            plan.per_condition[ci] = chosen
    # A variable shared between conditions must stay enumerable if skipping
    # it would place two adjacent skips somewhere.
    skipped = plan.skipped
    for cond in n.horizontal:
        for a, b in zip(cond.atoms, cond.atoms[1:]):
            if a in skipped and b in skipped:
                for names in plan.per_condition.values():
                    if b in names:
                        names.remove(b)
                skipped = plan.skipped
    return plan


# ---------------------------------------------------------------------------
# Path validation against the real tree


def _token_matches_step(s: Sentence, tid: int, step: Step) -> bool:
    tok = s.tokens[tid]
    if step.kind == "word":
        if tok.text != step.label:
            return False
    elif step.kind == "name":
        side = classify_label(step.label)
        if side == PL:
            if tok.label != step.label:
                return False
        elif side == POS:
            if tok.pos != step.label:
                return False
        else:
            return False
    for cond in step.conditions:
        if cond.key == "pos" and tok.pos != cond.value:
            return False
        if cond.key == "text" and tok.text != cond.value:
            return False
        if cond.key == "etype" and tok.etype != cond.value:
            return False
        if cond.key == "regex" and not full_match(cond.value, tok.text):
            return False
    return True


def matches_path(s: Sentence, tid: int, steps: tuple[Step, ...]) -> bool:
    """True when the token's real ancestor chain realizes the path."""
    return _match_upward(s, tid, steps, len(steps) - 1)


def _match_upward(s: Sentence, tid: int, steps: tuple[Step, ...], i: int) -> bool:
    if not _token_matches_step(s, tid, steps[i]):
        return False
    axis = steps[i].axis
    if i == 0:
        if axis == "/":
            return s.tokens[tid].head is None
        return True
    head = s.tokens[tid].head
    if axis == "/":
        return head is not None and _match_upward(s, head, steps, i - 1)
    while head is not None:
        if _match_upward(s, head, steps, i - 1):
            return True
        head = s.tokens[head].head
    return False


def _check_elastic(var: NormVar, s: Sentence, start: int, end: int) -> bool:
    e = var.elastic
    length = max(0, end - start + 1)
    if e.min_tokens is not None and length < e.min_tokens:
        return False
    if e.max_tokens is not None and length > e.max_tokens:
        return False
    if e.etype is not None:
        if not any(
            ent.start == start and ent.end == end
            and (e.etype == ANY_ENTITY or ent.etype == e.etype)
            for ent in s.entities
        ):
            return False
    if e.regex is not None:
        text = s.text(start, end) if length else ""
        if not full_match(e.regex, text):
            return False
    return True


# ---------------------------------------------------------------------------
# Per-sentence evaluation


class _Evaluator:
    def __init__(
        self,
        n: NormalizedQuery,
        table: BindingTable,
        sid: int,
        plan: SkipPlan,
        corpus: Corpus,
        stats: EvalStats,
    ):
        self.n = n
        self.table = table
        self.sid = sid
        self.sentence = corpus.sentence(sid)
        self.plan = plan
        self.stats = stats
        self.env: dict[str, Bound] = {}
        self.out: list[CandidateTuple] = []
        self.ops: list[tuple] = []
        self._build_script()

    # -- candidate lists ----------------------------------------------------

    def _node_candidates(self, var: NormVar) -> list[Bound]:
        vb = self.table.bindings[var.name]
        if vb.derived_from is None:
            return [Bound(e.tid, e.tid, e.tid) for e in vb.by_sid.get(self.sid, ())]
        dominant = self.n.var(vb.derived_from)
        plen = vb.prefix_len
        tail = dominant.path.steps[plen:]
        dmin = len(tail)
        bounded = all(st.axis == "/" for st in tail)
        tids: set[int] = set()
        for e in self.table.bindings[vb.derived_from].by_sid.get(self.sid, ()):
            dist = 0
            cur = e.tid
            while True:
                head = self.sentence.tokens[cur].head
                if head is None:
                    break
                cur = head
                dist += 1
                if dist >= dmin:
                    tids.add(cur)
                    if bounded and dist == dmin:
                        break
        return [Bound(t, t, t) for t in sorted(tids)]

    def _candidates(self, var: NormVar) -> list[Bound]:
        if var.kind == NODE:
            return self._node_candidates(var)
        if var.kind == ENTITY:
            return [
                Bound(r.left, r.right, None, r)
                for r in self.table.bindings[var.name].by_sid.get(self.sid, ())
            ]
        if var.kind == WORDSEQ:
            return [
                Bound(span[1], span[2])
                for span in self.table.bindings[var.name].by_sid.get(self.sid, ())
            ]
        assert var.kind == ELASTIC, f"{var.name} ({var.kind}) cannot be enumerated"
        # Every span of the sentence, empty gaps included.
        t = len(self.sentence)
        out = [Bound(start, start - 1) for start in range(t + 1)]
        for start in range(t):
            for end in range(start, t):
                out.append(Bound(start, end))
        return out

    # -- derivations ----------------------------------------------------------

    def _derive(self, var: NormVar) -> list[Bound]:
        if var.kind == SUBTREE:
            base = self.env[var.of]
            meta = self.sentence.meta
            return [Bound(meta.left[base.tid], meta.right[base.tid])]
        if var.kind == COMPOSITE:
            first = self.env[var.atoms[0]]
            last = self.env[var.atoms[-1]]
            return [Bound(first.start, last.end)]
        # Skipped variable: aligned to the gap between bound neighbours.
        left, right = self._neighbors(var.name)
        lb = self.env.get(left) if left else None
        rb = self.env.get(right) if right else None
        if lb is not None and rb is not None:
            start, end = lb.end + 1, rb.start - 1
            return self._materialize(var, start, end, fixed=True)
        if lb is not None:
            return self._materialize(var, lb.end + 1, None, fixed=False)
        if rb is not None:
            return self._materialize(var, None, rb.start - 1, fixed=False)
        return []

    def _materialize(
        self, var: NormVar, start: int | None, end: int | None, fixed: bool
    ) -> list[Bound]:
        s = self.sentence
        if var.kind == ELASTIC:
            if not fixed:
                return []
            if end - start < -1:
                return []
            if not _check_elastic(var, s, start, end):
                return []
            return [Bound(start, end)]
        if var.kind == NODE:
            tid = start if start is not None else end
            if fixed and end - start != 0:
                return []
            if tid is None or not 0 <= tid < len(s):
                return []
            return [Bound(tid, tid, tid)]
        if var.kind == WORDSEQ:
            k = len(var.tokens)
            if start is None:
                start = end - k + 1
            if end is None:
                end = start + k - 1
            if start < 0 or end >= len(s) or end - start + 1 != k:
                return []
            if tuple(t.text for t in s.tokens[start : end + 1]) != var.tokens:
                return []
            return [Bound(start, end)]
        if var.kind == ENTITY:
            return [
                Bound(ent.start, ent.end, None, ent)
                for ent in s.entities
                if (var.etype == ANY_ENTITY or ent.etype == var.etype)
                and (start is None or ent.start == start)
                and (end is None or ent.end == end)
            ]
        return []

    def _neighbors(self, name: str) -> tuple[str | None, str | None]:
        conditions = list(self.n.horizontal)
        # A skipped variable aligns within the condition that skipped it.
        for ci, names in self.plan.per_condition.items():
            if name in names:
                conditions = [self.n.horizontal[ci]]
                break
        for cond in conditions:
            atoms = list(cond.atoms)
            if name in atoms:
                i = atoms.index(name)
                return (
                    atoms[i - 1] if i > 0 else None,
                    atoms[i + 1] if i + 1 < len(atoms) else None,
                )
        return (None, None)

    # -- checks ---------------------------------------------------------------

    def _constraint_check(self, kind: str, a: str, b: str) -> Callable[[], bool]:
        s = self.sentence

        def parent_of() -> bool:
            child = self.env[b]
            parent = self.env[a]
            return child.tid is not None and parent.tid is not None and (
                s.tokens[child.tid].head == parent.tid
            )

        def ancestor_of() -> bool:
            child = self.env[b]
            parent = self.env[a]
            if child.tid is None or parent.tid is None:
                return False
            return parent.tid in s.ancestors(child.tid)

        def left_of() -> bool:
            return self.env[a].end + 1 == self.env[b].start

        def contained() -> bool:
            xa, xb = self.env[a], self.env[b]
            return xb.start <= xa.start and xa.end <= xb.end and xa.start <= xa.end

        def equal() -> bool:
            xa, xb = self.env[a], self.env[b]
            return (xa.start, xa.end) == (xb.start, xb.end)

        return {
            "parentOf": parent_of,
            "ancestorOf": ancestor_of,
            "leftOf": left_of,
            "in": contained,
            "eq": equal,
        }[kind]

    def _bind_check(self, var: NormVar) -> Callable[[], bool] | None:
        if var.kind == NODE:
            steps = var.path.steps

            def check() -> bool:
                return matches_path(self.sentence, self.env[var.name].tid, steps)

            return check
        if var.kind == ELASTIC:

            def check_elastic() -> bool:
                b = self.env[var.name]
                return _check_elastic(var, self.sentence, b.start, b.end)

            return check_elastic
        return None

    # -- script -----------------------------------------------------------------

    def _build_script(self) -> None:
        n = self.n
        skipped = self.plan.skipped
        bound: set[str] = set()
        pending_checks: list[tuple[set[str], Callable[[], bool]]] = []
        for c in n.constraints:
            pending_checks.append(({c.a, c.b}, self._constraint_check(c.kind, c.a, c.b)))

        def on_bound(name: str) -> None:
            bound.add(name)
            var = n.var(name)
            check = self._bind_check(var)
            # Node paths are always re-validated; elastic conditions only
            # need a check op when enumerated (derivation checks inline).
            if check is not None and (var.kind == NODE or name not in skipped):
                self.ops.append(("check", check))
            for entry in list(pending_checks):
                needs, fn = entry
                if needs <= bound:
                    self.ops.append(("check", fn))
                    pending_checks.remove(entry)

        def derivable(name: str) -> bool:
            var = n.var(name)
            if var.kind == SUBTREE:
                return var.of in bound
            if var.kind == COMPOSITE:
                return all(a in bound for a in var.atoms)
            left, right = self._neighbors(name)
            present = [x for x in (left, right) if x is not None]
            if not present:
                return False
            if len(present) == 2:
                return left in bound and right in bound
            return present[0] in bound

        derived_kinds = {SUBTREE, COMPOSITE}
        to_enumerate = [
            v.name
            for v in n.variables.values()
            if v.kind not in derived_kinds and v.name not in skipped
        ]
        to_derive = {
            v.name
            for v in n.variables.values()
            if v.kind in derived_kinds or v.name in skipped
        }
        queue = list(to_enumerate)
        while queue or to_derive:
            moved = True
            while moved:
                moved = False
                for name in sorted(to_derive, key=lambda x: n.var(x).def_index):
                    if derivable(name):
                        self.ops.append(("derive", n.var(name)))
                        to_derive.discard(name)
                        on_bound(name)
                        moved = True
                        break
            if queue:
                name = queue.pop(0)
                self.ops.append(("enum", n.var(name)))
                on_bound(name)
            elif to_derive:
                # Underivable leftovers (no horizontal context): enumerate.
                name = sorted(to_derive, key=lambda x: n.var(x).def_index)[0]
                to_derive.discard(name)
                self.ops.append(("enum", n.var(name)))
                on_bound(name)
        self.ops.append(("emit",))

    # -- execution ----------------------------------------------------------------

    def run(self) -> list[CandidateTuple]:
        self._exec(0)
        return self.out

    def _exec(self, i: int) -> None:
        op = self.ops[i]
        tag = op[0]
        if tag == "emit":
            self.stats.tuples += 1
            self.out.append(CandidateTuple(self.sid, dict(self.env)))
            return
        if tag == "check":
            if op[1]():
                self._exec(i + 1)
            return
        var = op[1]
        candidates = self._candidates(var) if tag == "enum" else self._derive(var)
        for cand in candidates:
            self.stats.loop_iterations += 1
            self.env[var.name] = cand
            self._exec(i + 1)
        self.env.pop(var.name, None)


def evaluate_sentence(
    n: NormalizedQuery,
    table: BindingTable,
    sid: int,
    plan: SkipPlan,
    corpus: Corpus,
    stats: EvalStats | None = None,
) -> list[CandidateTuple]:
    stats = stats if stats is not None else EvalStats()
    stats.sentences += 1
    return dedupe_hidden(n, _Evaluator(n, table, sid, plan, corpus, stats).run())
