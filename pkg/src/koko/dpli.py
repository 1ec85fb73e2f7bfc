"""Dominant-path selection, path decomposition and posting-list joins.

Each dominant path is decomposed into a parse-label pattern, a POS
pattern and a word pattern sharing one axis skeleton; non-matching
positions become ``*``. The three legs are fetched from their indices and
joined back on token identity (PL with POS) and on ancestor containment
with a depth gap (word chains), yielding a candidate set that is complete
but possibly over-approximate; the validation stage makes it exact.

Depth bookkeeping: step i of a pattern can bind tokens no shallower than
i edges below the virtual root anchor (token depth i-1 at least, exactly
that when no ``//`` appears up to i), and two concrete words k steps apart
must differ in depth by at least k.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import PostingEntry
from .errors import KokoDecomposeError
from .indexes import IndexBundle
from .normalize import ANY_ENTITY, ENTITY, NODE, WORDSEQ, NormalizedQuery, NormVar
from .syntax import PathExpr
from .vocab import PL, POS, classify_label


@dataclass
class DecomposedPath:
    source: PathExpr
    pl_steps: list[tuple[str, str]]
    pos_steps: list[tuple[str, str]]
    word_steps: list[tuple[str, str]]
    word_positions: list[int]  # step indices carrying a concrete word
    min_depth: list[int]  # per step, minimal token depth
    exact_depth: list[bool]  # per step, True when the depth is forced

    @property
    def has_pl(self) -> bool:
        return any(label != "*" for _, label in self.pl_steps)

    @property
    def has_pos(self) -> bool:
        return any(label != "*" for _, label in self.pos_steps)

    @property
    def last_is_word(self) -> bool:
        return bool(self.word_positions) and self.word_positions[-1] == len(self.word_steps) - 1

    def render(self, which: str) -> str:
        steps = {"pl": self.pl_steps, "pos": self.pos_steps, "word": self.word_steps}[which]
        out = []
        for i, (axis, label) in enumerate(steps):
            if which == "word" and i in self.word_positions:
                label = f'"{label}"'
            out.append(axis + label)
        return "".join(out)


def decompose(path: PathExpr) -> DecomposedPath:
    if path.base is not None:
        raise KokoDecomposeError("only ROOT-anchored paths can be decomposed")
    pl_steps: list[tuple[str, str]] = []
    pos_steps: list[tuple[str, str]] = []
    word_steps: list[tuple[str, str]] = []
    word_positions: list[int] = []
    min_depth: list[int] = []
    exact_depth: list[bool] = []
    for i, step in enumerate(path.steps):
        pl_label = pos_label = word_label = "*"
        if step.kind == "word":
            word_label = step.label
        elif step.kind == "name":
            side = classify_label(step.label)
            if side == PL:
                pl_label = step.label
            elif side == POS:
                pos_label = step.label
            else:
                raise KokoDecomposeError(
                    f"label {step.label!r} is neither a known parse label nor a POS tag"
                )
        for cond in step.conditions:
            if cond.key == "text":
                word_label = cond.value
            elif cond.key == "pos":
                if pos_label != "*" and pos_label != cond.value:
                    raise KokoDecomposeError(
                        f"conflicting POS constraints {pos_label!r} and {cond.value!r} on one step"
                    )
                pos_label = cond.value
        pl_steps.append((step.axis, pl_label))
        pos_steps.append((step.axis, pos_label))
        word_steps.append((step.axis, word_label))
        if word_label != "*":
            word_positions.append(i)
        if i == 0:
            min_depth.append(0)
            exact_depth.append(step.axis == "/")
        else:
            min_depth.append(min_depth[-1] + 1)
            exact_depth.append(exact_depth[-1] and step.axis == "/")
    return DecomposedPath(
        source=path,
        pl_steps=pl_steps,
        pos_steps=pos_steps,
        word_steps=word_steps,
        word_positions=word_positions,
        min_depth=min_depth,
        exact_depth=exact_depth,
    )


# ---------------------------------------------------------------------------
# Dominance


def _signature(path: PathExpr) -> tuple:
    return tuple(
        (s.axis, s.kind, s.label, frozenset((c.key, c.value) for c in s.conditions))
        for s in path.steps
    )


def dominant_paths(n: NormalizedQuery) -> dict[str, tuple[str, int]]:
    """Map every node variable to (dominant variable, own prefix length).

    A variable is dominated when another variable's path extends its own
    (condition-annotated prefix test). Only extensions that arose from
    relative definitions are followed: those are exactly the cases where
    a parentOf/ancestorOf constraint ties the pair together, so ancestors
    of the dominant's candidates are guaranteed to cover the dominated
    variable's true bindings. Coincidentally prefix-equal but unrelated
    paths stay independent dominants.
    """
    node_names = {v.name for v in n.node_vars()}
    sigs = {v.name: _signature(v.path) for v in n.node_vars()}
    extenders: dict[str, list[str]] = {name: [] for name in node_names}
    for c in n.constraints:
        if c.kind in ("parentOf", "ancestorOf") and c.a in node_names and c.b in node_names:
            if sigs[c.b][: len(sigs[c.a])] == sigs[c.a]:
                extenders[c.a].append(c.b)

    def sink(name: str) -> str:
        nxt = extenders[name]
        if not nxt:
            return name
        return sink(min(nxt, key=lambda x: n.var(x).def_index))

    return {name: (sink(name), len(sigs[name])) for name in node_names}


# ---------------------------------------------------------------------------
# Joins


def _filter_depth(entries: list[PostingEntry], min_depth: int, exact: bool) -> list[PostingEntry]:
    if exact:
        return [e for e in entries if e.depth == min_depth]
    return [e for e in entries if e.depth >= min_depth]


def join_word_path(bundle: IndexBundle, dp: DecomposedPath) -> list[PostingEntry] | None:
    """Chained containment join over the concrete words of the word path.

    Returns entries for the last concrete word, or None when the path has
    no words at all (a universal leg). A later word survives when some
    earlier-word entry in the same sentence contains its extent and sits
    at least as many levels up as there are steps between the two words.
    """
    if not dp.word_positions:
        return None
    first = dp.word_positions[0]
    current = _filter_depth(
        bundle.word.lookup(dp.word_steps[first][1]), dp.min_depth[first], dp.exact_depth[first]
    )
    prev_pos = first
    for pos in dp.word_positions[1:]:
        if not current:
            return []
        nxt = _filter_depth(
            bundle.word.lookup(dp.word_steps[pos][1]), dp.min_depth[pos], dp.exact_depth[pos]
        )
        gap = pos - prev_pos
        by_sid: dict[int, list[PostingEntry]] = {}
        for e in current:
            by_sid.setdefault(e.sid, []).append(e)
        current = [
            q for q in nxt
            if any(
                p.left <= q.left and p.right >= q.right and q.depth >= p.depth + gap
                for p in by_sid.get(q.sid, ())
            )
        ]
        prev_pos = pos
    return current


def _intersect_tokens(a: list[PostingEntry], b: list[PostingEntry]) -> list[PostingEntry]:
    keys = {(e.sid, e.tid) for e in a}
    return [e for e in b if (e.sid, e.tid) in keys]


def join_all(
    p1: list[PostingEntry] | None,
    p2: list[PostingEntry] | None,
    q: list[PostingEntry] | None,
    dp: DecomposedPath,
) -> list[PostingEntry]:
    """Combine the three legs into candidates for the path's last step."""
    if p1 is None:
        p = p2
    elif p2 is None:
        p = p1
    else:
        p = _intersect_tokens(p1, p2)
    if q is None:
        assert p is not None  # the all-wildcard case resolves p through the PL index
        return p
    if p is None:
        return q if dp.last_is_word else []
    if dp.last_is_word:
        return _intersect_tokens(q, p)
    # The last concrete word must be an ancestor of the candidate token,
    # at least as many levels up as the steps separating them.
    gap = len(dp.word_steps) - 1 - dp.word_positions[-1]
    by_sid: dict[int, list[PostingEntry]] = {}
    for e in q:
        by_sid.setdefault(e.sid, []).append(e)
    return [
        c for c in p
        if any(
            w.left <= c.left and w.right >= c.right and c.depth >= w.depth + gap
            for w in by_sid.get(c.sid, ())
        )
    ]


# ---------------------------------------------------------------------------
# Candidate bindings


@dataclass
class VarBinding:
    var: NormVar
    by_sid: dict[int, list] = field(default_factory=dict)
    index_bound: bool = False
    derived_from: str | None = None  # dominant variable for dominated node vars
    prefix_len: int = 0

    def count(self, sid: int) -> int:
        return len(self.by_sid.get(sid, ()))


@dataclass
class DominantInfo:
    var: str
    decomposed: DecomposedPath
    p1_size: int | None
    p2_size: int | None
    q_size: int | None
    result_size: int


@dataclass
class BindingTable:
    bindings: dict[str, VarBinding]
    candidate_sids: list[int]
    dominance: dict[str, tuple[str, int]]
    info: list[DominantInfo] = field(default_factory=list)

    def describe(self) -> str:
        lines = ["dominant paths:"]
        for d in self.info:
            lines.append(f"  {d.var}:")
            lines.append(f"    pl   {d.decomposed.render('pl')}"
                         + (f"  |P1| = {d.p1_size}" if d.p1_size is not None else "  (skipped)"))
            lines.append(f"    pos  {d.decomposed.render('pos')}"
                         + (f"  |P2| = {d.p2_size}" if d.p2_size is not None else "  (skipped)"))
            lines.append(f"    word {d.decomposed.render('word')}"
                         + (f"  |Q| = {d.q_size}" if d.q_size is not None else "  (skipped)"))
            lines.append(f"    candidates = {d.result_size}")
        lines.append(f"candidate sentences: {len(self.candidate_sids)}")
        return "\n".join(lines) + "\n"


def candidate_bindings(n: NormalizedQuery, bundle: IndexBundle) -> BindingTable:
    bindings: dict[str, VarBinding] = {}
    dominance = dominant_paths(n)
    info: list[DominantInfo] = []

    for var in n.variables.values():
        if var.kind == ENTITY:
            records = bundle.entity.lookup(None if var.etype == ANY_ENTITY else var.etype)
            vb = VarBinding(var=var, index_bound=True)
            for r in records:
                vb.by_sid.setdefault(r.sid, []).append(r)
            bindings[var.name] = vb
        elif var.kind == NODE:
            dom, plen = dominance[var.name]
            if dom == var.name:
                bindings[var.name] = _bind_dominant(n.var(dom), bundle, info)
            else:
                bindings[var.name] = VarBinding(
                    var=var, index_bound=True, derived_from=dom, prefix_len=plen
                )
        elif var.kind == WORDSEQ:
            vb = VarBinding(var=var, index_bound=True)
            for span in _word_seq_spans(bundle, var.tokens):
                vb.by_sid.setdefault(span[0], []).append(span)
            bindings[var.name] = vb
        else:
            bindings[var.name] = VarBinding(var=var)

    # Dominated variables share their dominant's posting lists for cost
    # purposes; candidate derivation happens per sentence at plan time.
    for name, vb in bindings.items():
        if vb.derived_from is not None:
            vb.by_sid = bindings[vb.derived_from].by_sid

    if not n.query.defs:
        candidate_sids = list(range(bundle.sentence_count))
    else:
        sid_sets = [
            set(vb.by_sid)
            for vb in bindings.values()
            if vb.index_bound and vb.derived_from is None
        ]
        if sid_sets:
            common = set.intersection(*sid_sets)
            candidate_sids = sorted(common)
        else:
            candidate_sids = list(range(bundle.sentence_count))
    return BindingTable(
        bindings=bindings, candidate_sids=candidate_sids, dominance=dominance, info=info
    )


def _bind_dominant(var: NormVar, bundle: IndexBundle, info: list[DominantInfo]) -> VarBinding:
    dp = decompose(var.path)
    p1 = bundle.pl.lookup(dp.pl_steps) if dp.has_pl else None
    p2 = bundle.pos.lookup(dp.pos_steps) if dp.has_pos else None
    q = join_word_path(bundle, dp)
    if p1 is None and p2 is None and q is None:
        # All-wildcard path: the skeleton still constrains depth; resolve
        # it through the PL hierarchy.
        p1 = bundle.pl.lookup(dp.pl_steps)
    entries = join_all(p1, p2, q, dp)
    entries.sort()
    info.append(DominantInfo(
        var=var.name,
        decomposed=dp,
        p1_size=None if p1 is None else len(p1),
        p2_size=None if p2 is None else len(p2),
        q_size=None if q is None else len(q),
        result_size=len(entries),
    ))
    vb = VarBinding(var=var, index_bound=True)
    for e in entries:
        vb.by_sid.setdefault(e.sid, []).append(e)
    return vb


def _word_seq_spans(bundle: IndexBundle, tokens: tuple[str, ...]) -> list[tuple[int, int, int]]:
    """(sid, start, end) occurrences of a literal token sequence."""
    if not tokens:
        return []
    first = bundle.word.lookup(tokens[0])
    later = [
        {(e.sid, e.tid) for e in bundle.word.lookup(tok)} for tok in tokens[1:]
    ]
    out = []
    for e in first:
        if all((e.sid, e.tid + k + 1) in keys for k, keys in enumerate(later)):
            out.append((e.sid, e.tid, e.tid + len(tokens) - 1))
    return out
