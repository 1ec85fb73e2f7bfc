"""Query normalization: absolute paths, explicit constraints, synthesized
span variables.

After normalization every variable is one of: a node variable with a
ROOT-anchored path, an entity variable, an elastic variable, a literal
word-sequence variable, a subtree alias, or a composite built by a
horizontal condition. Relative path definitions contribute a parentOf
constraint (single child step) or an ancestorOf constraint (anything
deeper), and every horizontal condition contributes a leftOf chain over
its atoms. leftOf means x.end + 1 = y.start; elastic variables may bind
the empty gap between their neighbours.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .errors import KokoNormalizeError
from .syntax import (
    ElasticAtom,
    PathAtom,
    PathExpr,
    Query,
    SpanAtom,
    SubtreeAtom,
    TokensAtom,
    VarAtom,
    print_atom,
    print_path,
)
from .textutil import tokenize_literal

NODE = "node"
ENTITY = "entity"
ELASTIC = "elastic"
WORDSEQ = "words"
SUBTREE = "subtree"
COMPOSITE = "composite"

# The universal entity type: an output typed Entity accepts spans of every
# entity type, while any other type name selects that type exactly.
ANY_ENTITY = "Entity"


@dataclass(frozen=True)
class NormVar:
    name: str
    kind: str
    def_index: int
    synthesized: bool = False
    # Path intermediates synthesized for multi-step relative definitions;
    # hidden variables never affect output tuple multiplicity.
    hidden: bool = False
    path: PathExpr | None = None  # node
    etype: str | None = None  # entity
    elastic: ElasticAtom | None = None  # elastic
    tokens: tuple[str, ...] = ()  # words
    of: str | None = None  # subtree base
    atoms: tuple[str, ...] = ()  # composite members

    def describe(self) -> str:
        if self.kind == NODE:
            return f"node {print_path(self.path)}"
        if self.kind == ENTITY:
            return f"entity {self.etype}"
        if self.kind == ELASTIC:
            return "elastic " + print_atom(self.elastic)
        if self.kind == WORDSEQ:
            return "words " + " ".join(self.tokens)
        if self.kind == SUBTREE:
            return f"subtree({self.of})"
        return "composite " + " + ".join(self.atoms)


@dataclass(frozen=True)
class NormConstraint:
    kind: str  # parentOf | ancestorOf | leftOf | in | eq
    a: str
    b: str

    def describe(self) -> str:
        if self.kind in ("in", "eq"):
            return f"({self.a}) {self.kind} ({self.b})"
        return f"({self.a} {self.kind} {self.b})"


@dataclass(frozen=True)
class HorizontalCondition:
    lhs: str
    atoms: tuple[str, ...]


@dataclass
class NormalizedQuery:
    query: Query
    variables: dict[str, NormVar] = field(default_factory=dict)
    horizontal: tuple[HorizontalCondition, ...] = ()
    constraints: tuple[NormConstraint, ...] = ()

    @property
    def order(self) -> list[str]:
        return list(self.variables)

    def node_vars(self) -> list[NormVar]:
        return [v for v in self.variables.values() if v.kind == NODE]

    def var(self, name: str) -> NormVar:
        return self.variables[name]

    def describe(self) -> str:
        lines = ["variables:"]
        for v in self.variables.values():
            lines.append(f"  {v.name}: {v.describe()}")
        lines.append("constraints:")
        if not self.constraints:
            lines.append("  (none)")
        for c in self.constraints:
            lines.append(f"  {c.describe()}")
        lines.append("horizontal:")
        if not self.horizontal:
            lines.append("  (none)")
        for h in self.horizontal:
            lines.append(f"  {h.lhs} = " + " + ".join(h.atoms))
        return "\n".join(lines) + "\n"


class _Normalizer:
    def __init__(self, q: Query):
        self.q = q
        self.variables: dict[str, NormVar] = {}
        self.constraints: list[NormConstraint] = []
        self.horizontal: list[HorizontalCondition] = []
        self.synth_count = 0
        self.step_count = 0

    def run(self) -> NormalizedQuery:
        q = self.q
        for name, typ in q.outputs:
            if typ != "Str":
                self._add(NormVar(name=name, kind=ENTITY, def_index=len(self.variables), etype=typ))
        for d in q.defs:
            self._definition(d.name, d.atoms)
        for c in q.constraints:
            left = self._operand(c.left)
            if c.right not in self.variables:
                raise KokoNormalizeError(f"constraint references unknown variable {c.right!r}")
            self.constraints.append(NormConstraint(c.op, left, c.right))
        for name, typ in q.outputs:
            if typ == "Str" and name not in self.variables:
                raise KokoNormalizeError(
                    f"output variable {name!r} of type Str has no definition"
                )
        for clause in q.satisfying:
            if clause.var not in self.variables:
                raise KokoNormalizeError(
                    f"satisfying clause references unbound variable {clause.var!r}"
                )
        return NormalizedQuery(
            query=q,
            variables=self.variables,
            horizontal=tuple(self.horizontal),
            constraints=tuple(self.constraints),
        )

    def _add(self, var: NormVar) -> NormVar:
        self.variables[var.name] = var
        return var

    def _synth_name(self) -> str:
        self.synth_count += 1
        return f"__v{self.synth_count}"

    def _synth_step_name(self) -> str:
        self.step_count += 1
        return f"__s{self.step_count}"

    def _definition(self, name: str, atoms: tuple[SpanAtom, ...]) -> None:
        if len(atoms) == 1:
            atom = atoms[0]
            if isinstance(atom, PathAtom):
                self._node_var(name, atom.path, synthesized=False)
                return
            if isinstance(atom, SubtreeAtom):
                self._subtree_var(name, atom.var, synthesized=False)
                return
            if isinstance(atom, TokensAtom):
                self._add(NormVar(
                    name=name, kind=WORDSEQ, def_index=len(self.variables),
                    tokens=tuple(tokenize_literal(atom.text)),
                ))
                return
            if isinstance(atom, ElasticAtom):
                self._add(NormVar(
                    name=name, kind=ELASTIC, def_index=len(self.variables), elastic=atom,
                ))
                return
        member_names = [self._atom_var(a) for a in atoms]
        self._add(NormVar(
            name=name, kind=COMPOSITE, def_index=len(self.variables),
            atoms=tuple(member_names),
        ))
        self.horizontal.append(HorizontalCondition(lhs=name, atoms=tuple(member_names)))
        for left, right in zip(member_names, member_names[1:]):
            self.constraints.append(NormConstraint("leftOf", left, right))

    def _operand(self, atoms: tuple[SpanAtom, ...]) -> str:
        """Variable naming the left side of an in/eq constraint."""
        if len(atoms) == 1 and isinstance(atoms[0], VarAtom):
            name = atoms[0].name
            if name not in self.variables:
                raise KokoNormalizeError(f"constraint references unknown variable {name!r}")
            return name
        name = self._synth_name()
        self._definition(name, atoms)
        self.variables[name] = dataclasses.replace(self.variables[name], synthesized=True)
        return name

    def _atom_var(self, atom: SpanAtom) -> str:
        if isinstance(atom, VarAtom):
            if atom.name not in self.variables:
                raise KokoNormalizeError(f"unknown variable {atom.name!r} in span composition")
            return atom.name
        name = self._synth_name()
        if isinstance(atom, PathAtom):
            self._node_var(name, atom.path, synthesized=True)
        elif isinstance(atom, SubtreeAtom):
            self._subtree_var(name, atom.var, synthesized=True)
        elif isinstance(atom, TokensAtom):
            self._add(NormVar(
                name=name, kind=WORDSEQ, def_index=len(self.variables), synthesized=True,
                tokens=tuple(tokenize_literal(atom.text)),
            ))
        else:
            self._add(NormVar(
                name=name, kind=ELASTIC, def_index=len(self.variables), synthesized=True,
                elastic=atom,
            ))
        return name

    def _node_var(self, name: str, path: PathExpr, synthesized: bool) -> None:
        if path.base is None:
            self._add(NormVar(
                name=name, kind=NODE, def_index=len(self.variables),
                synthesized=synthesized, path=path,
            ))
            return
        base = self.variables.get(path.base)
        if base is None:
            raise KokoNormalizeError(f"path base {path.base!r} cannot be resolved")
        if base.kind != NODE:
            raise KokoNormalizeError(
                f"path base {path.base!r} must be a node variable, it is {base.kind}"
            )
        # Each relative step becomes its own variable chained by a
        # parentOf/ancestorOf constraint, keeping the base-to-variable
        # distance semantics exact; intermediates stay hidden.
        prefix = base.path.steps
        current = path.base
        for i, step in enumerate(path.steps):
            last = i == len(path.steps) - 1
            var_name = name if last else self._synth_step_name()
            self._add(NormVar(
                name=var_name, kind=NODE, def_index=len(self.variables),
                synthesized=synthesized or not last, hidden=not last,
                path=PathExpr(base=None, steps=prefix + path.steps[: i + 1]),
            ))
            relation = "parentOf" if step.axis == "/" else "ancestorOf"
            self.constraints.append(NormConstraint(relation, current, var_name))
            current = var_name

    def _subtree_var(self, name: str, of: str, synthesized: bool) -> None:
        base = self.variables.get(of)
        if base is None or base.kind != NODE:
            raise KokoNormalizeError(f"subtree base {of!r} must be a defined node variable")
        self._add(NormVar(
            name=name, kind=SUBTREE, def_index=len(self.variables),
            synthesized=synthesized, of=of,
        ))


def normalize(q: Query | NormalizedQuery) -> NormalizedQuery:
    """Rewrite a parsed query into normalized form; idempotent."""
    if isinstance(q, NormalizedQuery):
        return q
    return _Normalizer(q).run()


def dedupe_hidden(n: NormalizedQuery, tuples: list) -> list:
    """Collapse tuples identical on every visible variable.

    Hidden path intermediates may have several realizations per visible
    binding; output multiplicity counts visible bindings only.
    """
    if not any(v.hidden for v in n.variables.values()):
        return tuples
    visible = [name for name, v in n.variables.items() if not v.hidden]
    seen: set = set()
    out = []
    for t in tuples:
        key = tuple(
            (name, t.bindings[name].start, t.bindings[name].end, t.bindings[name].tid)
            for name in visible
        )
        if key not in seen:
            seen.add(key)
            out.append(t)
    return out


def derived_constraints(n: NormalizedQuery) -> list[NormConstraint]:
    """Complete ordered constraint list the validation stage will check."""
    return list(n.constraints)
