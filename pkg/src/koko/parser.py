"""Hand-written lexer and recursive-descent parser for query text.

Every diagnostic carries a line/column pair. The accepted surface covers
node and span definitions inside a ``/ROOT:{...}`` block, ``in``/``eq``
constraints, weighted satisfying clauses with a threshold, and an
excluding clause. ``~`` is an alias for ``similarTo`` and node conditions
are accepted with or without the leading ``@`` (canonical form has it).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import KokoSyntaxError
from .syntax import (
    Constraint,
    ElasticAtom,
    NodeCondition,
    PathAtom,
    PathExpr,
    Query,
    SatCondition,
    SatisfyingClause,
    SpanAtom,
    Step,
    SubtreeAtom,
    TokensAtom,
    VarAtom,
    VarDef,
    WeightedCondition,
)
from .textutil import compile_pattern

KEYWORDS = {
    "extract", "from", "if", "satisfying", "with", "threshold", "excluding",
    "in", "eq", "or", "near", "str", "dict", "subtree", "contains",
    "mentions", "matches",
}

_NODE_CONDITION_KEYS = {"regex", "pos", "etype", "text"}
_ELASTIC_CONDITION_KEYS = {"regex", "etype", "min", "max"}


@dataclass(frozen=True)
class Tok:
    kind: str  # ident | string | number | op | eof
    value: str
    line: int
    col: int


_TWO_CHAR_OPS = ("//", "[[", "]]")
_ONE_CHAR_OPS = set("(){}[]:,=+^/*@~.<>")


def _lex(text: str) -> list[Tok]:
    toks: list[Tok] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch == '"':
            i += 1
            col += 1
            buf: list[str] = []
            while i < n and text[i] != '"':
                c = text[i]
                if c == "\n":
                    raise KokoSyntaxError("unterminated string literal", start_line, start_col)
                if c == "\\" and i + 1 < n:
                    nxt = text[i + 1]
                    if nxt in ('"', "\\"):
                        buf.append(nxt)
                    else:
                        # Lenient passthrough keeps regex escapes readable.
                        buf.append(c)
                        buf.append(nxt)
                    i += 2
                    col += 2
                    continue
                buf.append(c)
                i += 1
                col += 1
            if i >= n:
                raise KokoSyntaxError("unterminated string literal", start_line, start_col)
            i += 1
            col += 1
            toks.append(Tok("string", "".join(buf), start_line, start_col))
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            toks.append(Tok("number", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(Tok("ident", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        two = text[i : i + 2]
        if two in _TWO_CHAR_OPS:
            toks.append(Tok("op", two, start_line, start_col))
            i += 2
            col += 2
            continue
        if ch in _ONE_CHAR_OPS:
            toks.append(Tok("op", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        raise KokoSyntaxError(f"unexpected character {ch!r}", line, col)
    toks.append(Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.pos = 0

    # -- token plumbing ---------------------------------------------------

    def peek(self, offset: int = 0) -> Tok:
        return self.toks[min(self.pos + offset, len(self.toks) - 1)]

    def next(self) -> Tok:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Tok | None = None) -> KokoSyntaxError:
        tok = tok or self.peek()
        return KokoSyntaxError(message, tok.line, tok.col)

    def expect_op(self, value: str) -> Tok:
        tok = self.next()
        if tok.kind != "op" or tok.value != value:
            raise self.error(f"expected {value!r}, found {tok.value or 'end of input'!r}", tok)
        return tok

    def expect_kw(self, word: str) -> Tok:
        tok = self.next()
        if tok.kind != "ident" or tok.value != word:
            raise self.error(f"expected keyword {word!r}, found {tok.value or 'end of input'!r}", tok)
        return tok

    def expect_ident(self, what: str = "identifier") -> Tok:
        tok = self.next()
        if tok.kind != "ident":
            raise self.error(f"expected {what}, found {tok.value or 'end of input'!r}", tok)
        if tok.value in KEYWORDS or self._is_similar_kw(tok.value):
            raise self.error(f"{tok.value!r} is a reserved word", tok)
        return tok

    def expect_string(self, what: str = "string literal") -> Tok:
        tok = self.next()
        if tok.kind != "string":
            raise self.error(f"expected {what}", tok)
        return tok

    def expect_number(self, what: str = "number") -> float:
        tok = self.next()
        if tok.kind != "number":
            raise self.error(f"expected {what}", tok)
        return float(tok.value)

    @staticmethod
    def _is_similar_kw(word: str) -> bool:
        return word.lower() == "similarto"

    def at_op(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.value == value

    def at_kw(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.value == word

    # -- grammar ----------------------------------------------------------

    def parse_query(self) -> Query:
        self.expect_kw("extract")
        outputs = self._outputs()
        self.expect_kw("from")
        source = self._source()
        self.expect_kw("if")
        self.expect_op("(")
        defs, constraints = self._if_body()
        self.expect_op(")")
        satisfying: list[SatisfyingClause] = []
        while self.at_kw("satisfying"):
            satisfying.append(self._satisfying())
        excluding: tuple[SatCondition, ...] = ()
        if self.at_kw("excluding"):
            self.next()
            excluding = tuple(c for c, _ in self._condition_disjunction(weights=False))
        tok = self.peek()
        if tok.kind != "eof":
            raise self.error(f"unexpected trailing input {tok.value!r}", tok)
        query = Query(
            outputs=tuple(outputs),
            source=source,
            defs=tuple(defs),
            constraints=tuple(constraints),
            satisfying=tuple(satisfying),
            excluding=excluding,
        )
        self._validate(query)
        return query

    def _outputs(self) -> list[tuple[str, str]]:
        outs = [self._one_output()]
        while self.at_op(","):
            self.next()
            outs.append(self._one_output())
        return outs

    def _one_output(self) -> tuple[str, str]:
        name = self.expect_ident("output variable")
        self.expect_op(":")
        typ = self.next()
        if typ.kind != "ident":
            raise self.error("expected output type", typ)
        return name.value, typ.value

    def _source(self) -> str:
        tok = self.peek()
        if tok.kind == "string":
            self.next()
            return '"' + tok.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
        if tok.kind == "op" and tok.value == "<":
            self.next()
            name = self.next()
            if name.kind != "ident":
                raise self.error("expected placeholder name after '<'", name)
            self.expect_op(">")
            return f"<{name.value}>"
        if tok.kind == "ident":
            parts = [self.next().value]
            while self.at_op(".") and self.peek(1).kind == "ident":
                self.next()
                parts.append(self.next().value)
            return ".".join(parts)
        raise self.error("expected corpus reference after 'from'", tok)

    def _if_body(self) -> tuple[list[VarDef], list[Constraint]]:
        defs: list[VarDef] = []
        constraints: list[Constraint] = []
        while True:
            if self.at_op("/") and self.peek(1).kind == "ident" and self.peek(1).value == "ROOT":
                self.next()
                self.next()
                self.expect_op(":")
                self.expect_op("{")
                defs.extend(self._definitions())
                self.expect_op("}")
            elif self.at_op("("):
                constraints.append(self._constraint())
            else:
                break
        return defs, constraints

    def _definitions(self) -> list[VarDef]:
        defs: list[VarDef] = []
        if self.at_op("}"):
            return defs
        while True:
            name = self.expect_ident("variable name")
            self.expect_op("=")
            atoms = self._span_expr()
            defs.append(VarDef(name=name.value, atoms=tuple(atoms)))
            if self.at_op(","):
                self.next()
                continue
            break
        return defs

    def _constraint(self) -> Constraint:
        self.expect_op("(")
        left = self._span_expr()
        self.expect_op(")")
        op_tok = self.next()
        if op_tok.kind != "ident" or op_tok.value not in ("in", "eq"):
            raise self.error("expected 'in' or 'eq' between constraint operands", op_tok)
        self.expect_op("(")
        right = self._span_expr()
        self.expect_op(")")
        if len(right) != 1 or not isinstance(right[0], VarAtom):
            raise self.error(
                f"right side of '{op_tok.value}' must be a single variable", op_tok
            )
        return Constraint(op=op_tok.value, left=tuple(left), right=right[0].name)

    def _span_expr(self) -> list[SpanAtom]:
        atoms = self._atom()
        while self.at_op("+"):
            self.next()
            atoms.extend(self._atom())
        return atoms

    def _atom(self) -> list[SpanAtom]:
        tok = self.peek()
        if tok.kind == "op" and tok.value == "(":
            self.next()
            inner = self._span_expr()
            self.expect_op(")")
            return inner
        if tok.kind == "op" and tok.value == "^":
            self.next()
            return [self._elastic()]
        if tok.kind == "string":
            self.next()
            return [TokensAtom(tok.value)]
        if tok.kind == "op" and tok.value in ("/", "//"):
            return [PathAtom(self._path(base=None))]
        if tok.kind == "ident":
            if tok.value in KEYWORDS or self._is_similar_kw(tok.value):
                raise self.error(f"{tok.value!r} is a reserved word", tok)
            self.next()
            if self.at_op(".") and self.peek(1).kind == "ident" and self.peek(1).value == "subtree":
                self.next()
                self.next()
                return [SubtreeAtom(tok.value)]
            if self.at_op("/") or self.at_op("//"):
                return [PathAtom(self._path(base=tok.value))]
            return [VarAtom(tok.value)]
        raise self.error(f"expected a span atom, found {tok.value or 'end of input'!r}", tok)

    def _path(self, base: str | None) -> PathExpr:
        steps: list[Step] = []
        while self.at_op("/") or self.at_op("//"):
            axis = self.next().value
            label_tok = self.next()
            if label_tok.kind == "string":
                kind, label = "word", label_tok.value
            elif label_tok.kind == "op" and label_tok.value == "*":
                kind, label = "wild", "*"
            elif label_tok.kind == "ident":
                kind, label = "name", label_tok.value
            else:
                raise self.error("expected a label, quoted token or '*' after axis", label_tok)
            conditions: tuple[NodeCondition, ...] = ()
            if self.at_op("["):
                conditions = tuple(self._conditions(_NODE_CONDITION_KEYS))
            if kind == "word" and any(c.key == "text" for c in conditions):
                raise self.error("a quoted token step cannot also carry a @text condition", label_tok)
            for c in conditions:
                if c.key == "regex":
                    compile_pattern(c.value)
            steps.append(Step(axis=axis, label=label, kind=kind, conditions=conditions))
        if not steps:
            raise self.error("empty path expression")
        return PathExpr(base=base, steps=tuple(steps))

    def _conditions(self, allowed: set[str]) -> list[NodeCondition]:
        self.expect_op("[")
        out: list[NodeCondition] = []
        while True:
            if self.at_op("@"):
                self.next()
            key_tok = self.next()
            if key_tok.kind != "ident" or key_tok.value not in allowed:
                raise self.error(
                    f"unknown condition key {key_tok.value!r}; expected one of "
                    + ", ".join(sorted(allowed)),
                    key_tok,
                )
            self.expect_op("=")
            if key_tok.value in ("min", "max"):
                num = self.expect_number("token count")
                if num != int(num) or num < 0:
                    raise self.error(f"@{key_tok.value} must be a non-negative integer", key_tok)
                out.append(NodeCondition(key_tok.value, str(int(num))))
            else:
                val = self.expect_string(f"value for @{key_tok.value}")
                out.append(NodeCondition(key_tok.value, val.value))
            if self.at_op(","):
                self.next()
                continue
            self.expect_op("]")
            break
        return out

    def _elastic(self) -> ElasticAtom:
        regex = min_tokens = max_tokens = etype = None
        if self.at_op("["):
            start = self.peek()
            for cond in self._conditions(_ELASTIC_CONDITION_KEYS):
                if cond.key == "regex":
                    compile_pattern(cond.value)
                    regex = cond.value
                elif cond.key == "etype":
                    etype = cond.value
                elif cond.key == "min":
                    min_tokens = int(cond.value)
                else:
                    max_tokens = int(cond.value)
            if min_tokens is not None and max_tokens is not None and min_tokens > max_tokens:
                raise self.error("@min cannot exceed @max on an elastic span", start)
        return ElasticAtom(regex=regex, min_tokens=min_tokens, max_tokens=max_tokens, etype=etype)

    def _satisfying(self) -> SatisfyingClause:
        self.expect_kw("satisfying")
        var = self.expect_ident("variable name after 'satisfying'")
        conditions = self._condition_disjunction(weights=True)
        if not self.at_kw("with"):
            raise self.error("satisfying clause requires 'with threshold <number>'")
        self.next()
        self.expect_kw("threshold")
        threshold = self.expect_number("threshold")
        if threshold < 0:
            raise self.error("threshold must be non-negative")
        return SatisfyingClause(
            var=var.value,
            conditions=tuple(WeightedCondition(c, w) for c, w in conditions),
            threshold=threshold,
        )

    def _condition_disjunction(self, weights: bool) -> list[tuple[SatCondition, float]]:
        out = [self._one_condition(weights)]
        while self.at_kw("or"):
            self.next()
            out.append(self._one_condition(weights))
        return out

    def _one_condition(self, weights: bool) -> tuple[SatCondition, float]:
        self.expect_op("(")
        cond = self._condition_body()
        weight = 1.0
        if self.at_op("{"):
            open_tok = self.next()
            if not weights:
                raise self.error("excluding conditions take no weight", open_tok)
            weight = self.expect_number("weight")
            self.expect_op("}")
            if not 0.0 <= weight <= 1.0:
                raise self.error("weight must lie in [0, 1]", open_tok)
        self.expect_op(")")
        return cond, weight

    def _condition_body(self) -> SatCondition:
        tok = self.peek()
        if tok.kind == "ident" and tok.value == "str":
            self.next()
            self.expect_op("(")
            var = self.expect_ident("variable inside str(...)")
            self.expect_op(")")
            return self._str_condition(var.value)
        if tok.kind == "string":
            self.next()
            var = self.expect_ident("variable after literal")
            return SatCondition("preceded_by", var.value, tok.value)
        if tok.kind == "op" and tok.value == "[[":
            phrase = self._descriptor_phrase()
            var = self.expect_ident("variable after descriptor")
            return SatCondition("desc_left", var.value, phrase)
        if tok.kind == "ident":
            var = self.expect_ident("variable")
            return self._var_condition(var.value)
        raise self.error("expected a condition", tok)

    def _str_condition(self, var: str) -> SatCondition:
        op = self.next()
        if op.kind == "op" and op.value == "~":
            phrase = self.expect_string("phrase after '~'")
            return SatCondition("similar_to", var, phrase.value)
        if op.kind != "ident":
            raise self.error("expected condition operator after str(...)", op)
        if self._is_similar_kw(op.value):
            phrase = self.expect_string("phrase after similarTo")
            return SatCondition("similar_to", var, phrase.value)
        if op.value in ("contains", "mentions", "matches"):
            lit = self.expect_string(f"literal after {op.value}")
            if op.value == "matches":
                compile_pattern(lit.value)
            kind = {"contains": "contains", "mentions": "mentions", "matches": "matches"}[op.value]
            return SatCondition(kind, var, lit.value)
        if op.value == "in":
            self.expect_kw("dict")
            self.expect_op("(")
            name = self.expect_string("dictionary name")
            self.expect_op(")")
            return SatCondition("in_dict", var, name.value)
        raise self.error(f"unknown string condition {op.value!r}", op)

    def _var_condition(self, var: str) -> SatCondition:
        tok = self.peek()
        if tok.kind == "op" and tok.value == "~":
            self.next()
            phrase = self.expect_string("phrase after '~'")
            return SatCondition("similar_to", var, phrase.value)
        if tok.kind == "ident" and self._is_similar_kw(tok.value):
            self.next()
            phrase = self.expect_string("phrase after similarTo")
            return SatCondition("similar_to", var, phrase.value)
        if tok.kind == "ident" and tok.value == "near":
            self.next()
            lit = self.expect_string("literal after near")
            return SatCondition("near", var, lit.value)
        if tok.kind == "string":
            self.next()
            return SatCondition("followed_by", var, tok.value)
        if tok.kind == "op" and tok.value == "[[":
            phrase = self._descriptor_phrase()
            return SatCondition("desc_right", var, phrase)
        raise self.error("expected a condition operator after variable", tok)

    def _descriptor_phrase(self) -> str:
        self.expect_op("[[")
        phrase = self.expect_string("descriptor phrase")
        if not phrase.value.split():
            raise self.error("descriptor phrase must contain at least one word", phrase)
        self.expect_op("]]")
        return phrase.value

    # -- semantic validation ----------------------------------------------

    def _validate(self, q: Query) -> None:
        seen_outputs: set[str] = set()
        for name, _typ in q.outputs:
            if name in seen_outputs:
                raise KokoSyntaxError(f"duplicate output variable {name!r}", 1, 1)
            seen_outputs.add(name)
        defined: set[str] = set()
        entity_outputs = {n for n, t in q.outputs if t != "Str"}
        for d in q.defs:
            if d.name in defined:
                raise KokoSyntaxError(f"variable {d.name!r} defined twice", 1, 1)
            if d.name in entity_outputs:
                raise KokoSyntaxError(
                    f"entity-typed output {d.name!r} is bound by the entity index "
                    "and cannot also be defined",
                    1, 1,
                )
            for atom in d.atoms:
                self._check_atom_vars(atom, defined | entity_outputs, d.name)
            defined.add(d.name)
        declared = defined | {n for n, _ in q.outputs}
        for c in q.constraints:
            for atom in c.left:
                self._check_atom_vars(atom, declared, None)
            if c.right not in declared:
                raise KokoSyntaxError(f"constraint references undeclared variable {c.right!r}", 1, 1)
        clause_vars: set[str] = set()
        for clause in q.satisfying:
            if clause.var not in declared:
                raise KokoSyntaxError(
                    f"satisfying clause references undeclared variable {clause.var!r}", 1, 1
                )
            if clause.var in clause_vars:
                raise KokoSyntaxError(
                    f"variable {clause.var!r} has more than one satisfying clause", 1, 1
                )
            clause_vars.add(clause.var)
            for wc in clause.conditions:
                if wc.condition.var not in declared:
                    raise KokoSyntaxError(
                        f"condition references undeclared variable {wc.condition.var!r}", 1, 1
                    )
        for cond in q.excluding:
            if cond.var not in declared:
                raise KokoSyntaxError(
                    f"excluding condition references undeclared variable {cond.var!r}", 1, 1
                )

    @staticmethod
    def _check_atom_vars(atom: SpanAtom, known: set[str], target: str | None) -> None:
        def fail(name: str) -> None:
            raise KokoSyntaxError(
                f"variable {name!r} is used before it is defined"
                + (f" (in definition of {target!r})" if target else ""),
                1, 1,
            )

        if isinstance(atom, VarAtom) and atom.name not in known:
            fail(atom.name)
        if isinstance(atom, SubtreeAtom) and atom.var not in known:
            fail(atom.var)
        if isinstance(atom, PathAtom) and atom.path.base is not None and atom.path.base not in known:
            fail(atom.path.base)


def parse_query(text: str) -> Query:
    return _Parser(text).parse_query()
