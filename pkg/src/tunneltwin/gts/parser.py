"""Parser for the flat controller spec format (``.gts``).

Keywords: automaton, disc bool, input bool, cont, der, uncontrollable,
controllable, location, initial, edge, when, do, goto, end.  Expressions
use and/or/not, =, !=, >= and := with true/false literals and decimal
reals for timer bounds.  ``//`` starts a line comment.  Dotted names
reference another automaton's locations, variables or events.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .model import (
    Assignment,
    AssignToInput,
    Automaton,
    BinOp,
    Edge,
    Expr,
    GtsParseError,
    GtsSpec,
    Lit,
    Not,
    Num,
    Ref,
    UndeclaredIdentifier,
)

KEYWORDS = {
    "automaton", "disc", "bool", "input", "cont", "der", "uncontrollable",
    "controllable", "location", "initial", "edge", "when", "do", "goto",
    "end", "and", "or", "not", "true", "false",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*)
  | (?P<number>\d+\.\d+|\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)
  | (?P<op>:=|!=|>=|[=:;,()])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "name" | "number" | "op" | "kw" | "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line = 1
    line_start = 0
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match:
            col = pos - line_start + 1
            raise GtsParseError(f"unexpected character {text[pos]!r}", line, col)
        group = match.lastgroup
        value = match.group()
        col = pos - line_start + 1
        if group == "ws" or group == "comment":
            pass
        elif group == "number":
            tokens.append(Token("number", value, line, col))
        elif group == "name":
            kind = "kw" if value in KEYWORDS else "name"
            tokens.append(Token(kind, value, line, col))
        else:
            tokens.append(Token("op", value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = match.end()
    tokens.append(Token("eof", "", line, 1))
    return tokens


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        self.edge_counter = 0

    # -- token helpers ------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text or kind
            raise GtsParseError(f"expected {want!r}, found {tok.text!r}", tok.line, tok.col)
        return self.next()

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        tok = self.peek()
        if tok.kind == kind and (text is None or tok.text == text):
            return self.next()
        return None

    # -- grammar -------------------------------------------------------

    def parse_spec(self) -> GtsSpec:
        spec = GtsSpec()
        while self.peek().kind != "eof":
            spec.automata.append(self.parse_automaton())
        if not spec.automata:
            tok = self.peek()
            raise GtsParseError("no automaton declared", tok.line, tok.col)
        return spec

    def parse_automaton(self) -> Automaton:
        self.expect("kw", "automaton")
        name_tok = self.expect("name")
        self.expect("op", ":")
        aut = Automaton(name=name_tok.text)
        anon_count = 0
        explicit_initial = False
        while True:
            tok = self.peek()
            if tok.kind == "kw" and tok.text == "end":
                self.next()
                break
            if tok.kind == "kw" and tok.text in ("disc", "input", "cont",
                                                 "uncontrollable", "controllable"):
                self.parse_declaration(aut)
            elif tok.kind == "kw" and tok.text == "location":
                anon_count, marked = self.parse_location(aut, anon_count)
                explicit_initial = explicit_initial or marked
            else:
                raise GtsParseError(
                    f"expected declaration, location or 'end', found {tok.text!r}",
                    tok.line, tok.col,
                )
        if not aut.locations:
            raise GtsParseError(f"automaton {aut.name} has no location",
                                name_tok.line, name_tok.col)
        if not explicit_initial:
            # First location is initial when none is flagged.
            aut.initial_location = aut.locations[0]
        return aut

    def parse_declaration(self, aut: Automaton) -> None:
        tok = self.next()
        if tok.text == "disc":
            self.expect("kw", "bool")
            while True:
                name = self.expect("name")
                init = False
                if self.accept("op", "="):
                    lit = self.expect("kw")
                    if lit.text not in ("true", "false"):
                        raise GtsParseError("expected true or false", lit.line, lit.col)
                    init = lit.text == "true"
                self._declare(aut, name, "discrete Boolean")
                aut.disc_bools[name.text] = init
                if not self.accept("op", ","):
                    break
            self.expect("op", ";")
        elif tok.text == "input":
            self.expect("kw", "bool")
            for name in self.parse_name_list():
                self._declare(aut, name, "input Boolean")
                aut.input_bools.append(name.text)
        elif tok.text == "cont":
            name = self.expect("name")
            self._declare(aut, name, "timer")
            self.expect("kw", "der")
            rate = self.expect("number")
            if float(rate.text) != 1.0:
                raise GtsParseError("timers support rate 1 only", rate.line, rate.col)
            aut.timers.append(name.text)
            self.expect("op", ";")
        else:  # uncontrollable | controllable
            for name in self.parse_name_list():
                self._declare(aut, name, "event")
                aut.events[name.text] = tok.text

    def parse_name_list(self) -> List[Token]:
        names = [self.expect("name")]
        while self.accept("op", ","):
            names.append(self.expect("name"))
        self.expect("op", ";")
        return names

    def _declare(self, aut: Automaton, name: Token, what: str) -> None:
        if "." in name.text:
            raise GtsParseError(f"{what} name may not contain '.'", name.line, name.col)
        taken = (name.text in aut.disc_bools or name.text in aut.input_bools
                 or name.text in aut.timers or name.text in aut.events
                 or name.text in aut.locations)
        if taken:
            raise GtsParseError(f"duplicate declaration of {name.text!r}",
                                name.line, name.col)

    def parse_location(self, aut: Automaton, anon_count: int) -> Tuple[int, bool]:
        self.expect("kw", "location")
        name_tok = self.accept("name")
        if name_tok is not None:
            loc_name = name_tok.text
            if "." in loc_name:
                raise GtsParseError("location name may not contain '.'",
                                    name_tok.line, name_tok.col)
        else:
            loc_name = f"_loc{anon_count}"
            anon_count += 1
        self.expect("op", ":")
        if loc_name in aut.locations:
            tok = self.peek()
            raise GtsParseError(f"duplicate location {loc_name!r}", tok.line, tok.col)
        aut.locations.append(loc_name)
        marked_initial = False
        while True:
            tok = self.peek()
            if tok.kind == "kw" and tok.text == "initial":
                self.next()
                self.expect("op", ";")
                if aut.initial_location:
                    raise GtsParseError(
                        f"automaton {aut.name} has more than one initial location",
                        tok.line, tok.col,
                    )
                aut.initial_location = loc_name
                marked_initial = True
            elif tok.kind == "kw" and tok.text == "edge":
                aut.edges.append(self.parse_edge(aut, loc_name))
            else:
                break
        return anon_count, marked_initial

    def parse_edge(self, aut: Automaton, location: str) -> Edge:
        edge_tok = self.expect("kw", "edge")
        event_path: Optional[str] = None
        tok = self.peek()
        if tok.kind == "name":
            event_path = self.next().text
        guard: Optional[Expr] = None
        if self.accept("kw", "when"):
            guard = self.parse_expr()
        updates: List[Assignment] = []
        if self.accept("kw", "do"):
            while True:
                target = self.expect("name")
                self.expect("op", ":=")
                expr = self.parse_expr()
                updates.append(Assignment(("unresolved", aut.name, target.text),
                                          expr, target.line))
                if not self.accept("op", ","):
                    break
        goto: Optional[str] = None
        if self.accept("kw", "goto"):
            goto = self.expect("name").text
        self.expect("op", ";")
        if event_path is None and guard is None and not updates and goto is None:
            raise GtsParseError("empty edge", edge_tok.line, edge_tok.col)
        self.edge_counter += 1
        # The event is kept as an unresolved (path, "") pair until resolution.
        event = (event_path, "") if event_path is not None else None
        return Edge(
            owner=aut.name,
            location=location,
            event=event,
            guard=guard,
            updates=updates,
            goto=goto,
            line=edge_tok.line,
            decl_index=self.edge_counter,
        )

    # -- expressions ------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while True:
            tok = self.accept("kw", "or")
            if not tok:
                return left
            right = self.parse_and()
            left = BinOp(tok.line, tok.col, "or", left, right)

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while True:
            tok = self.accept("kw", "and")
            if not tok:
                return left
            right = self.parse_not()
            left = BinOp(tok.line, tok.col, "and", left, right)

    def parse_not(self) -> Expr:
        tok = self.accept("kw", "not")
        if tok:
            return Not(tok.line, tok.col, self.parse_not())
        return self.parse_cmp()

    def parse_cmp(self) -> Expr:
        left = self.parse_primary()
        tok = self.peek()
        if tok.kind == "op" and tok.text in ("=", "!=", ">="):
            self.next()
            right = self.parse_primary()
            return BinOp(tok.line, tok.col, tok.text, left, right)
        return left

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "kw" and tok.text in ("true", "false"):
            self.next()
            return Lit(tok.line, tok.col, tok.text == "true")
        if tok.kind == "kw" and tok.text == "not":
            self.next()
            return Not(tok.line, tok.col, self.parse_not())
        if tok.kind == "number":
            self.next()
            return Num(tok.line, tok.col, float(tok.text))
        if tok.kind == "name":
            self.next()
            return Ref(tok.line, tok.col, tok.text)
        if tok.kind == "op" and tok.text == "(":
            self.next()
            expr = self.parse_expr()
            self.expect("op", ")")
            return expr
        raise GtsParseError(f"expected expression, found {tok.text!r}", tok.line, tok.col)


# -- resolution -------------------------------------------------------------


class _Resolver:
    def __init__(self, spec: GtsSpec):
        self.spec = spec
        self.by_name = {aut.name: aut for aut in spec.automata}

    def resolve(self) -> None:
        for aut in self.spec.automata:
            for edge in aut.edges:
                self.resolve_edge(aut, edge)

    def split_path(self, path: str, line: int, col: int) -> Tuple[Automaton, str]:
        """Automaton-name prefix (may itself be dotted) plus one member name."""
        prefix, _, member = path.rpartition(".")
        if prefix in self.by_name:
            return self.by_name[prefix], member
        raise UndeclaredIdentifier(f"unknown reference {path!r}", line, col)

    def resolve_edge(self, aut: Automaton, edge: Edge) -> None:
        if edge.event is not None:
            path = edge.event[0]
            if "." in path:
                owner, member = self.split_path(path, edge.line, 0)
                if member not in owner.events:
                    raise UndeclaredIdentifier(
                        f"automaton {owner.name} declares no event {member!r}", edge.line, 0
                    )
                edge.event = (owner.name, member)
            else:
                if path not in aut.events:
                    raise UndeclaredIdentifier(
                        f"automaton {aut.name} declares no event {path!r}", edge.line, 0
                    )
                edge.event = (aut.name, path)
        if edge.guard is not None:
            self.resolve_expr(aut, edge.guard)
            self.require_bool(edge.guard)
        for update in edge.updates:
            _, owner_name, target = update.target
            if target in aut.input_bools:
                raise AssignToInput(f"input Boolean {target!r} is read-only", update.line)
            if target in aut.disc_bools:
                update.target = ("disc", aut.name, target)
                self.resolve_expr(aut, update.expr)
                self.require_bool(update.expr)
            elif target in aut.timers:
                update.target = ("timer", aut.name, target)
                if not isinstance(update.expr, Num):
                    raise GtsParseError(
                        f"timer {target!r} may only be assigned a literal", update.line, 0
                    )
            else:
                raise UndeclaredIdentifier(
                    f"{target!r} is not a variable of automaton {aut.name}", update.line, 0
                )
        if edge.goto is not None and edge.goto not in aut.locations:
            raise UndeclaredIdentifier(
                f"automaton {aut.name} has no location {edge.goto!r}", edge.line, 0
            )

    def resolve_expr(self, aut: Automaton, expr: Expr) -> None:
        if isinstance(expr, (Lit, Num)):
            return
        if isinstance(expr, Not):
            self.resolve_expr(aut, expr.operand)
            self.require_bool(expr.operand)
            return
        if isinstance(expr, BinOp):
            self.resolve_expr(aut, expr.left)
            self.resolve_expr(aut, expr.right)
            if expr.op == ">=":
                if not (isinstance(expr.left, Ref) and expr.left.binding
                        and expr.left.binding[0] == "timer"):
                    raise GtsParseError("'>=' compares a timer with a literal",
                                        expr.line, expr.col)
                if not isinstance(expr.right, Num):
                    raise GtsParseError("'>=' needs a numeric bound", expr.line, expr.col)
            elif expr.op in ("and", "or", "=", "!="):
                self.require_bool(expr.left)
                self.require_bool(expr.right)
            return
        if isinstance(expr, Ref):
            expr.binding = self.bind_ref(aut, expr)
            return
        raise GtsParseError(f"unsupported expression {expr!r}", expr.line, expr.col)

    def bind_ref(self, aut: Automaton, ref: Ref) -> Tuple[str, str, str]:
        path = ref.path
        if "." not in path:
            if path in aut.disc_bools:
                return ("disc", aut.name, path)
            if path in aut.input_bools:
                return ("input", aut.name, path)
            if path in aut.timers:
                return ("timer", aut.name, path)
            if path in aut.locations:
                return ("loc", aut.name, path)
            raise UndeclaredIdentifier(f"undeclared identifier {path!r}",
                                       ref.line, ref.col)
        owner, member = self.split_path(path, ref.line, ref.col)
        if member in owner.locations:
            return ("loc", owner.name, member)
        if member in owner.disc_bools:
            return ("disc", owner.name, member)
        if member in owner.input_bools:
            return ("input", owner.name, member)
        if member in owner.timers:
            return ("timer", owner.name, member)
        raise UndeclaredIdentifier(
            f"automaton {owner.name} declares no {member!r}", ref.line, ref.col
        )

    def require_bool(self, expr: Expr) -> None:
        if isinstance(expr, Num):
            raise GtsParseError("number used where a Boolean is required",
                                expr.line, expr.col)
        if isinstance(expr, Ref) and expr.binding and expr.binding[0] == "timer":
            raise GtsParseError("timer used where a Boolean is required",
                                expr.line, expr.col)


def parse_gts(text: str) -> GtsSpec:
    """Parse and resolve a controller spec; errors carry line/column."""
    spec = _Parser(tokenize(text)).parse_spec()
    for aut in spec.automata:
        if not aut.initial_location:
            raise GtsParseError(f"automaton {aut.name} has no initial location")
    _Resolver(spec).resolve()
    return spec
