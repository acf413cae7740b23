"""Tokenizer and clause parser for the knowledge-base surface syntax.

Clause forms (all terminated by ``.``)::

    H.                          fact
    H <- B1, ..., Bn.           rule
    name :: H <- B.             named rule
    name :: L[T] : TCs <- B.    goal rule (head literal with constraints)
    B1, ..., Bn => H1 ; H2.     integrity constraint (``false`` head allowed)
    B => R : TC1, TC2.          reactive constraint
    n1 > n2 <- B.               priority rule
    #directive arg ... .        directive

``%`` starts a line comment. Timed terms are written ``a[t]``, classical
negation ``¬f`` or ``~f``, and time variables ``τ12``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterator

from .constraints import Con
from .errors import ParseError
from .lp import IC, Lit, Rule
from .terms import AT, Fn, TVar, Var, make_add, neg, render

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<tvar>τ\d+)
  | (?P<int>\d+)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\]|\\.)*')
  | (?P<punct>::|<-|=>|<=|>=|=<|!=|\\=|≤|≥|≠|¬|~|\(|\)|\[|\]|,|\.|;|:|<|>|=|\+|-|\#|/)
    """,
    re.VERBOSE,
)

_REL_ALIASES = {"=<": "<=", "≤": "<=", "≥": ">=", "≠": "!=", "\\=": "!="}
RELS = {"<", "<=", ">", ">=", "=", "!=", "=<", "≤", "≥", "≠", "\\="}


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            out.append(Token(kind, tok, line, pos - line_start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


@dataclass(frozen=True)
class Directive:
    name: str
    args: tuple
    line: int = 0

    def __eq__(self, other):
        return isinstance(other, Directive) and (self.name, self.args) == (other.name, other.args)

    def __hash__(self):
        return hash((self.name, self.args))


@dataclass(frozen=True)
class GoalRule:
    """Named rule whose head is a timed literal plus constraints."""

    name: object
    literal: object
    time: object
    tc: tuple
    body: tuple
    line: int = 0

    def __eq__(self, other):
        return isinstance(other, GoalRule) and _k(self) == _k(other)

    def __hash__(self):
        return hash(_k(self))


@dataclass(frozen=True)
class Reactive:
    body: tuple
    reaction: Fn
    tc: tuple
    line: int = 0

    def __eq__(self, other):
        return isinstance(other, Reactive) and _k(self) == _k(other)

    def __hash__(self):
        return hash(_k(self))


@dataclass(frozen=True)
class Priority:
    higher: object
    lower: object
    body: tuple = ()
    name: object = None
    line: int = 0

    def __eq__(self, other):
        return isinstance(other, Priority) and _k(self) == _k(other)

    def __hash__(self):
        return hash(_k(self))


@dataclass(frozen=True)
class Constraint:
    con: Con
    line: int = 0

    def __eq__(self, other):
        return isinstance(other, Constraint) and self.con == other.con

    def __hash__(self):
        return hash(self.con)


@dataclass(frozen=True)
class Located:
    """A rule or IC with its source line."""

    item: object
    line: int = 0

    def __eq__(self, other):
        return isinstance(other, Located) and self.item == other.item

    def __hash__(self):
        return hash(self.item)


def _k(x):
    d = dict(x.__dict__)
    d.pop("line", None)
    return tuple(sorted(d.items(), key=lambda kv: kv[0]))


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self._anon = itertools.count(1)

    # ------------------------------------------------------------ helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, *texts) -> bool:
        t = self.tok
        return t.kind in ("punct",) and t.text in texts

    def at_name(self, text: str) -> bool:
        return self.tok.kind == "name" and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"unexpected {self.tok.text or 'end of input'!r}", [text])
        t = self.tok
        self.i += 1
        return t

    def error(self, msg: str, expected=()):
        raise ParseError(msg, self.tok.line, self.tok.col, expected)

    # -------------------------------------------------------------- items

    def clauses(self) -> Iterator[object]:
        while self.tok.kind != "eof":
            self._anon = itertools.count(1)
            yield self.clause()

    def clause(self):
        line = self.tok.line
        if self.at("#"):
            return self.directive()
        name = None
        # label ::
        save = self.i
        try:
            t = self.term()
            if self.at("::"):
                self.i += 1
                name = t
            else:
                self.i = save
        except ParseError:
            self.i = save
        first = self.items()
        if self.at("."):
            self.i += 1
            return self._single(first, name, (), line)
        if self.at("<-"):
            self.i += 1
            body = self.items()
            self.expect(".")
            return self._single(first, name, tuple(body), line)
        if self.at(":"):
            self.i += 1
            tc = self.items()
            body = ()
            if self.at("<-"):
                self.i += 1
                body = tuple(self.items())
            self.expect(".")
            if len(first) != 1 or not isinstance(first[0], Lit) or first[0].naf:
                raise ParseError("goal rule head must be a single literal", line)
            head = first[0].atom
            if not (head.name == AT and len(head.args) == 2):
                raise ParseError("goal rule head must be a timed literal L[T]", line)
            return GoalRule(name, head.args[0], head.args[1], tuple(tc), body, line)
        if self.at("=>"):
            self.i += 1
            return self._ic(tuple(first), line)
        self.error(f"unexpected {self.tok.text or 'end of input'!r}", [".", "<-", "=>", ":", ","])

    def _single(self, first: list, name, body: tuple, line: int):
        if len(first) != 1:
            raise ParseError("clause head must be a single atom", line)
        h = first[0]
        if isinstance(h, Con):
            if h.rel == ">" and isinstance(h.left, Fn) and isinstance(h.right, Fn):
                return Priority(h.left, h.right, body, name, line)
            if body or name is not None:
                raise ParseError("constraint cannot head a rule", line)
            return Constraint(h, line)
        if h.naf:
            raise ParseError("rule head cannot be negated by 'not'", line)
        if not isinstance(h.atom, Fn):
            raise ParseError("rule head must be an atom", line)
        return Located(Rule(h.atom, body, name), line)

    def _ic(self, body: tuple, line: int):
        heads = []
        if self.at_name("false"):
            self.i += 1
            self.expect(".")
            return Located(IC(body, ()), line)
        while True:
            item = self.item()
            if isinstance(item, Lit):
                if item.naf:
                    raise ParseError("integrity constraint head cannot use 'not'", line)
                item = item.atom
            heads.append(item)
            if self.at(":"):
                self.i += 1
                if len(heads) != 1 or isinstance(heads[0], Con):
                    raise ParseError("reactive constraint needs a single reaction atom", line)
                tc = self.items()
                self.expect(".")
                return Reactive(body, heads[0], tuple(tc), line)
            if self.at(";"):
                self.i += 1
                continue
            break
        self.expect(".")
        return Located(IC(body, tuple(heads)), line)

    def items(self) -> list:
        out = [self.item()]
        while self.at(","):
            self.i += 1
            out.append(self.item())
        return out

    def item(self):
        if self.at_name("not") and not (self.peek().kind == "punct" and self.peek().text == "("):
            self.i += 1
            return Lit(self.term(), True)
        left = self.expr()
        if self.tok.kind == "punct" and self.tok.text in RELS:
            rel = _REL_ALIASES.get(self.tok.text, self.tok.text)
            self.i += 1
            right = self.expr()
            return Con(rel, left, right)
        if not isinstance(left, Fn):
            self.error("expected an atom or a constraint", sorted(RELS))
        return Lit(left)

    def expr(self):
        t = self.term()
        while self.at("+", "-"):
            sign = 1 if self.tok.text == "+" else -1
            self.i += 1
            if self.tok.kind != "int":
                self.error("expected integer offset", ["<int>"])
            k = int(self.tok.text)
            self.i += 1
            t = make_add(t, sign * k)
        return t

    def term(self):
        t = self.tok
        if self.at("¬", "~"):
            self.i += 1
            return neg(self.term())
        if t.kind == "int":
            self.i += 1
            base = int(t.text)
        elif t.kind == "tvar":
            self.i += 1
            base = TVar(int(t.text[1:]))
        elif t.kind == "var":
            self.i += 1
            base = Var(f"_{next(self._anon)}") if t.text == "_" else Var(t.text)
        elif t.kind in ("name", "quoted"):
            self.i += 1
            name = t.text if t.kind == "name" else _unquote(t.text)
            args = ()
            if self.at("("):
                self.i += 1
                args = [self.expr()]
                while self.at(","):
                    self.i += 1
                    args.append(self.expr())
                self.expect(")")
            base = Fn(name, tuple(args))
        else:
            self.error(f"unexpected {t.text or 'end of input'!r}", ["<term>"])
        while self.at("["):
            self.i += 1
            when = self.expr()
            self.expect("]")
            base = Fn(AT, (base, when))
        return base

    def directive(self) -> Directive:
        line = self.expect("#").line
        if self.tok.kind != "name":
            self.error("expected directive name", ["<name>"])
        name = self.tok.text
        self.i += 1
        args = []
        while not self.at("."):
            if self.tok.kind == "eof":
                self.error("unterminated directive", ["."])
            t = self.term()
            if self.at("/"):
                self.i += 1
                if self.tok.kind != "int":
                    self.error("expected arity", ["<int>"])
                t = Fn("/", (t, int(self.tok.text)))
                self.i += 1
            args.append(t)
        self.expect(".")
        return Directive(name, tuple(args), line)


def _unquote(s: str) -> str:
    return re.sub(r"\\(.)", r"\1", s[1:-1])


def parse_clauses(text: str) -> list:
    return list(Parser(text).clauses())


def parse_rules(text: str) -> list:
    """Parse text containing only rules."""
    out = []
    for c in parse_clauses(text):
        if not isinstance(c, Located) or not isinstance(c.item, Rule):
            raise ParseError("expected a rule", getattr(c, "line", None))
        out.append(c.item)
    return out


def parse_term(text: str):
    p = Parser(text)
    t = p.expr()
    if p.tok.kind != "eof":
        p.error("trailing input", ["<end>"])
    return t


def parse_body(text: str) -> list:
    p = Parser(text)
    items = p.items()
    if p.tok.kind != "eof":
        p.error("trailing input", ["<end>"])
    return items


# ------------------------------------------------------------------ printing


def _item(x) -> str:
    if isinstance(x, Con):
        return f"{render(x.left)} {x.rel} {render(x.right)}"
    if isinstance(x, Lit):
        return ("not " if x.naf else "") + render(x.atom)
    return render(x)


def _name(n) -> str:
    return f"{render(n)} :: " if n is not None else ""


def print_clause(c) -> str:
    if isinstance(c, Directive):
        args = " ".join(
            f"{render(a.args[0])}/{a.args[1]}" if isinstance(a, Fn) and a.name == "/" else render(a) for a in c.args
        )
        return f"#{c.name}{' ' if args else ''}{args}."
    if isinstance(c, Located):
        c = c.item
    if isinstance(c, Rule):
        body = f" <- {', '.join(_item(b) for b in c.body)}" if c.body else ""
        return f"{_name(c.name)}{render(c.head)}{body}."
    if isinstance(c, IC):
        head = " ; ".join(_item(h) for h in c.head) if c.head else "false"
        return f"{', '.join(_item(b) for b in c.body)} => {head}."
    if isinstance(c, Reactive):
        tc = ", ".join(_item(x) for x in c.tc)
        return f"{', '.join(_item(b) for b in c.body)} => {render(c.reaction)} : {tc}."
    if isinstance(c, Priority):
        body = f" <- {', '.join(_item(b) for b in c.body)}" if c.body else ""
        return f"{_name(c.name)}{render(c.higher)} > {render(c.lower)}{body}."
    if isinstance(c, GoalRule):
        body = f" <- {', '.join(_item(b) for b in c.body)}" if c.body else ""
        tc = ", ".join(_item(x) for x in c.tc)
        return f"{_name(c.name)}{render(Fn(AT, (c.literal, c.time)))} : {tc}{body}."
    if isinstance(c, Constraint):
        return _item(c.con) + "."
    raise TypeError(type(c))
