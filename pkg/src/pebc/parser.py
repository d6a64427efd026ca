"""Lexer and recursive-descent parser for ``.peb`` model files."""

from __future__ import annotations

import re
from fractions import Fraction
from pathlib import Path
from typing import Optional

from pebc.diagnostics import Diagnostic, ParseError
from pebc.syntax import (
    Assignment,
    Binary,
    BoolLit,
    Call,
    Choice,
    Comprehension,
    ConstDecl,
    Context,
    Deterministic,
    Enumerated,
    Event,
    Machine,
    Model,
    Name,
    Num,
    Param,
    Property,
    SetDecl,
    SetLit,
    SourceSpan,
    Str,
    Unary,
    UniformList,
    UniformSet,
    walk,
)

SECTION_KEYWORDS = {
    "CONTEXT", "SETS", "CONSTANTS", "END", "MACHINE", "SEES", "VARIABLES",
    "INVARIANTS", "INITIALISATION", "INITIALIZATION", "EVENTS", "EVENT",
    "WEIGHT", "ANY", "WHERE", "THEN", "PROPERTIES",
}
BUILTINS = {"card", "dom", "ran", "POW", "bool", "min", "max"}
TRUE_WORDS = {"TRUE", "True", "true"}
FALSE_WORDS = {"FALSE", "False", "false"}

_UNICODE = {
    "∈": ":", "∉": "/:", "↦": "|->", "▷": "|>", "⩤": "<<|", "◁": "<|",
    "⩥": "|>>", "∪": "union", "∩": "inter", "∧": "/\\", "∨": "\\/", "¬": "not",
    "≤": "<=", "≥": ">=", "≠": "/=", "⊆": "<:", "⊈": "/<:", "×": "*", "⇒": "=>",
    "⇔": "<=>", "÷": "div", "ℕ": "NAT", "ℤ": "INT", "⊕": "<+", "∖": "\\",
}

_OPS = [
    ":∈", "<=>", "<<|", "|>>", "/<:", "|->", ":=", "::", "\\/", "/\\",
    "<+", "|>", "<|", "<:", "/:", "=>", "<=", ">=", "/=", "!=", "..",
    "&", "+", "-", "*", "/", "=", "<", ">", ":", "{", "}", "(", ")", ",",
    ".", "|", "@", "\\",
]
_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<comment>---[^\n]*)"
    r"|(?P<dec>\d+\.\d+)"
    r"|(?P<int>\d+)"
    r"|(?P<str>\"[^\"\n]*\")"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>" + "|".join(re.escape(o) for o in _OPS) + ")"
    r"|(?P<uni>[" + "".join(_UNICODE) + "])"
)


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def tokenize(text: str, file: str = "<input>") -> list:
    toks = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            span = SourceSpan(file, line, pos - line_start + 1, 1)
            raise ParseError([Diagnostic("error", f"unexpected character {text[pos]!r}", span)])
        kind = m.lastgroup
        s = m.group()
        col = pos - line_start + 1
        if kind == "uni":
            s = _UNICODE[s]
            kind = "ident" if s[0].isalpha() else "op"
        if kind == "op" and s in (":", "::", ":∈"):
            if s == ":" and text.startswith("in", m.end()) and not _is_ident_char(text, m.end() + 2):
                s = ":in"
                m_end = m.end() + 2
                toks.append(Token("op", s, line, col))
                pos = m_end
                continue
            if s != ":":
                s = ":in"
        if kind == "op" and s == "!=":
            s = "/="
        if kind not in ("ws", "comment"):
            toks.append(Token(kind, s, line, col))
        nl = s.count("\n") if kind == "ws" else 0
        if nl:
            line += nl
            line_start = m.start() + s.rfind("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


def _is_ident_char(text, i):
    return i < len(text) and (text[i].isalnum() or text[i] == "_")


# binary operator table: token text -> (precedence, canonical op, right-assoc)
_BINOPS = {
    "<=>": (1, "<=>", False),
    "=>": (1, "=>", True),
    "\\/": (2, "or", False),
    "or": (2, "or", False),
    "/\\": (3, "and", False),
    "&": (3, "and", False),
    "and": (3, "and", False),
    "=": (5, "=", False),
    "/=": (5, "/=", False),
    "<": (5, "<", False),
    "<=": (5, "<=", False),
    ">": (5, ">", False),
    ">=": (5, ">=", False),
    ":": (5, ":", False),
    "/:": (5, "/:", False),
    "<:": (5, "<:", False),
    "/<:": (5, "/<:", False),
    "|->": (6, "|->", False),
    "union": (7, "union", False),
    "inter": (7, "inter", False),
    "\\": (7, "\\", False),
    "|>": (7, "|>", False),
    "|>>": (7, "|>>", False),
    "<|": (7, "<|", False),
    "<<|": (7, "<<|", False),
    "<+": (7, "<+", False),
    "..": (8, "..", False),
    "+": (9, "+", False),
    "-": (9, "-", False),
    "*": (10, "*", False),
    "div": (10, "div", False),
    "/": (10, "div", False),
    "mod": (10, "mod", False),
}
_NONASSOC = 5
_NOT_PREC = 4


class Parser:
    def __init__(self, text: str, file: str = "<input>"):
        self.file = file
        self.toks = tokenize(text, file)
        self.i = 0
        self._parens: set = set()

    # --- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def span(self, t: Token) -> SourceSpan:
        return SourceSpan(self.file, t.line, t.col, max(len(t.text), 1))

    def error(self, msg, t: Optional[Token] = None):
        t = t or self.tok
        raise ParseError([Diagnostic("error", msg, self.span(t))])

    def at(self, text) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text == text

    def at_keyword(self, *words) -> bool:
        t = self.tok
        return t.kind == "ident" and t.text in (words or SECTION_KEYWORDS)

    def expect(self, text) -> Token:
        if not self.at(text):
            shown = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {shown!r}")
        return self.advance()

    def expect_ident(self, what="identifier") -> Token:
        t = self.tok
        if t.kind != "ident" or t.text in SECTION_KEYWORDS:
            shown = t.text or "end of input"
            self.error(f"expected {what}, found {shown!r}")
        return self.advance()

    # --- model ---------------------------------------------------------------

    def parse_model(self) -> Model:
        context = machine = None
        if self.tok.kind == "eof":
            self.error("expected CONTEXT or MACHINE")
        while self.tok.kind != "eof":
            if self.at_keyword("CONTEXT"):
                if context is not None:
                    self.error("duplicate section CONTEXT")
                context = self.parse_context()
            elif self.at_keyword("MACHINE"):
                if machine is not None:
                    self.error("duplicate section MACHINE")
                machine = self.parse_machine()
            elif self.tok.kind == "ident" and self.tok.text.isupper():
                self.error(f"unknown keyword {self.tok.text!r}")
            else:
                self.error("expected CONTEXT or MACHINE")
        return Model(context, machine)

    def parse_context(self) -> Context:
        start = self.expect("CONTEXT")
        name = self.expect_ident("context name").text
        sets, consts = [], []
        seen = set()
        while not self.at_keyword("END", "MACHINE") and self.tok.kind != "eof":
            kw = self.tok
            if self.at_keyword("SETS"):
                self._once(seen, kw)
                self.advance()
                while self.tok.kind == "ident" and self.tok.text not in SECTION_KEYWORDS:
                    sets.append(self.parse_set_decl())
            elif self.at_keyword("CONSTANTS"):
                self._once(seen, kw)
                self.advance()
                while self.tok.kind == "ident" and self.tok.text not in SECTION_KEYWORDS:
                    consts.append(self.parse_const_decl())
            else:
                self._unknown_section(("SETS", "CONSTANTS", "END"))
        if self.at_keyword("END"):
            self.advance()
        return Context(name, tuple(sets), tuple(consts), self.span(start))

    def _once(self, seen, kw: Token, key=None):
        key = key or kw.text
        if key in seen:
            self.error(f"duplicate section {key}", kw)
        seen.add(key)

    def _unknown_section(self, expected):
        t = self.tok
        if t.kind == "ident" and t.text.isupper():
            if t.text in SECTION_KEYWORDS:
                self.error(f"section {t.text} not allowed here")
            self.error(f"unknown keyword {t.text!r}")
        self.error("expected one of " + ", ".join(expected) + f", found {t.text or 'end of input'!r}")

    def parse_set_decl(self) -> SetDecl:
        t = self.expect_ident("set name")
        self.expect(":")
        if self.at("{"):
            self.advance()
            elems = []
            if not self.at("}"):
                elems.append(self.expect_ident("set element").text)
                while self.at(","):
                    self.advance()
                    elems.append(self.expect_ident("set element").text)
            self.expect("}")
            return SetDecl(t.text, elements=tuple(elems), span=self.span(t))
        if self.tok.kind == "int":
            n = int(self.advance().text)
            return SetDecl(t.text, card=n, span=self.span(t))
        self.error("expected '{' or a cardinality after ':' in set declaration")

    def parse_const_decl(self) -> ConstDecl:
        t = self.expect_ident("constant name")
        self.expect(":")
        ty = self.parse_expr()
        self.expect(":=")
        value = self.parse_expr()
        return ConstDecl(t.text, ty, value, self.span(t))

    def parse_machine(self) -> Machine:
        start = self.expect("MACHINE")
        name = self.expect_ident("machine name").text
        sees = None
        variables, invariants, init, events, props = [], [], [], [], []
        seen = set()
        while self.tok.kind != "eof" and not self.at_keyword("END", "CONTEXT", "MACHINE"):
            kw = self.tok
            if self.at_keyword("SEES"):
                self._once(seen, kw)
                self.advance()
                sees = self.expect_ident("context name").text
            elif self.at_keyword("VARIABLES"):
                self._once(seen, kw)
                self.advance()
                while self.tok.kind == "ident" and self.tok.text not in SECTION_KEYWORDS:
                    if self.peek().kind == "op" and self.peek().text in (":", ":="):
                        self.error(f"unexpected {self.peek().text!r} in VARIABLES list", self.peek())
                    variables.append(self.advance().text)
            elif self.at_keyword("INVARIANTS"):
                self._once(seen, kw)
                self.advance()
                while not self.at_keyword() and self.tok.kind != "eof":
                    invariants.append(self.parse_expr())
            elif self.at_keyword("INITIALISATION", "INITIALIZATION"):
                self._once(seen, kw, "INITIALISATION")
                self.advance()
                while self.tok.kind == "ident" and self.tok.text not in SECTION_KEYWORDS:
                    init.append(self.parse_assignment())
            elif self.at_keyword("EVENTS"):
                self.advance()
            elif self.at_keyword("EVENT"):
                events.append(self.parse_event())
            elif self.at_keyword("PROPERTIES"):
                self._once(seen, kw)
                self.advance()
                k = 0
                while not self.at_keyword() and self.tok.kind != "eof":
                    k += 1
                    props.append(self.parse_property(k))
            else:
                self._unknown_section(
                    ("SEES", "VARIABLES", "INVARIANTS", "INITIALISATION", "EVENT", "PROPERTIES", "END")
                )
        if self.at_keyword("END"):
            self.advance()
        return Machine(
            name, sees, tuple(variables), tuple(invariants), tuple(init),
            tuple(events), tuple(props), self.span(start),
        )

    def parse_property(self, k: int) -> Property:
        t = self.tok
        if t.kind == "ident" and self.peek().kind == "op" and self.peek().text == ":=":
            self.advance()
            self.advance()
            return Property(t.text, self.parse_expr(), self.span(t))
        return Property(str(k), self.parse_expr(), self.span(t))

    def parse_event(self) -> Event:
        start = self.expect("EVENT")
        name = self.expect_ident("event name").text
        weight = guard = None
        params, actions = [], []
        seen = set()
        while not self.at_keyword("END"):
            kw = self.tok
            if self.tok.kind == "eof":
                self.error(f"event {name!r} is missing END")
            if self.at_keyword("WEIGHT"):
                self._once(seen, kw)
                self.advance()
                weight = self.parse_expr()
            elif self.at_keyword("ANY"):
                self._once(seen, kw)
                self.advance()
                while self.tok.kind == "ident" and self.tok.text not in SECTION_KEYWORDS:
                    p = self.advance()
                    self.expect(":in")
                    params.append(Param(p.text, self.parse_expr(), self.span(p)))
            elif self.at_keyword("WHERE"):
                self._once(seen, kw)
                self.advance()
                guard = self.parse_expr()
            elif self.at_keyword("THEN"):
                self._once(seen, kw)
                self.advance()
                while self.tok.kind == "ident" and self.tok.text not in SECTION_KEYWORDS:
                    actions.append(self.parse_assignment())
            else:
                self._unknown_section(("WEIGHT", "ANY", "WHERE", "THEN", "END"))
        self.expect("END")
        return Event(name, weight, tuple(params), guard, tuple(actions), self.span(start))

    def parse_assignment(self) -> Assignment:
        t = self.expect_ident("assignment target")
        if self.at(":in"):
            self.advance()
            return Assignment(t.text, UniformSet(self.parse_expr()), self.span(t))
        self.expect(":=")
        e = self.parse_expr()
        if type(e) is Choice:
            rhs = Enumerated(e.items)
        elif type(e) is SetLit and len(e.items) >= 2 and id(e) not in self._parens:
            rhs = UniformList(e.items)
        else:
            rhs = Deterministic(e)
        for x in (x for ex in Assignment(t.text, rhs).exprs() for x in walk(ex)):
            if type(x) is Choice:
                self.error("a probabilistic choice must be the whole right-hand side", self._tok_at(x))
        return Assignment(t.text, rhs, self.span(t))

    def _tok_at(self, node) -> Token:
        s = node.span
        return Token("op", "{", s.line, s.column)

    # --- expressions ---------------------------------------------------------

    def parse_expr(self, min_prec: int = 1):
        left = self.parse_prefix(min_prec)
        while True:
            t = self.tok
            if t.kind not in ("op", "ident"):
                break
            info = _BINOPS.get(t.text)
            if info is None or (t.kind == "ident" and t.text not in ("or", "and", "div", "mod", "union", "inter")):
                break
            prec, op, right_assoc = info
            if prec < min_prec:
                break
            self.advance()
            nxt = prec if right_assoc else prec + 1
            right = self.parse_expr(nxt)
            left = Binary(op, left, right, self.span(t))
            if prec == _NONASSOC:
                t2 = self.tok
                i2 = _BINOPS.get(t2.text)
                if t2.kind == "op" and i2 and i2[0] == _NONASSOC:
                    self.error(f"relational operators do not chain; parenthesize {t2.text!r}")
        return left

    def parse_prefix(self, min_prec):
        t = self.tok
        if t.kind == "ident" and t.text == "not":
            self.advance()
            return Unary("not", self.parse_expr(_NOT_PREC), self.span(t))
        if t.kind == "op" and t.text == "-":
            self.advance()
            return Unary("neg", self.parse_expr(11), self.span(t))
        return self.parse_primary()

    def parse_primary(self):
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Num(int(t.text), self.span(t))
        if t.kind == "dec":
            self.error("decimal literals are only allowed as probabilities")
        if t.kind == "str":
            self.advance()
            return Str(t.text[1:-1], self.span(t))
        if t.kind == "ident":
            if t.text in SECTION_KEYWORDS:
                self.error(f"expected an expression, found keyword {t.text!r}")
            self.advance()
            if t.text in TRUE_WORDS:
                return BoolLit(True, self.span(t))
            if t.text in FALSE_WORDS:
                return BoolLit(False, self.span(t))
            if t.text in BUILTINS and self.at("("):
                self.advance()
                arg = self.parse_expr()
                self.expect(")")
                return Call(t.text, arg, self.span(t))
            if t.text in ("or", "and", "div", "mod", "union", "inter"):
                self.error(f"unexpected operator {t.text!r}", t)
            return Name(t.text, self.span(t))
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.parse_expr()
            self.expect(")")
            self._parens.add(id(e))
            return e
        if t.kind == "op" and t.text == "{":
            return self.parse_braces()
        shown = t.text or "end of input"
        self.error(f"expected an expression, found {shown!r}")

    def parse_braces(self):
        t = self.expect("{")
        sp = self.span(t)
        if self.at("}"):
            self.advance()
            return SetLit((), sp)
        nxt = self.peek()
        if self.tok.kind == "ident" and nxt.kind == "op" and nxt.text == ".":
            var = self.advance().text
            self.advance()
            source = self.parse_expr()
            self.expect("|")
            body = self.parse_expr()
            self.expect("}")
            return Comprehension(var, source, body, None, sp)
        first = self.parse_expr()
        if self.at("@"):
            items = [(first, self.parse_prob())]
            while self.at(","):
                self.advance()
                e = self.parse_expr()
                if not self.at("@"):
                    self.error("every alternative of an enumerated choice needs '@ probability'")
                items.append((e, self.parse_prob()))
            self.expect("}")
            return Choice(tuple(items), sp)
        items = [first]
        while self.at(","):
            self.advance()
            items.append(self.parse_expr())
        if self.at("@"):
            self.error("every alternative of an enumerated choice needs '@ probability'")
        self.expect("}")
        return SetLit(tuple(items), sp)

    def parse_prob(self) -> Fraction:
        self.expect("@")
        t = self.tok
        if t.kind == "dec":
            self.advance()
            return Fraction(t.text)
        if t.kind == "int":
            self.advance()
            num = int(t.text)
            if self.at("/"):
                self.advance()
                d = self.tok
                if d.kind != "int":
                    self.error("expected denominator")
                self.advance()
                if int(d.text) == 0:
                    self.error("zero denominator in probability", d)
                return Fraction(num, int(d.text))
            return Fraction(num)
        self.error("expected a probability literal")


def parse_model(source_text: str, file: str = "<input>") -> Model:
    """Parse model text (a context, a machine, or both)."""
    return Parser(source_text, file).parse_model()


def parse_expression(text: str, file: str = "<expr>"):
    p = Parser(text, file)
    e = p.parse_expr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r} after expression")
    return e


def load_model(path, search_dirs=()) -> Model:
    """Read a ``.peb`` file; if its machine SEES a context defined elsewhere,
    look for ``<CONTEXT>.peb`` next to it (or in ``search_dirs``)."""
    path = Path(path)
    model = parse_model(path.read_text(encoding="utf-8"), str(path))
    m = model.machine
    if model.context is None and m is not None and m.sees:
        for d in (path.parent, *map(Path, search_dirs)):
            for cand in (d / f"{m.sees}.peb", d / f"{m.sees.lower()}.peb"):
                if cand.exists():
                    ctx_model = parse_model(cand.read_text(encoding="utf-8"), str(cand))
                    if ctx_model.context is not None:
                        return Model(ctx_model.context, m)
    return model
