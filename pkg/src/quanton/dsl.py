"""Line-oriented circuit description language (``.iq`` files).

Example::

    mode path:2
    init path=|0>
    bbs path T=1/sqrt2
    mirror path
    ps path phi=0
    bbs path T=1/sqrt2

Grammar (one construct per line, ``#`` starts a comment)::

    decl  = "mode" IDENT ":" INT
    init  = "init" IDENT "=" "|" INT ">" { "," IDENT "=" "|" INT ">" }
    stmt  = ELEMKW IDENT { IDENT } { IDENT "=" NUMBER }

A second mode name after a single-target element is an arm condition and
requires ``arm=<level>``: ``hwp pol path arm=1`` flips the polarization only
in arm 1 of ``path``. ``pbs path pol`` must be the last statement and
replaces the space with ``detector:4`` x ``pol:2``.

:func:`parse` either returns a :class:`CircuitAst` or raises
:class:`CircuitError` holding one located :class:`Diagnostic` per problem.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from . import elements as el
from .elements import INV_SQRT2, Pipeline
from .qstate import ModeSpace, PureState

MAX_DIMENSION = 32

# Diagnostic codes.
LEXICAL = "E100"
ENCODING = "E101"
SYNTAX = "E200"
UNKNOWN_ELEMENT = "E201"
MISSING_ARG = "E300"
UNKNOWN_ARG = "E301"
DUPLICATE_ARG = "E302"
OUT_OF_RANGE = "E303"
ARITY = "E304"
NOT_INTEGER = "E305"
UNDECLARED_MODE = "E400"
DUPLICATE_MODE = "E401"
DUPLICATE_INIT = "E402"
MISSING_INIT = "E403"
INCOMPLETE_INIT = "E404"
PBS_PLACEMENT = "E405"
DIMENSION = "E406"
TOO_LARGE = "E407"

ELEMENT_KEYWORDS = ("bbs", "bs", "mirror", "ps", "hwp", "qwp", "pbs", "block")

# keyword -> (required args, optional args)
_ARGS = {
    "bbs": ({"T"}, {"arm"}),
    "bs": (set(), {"arm"}),
    "mirror": (set(), {"arm"}),
    "ps": ({"phi"}, {"arm"}),
    "hwp": (set(), {"arm"}),
    "qwp": (set(), {"arm"}),
    "block": ({"path"}, set()),
    "pbs": (set(), set()),
}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int
    column: int
    severity: str = "error"

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.line}:{self.column}: {self.severity}: {self.message} [{self.code}]"


class CircuitError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(d.format() for d in self.diagnostics))

    def format(self, filename: str = "<input>") -> str:
        return "\n".join(d.format(filename) for d in self.diagnostics)


# -- AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Span:
    line: int
    column: int


@dataclass(frozen=True)
class Number:
    value: float
    text: str = field(default="", compare=False)

    def render(self) -> str:
        if self.text.lstrip("+-") == "1/sqrt2":
            return "-1/sqrt2" if self.value < 0 else "1/sqrt2"
        if float(self.value).is_integer() and abs(self.value) < 1e16:
            return str(int(self.value))
        return repr(float(self.value))


@dataclass(frozen=True)
class ModeDecl:
    label: str
    dim: int
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class InitDecl:
    kets: tuple[tuple[str, int], ...]
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class Arg:
    name: str
    value: Number
    span: Span = field(default=Span(0, 0), compare=False)


@dataclass(frozen=True)
class Statement:
    keyword: str
    modes: tuple[str, ...]
    args: tuple[Arg, ...] = ()
    span: Span = field(default=Span(0, 0), compare=False)

    def arg(self, name: str) -> Optional[float]:
        for a in self.args:
            if a.name == name:
                return a.value.value
        return None


@dataclass(frozen=True)
class CircuitAst:
    modes: tuple[ModeDecl, ...]
    init: InitDecl
    statements: tuple[Statement, ...]


# -- lexer --------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str  # IDENT NUMBER ":" "=" "|" ">" ","
    text: str
    column: int
    value: Optional[float] = None


_TOKEN_RE = re.compile(r"""
    (?P<SQRT2>[+-]?1/sqrt2(?![A-Za-z0-9_]))
  | (?P<NUMBER>[+-]?(?:[0-9]+\.[0-9]*|\.[0-9]+|[0-9]+)(?:[eE][+-]?[0-9]+)?)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<PUNCT>[:=|>,])
""", re.VERBOSE)
_INT_RE = re.compile(r"[+-]?[0-9]+")


def _lex_line(text: str, line: int, diags: list[Diagnostic]) -> Optional[list[Token]]:
    tokens = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch in " \t":
            pos += 1
            continue
        if ch == "#":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            diags.append(Diagnostic(LEXICAL, f"unexpected character {ch!r}", line, pos + 1))
            return None
        kind = m.lastgroup
        tok_text = m.group()
        if kind == "SQRT2":
            tokens.append(Token("NUMBER", tok_text, pos + 1,
                                -INV_SQRT2 if tok_text.startswith("-") else INV_SQRT2))
        elif kind == "NUMBER":
            value = float(tok_text)
            if not math.isfinite(value):
                diags.append(Diagnostic(LEXICAL, f"number {tok_text!r} is not finite", line, pos + 1))
                return None
            tokens.append(Token("NUMBER", tok_text, pos + 1, value))
        elif kind == "IDENT":
            tokens.append(Token("IDENT", tok_text, pos + 1))
        else:
            tokens.append(Token(tok_text, tok_text, pos + 1))
        pos = m.end()
    return tokens


# -- parser -------------------------------------------------------------------

class _LineError(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


class _Parser:
    def __init__(self):
        self.diags: list[Diagnostic] = []
        self.modes: dict[str, ModeDecl] = {}
        self.init: Optional[InitDecl] = None
        self.statements: list[Statement] = []
        self.total_dim = 1

    # token cursor helpers for one line
    def _setup(self, tokens: list[Token], line: int, line_len: int):
        self.tokens, self.pos, self.line, self.eol = tokens, 0, line, line_len + 1

    def _peek(self, offset: int = 0) -> Optional[Token]:
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def _error(self, code: str, message: str, column: Optional[int] = None) -> _LineError:
        return _LineError(Diagnostic(code, message, self.line, self.eol if column is None else column))

    def _expect(self, kind: str, what: str) -> Token:
        tok = self._peek()
        if tok is None:
            raise self._error(SYNTAX, f"expected {what}, found end of line")
        if tok.kind != kind:
            raise self._error(SYNTAX, f"expected {what}, found {tok.text!r}", tok.column)
        self.pos += 1
        return tok

    def _expect_int(self, what: str) -> tuple[int, Token]:
        tok = self._expect("NUMBER", what)
        if not _INT_RE.fullmatch(tok.text):
            raise self._error(NOT_INTEGER, f"{what} must be an integer, found {tok.text!r}", tok.column)
        return int(tok.text), tok

    def _expect_end(self):
        tok = self._peek()
        if tok is not None:
            raise self._error(SYNTAX, f"unexpected {tok.text!r}", tok.column)

    def _mode(self, tok: Token) -> ModeDecl:
        decl = self.modes.get(tok.text)
        if decl is None:
            raise self._error(UNDECLARED_MODE, f"undeclared mode {tok.text!r}", tok.column)
        return decl

    def parse_line(self, tokens: list[Token], line: int, line_len: int):
        self._setup(tokens, line, line_len)
        head = tokens[0]
        if head.kind != "IDENT":
            raise self._error(SYNTAX, f"expected a keyword, found {head.text!r}", head.column)
        self.pos = 1
        if head.text == "mode":
            self._decl(head)
        elif head.text == "init":
            self._init(head)
        elif head.text in ELEMENT_KEYWORDS:
            self._stmt(head)
        else:
            raise self._error(UNKNOWN_ELEMENT, f"unknown element keyword {head.text!r}", head.column)

    def _decl(self, head: Token):
        name = self._expect("IDENT", "a mode name")
        self._expect(":", "':'")
        dim, dim_tok = self._expect_int("mode dimension")
        self._expect_end()
        if name.text in self.modes:
            raise self._error(DUPLICATE_MODE, f"mode {name.text!r} already declared", name.column)
        if dim < 1:
            raise self._error(OUT_OF_RANGE, f"mode dimension out of range [1,{MAX_DIMENSION}]", dim_tok.column)
        if self.total_dim * dim > MAX_DIMENSION:
            raise self._error(TOO_LARGE, f"total dimension exceeds {MAX_DIMENSION}", dim_tok.column)
        self.total_dim *= dim
        self.modes[name.text] = ModeDecl(name.text, dim, Span(self.line, head.column))

    def _init(self, head: Token):
        if self.init is not None:
            raise self._error(DUPLICATE_INIT, f"duplicate init (first on line {self.init.span.line})",
                              head.column)
        kets = []
        seen = set()
        while True:
            name = self._expect("IDENT", "a mode name")
            self._expect("=", "'='")
            self._expect("|", "'|'")
            level, level_tok = self._expect_int("basis level")
            self._expect(">", "'>'")
            decl = self._mode(name)
            if name.text in seen:
                raise self._error(INCOMPLETE_INIT, f"mode {name.text!r} initialized twice", name.column)
            if not 0 <= level < decl.dim:
                raise self._error(OUT_OF_RANGE, f"level {level} out of range [0,{decl.dim - 1}] "
                                  f"for mode {name.text!r}", level_tok.column)
            seen.add(name.text)
            kets.append((name.text, level))
            if self._peek() is None:
                break
            self._expect(",", "',' or end of line")
        self.init = InitDecl(tuple(kets), Span(self.line, head.column))

    def _stmt(self, head: Token):
        keyword = head.text
        span = Span(self.line, head.column)
        if self.statements and self.statements[-1].keyword == "pbs":
            raise self._error(PBS_PLACEMENT, "pbs must be the last statement", head.column)
        mode_toks = []
        while self._peek() is not None and self._peek().kind == "IDENT" and (
                self._peek(1) is None or self._peek(1).kind != "="):
            mode_toks.append(self._peek())
            self.pos += 1
        args: list[tuple[Token, Token]] = []
        while self._peek() is not None:
            name = self._expect("IDENT", "an argument name")
            self._expect("=", "'='")
            value = self._expect("NUMBER", f"a number for {name.text!r}")
            args.append((name, value))
        required, optional = _ARGS[keyword]
        n_modes = 2 if keyword == "pbs" else (1 if keyword == "block" else (1, 2))
        allowed = n_modes if isinstance(n_modes, tuple) else (n_modes,)
        if len(mode_toks) not in allowed:
            want = " or ".join(str(n) for n in allowed)
            column = mode_toks[max(allowed)].column if len(mode_toks) > max(allowed) else head.column
            raise self._error(ARITY, f"{keyword} takes {want} mode name(s), got {len(mode_toks)}", column)
        decls = [self._mode(t) for t in mode_toks]
        if len(set(t.text for t in mode_toks)) != len(mode_toks):
            raise self._error(ARITY, f"{keyword} names the same mode twice", mode_toks[-1].column)
        seen: dict[str, Token] = {}
        arg_col: dict[str, int] = {}
        for name, value in args:
            if name.text not in required | optional:
                raise self._error(UNKNOWN_ARG, f"unknown argument {name.text!r} for {keyword}", name.column)
            if name.text in seen:
                raise self._error(DUPLICATE_ARG, f"duplicate argument {name.text!r}", name.column)
            seen[name.text] = value
            arg_col[name.text] = name.column
        missing = sorted(required - set(seen))
        if missing:
            raise self._error(MISSING_ARG, f"{keyword} requires argument {missing[0]!r}", head.column)
        controlled = keyword not in ("pbs", "block") and len(mode_toks) == 2
        if controlled and "arm" not in seen:
            raise self._error(MISSING_ARG, f"{keyword} with an arm mode requires argument 'arm'",
                              mode_toks[1].column)
        if not controlled and "arm" in seen:
            raise self._error(ARITY, "argument 'arm' needs an arm mode after the target",
                              seen["arm"].column)
        # value checks
        if "T" in seen and not 0.0 <= seen["T"].value <= 1.0:
            raise self._error(OUT_OF_RANGE, "T out of range [0,1]", arg_col["T"])
        for int_arg, upper in (("path", 1), ("arm", decls[-1].dim - 1 if controlled else 0)):
            if int_arg in seen:
                tok = seen[int_arg]
                if not _INT_RE.fullmatch(tok.text):
                    raise self._error(NOT_INTEGER, f"{int_arg} must be an integer", tok.column)
                if not 0 <= int(tok.text) <= upper:
                    raise self._error(OUT_OF_RANGE, f"{int_arg} out of range [0,{upper}]", tok.column)
        target_decls = decls if keyword == "pbs" else decls[:1]
        for t, d in zip(mode_toks, target_decls):
            if d.dim != 2:
                raise self._error(DIMENSION, f"{keyword} needs a two-level mode, {d.label!r} has dim {d.dim}",
                                  t.column)
        arg_nodes = tuple(Arg(n.text, Number(v.value, v.text), Span(self.line, n.column)) for n, v in args)
        self.statements.append(Statement(keyword, tuple(t.text for t in mode_toks), arg_nodes, span))

    def finish(self, last_line: int) -> Optional[CircuitAst]:
        if self.init is None:
            self.diags.append(Diagnostic(MISSING_INIT, "missing init declaration", max(last_line, 1), 1))
        else:
            missing = [m for m in self.modes if m not in dict(self.init.kets)]
            if missing:
                self.diags.append(Diagnostic(INCOMPLETE_INIT, f"init does not set mode(s) {missing}",
                                             self.init.span.line, self.init.span.column))
        if self.statements and self.statements[-1].keyword == "pbs":
            stmt = self.statements[-1]
            space = tuple((m.label, m.dim) for m in self.modes.values())
            if space != ((stmt.modes[0], 2), (stmt.modes[1], 2)):
                self.diags.append(Diagnostic(
                    PBS_PLACEMENT, f"pbs needs exactly the modes ({stmt.modes[0]}:2, {stmt.modes[1]}:2) "
                    f"in that order", stmt.span.line, stmt.span.column))
        if self.diags:
            return None
        return CircuitAst(tuple(self.modes.values()), self.init, tuple(self.statements))


def _decode(source: Union[str, bytes]) -> str:
    if isinstance(source, str):
        return source
    try:
        return source.decode("utf-8")
    except UnicodeDecodeError as exc:
        before = source[:exc.start]
        line = before.count(b"\n") + 1
        column = len(before) - (before.rfind(b"\n") + 1) + 1
        raise CircuitError([Diagnostic(ENCODING, "input is not valid UTF-8", line, column)]) from None


def parse(source: Union[str, bytes]) -> CircuitAst:
    """Parse circuit source text into an AST; raises :class:`CircuitError` on any problem."""
    text = _decode(source)
    parser = _Parser()
    lines = text.split("\n")
    for number, raw in enumerate(lines, start=1):
        raw = raw[:-1] if raw.endswith("\r") else raw
        tokens = _lex_line(raw, number, parser.diags)
        if not tokens:
            continue
        try:
            parser.parse_line(tokens, number, len(raw))
        except _LineError as exc:
            parser.diags.append(exc.diag)
    ast = parser.finish(len(lines))
    if ast is None:
        raise CircuitError(parser.diags)
    return ast


def pretty(ast: CircuitAst) -> str:
    """Canonical source text for an AST; ``parse(pretty(ast)) == ast``."""
    lines = [f"mode {m.label}:{m.dim}" for m in ast.modes]
    lines.append("init " + ", ".join(f"{label}=|{level}>" for label, level in ast.init.kets))
    for s in ast.statements:
        parts = [s.keyword, *s.modes, *(f"{a.name}={a.value.render()}" for a in s.args)]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _element(s: Statement) -> el.Element:
    target = s.modes[0]
    arm = (s.modes[1], int(s.arg("arm"))) if len(s.modes) == 2 and s.keyword != "pbs" else None
    k = s.keyword
    if k == "bbs":
        return el.bbs(target, s.arg("T"), arm=arm)
    if k == "bs":
        return el.bs(target, arm=arm)
    if k == "mirror":
        return el.mirror(target, arm=arm)
    if k == "ps":
        return el.phase_shifter(target, s.arg("phi"), arm=arm)
    if k == "hwp":
        return el.hwp(target, arm=arm)
    if k == "qwp":
        return el.qwp(target, arm=arm)
    if k == "block":
        return el.blocker(target, int(s.arg("path")))
    return el.pbs(s.modes[0], s.modes[1])


def lower(ast: CircuitAst) -> tuple[ModeSpace, PureState, Pipeline]:
    space = ModeSpace(tuple((m.label, m.dim) for m in ast.modes))
    initial = PureState.basis(space, dict(ast.init.kets))
    pipeline = Pipeline(space, tuple(_element(s) for s in ast.statements))
    return space, initial, pipeline


def load(path) -> tuple[ModeSpace, PureState, Pipeline]:
    """Parse and lower a ``.iq`` file."""
    with open(path, "rb") as fh:
        return lower(parse(fh.read()))
