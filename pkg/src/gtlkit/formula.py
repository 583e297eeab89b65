"""Abstract syntax, concrete grammar and syntactic transformations.

The language has two implications: ``->`` (implication) and ``-<``
(co-implication, written ``a -< b``), the unary temporal connectives
``X Y G H``, and the binary ones ``U S``.  The derived connectives
``~ F P <->`` are expanded while parsing, so the AST only ever contains
the core constructors plus the primitive constants ``true``/``false``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator


class Formula:
    """Base class for AST nodes.  Instances are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_str(self)

    def node_count(self) -> int:
        return sum(1 for _ in walk(self))


@dataclass(frozen=True, slots=True)
class Var(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Top(Formula):
    pass


@dataclass(frozen=True, slots=True)
class Bot(Formula):
    pass


@dataclass(frozen=True, slots=True)
class And(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True, slots=True)
class Imp(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True, slots=True)
class CoImp(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True, slots=True)
class Next(Formula):
    f: Formula


@dataclass(frozen=True, slots=True)
class Yesterday(Formula):
    f: Formula


@dataclass(frozen=True, slots=True)
class Hence(Formula):
    f: Formula


@dataclass(frozen=True, slots=True)
class Hist(Formula):
    f: Formula


@dataclass(frozen=True, slots=True)
class Until(Formula):
    l: Formula
    r: Formula


@dataclass(frozen=True, slots=True)
class Since(Formula):
    l: Formula
    r: Formula


TOP = Top()
BOT = Bot()

_BINARY = (And, Or, Imp, CoImp, Until, Since)
_UNARY = (Next, Yesterday, Hence, Hist)


def neg(f: Formula) -> Formula:
    """``~f`` as its expansion ``f -> false``."""
    return Imp(f, BOT)


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, _BINARY):
        return (f.l, f.r)
    if isinstance(f, _UNARY):
        return (f.f,)
    return ()


def walk(f: Formula) -> Iterator[Formula]:
    """All nodes of the tree, parents after children (post-order)."""
    for c in children(f):
        yield from walk(c)
    yield f


def variables(f: Formula) -> set[str]:
    return {g.name for g in walk(f) if isinstance(g, Var)}


# --------------------------------------------------------------------------
# Parsing


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


_KEYWORDS = {"true", "false", "X", "Y", "G", "H", "F", "P", "U", "S"}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<name>[a-zA-Z_][a-zA-Z0-9_]*)"
    r"|(?P<op><->|->|-<|&|\||~|\(|\)))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:].lstrip()
            if not rest:
                break
            raise ParseError(f"unknown token {rest[0]!r}", pos)
        if m.group("name") is not None:
            word = m.group("name")
            kind = word if word in _KEYWORDS else "var"
            tokens.append((kind, word, m.start("name")))
        else:
            op = m.group("op")
            tokens.append((op, op, m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    """Recursive descent over the precedence ladder.

    Loosest to tightest: ``<->``; ``->`` and ``-<`` (right associative,
    one level); ``|``; ``&``; ``U``/``S`` (right associative); unary
    prefixes; atoms.
    """

    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.tokens[self.i][0]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> None:
        if self.peek() != kind:
            tok = self.tokens[self.i]
            raise ParseError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        self.advance()

    def parse(self) -> Formula:
        f = self.iff()
        if self.peek() != "end":
            tok = self.tokens[self.i]
            raise ParseError(f"unexpected {tok[1]!r}", tok[2])
        return f

    def iff(self) -> Formula:
        left = self.imp()
        if self.peek() == "<->":
            self.advance()
            right = self.iff()
            return And(Imp(left, right), Imp(right, left))
        return left

    def imp(self) -> Formula:
        left = self.disj()
        if self.peek() == "->":
            self.advance()
            return Imp(left, self.imp())
        if self.peek() == "-<":
            self.advance()
            return CoImp(left, self.imp())
        return left

    def disj(self) -> Formula:
        f = self.conj()
        while self.peek() == "|":
            self.advance()
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.until()
        while self.peek() == "&":
            self.advance()
            f = And(f, self.until())
        return f

    def until(self) -> Formula:
        left = self.unary()
        if self.peek() == "U":
            self.advance()
            return Until(left, self.until())
        if self.peek() == "S":
            self.advance()
            return Since(left, self.until())
        return left

    def unary(self) -> Formula:
        kind = self.peek()
        if kind == "~":
            self.advance()
            return neg(self.unary())
        if kind in ("X", "Y", "G", "H", "F", "P"):
            self.advance()
            inner = self.unary()
            match kind:
                case "X":
                    return Next(inner)
                case "Y":
                    return Yesterday(inner)
                case "G":
                    return Hence(inner)
                case "H":
                    return Hist(inner)
                case "F":
                    return Until(TOP, inner)
                case _:
                    return Since(TOP, inner)
        return self.atom()

    def atom(self) -> Formula:
        kind, word, pos = self.advance()
        if kind == "var":
            return Var(word)
        if kind == "true":
            return TOP
        if kind == "false":
            return BOT
        if kind == "(":
            f = self.iff()
            self.expect(")")
            return f
        raise ParseError(f"unexpected {word or 'end of input'!r}", pos)


def parse(text: str) -> Formula:
    """Parse a formula; derived connectives are expanded into the core AST."""
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Printing

# Binding strength per constructor; higher binds tighter.
_PREC_IMP = 1
_PREC_OR = 2
_PREC_AND = 3
_PREC_UNTIL = 4
_PREC_UNARY = 5
_PREC_ATOM = 6

_UNICODE_OPS = {"&": "∧", "|": "∨", "->": "⇒", "-<": "⇐"}


def _prec(f: Formula) -> int:
    match f:
        case Var() | Top() | Bot():
            return _PREC_ATOM
        case Next() | Yesterday() | Hence() | Hist():
            return _PREC_UNARY
        case Until() | Since():
            return _PREC_UNTIL
        case And():
            return _PREC_AND
        case Or():
            return _PREC_OR
        case _:
            return _PREC_IMP


def to_str(f: Formula, unicode: bool = False) -> str:
    """Render with minimal parentheses; ``parse(to_str(f))`` returns ``f``."""

    def op(sym: str) -> str:
        return _UNICODE_OPS[sym] if unicode and sym in _UNICODE_OPS else sym

    def render(g: Formula, minimum: int, strict_left: bool) -> str:
        # strict_left: the position requires strictly tighter binding than
        # `minimum` (left child of a right-associative operator, or right
        # child of a left-associative one).
        p = _prec(g)
        need = p < minimum or (strict_left and p == minimum)
        s = bare(g)
        return f"({s})" if need else s

    def bare(g: Formula) -> str:
        match g:
            case Var(name):
                return name
            case Top():
                return "⊤" if unicode else "true"
            case Bot():
                return "⊥" if unicode else "false"
            case Next(h):
                return f"X {render(h, _PREC_UNARY, False)}"
            case Yesterday(h):
                return f"Y {render(h, _PREC_UNARY, False)}"
            case Hence(h):
                return f"G {render(h, _PREC_UNARY, False)}"
            case Hist(h):
                return f"H {render(h, _PREC_UNARY, False)}"
            case Until(l, r):
                return f"{render(l, _PREC_UNTIL, True)} U {render(r, _PREC_UNTIL, False)}"
            case Since(l, r):
                return f"{render(l, _PREC_UNTIL, True)} S {render(r, _PREC_UNTIL, False)}"
            case And(l, r):
                return f"{render(l, _PREC_AND, False)} {op('&')} {render(r, _PREC_AND, True)}"
            case Or(l, r):
                return f"{render(l, _PREC_OR, False)} {op('|')} {render(r, _PREC_OR, True)}"
            case Imp(l, r):
                return f"{render(l, _PREC_IMP, True)} {op('->')} {render(r, _PREC_IMP, False)}"
            case CoImp(l, r):
                return f"{render(l, _PREC_IMP, True)} {op('-<')} {render(r, _PREC_IMP, False)}"
        raise TypeError(f"not a formula: {g!r}")

    return bare(f)


# --------------------------------------------------------------------------
# Subformula closure


class SigmaSet:
    """A subformula-closed list of formulas with a fixed index order.

    The order puts subformulas before their superformulas; for sets built
    by :func:`closure` it is the deduplicated post-order of the tree.
    """

    __slots__ = ("formulas", "index", "__dict__")

    def __init__(self, formulas: Iterable[Formula]):
        self.formulas: tuple[Formula, ...] = tuple(formulas)
        self.index: dict[Formula, int] = {f: i for i, f in enumerate(self.formulas)}
        if len(self.index) != len(self.formulas):
            raise ValueError("duplicate formulas")
        for i, f in enumerate(self.formulas):
            for c in children(f):
                j = self.index.get(c)
                if j is None:
                    raise ValueError(f"not closed under subformulas: missing {c}")
                if j >= i:
                    raise ValueError(f"subformula {c} must precede {f}")

    def __len__(self) -> int:
        return len(self.formulas)

    def __iter__(self) -> Iterator[Formula]:
        return iter(self.formulas)

    def __contains__(self, f: Formula) -> bool:
        return f in self.index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SigmaSet) and self.formulas == other.formulas

    def __hash__(self) -> int:
        return hash(self.formulas)

    def __repr__(self) -> str:
        return f"SigmaSet({', '.join(map(str, self.formulas))})"

    def mask_of(self, formulas: Iterable[Formula]) -> int:
        m = 0
        for f in formulas:
            m |= 1 << self.index[f]
        return m

    def formulas_of(self, mask: int) -> tuple[Formula, ...]:
        return tuple(f for i, f in enumerate(self.formulas) if mask >> i & 1)


def closure(f: Formula) -> SigmaSet:
    """Smallest subformula-closed set containing ``f``, canonically indexed."""
    seen: dict[Formula, None] = {}
    for g in walk(f):
        seen.setdefault(g)
    return SigmaSet(seen)


# --------------------------------------------------------------------------
# Negative translation


def negative_translation(f: Formula) -> Formula:
    """Replace every variable ``p`` by ``(p -> false) -> false``.

    All other constructors are preserved.  Inputs containing ``-<`` are
    rejected: the translation targets the classical fragment.
    """
    match f:
        case Var():
            return neg(neg(f))
        case Top() | Bot():
            return f
        case CoImp():
            raise ValueError("co-implication is outside the classical fragment")
        case And(l, r):
            return And(negative_translation(l), negative_translation(r))
        case Or(l, r):
            return Or(negative_translation(l), negative_translation(r))
        case Imp(l, r):
            return Imp(negative_translation(l), negative_translation(r))
        case Next(g):
            return Next(negative_translation(g))
        case Yesterday(g):
            return Yesterday(negative_translation(g))
        case Hence(g):
            return Hence(negative_translation(g))
        case Hist(g):
            return Hist(negative_translation(g))
        case Until(l, r):
            return Until(negative_translation(l), negative_translation(r))
        case Since(l, r):
            return Since(negative_translation(l), negative_translation(r))
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# Characteristic formulas


def big_and(formulas: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; empty conjunction is ``true``."""
    out: Formula | None = None
    for f in formulas:
        out = f if out is None else And(out, f)
    return TOP if out is None else out


def big_or(formulas: Iterable[Formula]) -> Formula:
    """Left-nested disjunction; empty disjunction is ``false``."""
    out: Formula | None = None
    for f in formulas:
        out = f if out is None else Or(out, f)
    return BOT if out is None else out


def co_neg(f: Formula) -> Formula:
    """``true -< f``: non-zero exactly where ``f`` is non-one."""
    return CoImp(TOP, f)


def arrow_up(sigma: SigmaSet, mask: int) -> Formula:
    """``/\\ D -> \\/ (Sigma minus D)`` for the subset with bit mask ``mask``."""
    inside = sigma.formulas_of(mask)
    outside = tuple(f for i, f in enumerate(sigma.formulas) if not mask >> i & 1)
    return Imp(big_and(inside), big_or(outside))


def arrow_down(sigma: SigmaSet, mask: int) -> Formula:
    """``/\\ D -< \\/ (Sigma minus D)`` for the subset with bit mask ``mask``."""
    inside = sigma.formulas_of(mask)
    outside = tuple(f for i, f in enumerate(sigma.formulas) if not mask >> i & 1)
    return CoImp(big_and(inside), big_or(outside))


def characteristic_formulas(space, world) -> tuple[Formula, Formula, Formula]:
    """The three formulas pinning a world of a finite labelled space.

    The base formula conjoins, over every type of the space's alphabet,
    either the co-negated upward arrow (types that occur in the world's
    linear component) or the negated downward arrow (types that do not).
    The positive variant conjoins the downward arrow of the world's own
    label; the negative variant implies the upward one.
    """
    from .typespace import enumerate_type_masks

    sigma = space.sigma
    if world not in space.labels:
        raise KeyError(f"unknown world {world!r}")
    component = space.component_of(world)
    family = {space.labels[v] for v in component}
    in_family: list[Formula] = []
    out_family: list[Formula] = []
    for mask in enumerate_type_masks(sigma):
        if mask in family:
            in_family.append(co_neg(arrow_up(sigma, mask)))
        else:
            out_family.append(neg(arrow_down(sigma, mask)))
    chi0 = And(big_and(in_family), big_and(out_family))
    ell = space.labels[world]
    chi_plus = And(arrow_down(sigma, ell), chi0)
    chi_minus = Imp(chi0, arrow_up(sigma, ell))
    return chi0, chi_plus, chi_minus
