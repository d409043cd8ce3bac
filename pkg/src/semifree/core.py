"""Exact arithmetic on words and integer linear combinations of words.

The ground structure is a free graded category: a set of objects together
with an ordered list of generator letters, each with a source, target and an
integer (cohomological) degree.  A :class:`Word` is a composable chain of
letters; an :class:`Element` is a finite formal sum of words sharing source
and target, with arbitrary-precision integer coefficients.

Compositions are read right-to-left: in a word written ``g_k ... g_1`` the
rightmost letter is applied first.  Internally letters are stored in written
order (leftmost first) as a tuple of indices into a :class:`Signature`, so
composition of elements is plain tuple concatenation.

Canonical form: per element, words are ordered first by letter count, then
lexicographically by declaration index of the letters.  Zero coefficients are
never stored.  Everything is immutable; all operations are pure functions, so
values can be shared freely across threads.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence


class CompositionError(ValueError):
    """Raised when endpoints of words or elements do not match."""


class SignatureError(ValueError):
    """Raised for malformed objects/generators or cross-signature mixing."""


class GeneratorRef:
    """A generator letter: name, endpoints, degree and declaration index."""

    __slots__ = ("name", "source", "target", "degree", "index")

    def __init__(self, name: str, source: str, target: str, degree: int, index: int):
        if not name:
            raise SignatureError("generator name must be nonempty")
        self.name = name
        self.source = source
        self.target = target
        self.degree = int(degree)
        self.index = int(index)

    def spec(self) -> tuple[str, str, str, int]:
        return (self.name, self.source, self.target, self.degree)

    def __eq__(self, other):
        if not isinstance(other, GeneratorRef):
            return NotImplemented
        return self.spec() == other.spec() and self.index == other.index

    def __hash__(self):
        return hash((self.name, self.index))

    def __repr__(self):
        return (f"GeneratorRef({self.name!r}, {self.source!r} -> "
                f"{self.target!r}, deg {self.degree})")


class Signature:
    """Objects plus an ordered generator list; the context of all words.

    Subclassed by dg presentations; the signature part is what element
    arithmetic needs.  Two signatures are interchangeable for arithmetic when
    they agree on objects and generator specs (``same_signature``).
    """

    def __init__(self, objects: Iterable[str], generators: Iterable[tuple[str, str, str, int]]):
        objs: list[str] = []
        seen = set()
        for o in objects:
            if not o:
                raise SignatureError("object name must be nonempty")
            if o in seen:
                raise SignatureError(f"duplicate object {o!r}")
            seen.add(o)
            objs.append(o)
        self.objects: tuple[str, ...] = tuple(objs)
        gens: list[GeneratorRef] = []
        index: dict[str, int] = {}
        for name, src, tgt, deg in generators:
            if name in index:
                raise SignatureError(f"duplicate generator {name!r}")
            if src not in seen or tgt not in seen:
                raise SignatureError(f"generator {name!r} has unknown endpoint")
            index[name] = len(gens)
            gens.append(GeneratorRef(name, src, tgt, deg, len(gens)))
        self.generators: tuple[GeneratorRef, ...] = tuple(gens)
        self._index = index

    # -- lookups ---------------------------------------------------------

    def gen_index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SignatureError(f"unknown generator {name!r}") from None

    def gen_ref(self, name: str) -> GeneratorRef:
        return self.generators[self.gen_index(name)]

    def has_gen(self, name: str) -> bool:
        return name in self._index

    def same_signature(self, other: "Signature") -> bool:
        if self is other:
            return True
        return (tuple(self.objects) == tuple(other.objects)
                and len(self.generators) == len(other.generators)
                and all(a.spec() == b.spec()
                        for a, b in zip(self.generators, other.generators)))

    def _check_ctx(self, other: "Signature"):
        if self is not other and not self.same_signature(other):
            raise SignatureError("elements belong to different signatures")

    # -- letter-tuple helpers -------------------------------------------

    def letters_degree(self, letters: tuple[int, ...]) -> int:
        gens = self.generators
        return sum(gens[i].degree for i in letters)

    def letters_endpoints(self, letters: tuple[int, ...]) -> tuple[str, str]:
        """(source, target) of a nonempty chain; raises if not composable."""
        gens = self.generators
        tgt = gens[letters[0]].target
        prev_src = gens[letters[0]].source
        for i in letters[1:]:
            if gens[i].target != prev_src:
                raise CompositionError(
                    f"letters {gens[i].name!r} and next are not composable")
            prev_src = gens[i].source
        return (prev_src, tgt)

    # -- element constructors -------------------------------------------

    def zero(self, source: str, target: str) -> "Element":
        return Element(self, source, target, {})

    def identity(self, obj: str) -> "Element":
        if obj not in self.objects:
            raise SignatureError(f"unknown object {obj!r}")
        return Element(self, obj, obj, {(): 1})

    def one(self, obj: str) -> "Element":
        return self.identity(obj)

    def gen(self, name: str) -> "Element":
        ref = self.gen_ref(name)
        return Element(self, ref.source, ref.target, {(ref.index,): 1})

    def word(self, letters: Sequence[GeneratorRef | str], obj: str | None = None) -> "Word":
        idx = tuple(self.gen_index(l if isinstance(l, str) else l.name) for l in letters)
        if not idx:
            if obj is None:
                raise CompositionError("empty word needs an explicit object")
            return Word(self, obj, obj, ())
        src, tgt = self.letters_endpoints(idx)
        return Word(self, src, tgt, idx)

    def element(self, terms: Iterable[tuple["Word", int]], source: str | None = None,
                target: str | None = None) -> "Element":
        acc: dict[tuple[int, ...], int] = {}
        src, tgt = source, target
        for w, c in terms:
            self._check_ctx(w.ctx)
            if src is None:
                src, tgt = w.source, w.target
            elif (w.source, w.target) != (src, tgt):
                raise CompositionError("terms do not share source/target")
            acc[w.letters] = acc.get(w.letters, 0) + c
        if src is None:
            raise CompositionError("element endpoints undetermined; pass source/target")
        return Element(self, src, tgt, {k: v for k, v in acc.items() if v})


class Word:
    """A composable chain of generator letters (leftmost applied last)."""

    __slots__ = ("ctx", "source", "target", "letters")

    def __init__(self, ctx: Signature, source: str, target: str, letters: tuple[int, ...]):
        self.ctx = ctx
        self.source = source
        self.target = target
        self.letters = letters

    @property
    def degree(self) -> int:
        return self.ctx.letters_degree(self.letters)

    @property
    def refs(self) -> tuple[GeneratorRef, ...]:
        gens = self.ctx.generators
        return tuple(gens[i] for i in self.letters)

    def is_identity(self) -> bool:
        return not self.letters

    def compose(self, inner: "Word") -> "Word":
        """self applied after ``inner``; endpoints must match."""
        self.ctx._check_ctx(inner.ctx)
        if self.source != inner.target:
            raise CompositionError(
                f"cannot compose: source {self.source!r} != target {inner.target!r}")
        return Word(self.ctx, inner.source, self.target, self.letters + inner.letters)

    def as_element(self, coeff: int = 1) -> "Element":
        if coeff == 0:
            return Element(self.ctx, self.source, self.target, {})
        return Element(self.ctx, self.source, self.target, {self.letters: coeff})

    def __eq__(self, other):
        if not isinstance(other, Word):
            return NotImplemented
        return (self.letters == other.letters and self.source == other.source
                and self.target == other.target and self.ctx.same_signature(other.ctx))

    def __hash__(self):
        return hash((self.source, self.target, self.letters))

    def __repr__(self):
        return f"Word({format_word(self.ctx, self.letters)!r})"

    def __str__(self):
        return format_word(self.ctx, self.letters)


def word_compose(outer: Word, inner: Word) -> Word:
    return outer.compose(inner)


def _term_key(letters: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    return (len(letters), letters)


class Element:
    """Integer linear combination of words sharing source and target.

    The zero element has an empty term map.  Instances are immutable; the
    term dict must not be mutated after construction.
    """

    __slots__ = ("ctx", "source", "target", "_terms")

    def __init__(self, ctx: Signature, source: str, target: str,
                 terms: dict[tuple[int, ...], int]):
        self.ctx = ctx
        self.source = source
        self.target = target
        self._terms = terms

    # -- inspection ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self._terms

    def term_count(self) -> int:
        return len(self._terms)

    def coeff(self, word: Word) -> int:
        return self._terms.get(word.letters, 0)

    def terms(self) -> Iterator[tuple[Word, int]]:
        """Terms in canonical order (length, then declaration-index lex)."""
        for letters in sorted(self._terms, key=_term_key):
            yield (Word(self.ctx, self.source, self.target, letters),
                   self._terms[letters])

    def raw_terms(self) -> dict[tuple[int, ...], int]:
        return self._terms

    def degree(self) -> int | None:
        """Common degree of all terms, or None if mixed or zero.

        The zero element is homogeneous of every degree; use
        :meth:`is_homogeneous` for degree checks that should accept zero.
        """
        deg = None
        for letters in self._terms:
            d = self.ctx.letters_degree(letters)
            if deg is None:
                deg = d
            elif d != deg:
                return None
        return deg

    def is_homogeneous(self, degree: int | None = None) -> bool:
        if not self._terms:
            return True
        d = self.degree()
        if d is None:
            return False
        return degree is None or d == degree

    def support_indices(self) -> set[int]:
        out: set[int] = set()
        for letters in self._terms:
            out.update(letters)
        return out

    # -- arithmetic ------------------------------------------------------

    def _require_parallel(self, other: "Element"):
        self.ctx._check_ctx(other.ctx)
        if (self.source, self.target) != (other.source, other.target):
            raise CompositionError("elements have different endpoints")

    def __add__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        self._require_parallel(other)
        acc = dict(self._terms)
        for k, v in other._terms.items():
            nv = acc.get(k, 0) + v
            if nv:
                acc[k] = nv
            else:
                acc.pop(k, None)
        return Element(self.ctx, self.source, self.target, acc)

    def __sub__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return Element(self.ctx, self.source, self.target,
                       {k: -v for k, v in self._terms.items()})

    def scale(self, c: int) -> "Element":
        if c == 0:
            return Element(self.ctx, self.source, self.target, {})
        return Element(self.ctx, self.source, self.target,
                       {k: c * v for k, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        if not isinstance(other, Element):
            return NotImplemented
        # self after other: source(self) must equal target(other)
        self.ctx._check_ctx(other.ctx)
        if self.source != other.target:
            raise CompositionError(
                f"cannot compose: source {self.source!r} != target {other.target!r}")
        acc: dict[tuple[int, ...], int] = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                k = w1 + w2
                nv = acc.get(k, 0) + c1 * c2
                if nv:
                    acc[k] = nv
                else:
                    acc.pop(k, None)
        return Element(self.ctx, other.source, self.target, acc)

    def __rmul__(self, other):
        if isinstance(other, int):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int):
        if self.source != self.target:
            raise CompositionError("powers need an endomorphism element")
        if k < 0:
            raise ValueError("negative powers are not defined")
        out = self.ctx.identity(self.source)
        for _ in range(k):
            out = out * self
        return out

    # -- comparison / rendering ------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return (self._terms == other._terms
                and self.source == other.source and self.target == other.target
                and self.ctx.same_signature(other.ctx))

    def __ne__(self, other):
        out = self.__eq__(other)
        return NotImplemented if out is NotImplemented else not out

    def __str__(self):
        return format_element(self)

    def __repr__(self):
        return f"Element({format_element(self)!r})"


def elem_add(a: Element, b: Element) -> Element:
    return a + b


def elem_mul(a: Element, b: Element) -> Element:
    return a * b


def elem_degree(a: Element) -> int | None:
    return a.degree()


# -- text format ----------------------------------------------------------
#
# Grammar (used by presentation files and the command line):
#   expr   := ['-'] term (('+'|'-') term)*
#   term   := factor (('*' factor) | factor)*        adjacency = composition
#   factor := atom ['^' INT]
#   atom   := INT | NAME | '(' expr ')'
# '1' is the identity, '0' the zero element.  Written left-to-right, applied
# right-to-left.  Names match [A-Za-z_][A-Za-z0-9_#'~]*.


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


_NAME_START = set("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_")
_NAME_CONT = _NAME_START | set("0123456789#'~")


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    i, n = 0, len(text)
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
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(("INT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in _NAME_START:
            j = i
            while j < n and text[j] in _NAME_CONT:
                j += 1
            tokens.append(("NAME", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in "+-*^()":
            tokens.append((ch, ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(("END", "", line, col))
    return tokens


class _Scalar:
    """Parsed integer not yet attached to an object."""

    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value


class _Parser:
    def __init__(self, ctx: Signature, text: str,
                 source: str | None, target: str | None):
        self.ctx = ctx
        self.tokens = _tokenize(text)
        self.pos = 0
        self.source = source
        self.target = target

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str):
        _, _, line, col = self.peek()
        raise ParseError(message, line, col)

    # scalar promotion: a bare integer means c * identity, which needs an
    # object; endpoints come from a sibling element or from the caller hints.
    def promote(self, value):
        if isinstance(value, Element):
            return value
        c = value.value
        if self.source is not None and self.source == self.target:
            obj = self.source
        elif self.source is None and self.target is None:
            self.error("bare integer needs an endomorphism context")
        else:
            self.error("bare integer at non-endomorphism endpoints")
        if c == 0:
            return self.ctx.zero(obj, obj)
        return self.ctx.identity(obj).scale(c)

    def combine_mul(self, a, b):
        if isinstance(a, _Scalar) and isinstance(b, _Scalar):
            return _Scalar(a.value * b.value)
        if isinstance(a, _Scalar):
            return b.scale(a.value)
        if isinstance(b, _Scalar):
            return a.scale(b.value)
        try:
            return a * b
        except CompositionError as exc:
            self.error(str(exc))

    def combine_add(self, a, b, sign: int):
        if isinstance(a, _Scalar) and isinstance(b, _Scalar):
            return _Scalar(a.value + sign * b.value)
        if isinstance(a, _Scalar):
            a = self._scalar_like(a, b)
        if isinstance(b, _Scalar):
            b = self._scalar_like(b, a)
        try:
            return a + b.scale(sign)
        except CompositionError as exc:
            self.error(str(exc))

    def _scalar_like(self, s: _Scalar, template: Element) -> Element:
        if template.source != template.target:
            self.error("integer term at non-endomorphism endpoints")
        if s.value == 0:
            return template.ctx.zero(template.source, template.source)
        return template.ctx.identity(template.source).scale(s.value)

    def parse(self) -> Element:
        value = self.expr()
        kind, text, _, _ = self.peek()
        if kind != "END":
            self.error(f"unexpected {text!r}")
        value = self.promote(value)
        if self.source is not None and (value.source, value.target) != (self.source, self.target):
            self.error(f"element has endpoints {value.source!r} -> {value.target!r}, "
                       f"expected {self.source!r} -> {self.target!r}")
        return value

    def expr(self):
        sign = 1
        if self.peek()[0] == "-":
            self.next()
            sign = -1
        value = self.term()
        if sign < 0:
            value = _Scalar(-value.value) if isinstance(value, _Scalar) else -value
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            rhs = self.term()
            value = self.combine_add(value, rhs, 1 if op == "+" else -1)
        return value

    def term(self):
        value = self.factor()
        while True:
            kind = self.peek()[0]
            if kind == "*":
                self.next()
                value = self.combine_mul(value, self.factor())
            elif kind in ("INT", "NAME", "("):
                value = self.combine_mul(value, self.factor())
            else:
                return value

    def factor(self):
        value = self.atom()
        while self.peek()[0] == "^":
            self.next()
            kind, text, _, _ = self.next()
            if kind != "INT":
                self.error("exponent must be a nonnegative integer")
            k = int(text)
            if isinstance(value, _Scalar):
                value = _Scalar(value.value ** k)
            else:
                try:
                    value = value ** k
                except CompositionError as exc:
                    self.error(str(exc))
        return value

    def atom(self):
        kind, text, _, _ = self.peek()
        if kind == "INT":
            self.next()
            return _Scalar(int(text))
        if kind == "NAME":
            self.next()
            if not self.ctx.has_gen(text):
                self.error(f"unknown generator {text!r}")
            return self.ctx.gen(text)
        if kind == "(":
            self.next()
            value = self.expr()
            if self.peek()[0] != ")":
                self.error("expected ')'")
            self.next()
            return value
        self.error(f"unexpected {text!r}" if text else "unexpected end of input")


def parse_element(ctx: Signature, text: str, source: str | None = None,
                  target: str | None = None) -> Element:
    """Parse the element grammar against a signature.

    ``source``/``target`` pin the expected endpoints; they are required to
    resolve bare integers (identity multiples) when no generator appears.
    """
    if (source is None) != (target is None):
        raise ValueError("pass both source and target, or neither")
    return _Parser(ctx, text, source, target).parse()


def format_word(ctx: Signature, letters: tuple[int, ...]) -> str:
    if not letters:
        return "1"
    gens = ctx.generators
    parts = []
    i = 0
    while i < len(letters):
        j = i
        while j < len(letters) and letters[j] == letters[i]:
            j += 1
        name = gens[letters[i]].name
        parts.append(name if j - i == 1 else f"{name}^{j - i}")
        i = j
    return "*".join(parts)


def format_element(e: Element) -> str:
    if e.is_zero():
        return "0"
    parts: list[str] = []
    for letters in sorted(e._terms, key=_term_key):
        c = e._terms[letters]
        body = format_word(e.ctx, letters)
        if body == "1":
            mag = str(abs(c))
        elif abs(c) == 1:
            mag = body
        else:
            mag = f"{abs(c)}*{body}"
        if not parts:
            parts.append(mag if c > 0 else f"-{mag}")
        else:
            parts.append(f"+ {mag}" if c > 0 else f"- {mag}")
    return " ".join(parts)
