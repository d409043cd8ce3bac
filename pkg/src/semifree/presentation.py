"""Semifree dg category presentations.

A presentation is a signature (objects, ordered generators) together with a
differential element for every generator.  The generator order is the
semifree filtration: a differential may only use generators declared earlier,
which the builder enforces.  ``validate`` re-checks everything that can be
stated per generator, including d(df) = 0; by the Leibniz rule that suffices
for d^2 = 0 on all elements.

Degree bookkeeping is cohomological: the differential has degree +1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator

from .core import (Element, ParseError, Signature, SignatureError,
                   format_element, parse_element)


class PresentationError(ValueError):
    """Raised for structurally broken presentations."""


@dataclass(frozen=True)
class InverseRecord:
    """Names of a localized generator and its four auxiliary generators."""

    gen: str
    inv: str
    hat: str
    chk: str
    bar: str

    def names(self) -> tuple[str, str, str, str, str]:
        return (self.gen, self.inv, self.hat, self.chk, self.bar)


@dataclass(frozen=True)
class Issue:
    generator: str
    check: str
    message: str

    def __str__(self):
        return f"[{self.check}] {self.generator}: {self.message}"


@dataclass
class ValidationReport:
    issues: list[Issue]

    @property
    def ok(self) -> bool:
        return not self.issues

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(str(i) for i in self.issues)


class DgPresentation(Signature):
    """Immutable semifree presentation: signature + differentials + records.

    ``strict=True`` (the default and what the builder uses) raises on
    filtration or endpoint violations at construction; ``strict=False`` is
    the file-loading path, deferring those to :meth:`validate`.
    """

    def __init__(self, objects: Iterable[str],
                 generators: Iterable[tuple[str, str, str, int]],
                 differentials: dict[str, Element],
                 inverse_records: Iterable[InverseRecord] = (),
                 strict: bool = True):
        super().__init__(objects, generators)
        diffs: list[Element] = []
        for ref in self.generators:
            d = differentials.get(ref.name)
            if d is None:
                d = self.zero(ref.source, ref.target)
            else:
                d = Element(self, d.source, d.target, d.raw_terms())
            if strict:
                if (d.source, d.target) != (ref.source, ref.target):
                    raise PresentationError(
                        f"differential of {ref.name!r} has wrong endpoints")
                if any(i >= ref.index for i in d.support_indices()):
                    raise PresentationError(
                        f"differential of {ref.name!r} references a generator "
                        f"not declared earlier")
            diffs.append(d)
        self._diffs: tuple[Element, ...] = tuple(diffs)
        records = []
        for rec in inverse_records:
            if not isinstance(rec, InverseRecord):
                rec = InverseRecord(*rec)
            records.append(rec)
        self.inverse_records: tuple[InverseRecord, ...] = tuple(records)
        self._record_by_gen = {r.gen: r for r in self.inverse_records}

    # -- accessors ---------------------------------------------------------

    def differential(self, name: str) -> Element:
        return self._diffs[self.gen_index(name)]

    def differentials(self) -> Iterator[tuple[str, Element]]:
        for ref, d in zip(self.generators, self._diffs):
            yield ref.name, d

    def record_for(self, name: str) -> InverseRecord | None:
        return self._record_by_gen.get(name)

    def gen_specs(self) -> list[tuple[str, str, str, int]]:
        return [ref.spec() for ref in self.generators]

    def is_closed_deg0(self, name: str) -> bool:
        ref = self.gen_ref(name)
        return ref.degree == 0 and self.differential(name).is_zero()

    # -- the differential on elements ---------------------------------------

    def d(self, e: Element) -> Element:
        """Leibniz extension of the generator differentials.

        d(g_k ... g_1) = sum_j (-1)^(|g_k|+...+|g_{j+1}|)
                         g_k ... g_{j+1} (d g_j) g_{j-1} ... g_1,
        extended linearly; d of an identity is zero.
        """
        self._check_ctx(e.ctx)
        acc: dict[tuple[int, ...], int] = {}
        diffs = self._diffs
        gens = self.generators
        for letters, coeff in e.raw_terms().items():
            sign = 1
            for pos, li in enumerate(letters):
                dg = diffs[li]
                if dg.raw_terms():
                    prefix = letters[:pos]
                    suffix = letters[pos + 1:]
                    s = sign * coeff
                    for dletters, dc in dg.raw_terms().items():
                        k = prefix + dletters + suffix
                        nv = acc.get(k, 0) + s * dc
                        if nv:
                            acc[k] = nv
                        else:
                            acc.pop(k, None)
                if gens[li].degree % 2:
                    sign = -sign
        return Element(self, e.source, e.target, acc)

    # -- validation ----------------------------------------------------------

    def validate(self) -> ValidationReport:
        issues: list[Issue] = []
        for ref, df in zip(self.generators, self._diffs):
            if (df.source, df.target) != (ref.source, ref.target):
                issues.append(Issue(ref.name, "endpoints",
                                    f"d has endpoints {df.source!r} -> {df.target!r}, "
                                    f"generator has {ref.source!r} -> {ref.target!r}"))
                continue
            bad = [i for i in df.support_indices() if i >= ref.index]
            if bad:
                names = ", ".join(self.generators[i].name for i in sorted(bad))
                issues.append(Issue(ref.name, "filtration",
                                    f"d references non-earlier generator(s) {names}"))
                continue
            if not df.is_homogeneous(ref.degree + 1):
                got = df.degree()
                issues.append(Issue(ref.name, "degree",
                                    f"d must be homogeneous of degree {ref.degree + 1}, "
                                    f"got {'mixed' if got is None else got}"))
                continue
            dd = self.d(df)
            if not dd.is_zero():
                issues.append(Issue(ref.name, "d-squared",
                                    f"d(d({ref.name})) = {format_element(dd)}"))
        return ValidationReport(issues)

    # -- structural comparison ------------------------------------------------

    def same_presentation(self, other: "DgPresentation") -> bool:
        return (self.objects == other.objects
                and self.gen_specs() == other.gen_specs()
                and all(a.raw_terms() == b.raw_terms()
                        for (_, a), (_, b) in zip(self.differentials(),
                                                  other.differentials()))
                and set(r.names() for r in self.inverse_records)
                == set(r.names() for r in other.inverse_records))

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "objects": list(self.objects),
            "generators": [
                {"name": ref.name, "src": ref.source, "dst": ref.target,
                 "deg": ref.degree, "d": format_element(d)}
                for ref, d in zip(self.generators, self._diffs)
            ],
            "invert": [list(r.names()) for r in self.inverse_records],
        }

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def extend_differential(pres: DgPresentation, e: Element) -> Element:
    return pres.d(e)


def validate(pres: DgPresentation) -> ValidationReport:
    return pres.validate()


class _LiveSignature(Signature):
    """Growable signature used during building.

    A builder hands out one instance whose generator list grows in place, so
    element handles created early stay usable while later generators are
    declared.  Arithmetic only reads by index, which is append-stable.
    """

    def __init__(self):
        self.objects = []  # type: ignore[assignment]
        self.generators = []  # type: ignore[assignment]
        self._index = {}

    def add_object(self, name: str):
        if not name:
            raise SignatureError("object name must be nonempty")
        if name in self.objects:
            raise SignatureError(f"duplicate object {name!r}")
        self.objects.append(name)

    def add_generator(self, name: str, source: str, target: str, degree: int):
        from .core import GeneratorRef
        if name in self._index:
            raise SignatureError(f"duplicate generator {name!r}")
        if source not in self.objects or target not in self.objects:
            raise SignatureError(f"generator {name!r} has unknown endpoint")
        self._index[name] = len(self.generators)
        self.generators.append(GeneratorRef(name, source, target, degree,
                                            len(self.generators)))

    def same_signature(self, other: Signature) -> bool:
        if self is other:
            return True
        return (tuple(self.objects) == tuple(other.objects)
                and len(self.generators) == len(other.generators)
                and all(a.spec() == b.spec()
                        for a, b in zip(self.generators, other.generators)))


class PresentationBuilder:
    """Incremental construction respecting the semifree filtration.

    ``add_generator`` returns the generator as an element, so differentials
    of later generators can be written with ordinary arithmetic:

        b = PresentationBuilder()
        b.add_object("L")
        x = b.add_generator("x", "L", "L", 0)
        y = b.add_generator("y", "L", "L", -1, d=b.one("L") - x**5)
    """

    def __init__(self):
        self._live = _LiveSignature()
        self._diffs: dict[str, Element] = {}
        self._records: list[InverseRecord] = []

    @property
    def sig(self) -> Signature:
        return self._live

    def add_object(self, name: str) -> str:
        try:
            self._live.add_object(name)
        except SignatureError as exc:
            raise PresentationError(str(exc)) from None
        return name

    def has_object(self, name: str) -> bool:
        return name in self._live.objects

    def has_generator(self, name: str) -> bool:
        return self._live.has_gen(name)

    def one(self, obj: str) -> Element:
        return self.sig.identity(obj)

    def gen(self, name: str) -> Element:
        return self.sig.gen(name)

    def zero(self, source: str, target: str) -> Element:
        return self.sig.zero(source, target)

    def add_generator(self, name: str, source: str, target: str, degree: int,
                      d: Element | int | None = None) -> Element:
        if isinstance(d, int):
            if d != 0:
                raise PresentationError("integer differential must be 0")
            d = None
        if d is not None:
            if (d.source, d.target) != (source, target):
                raise PresentationError(
                    f"differential of {name!r} has wrong endpoints")
            known = len(self._live.generators)
            if any(i >= known for i in d.support_indices()):
                raise PresentationError(
                    f"differential of {name!r} references a generator "
                    f"not declared earlier")
        try:
            self._live.add_generator(name, source, target, int(degree))
        except SignatureError as exc:
            raise PresentationError(str(exc)) from None
        if d is not None:
            self._diffs[name] = d
        return self.sig.gen(name)

    def add_record(self, record: InverseRecord):
        self._records.append(record)

    def build(self) -> DgPresentation:
        return DgPresentation(list(self._live.objects),
                              [r.spec() for r in self._live.generators],
                              self._diffs, self._records, strict=True)


# -- JSON loading -------------------------------------------------------------


def presentation_from_json(data: dict, strict: bool = False) -> DgPresentation:
    """Build from the JSON presentation format.

    Structural problems (bad field types, unknown names in differential
    strings) raise; semantic problems (degrees, filtration, d^2) are left to
    ``validate`` unless ``strict``.
    """
    if not isinstance(data, dict):
        raise PresentationError("presentation file must be a JSON object")
    objects = data.get("objects")
    gens = data.get("generators")
    if not isinstance(objects, list) or not all(isinstance(o, str) for o in objects):
        raise PresentationError("'objects' must be a list of strings")
    if not isinstance(gens, list):
        raise PresentationError("'generators' must be a list")
    specs: list[tuple[str, str, str, int]] = []
    dtexts: list[str] = []
    for entry in gens:
        if not isinstance(entry, dict):
            raise PresentationError("generator entries must be objects")
        try:
            name, src, dst = entry["name"], entry["src"], entry["dst"]
            deg = entry["deg"]
        except KeyError as exc:
            raise PresentationError(f"generator entry missing field {exc}") from None
        if not isinstance(deg, int) or isinstance(deg, bool):
            raise PresentationError(f"degree of {name!r} must be an integer")
        if not all(isinstance(v, str) for v in (name, src, dst)):
            raise PresentationError("generator name/src/dst must be strings")
        specs.append((name, src, dst, deg))
        dtexts.append(entry.get("d", "0"))
    try:
        sig = Signature(objects, specs)
    except SignatureError as exc:
        raise PresentationError(str(exc)) from None
    diffs: dict[str, Element] = {}
    for (name, src, dst, _), text in zip(specs, dtexts):
        if not isinstance(text, str):
            raise PresentationError(f"differential of {name!r} must be a string")
        try:
            diffs[name] = parse_element(sig, text, src, dst)
        except ParseError as exc:
            raise PresentationError(
                f"differential of {name!r}: {exc}") from None
    records = []
    for rec in data.get("invert", []):
        if not (isinstance(rec, list) and len(rec) == 5
                and all(isinstance(s, str) for s in rec)):
            raise PresentationError("'invert' entries must be 5 generator names")
        for s in rec:
            if not sig.has_gen(s):
                raise PresentationError(f"'invert' references unknown generator {s!r}")
        records.append(InverseRecord(*rec))
    return DgPresentation(objects, specs, diffs, records, strict=strict)


def load_presentation(path: str, strict: bool = False) -> DgPresentation:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PresentationError(f"{path}: {exc}") from None
    return presentation_from_json(data, strict=strict)


def save_presentation(pres: DgPresentation, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(pres.to_json_text())
        fh.write("\n")
