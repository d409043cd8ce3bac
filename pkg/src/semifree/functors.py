"""Dg functors between presentations, and span diagrams.

A functor stores images for objects and generators only; identities map
automatically and images of words are products of letter images, which is
enough because presentations are free as graded categories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .core import CompositionError, Element, parse_element, format_element
from .presentation import DgPresentation, Issue, ValidationReport


class FunctorError(ValueError):
    pass


class DgFunctor:
    """Object map plus generator-to-element assignment.

    The constructor checks endpoints and degrees of the images (an image must
    be homogeneous of the generator's degree, or zero); dg-compatibility is a
    separate check, :meth:`check_dg`.
    """

    def __init__(self, domain: DgPresentation, codomain: DgPresentation,
                 object_map: dict[str, str], gen_map: dict[str, Element]):
        self.domain = domain
        self.codomain = codomain
        self.object_map = dict(object_map)
        images: list[Element] = []
        for ref in domain.generators:
            if ref.name not in gen_map:
                raise FunctorError(f"no image for generator {ref.name!r}")
            img = gen_map[ref.name]
            codomain._check_ctx(img.ctx)
            want = (self._obj(ref.source), self._obj(ref.target))
            if (img.source, img.target) != want:
                raise FunctorError(
                    f"image of {ref.name!r} has endpoints "
                    f"{img.source!r} -> {img.target!r}, expected "
                    f"{want[0]!r} -> {want[1]!r}")
            if not img.is_homogeneous(ref.degree):
                raise FunctorError(
                    f"image of {ref.name!r} is not homogeneous of degree {ref.degree}")
            images.append(Element(codomain, img.source, img.target, img.raw_terms()))
        self._images: tuple[Element, ...] = tuple(images)

    def _obj(self, name: str) -> str:
        try:
            return self.object_map[name]
        except KeyError:
            raise FunctorError(f"no image for object {name!r}") from None

    def image_of(self, gen_name: str) -> Element:
        return self._images[self.domain.gen_index(gen_name)]

    def apply(self, e: Element) -> Element:
        """Image of an element: replace letters by their images, multiply."""
        self.domain._check_ctx(e.ctx)
        src = self._obj(e.source)
        tgt = self._obj(e.target)
        acc: dict[tuple[int, ...], int] = {}
        images = self._images
        for letters, coeff in e.raw_terms().items():
            # peel off single-term unit-coefficient images cheaply
            partial: dict[tuple[int, ...], int] = {(): coeff}
            for li in letters:
                img = images[li].raw_terms()
                if not img:
                    partial = {}
                    break
                if len(img) == 1:
                    (w, c), = img.items()
                    if c == 1:
                        partial = {k + w: v for k, v in partial.items()}
                        continue
                nxt: dict[tuple[int, ...], int] = {}
                for k, v in partial.items():
                    for w, c in img.items():
                        key = k + w
                        nv = nxt.get(key, 0) + v * c
                        if nv:
                            nxt[key] = nv
                        else:
                            nxt.pop(key, None)
                partial = nxt
            for k, v in partial.items():
                nv = acc.get(k, 0) + v
                if nv:
                    acc[k] = nv
                else:
                    acc.pop(k, None)
        return Element(self.codomain, src, tgt, acc)

    def check_dg(self) -> ValidationReport:
        """Verify F(df) = d(F(f)) on every generator of the domain."""
        issues: list[Issue] = []
        for ref in self.domain.generators:
            lhs = self.apply(self.domain.differential(ref.name))
            rhs = self.codomain.d(self.image_of(ref.name))
            if lhs != rhs:
                issues.append(Issue(ref.name, "dg",
                                    f"F(d {ref.name}) = {format_element(lhs)} but "
                                    f"d(F {ref.name}) = {format_element(rhs)}"))
        return ValidationReport(issues)

    def then(self, other: "DgFunctor") -> "DgFunctor":
        """``other`` after ``self`` (domains chained left to right)."""
        return compose_functors(other, self)

    def __eq__(self, other):
        if not isinstance(other, DgFunctor):
            return NotImplemented
        return (self.domain.same_signature(other.domain)
                and self.codomain.same_signature(other.codomain)
                and self.object_map == other.object_map
                and all(a == b for a, b in zip(self._images, other._images)))

    def __repr__(self):
        gens = ", ".join(f"{r.name} -> {format_element(i)}"
                         for r, i in zip(self.domain.generators, self._images))
        return f"DgFunctor({gens})"

    def to_json(self) -> dict:
        return {
            "objects": dict(self.object_map),
            "gens": {ref.name: format_element(img)
                     for ref, img in zip(self.domain.generators, self._images)},
        }


def identity_functor(pres: DgPresentation) -> DgFunctor:
    return DgFunctor(pres, pres,
                     {o: o for o in pres.objects},
                     {ref.name: pres.gen(ref.name) for ref in pres.generators})


def compose_functors(g: DgFunctor, f: DgFunctor) -> DgFunctor:
    """g after f."""
    if not f.codomain.same_signature(g.domain):
        raise FunctorError("functor domains do not chain")
    return DgFunctor(f.domain, g.codomain,
                     {o: g._obj(f._obj(o)) for o in f.domain.objects},
                     {ref.name: g.apply(f.image_of(ref.name))
                      for ref in f.domain.generators})


def apply(functor: DgFunctor, e: Element) -> Element:
    return functor.apply(e)


def check_dg(functor: DgFunctor) -> ValidationReport:
    return functor.check_dg()


@dataclass
class Span:
    """A pushout diagram alpha: C -> A, beta: C -> B with common domain."""

    alpha: DgFunctor
    beta: DgFunctor

    def __post_init__(self):
        if not self.alpha.domain.same_signature(self.beta.domain):
            raise FunctorError("span legs must share their domain")

    @property
    def apex(self) -> DgPresentation:
        return self.alpha.domain

    @property
    def left(self) -> DgPresentation:
        return self.alpha.codomain

    @property
    def right(self) -> DgPresentation:
        return self.beta.codomain


def functor_from_json(domain: DgPresentation, codomain: DgPresentation,
                      data: dict) -> DgFunctor:
    if not isinstance(data, dict):
        raise FunctorError("functor file must be a JSON object")
    objects = data.get("objects")
    gens = data.get("gens")
    if not isinstance(objects, dict) or not isinstance(gens, dict):
        raise FunctorError("functor file needs 'objects' and 'gens' maps")
    gen_map: dict[str, Element] = {}
    for name, text in gens.items():
        if not domain.has_gen(name):
            raise FunctorError(f"unknown domain generator {name!r}")
        ref = domain.gen_ref(name)
        try:
            src = objects[ref.source]
            tgt = objects[ref.target]
        except KeyError as exc:
            raise FunctorError(f"no image for object {exc}") from None
        gen_map[name] = parse_element(codomain, text, src, tgt)
    return DgFunctor(domain, codomain, objects, gen_map)


def load_functor(domain: DgPresentation, codomain: DgPresentation,
                 path: str) -> DgFunctor:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return functor_from_json(domain, codomain, data)


def save_functor(functor: DgFunctor, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(functor.to_json(), fh, indent=2)
        fh.write("\n")
