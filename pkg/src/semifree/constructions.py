"""Gluing machines for semifree presentations.

Four constructions: the cylinder object (plain and localized), dg
localisation by adjoining formal inverses, strict pushout along a semifree
extension, and the homotopy pushout of a span (plain and localized).  Every
construction returns the canonical comparison functors alongside the new
presentation, plus a provenance map saying where each generator came from.

All outputs are built through the strict builder, so the semifree filtration
holds by construction; d^2 = 0 is re-checked by the callers' validators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import Element
from .functors import DgFunctor, Span
from .presentation import (DgPresentation, InverseRecord, PresentationBuilder,
                           PresentationError)


class ConstructionError(ValueError):
    pass


def fresh_name(base: str, taken) -> str:
    if base not in taken:
        return base
    k = 2
    while f"{base}~{k}" in taken:
        k += 1
    return f"{base}~{k}"


class _NameSpace:
    """Tracks generator and object names already used in a builder."""

    def __init__(self):
        self.gen_names: set[str] = set()
        self.obj_names: set[str] = set()

    def gen(self, base: str) -> str:
        name = fresh_name(base, self.gen_names)
        self.gen_names.add(name)
        return name

    def obj(self, base: str) -> str:
        name = fresh_name(base, self.obj_names)
        self.obj_names.add(name)
        return name


def _push_element(e: Element, sig, letter_map: dict[int, int],
                  src: str, tgt: str) -> Element:
    terms = {tuple(letter_map[i] for i in k): v for k, v in e.raw_terms().items()}
    return Element(sig, src, tgt, terms)


def _copy_presentation_into(builder: PresentationBuilder, ns: _NameSpace,
                            pres: DgPresentation,
                            obj_rename: dict[str, str],
                            provenance: dict[str, str], tag: str
                            ) -> dict[str, str]:
    """Copy all generators of ``pres`` into ``builder``.

    ``obj_rename`` must already map every object of ``pres`` to a builder
    object.  Returns the generator rename map.
    """
    gen_rename: dict[str, str] = {}
    letter_map: dict[int, int] = {}
    for ref in pres.generators:
        new = ns.gen(ref.name)
        gen_rename[ref.name] = new
        d = pres.differential(ref.name)
        src = obj_rename[ref.source]
        tgt = obj_rename[ref.target]
        de = _push_element(d, builder.sig, letter_map, src, tgt)
        builder.add_generator(new, src, tgt, ref.degree, de if de.raw_terms() else None)
        letter_map[ref.index] = builder.sig.gen_index(new)
        provenance[new] = f"{tag}:{ref.name}"
    for rec in pres.inverse_records:
        builder.add_record(InverseRecord(*(gen_rename[n] for n in rec.names())))
    return gen_rename


def _renaming_functor(pres: DgPresentation, out: DgPresentation,
                      obj_rename: dict[str, str],
                      gen_rename: dict[str, str]) -> DgFunctor:
    return DgFunctor(pres, out, dict(obj_rename),
                     {name: out.gen(new) for name, new in gen_rename.items()})


# -- localisation ------------------------------------------------------------


@dataclass
class LocalizeResult:
    presentation: DgPresentation
    inclusion: DgFunctor
    new_records: list[InverseRecord]


def localize(pres: DgPresentation, names: Sequence[str]) -> LocalizeResult:
    """Adjoin a two-sided homotopy inverse for each named generator.

    Per generator f: A -> B this adds inv_f: B -> A (closed, degree 0),
    hat_f: A -> A and chk_f: B -> B of degree -1 with
    d hat_f = 1_A - inv_f f and d chk_f = 1_B - f inv_f, and bar_f: A -> B of
    degree -2 with d bar_f = f hat_f - chk_f f, recording the five names.
    Only closed degree-0 generators can be inverted.
    """
    builder = PresentationBuilder()
    ns = _NameSpace()
    for o in pres.objects:
        builder.add_object(ns.obj(o))
    prov: dict[str, str] = {}
    obj_rename = {o: o for o in pres.objects}
    _copy_presentation_into(builder, ns, pres, obj_rename, prov, "base")
    sig = builder.sig
    new_records = []
    for name in names:
        ref = pres.gen_ref(name)
        if ref.degree != 0:
            raise ConstructionError(
                f"cannot invert {name!r}: degree {ref.degree}, need 0")
        if not pres.differential(name).is_zero():
            raise ConstructionError(f"cannot invert {name!r}: not closed")
        a, b = ref.source, ref.target
        f = sig.gen(name)
        inv_name = ns.gen(f"inv_{name}")
        hat_name = ns.gen(f"hat_{name}")
        chk_name = ns.gen(f"chk_{name}")
        bar_name = ns.gen(f"bar_{name}")
        inv = builder.add_generator(inv_name, b, a, 0)
        hat = builder.add_generator(hat_name, a, a, -1,
                                    d=sig.identity(a) - inv * f)
        chk = builder.add_generator(chk_name, b, b, -1,
                                    d=sig.identity(b) - f * inv)
        builder.add_generator(bar_name, a, b, -2, d=f * hat - chk * f)
        rec = InverseRecord(name, inv_name, hat_name, chk_name, bar_name)
        new_records.append(rec)
        builder.add_record(rec)
    out = builder.build()
    gen_rename = {ref.name: ref.name for ref in pres.generators}
    inclusion = _renaming_functor(pres, out, obj_rename, gen_rename)
    return LocalizeResult(out, inclusion, new_records)


# -- cylinder ----------------------------------------------------------------


@dataclass
class Cylinder0Result:
    presentation: DgPresentation
    i1: DgFunctor
    i2: DgFunctor
    t_object_names: list[str]
    provenance: dict[str, str]


@dataclass
class CylinderResult:
    presentation: DgPresentation
    i1: DgFunctor
    i2: DgFunctor
    projection: DgFunctor
    provenance: dict[str, str]


def cylinder0(pres: DgPresentation) -> Cylinder0Result:
    """Two copies of a presentation joined by connecting t-generators.

    Copies carry ``#1``/``#2`` suffixes.  For each object A there is a closed
    degree-0 generator t_A: A#1 -> A#2; for each generator f: A -> B of
    degree |f| there is t_f: A#1 -> B#2 of degree |f| - 1 with

        d t_f = (-1)^{|f|} (f#2 t_A - t_B f#1)
                + sum over non-identity words of df, letter by letter,
                  with #2 copies left of the t and #1 copies right of it,

    the inner sign being (-1)^(degree sum of the letters right of the one
    replaced).  Identity terms of df contribute nothing.
    """
    builder = PresentationBuilder()
    ns = _NameSpace()
    prov: dict[str, str] = {}
    obj1 = {o: ns.obj(f"{o}#1") for o in pres.objects}
    obj2 = {o: ns.obj(f"{o}#2") for o in pres.objects}
    for o in pres.objects:
        builder.add_object(obj1[o])
    for o in pres.objects:
        builder.add_object(obj2[o])
    gen1 = _copy_presentation_into(
        builder, ns, _suffixed_view(pres, "#1"),
        {f"{o}#1": obj1[o] for o in pres.objects}, prov, "copy1")
    gen2 = _copy_presentation_into(
        builder, ns, _suffixed_view(pres, "#2"),
        {f"{o}#2": obj2[o] for o in pres.objects}, prov, "copy2")
    # the suffixed views rename generators f -> f#1 etc; compose the maps
    gen1 = {ref.name: gen1[f"{ref.name}#1"] for ref in pres.generators}
    gen2 = {ref.name: gen2[f"{ref.name}#2"] for ref in pres.generators}
    sig = builder.sig
    map1 = {ref.index: sig.gen_index(gen1[ref.name]) for ref in pres.generators}
    map2 = {ref.index: sig.gen_index(gen2[ref.name]) for ref in pres.generators}

    t_obj: dict[str, str] = {}
    for o in pres.objects:
        name = ns.gen(f"t_{o}")
        t_obj[o] = name
        builder.add_generator(name, obj1[o], obj2[o], 0)
        prov[name] = f"t-object:{o}"

    def side1(letters: tuple[int, ...], src: str, tgt: str) -> Element:
        return Element(sig, obj1[src], obj1[tgt],
                       {tuple(map1[i] for i in letters): 1})

    def side2(letters: tuple[int, ...], src: str, tgt: str) -> Element:
        return Element(sig, obj2[src], obj2[tgt],
                       {tuple(map2[i] for i in letters): 1})

    t_gen: dict[str, str] = {}
    for ref in pres.generators:
        name = ns.gen(f"t_{ref.name}")
        t_gen[ref.name] = name
        a, b = ref.source, ref.target
        f1 = sig.gen(gen1[ref.name])
        f2 = sig.gen(gen2[ref.name])
        ta = sig.gen(t_obj[a])
        tb = sig.gen(t_obj[b])
        d = f2 * ta - tb * f1
        if ref.degree % 2:
            d = -d
        df = pres.differential(ref.name)
        gens = pres.generators
        for letters, coeff in df.raw_terms().items():
            if not letters:
                continue  # identity terms contribute no t-term
            word_src, word_tgt = a, b
            for pos in range(len(letters)):
                sign = 1
                for later in letters[pos + 1:]:
                    if gens[later].degree % 2:
                        sign = -sign
                mid = gens[letters[pos]]
                # empty prefix/suffix endpoints coincide, so no special case
                left = side2(letters[:pos], mid.target, word_tgt)
                right = side1(letters[pos + 1:], word_src, mid.source)
                tmid = sig.gen(t_gen[mid.name])
                d = d + (left * tmid * right).scale(coeff * sign)
        builder.add_generator(name, obj1[a], obj2[b], ref.degree - 1, d)
        prov[name] = f"t-generator:{ref.name}"
    out = builder.build()
    i1 = _renaming_functor(pres, out, obj1, gen1)
    i2 = _renaming_functor(pres, out, obj2, gen2)
    return Cylinder0Result(out, i1, i2, [t_obj[o] for o in pres.objects], prov)


def _suffixed_view(pres: DgPresentation, suffix: str) -> DgPresentation:
    """A copy of ``pres`` with every object and generator name suffixed."""
    objects = [f"{o}{suffix}" for o in pres.objects]
    specs = [(f"{r.name}{suffix}", f"{r.source}{suffix}", f"{r.target}{suffix}",
              r.degree) for r in pres.generators]
    out = DgPresentation(objects, specs, {}, strict=True)
    diffs = {}
    for ref in pres.generators:
        d = pres.differential(ref.name)
        diffs[f"{ref.name}{suffix}"] = Element(
            out, f"{d.source}{suffix}", f"{d.target}{suffix}",
            dict(d.raw_terms()))
    records = [InverseRecord(*(f"{n}{suffix}" for n in rec.names()))
               for rec in pres.inverse_records]
    return DgPresentation(objects, specs, diffs, records, strict=True)


def cylinder(pres: DgPresentation) -> CylinderResult:
    """Cylinder object: ``cylinder0`` with every t_A inverted, plus the
    projection back onto the original presentation.

    The projection p sends both copies of a generator to the original,
    t_A and inv_t_A to the identity, and every other added generator to 0;
    p composed with either inclusion is the identity functor.
    """
    base = cylinder0(pres)
    loc = localize(base.presentation, base.t_object_names)
    out = loc.presentation
    prov = dict(base.provenance)
    for rec in loc.new_records:
        for n, role in zip(rec.names()[1:], ("inverse", "hat", "chk", "bar")):
            prov[n] = f"localisation-{role}:{rec.gen}"
    i1 = DgFunctor(pres, out, base.i1.object_map,
                   {r.name: out.gen(_image_name(base.i1, r.name))
                    for r in pres.generators})
    i2 = DgFunctor(pres, out, base.i2.object_map,
                   {r.name: out.gen(_image_name(base.i2, r.name))
                    for r in pres.generators})
    images: dict[str, Element] = {}
    object_map: dict[str, str] = {}
    for o in pres.objects:
        object_map[f"{o}#1"] = o
        object_map[f"{o}#2"] = o
    for ref in out.generators:
        origin = prov.get(ref.name, "")
        if origin.startswith("copy1:"):
            images[ref.name] = pres.gen(origin.split(":", 1)[1].removesuffix("#1"))
        elif origin.startswith("copy2:"):
            images[ref.name] = pres.gen(origin.split(":", 1)[1].removesuffix("#2"))
        elif origin.startswith("t-object:"):
            images[ref.name] = pres.identity(origin.split(":", 1)[1])
        elif origin.startswith("localisation-inverse:"):
            obj = prov[origin.split(":", 1)[1]].split(":", 1)[1]
            images[ref.name] = pres.identity(obj)
        else:
            src = object_map[ref.source]
            tgt = object_map[ref.target]
            images[ref.name] = pres.zero(src, tgt)
    projection = DgFunctor(out, pres, object_map, images)
    return CylinderResult(out, i1, i2, projection, prov)


def _image_name(functor: DgFunctor, gen_name: str) -> str:
    img = functor.image_of(gen_name)
    (letters, coeff), = img.raw_terms().items()
    assert coeff == 1 and len(letters) == 1
    return functor.codomain.generators[letters[0]].name


# -- strict pushout ----------------------------------------------------------


@dataclass
class PushoutResult:
    presentation: DgPresentation
    inclusion: DgFunctor  # from B
    induced: DgFunctor    # from A
    provenance: dict[str, str]


def _extension_data(alpha: DgFunctor):
    """Check that alpha embeds its domain as generators of its codomain.

    Required shape: injective on objects, and every generator maps to a
    single codomain generator with coefficient 1, injectively.  Returns the
    object image set and the generator image map (by codomain name).
    """
    dom, cod = alpha.domain, alpha.codomain
    obj_imgs = [alpha.object_map[o] for o in dom.objects]
    if len(set(obj_imgs)) != len(obj_imgs):
        raise ConstructionError("extension leg is not injective on objects")
    gen_img: dict[str, str] = {}
    used: set[str] = set()
    for ref in dom.generators:
        img = alpha.image_of(ref.name)
        terms = img.raw_terms()
        if len(terms) != 1:
            raise ConstructionError(
                f"extension leg sends {ref.name!r} to a sum, not a generator")
        (letters, coeff), = terms.items()
        if coeff != 1 or len(letters) != 1:
            raise ConstructionError(
                f"extension leg sends {ref.name!r} to a non-generator element")
        name = cod.generators[letters[0]].name
        if name in used:
            raise ConstructionError("extension leg is not injective on generators")
        used.add(name)
        gen_img[ref.name] = name
    return set(obj_imgs), gen_img


def pushout(span: Span) -> PushoutResult:
    """Cobase change of the extension leg ``alpha`` along ``beta``.

    The result is B plus a copy of everything A adds over the image of C;
    differentials of the copied generators are the beta-pushforward of the
    originals.
    """
    alpha, beta = span.alpha, span.beta
    c_pres, a_pres, b_pres = span.apex, span.left, span.right
    obj_image, gen_image = _extension_data(alpha)
    inv_obj = {alpha.object_map[o]: o for o in c_pres.objects}
    inv_gen = {v: k for k, v in gen_image.items()}

    builder = PresentationBuilder()
    ns = _NameSpace()
    prov: dict[str, str] = {}
    b_obj = {o: ns.obj(o) for o in b_pres.objects}
    for o in b_pres.objects:
        builder.add_object(b_obj[o])
    a_obj: dict[str, str] = {}
    for o in a_pres.objects:
        if o in inv_obj:
            a_obj[o] = b_obj[beta.object_map[inv_obj[o]]]
        else:
            new = ns.obj(o)
            builder.add_object(new)
            a_obj[o] = new
            prov[f"object {new}"] = f"new-object:{o}"
    b_gen = _copy_presentation_into(builder, ns, b_pres, b_obj, prov, "B")
    sig = builder.sig
    b_letter = {ref.index: sig.gen_index(b_gen[ref.name])
                for ref in b_pres.generators}

    # images of A generators in the pushout, built in filtration order
    a_images: dict[int, Element] = {}
    new_records: list[InverseRecord] = []
    a_rename: dict[str, str] = {}
    for ref in a_pres.generators:
        if ref.name in inv_gen:
            img = beta.image_of(inv_gen[ref.name])
            a_images[ref.index] = _push_element(
                img, sig, b_letter, b_obj[img.source], b_obj[img.target])
            a_rename[ref.name] = None  # not a fresh generator
            continue
        name = ns.gen(ref.name)
        a_rename[ref.name] = name
        src, tgt = a_obj[ref.source], a_obj[ref.target]
        d = a_pres.differential(ref.name)
        de = _map_through(d, sig, a_images, src, tgt)
        builder.add_generator(name, src, tgt, ref.degree,
                              de if de.raw_terms() else None)
        a_images[ref.index] = sig.gen(name)
        prov[name] = f"A:{ref.name}"
    for rec in a_pres.inverse_records:
        if all(a_rename.get(n) for n in rec.names()):
            builder.add_record(InverseRecord(*(a_rename[n] for n in rec.names())))
    out = builder.build()
    inclusion = _renaming_functor(b_pres, out, b_obj, b_gen)
    induced = DgFunctor(
        a_pres, out, a_obj,
        {ref.name: Element(out, *_endpoints(a_images[ref.index]),
                           dict(a_images[ref.index].raw_terms()))
         for ref in a_pres.generators})
    return PushoutResult(out, inclusion, induced, prov)


def _endpoints(e: Element) -> tuple[str, str]:
    return (e.source, e.target)


def _map_through(e: Element, sig, images: dict[int, Element],
                 src: str, tgt: str) -> Element:
    acc: dict[tuple[int, ...], int] = {}
    for letters, coeff in e.raw_terms().items():
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
    return Element(sig, src, tgt, acc)


# -- homotopy pushout ---------------------------------------------------------


@dataclass
class HocolimResult:
    presentation: DgPresentation
    leg_a: DgFunctor
    leg_b: DgFunctor
    t_object_names: list[str]
    provenance: dict[str, str]


def homotopy_pushout(span: Span) -> HocolimResult:
    """Homotopy pushout of a span of semifree presentations.

    The disjoint union of the two targets, plus a closed degree-0 generator
    t_C: alpha(C) -> beta(C) per apex object and a degree |f|-1 generator
    t_f: alpha(A) -> beta(B) per apex generator f: A -> B with

        d t_f = (-1)^{|f|} (beta(f) t_A - t_B alpha(f))
                + the letterwise t-insertion over non-identity words of df
                  (beta images left, alpha images right),

    then with every t_C inverted.  Name collisions between the two sides get
    ``#1``/``#2`` suffixes.
    """
    alpha, beta = span.alpha, span.beta
    c_pres, a_pres, b_pres = span.apex, span.left, span.right
    builder = PresentationBuilder()
    ns = _NameSpace()
    prov: dict[str, str] = {}
    a_obj = {o: ns.obj(f"{o}#1" if o in b_pres.objects else o)
             for o in a_pres.objects}
    b_obj = {o: ns.obj(f"{o}#2" if o in a_pres.objects else o)
             for o in b_pres.objects}
    for o in a_pres.objects:
        builder.add_object(a_obj[o])
    for o in b_pres.objects:
        builder.add_object(b_obj[o])
    collide = {r.name for r in a_pres.generators} & {r.name for r in b_pres.generators}
    a_gen = _copy_side(builder, ns, a_pres, a_obj, prov, "A", collide, "#1")
    b_gen = _copy_side(builder, ns, b_pres, b_obj, prov, "B", collide, "#2")
    sig = builder.sig
    a_letter = {r.index: sig.gen_index(a_gen[r.name]) for r in a_pres.generators}
    b_letter = {r.index: sig.gen_index(b_gen[r.name]) for r in b_pres.generators}

    def push_a(e: Element) -> Element:
        return _push_element(e, sig, a_letter,
                             a_obj[e.source], a_obj[e.target])

    def push_b(e: Element) -> Element:
        return _push_element(e, sig, b_letter,
                             b_obj[e.source], b_obj[e.target])

    t_obj: dict[str, str] = {}
    for o in c_pres.objects:
        name = ns.gen(f"t_{o}")
        t_obj[o] = name
        builder.add_generator(name, a_obj[alpha.object_map[o]],
                              b_obj[beta.object_map[o]], 0)
        prov[name] = f"t-object:{o}"

    gens = c_pres.generators
    t_gen: dict[str, str] = {}
    for ref in gens:
        name = ns.gen(f"t_{ref.name}")
        t_gen[ref.name] = name
        a, b = ref.source, ref.target
        bf = push_b(beta.image_of(ref.name))
        af = push_a(alpha.image_of(ref.name))
        ta = sig.gen(t_obj[a])
        tb = sig.gen(t_obj[b])
        d = bf * ta - tb * af
        if ref.degree % 2:
            d = -d
        for letters, coeff in c_pres.differential(ref.name).raw_terms().items():
            if not letters:
                continue  # identity terms contribute no t-term
            for pos in range(len(letters)):
                sign = 1
                for later in letters[pos + 1:]:
                    if gens[later].degree % 2:
                        sign = -sign
                mid = gens[letters[pos]]
                # empty prefix/suffix endpoints coincide, so no special case
                left = beta.apply(Element(c_pres, mid.target, b,
                                          {letters[:pos]: 1}))
                right = alpha.apply(Element(c_pres, a, mid.source,
                                            {letters[pos + 1:]: 1}))
                term = push_b(left) * sig.gen(t_gen[mid.name]) * push_a(right)
                d = d + term.scale(coeff * sign)
        builder.add_generator(name, a_obj[alpha.object_map[a]],
                              b_obj[beta.object_map[b]], ref.degree - 1, d)
        prov[name] = f"t-generator:{ref.name}"
    base = builder.build()
    loc = localize(base, [t_obj[o] for o in c_pres.objects])
    out = loc.presentation
    for rec in loc.new_records:
        for n, role in zip(rec.names()[1:], ("inverse", "hat", "chk", "bar")):
            prov[n] = f"localisation-{role}:{rec.gen}"
    leg_a = DgFunctor(a_pres, out, a_obj,
                      {r.name: out.gen(a_gen[r.name]) for r in a_pres.generators})
    leg_b = DgFunctor(b_pres, out, b_obj,
                      {r.name: out.gen(b_gen[r.name]) for r in b_pres.generators})
    return HocolimResult(out, leg_a, leg_b,
                         [t_obj[o] for o in c_pres.objects], prov)


def _copy_side(builder, ns, pres, obj_map, prov, tag, collide, suffix):
    gen_map: dict[str, str] = {}
    letter_map: dict[int, int] = {}
    for ref in pres.generators:
        base = f"{ref.name}{suffix}" if ref.name in collide else ref.name
        new = ns.gen(base)
        gen_map[ref.name] = new
        d = pres.differential(ref.name)
        src, tgt = obj_map[ref.source], obj_map[ref.target]
        de = _push_element(d, builder.sig, letter_map, src, tgt)
        builder.add_generator(new, src, tgt, ref.degree,
                              de if de.raw_terms() else None)
        letter_map[ref.index] = builder.sig.gen_index(new)
        prov[new] = f"{tag}:{ref.name}"
    for rec in pres.inverse_records:
        builder.add_record(InverseRecord(*(gen_map[n] for n in rec.names())))
    return gen_map


def homotopy_pushout_localized(span: Span, s_a: Sequence[str] = (),
                               s_b: Sequence[str] = (),
                               s_c: Sequence[str] = ()) -> HocolimResult:
    """Homotopy pushout of a span of localized presentations.

    The span is given unlocalized; ``s_a``/``s_b``/``s_c`` name the closed
    degree-0 generators considered inverted in each corner.  The result is
    the plain homotopy pushout with the images of s_a and s_b inverted on
    top.  That the images of s_c become invertible is the caller's
    hypothesis; it is recorded in the provenance, not decided.
    """
    base = homotopy_pushout(span)
    to_invert: list[str] = []
    for name in s_a:
        to_invert.append(_image_name(base.leg_a, name))
    for name in s_b:
        img = _image_name(base.leg_b, name)
        if img not in to_invert:
            to_invert.append(img)
    prov = dict(base.provenance)
    if s_c:
        prov["#assumed-invertible-apex"] = ",".join(s_c)
    if not to_invert:
        prov.setdefault("#localized", "")
        return HocolimResult(base.presentation, base.leg_a, base.leg_b,
                             base.t_object_names, prov)
    loc = localize(base.presentation, to_invert)
    out = loc.presentation
    for rec in loc.new_records:
        for n, role in zip(rec.names()[1:], ("inverse", "hat", "chk", "bar")):
            prov[n] = f"localisation-{role}:{rec.gen}"
    leg_a = DgFunctor(span.left, out, base.leg_a.object_map,
                      {r.name: out.gen(_image_name(base.leg_a, r.name))
                       for r in span.left.generators})
    leg_b = DgFunctor(span.right, out, base.leg_b.object_map,
                      {r.name: out.gen(_image_name(base.leg_b, r.name))
                       for r in span.right.generators})
    return HocolimResult(out, leg_a, leg_b, base.t_object_names, prov)


# -- cross-check route for the homotopy pushout -------------------------------


@dataclass
class CylinderRouteResult:
    presentation: DgPresentation
    from_a: DgFunctor
    from_b: DgFunctor
    cylinder: CylinderResult
    cylinder_to_out: DgFunctor


def hocolim_via_cylinder(span: Span) -> CylinderRouteResult:
    """The two-step route: replace the apex by its cylinder, then take two
    strict pushouts.  Exists as a cross-check of the direct formula; the
    direct construction is the production path."""
    cyl = cylinder(span.apex)
    p1 = pushout(Span(cyl.i1, span.alpha))
    comp1 = _compose(p1.induced, cyl.i2)
    p2 = pushout(Span(comp1, span.beta))
    from_a = _compose(p2.induced, p1.inclusion)
    from_b = p2.inclusion
    cyl_to_out = _compose(p2.induced, p1.induced)
    return CylinderRouteResult(p2.presentation, from_a, from_b, cyl, cyl_to_out)


def _compose(g: DgFunctor, f: DgFunctor) -> DgFunctor:
    from .functors import compose_functors
    return compose_functors(g, f)


def isomorphic_under(pres: DgPresentation, other: DgPresentation,
                     gen_map: dict[str, str],
                     obj_map: dict[str, str]) -> list[str]:
    """Failures preventing ``gen_map``/``obj_map`` from being an isomorphism
    of presentations (empty list = isomorphic)."""
    problems: list[str] = []
    if sorted(gen_map) != sorted(r.name for r in pres.generators):
        problems.append("generator map does not cover the source")
    if sorted(gen_map.values()) != sorted(r.name for r in other.generators):
        problems.append("generator map is not a bijection onto the target")
    if sorted(obj_map) != sorted(pres.objects) or \
            sorted(obj_map.values()) != sorted(other.objects):
        problems.append("object map is not a bijection")
    if problems:
        return problems
    letter_map = {pres.gen_index(a): other.gen_index(b)
                  for a, b in gen_map.items()}
    for ref in pres.generators:
        mate = other.gen_ref(gen_map[ref.name])
        if ref.degree != mate.degree:
            problems.append(f"{ref.name}: degree {ref.degree} vs {mate.degree}")
            continue
        if (obj_map[ref.source], obj_map[ref.target]) != (mate.source, mate.target):
            problems.append(f"{ref.name}: endpoints do not correspond")
            continue
        mapped = {tuple(letter_map[i] for i in k): v
                  for k, v in pres.differential(ref.name).raw_terms().items()}
        if mapped != other.differential(mate.name).raw_terms():
            problems.append(f"{ref.name}: differentials do not correspond")
    ours = {tuple(gen_map[n] for n in rec.names())
            for rec in pres.inverse_records}
    theirs = {rec.names() for rec in other.inverse_records}
    if ours != theirs:
        problems.append("inverse records do not correspond")
    return problems


def compare_hocolim_routes(span: Span) -> list[str]:
    """Check that the direct homotopy-pushout formula and the cylinder+
    pushout route give isomorphic presentations (under the provenance
    renaming) and that both validate.  Returns failure strings."""
    problems: list[str] = []
    direct = homotopy_pushout(span)
    route = hocolim_via_cylinder(span)
    rep = direct.presentation.validate()
    if not rep.ok:
        problems.append(f"direct output invalid: {rep}")
    rep = route.presentation.validate()
    if not rep.ok:
        problems.append(f"route output invalid: {rep}")
    if problems:
        return problems

    gen_map: dict[str, str] = {}
    obj_map: dict[str, str] = {}
    for ref in span.left.generators:
        gen_map[_image_name(route.from_a, ref.name)] = \
            _image_name(direct.leg_a, ref.name)
    for ref in span.right.generators:
        gen_map[_image_name(route.from_b, ref.name)] = \
            _image_name(direct.leg_b, ref.name)
    for o in span.left.objects:
        obj_map[route.from_a.object_map[o]] = direct.leg_a.object_map[o]
    for o in span.right.objects:
        obj_map[route.from_b.object_map[o]] = direct.leg_b.object_map[o]

    cyl_prov = route.cylinder.provenance
    direct_prov = direct.provenance
    cyl_t_obj = {v.split(":", 1)[1]: k for k, v in cyl_prov.items()
                 if v.startswith("t-object:")}
    cyl_t_gen = {v.split(":", 1)[1]: k for k, v in cyl_prov.items()
                 if v.startswith("t-generator:")}
    direct_t_obj = {v.split(":", 1)[1]: k for k, v in direct_prov.items()
                    if v.startswith("t-object:")}
    direct_t_gen = {v.split(":", 1)[1]: k for k, v in direct_prov.items()
                    if v.startswith("t-generator:")}
    for o in span.apex.objects:
        cyl_name = cyl_t_obj[o]
        direct_name = direct_t_obj[o]
        gen_map[_image_name(route.cylinder_to_out, cyl_name)] = direct_name
        crec = route.cylinder.presentation.record_for(cyl_name)
        drec = direct.presentation.record_for(direct_name)
        if crec is None or drec is None:
            problems.append(f"missing inversion record for t of object {o}")
            continue
        for cn, dn in zip(crec.names()[1:], drec.names()[1:]):
            gen_map[_image_name(route.cylinder_to_out, cn)] = dn
    for ref in span.apex.generators:
        gen_map[_image_name(route.cylinder_to_out, cyl_t_gen[ref.name])] = \
            direct_t_gen[ref.name]
    if problems:
        return problems
    return isomorphic_under(route.presentation, direct.presentation,
                            gen_map, obj_map)
