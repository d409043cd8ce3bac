"""Seeded random presentations, elements, functors and spans.

Valid differentials are produced by differentiating random elements (d of
anything is closed), so every generated presentation passes validation by
construction.  Random spans start from inclusions of a common base and are
scrambled by elementary automorphisms, whose inverses are dg functors; this
yields legs with genuinely composite generator images while keeping
dg-compatibility guaranteed.
"""

from __future__ import annotations

import random
from typing import Iterable

from .core import Element, Word
from .functors import DgFunctor, Span, compose_functors, identity_functor
from .presentation import DgPresentation, PresentationBuilder
from .simplify import change_of_variables

_NAMES = ("a", "b", "c", "e", "f", "g", "k", "l", "s", "u", "v", "w")
_OBJS = ("A", "B", "C")


def enumerate_words(pres: DgPresentation, max_len: int,
                    cap: int = 20000) -> list[Word]:
    """All composable words up to a length, identities included."""
    out: list[Word] = [Word(pres, o, o, ()) for o in pres.objects]
    frontier = list(out)
    while frontier and len(out) < cap:
        nxt = []
        for w in frontier:
            if len(w.letters) >= max_len:
                continue
            for ref in pres.generators:
                if ref.target == w.source:
                    word = Word(pres, ref.source, w.target,
                                w.letters + (ref.index,))
                    nxt.append(word)
        out.extend(nxt)
        frontier = nxt
    return out[:cap]


def _word_pool(pres: DgPresentation, max_len: int = 4):
    pool: dict[tuple[str, str, int], list[Word]] = {}
    for w in enumerate_words(pres, max_len):
        pool.setdefault((w.source, w.target, w.degree), []).append(w)
    return pool


def random_homogeneous(rng: random.Random, pres: DgPresentation,
                       source: str, target: str, degree: int,
                       max_terms: int = 3, max_len: int = 4,
                       pool=None) -> Element:
    """Random homogeneous element with the given endpoints and degree;
    zero when no word fits."""
    pool = pool if pool is not None else _word_pool(pres, max_len)
    words = pool.get((source, target, degree), [])
    out = pres.zero(source, target)
    if not words:
        return out
    for _ in range(rng.randint(1, max_terms)):
        w = rng.choice(words)
        out = out + w.as_element(rng.choice((-2, -1, 1, 1, 2, 3)))
    return out


def random_element(rng: random.Random, pres: DgPresentation,
                   source: str, target: str, max_terms: int = 4,
                   max_len: int = 4, pool=None) -> Element:
    """Random (not necessarily homogeneous) element."""
    pool = pool if pool is not None else _word_pool(pres, max_len)
    words = [w for (s, t, _), ws in pool.items() if (s, t) == (source, target)
             for w in ws]
    out = pres.zero(source, target)
    if not words:
        return out
    for _ in range(rng.randint(1, max_terms)):
        w = rng.choice(words)
        out = out + w.as_element(rng.choice((-2, -1, 1, 1, 2)))
    return out


def random_presentation(rng: random.Random, max_objects: int = 3,
                        max_gens: int = 5, min_degree: int = -3,
                        closed_bias: float = 0.4) -> DgPresentation:
    """Random valid presentation: differentials are d-images of random
    elements of the part already built, hence closed and filtration-safe."""
    b = PresentationBuilder()
    objects = list(_OBJS[:rng.randint(1, max_objects)])
    for o in objects:
        b.add_object(o)
    n_gens = rng.randint(1, max_gens)
    names = list(_NAMES[:n_gens])
    partial = b.build()
    for i, name in enumerate(names):
        src = rng.choice(objects)
        tgt = rng.choice(objects)
        degree = rng.randint(min_degree, 0)
        d = None
        if rng.random() > closed_bias and i > 0:
            pool = _word_pool(partial, max_len=3)
            seed_elt = random_homogeneous(rng, partial, src, tgt, degree,
                                          max_terms=2, pool=pool)
            de = partial.d(seed_elt)
            if not de.is_zero():
                d = Element(b.sig, src, tgt, dict(de.raw_terms()))
        b.add_generator(name, src, tgt, degree, d)
        partial = b.build()
    return partial


def random_extension(rng: random.Random, base: DgPresentation,
                     extra_objects: int, extra_gens: int,
                     min_degree: int = -3) -> tuple[DgPresentation, DgFunctor]:
    """A presentation containing ``base`` as a prefix, with the inclusion."""
    b = PresentationBuilder()
    for o in base.objects:
        b.add_object(o)
    for ref in base.generators:
        d = base.differential(ref.name)
        b.add_generator(ref.name, ref.source, ref.target, ref.degree,
                        Element(b.sig, d.source, d.target, dict(d.raw_terms()))
                        if d.raw_terms() else None)
    for rec in base.inverse_records:
        b.add_record(rec)
    new_objects = []
    for i in range(extra_objects):
        name = f"R{i}"
        b.add_object(name)
        new_objects.append(name)
    objects = list(base.objects) + new_objects
    partial = b.build()
    for i in range(extra_gens):
        name = f"t{i}"
        src = rng.choice(objects)
        tgt = rng.choice(objects)
        degree = rng.randint(min_degree, 0)
        d = None
        if rng.random() > 0.4:
            pool = _word_pool(partial, max_len=3)
            seed_elt = random_homogeneous(rng, partial, src, tgt, degree,
                                          max_terms=2, pool=pool)
            de = partial.d(seed_elt)
            if not de.is_zero():
                d = Element(b.sig, src, tgt, dict(de.raw_terms()))
        b.add_generator(name, src, tgt, degree, d)
        partial = b.build()
    ext = partial
    inclusion = DgFunctor(base, ext, {o: o for o in base.objects},
                          {ref.name: ext.gen(ref.name)
                           for ref in base.generators})
    return ext, inclusion


def scramble(rng: random.Random, pres: DgPresentation,
             moves: int = 2) -> tuple[DgPresentation, DgFunctor]:
    """Apply random elementary automorphisms; returns the rewritten
    presentation and the dg functor from the original onto it."""
    state = pres
    functor = identity_functor(pres)
    for _ in range(moves):
        candidates = [r for r in state.generators if r.index >= 1]
        if not candidates:
            break
        ref = rng.choice(candidates)
        pool = _word_pool(state, max_len=3)
        words = [w for w in pool.get((ref.source, ref.target, ref.degree), [])
                 if all(i < ref.index for i in w.letters)]
        if not words:
            continue
        w = rng.choice(words).as_element(rng.choice((-2, -1, 1, 2)))
        unit = rng.choice((1, -1))
        state, step, _ = change_of_variables(state, ref.name, unit, w)
        functor = compose_functors(step, functor)
    return state, functor


def random_span(rng: random.Random, max_objects: int = 3,
                max_gens: int = 3, extra: int = 2) -> Span:
    """Random span whose legs are scrambled inclusions of a common base."""
    apex = random_presentation(rng, max_objects=max_objects, max_gens=max_gens)
    a_ext, a_inc = random_extension(rng, apex, rng.randint(0, 1),
                                    rng.randint(0, extra))
    b_ext, b_inc = random_extension(rng, apex, rng.randint(0, 1),
                                    rng.randint(0, extra))
    a_fin, a_scr = scramble(rng, a_ext, moves=rng.randint(0, 2))
    b_fin, b_scr = scramble(rng, b_ext, moves=rng.randint(0, 2))
    return Span(compose_functors(a_scr, a_inc), compose_functors(b_scr, b_inc))
