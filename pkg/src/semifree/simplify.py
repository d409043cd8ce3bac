"""Quasi-equivalence-preserving presentation rewrites.

Three moves, each returning the rewritten presentation together with the
substitution functor from the old presentation onto the new one and a
replayable log record:

* ``identify_objects``   collapse an invertible closed degree-0 generator,
* ``change_of_variables``  an elementary automorphism v = u*v' + w,
* ``cancel_pair``        destabilisation of a pair (g, t) with dt = +-g + w.

``simplify`` drives them: all identifications first, then all eligible
cancellations, then the scripted steps, repeating until nothing changes.
The driver is deterministic: candidates are scanned in declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .core import Element, format_element, parse_element
from .constructions import localize as _localize
from .functors import DgFunctor, compose_functors, identity_functor
from .presentation import (DgPresentation, InverseRecord, PresentationBuilder,
                           PresentationError)


class SimplifyError(ValueError):
    pass


class InternalRewriteError(RuntimeError):
    """A rewrite that must preserve validity produced an invalid result."""


def _rebuild(pres: DgPresentation,
             drop: set[str],
             images: dict[str, "ElementSpec"],
             override_d: dict[str, Element],
             object_map: dict[str, str],
             objects_kept: list[str],
             rename: dict[str, str] | None = None):
    """Rebuild ``pres`` dropping/substituting generators.

    ``images`` maps each dropped generator to its replacement; a replacement
    may only use kept generators.  Kept generators map to their (possibly
    renamed) selves.  Returns (new presentation, functor old->new).
    """
    rename = rename or {}
    kept = [ref for ref in pres.generators if ref.name not in drop]
    new_index = {ref.index: i for i, ref in enumerate(kept)}
    # letter image table: old index -> term dict over new letter tuples
    table: dict[int, dict[tuple[int, ...], int]] = {
        ref.index: {(new_index[ref.index],): 1} for ref in kept}
    for ref in pres.generators:
        if ref.name in drop:
            table[ref.index] = images[ref.name].raw_terms(table, pres)

    def push_terms(terms: dict[tuple[int, ...], int]) -> dict[tuple[int, ...], int]:
        acc: dict[tuple[int, ...], int] = {}
        for letters, coeff in terms.items():
            partial: dict[tuple[int, ...], int] = {(): coeff}
            for li in letters:
                img = table[li]
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
        return acc

    builder = PresentationBuilder()
    for o in objects_kept:
        builder.add_object(o)
    sig = builder.sig
    for ref in kept:
        src = object_map[ref.source]
        tgt = object_map[ref.target]
        new_name = rename.get(ref.name, ref.name)
        base = override_d.get(ref.name, pres.differential(ref.name))
        d = Element(sig, src, tgt, push_terms(base.raw_terms()))
        try:
            builder.add_generator(new_name, src, tgt, ref.degree,
                                  d if d.raw_terms() else None)
        except PresentationError as exc:
            raise SimplifyError(
                f"substitution broke the declaration order at {ref.name!r}: "
                f"{exc}") from None
    for rec in pres.inverse_records:
        if any(n in drop for n in rec.names()):
            continue
        builder.add_record(InverseRecord(*(rename.get(n, n) for n in rec.names())))
    out = builder.build()
    gen_images = {}
    for ref in pres.generators:
        src = object_map[ref.source]
        tgt = object_map[ref.target]
        gen_images[ref.name] = Element(out, src, tgt, dict(table[ref.index]))
    functor = DgFunctor(pres, out, dict(object_map), gen_images)
    return out, functor


class ElementSpec:
    """Deferred replacement expression for a dropped generator."""

    def __init__(self, kind: str, payload=None):
        self.kind = kind
        self.payload = payload

    def raw_terms(self, table, pres) -> dict[tuple[int, ...], int]:
        if self.kind == "identity":
            return {(): 1}
        if self.kind == "zero":
            return {}
        if self.kind == "push":
            e, scale = self.payload
            acc: dict[tuple[int, ...], int] = {}
            for letters, coeff in e.raw_terms().items():
                partial: dict[tuple[int, ...], int] = {(): coeff * scale}
                for li in letters:
                    img = table[li]
                    if not img:
                        partial = {}
                        break
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
            return acc
        raise AssertionError(self.kind)


@dataclass
class MoveRecord:
    move: str
    args: dict
    generators_removed: list[str] = field(default_factory=list)
    generators_renamed: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"move": self.move, "args": self.args,
                "generators_removed": list(self.generators_removed),
                "generators_renamed": dict(self.generators_renamed)}


def identify_objects(pres: DgPresentation, t: str):
    """Merge the endpoints of an inverted closed degree-0 generator.

    The generator must have an inverse record and connect two distinct
    objects.  The target is merged into the source; the generator and its
    inverse become identities, the three homotopies zero, and all five are
    deleted.  The rewrite must stay valid; a failure here is an internal
    error, not a user error.
    """
    rec = pres.record_for(t)
    if rec is None:
        raise SimplifyError(f"{t!r} has no inverse record; localize it first")
    ref = pres.gen_ref(t)
    if ref.source == ref.target:
        raise SimplifyError(f"{t!r} is an endomorphism; nothing to identify")
    a, b = ref.source, ref.target
    drop = set(rec.names())
    images = {
        rec.gen: ElementSpec("identity"),
        rec.inv: ElementSpec("identity"),
        rec.hat: ElementSpec("zero"),
        rec.chk: ElementSpec("zero"),
        rec.bar: ElementSpec("zero"),
    }
    object_map = {o: (a if o == b else o) for o in pres.objects}
    objects_kept = [o for o in pres.objects if o != b]
    out, functor = _rebuild(pres, drop, images, {}, object_map, objects_kept)
    report = out.validate()
    if not report.ok:
        raise InternalRewriteError(
            f"identify_objects({t!r}) produced an invalid presentation:\n{report}")
    record = MoveRecord("identify_objects", {"t": t},
                        generators_removed=sorted(drop))
    return out, functor, record


def change_of_variables(pres: DgPresentation, v: str, unit: int, w: Element):
    """Elementary automorphism: the new generator equals unit*v + w.

    ``w`` must live strictly below ``v`` in the declaration order, share its
    endpoints, and be homogeneous of the same degree (or zero); ``unit`` must
    be +-1.  In later differentials the old v is rewritten as
    unit*v - unit*w; the differential of v itself becomes
    unit*d(v) + d(w).
    """
    if unit not in (1, -1):
        raise SimplifyError("unit must be +1 or -1 over the integers")
    ref = pres.gen_ref(v)
    pres._check_ctx(w.ctx)
    if (w.source, w.target) != (ref.source, ref.target):
        raise SimplifyError("replacement term has different endpoints")
    if not w.is_homogeneous(ref.degree):
        raise SimplifyError(
            f"replacement term must be homogeneous of degree {ref.degree}")
    if any(i >= ref.index for i in w.support_indices()):
        raise SimplifyError(
            "replacement term must use only generators declared earlier")
    new_dv = pres.differential(v).scale(unit) + pres.d(w)
    # old v = unit * new v - unit * w, substituted into later differentials
    subst = pres.gen(v).scale(unit) - w.scale(unit)
    override: dict[str, Element] = {v: new_dv}
    for other in pres.generators:
        if other.index <= ref.index:
            continue
        d = pres.differential(other.name)
        if ref.index in d.support_indices():
            override[other.name] = _substitute_letter(pres, d, ref.index, subst)
    out, functor = _rebuild(pres, set(), {}, override,
                            {o: o for o in pres.objects}, list(pres.objects))
    report = out.validate()
    if not report.ok:
        raise InternalRewriteError(
            f"change_of_variables({v!r}) produced an invalid presentation:\n"
            f"{report}")
    record = MoveRecord("change_of_variables",
                        {"v": v, "u": unit, "w": format_element(w)})
    return out, functor, record


def _substitute_letter(pres: DgPresentation, e: Element, index: int,
                       replacement: Element) -> Element:
    acc = pres.zero(e.source, e.target)
    for letters, coeff in e.raw_terms().items():
        if index not in letters:
            acc = acc + Element(pres, e.source, e.target, {letters: coeff})
            continue
        # split the word at each occurrence and multiply through
        segs: list[Element] = []
        start = 0
        cur_tgt = e.target
        for pos, li in enumerate(letters):
            if li != index:
                continue
            seg = letters[start:pos]
            mid_ref = pres.generators[li]
            segs.append(Element(pres, mid_ref.target, cur_tgt, {seg: 1}))
            cur_tgt = mid_ref.source
            start = pos + 1
        segs.append(Element(pres, e.source, cur_tgt, {letters[start:]: 1}))
        term = segs[0]
        for seg in segs[1:]:
            term = term * replacement * seg
        acc = acc + term.scale(coeff)
    return acc


def cancel_pair(pres: DgPresentation, g: str, t: str):
    """Destabilise: delete (g, t) when dt = eps*g + w with eps = +-1.

    ``g`` must not occur in ``w``; in the remaining differentials g is
    replaced by -eps*w and t by 0.  The result is revalidated; if the
    substitution cannot respect the declaration order or breaks d^2 = 0 the
    move is refused.
    """
    gref = pres.gen_ref(g)
    tref = pres.gen_ref(t)
    if tref.degree != gref.degree - 1:
        raise SimplifyError(
            f"cancel needs |{t}| = |{g}| - 1, got {tref.degree} and {gref.degree}")
    dt = pres.differential(t)
    eps = dt.raw_terms().get((gref.index,), 0)
    if eps not in (1, -1):
        raise SimplifyError(
            f"d({t}) does not contain {g} with unit coefficient")
    w = dt - pres.gen(g).scale(eps)
    if gref.index in w.support_indices():
        raise SimplifyError(f"{g!r} occurs in the remainder of d({t})")
    images = {
        g: ElementSpec("push", (w, -eps)),
        t: ElementSpec("zero"),
    }
    out, functor = _rebuild(pres, {g, t}, images, {},
                            {o: o for o in pres.objects}, list(pres.objects))
    report = out.validate()
    if not report.ok:
        raise SimplifyError(
            f"cancel_pair({g!r}, {t!r}) broke validity:\n{report}")
    record = MoveRecord("cancel_pair", {"g": g, "t": t},
                        generators_removed=[g, t])
    return out, functor, record


def rename_generators(pres: DgPresentation, gen_map: dict[str, str],
                      object_map: dict[str, str] | None = None):
    """Rename generators and/or objects; a pure relabeling."""
    object_map = object_map or {}
    for old in gen_map:
        pres.gen_ref(old)
    full_obj = {o: object_map.get(o, o) for o in pres.objects}
    out, functor = _rebuild(pres, set(), {}, {}, full_obj,
                            [full_obj[o] for o in pres.objects],
                            rename=gen_map)
    record = MoveRecord("rename", {"gens": dict(gen_map),
                                   "objects": dict(object_map)},
                        generators_renamed=dict(gen_map))
    return out, functor, record


# -- scripted moves -----------------------------------------------------------


@dataclass
class ScriptedChange:
    """change_of_variables step; w is parsed against the current state."""

    v: str
    unit: int
    w_text: str

    def to_json(self):
        return {"step": "change_of_variables", "v": self.v, "u": self.unit,
                "w": self.w_text}


@dataclass
class ScriptedRename:
    gens: dict[str, str]
    objects: dict[str, str] = field(default_factory=dict)

    def to_json(self):
        return {"step": "rename", "gens": dict(self.gens),
                "objects": dict(self.objects)}


@dataclass
class ScriptedLocalize:
    names: list[str]

    def to_json(self):
        return {"step": "localize", "names": list(self.names)}


def script_step_from_json(data: dict):
    kind = data.get("step")
    if kind == "change_of_variables":
        return ScriptedChange(data["v"], int(data["u"]), data["w"])
    if kind == "rename":
        return ScriptedRename(dict(data.get("gens", {})),
                              dict(data.get("objects", {})))
    if kind == "localize":
        return ScriptedLocalize(list(data["names"]))
    raise SimplifyError(f"unknown script step {kind!r}")


@dataclass
class SimplifyResult:
    presentation: DgPresentation
    log: list[MoveRecord]
    functor: DgFunctor  # composite substitution, input -> output

    def log_json(self) -> list[dict]:
        return [r.to_json() for r in self.log]


def _find_identification(pres: DgPresentation) -> str | None:
    for ref in pres.generators:
        if ref.source == ref.target:
            continue
        if pres.record_for(ref.name) is None:
            continue
        if ref.degree == 0 and pres.differential(ref.name).is_zero():
            return ref.name
    return None


def _find_cancellation(pres: DgPresentation) -> tuple[str, str] | None:
    for tref in pres.generators:
        dt = pres.differential(tref.name)
        terms = dt.raw_terms()
        if not terms:
            continue
        candidates = []
        for letters, coeff in terms.items():
            if len(letters) != 1 or coeff not in (1, -1):
                continue
            gi = letters[0]
            gref = pres.generators[gi]
            if tref.degree != gref.degree - 1:
                continue
            if any(gi in other for other in terms if other != letters):
                continue
            candidates.append(gi)
        if not candidates:
            continue
        plain = [gi for gi in candidates
                 if pres.record_for(pres.generators[gi].name) is None]
        pool = plain or candidates
        gi = min(pool)
        return (pres.generators[gi].name, tref.name)
    return None


def simplify(pres: DgPresentation, script: Sequence = ()) -> SimplifyResult:
    """Greedy rewrite loop.

    Phases per pass: (1) identify objects along every invertible closed
    degree-0 generator joining distinct objects, in declaration order;
    (2) cancel every eligible pair, scanning t in declaration order and
    preferring the earliest-declared unrecorded partner; (3) consume the
    next scripted step.  The loop repeats until the script is exhausted and
    a pass changes nothing.  Scripted steps whose generators have been
    eliminated are logged and skipped.  Stuck states return the input.
    """
    state = pres
    functor = identity_functor(pres)
    log: list[MoveRecord] = []
    pending = list(script)

    def advance(result):
        nonlocal state, functor
        out, step_functor, record = result
        state = out
        functor = compose_functors(step_functor, functor)
        log.append(record)

    while True:
        progressed = False
        while True:
            t = _find_identification(state)
            if t is None:
                break
            advance(identify_objects(state, t))
            progressed = True
        while True:
            pair = _find_cancellation(state)
            if pair is None:
                break
            advance(cancel_pair(state, *pair))
            progressed = True
        if pending:
            step = pending.pop(0)
            _apply_scripted(step, advance, lambda rec: log.append(rec),
                            lambda: state)
            continue
        if not progressed:
            break
    return SimplifyResult(state, log, functor)


def _apply_scripted(step, advance, log_skip, get_state):
    state = get_state()
    if isinstance(step, ScriptedChange):
        if not state.has_gen(step.v):
            log_skip(MoveRecord("skip", {"reason": f"generator {step.v!r} "
                                         f"was eliminated earlier",
                                         "step": step.to_json()}))
            return
        ref = state.gen_ref(step.v)
        try:
            w = parse_element(state, step.w_text, ref.source, ref.target)
        except ValueError:
            log_skip(MoveRecord("skip", {"reason": "replacement no longer "
                                         "parses against the presentation",
                                         "step": step.to_json()}))
            return
        advance(change_of_variables(state, step.v, step.unit, w))
        return
    if isinstance(step, ScriptedRename):
        gens = {k: v for k, v in step.gens.items() if state.has_gen(k)}
        objects = {k: v for k, v in step.objects.items() if k in state.objects}
        advance(rename_generators(state, gens, objects))
        return
    if isinstance(step, ScriptedLocalize):
        names = [n for n in step.names
                 if state.has_gen(n) and state.record_for(n) is None]
        if not names:
            log_skip(MoveRecord("skip", {"reason": "nothing left to invert",
                                         "step": step.to_json()}))
            return
        result = _localize(state, names)
        record = MoveRecord("localize", {"names": names})
        advance((result.presentation, result.inclusion, record))
        return
    raise SimplifyError(f"unknown scripted step {step!r}")


def replay(pres: DgPresentation, log_entries: list[dict]) -> SimplifyResult:
    """Re-apply a recorded rewrite log to a presentation."""
    state = pres
    functor = identity_functor(pres)
    out_log: list[MoveRecord] = []
    for entry in log_entries:
        move = entry["move"]
        args = entry.get("args", {})
        if move == "identify_objects":
            result = identify_objects(state, args["t"])
        elif move == "cancel_pair":
            result = cancel_pair(state, args["g"], args["t"])
        elif move == "change_of_variables":
            ref = state.gen_ref(args["v"])
            w = parse_element(state, args["w"], ref.source, ref.target)
            result = change_of_variables(state, args["v"], int(args["u"]), w)
        elif move == "rename":
            result = rename_generators(state, dict(args.get("gens", {})),
                                       dict(args.get("objects", {})))
        elif move == "localize":
            loc = _localize(state, list(args["names"]))
            result = (loc.presentation, loc.inclusion,
                      MoveRecord("localize", {"names": list(args["names"])}))
        elif move == "skip":
            out_log.append(MoveRecord("skip", args))
            continue
        else:
            raise SimplifyError(f"unknown move {move!r} in log")
        state, step_functor, record = result
        functor = compose_functors(step_functor, functor)
        out_log.append(record)
    return SimplifyResult(state, out_log, functor)
