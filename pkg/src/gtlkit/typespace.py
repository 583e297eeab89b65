"""Types over a subformula-closed set, labelled systems and their checks.

A type is a locally consistent subset of the closed set, encoded as a bit
mask.  Labelled systems are finite locally-linear posets with a type
labelling and a step relation; the relation battery checks the five
properties (sensible, convex, fully confluent, bi-serial, omega-sensible)
that together make a system a quasimodel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Iterator

from . import kernels
from .formula import (And, Bot, CoImp, Formula, Hence, Hist, Imp, Next, Or,
                      SigmaSet, Since, Top, Until, Var, Yesterday, parse,
                      to_str)

DEFAULT_TYPE_CAP = 24

WorldId = Hashable


class TypeEnumerationCap(ValueError):
    """Raised when an alphabet is too large to enumerate its types."""


# --------------------------------------------------------------------------
# Index tables per alphabet


@dataclass(frozen=True)
class SigmaTables:
    """Positions of each constructor kind inside one alphabet."""

    top: int | None
    bot: int | None
    ands: tuple[tuple[int, int, int], ...]
    ors: tuple[tuple[int, int, int], ...]
    imps: tuple[tuple[int, int, int], ...]
    coimps: tuple[tuple[int, int, int], ...]
    x_pairs: tuple[tuple[int, int], ...]
    y_pairs: tuple[tuple[int, int], ...]
    g_pairs: tuple[tuple[int, int], ...]
    h_pairs: tuple[tuple[int, int], ...]
    u_triples: tuple[tuple[int, int, int], ...]
    s_triples: tuple[tuple[int, int, int], ...]


def tables(sigma: SigmaSet) -> SigmaTables:
    cached = sigma.__dict__.get("_tables")
    if cached is not None:
        return cached
    top = bot = None
    ands, ors, imps, coimps = [], [], [], []
    x_pairs, y_pairs, g_pairs, h_pairs = [], [], [], []
    u_triples, s_triples = [], []
    ix = sigma.index
    for i, f in enumerate(sigma.formulas):
        match f:
            case Top():
                top = i
            case Bot():
                bot = i
            case And(l, r):
                ands.append((i, ix[l], ix[r]))
            case Or(l, r):
                ors.append((i, ix[l], ix[r]))
            case Imp(l, r):
                imps.append((i, ix[l], ix[r]))
            case CoImp(l, r):
                coimps.append((i, ix[l], ix[r]))
            case Next(g):
                x_pairs.append((i, ix[g]))
            case Yesterday(g):
                y_pairs.append((i, ix[g]))
            case Hence(g):
                g_pairs.append((i, ix[g]))
            case Hist(g):
                h_pairs.append((i, ix[g]))
            case Until(l, r):
                u_triples.append((i, ix[l], ix[r]))
            case Since(l, r):
                s_triples.append((i, ix[l], ix[r]))
            case Var():
                pass
    t = SigmaTables(top, bot, tuple(ands), tuple(ors), tuple(imps),
                    tuple(coimps), tuple(x_pairs), tuple(y_pairs),
                    tuple(g_pairs), tuple(h_pairs), tuple(u_triples),
                    tuple(s_triples))
    sigma.__dict__["_tables"] = t
    return t


# --------------------------------------------------------------------------
# Types


@dataclass(frozen=True, slots=True)
class SigmaType:
    """A subset of an alphabet, as a bit mask over its indices."""

    mask: int
    sigma: SigmaSet

    def __contains__(self, f: Formula) -> bool:
        return bool(self.mask >> self.sigma.index[f] & 1)

    def formulas(self) -> tuple[Formula, ...]:
        return self.sigma.formulas_of(self.mask)

    def __repr__(self) -> str:
        inner = ", ".join(to_str(f) for f in self.formulas())
        return f"{{{inner}}}"


def _as_mask(bits: int | SigmaType | Iterable[Formula], sigma: SigmaSet) -> int:
    if isinstance(bits, SigmaType):
        return bits.mask
    if isinstance(bits, int):
        return bits
    return sigma.mask_of(bits)


def is_sigma_type(bits: int | SigmaType | Iterable[Formula],
                  sigma: SigmaSet) -> tuple[bool, list[tuple[str, Formula]]]:
    """Local consistency of a subset; violations name clause and formula.

    Clauses: "1" conjunction, "2" disjunction, "3a"/"3b" implication,
    "4a"/"4b" co-implication, plus "top"/"bot" for the forced membership
    of the primitive constants.
    """
    mask = _as_mask(bits, sigma)
    if mask >> len(sigma):
        raise IndexError("bit index out of range for this alphabet")
    t = tables(sigma)
    bad: list[tuple[str, Formula]] = []
    fs = sigma.formulas
    if t.top is not None and not mask >> t.top & 1:
        bad.append(("top", fs[t.top]))
    if t.bot is not None and mask >> t.bot & 1:
        bad.append(("bot", fs[t.bot]))
    for i, l, r in t.ands:
        if (mask >> i & 1) != ((mask >> l & 1) and (mask >> r & 1)):
            bad.append(("1", fs[i]))
    for i, l, r in t.ors:
        if (mask >> i & 1) != ((mask >> l & 1) or (mask >> r & 1)):
            bad.append(("2", fs[i]))
    for i, l, r in t.imps:
        if (mask >> i & 1) and (mask >> l & 1) and not (mask >> r & 1):
            bad.append(("3a", fs[i]))
        if (mask >> r & 1) and not (mask >> i & 1):
            bad.append(("3b", fs[i]))
    for i, l, r in t.coimps:
        if (mask >> i & 1) and not (mask >> l & 1):
            bad.append(("4a", fs[i]))
        if (mask >> l & 1) and not (mask >> r & 1) and not (mask >> i & 1):
            bad.append(("4b", fs[i]))
    return not bad, bad


def enumerate_type_masks(sigma: SigmaSet, cap: int = DEFAULT_TYPE_CAP) -> tuple[int, ...]:
    """All type masks over the alphabet, ascending numerically.

    Enumeration is a backtracking assignment in index order: because
    subformulas precede superformulas, the membership bit of every
    propositional compound is constrained (often forced) by already
    assigned bits, so only genuinely free bits branch.
    """
    cached = sigma.__dict__.get("_type_masks")
    if cached is not None:
        return cached
    n = len(sigma)
    if n > cap:
        raise TypeEnumerationCap(f"alphabet has {n} formulas, cap is {cap}")
    t = tables(sigma)
    kind: list[tuple] = [("free",)] * n
    ix = sigma.index
    for i, f in enumerate(sigma.formulas):
        match f:
            case Top():
                kind[i] = ("one",)
            case Bot():
                kind[i] = ("zero",)
            case And(l, r):
                kind[i] = ("and", ix[l], ix[r])
            case Or(l, r):
                kind[i] = ("or", ix[l], ix[r])
            case Imp(l, r):
                kind[i] = ("imp", ix[l], ix[r])
            case CoImp(l, r):
                kind[i] = ("coimp", ix[l], ix[r])

    out: list[int] = []

    def assign(i: int, mask: int) -> None:
        if i == n:
            out.append(mask)
            return
        k = kind[i]
        match k[0]:
            case "one":
                choices = (1,)
            case "zero":
                choices = (0,)
            case "and":
                choices = (1,) if (mask >> k[1] & 1) and (mask >> k[2] & 1) else (0,)
            case "or":
                choices = (1,) if (mask >> k[1] & 1) or (mask >> k[2] & 1) else (0,)
            case "imp":
                if mask >> k[2] & 1:
                    choices = (1,)
                elif mask >> k[1] & 1:
                    choices = (0,)
                else:
                    choices = (0, 1)
            case "coimp":
                if not mask >> k[1] & 1:
                    choices = (0,)
                elif not mask >> k[2] & 1:
                    choices = (1,)
                else:
                    choices = (0, 1)
            case _:
                choices = (0, 1)
        for bit in choices:
            assign(i + 1, mask | bit << i)

    assign(0, 0)
    del t  # tables only needed to seed the structure above
    result = tuple(sorted(out))
    sigma.__dict__["_type_masks"] = result
    return result


def enumerate_types(sigma: SigmaSet, cap: int = DEFAULT_TYPE_CAP) -> Iterator[SigmaType]:
    """Stream the types of the alphabet in ascending mask order."""
    for mask in enumerate_type_masks(sigma, cap):
        yield SigmaType(mask, sigma)


def is_sensible_pair(a: int | SigmaType | Iterable[Formula],
                     b: int | SigmaType | Iterable[Formula],
                     sigma: SigmaSet) -> tuple[bool, list[tuple[str, Formula]]]:
    """One temporal step compatibility; clauses "(1)".."(6)" as violations."""
    phi = _as_mask(a, sigma)
    psi = _as_mask(b, sigma)
    t = tables(sigma)
    fs = sigma.formulas
    bad: list[tuple[str, Formula]] = []
    for xf, f in t.x_pairs:
        if (phi >> xf & 1) != (psi >> f & 1):
            bad.append(("(1)", fs[xf]))
    for yf, f in t.y_pairs:
        if (psi >> yf & 1) != (phi >> f & 1):
            bad.append(("(2)", fs[yf]))
    for gf, f in t.g_pairs:
        if (phi >> gf & 1) != ((phi >> f & 1) and (psi >> gf & 1)):
            bad.append(("(3)", fs[gf]))
    for hf, f in t.h_pairs:
        if (psi >> hf & 1) != ((psi >> f & 1) and (phi >> hf & 1)):
            bad.append(("(4)", fs[hf]))
    for uf, f, g in t.u_triples:
        if (phi >> uf & 1) != ((phi >> g & 1) or ((phi >> f & 1) and (psi >> uf & 1))):
            bad.append(("(5)", fs[uf]))
    for sf, f, g in t.s_triples:
        if (psi >> sf & 1) != ((psi >> g & 1) or ((psi >> f & 1) and (phi >> sf & 1))):
            bad.append(("(6)", fs[sf]))
    return not bad, bad


def sensible_matrix(sigma: SigmaSet, masks: list[int]) -> list[int]:
    """Bulk pairwise sensibility; row i has bit j iff (masks[i], masks[j]) is sensible."""
    t = tables(sigma)
    return kernels.sensible_matrix(masks, t.x_pairs, t.y_pairs, t.g_pairs,
                                   t.h_pairs, t.u_triples, t.s_triples)


# --------------------------------------------------------------------------
# Labelled systems


def _transitive_reflexive(worlds: Iterable[WorldId],
                          pairs: Iterable[tuple[WorldId, WorldId]]) -> set[tuple[WorldId, WorldId]]:
    worlds = list(worlds)
    below: dict[WorldId, set[WorldId]] = {w: {w} for w in worlds}
    adj: dict[WorldId, set[WorldId]] = {w: set() for w in worlds}
    for lo, hi in pairs:
        adj[lo].add(hi)
    for w in worlds:
        seen = {w}
        stack = [w]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        below[w] = seen
    return {(w, v) for w in worlds for v in below[w]}


class LabelledSystem:
    """Finite poset + type labelling + step relation.

    ``order`` lists generating pairs ``lo <= hi``; the stored order is their
    reflexive-transitive closure.  Construction validates shape only; the
    semantic battery lives in :func:`space_report`, :func:`check_relation`
    and :func:`is_quasimodel`.
    """

    def __init__(self, sigma: SigmaSet, worlds: Iterable[WorldId],
                 order: Iterable[tuple[WorldId, WorldId]],
                 labels: dict[WorldId, int],
                 rel: Iterable[tuple[WorldId, WorldId]]):
        self.sigma = sigma
        self.worlds: tuple[WorldId, ...] = tuple(worlds)
        wset = set(self.worlds)
        if len(wset) != len(self.worlds):
            raise ValueError("duplicate world ids")
        order = list(order)
        for lo, hi in order:
            if lo not in wset or hi not in wset:
                raise ValueError(f"order pair ({lo!r}, {hi!r}) uses unknown world")
        self.leq_pairs = frozenset(_transitive_reflexive(self.worlds, order))
        for a, b in self.leq_pairs:
            if a != b and (b, a) in self.leq_pairs:
                raise ValueError(f"order is not antisymmetric: {a!r} ~ {b!r}")
        if set(labels) != wset:
            raise ValueError("labels must cover exactly the worlds")
        self.labels: dict[WorldId, int] = dict(labels)
        self.rel = frozenset(rel)
        for a, b in self.rel:
            if a not in wset or b not in wset:
                raise ValueError(f"relation pair ({a!r}, {b!r}) uses unknown world")
        self._components: dict[WorldId, tuple[WorldId, ...]] | None = None

    def leq(self, a: WorldId, b: WorldId) -> bool:
        return (a, b) in self.leq_pairs

    def comparable(self, a: WorldId, b: WorldId) -> bool:
        return self.leq(a, b) or self.leq(b, a)

    def component_of(self, w: WorldId) -> tuple[WorldId, ...]:
        """The comparability component of ``w``, sorted bottom to top when a chain."""
        if self._components is None:
            self._build_components()
        return self._components[w]

    def components(self) -> list[tuple[WorldId, ...]]:
        if self._components is None:
            self._build_components()
        out = []
        seen = set()
        for w in self.worlds:
            comp = self._components[w]
            if id(comp) not in seen:
                seen.add(id(comp))
                out.append(comp)
        return out

    def _build_components(self) -> None:
        remaining = set(self.worlds)
        comps: dict[WorldId, tuple[WorldId, ...]] = {}
        for w in self.worlds:
            if w not in remaining:
                continue
            comp = {w}
            frontier = [w]
            while frontier:
                u = frontier.pop()
                for v in self.worlds:
                    if v not in comp and self.comparable(u, v):
                        comp.add(v)
                        frontier.append(v)
            remaining -= comp
            ordered = tuple(sorted(comp, key=lambda v: sum(
                1 for u in comp if self.leq(u, v))))
            for v in comp:
                comps[v] = ordered
        self._components = comps

    def height(self) -> int:
        best = 0
        for comp in self.components():
            chain = [w for w in comp]
            # longest chain inside the component
            longest = {w: 1 for w in chain}
            for w in sorted(chain, key=lambda v: sum(1 for u in chain if self.leq(u, v))):
                for v in chain:
                    if v != w and self.leq(v, w):
                        longest[w] = max(longest[w], longest[v] + 1)
            best = max(best, max(longest.values(), default=0))
        return best

    def falsifies(self, f: Formula) -> bool:
        i = self.sigma.index.get(f)
        if i is None:
            raise KeyError(f"{f} is not in the alphabet")
        return any(not self.labels[w] >> i & 1 for w in self.worlds)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict[str, Any]:
        ids = {w: w if isinstance(w, (str, int)) else str(w) for w in self.worlds}
        gen = [[ids[a], ids[b]] for a, b in sorted(
            ((a, b) for a, b in self.leq_pairs if a != b),
            key=lambda p: (str(p[0]), str(p[1])))]
        return {
            "sigma": [to_str(f) for f in self.sigma.formulas],
            "worlds": [ids[w] for w in self.worlds],
            "order": gen,
            "labels": {str(ids[w]): [i for i in range(len(self.sigma))
                                     if self.labels[w] >> i & 1]
                       for w in self.worlds},
            "rel": [[ids[a], ids[b]] for a, b in sorted(
                self.rel, key=lambda p: (str(p[0]), str(p[1])))],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "LabelledSystem":
        sigma = SigmaSet([parse(s) for s in data["sigma"]])
        worlds = list(data["worlds"])
        labels = {}
        for w in worlds:
            key = str(w)
            if key not in data["labels"]:
                raise ValueError(f"missing label for world {w!r}")
            mask = 0
            for i in data["labels"][key]:
                if not 0 <= i < len(sigma):
                    raise ValueError(f"label index {i} out of range")
                mask |= 1 << i
            labels[w] = mask
        order = [tuple(p) for p in data["order"]]
        rel = [tuple(p) for p in data["rel"]]
        return cls(sigma, worlds, order, labels, rel)


def make_system(sigma: SigmaSet, worlds: Iterable[WorldId],
                order: Iterable[tuple[WorldId, WorldId]],
                labels: dict[WorldId, Iterable[Formula] | int],
                rel: Iterable[tuple[WorldId, WorldId]]) -> LabelledSystem:
    """Construction helper accepting labels as formula collections."""
    enc = {w: l if isinstance(l, int) else sigma.mask_of(l)
           for w, l in labels.items()}
    return LabelledSystem(sigma, worlds, order, enc, rel)


# --------------------------------------------------------------------------
# The battery


@dataclass
class RelationReport:
    """Outcome of the relation battery; a flag is false iff it has witnesses.

    ``space`` carries violations of the labelled-space conditions (local
    linearity, labels being types, inverse monotonicity, the two
    witnessing conditions); it is filled by :func:`is_quasimodel`.
    """

    sensible: bool = True
    convex: bool = True
    fully_confluent: bool = True
    forth_down: bool = True
    forth_up: bool = True
    back_down: bool = True
    back_up: bool = True
    bi_serial: bool = True
    omega_sensible: bool = True
    counterexamples: dict[str, list[tuple]] = field(default_factory=dict)
    space: list[tuple] = field(default_factory=list)

    def note(self, flag: str, example: tuple) -> None:
        setattr(self, flag, False)
        self.counterexamples.setdefault(flag, []).append(example)
        if flag in ("forth_down", "forth_up", "back_down", "back_up"):
            self.fully_confluent = False

    @property
    def all_ok(self) -> bool:
        return (self.sensible and self.convex and self.fully_confluent
                and self.bi_serial and self.omega_sensible)


def _is_convex(sys: LabelledSystem, subset: set[WorldId]) -> tuple[WorldId, ...] | None:
    for a in subset:
        for b in subset:
            if a == b or not sys.leq(a, b):
                continue
            for s in sys.worlds:
                if s not in subset and sys.leq(a, s) and sys.leq(s, b):
                    return (a, s, b)
    return None


def check_relation(sys: LabelledSystem) -> RelationReport:
    """Exhaustively verify the five relation properties on a finite system."""
    report = RelationReport()
    sigma = sys.sigma
    t = tables(sigma)

    for a, b in sorted(sys.rel, key=lambda p: (str(p[0]), str(p[1]))):
        ok, bad = is_sensible_pair(sys.labels[a], sys.labels[b], sigma)
        if not ok:
            report.note("sensible", (a, b, bad[0][0], to_str(bad[0][1])))

    img: dict[WorldId, set[WorldId]] = {w: set() for w in sys.worlds}
    pre: dict[WorldId, set[WorldId]] = {w: set() for w in sys.worlds}
    for a, b in sys.rel:
        img[a].add(b)
        pre[b].add(a)

    for w in sys.worlds:
        bad_img = _is_convex(sys, img[w])
        if bad_img is not None:
            report.note("convex", ("image", w) + bad_img)
        bad_pre = _is_convex(sys, pre[w])
        if bad_pre is not None:
            report.note("convex", ("preimage", w) + bad_pre)

    for x2, y2 in sys.rel:
        for x in sys.worlds:
            if sys.leq(x, x2) and not any(sys.leq(y, y2) for y in img[x]):
                report.note("forth_down", (x, x2, y2))
            if sys.leq(x2, x) and not any(sys.leq(y2, y) for y in img[x]):
                report.note("forth_up", (x, x2, y2))
        for y in sys.worlds:
            if sys.leq(y, y2) and not any(sys.leq(x, x2) for x in pre[y]):
                report.note("back_down", (x2, y2, y))
            if sys.leq(y2, y) and not any(sys.leq(x2, x) for x in pre[y]):
                report.note("back_up", (x2, y2, y))

    for w in sys.worlds:
        if not img[w]:
            report.note("bi_serial", ("no successor", w))
        if not pre[w]:
            report.note("bi_serial", ("no predecessor", w))

    fwd = _reach(sys.worlds, img)
    bwd = _reach(sys.worlds, pre)
    fs = sigma.formulas
    for w in sys.worlds:
        mask = sys.labels[w]
        for gf, f in t.g_pairs:
            if not mask >> gf & 1 and not any(
                    not sys.labels[v] >> f & 1 for v in fwd[w]):
                report.note("omega_sensible", ("G", w, to_str(fs[gf])))
        for hf, f in t.h_pairs:
            if not mask >> hf & 1 and not any(
                    not sys.labels[v] >> f & 1 for v in bwd[w]):
                report.note("omega_sensible", ("H", w, to_str(fs[hf])))
        for uf, _f, g in t.u_triples:
            if mask >> uf & 1 and not any(
                    sys.labels[v] >> g & 1 for v in fwd[w]):
                report.note("omega_sensible", ("U", w, to_str(fs[uf])))
        for sf, _f, g in t.s_triples:
            if mask >> sf & 1 and not any(
                    sys.labels[v] >> g & 1 for v in bwd[w]):
                report.note("omega_sensible", ("S", w, to_str(fs[sf])))
    return report


def _reach(worlds: Iterable[WorldId],
           adj: dict[WorldId, set[WorldId]]) -> dict[WorldId, set[WorldId]]:
    out = {}
    for w in worlds:
        seen = {w}
        stack = [w]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        out[w] = seen
    return out


def space_report(sys: LabelledSystem) -> list[tuple]:
    """Violations of the labelled-space conditions (empty means valid)."""
    bad: list[tuple] = []
    sigma = sys.sigma
    t = tables(sigma)
    fs = sigma.formulas

    for comp in sys.components():
        for a in comp:
            for b in comp:
                if not sys.comparable(a, b):
                    bad.append(("locally_linear", a, b))

    for w in sys.worlds:
        ok, viol = is_sigma_type(sys.labels[w], sigma)
        if not ok:
            bad.append(("label_not_type", w, viol[0][0], to_str(viol[0][1])))

    for a, b in sys.leq_pairs:
        if sys.labels[a] | sys.labels[b] != sys.labels[a]:
            bad.append(("inverse_monotone", a, b))

    for w in sys.worlds:
        mask = sys.labels[w]
        for i, l, r in t.imps:
            if mask >> i & 1:
                continue
            if not any(sys.leq(v, w)
                       and sys.labels[v] >> l & 1
                       and not sys.labels[v] >> r & 1 for v in sys.worlds):
                bad.append(("imp_witness", w, to_str(fs[i])))
        for i, l, r in t.coimps:
            if not mask >> i & 1:
                continue
            if not any(sys.leq(w, v)
                       and sys.labels[v] >> l & 1
                       and not sys.labels[v] >> r & 1 for v in sys.worlds):
                bad.append(("coimp_witness", w, to_str(fs[i])))
    return bad


def is_quasimodel(sys: LabelledSystem) -> tuple[bool, RelationReport]:
    """Space conditions plus the full relation battery."""
    report = check_relation(sys)
    report.space = space_report(sys)
    return report.all_ok and not report.space, report
