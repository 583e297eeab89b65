"""Moments, temporal successors, and double-lasso falsifiability witnesses.

A moment is one time slice of an ultimately periodic quasimodel: a
strictly shrinking chain of types (position 0 is the bottom world) whose
missing implications are witnessed at or below their position and whose
co-implications are witnessed at or above.  Moments step to one another
through nonempty fully confluent convex sensible relations between their
chains; a witness is a finite moment sequence with two distinguished
loop anchors whose loops realise every pending obligation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Iterator

from . import kernels
from .formula import Formula, SigmaSet, parse, to_str
from .typespace import (LabelledSystem, RelationReport, check_relation,
                        is_sigma_type, tables)

Relation = frozenset[tuple[int, int]]


@dataclass(frozen=True, slots=True)
class Moment:
    """A strictly decreasing chain of type masks over one alphabet."""

    chain: tuple[int, ...]
    sigma: SigmaSet

    def __len__(self) -> int:
        return len(self.chain)

    def top(self) -> int:
        """The smallest type (the highest world of the slice)."""
        return self.chain[-1]

    def key(self) -> tuple[int, ...]:
        return self.chain

    def __repr__(self) -> str:
        from .typespace import SigmaType
        parts = ", ".join(repr(SigmaType(m, self.sigma)) for m in self.chain)
        return f"Moment[{parts}]"


def is_moment(chain: Iterable[int] | Moment,
              sigma: SigmaSet) -> tuple[bool, list[tuple[str, str]]]:
    """Check the four moment conditions; violations carry a clause tag."""
    masks = tuple(chain.chain if isinstance(chain, Moment) else chain)
    bad: list[tuple[str, str]] = []
    if not masks:
        return False, [("1", "empty chain")]
    for m in masks:
        ok, viol = is_sigma_type(m, sigma)
        if not ok:
            bad.append(("1", f"position with mask {m:#x}: clause {viol[0][0]} "
                             f"at {to_str(viol[0][1])}"))
    for i in range(len(masks) - 1):
        lo, hi = masks[i], masks[i + 1]
        if not (lo != hi and lo | hi == lo):
            bad.append(("2", f"positions {i},{i + 1} not strictly decreasing"))
    t = tables(sigma)
    fs = sigma.formulas
    for i, m in enumerate(masks):
        for fi, l, r in t.imps:
            if m >> fi & 1:
                continue
            if not any((masks[j] >> l & 1) and not (masks[j] >> r & 1)
                       for j in range(i + 1)):
                bad.append(("3", f"{to_str(fs[fi])} unwitnessed at position {i}"))
        for fi, l, r in t.coimps:
            if not m >> fi & 1:
                continue
            if not any((masks[j] >> l & 1) and not (masks[j] >> r & 1)
                       for j in range(i, len(masks))):
                bad.append(("4", f"{to_str(fs[fi])} unwitnessed at position {i}"))
    return not bad, bad


def pair_rows(m: Moment, n: Moment) -> list[int]:
    """Per position of ``m``, the bitmask of sensible positions of ``n``."""
    t = tables(m.sigma)
    rows = []
    for phi in m.chain:
        row = 0
        for j, psi in enumerate(n.chain):
            if kernels.pair_sensible(phi, psi, t.x_pairs, t.y_pairs, t.g_pairs,
                                     t.h_pairs, t.u_triples, t.s_triples):
                row |= 1 << j
        rows.append(row)
    return rows


# --------------------------------------------------------------------------
# Staircase search
#
# A nonempty fully confluent convex relation between two finite chains is
# exactly an assignment of a sub-interval [lo(x), hi(x)] of the target
# chain to every source position x, with lo and hi monotone, lo(0) = 0,
# hi(a-1) = b-1, and lo(x+1) <= hi(x)+1 so that the whole target chain is
# covered.  Sensibility restricts each interval to allowed columns.


class StaircaseLimit(RuntimeError):
    pass


def _staircases(rows: list[int], b: int, first_only: bool,
                limit: int = 200_000) -> Iterator[tuple[tuple[int, int], ...]]:
    a = len(rows)
    full = (1 << b) - 1
    if any(r == 0 for r in rows):
        return
    if not rows[0] & 1 or not rows[a - 1] >> (b - 1) & 1:
        return
    count = 0
    assignment: list[tuple[int, int]] = []

    def intervals(x: int, lo_min: int, lo_max: int, hi_min: int) -> Iterator[tuple[int, int]]:
        row = rows[x]
        for lo in range(lo_min, lo_max + 1):
            if not row >> lo & 1:
                continue
            for hi in range(max(lo, hi_min), b):
                seg = ((1 << (hi - lo + 1)) - 1) << lo
                if seg & ~row:
                    break  # a forbidden column entered; larger hi only worse
                yield lo, hi

    def rec(x: int, prev_lo: int, prev_hi: int) -> Iterator[tuple[tuple[int, int], ...]]:
        nonlocal count
        if x == a:
            if prev_hi == b - 1:
                count += 1
                if count > limit:
                    raise StaircaseLimit(f"more than {limit} step relations")
                yield tuple(assignment)
            return
        lo_min, lo_max = (0, 0) if x == 0 else (prev_lo, min(prev_hi + 1, b - 1))
        hi_min = prev_hi if x else 0
        for lo, hi in intervals(x, lo_min, lo_max, hi_min):
            assignment.append((lo, hi))
            yield from rec(x + 1, lo, hi)
            assignment.pop()

    for result in rec(0, 0, -1):
        yield result
        if first_only:
            return
    _ = full


def _pairs(assignment: tuple[tuple[int, int], ...]) -> Relation:
    return frozenset((x, y) for x, (lo, hi) in enumerate(assignment)
                     for y in range(lo, hi + 1))


def first_step_relation(m: Moment, n: Moment) -> Relation | None:
    """Lexicographically least valid step relation, if any."""
    rows = pair_rows(m, n)
    for assignment in _staircases(rows, len(n), first_only=True):
        return _pairs(assignment)
    return None


def maximal_step_relations(m: Moment, n: Moment,
                           limit: int = 200_000) -> list[Relation]:
    """All maximal valid step relations, canonically ordered.

    Restricting a search to maximal relations loses nothing: every
    clause a witness imposes on its relations (validity of each step,
    and the existence of realising paths) is monotone under enlarging
    the relation.
    """
    rows = pair_rows(m, n)
    all_rels = [_pairs(x) for x in _staircases(rows, len(n), False, limit)]
    all_rels.sort(key=len, reverse=True)
    maximal: list[Relation] = []
    for r in all_rels:
        if not any(r < s for s in maximal):
            maximal.append(r)
    maximal.sort(key=lambda r: tuple(sorted(r)))
    return maximal


def temporal_successor(m: Moment, n: Moment) -> Relation | None:
    """A witnessing relation making ``n`` a temporal successor of ``m``."""
    if m.sigma is not n.sigma and m.sigma != n.sigma:
        raise ValueError("moments over different alphabets")
    return first_step_relation(m, n)


def two_chain_system(m: Moment, n: Moment, rel: Relation) -> LabelledSystem:
    """The parallel sum of the two chains with ``rel`` as step relation."""
    worlds = [("a", i) for i in range(len(m))] + [("b", j) for j in range(len(n))]
    order = [(("a", i), ("a", i + 1)) for i in range(len(m) - 1)]
    order += [(("b", j), ("b", j + 1)) for j in range(len(n) - 1)]
    labels = {("a", i): m.chain[i] for i in range(len(m))}
    labels.update({("b", j): n.chain[j] for j in range(len(n))})
    return LabelledSystem(m.sigma, worlds, order, labels,
                          [(("a", x), ("b", y)) for x, y in rel])


def step_relation_report(m: Moment, n: Moment, rel: Relation) -> RelationReport:
    """Direct check of a step relation on the two-chain space."""
    return check_relation(two_chain_system(m, n, rel))


def step_relation_ok(m: Moment, n: Moment, rel: Relation) -> bool:
    if not rel:
        return False
    r = step_relation_report(m, n, rel)
    return r.sensible and r.convex and r.fully_confluent


# --------------------------------------------------------------------------
# Witnesses


@dataclass(frozen=True)
class Witness:
    """Double lasso of moments with per-step relations and loop anchors.

    ``moments[past_anchor]`` equals ``moments[0]`` and
    ``moments[future_anchor]`` equals ``moments[-1]``; the segments
    strictly before the past anchor and strictly after the future anchor
    are the two loops.  Time zero may be any index between the anchors.
    """

    formula: Formula
    sigma: SigmaSet
    moments: tuple[Moment, ...]
    past_anchor: int
    future_anchor: int
    rels: tuple[Relation, ...]

    def to_json(self) -> dict[str, Any]:
        idx = range(len(self.sigma))
        return {
            "formula": to_str(self.formula),
            "moments": [[[i for i in idx if mask >> i & 1] for mask in m.chain]
                        for m in self.moments],
            "anchors": {"past": self.past_anchor, "future": self.future_anchor},
            "rels": [sorted(map(list, r)) for r in self.rels],
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "Witness":
        from .formula import closure
        f = parse(data["formula"])
        sigma = closure(f)
        moments = []
        for chain in data["moments"]:
            masks = []
            for levels in chain:
                mask = 0
                for i in levels:
                    if not 0 <= i < len(sigma):
                        raise ValueError(f"type index {i} out of range")
                    mask |= 1 << i
                masks.append(mask)
            moments.append(Moment(tuple(masks), sigma))
        rels = tuple(frozenset((int(a), int(b)) for a, b in pairs)
                     for pairs in data["rels"])
        return cls(f, sigma, tuple(moments),
                   int(data["anchors"]["past"]), int(data["anchors"]["future"]),
                   rels)


def certify_witness(w: Witness) -> tuple[bool, list[tuple[str, str]]]:
    """Check every clause of the witness definition; tag each violation.

    Tags: "shape" for structural defects, "moment" for invalid slices,
    then "A" (the target formula fails somewhere in the middle segment),
    "B" (anchor equalities), "C" (step relations nonempty, sensible,
    convex, fully confluent), "D"/"E" (until/henceforth realisation in
    the future loop), "F"/"G" (since/historically, past loop).
    """
    bad: list[tuple[str, str]] = []
    n_m = len(w.moments)
    pa, fa = w.past_anchor, w.future_anchor
    sigma = w.sigma
    t = tables(sigma)
    fs = sigma.formulas

    if n_m < 3:
        bad.append(("shape", "need at least three moments"))
        return False, bad
    if not (1 <= pa <= fa <= n_m - 2):
        bad.append(("shape", f"anchors ({pa}, {fa}) leave no loop on some side"))
        return False, bad
    if len(w.rels) != n_m - 1:
        bad.append(("shape", f"{len(w.rels)} relations for {n_m} moments"))
        return False, bad

    for k, m in enumerate(w.moments):
        ok, viol = is_moment(m, sigma)
        if not ok:
            bad.append(("moment", f"moment {k}: clause {viol[0][0]}: {viol[0][1]}"))
    for k, r in enumerate(w.rels):
        hi_src, hi_tgt = len(w.moments[k]), len(w.moments[k + 1])
        for x, y in r:
            if not (0 <= x < hi_src and 0 <= y < hi_tgt):
                bad.append(("shape", f"relation {k} pair ({x},{y}) out of range"))
    if bad:
        return False, bad

    fi = sigma.index.get(w.formula)
    if fi is None:
        bad.append(("A", "target formula not in the alphabet"))
    elif not any(not w.moments[z].top() >> fi & 1 for z in range(pa, fa + 1)):
        bad.append(("A", "target formula holds at the top of every middle moment"))

    if w.moments[0] != w.moments[pa]:
        bad.append(("B", "past loop endpoints differ"))
    if w.moments[-1] != w.moments[fa]:
        bad.append(("B", "future loop endpoints differ"))

    for k, r in enumerate(w.rels):
        if not r:
            bad.append(("C", f"relation {k} is empty"))
            continue
        report = step_relation_report(w.moments[k], w.moments[k + 1], r)
        if not report.sensible:
            bad.append(("C", f"relation {k} is not sensible"))
        if not report.convex:
            bad.append(("C", f"relation {k} is not convex"))
        if not report.fully_confluent:
            bad.append(("C", f"relation {k} is not fully confluent"))

    loop_len = n_m - 1 - fa
    anchor = w.moments[fa]

    def future_search(j: int, guard: int | None, target: int,
                      want_in: bool) -> bool:
        reach = {j}
        for r in range(loop_len):
            chain = w.moments[fa + r].chain
            if any((chain[p] >> target & 1) == want_in for p in reach):
                return True
            rel = w.rels[fa + r]
            gated = {p for p in reach
                     if guard is None or chain[p] >> guard & 1}
            reach = {z for y, z in rel if y in gated}
            if not reach:
                return False
        return False

    for j, mask in enumerate(anchor.chain):
        for uf, l, g in t.u_triples:
            if mask >> uf & 1 and not future_search(j, l, g, True):
                bad.append(("D", f"{to_str(fs[uf])} at anchor position {j} "
                                 "is never realised in the future loop"))
        for gf, g in t.g_pairs:
            if not mask >> gf & 1 and not future_search(j, None, g, False):
                bad.append(("E", f"{to_str(fs[gf])} fails at anchor position {j} "
                                 "but its body never fails in the future loop"))

    past_len = pa
    p_anchor = w.moments[pa]

    def past_search(j: int, guard: int | None, target: int,
                    want_in: bool) -> bool:
        reach = {j}
        for r in range(past_len):
            chain = w.moments[pa - r].chain
            if any((chain[p] >> target & 1) == want_in for p in reach):
                return True
            rel = w.rels[pa - r - 1]
            gated = {p for p in reach
                     if guard is None or chain[p] >> guard & 1}
            reach = {y for y, z in rel if z in gated}
            if not reach:
                return False
        return False

    for j, mask in enumerate(p_anchor.chain):
        for sf, l, g in t.s_triples:
            if mask >> sf & 1 and not past_search(j, l, g, True):
                bad.append(("F", f"{to_str(fs[sf])} at anchor position {j} "
                                 "is never realised in the past loop"))
        for hf, g in t.h_pairs:
            if not mask >> hf & 1 and not past_search(j, None, g, False):
                bad.append(("G", f"{to_str(fs[hf])} fails at anchor position {j} "
                                 "but its body never fails in the past loop"))

    return not bad, bad


def witness_to_system(w: Witness) -> LabelledSystem:
    """Flatten a witness into the quasimodel it denotes.

    The duplicated end moments are dropped; their relations become the
    loop-back edges (future loop end into the future anchor, past anchor
    into the start of the past loop).
    """
    n_m = len(w.moments)
    pa, fa = w.past_anchor, w.future_anchor
    kept = range(1, n_m - 1)
    worlds = [(k, p) for k in kept for p in range(len(w.moments[k]))]
    order = [((k, p), (k, p + 1)) for k in kept
             for p in range(len(w.moments[k]) - 1)]
    labels = {(k, p): w.moments[k].chain[p] for k, p in worlds}
    rel = []
    for k, r in enumerate(w.rels):
        src = pa if k == 0 else k
        tgt = fa if k + 1 == n_m - 1 else k + 1
        rel += [((src, y), (tgt, z)) for y, z in r]
    return LabelledSystem(w.sigma, worlds, order, labels, rel)
