"""Classical linear temporal logic with past, over two-way infinite time.

This module is an oracle deliberately kept independent of the main
decision procedure: truth evaluation is a direct recursion on ultimately
periodic models, and validity is decided by a double-lasso countermodel
search over complete classical states (sets of subformulas), using plain
graph reachability and strongly connected components.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .formula import (And, Bot, CoImp, Formula, Hence, Hist, Imp, Next, Or,
                      SigmaSet, Since, Top, Until, Var, Yesterday, closure)


class ClassicalFragmentError(ValueError):
    """Raised when a formula contains co-implication."""


def _require_classical(f: Formula) -> None:
    match f:
        case CoImp():
            raise ClassicalFragmentError(
                "co-implication is outside the classical fragment")
        case And(l, r) | Or(l, r) | Imp(l, r) | Until(l, r) | Since(l, r):
            _require_classical(l)
            _require_classical(r)
        case Next(g) | Yesterday(g) | Hence(g) | Hist(g):
            _require_classical(g)


@dataclass(frozen=True)
class LTLModel:
    """A crisp model on a k-cycle: per variable, the set of true times."""

    period: int
    truths: Mapping[str, frozenset[int]]

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        for name, times in self.truths.items():
            for t in times:
                if not 0 <= t < self.period:
                    raise ValueError(f"time {t} out of range for {name!r}")

    @classmethod
    def make(cls, period: int, truths: Mapping[str, Iterable[int]]) -> "LTLModel":
        return cls(period, {n: frozenset(ts) for n, ts in truths.items()})

    def to_bi(self):
        """The same model as a one-world order model."""
        from .semantics import PeriodicBiModel
        return PeriodicBiModel(1, self.period,
                               {n: frozenset((0, t) for t in ts)
                                for n, ts in self.truths.items()})

    def to_json(self) -> dict[str, Any]:
        return {"period": self.period,
                "truths": {n: sorted(ts) for n, ts in self.truths.items()}}


def ltl_eval(m: LTLModel, f: Formula, t: int) -> bool:
    """Classical truth at time ``t`` of the cyclic model."""
    _require_classical(f)
    k = m.period
    memo: dict[tuple[Formula, int], bool] = {}

    def ev(g: Formula, s: int) -> bool:
        s %= k
        key = (g, s)
        val = memo.get(key)
        if val is not None:
            return val
        match g:
            case Var(name):
                val = s in m.truths.get(name, frozenset())
            case Top():
                val = True
            case Bot():
                val = False
            case And(l, r):
                val = ev(l, s) and ev(r, s)
            case Or(l, r):
                val = ev(l, s) or ev(r, s)
            case Imp(l, r):
                val = (not ev(l, s)) or ev(r, s)
            case Next(h):
                val = ev(h, s + 1)
            case Yesterday(h):
                val = ev(h, s - 1)
            case Hence(h):
                val = all(ev(h, s + n) for n in range(k))
            case Hist(h):
                val = all(ev(h, s - n) for n in range(k))
            case Until(l, r):
                val = any(ev(r, s + n) and all(ev(l, s + i) for i in range(n))
                          for n in range(2 * k))
            case Since(l, r):
                val = any(ev(r, s - n) and all(ev(l, s - i) for i in range(n))
                          for n in range(2 * k))
            case _:
                raise TypeError(f"not a formula: {g!r}")
        memo[key] = val
        return val

    return ev(f, t)


def crispify(m: LTLModel):
    """The 0/1-valued degree model matching a crisp model."""
    from .semantics import PeriodicRealModel
    from fractions import Fraction
    one, zero = Fraction(1), Fraction(0)
    return PeriodicRealModel(
        m.period,
        {name: tuple(one if t in times else zero for t in range(m.period))
         for name, times in m.truths.items()})


# --------------------------------------------------------------------------
# Validity by double-lasso countermodel search


def _classical_states(sigma: SigmaSet) -> list[int]:
    """All complete classical states (masks) over the alphabet."""
    n = len(sigma)
    ix = sigma.index
    forced: list[tuple] = [("free",)] * n
    for i, f in enumerate(sigma.formulas):
        match f:
            case Top():
                forced[i] = ("one",)
            case Bot():
                forced[i] = ("zero",)
            case And(l, r):
                forced[i] = ("and", ix[l], ix[r])
            case Or(l, r):
                forced[i] = ("or", ix[l], ix[r])
            case Imp(l, r):
                forced[i] = ("imp", ix[l], ix[r])

    out: list[int] = []

    def assign(i: int, mask: int) -> None:
        if i == n:
            out.append(mask)
            return
        k = forced[i]
        match k[0]:
            case "one":
                bits = (1,)
            case "zero":
                bits = (0,)
            case "and":
                bits = (1,) if (mask >> k[1] & 1) and (mask >> k[2] & 1) else (0,)
            case "or":
                bits = (1,) if (mask >> k[1] & 1) or (mask >> k[2] & 1) else (0,)
            case "imp":
                bits = (1,) if (not mask >> k[1] & 1) or (mask >> k[2] & 1) else (0,)
            case _:
                bits = (0, 1)
        for b in bits:
            assign(i + 1, mask | b << i)

    assign(0, 0)
    return sorted(out)


def _steps_ok(sigma: SigmaSet, phi: int, psi: int) -> bool:
    from .typespace import tables
    t = tables(sigma)
    for xf, f in t.x_pairs:
        if (phi >> xf & 1) != (psi >> f & 1):
            return False
    for yf, f in t.y_pairs:
        if (psi >> yf & 1) != (phi >> f & 1):
            return False
    for gf, f in t.g_pairs:
        if (phi >> gf & 1) != ((phi >> f & 1) and (psi >> gf & 1)):
            return False
    for hf, f in t.h_pairs:
        if (psi >> hf & 1) != ((psi >> f & 1) and (phi >> hf & 1)):
            return False
    for uf, f, g in t.u_triples:
        if (phi >> uf & 1) != ((phi >> g & 1) or ((phi >> f & 1) and (psi >> uf & 1))):
            return False
    for sf, f, g in t.s_triples:
        if (psi >> sf & 1) != ((psi >> g & 1) or ((psi >> f & 1) and (phi >> sf & 1))):
            return False
    return True


def _sccs(n: int, succ: list[list[int]]) -> list[int]:
    """Iterative Tarjan; returns the component id of each node."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comp = [-1] * n
    counter = 0
    comp_count = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while pi < len(succ[v]):
                w = succ[v][pi]
                pi += 1
                if index[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = comp_count
                    if w == v:
                        break
                comp_count += 1
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comp


def ltl_falsifiable(f: Formula) -> bool:
    """Existence of an ultimately periodic countermodel at some time point."""
    _require_classical(f)
    sigma = closure(f)
    from .typespace import tables
    t = tables(sigma)
    states = _classical_states(sigma)
    n = len(states)
    succ = [[j for j in range(n) if _steps_ok(sigma, states[i], states[j])]
            for i in range(n)]
    pred = [[] for _ in range(n)]
    for i in range(n):
        for j in succ[i]:
            pred[j].append(i)

    comp = _sccs(n, succ)
    members: dict[int, list[int]] = {}
    for i, c in enumerate(comp):
        members.setdefault(c, []).append(i)

    def cyclic(c: int) -> bool:
        ms = members[c]
        return len(ms) > 1 or ms[0] in succ[ms[0]]

    def good_future(i: int) -> bool:
        c = comp[i]
        if not cyclic(c):
            return False
        pool = members[c]
        mask = states[i]
        for uf, _l, g in t.u_triples:
            if mask >> uf & 1 and not any(states[j] >> g & 1 for j in pool):
                return False
        for gf, g in t.g_pairs:
            if not mask >> gf & 1 and not any(
                    not states[j] >> g & 1 for j in pool):
                return False
        return True

    def good_past(i: int) -> bool:
        c = comp[i]
        if not cyclic(c):
            return False
        pool = members[c]
        mask = states[i]
        for sf, _l, g in t.s_triples:
            if mask >> sf & 1 and not any(states[j] >> g & 1 for j in pool):
                return False
        for hf, g in t.h_pairs:
            if not mask >> hf & 1 and not any(
                    not states[j] >> g & 1 for j in pool):
                return False
        return True

    fwd_good = {i for i in range(n) if good_future(i)}
    bwd_good = {i for i in range(n) if good_past(i)}

    def reaches(start: set[int], adj: list[list[int]]) -> set[int]:
        # nodes that can reach `start` following `adj` backwards is the same
        # as forward reachability over the reversed lists
        seen = set(start)
        frontier = list(start)
        while frontier:
            u = frontier.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        return seen

    can_reach_future = reaches(fwd_good, pred)
    can_reach_past = reaches(bwd_good, succ)

    fi = sigma.index[f]
    return any(not states[i] >> fi & 1
               and i in can_reach_future and i in can_reach_past
               for i in range(n))


def ltl_valid(f: Formula) -> bool:
    """Classical validity over all two-way infinite flows."""
    return not ltl_falsifiable(f)
