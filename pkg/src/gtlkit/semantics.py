"""Exact evaluators on finite cyclic flows.

Real-valued semantics assigns each formula a rational degree in [0, 1];
the order semantics evaluates membership over a finite chain of truth
degrees crossed with the cyclic flow.  Both use exact arithmetic; the
unbounded suprema/infima of the defining equations collapse to finite
ones on a cycle of length k (horizon k for G/H, 2k for U/S: prefix
minima stabilise once a full cycle is covered, after which the terms
repeat with period k).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Mapping

from .formula import (And, Bot, CoImp, Formula, Hence, Hist, Imp, Next, Or,
                      Since, Top, Until, Var, Yesterday)

ONE = Fraction(1)
ZERO = Fraction(0)


class MissingVariable(KeyError):
    """Raised in strict mode when a variable has no assigned value."""


def _check_unit(value: Fraction) -> Fraction:
    if not 0 <= value <= 1:
        raise ValueError(f"value {value} outside [0, 1]")
    return value


@dataclass(frozen=True)
class PeriodicRealModel:
    """A k-cycle flow with a rational degree per variable and time point."""

    period: int
    valuation: Mapping[str, tuple[Fraction, ...]]

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")
        for name, values in self.valuation.items():
            if len(values) != self.period:
                raise ValueError(f"variable {name!r} has {len(values)} values, "
                                 f"expected {self.period}")
            for v in values:
                _check_unit(v)

    @classmethod
    def make(cls, period: int, valuation: Mapping[str, Iterable]) -> "PeriodicRealModel":
        return cls(period, {name: tuple(Fraction(v) for v in values)
                            for name, values in valuation.items()})

    def to_json(self) -> dict[str, Any]:
        return {"period": self.period,
                "valuation": {name: [str(v) for v in values]
                              for name, values in self.valuation.items()}}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "PeriodicRealModel":
        return cls.make(data["period"], data["valuation"])


def eval_real(m: PeriodicRealModel, f: Formula, t: int,
              strict: bool = False, horizon: int | None = None) -> Fraction:
    """Exact degree of ``f`` at time ``t``.

    Absent variables evaluate to 0 unless ``strict``.  ``horizon``
    overrides the step count used for U/S (testing hook; the default 2k
    is always sufficient on a k-cycle).
    """
    k = m.period
    hor = 2 * k if horizon is None else horizon
    memo: dict[tuple[Formula, int], Fraction] = {}

    def ev(g: Formula, s: int) -> Fraction:
        s %= k
        key = (g, s)
        val = memo.get(key)
        if val is not None:
            return val
        match g:
            case Var(name):
                values = m.valuation.get(name)
                if values is None:
                    if strict:
                        raise MissingVariable(name)
                    val = ZERO
                else:
                    val = values[s]
            case Top():
                val = ONE
            case Bot():
                val = ZERO
            case And(l, r):
                val = min(ev(l, s), ev(r, s))
            case Or(l, r):
                val = max(ev(l, s), ev(r, s))
            case Imp(l, r):
                a, b = ev(l, s), ev(r, s)
                val = ONE if a <= b else b
            case CoImp(l, r):
                a, b = ev(l, s), ev(r, s)
                val = ZERO if a <= b else a
            case Next(h):
                val = ev(h, s + 1)
            case Yesterday(h):
                val = ev(h, s - 1)
            case Hence(h):
                val = min(ev(h, s + n) for n in range(k))
            case Hist(h):
                val = min(ev(h, s - n) for n in range(k))
            case Until(l, r):
                best = ev(r, s)
                prefix = ONE
                for n in range(1, hor):
                    prefix = min(prefix, ev(l, s + n - 1))
                    best = max(best, min(prefix, ev(r, s + n)))
                val = best
            case Since(l, r):
                best = ev(r, s)
                prefix = ONE
                for n in range(1, hor):
                    prefix = min(prefix, ev(l, s - (n - 1)))
                    best = max(best, min(prefix, ev(r, s - n)))
                val = best
            case _:
                raise TypeError(f"not a formula: {g!r}")
        memo[key] = val
        return val

    return ev(f, t)


@dataclass(frozen=True)
class PeriodicBiModel:
    """Finite chain of degrees (0 is bottom) crossed with a k-cycle flow.

    ``membership`` maps a variable to its extension, a set of
    ``(world, time)`` points that must be downward closed in the world
    coordinate.
    """

    worlds: int
    period: int
    membership: Mapping[str, frozenset[tuple[int, int]]]

    def __post_init__(self):
        if self.worlds <= 0 or self.period <= 0:
            raise ValueError("worlds and period must be positive")
        for name, points in self.membership.items():
            for w, t in points:
                if not (0 <= w < self.worlds and 0 <= t < self.period):
                    raise ValueError(f"point {(w, t)} out of range for {name!r}")
                if w > 0 and (w - 1, t) not in points:
                    raise ValueError(f"extension of {name!r} is not downward "
                                     f"closed at {(w, t)}")

    @classmethod
    def make(cls, worlds: int, period: int,
             membership: Mapping[str, Iterable[tuple[int, int]]]) -> "PeriodicBiModel":
        """Build with the downward closure taken automatically."""
        closed = {}
        for name, points in membership.items():
            pts = set()
            for w, t in points:
                pts.update((v, t) for v in range(w + 1))
            closed[name] = frozenset(pts)
        return cls(worlds, period, closed)

    def to_json(self) -> dict[str, Any]:
        return {"worlds": self.worlds, "period": self.period,
                "membership": {name: sorted(map(list, points))
                               for name, points in self.membership.items()}}

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "PeriodicBiModel":
        return cls(data["worlds"], data["period"],
                   {name: frozenset(tuple(p) for p in points)
                    for name, points in data["membership"].items()})


def extension(m: PeriodicBiModel, f: Formula,
              strict: bool = False) -> frozenset[tuple[int, int]]:
    """The full point set of ``f``; memoised bottom-up."""
    k = m.period
    all_points = frozenset((w, t) for w in range(m.worlds) for t in range(k))
    memo: dict[Formula, frozenset] = {}

    def shift(points: frozenset, n: int) -> frozenset:
        # points of X^n f from points of f
        return frozenset((w, (t - n) % k) for w, t in points)

    def ev(g: Formula) -> frozenset:
        val = memo.get(g)
        if val is not None:
            return val
        match g:
            case Var(name):
                pts = m.membership.get(name)
                if pts is None:
                    if strict:
                        raise MissingVariable(name)
                    pts = frozenset()
                val = pts
            case Top():
                val = all_points
            case Bot():
                val = frozenset()
            case And(l, r):
                val = ev(l) & ev(r)
            case Or(l, r):
                val = ev(l) | ev(r)
            case Imp(l, r):
                a, b = ev(l), ev(r)
                val = frozenset(
                    (w, t) for w, t in all_points
                    if all((v, t) not in a or (v, t) in b for v in range(w + 1)))
            case CoImp(l, r):
                a, b = ev(l), ev(r)
                val = frozenset(
                    (w, t) for w, t in all_points
                    if any((v, t) in a and (v, t) not in b
                           for v in range(w, m.worlds)))
            case Next(h):
                val = shift(ev(h), 1)
            case Yesterday(h):
                val = shift(ev(h), -1)
            case Hence(h):
                pts = ev(h)
                val = frozenset(p for p in all_points
                                if all((p[0], (p[1] + n) % k) in pts
                                       for n in range(k)))
            case Hist(h):
                pts = ev(h)
                val = frozenset(p for p in all_points
                                if all((p[0], (p[1] - n) % k) in pts
                                       for n in range(k)))
            case Until(l, r):
                a, b = ev(l), ev(r)
                val = frozenset(
                    (w, t) for w, t in all_points
                    if any((w, (t + n) % k) in b
                           and all((w, (t + i) % k) in a for i in range(n))
                           for n in range(2 * k)))
            case Since(l, r):
                a, b = ev(l), ev(r)
                val = frozenset(
                    (w, t) for w, t in all_points
                    if any((w, (t - n) % k) in b
                           and all((w, (t - i) % k) in a for i in range(n))
                           for n in range(2 * k)))
            case _:
                raise TypeError(f"not a formula: {g!r}")
        memo[g] = val
        return val

    return ev(f)


def eval_bi(m: PeriodicBiModel, f: Formula, w: int, t: int,
            strict: bool = False) -> bool:
    """Membership of ``(w, t)`` in the extension of ``f``."""
    if not (0 <= w < m.worlds and 0 <= t < m.period):
        raise ValueError(f"point {(w, t)} outside the frame")
    return (w, t) in extension(m, f, strict=strict)


# Classical layer: re-exported from the independent module so that all
# operations over models live in one namespace.
from .ltl import LTLModel, crispify, ltl_eval, ltl_valid  # noqa: E402,F401
