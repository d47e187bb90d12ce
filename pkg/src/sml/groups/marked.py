"""Marked abelian subgroups with decidable membership and exact transporter sets.

For a marked subgroup ``G0`` and elements ``g, g'`` the transporter set is
``{(h1, h2) in G0 x G0 : h1 g h2 = g'}``.  With ``g' = g`` it is the stabilizer
``K_g``; with ``g'`` ranging over supports it drives the summability sums.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import gcd
from typing import Sequence

from sympy import totient

from ..errors import PreconditionError, check_budget
from .core import (
    AbelianGroup,
    DirectProduct,
    Form,
    FreeGroup,
    FreeProduct,
    Group,
    Semidirect,
)
from .intlinalg import LatticeQuotient, lcm


@dataclass(frozen=True)
class Transporters:
    """Solutions of ``h1 g h2 = g'`` with ``h1, h2`` in the marked subgroup.

    When ``finite`` is true, ``pairs`` lists every solution.  Otherwise the set
    is infinite: ``pairs`` holds one solution ``(h1, h2)`` and ``step = (k1, k2)``
    is an element of infinite order in the stabilizer, so every
    ``(k1^n h1, h2 k2^n)`` is again a solution.
    """

    pairs: tuple
    finite: bool
    step: tuple | None = None

    @property
    def empty(self) -> bool:
        return self.finite and not self.pairs

    @property
    def size(self) -> int | None:
        return len(self.pairs) if self.finite else None


class MarkedSubgroup:
    """Abelian subgroup ``G0`` of ``group`` isomorphic to ``prod Z/orders[i]`` (0 = Z)."""

    group: Group
    orders: tuple[int, ...]

    def contains(self, x: Form) -> bool:
        raise NotImplementedError

    def coordinates(self, x: Form) -> tuple[int, ...]:
        raise NotImplementedError

    def element(self, coords: Sequence[int]) -> Form:
        raise NotImplementedError

    def transporters(self, g: Form, gp: Form) -> Transporters:
        raise NotImplementedError

    @property
    def is_finite(self) -> bool:
        return all(n > 0 for n in self.orders)

    @property
    def order(self) -> int | None:
        if not self.is_finite:
            return None
        out = 1
        for n in self.orders:
            out *= n
        return out

    def generator_forms(self) -> list[Form]:
        d = len(self.orders)
        return [self.element([int(i == j) for j in range(d)]) for i in range(d)]

    def all_elements(self) -> list[Form]:
        if not self.is_finite:
            raise PreconditionError("marked subgroup is infinite")
        check_budget("marked subgroup size", self.order)
        return [self.element(c) for c in itertools.product(*(range(n) for n in self.orders))]

    def ball(self, R: int) -> list[Form]:
        """Elements whose coordinates have l1-norm at most R (torsion taken symmetric)."""
        ranges = []
        for n in self.orders:
            if n == 0:
                ranges.append(range(-R, R + 1))
            else:
                ranges.append(range(-(n // 2) + (1 - n % 2), n // 2 + 1))
        coords = [c for c in itertools.product(*ranges) if sum(abs(x) for x in c) <= R]
        coords.sort(key=lambda c: (sum(abs(x) for x in c), [abs(x) for x in c], [-x for x in c]))
        check_budget("marked-subgroup ball size", len(coords))
        return [self.element(c) for c in coords]

    def norm(self, x: Form) -> int:
        total = 0
        for c, n in zip(self.coordinates(x), self.orders):
            if n:
                c = c % n
                c = min(c, n - c)
            total += abs(c)
        return total


class TrivialMarked(MarkedSubgroup):
    def __init__(self, group: Group):
        self.group = group
        self.orders = ()

    def contains(self, x):
        return x == self.group.identity

    def coordinates(self, x):
        if not self.contains(x):
            raise PreconditionError("not in the marked subgroup")
        return ()

    def element(self, coords):
        return self.group.identity

    def transporters(self, g, gp):
        e = self.group.identity
        return Transporters(((e, e),) if g == gp else (), True)


# ---------------------------------------------------------------- free kinds


class FreeMarked(MarkedSubgroup):
    """Cyclic subgroup ``<rho^d>`` of a free group, ``rho = u r u^-1`` with ``r`` a cyclically reduced root."""

    def __init__(self, group: FreeGroup, gens: Sequence[Form]):
        self.group = group
        G = group
        w = gens[0]
        u: tuple = ()
        c = w
        while len(c) >= 2 and c[0] == -c[-1]:
            u = u + (c[0],)
            c = c[1:-1]
        p = next(q for q in range(1, len(c) + 1) if len(c) % q == 0 and c == c[:q] * (len(c) // q))
        self.u, self.uinv, self.r = u, G.inv(u), c[:p]
        self.rinv = G.inv(self.r)
        exps = []
        for g in gens:
            j = self._exponent(g)
            if j is None:
                raise PreconditionError(
                    f"marked generators {[G.format(x) for x in gens]} do not generate an abelian subgroup"
                )
            exps.append(j)
        self.d = 0
        for j in exps:
            self.d = gcd(self.d, j)
        self.orders = (0,)

    def _rpow(self, j: int) -> tuple:
        return self.r * j if j >= 0 else self.rinv * (-j)

    def _exponent_reduced(self, y: tuple) -> int | None:
        p = len(self.r)
        if len(y) % p:
            return None
        j = len(y) // p
        if y == self.r * j:
            return j
        if y == self.rinv * j:
            return -j
        return None

    def _exponent(self, x: Form) -> int | None:
        """``j`` with ``x = rho^j``, or None."""
        G = self.group
        return self._exponent_reduced(G.mul(G.mul(self.uinv, x), self.u))

    def contains(self, x):
        j = self._exponent(x)
        return j is not None and j % self.d == 0

    def coordinates(self, x):
        j = self._exponent(x)
        if j is None or j % self.d:
            raise PreconditionError(f"{self.group.format(x)} is not in the marked subgroup")
        return (j // self.d,)

    def element(self, coords):
        G = self.group
        return G.mul(G.mul(self.u, self._rpow(coords[0] * self.d)), self.uinv)

    def transporters(self, g, gp):
        G = self.group
        x = G.mul(G.mul(self.uinv, g), self.u)
        y = G.mul(G.mul(self.uinv, gp), self.u)
        d = self.d
        jx = self._exponent_reduced(x)
        if jx is not None:
            jy = self._exponent_reduced(y)
            if jy is None or (jy - jx) % d:
                return Transporters((), True)
            pair = (G.identity, self.element(((jy - jx) // d,)))
            return Transporters((pair,), False, (self.element((1,)), self.element((-1,))))
        # x lies outside <r>, whose stabilizer is trivial (maximal cyclic subgroups
        # of free groups are malnormal), so at most one solution exists and it has
        # |s| bounded by the word lengths involved.
        xinv = G.inv(x)
        B = (len(x) + len(y)) // len(self.r) + 2
        for s in range(-B, B + 1):
            if s % d:
                continue
            t = self._exponent_reduced(G.mul(xinv, G.mul(self._rpow(-s), y)))
            if t is not None and t % d == 0:
                return Transporters(((self.element((s // d,)), self.element((t // d,))),), True)
        return Transporters((), True)


# ------------------------------------------------------------ abelian kinds


class AbelianMarked(MarkedSubgroup):
    def __init__(self, group: AbelianGroup, gens: Sequence[Form]):
        self.group = group
        self.lattice = LatticeQuotient(group.invariants, gens)
        self.orders = self.lattice.orders

    def contains(self, x):
        return self.lattice.contains(x)

    def coordinates(self, x):
        try:
            return self.lattice.coordinates(x)
        except ValueError as exc:
            raise PreconditionError(f"{self.group.format(x)} is not in the marked subgroup") from exc

    def element(self, coords):
        return self.lattice.element(coords)

    def transporters(self, g, gp):
        G = self.group
        diff = G.mul(gp, G.inv(g))
        if not self.contains(diff):
            return Transporters((), True)
        if self.is_finite:
            return Transporters(tuple((h, G.mul(diff, G.inv(h))) for h in self.all_elements()), True)
        j = self.orders.index(0)
        t = self.element([int(i == j) for i in range(len(self.orders))])
        return Transporters(((G.identity, diff),), False, (t, G.inv(t)))


# ------------------------------------------------------------------ products


class DirectMarked(MarkedSubgroup):
    """Product of marked subgroups of the factors."""

    def __init__(self, group: DirectProduct, gens: Sequence[Form]):
        self.group = group
        per: list[list] = [[] for _ in group.factors]
        for g in gens:
            support = [i for i, (f, a) in enumerate(zip(group.factors, g)) if a != f.identity]
            if len(support) > 1:
                raise PreconditionError(
                    f"marked generator {group.format(g)} mixes factors; give one generator per factor"
                )
            if support:
                per[support[0]].append(g[support[0]])
        self.parts = [make_marked(f, p) for f, p in zip(group.factors, per)]
        self.orders = tuple(n for m in self.parts for n in m.orders)

    def contains(self, x):
        return all(m.contains(a) for m, a in zip(self.parts, x))

    def coordinates(self, x):
        return tuple(c for m, a in zip(self.parts, x) for c in m.coordinates(a))

    def element(self, coords):
        out, k = [], 0
        for m in self.parts:
            n = len(m.orders)
            out.append(m.element(coords[k : k + n]))
            k += n
        return tuple(out)

    def transporters(self, g, gp):
        G = self.group
        comps = [m.transporters(a, b) for m, a, b in zip(self.parts, g, gp)]
        if any(c.empty for c in comps):
            return Transporters((), True)
        if all(c.finite for c in comps):
            total = 1
            for c in comps:
                total *= len(c.pairs)
            check_budget("transporter set size", total)
            pairs = tuple(
                (tuple(p[0] for p in combo), tuple(p[1] for p in combo)) for combo in itertools.product(*(c.pairs for c in comps))
            )
            return Transporters(pairs, True)
        first = tuple(c.pairs[0] for c in comps)
        i = next(k for k, c in enumerate(comps) if not c.finite)
        step = (G.embed(i, comps[i].step[0]), G.embed(i, comps[i].step[1]))
        return Transporters(((tuple(p[0] for p in first), tuple(p[1] for p in first)),), False, step)


class FreeProductMarked(MarkedSubgroup):
    """Marked subgroup inside a single free factor."""

    def __init__(self, group: FreeProduct, gens: Sequence[Form]):
        self.group = group
        factors = {syl[0] for g in gens for syl in g}
        if any(len(g) > 1 for g in gens) or len(factors) > 1:
            raise PreconditionError("marked subgroup of a free product must lie in a single factor")
        self.i = factors.pop()
        self.inner = make_marked(group.factors[self.i], [g[0][1] for g in gens])
        self.orders = self.inner.orders

    def _in_factor(self, x) -> bool:
        return len(x) == 0 or (len(x) == 1 and x[0][0] == self.i)

    def _inner_form(self, x):
        return x[0][1] if x else self.group.factors[self.i].identity

    def contains(self, x):
        return self._in_factor(x) and self.inner.contains(self._inner_form(x))

    def coordinates(self, x):
        if not self._in_factor(x):
            raise PreconditionError(f"{self.group.format(x)} is not in the marked subgroup")
        return self.inner.coordinates(self._inner_form(x))

    def element(self, coords):
        return self.group.embed(self.i, self.inner.element(coords))

    def transporters(self, g, gp):
        G, i = self.group, self.i
        F = G.factors[i]
        if self._in_factor(g):
            if not self._in_factor(gp):
                return Transporters((), True)
            inner = self.inner.transporters(self._inner_form(g), self._inner_form(gp))
            emb = lambda p: (G.embed(i, p[0]), G.embed(i, p[1]))  # noqa: E731
            return Transporters(
                tuple(emb(p) for p in inner.pairs), inner.finite, emb(inner.step) if inner.step else None
            )
        # g has a syllable outside factor i, so h1 only meets the first syllable
        # and h2 only the last one; the candidates below are exhaustive.
        s1, sn = g[0], g[-1]
        t1 = gp[0] if gp else None
        tn = gp[-1] if gp else None
        left, right = [F.identity], [F.identity]
        if s1[0] == i:
            left.append(F.inv(s1[1]))
            if t1 and t1[0] == i:
                left.append(F.mul(t1[1], F.inv(s1[1])))
        elif t1 and t1[0] == i:
            left.append(t1[1])
        if sn[0] == i:
            right.append(F.inv(sn[1]))
            if tn and tn[0] == i:
                right.append(F.mul(F.inv(sn[1]), tn[1]))
        elif tn and tn[0] == i:
            right.append(tn[1])
        found = []
        for a in left:
            for b in right:
                if not (self.inner.contains(a) and self.inner.contains(b)):
                    continue
                h1, h2 = G.embed(i, a), G.embed(i, b)
                if G.mul(G.mul(h1, g), h2) == gp and (h1, h2) not in found:
                    found.append((h1, h2))
        return Transporters(tuple(found), True)


# ---------------------------------------------------------------- semidirect


def _finite_order_exponent(d: int) -> int:
    """lcm of all n with phi(n) <= d: every finite orbit of GL_d(Z) has period dividing it."""
    L = 1
    for n in range(1, 2 * d * d + 3):
        if totient(n) <= d:
            L = lcm(L, n)
    return L


class SemidirectActingMarked(MarkedSubgroup):
    """``<(0, d0)>`` inside ``Z^d x|_A Z``."""

    MAX_SEARCH = 10_000

    def __init__(self, group: Semidirect, d0: int):
        if d0 < 1:
            raise PreconditionError("acting generator must be nontrivial")
        self.group, self.d0 = group, d0
        self.orders = (0,)
        self._L = _finite_order_exponent(group.d)

    def contains(self, x):
        v, m = x
        return not any(v) and m % self.d0 == 0

    def coordinates(self, x):
        if not self.contains(x):
            raise PreconditionError(f"{self.group.format(x)} is not in the marked subgroup")
        return (x[1] // self.d0,)

    def element(self, coords):
        return ((0,) * self.group.d, coords[0] * self.d0)

    def _solutions_p(self, w, wp) -> tuple[list[int], int | None]:
        """All p with ``A^p w = w'``: either a finite list, or ``([p0], period)``."""
        G = self.group
        if G.act(self._L, w) == tuple(w):
            period = next(P for P in range(1, self._L + 1) if G.act(P, w) == tuple(w))
            hits = [p for p in range(period) if G.act(p, w) == tuple(wp)]
            return (hits[:1], period) if hits else ([], None)
        # Infinite orbit: the integer points A^p w are pairwise distinct, so only
        # finitely many fit in the ball of radius |w'|; scan both directions until
        # the orbit has stayed outside that ball for a full window of steps.
        target = max((abs(a) for a in wp), default=0)
        window = 4 * G.d + 8
        hits = []
        for sign in (1, -1):
            outside = 0
            p = 0 if sign == 1 else -1
            while outside < window:
                if abs(p) > self.MAX_SEARCH:
                    raise PreconditionError("orbit search exceeded its step cap; cannot certify the transporter set")
                v = G.act(p, w)
                if v == tuple(wp):
                    hits.append(p)
                outside = outside + 1 if max(abs(a) for a in v) > target else 0
                p += sign
        return sorted(set(hits)), None

    def transporters(self, g, gp):
        G, d0 = self.group, self.d0
        (w, m), (wp, mp) = g, gp
        if (mp - m) % d0:
            return Transporters((), True)
        ps, period = self._solutions_p(w, wp)
        if period is not None:
            P = lcm(period, d0)
            p = next((q for q in range(ps[0], ps[0] + P, period) if q % d0 == 0), None)
            if p is None:
                return Transporters((), True)
            pair = (self.element((p // d0,)), self.element(((mp - m - p) // d0,)))
            return Transporters((pair,), False, (self.element((P // d0,)), self.element((-P // d0,))))
        pairs = tuple(
            (self.element((p // d0,)), self.element(((mp - m - p) // d0,))) for p in ps if p % d0 == 0
        )
        return Transporters(pairs, True)


class SemidirectLatticeMarked(MarkedSubgroup):
    """A subgroup of the normal lattice ``Z^d x {0}``."""

    def __init__(self, group: Semidirect, gens: Sequence[Form]):
        self.group = group
        self.lattice = LatticeQuotient((0,) * group.d, [v for v, _ in gens])
        self.orders = self.lattice.orders

    def contains(self, x):
        v, m = x
        return m == 0 and self.lattice.contains(v)

    def coordinates(self, x):
        if not self.contains(x):
            raise PreconditionError(f"{self.group.format(x)} is not in the marked subgroup")
        return self.lattice.coordinates(x[0])

    def element(self, coords):
        return (self.lattice.element(coords), 0)

    def transporters(self, g, gp):
        raise PreconditionError("transporter sets are only implemented for the acting marked subgroup")


def make_marked(group: Group, gens: Sequence[Form]) -> MarkedSubgroup:
    """Marked subgroup generated by ``gens``; rejects non-abelian or undecidable requests."""
    gens = [g for g in gens if g != group.identity]
    for a, b in itertools.combinations(gens, 2):
        if group.mul(a, b) != group.mul(b, a):
            raise PreconditionError(
                f"marked generators {group.format(a)} and {group.format(b)} do not commute"
            )
    if not gens:
        return TrivialMarked(group)
    if isinstance(group, FreeGroup):
        return FreeMarked(group, gens)
    if isinstance(group, AbelianGroup):
        return AbelianMarked(group, gens)
    if isinstance(group, DirectProduct):
        return DirectMarked(group, gens)
    if isinstance(group, FreeProduct):
        return FreeProductMarked(group, gens)
    if isinstance(group, Semidirect):
        if all(not any(v) for v, _ in gens):
            d0 = 0
            for _, m in gens:
                d0 = gcd(d0, m)
            return SemidirectActingMarked(group, d0)
        if all(m == 0 for _, m in gens):
            return SemidirectLatticeMarked(group, gens)
        raise PreconditionError("semidirect marked subgroup must lie in the acting Z or in the lattice")
    raise PreconditionError(f"no marked-subgroup support for {group!r}")


def ball(group: Group, R: int) -> tuple[list[Form], dict]:
    """Word-metric ball of radius R in BFS order, with the word length of each element."""
    if R < 0:
        raise PreconditionError("radius must be nonnegative")
    steps: list[Form] = []
    for g in group.generators():
        for s in (g, group.inv(g)):
            if s not in steps:
                steps.append(s)
    dist = {group.identity: 0}
    order = [group.identity]
    frontier = [group.identity]
    for r in range(1, R + 1):
        nxt = []
        for x in frontier:
            for s in steps:
                y = group.mul(x, s)
                if y not in dist:
                    dist[y] = r
                    nxt.append(y)
        order.extend(nxt)
        check_budget(f"ball of radius {r}", len(order))
        frontier = nxt
    return order, dist
