"""Subgroups of finitely generated abelian groups via Smith normal form."""

from __future__ import annotations

from math import gcd
from typing import Sequence

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_decomp


def _snf(rows: list[list[int]], ncols: int) -> tuple[list[int], Matrix]:
    """Diagonal of ``U M V`` and the column transform ``V``."""
    M = Matrix(len(rows), ncols, lambda i, j: rows[i][j])
    S, _, V = smith_normal_decomp(M, domain=ZZ)
    diag = [int(S[i, i]) for i in range(min(S.shape))]
    return diag, V


class LatticeQuotient:
    """Subgroup of ``Z^d / diag(n) Z^d`` generated by integer vectors.

    Exposes an explicit isomorphism onto ``prod Z/orders[i]`` (order 0 = Z):
    :meth:`coordinates` and :meth:`element` are mutually inverse.
    """

    def __init__(self, invariants: Sequence[int], generators: Sequence[Sequence[int]]):
        self.invariants = tuple(int(n) for n in invariants)
        d = len(self.invariants)
        self.d = d
        rows = [list(map(int, g)) for g in generators]
        rows += [[n if j == i else 0 for j in range(d)] for i, n in enumerate(self.invariants) if n > 0]
        rows = [r for r in rows if any(r)]
        if not rows or d == 0:
            self.rank = 0
            self._basis: list[list[int]] = []
            self.orders: tuple[int, ...] = ()
            return
        diag, V = _snf(rows, d)
        self._V = V
        self._diag = [x for x in diag if x != 0]
        r = len(self._diag)
        self.rank = r
        Vinv = V.inv()
        self._basis = [[self._diag[j] * int(Vinv[j, k]) for k in range(d)] for j in range(r)]
        rels = [[n if j == i else 0 for j in range(d)] for i, n in enumerate(self.invariants) if n > 0]
        rel_coords = [self._lattice_coords(v) for v in rels]
        if rel_coords:
            diag2, V2 = _snf(rel_coords, r)
            diag2 = diag2 + [0] * (r - len(diag2))
        else:
            diag2, V2 = [0] * r, Matrix.eye(r)
        self._V2 = V2
        self._V2inv = V2.inv()
        self._keep = [j for j in range(r) if abs(diag2[j]) != 1]
        self.orders = tuple(abs(diag2[j]) for j in self._keep)

    def _lattice_coords(self, v: Sequence[int]) -> list[int] | None:
        """Coordinates of ``v`` in the lattice basis, or None if v is outside."""
        if self.rank == 0:
            return [] if not any(v) else None
        row = Matrix([list(v)]) * self._V
        coords = []
        for j in range(self.d):
            x = int(row[0, j])
            if j < self.rank:
                if x % self._diag[j]:
                    return None
                coords.append(x // self._diag[j])
            elif x:
                return None
        return coords

    def contains(self, v: Sequence[int]) -> bool:
        if self.rank == 0:
            return all(self._reduce(v)[i] == 0 for i in range(self.d))
        return self._lattice_coords(list(v)) is not None

    def _reduce(self, v: Sequence[int]) -> tuple[int, ...]:
        return tuple(x % n if n else x for x, n in zip(v, self.invariants))

    def coordinates(self, v: Sequence[int]) -> tuple[int, ...]:
        if self.rank == 0:
            if any(self._reduce(v)):
                raise ValueError("not in subgroup")
            return ()
        y = self._lattice_coords(list(v))
        if y is None:
            raise ValueError("not in subgroup")
        z = Matrix([y]) * self._V2
        out = []
        for idx, j in enumerate(self._keep):
            x = int(z[0, j])
            n = self.orders[idx]
            out.append(x % n if n else x)
        return tuple(out)

    def element(self, coords: Sequence[int]) -> tuple[int, ...]:
        if self.rank == 0:
            return tuple(0 for _ in range(self.d))
        full = [0] * self.rank
        for idx, j in enumerate(self._keep):
            full[j] = int(coords[idx])
        y = Matrix([full]) * self._V2inv
        v = [0] * self.d
        for j in range(self.rank):
            c = int(y[0, j])
            for k in range(self.d):
                v[k] += c * self._basis[j][k]
        return self._reduce(v)


def lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b) if a and b else 0
