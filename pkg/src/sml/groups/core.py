"""Concrete countable groups with canonical normal forms.

Every group object works on plain hashable *forms* (tuples and ints) so that
hot loops avoid wrapper allocation; :class:`GroupElement` is the user-facing
value type pairing a form with its group.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Hashable, Sequence

from ..errors import ModelMismatch, PreconditionError

Form = Hashable

# Generator names; "e" is reserved for the identity.
LETTERS = "abcdfghijklmnopqrstuvwxyz"
_SYLLABLE = re.compile(r"([a-z])(?:\^(-?\d+))?")


def split_top(s: str, sep: str) -> list[str]:
    """Split ``s`` on ``sep`` outside of (), [] nesting."""
    out, depth, cur = [], 0, []
    for ch in s:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise PreconditionError(f"unbalanced brackets in {s!r}")
        if ch == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise PreconditionError(f"unbalanced brackets in {s!r}")
    out.append("".join(cur))
    return out


def parse_letter_word(s: str, rank: int) -> list[tuple[int, int]]:
    """Parse ``"a^2*b^-1"`` style words into (generator index, exponent) pairs."""
    s = s.replace(" ", "")
    if s in ("", "e", "1"):
        return []
    out = []
    for piece in s.split("*"):
        pos = 0
        if not piece:
            raise PreconditionError(f"empty factor in {s!r}")
        for m in _SYLLABLE.finditer(piece):
            if m.start() != pos:
                break
            pos = m.end()
            ch, exp = m.group(1), m.group(2)
            if ch == "e" and exp is None and len(piece) == 1:
                continue
            idx = LETTERS.find(ch)
            if idx < 0 or idx >= rank:
                raise PreconditionError(f"unknown generator {ch!r} in {s!r} (rank {rank})")
            out.append((idx, 1 if exp is None else int(exp)))
        if pos != len(piece):
            raise PreconditionError(f"cannot parse {piece!r} at column {pos}")
    return out


class Group:
    """Abstract group acting on normal forms."""

    kind: str = "abstract"

    def key(self) -> tuple:
        raise NotImplementedError

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Group) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"{type(self).__name__}{self.key()[1:]}"

    @property
    def identity(self) -> Form:
        raise NotImplementedError

    def mul(self, x: Form, y: Form) -> Form:
        raise NotImplementedError

    def inv(self, x: Form) -> Form:
        raise NotImplementedError

    def generators(self) -> list[Form]:
        raise NotImplementedError

    def format(self, x: Form) -> str:
        raise NotImplementedError

    def parse(self, s: str) -> Form:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def validate(self, x: Form) -> Form:
        """Return the canonical form of ``x`` or raise if it is not a valid form."""
        return x

    def power(self, x: Form, k: int) -> Form:
        if k < 0:
            x, k = self.inv(x), -k
        result, base = self.identity, x
        while k:
            if k & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            k >>= 1
        return result

    def conj(self, g: Form, x: Form) -> Form:
        """``g x g^-1``."""
        return self.mul(self.mul(g, x), self.inv(g))

    def element(self, x: Form | str) -> "GroupElement":
        if isinstance(x, str):
            return GroupElement(self, self.parse(x))
        return GroupElement(self, self.validate(x))


@dataclass(frozen=True)
class GroupElement:
    group: Group
    form: Any

    def _check(self, other: "GroupElement") -> None:
        if not isinstance(other, GroupElement) or other.group != self.group:
            raise ModelMismatch(f"cannot combine elements of {self.group!r} and {getattr(other, 'group', other)!r}")

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        return GroupElement(self.group, self.group.mul(self.form, other.form))

    def inverse(self) -> "GroupElement":
        return GroupElement(self.group, self.group.inv(self.form))

    def __pow__(self, k: int) -> "GroupElement":
        return GroupElement(self.group, self.group.power(self.form, k))

    @property
    def is_identity(self) -> bool:
        return self.form == self.group.identity

    def __str__(self) -> str:
        return self.group.format(self.form)


# ---------------------------------------------------------------- free groups


class FreeGroup(Group):
    """Free group; forms are reduced tuples of nonzero ints (+i = generator i, -i its inverse)."""

    kind = "free"

    def __init__(self, rank: int):
        if not 1 <= rank <= len(LETTERS):
            raise PreconditionError(f"free rank must be in 1..{len(LETTERS)}")
        self.rank = int(rank)

    def key(self):
        return ("free", self.rank)

    @property
    def identity(self):
        return ()

    def mul(self, x, y):
        i, n = 0, min(len(x), len(y))
        lx = len(x)
        while i < n and x[lx - 1 - i] == -y[i]:
            i += 1
        return x[: lx - i] + y[i:]

    def inv(self, x):
        return tuple(-l for l in reversed(x))

    def generators(self):
        return [(i,) for i in range(1, self.rank + 1)]

    def validate(self, x):
        x = tuple(int(l) for l in x)
        out: tuple = ()
        for l in x:
            if l == 0 or abs(l) > self.rank:
                raise PreconditionError(f"letter {l} outside rank {self.rank}")
            out = self.mul(out, (l,))
        return out

    def format(self, x):
        if not x:
            return "e"
        parts, i = [], 0
        while i < len(x):
            j = i
            while j < len(x) and x[j] == x[i]:
                j += 1
            ch = LETTERS[abs(x[i]) - 1]
            exp = (j - i) * (1 if x[i] > 0 else -1)
            parts.append(ch if exp == 1 else f"{ch}^{exp}")
            i = j
        return "*".join(parts)

    def parse(self, s):
        out = ()
        for idx, exp in parse_letter_word(s, self.rank):
            out = self.mul(out, self.power((idx + 1,), exp))
        return out

    def to_json(self):
        return {"kind": "free", "rank": self.rank}


# ------------------------------------------------------------ abelian groups


class AbelianGroup(Group):
    """``prod Z/n_i`` with ``n_i = 0`` meaning Z; forms are reduced int tuples."""

    kind = "abelian"

    def __init__(self, invariants: Sequence[int]):
        inv = tuple(int(n) for n in invariants)
        if not inv or any(n < 0 or n == 1 for n in inv):
            raise PreconditionError("invariants must be 0 (for Z) or at least 2")
        self.invariants = inv

    def key(self):
        return ("abelian", self.invariants)

    @property
    def rank(self):
        return len(self.invariants)

    def reduce(self, v):
        return tuple(int(x) % n if n else int(x) for x, n in zip(v, self.invariants))

    @property
    def identity(self):
        return (0,) * len(self.invariants)

    def mul(self, x, y):
        return self.reduce(a + b for a, b in zip(x, y))

    def inv(self, x):
        return self.reduce(-a for a in x)

    def power(self, x, k):
        return self.reduce(k * a for a in x)

    def generators(self):
        d = len(self.invariants)
        return [tuple(1 if j == i else 0 for j in range(d)) for i in range(d)]

    def validate(self, x):
        x = tuple(x)
        if len(x) != len(self.invariants):
            raise PreconditionError(f"expected {len(self.invariants)} coordinates, got {len(x)}")
        return self.reduce(x)

    def format(self, x):
        if len(x) == 1:
            return str(x[0])
        return "(" + ",".join(str(a) for a in x) + ")"

    def parse(self, s):
        s = s.strip()
        if re.fullmatch(r"-?\d+", s):
            return self.validate((int(s),))
        if s.startswith("("):
            try:
                v = ast.literal_eval(s)
            except (ValueError, SyntaxError) as exc:
                raise PreconditionError(f"cannot parse vector {s!r}") from exc
            v = (v,) if isinstance(v, int) else tuple(v)
            return self.validate(v)
        out = list(self.identity)
        for idx, exp in parse_letter_word(s, self.rank):
            out[idx] += exp
        return self.reduce(out)

    def to_json(self):
        if len(self.invariants) == 1 and self.invariants[0] > 0:
            return {"kind": "finite_cyclic", "n": self.invariants[0]}
        return {"kind": "abelian", "invariants": list(self.invariants)}


def FiniteCyclic(n: int) -> AbelianGroup:
    if n < 2:
        raise PreconditionError("finite cyclic order must be at least 2")
    return AbelianGroup((n,))


# ------------------------------------------------------------------ products


class DirectProduct(Group):
    kind = "direct_product"

    def __init__(self, factors: Sequence[Group]):
        if len(factors) < 2:
            raise PreconditionError("direct product needs at least two factors")
        self.factors = tuple(factors)

    def key(self):
        return ("direct_product", tuple(f.key() for f in self.factors))

    @property
    def identity(self):
        return tuple(f.identity for f in self.factors)

    def mul(self, x, y):
        return tuple(f.mul(a, b) for f, a, b in zip(self.factors, x, y))

    def inv(self, x):
        return tuple(f.inv(a) for f, a in zip(self.factors, x))

    def embed(self, i: int, x: Form) -> Form:
        return tuple(x if j == i else f.identity for j, f in enumerate(self.factors))

    def generators(self):
        return [self.embed(i, g) for i, f in enumerate(self.factors) for g in f.generators()]

    def validate(self, x):
        x = tuple(x)
        if len(x) != len(self.factors):
            raise PreconditionError("wrong number of components")
        return tuple(f.validate(a) for f, a in zip(self.factors, x))

    def format(self, x):
        return "[" + "; ".join(f.format(a) for f, a in zip(self.factors, x)) + "]"

    def parse(self, s):
        s = s.strip()
        if not (s.startswith("[") and s.endswith("]")):
            raise PreconditionError(f"direct-product element must look like [x; y], got {s!r}")
        parts = split_top(s[1:-1], ";")
        if len(parts) != len(self.factors):
            raise PreconditionError(f"expected {len(self.factors)} components in {s!r}")
        return tuple(f.parse(p) for f, p in zip(self.factors, parts))

    def to_json(self):
        return {"kind": "direct_product", "factors": [f.to_json() for f in self.factors]}


class FreeProduct(Group):
    """Free product; forms are tuples of (factor index, non-identity factor form)."""

    kind = "free_product"

    def __init__(self, factors: Sequence[Group]):
        if len(factors) < 2:
            raise PreconditionError("free product needs at least two factors")
        self.factors = tuple(factors)

    def key(self):
        return ("free_product", tuple(f.key() for f in self.factors))

    @property
    def identity(self):
        return ()

    def mul(self, x, y):
        out = list(x)
        for i, a in y:
            if out and out[-1][0] == i:
                c = self.factors[i].mul(out.pop()[1], a)
                if c != self.factors[i].identity:
                    out.append((i, c))
            else:
                out.append((i, a))
        return tuple(out)

    def inv(self, x):
        return tuple((i, self.factors[i].inv(a)) for i, a in reversed(x))

    def embed(self, i: int, a: Form) -> Form:
        return () if a == self.factors[i].identity else ((i, a),)

    def generators(self):
        return [self.embed(i, g) for i, f in enumerate(self.factors) for g in f.generators()]

    def validate(self, x):
        out = ()
        for i, a in x:
            out = self.mul(out, self.embed(int(i), self.factors[int(i)].validate(a)))
        return out

    def format(self, x):
        if not x:
            return "e"
        return "*".join(f"f{i}[{self.factors[i].format(a)}]" for i, a in x)

    def parse(self, s):
        s = s.replace(" ", "")
        if s in ("e", "1", ""):
            return ()
        out = ()
        for piece in split_top(s, "*"):
            m = re.fullmatch(r"f(\d+)\[(.*)\]", piece)
            if not m or int(m.group(1)) >= len(self.factors):
                raise PreconditionError(f"free-product syllable must look like f<i>[x], got {piece!r}")
            i = int(m.group(1))
            out = self.mul(out, self.embed(i, self.factors[i].parse(m.group(2))))
        return out

    def to_json(self):
        return {"kind": "free_product", "factors": [f.to_json() for f in self.factors]}


# ---------------------------------------------------------------- semidirect


def _matmul(A, B):
    return tuple(
        tuple(sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))) for i in range(len(A))
    )


def _matvec(A, v):
    return tuple(sum(a * x for a, x in zip(row, v)) for row in A)


class Semidirect(Group):
    """``Z^d x|_A Z`` with ``(v, m)(w, n) = (v + A^m w, m + n)``."""

    kind = "semidirect"

    def __init__(self, matrix: Sequence[Sequence[int]]):
        from sympy import Matrix

        A = tuple(tuple(int(x) for x in row) for row in matrix)
        d = len(A)
        if d == 0 or any(len(r) != d for r in A):
            raise PreconditionError("semidirect matrix must be square and nonempty")
        M = Matrix(A)
        if abs(M.det()) != 1:
            raise PreconditionError(f"matrix {A} is not in GL_d(Z) (det {M.det()})")
        self.A = A
        self.Ainv = tuple(tuple(int(x) for x in M.inv().row(i)) for i in range(d))
        self.d = d
        self._pow = lru_cache(maxsize=4096)(self._matpow)

    def key(self):
        return ("semidirect", self.A)

    def _matpow(self, m: int):
        base = self.A if m >= 0 else self.Ainv
        k = abs(m)
        result = tuple(tuple(int(i == j) for j in range(self.d)) for i in range(self.d))
        while k:
            if k & 1:
                result = _matmul(result, base)
            base = _matmul(base, base)
            k >>= 1
        return result

    def act(self, m: int, w: Sequence[int]) -> tuple[int, ...]:
        """``A^m w``."""
        return _matvec(self._pow(m), w)

    @property
    def identity(self):
        return ((0,) * self.d, 0)

    def mul(self, x, y):
        (v, m), (w, n) = x, y
        Aw = self.act(m, w)
        return (tuple(a + b for a, b in zip(v, Aw)), m + n)

    def inv(self, x):
        v, m = x
        return (tuple(-a for a in self.act(-m, v)), -m)

    def generators(self):
        z = (0,) * self.d
        gens = [(tuple(1 if j == i else 0 for j in range(self.d)), 0) for i in range(self.d)]
        return gens + [(z, 1)]

    def validate(self, x):
        v, m = x
        v = tuple(int(a) for a in v)
        if len(v) != self.d:
            raise PreconditionError(f"vector part must have length {self.d}")
        return (v, int(m))

    def format(self, x):
        v, m = x
        return "((" + ",".join(str(a) for a in v) + f"),{m})"

    def parse(self, s):
        s = s.strip()
        if s in ("e", "1"):
            return self.identity
        try:
            v, m = ast.literal_eval(s)
            v = (v,) if isinstance(v, int) else tuple(v)
        except (ValueError, SyntaxError, TypeError) as exc:
            raise PreconditionError(f"semidirect element must look like ((1,0),3), got {s!r}") from exc
        return self.validate((v, m))

    def to_json(self):
        return {"kind": "semidirect", "matrix": [list(r) for r in self.A]}


def group_from_json(doc: dict) -> Group:
    kind = doc.get("kind")
    if kind == "free":
        return FreeGroup(int(doc["rank"]))
    if kind == "finite_cyclic":
        return FiniteCyclic(int(doc["n"]))
    if kind in ("abelian", "finitely_generated_abelian"):
        return AbelianGroup(doc["invariants"])
    if kind == "direct_product":
        return DirectProduct([group_from_json(f) for f in doc["factors"]])
    if kind == "free_product":
        return FreeProduct([group_from_json(f) for f in doc["factors"]])
    if kind in ("semidirect", "semidirect_Zd_by_Z"):
        return Semidirect(doc["matrix"])
    raise PreconditionError(f"unknown group kind {kind!r}")
