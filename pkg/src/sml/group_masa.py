"""Finitely supported elements of a group algebra and the masa diagnostics built on them.

The marked subgroup ``G0`` of a :class:`GroupPresentationModel` plays the role
of the abelian subalgebra ``A = L(G0)``; the conditional expectation onto it is
restriction of the coefficient map to ``G0``.  Every asymptotic statement is
reported at an explicit finite horizon or radius.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ModelMismatch, NotSummable, PreconditionError, check_budget
from .groups import GroupPresentationModel
from .groups.core import Form, split_top

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_COMPLEX = re.compile(rf"\(\s*({_NUM})\s*,\s*({_NUM})\s*\)")


def _parse_coefficient(s: str) -> complex | None:
    s = s.strip()
    if re.fullmatch(_NUM, s):
        return complex(float(s))
    m = _COMPLEX.fullmatch(s)
    if m:
        return complex(float(m.group(1)), float(m.group(2)))
    return None


def _format_coefficient(c: complex) -> str:
    if c.imag == 0:
        return f"{c.real:.12g}"
    return f"({c.real:.12g},{c.imag:.12g})"


@dataclass(frozen=True)
class GroupAlgebraElement:
    """Finitely supported ``x = sum_g x_g u_g``; exact zeros are pruned."""

    model: GroupPresentationModel
    coeffs: Mapping[Form, complex] = field(default_factory=dict)

    def __post_init__(self):
        pruned = {g: complex(c) for g, c in self.coeffs.items() if c != 0}
        object.__setattr__(self, "coeffs", pruned)

    # -- constructors

    @classmethod
    def zero(cls, model: GroupPresentationModel) -> "GroupAlgebraElement":
        return cls(model, {})

    @classmethod
    def monomial(cls, model: GroupPresentationModel, g: str | Form, c: complex = 1.0) -> "GroupAlgebraElement":
        return cls(model, {model.form(g): c})

    @classmethod
    def parse(cls, model: GroupPresentationModel, text: str) -> "GroupAlgebraElement":
        """Read ``"1.0*b + (0,1)*a*b^-1"``.

        A leading numeric factor (real, or ``(re,im)``) followed by ``*`` is a
        coefficient; a term with no such factor has coefficient 1.  A leading
        ``-`` negates a term, and `` - `` between terms acts as ``+ -``.
        """
        text = text.strip()
        if text in ("", "0"):
            return cls.zero(model)
        out: dict = {}
        flat = re.sub(r"\s+-\s+", " + -", text)
        for term in split_top(flat, "+"):
            term = term.strip()
            if not term:
                raise PreconditionError(f"empty term in {text!r}")
            sign = 1.0
            if term.startswith("-"):
                sign, term = -1.0, term[1:].strip()
            factors = split_top(term, "*")
            coef = _parse_coefficient(factors[0]) if len(factors) > 1 else None
            if coef is not None:
                factors = factors[1:]
            else:
                coef = 1.0
            g = model.form("*".join(factors).strip())
            out[g] = out.get(g, 0) + sign * coef
        return cls(model, out)

    def format(self) -> str:
        if not self.coeffs:
            return "0"
        terms = sorted(self.coeffs.items(), key=lambda kv: self.model.format(kv[0]))
        return " + ".join(f"{_format_coefficient(c)}*{self.model.format(g)}" for g, c in terms)

    __str__ = format

    # -- algebra

    def _check(self, other: "GroupAlgebraElement") -> None:
        if other.model.group != self.model.group:
            raise ModelMismatch("algebra elements come from different group models")

    def __add__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        self._check(other)
        out = dict(self.coeffs)
        for g, c in other.coeffs.items():
            out[g] = out.get(g, 0) + c
        return GroupAlgebraElement(self.model, out)

    def __neg__(self) -> "GroupAlgebraElement":
        return self.scale(-1)

    def __sub__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        return self + (-other)

    def scale(self, c: complex) -> "GroupAlgebraElement":
        return GroupAlgebraElement(self.model, {g: c * x for g, x in self.coeffs.items()})

    def __rmul__(self, c: complex) -> "GroupAlgebraElement":
        return self.scale(c)

    def __mul__(self, other):
        if not isinstance(other, GroupAlgebraElement):
            return self.scale(other)
        self._check(other)
        G = self.model.group
        check_budget("product support", len(self.coeffs) * len(other.coeffs))
        out: dict = {}
        for g, a in self.coeffs.items():
            for h, b in other.coeffs.items():
                k = G.mul(g, h)
                out[k] = out.get(k, 0) + a * b
        return GroupAlgebraElement(self.model, out)

    def adjoint(self) -> "GroupAlgebraElement":
        G = self.model.group
        return GroupAlgebraElement(self.model, {G.inv(g): c.conjugate() for g, c in self.coeffs.items()})

    @property
    def trace(self) -> complex:
        return self.coeffs.get(self.model.group.identity, 0j)

    def inner(self, other: "GroupAlgebraElement") -> complex:
        """``<x, y> = tau(y* x) = sum_g x_g conj(y_g)``."""
        self._check(other)
        return sum((c * other.coeffs.get(g, 0).conjugate() for g, c in self.coeffs.items()), 0j)

    @property
    def norm2_sq(self) -> float:
        return float(sum(abs(c) ** 2 for c in self.coeffs.values()))

    @property
    def norm2(self) -> float:
        return math.sqrt(self.norm2_sq)

    @property
    def l1_coefficients(self) -> float:
        """Sum of |coefficients|, an upper bound for the operator norm."""
        return float(sum(abs(c) for c in self.coeffs.values()))

    def is_close(self, other: "GroupAlgebraElement", tol: float = 0.0) -> bool:
        return (self - other).norm2 <= tol


def conditional_expectation(x: GroupAlgebraElement) -> GroupAlgebraElement:
    """Restriction of the coefficient map to the marked subgroup."""
    m = x.model.marked
    return GroupAlgebraElement(x.model, {g: c for g, c in x.coeffs.items() if m.contains(g)})


def norm1_in_A(y: GroupAlgebraElement, grid: int | None = None) -> float:
    """``tau(|y|)`` for ``y`` in the marked subalgebra.

    ``y`` is a trigonometric polynomial on the dual of the marked subgroup;
    its L1 norm is exact for a single term and otherwise computed by equal-weight
    quadrature on the dual (exact over finite coordinates).
    """
    marked = y.model.marked
    if not y.coeffs:
        return 0.0
    if any(not marked.contains(g) for g in y.coeffs):
        raise PreconditionError("norm1_in_A needs an element of the marked subalgebra")
    if len(y.coeffs) == 1:
        return abs(next(iter(y.coeffs.values())))
    coords = np.array([marked.coordinates(g) for g in y.coeffs], dtype=np.int64)
    vals = np.array(list(y.coeffs.values()), dtype=complex)
    n_free = sum(1 for n in marked.orders if n == 0)
    if grid is None:
        deg = int(np.abs(coords).max()) if coords.size else 0
        base = 1024 if n_free <= 1 else 128
        grid = max(base, 1 << (8 * deg + 1).bit_length())
    axes = [np.arange(n if n else grid) / (n if n else grid) for n in marked.orders]
    npts = int(np.prod([a.size for a in axes])) if axes else 1
    check_budget("dual quadrature points", npts)
    mesh = np.meshgrid(*axes, indexing="ij")
    phase = np.zeros(mesh[0].shape + (len(vals),))
    for j, T in enumerate(mesh):
        phase += T[..., None] * coords[:, j]
    p = (np.exp(2j * np.pi * phase) * vals).sum(axis=-1)
    return float(np.abs(p).mean())


def _require_infinite_generator(model: GroupPresentationModel, v: Form, exact: bool = False) -> None:
    marked = model.marked
    if not marked.contains(v):
        raise PreconditionError(f"{model.format(v)} is not in the marked subgroup")
    c = marked.coordinates(v)
    if not any(x != 0 and n == 0 for x, n in zip(c, marked.orders)):
        raise PreconditionError(f"{model.format(v)} does not have infinite order")
    if exact and not (marked.orders == (0,) and abs(c[0]) == 1):
        raise PreconditionError(f"{model.format(v)} must generate the marked subgroup, which must be Z")


def _require_mean_zero(x: GroupAlgebraElement, what: str) -> None:
    if conditional_expectation(x).coeffs:
        raise PreconditionError(f"{what} must have zero conditional expectation")


def _v_power(model: GroupPresentationModel, v: Form, k: int) -> GroupAlgebraElement:
    return GroupAlgebraElement.monomial(model, model.group.power(v, k))


def conjugated_expectation(x: GroupAlgebraElement, v: Form, k: int, y: GroupAlgebraElement | None = None) -> GroupAlgebraElement:
    """``E_A(x v^k y*)`` with ``y = x`` by default."""
    y = x if y is None else y
    return conditional_expectation(x * _v_power(x.model, v, k) * y.adjoint())


# ------------------------------------------------------------------ (ST)


@dataclass
class STReport:
    F: list[str]
    radius: int
    verdict: str
    E: list[str]
    witnesses: list[tuple[str, str, str]]
    certificate: str
    unbounded: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "F": self.F,
            "radius": self.radius,
            "verdict": self.verdict,
            "E": self.E,
            "witnesses": [list(w) for w in self.witnesses],
            "certificate": self.certificate,
            "unbounded": self.unbounded,
        }


def st_condition(
    model: GroupPresentationModel, F: Iterable[str | Form], R: int, E_bound: int | None = None
) -> STReport:
    """Search ``g g0 h in G0`` over ``g, h in F`` and nonidentity ``g0`` in the radius-R marked ball.

    When the model supports exact transporter sets, the exceptional set
    ``E = {g0 : g g0 h in G0 for some g, h in F}`` is computed exactly: for fixed
    ``g, h`` it is the first projection of the solutions of ``g0 h h2 = g^-1``.
    An infinite solution set certifies a violation.  Otherwise the verdict
    rests on the radius-R search alone (``E_bound`` defaults to R): more than
    ``E_bound`` exceptional elements is reported as a violation, exceptional
    elements on the outer shell make the result inconclusive.
    """
    G, marked = model.group, model.marked
    F = [model.form(g) for g in F]
    for g in F:
        if marked.contains(g):
            raise PreconditionError(f"F meets the marked subgroup at {model.format(g)}")
    E_bound = R if E_bound is None else E_bound
    e = G.identity
    ball = [g0 for g0 in marked.ball(R) if g0 != e]
    witnesses, E_search = [], []
    for g0 in ball:
        hit = False
        for g, h in itertools.product(F, F):
            if marked.contains(G.mul(G.mul(g, g0), h)):
                witnesses.append((model.format(g), model.format(g0), model.format(h)))
                hit = True
        if hit:
            E_search.append(g0)
    try:
        exact_E: dict = {}
        unbounded = []
        for g, h in itertools.product(F, F):
            T = marked.transporters(h, G.inv(g))
            if not T.finite:
                h1, _ = T.pairs[0]
                unbounded.append(
                    {
                        "g": model.format(g),
                        "h": model.format(h),
                        "g0": model.format(h1),
                        "step": model.format(T.step[0]),
                    }
                )
            for h1, _ in T.pairs:
                if h1 != e:
                    exact_E[h1] = True
    except PreconditionError:
        exact_E, unbounded = None, None
    if exact_E is not None:
        if unbounded:
            verdict = "violation"
            E_forms = E_search
        else:
            verdict = "holds_with_E"
            E_forms = sorted(exact_E, key=lambda x: (marked.norm(x), model.format(x)))
        certificate = "exact"
    else:
        unbounded = []
        E_forms = E_search
        if len(E_search) > E_bound:
            verdict = "violation"
        elif any(marked.norm(x) == R for x in E_search):
            verdict = "inconclusive"
        else:
            verdict = "holds_with_E"
        certificate = f"radius {R} search"
    return STReport(
        F=[model.format(g) for g in F],
        radius=R,
        verdict=verdict,
        E=[model.format(x) for x in E_forms],
        witnesses=witnesses,
        certificate=certificate,
        unbounded=unbounded,
    )


# ------------------------------------------------------------- stabilizers


@dataclass
class KgReport:
    g: str
    trivial: bool
    order: int | None
    elements: list[tuple[str, str]]
    step: tuple[str, str] | None
    certificate: str = "exact"

    def to_json(self) -> dict:
        return {
            "g": self.g,
            "trivial": self.trivial,
            "order": self.order if self.order is not None else "infinite",
            "elements": [list(p) for p in self.elements],
            "step": list(self.step) if self.step else None,
            "certificate": self.certificate,
        }


def stabilizer_Kg(model: GroupPresentationModel, g: str | Form) -> KgReport:
    """``K_g = {(h1, h2) in G0 x G0 : h1 g h2 = g}`` computed exactly."""
    g = model.form(g)
    if model.marked.contains(g):
        raise PreconditionError(f"{model.format(g)} lies in the marked subgroup")
    T = model.stabilizer(g)
    fmt = lambda p: (model.format(p[0]), model.format(p[1]))  # noqa: E731
    return KgReport(
        g=model.format(g),
        trivial=T.finite and len(T.pairs) == 1,
        order=len(T.pairs) if T.finite else None,
        elements=[fmt(p) for p in T.pairs],
        step=fmt(T.step) if T.step else None,
    )


@dataclass
class MalnormalReport:
    radius: int
    malnormal: bool
    witness: tuple[str, str] | None
    n_witnesses: int

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "malnormal": self.malnormal,
            "witness": list(self.witness) if self.witness else None,
            "n_witnesses": self.n_witnesses,
        }


def malnormality_check(model: GroupPresentationModel, R: int) -> MalnormalReport:
    """Look for ``g`` outside G0 in the R-ball and ``h != e`` in the marked R-ball with ``g h g^-1 in G0``."""
    G, marked = model.group, model.marked
    hs = [h for h in marked.ball(R) if h != G.identity]
    first, count = None, 0
    for g in model.ball(R):
        if marked.contains(g):
            continue
        for h in hs:
            if marked.contains(G.conj(g, h)):
                count += 1
                if first is None:
                    first = (model.format(g), model.format(h))
    return MalnormalReport(R, first is None, first, count)


@dataclass
class ICCReport:
    radius: int
    threshold: int
    icc_evidence: bool
    min_class_size: int
    min_element: str | None

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "threshold": self.threshold,
            "icc_evidence": self.icc_evidence,
            "min_class_size": self.min_class_size,
            "min_element": self.min_element,
        }


def icc_check(model: GroupPresentationModel, R: int, threshold: int | None = None) -> ICCReport:
    """Count distinct conjugates ``x g x^-1`` with ``x`` in the 2R-ball, for each ``g != e`` in the R-ball.

    Evidence for infinite conjugacy classes is every count exceeding
    ``threshold`` (default ``2R``).
    """
    G = model.group
    threshold = 2 * R if threshold is None else threshold
    gs = model.ball(R)
    xs = model.ball(2 * R)
    worst, worst_g = None, None
    for g in gs:
        if g == G.identity:
            continue
        size = len({G.conj(x, g) for x in xs})
        if worst is None or size < worst:
            worst, worst_g = size, g
    if worst is None:
        return ICCReport(R, threshold, False, 0, None)
    return ICCReport(R, threshold, worst > threshold, worst, model.format(worst_g))


# --------------------------------------------------------- Cesaro and AHP


@dataclass
class CesaroDiagnostics:
    N: int
    mean_norm2_sq: float
    mean_norm2: float
    mean_norm1_sq: float
    mean_norm1: float
    tol: float

    @property
    def values(self) -> tuple[float, float, float, float]:
        return (self.mean_norm2_sq, self.mean_norm2, self.mean_norm1_sq, self.mean_norm1)

    @property
    def all_vanish(self) -> bool:
        return all(v <= self.tol for v in self.values)

    @property
    def none_vanish(self) -> bool:
        return all(v > self.tol for v in self.values)

    @property
    def consistent(self) -> bool:
        """The four quantities vanish together at this horizon (or none does)."""
        return self.all_vanish or self.none_vanish

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "values": list(self.values),
            "all_vanish": self.all_vanish,
            "consistent": self.consistent,
        }


def cesaro_diagnostics(
    model: GroupPresentationModel, x: GroupAlgebraElement, v: str | Form, N: int, tol: float = 1e-12
) -> CesaroDiagnostics:
    """Horizon-N Cesaro means of ``|E_A(x v^k x*)|`` in 2-norm, 2-norm squared, 1-norm, 1-norm squared.

    The average runs over ``0 < |k| <= N``.  The ``k = 0`` term is
    ``E_A(x x*)``, which never decays; its weight vanishes in the limit, and
    leaving it out makes the horizon-N values exact for the two extreme cases
    (identically zero, identically one).
    """
    v = model.form(v)
    if N < 1:
        raise PreconditionError("horizon N must be >= 1")
    _require_mean_zero(x, "x")
    _require_infinite_generator(model, v)
    n2, n1 = [], []
    for k in itertools.chain(range(-N, 0), range(1, N + 1)):
        y = conjugated_expectation(x, v, k)
        n2.append(y.norm2)
        n1.append(norm1_in_A(y))
    n2, n1 = np.array(n2), np.array(n1)
    return CesaroDiagnostics(
        N=N,
        mean_norm2_sq=float(np.mean(n2**2)),
        mean_norm2=float(np.mean(n2)),
        mean_norm1_sq=float(np.mean(n1**2)),
        mean_norm1=float(np.mean(n1)),
        tol=tol,
    )


@dataclass
class AHPResult:
    status: str
    indices: list[int]

    def to_json(self) -> dict:
        return {"status": self.status, "indices": self.indices}


def ahp_subsequence(
    model: GroupPresentationModel,
    family: Sequence[GroupAlgebraElement],
    v: str | Form,
    L: int,
    K_max: int,
) -> AHPResult:
    """Greedy ``k_1 < ... < k_L <= K_max`` with ``|E_A(x v^{k_l} x*)|_2 < 1/l`` for every family member."""
    v = model.form(v)
    _require_infinite_generator(model, v)
    for x in family:
        _require_mean_zero(x, "family member")
    found: list[int] = []
    k = 0
    while len(found) < L:
        k += 1
        if k > K_max:
            return AHPResult("inconclusive", found)
        l = len(found) + 1
        if all(conjugated_expectation(x, v, k).norm2 < 1.0 / l for x in family):
            found.append(k)
    return AHPResult("found", found)


@dataclass
class WanderingResult:
    wandering: bool
    max_defect: float
    worst_n: int | None

    def to_json(self) -> dict:
        return {"wandering": self.wandering, "max_defect": self.max_defect, "worst_n": self.worst_n}


def wandering_test(
    model: GroupPresentationModel, zeta: GroupAlgebraElement, v: str | Form, N: int, tol: float = 1e-12
) -> WanderingResult:
    """Check ``E_A(zeta v^n zeta*) = 0`` for ``0 < |n| <= N``."""
    v = model.form(v)
    _require_mean_zero(zeta, "zeta")
    _require_infinite_generator(model, v)
    worst, worst_n = 0.0, None
    for n in itertools.chain(range(1, N + 1), range(-1, -N - 1, -1)):
        d = conjugated_expectation(zeta, v, n).norm2
        if d > worst:
            worst, worst_n = d, n
    return WanderingResult(worst <= tol, worst, worst_n)


# ------------------------------------------------------------- summability


def contributing_powers(model: GroupPresentationModel, xi1: GroupAlgebraElement, xi2: GroupAlgebraElement, v: Form) -> list[int]:
    """All k with ``E_A(xi1 v^k xi2*) != 0`` possible, found from exact transporter sets.

    ``g1 v^k g2^-1`` lies in G0 iff ``v^-p g1 v^k = g2`` for some p, i.e. iff
    ``(v^-p, v^k)`` transports ``g1`` to ``g2``.
    """
    marked = model.marked
    ks: set[int] = set()
    for g1 in xi1.coeffs:
        for g2 in xi2.coeffs:
            T = marked.transporters(g1, g2)
            if not T.finite:
                raise NotSummable(
                    f"infinitely many k contribute for support pair ({model.format(g1)}, {model.format(g2)})"
                )
            for _, h2 in T.pairs:
                ks.add(marked.coordinates(h2)[0] * (1 if marked.coordinates(v)[0] == 1 else -1))
    return sorted(ks)


def summability_lhs(model: GroupPresentationModel, xi1: GroupAlgebraElement, xi2: GroupAlgebraElement, v: str | Form) -> float:
    """``sum_k |E_A(xi1 v^k xi2*)|_2^2`` by direct algebra multiplication over the contributing k."""
    v = model.form(v)
    _require_infinite_generator(model, v, exact=True)
    return float(sum(conjugated_expectation(xi1, v, k, xi2).norm2_sq for k in contributing_powers(model, xi1, xi2, v)))


def summability_identity(
    model: GroupPresentationModel, xi1: GroupAlgebraElement, xi2: GroupAlgebraElement, v: str | Form
) -> tuple[float, float]:
    """Both sides of the Parseval identity for the bivariate coefficients of ``(xi1, xi2)``."""
    from .bimodule_measures import bivariate_coefficient_energy

    return summability_lhs(model, xi1, xi2, v), bivariate_coefficient_energy(model, xi1, xi2, v)
