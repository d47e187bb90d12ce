"""Bivariate measures on finite products ``X x X`` and their disintegrations.

For vectors ``z1, z2`` of a group algebra with finite marked subgroup ``G0``,
``X`` is the dual group of ``G0`` and ``eta_{z1,z2}`` is the unique measure with

    integral of a(t) b(s) d eta(t, s) = <u_a z1 u_b, z2>

for all characters.  It is recovered by inverting the character transform.
Masses are exact Gaussian rationals when every character takes values in
``{1, i, -1, -i}`` and complex floats otherwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Hashable, Mapping

import numpy as np

from ..errors import NotSummable, PreconditionError, check_budget
from ..group_masa import GroupAlgebraElement, conditional_expectation
from ..groups import GroupPresentationModel
from .exact import GaussianRational, exact_root_of_unity

Label = Hashable


def _is_zero(x) -> bool:
    return x == 0


def _mass_to_json(x):
    if isinstance(x, GaussianRational):
        return [str(x.re), str(x.im)]
    if isinstance(x, Fraction):
        return [str(x), "0"]
    c = complex(x)
    return [c.real, c.imag]


def _mass_from_json(re, im):
    if isinstance(re, str) or isinstance(im, str):
        return GaussianRational(Fraction(str(re)), Fraction(str(im)))
    return complex(float(re), float(im))


def _label_to_json(t):
    return list(t) if isinstance(t, tuple) else t


def _label_from_json(t):
    return tuple(t) if isinstance(t, list) else t


@dataclass
class BivariateMeasure:
    """Finitely supported (possibly complex) measure on ``X x X``.

    ``universe`` lists X when it is known (needed for Haar-based fibers);
    ``modulus`` records ``X = Z/modulus`` so that label ``k`` sits at
    ``k / modulus`` on the circle.
    """

    points: dict = field(default_factory=dict)
    universe: tuple | None = None
    modulus: int | None = None

    def __post_init__(self):
        self.points = {k: v for k, v in self.points.items() if not _is_zero(v)}
        if self.universe is not None:
            self.universe = tuple(self.universe)
            U = set(self.universe)
            for t, s in self.points:
                if t not in U or s not in U:
                    raise PreconditionError(f"support point {(t, s)} lies outside the declared universe")

    # -- basic quantities

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, (GaussianRational, Fraction, int)) for v in self.points.values())

    @property
    def is_positive(self) -> bool:
        for v in self.points.values():
            c = complex(v)
            if c.imag != 0 or c.real < 0:
                return False
        return True

    @property
    def total_variation(self) -> float:
        return float(sum(abs(complex(v)) for v in self.points.values()))

    @property
    def total_mass(self):
        return sum(self.points.values(), 0)

    def mass(self, t: Label, s: Label):
        return self.points.get((t, s), 0)

    def marginal(self, axis: int = 1) -> dict:
        out: dict = {}
        for (t, s), m in self.points.items():
            k = t if axis == 1 else s
            out[k] = out.get(k, 0) + m
        return out

    def flip(self) -> "BivariateMeasure":
        return BivariateMeasure({(s, t): m for (t, s), m in self.points.items()}, self.universe, self.modulus)

    def flip_equivalent(self) -> bool:
        """Support-level check of ``theta_* eta << eta << theta_* eta``."""
        S = set(self.points)
        return S == {(s, t) for t, s in S}

    def symmetrized(self) -> "BivariateMeasure":
        """``(eta + theta_* eta) / 2``."""
        out = dict()
        for (t, s), m in self.points.items():
            out[(t, s)] = out.get((t, s), 0) + m
            out[(s, t)] = out.get((s, t), 0) + m
        half = Fraction(1, 2) if self.is_exact else 0.5
        return BivariateMeasure({k: v * half for k, v in out.items()}, self.universe, self.modulus)

    def integrate(self, fn: Callable[[Label, Label], Any]):
        return sum((m * fn(t, s) for (t, s), m in self.points.items()), 0)

    def max_defect(self, other: "BivariateMeasure") -> float:
        keys = set(self.points) | set(other.points)
        return max((abs(complex(self.mass(*k)) - complex(other.mass(*k))) for k in keys), default=0.0)

    def __eq__(self, other):
        if not isinstance(other, BivariateMeasure):
            return NotImplemented
        return self.points == other.points

    def __add__(self, other: "BivariateMeasure") -> "BivariateMeasure":
        out = dict(self.points)
        for k, v in other.points.items():
            out[k] = out.get(k, 0) + v
        return BivariateMeasure(out, self.universe or other.universe, self.modulus or other.modulus)

    def scaled(self, c) -> "BivariateMeasure":
        return BivariateMeasure({k: v * c for k, v in self.points.items()}, self.universe, self.modulus)

    def __sub__(self, other: "BivariateMeasure") -> "BivariateMeasure":
        return self + other.scaled(-1)

    # -- serialization

    def to_json(self) -> dict:
        pts = sorted(self.points.items(), key=lambda kv: (repr(kv[0][0]), repr(kv[0][1])))
        doc: dict = {"points": [[_label_to_json(t), _label_to_json(s), *_mass_to_json(m)] for (t, s), m in pts]}
        if self.modulus is not None:
            doc["modulus"] = self.modulus
        if self.universe is not None:
            doc["universe"] = [_label_to_json(t) for t in self.universe]
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "BivariateMeasure":
        unknown = set(doc) - {"points", "modulus", "universe"}
        if unknown:
            raise PreconditionError(f"unknown measure keys: {sorted(unknown)}")
        pts: dict = {}
        for row in doc.get("points", []):
            if len(row) not in (3, 4):
                raise PreconditionError(f"measure point must be [t, s, re, im], got {row!r}")
            t, s, re = row[0], row[1], row[2]
            im = row[3] if len(row) == 4 else 0
            key = (_label_from_json(t), _label_from_json(s))
            pts[key] = pts.get(key, 0) + _mass_from_json(re, im)
        uni = doc.get("universe")
        return cls(pts, tuple(_label_from_json(t) for t in uni) if uni is not None else None, doc.get("modulus"))


# ----------------------------------------------------------- disintegration


@dataclass
class DisintegrationFibers:
    """Base measure on X plus one fiber per base point.

    Fiber ``t`` is concentrated on ``{t} x X`` (axis 1) or ``X x {t}`` (axis 2)
    and ``sum_t base[t] * fiber_t`` reconstructs the measure.
    """

    axis: int
    base: dict
    fibers: dict
    modulus: int | None = None
    universe: tuple | None = None

    def fiber_total(self, t: Label):
        return sum(self.fibers.get(t, {}).values(), 0)

    def fiber_integral(self, t: Label, fn: Callable[[Label, Label], Any]):
        return sum((m * fn(a, b) for (a, b), m in self.fibers.get(t, {}).items()), 0)

    def reconstruct(self) -> BivariateMeasure:
        out: dict = {}
        for t, fib in self.fibers.items():
            w = self.base[t]
            for k, m in fib.items():
                out[k] = out.get(k, 0) + w * m
        return BivariateMeasure(out, self.universe, self.modulus)

    def concentrated(self) -> bool:
        idx = 0 if self.axis == 1 else 1
        return all(k[idx] == t for t, fib in self.fibers.items() for k in fib)

    def to_json(self) -> dict:
        return {
            "axis": self.axis,
            "base": [[_label_to_json(t), *_mass_to_json(m)] for t, m in sorted(self.base.items(), key=lambda kv: repr(kv[0]))],
            "fibers": [
                {
                    "t": _label_to_json(t),
                    "points": [
                        [_label_to_json(a), _label_to_json(b), *_mass_to_json(m)]
                        for (a, b), m in sorted(fib.items(), key=lambda kv: repr(kv[0]))
                    ],
                }
                for t, fib in sorted(self.fibers.items(), key=lambda kv: repr(kv[0]))
            ],
        }


def _abs_weight(m):
    """Nonnegative weight dominating ``|m|``; rational for exact masses."""
    if isinstance(m, GaussianRational):
        return abs(m.re) + abs(m.im)
    if isinstance(m, (Fraction, int)):
        return abs(m)
    c = complex(m)
    return abs(c.real) if c.imag == 0 else abs(c)


def disintegrate(beta: BivariateMeasure, axis: int = 1, base: str = "pushforward") -> DisintegrationFibers:
    """Conditional measures of ``beta`` along a coordinate projection.

    ``base="pushforward"``: the projection of ``beta`` for positive input, of
    the dominating weight ``|Re| + |Im|`` (exact) or ``|beta|`` (float) for
    complex input; fibers are then conditional probabilities in the positive
    case.  ``base="haar"``: uniform measure on the declared universe, the
    convention under which fiber totals match the conditional expectation.
    """
    if axis not in (1, 2):
        raise PreconditionError("axis must be 1 or 2")
    idx = 0 if axis == 1 else 1
    rows: dict = {}
    for k, m in beta.points.items():
        rows.setdefault(k[idx], {})[k] = m
    exact = beta.is_exact
    if base == "haar":
        if beta.universe is None:
            raise PreconditionError("Haar fibers need the measure's universe")
        n = len(beta.universe)
        lam = Fraction(1, n) if exact else 1.0 / n
        base_w = {t: lam for t in beta.universe}
    elif base == "pushforward":
        base_w = {}
        for t, row in rows.items():
            if beta.is_positive:
                w = sum(row.values(), 0)
                w = w.re if isinstance(w, GaussianRational) else w
            else:
                w = sum((_abs_weight(m) for m in row.values()), 0)
            if isinstance(w, complex):
                w = w.real
            base_w[t] = w
    else:
        raise PreconditionError(f"unknown base {base!r}")
    fibers = {}
    for t, row in rows.items():
        w = base_w[t]
        fibers[t] = {k: m / w for k, m in row.items()}
    if base == "pushforward":
        base_w = {t: w for t, w in base_w.items() if w != 0}
    return DisintegrationFibers(axis, base_w, fibers, beta.modulus, beta.universe)


@dataclass
class FiberProfile:
    N0: int
    N: int
    tail_sup: dict

    @property
    def summary(self) -> dict:
        vals = list(self.tail_sup.values())
        if not vals:
            return {"count": 0}
        return {"count": len(vals), "min": min(vals), "max": max(vals), "mean": float(np.mean(vals))}

    def to_json(self) -> dict:
        return {
            "N0": self.N0,
            "N": self.N,
            "summary": self.summary,
            "fibers": [[_label_to_json(t), v] for t, v in sorted(self.tail_sup.items(), key=lambda kv: repr(kv[0]))],
        }


def _circle_position(label, modulus):
    if modulus is not None:
        if not isinstance(label, int):
            raise PreconditionError("circle embedding needs integer labels modulo the declared modulus")
        return label / modulus
    if isinstance(label, (float, Fraction)) and 0 <= label < 1:
        return float(label)
    raise PreconditionError("fiber profiles need a circle embedding: a modulus or labels in [0, 1)")


def fiber_mixing_profile(fibers: DisintegrationFibers, N: int, N0: int = 1) -> FiberProfile:
    """``tail_sup`` of the Fourier coefficients of each fiber's free coordinate over ``N0 <= |n| <= N``."""
    if not 0 < N0 <= N:
        raise PreconditionError("need 0 < N0 <= N")
    other = 1 if fibers.axis == 1 else 0
    ns = np.concatenate([np.arange(-N, -N0 + 1), np.arange(N0, N + 1)])
    out = {}
    for t, fib in fibers.fibers.items():
        pos = np.array([_circle_position(k[other], fibers.modulus) for k in fib], dtype=float)
        m = np.array([complex(v) for v in fib.values()], dtype=complex)
        coeffs = np.exp(2j * np.pi * np.outer(ns, pos)) @ m
        out[t] = float(np.abs(coeffs).max()) if ns.size else 0.0
    return FiberProfile(N0, N, out)


# ------------------------------------------------- measures from group vectors


def _exact_mode(model: GroupPresentationModel) -> bool:
    return all(n > 0 and 4 % n == 0 for n in model.marked.orders)


def _character(t: tuple, c: tuple, orders: tuple, exact: bool):
    if exact:
        val = GaussianRational(Fraction(1), Fraction(0))
        for ti, ci, n in zip(t, c, orders):
            val = val * exact_root_of_unity(ti * ci, n)
        return val
    return complex(np.exp(2j * np.pi * sum(ti * ci / n for ti, ci, n in zip(t, c, orders))))


def _label(t: tuple):
    return t[0] if len(t) == 1 else t


def dual_labels(model: GroupPresentationModel) -> list:
    return [_label(t) for t in itertools.product(*(range(n) for n in model.marked.orders))]


def character_value(model: GroupPresentationModel, t, h, exact: bool | None = None):
    """``chi_t(h)`` for a dual label ``t`` and ``h`` in the marked subgroup."""
    exact = _exact_mode(model) if exact is None else exact
    tt = t if isinstance(t, tuple) else (t,)
    return _character(tt, model.marked.coordinates(h), model.marked.orders, exact)


def _to_scalar(c: complex, exact: bool):
    return GaussianRational.coerce(complex(c)) if exact else complex(c)


def pairing(model, z1: GroupAlgebraElement, z2: GroupAlgebraElement, h1, h2, exact: bool):
    """``<u_h1 z1 u_h2, z2> = sum_g z1_g conj(z2_{h1 g h2})``."""
    G = model.group
    total = GaussianRational() if exact else 0j
    for g, c in z1.coeffs.items():
        d = z2.coeffs.get(G.mul(G.mul(h1, g), h2))
        if d is not None:
            total = total + _to_scalar(c, exact) * _to_scalar(d, exact).conjugate()
    return total


def cyclic_kernel(model: GroupPresentationModel, xi1: GroupAlgebraElement, xi2: GroupAlgebraElement, v) -> dict:
    """Nonzero ``kappa(p, q) = <v^p xi1 v^q, xi2>`` for a marked subgroup ``Z = <v>``, via exact transporters."""
    marked = model.marked
    v = model.form(v)
    if marked.orders != (0,) or abs(marked.coordinates(v)[0]) != 1:
        raise PreconditionError(f"{model.format(v)} must generate the marked subgroup, which must be Z")
    sign = marked.coordinates(v)[0]
    K: dict = {}
    for g1, c1 in xi1.coeffs.items():
        for g2, c2 in xi2.coeffs.items():
            T = marked.transporters(g1, g2)
            if not T.finite:
                raise NotSummable(
                    f"kernel has infinite support for the pair ({model.format(g1)}, {model.format(g2)})"
                )
            for h1, h2 in T.pairs:
                key = (marked.coordinates(h1)[0] * sign, marked.coordinates(h2)[0] * sign)
                K[key] = K.get(key, 0) + c1 * c2.conjugate()
    return {k: v for k, v in K.items() if v != 0}


def _grid_size(K: dict, minimum: int = 8) -> int:
    deg = max((max(abs(p), abs(q)) for p, q in K), default=0)
    return max(minimum, 1 << (2 * deg + 1).bit_length())


def eta_from_vectors(
    model: GroupPresentationModel,
    z1: GroupAlgebraElement,
    z2: GroupAlgebraElement,
    exact: bool | None = None,
    truncation: int | None = None,
) -> BivariateMeasure:
    """The measure ``eta_{z1,z2}`` on ``X x X``.

    For a finite marked subgroup ``X`` is its dual and the result is exact
    (when ``exact``).  For a marked subgroup ``Z`` a ``truncation`` M declares
    the grid ``X = Z/M``; the result is the grid sampling of the trigonometric
    polynomial whose coefficients are ``kappa(p, q)``, which reproduces every
    pairing with ``|p|, |q| < M/2`` exactly.
    """
    marked = model.marked
    if marked.is_finite:
        exact = _exact_mode(model) if exact is None else exact
        if exact and not _exact_mode(model):
            raise PreconditionError("exact masses need every character order to divide 4")
        H = marked.all_elements()
        n = len(H)
        check_budget("character pairs", n**4)
        coords = [marked.coordinates(h) for h in H]
        labels = list(itertools.product(*(range(k) for k in marked.orders)))
        if not z1.coeffs or not z2.coeffs:
            return BivariateMeasure({}, tuple(_label(t) for t in labels), marked.orders[0] if len(marked.orders) == 1 else None)
        kappa = {(i, j): pairing(model, z1, z2, H[i], H[j], exact) for i in range(n) for j in range(n)}
        if exact:
            chi = [[_character(t, c, marked.orders, True).conjugate() for c in coords] for t in labels]
            pts = {}
            for a, t in enumerate(labels):
                for b, s in enumerate(labels):
                    tot = GaussianRational()
                    for (i, j), k in kappa.items():
                        if k:
                            tot = tot + chi[a][i] * chi[b][j] * k
                    pts[(_label(t), _label(s))] = tot / (n * n)
        else:
            C = np.array([[np.conj(_character(t, c, marked.orders, False)) for c in coords] for t in labels])
            Kmat = np.array([[complex(kappa[(i, j)]) for j in range(n)] for i in range(n)])
            E = C @ Kmat @ C.T / (n * n)
            pts = {(_label(t), _label(s)): complex(E[a, b]) for a, t in enumerate(labels) for b, s in enumerate(labels)}
        mod = marked.orders[0] if len(marked.orders) == 1 else None
        return BivariateMeasure(pts, tuple(_label(t) for t in labels), mod)
    if truncation is None:
        raise PreconditionError("marked subgroup is infinite: declare a truncation grid")
    v = marked.generator_forms()[0]
    K = cyclic_kernel(model, z1, z2, v)
    M = int(truncation)
    deg = max((max(abs(p), abs(q)) for p, q in K), default=0)
    if 2 * deg >= M:
        raise PreconditionError(f"truncation {M} aliases kernel coefficients; use at least {2 * deg + 1}")
    check_budget("truncation grid", M * M)
    A = np.zeros((M, M), dtype=complex)
    for (p, q), k in K.items():
        A[p % M, q % M] += k
    E = np.fft.fft2(A) / (M * M)
    pts = {(t, s): complex(E[t, s]) for t in range(M) for s in range(M) if E[t, s] != 0}
    return BivariateMeasure(pts, tuple(range(M)), M)


def bivariate_coefficient_energy(model, xi1: GroupAlgebraElement, xi2: GroupAlgebraElement, v) -> float:
    """``integral |f(t, s)|^2 d(lambda x lambda)`` for the density f of ``eta_{xi1,xi2}`` when the marked subgroup is Z.

    The density is sampled on a grid fine enough to be alias free, so the
    discrete Parseval sum equals the continuous integral.
    """
    K = cyclic_kernel(model, xi1, xi2, v)
    if not K:
        return 0.0
    M = _grid_size(K)
    A = np.zeros((M, M), dtype=complex)
    for (p, q), k in K.items():
        A[p % M, q % M] += k
    density = np.fft.fft2(A)
    return float(np.mean(np.abs(density) ** 2))


@dataclass
class PolarizationReport:
    polarization_defect: float
    domination_violation: float

    def to_json(self) -> dict:
        return {"polarization_defect": self.polarization_defect, "domination_violation": self.domination_violation}


def polarization_check(eta12, eta_plus, eta_minus, eta_plus_i, eta_minus_i, eta1=None, eta2=None) -> PolarizationReport:
    """Pointwise defect of ``4 eta12 = (eta+ - eta-) + i (eta+i - eta-i)`` and of ``|eta12| <= eta1 + eta2``."""
    rhs = (eta_plus - eta_minus) + (eta_plus_i - eta_minus_i).scaled(1j if not eta12.is_exact else GaussianRational(Fraction(0), Fraction(1)))
    pol = eta12.scaled(4).max_defect(rhs)
    dom = 0.0
    if eta1 is not None and eta2 is not None:
        keys = set(eta12.points) | set(eta1.points) | set(eta2.points)
        for k in keys:
            bound = complex(eta1.mass(*k)).real + complex(eta2.mass(*k)).real
            dom = max(dom, abs(complex(eta12.mass(*k))) - bound)
    return PolarizationReport(pol, max(dom, 0.0))


def polarization_from_vectors(model, z1: GroupAlgebraElement, z2: GroupAlgebraElement, **kw) -> PolarizationReport:
    I = 1j
    eta = lambda a, b: eta_from_vectors(model, a, b, **kw)  # noqa: E731
    return polarization_check(
        eta(z1, z2),
        eta(z1 + z2, z1 + z2),
        eta(z1 - z2, z1 - z2),
        eta(z1 + z2.scale(I), z1 + z2.scale(I)),
        eta(z1 - z2.scale(I), z1 - z2.scale(I)),
        eta(z1, z1),
        eta(z2, z2),
    )


def expectation_on_dual(model, y: GroupAlgebraElement, t, exact: bool | None = None):
    """``y(t) = sum_h y_h chi_t(h)`` for ``y`` in the marked subalgebra."""
    exact = _exact_mode(model) if exact is None else exact
    total = GaussianRational() if exact else 0j
    for h, c in y.coeffs.items():
        total = total + _to_scalar(c, exact) * character_value(model, t, h, exact)
    return total


def fiber_mass_identity(model, z1: GroupAlgebraElement, z2: GroupAlgebraElement) -> float:
    """Largest ``|fiber_t(X x X) - E_A(z1 z2*)(t)|`` over the dual, fibers taken against Haar measure."""
    eta = eta_from_vectors(model, z1, z2)
    fib = disintegrate(eta, axis=1, base="haar")
    y = conditional_expectation(z1 * z2.adjoint())
    worst = 0.0
    for t in eta.universe:
        d = fib.fiber_total(t) - expectation_on_dual(model, y, t)
        if eta.is_exact and d != 0:
            return float(abs(d)) or math.inf
        worst = max(worst, abs(complex(d)))
    return worst


def fiber_energy_identity(model, z1, z2, w, b) -> tuple[float, float]:
    """Both sides of ``|E_A(b z1 w z2*)|_2^2 = sum_t lambda(t) |b(t)|^2 |eta^t(1 (x) w)|^2`` for marked elements b, w."""
    w, b = model.form(w), model.form(b)
    for x in (w, b):
        if not model.marked.contains(x):
            raise PreconditionError(f"{model.format(x)} is not in the marked subgroup")
    ub = GroupAlgebraElement.monomial(model, b)
    uw = GroupAlgebraElement.monomial(model, w)
    lhs = conditional_expectation(ub * z1 * uw * z2.adjoint()).norm2_sq
    eta = eta_from_vectors(model, z1, z2)
    fib = disintegrate(eta, axis=1, base="haar")
    rhs = 0.0
    for t in eta.universe:
        val = fib.fiber_integral(t, lambda a, s: character_value(model, s, w))
        rhs += float(fib.base[t]) * abs(complex(character_value(model, t, b))) ** 2 * abs(complex(val)) ** 2
    return lhs, rhs
