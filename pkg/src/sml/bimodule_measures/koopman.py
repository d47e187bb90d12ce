"""Finite abelian group actions, their spectral measures and the crossed-product picture.

A :class:`FiniteKoopmanModel` is a finite abelian group ``H = prod Z/n_i``
acting on a finite probability space by commuting permutations.  The crossed
product is realized concretely on ``L2(X, nu) (x) L2(H^, lambda)``:

* ``alpha(f) = sum_h alpha_h(f) (x) e_h`` with ``alpha_h(f) = f o T_h^-1`` and
  ``e_h`` the projection onto the character-evaluation function ``h^``;
* ``w_g = 1 (x) m_{g^}``, multiplication by ``g^(chi) = chi(g)``;
* the trace vector is ``Omega = 1 (x) 1``.

Spectral data follow ``pi(g) = integral conj(chi(g)) dE(chi)`` with
``pi(g) a = a o T_g^-1``, so ``E({chi}) = |H|^-1 sum_g chi(g) pi(g)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import PreconditionError, check_budget
from .measures import BivariateMeasure


def _label(t: tuple):
    return t[0] if len(t) == 1 else t


@dataclass
class FiniteKoopmanModel:
    invariants: tuple[int, ...]
    generators: tuple[tuple[int, ...], ...]
    nu: np.ndarray

    def __post_init__(self):
        self.invariants = tuple(int(n) for n in self.invariants)
        if not self.invariants or any(n < 1 for n in self.invariants):
            raise PreconditionError("H needs positive cyclic orders")
        self.generators = tuple(tuple(int(x) for x in p) for p in self.generators)
        if len(self.generators) != len(self.invariants):
            raise PreconditionError("need one permutation per cyclic factor of H")
        self.nu = np.asarray(self.nu, dtype=float)
        nX = self.nu.size
        if nX == 0 or abs(self.nu.sum() - 1) > 1e-12 or (self.nu < 0).any():
            raise PreconditionError("nu must be a probability vector")
        check_budget("Koopman Hilbert-space dimension", nX * self.order)
        for p, n in zip(self.generators, self.invariants):
            if sorted(p) != list(range(nX)):
                raise PreconditionError(f"{list(p)} is not a permutation of {nX} points")
            q = np.arange(nX)
            for _ in range(n):
                q = np.asarray(p)[q]
            if not (q == np.arange(nX)).all():
                raise PreconditionError(f"permutation order does not divide {n}")
        arrs = [np.asarray(p) for p in self.generators]
        for a, b in itertools.combinations(arrs, 2):
            if not (a[b] == b[a]).all():
                raise PreconditionError("generator permutations must commute")
        for a in arrs:
            if np.abs(self.nu[a] - self.nu).max() > 1e-12:
                raise PreconditionError("the action does not preserve nu")
        self.elements = list(itertools.product(*(range(n) for n in self.invariants)))
        self.index = {h: i for i, h in enumerate(self.elements)}
        self._perm = np.empty((self.order, nX), dtype=np.int64)
        for i, h in enumerate(self.elements):
            q = np.arange(nX)
            for a, k in zip(arrs, h):
                for _ in range(k):
                    q = a[q]
            self._perm[i] = q
        # chi_table[c, h] = chi_c(h)
        E = np.array(self.elements, dtype=float).reshape(self.order, -1)
        ph = (E / np.array(self.invariants, dtype=float)) @ E.T
        self.chi_table = np.exp(2j * np.pi * ph)

    # -- constructors

    @classmethod
    def translation(cls, invariants: Sequence[int]) -> "FiniteKoopmanModel":
        """H acting on itself by translation with uniform measure."""
        inv = tuple(invariants)
        elems = list(itertools.product(*(range(n) for n in inv)))
        idx = {h: i for i, h in enumerate(elems)}
        gens = []
        for j, n in enumerate(inv):
            gens.append(tuple(idx[tuple((x + (k == j)) % m for k, (x, m) in enumerate(zip(h, inv)))] for h in elems))
        return cls(inv, tuple(gens), np.full(len(elems), 1 / len(elems)))

    @classmethod
    def from_json(cls, doc: dict) -> "FiniteKoopmanModel":
        unknown = set(doc) - {"H", "permutations", "nu", "preset"}
        if unknown:
            raise PreconditionError(f"unknown Koopman keys: {sorted(unknown)}")
        if doc.get("preset") == "translation":
            return cls.translation(doc["H"])
        perms = doc["permutations"]
        nX = len(perms[0])
        nu = doc.get("nu", [1 / nX] * nX)
        return cls(tuple(doc["H"]), tuple(tuple(p) for p in perms), np.asarray(nu, dtype=float))

    def to_json(self) -> dict:
        return {"H": list(self.invariants), "permutations": [list(p) for p in self.generators], "nu": self.nu.tolist()}

    # -- basic structure

    @property
    def order(self) -> int:
        out = 1
        for n in self.invariants:
            out *= n
        return out

    @property
    def n_points(self) -> int:
        return self.nu.size

    def element_index(self, h) -> int:
        h = (h,) if isinstance(h, (int, np.integer)) else tuple(h)
        return self.index[tuple(int(x) % n for x, n in zip(h, self.invariants))]

    def T(self, h) -> np.ndarray:
        return self._perm[self.element_index(h)]

    def alpha_h(self, h, f: np.ndarray) -> np.ndarray:
        """``f o T_h^-1``."""
        f = np.asarray(f)
        out = np.empty_like(f)
        out[self.T(h)] = f
        return out

    def mean(self, f: np.ndarray) -> complex:
        return complex(np.dot(self.nu, f))

    def inner(self, f1: np.ndarray, f2: np.ndarray) -> complex:
        return complex(np.sum(self.nu * f1 * np.conj(f2)))

    def preserves_measure(self) -> bool:
        return all(np.abs(self.nu[p] - self.nu).max() <= 1e-12 for p in self._perm)

    def characters_orthonormal(self, tol: float = 1e-12) -> bool:
        G = self.chi_table @ self.chi_table.conj().T / self.order
        return bool(np.abs(G - np.eye(self.order)).max() <= tol)

    # -- spectral theory

    def pi_matrix(self, g) -> np.ndarray:
        """Matrix of ``a -> a o T_g^-1``."""
        P = np.zeros((self.n_points, self.n_points))
        P[self.T(g), np.arange(self.n_points)] = 1.0
        return P

    def spectral_projections(self) -> np.ndarray:
        """``E[c]`` for every character index c."""
        Pis = np.array([self.pi_matrix(h) for h in self.elements])
        return np.einsum("ch,hxy->cxy", self.chi_table, Pis) / self.order

    def spectral_measure(self, f1: np.ndarray, f2: np.ndarray | None = None) -> np.ndarray:
        """``mu_{f1,f2}(chi) = <E(chi) f1, f2>`` as a vector over characters."""
        f2 = f1 if f2 is None else f2
        E = self.spectral_projections()
        return np.array([self.inner(E[c] @ f1, f2) for c in range(self.order)])

    def projections_resolve_identity(self, tol: float = 1e-12) -> bool:
        E = self.spectral_projections()
        ok = np.abs(E.sum(axis=0) - np.eye(self.n_points)).max() <= tol
        for c in range(self.order):
            ok &= np.abs(E[c] @ E[c] - E[c]).max() <= tol
        return bool(ok)

    # -- crossed product on L2(X) (x) L2(H^)

    @property
    def omega(self) -> np.ndarray:
        return np.ones((self.n_points, self.order), dtype=complex)

    def hat(self, g) -> np.ndarray:
        """``g^(chi) = chi(g)`` as a vector over characters."""
        return self.chi_table[:, self.element_index(g)]

    def apply_w(self, g, Phi: np.ndarray) -> np.ndarray:
        return Phi * self.hat(g)[None, :]

    def apply_alpha(self, f: np.ndarray, Phi: np.ndarray) -> np.ndarray:
        # coefficient of Phi(x, .) along h^, in the normalized inner product of L2(H^)
        C = Phi @ self.chi_table.conj() / self.order
        AF = np.stack([self.alpha_h(h, f) for h in self.elements], axis=1)
        return (AF * C) @ self.chi_table.T

    def crossed_inner(self, Phi: np.ndarray, Psi: np.ndarray) -> complex:
        return complex(np.sum(self.nu[:, None] * Phi * np.conj(Psi)) / self.order)

    def crossed_expectation(self, Phi: np.ndarray) -> dict:
        """Coefficients ``c_g = <Phi, w_g Omega>`` of the projection onto the span of the ``w_g Omega``."""
        return {h: self.crossed_inner(Phi, self.apply_w(h, self.omega)) for h in self.elements}


def _require_mean_zero(model: FiniteKoopmanModel, f: np.ndarray, name: str, tol: float = 1e-12) -> None:
    if abs(model.mean(f)) > tol * max(1.0, float(np.abs(f).max(initial=0.0))):
        raise PreconditionError(f"{name} must have mean zero, mean is {model.mean(f)}")


SNAG_FORMULAS = ("literal", "corrected")


def snag_identity_check(
    model: FiniteKoopmanModel, f1, f2, g1, g2, h1, h2, formula: str = "literal"
) -> tuple[complex, complex, float]:
    """Crossed-product pairing versus the double character sum.

    LHS is ``<w_g1 alpha(f1) w_h1 w_g2 Omega, alpha(f2) w_h2 Omega>`` evaluated
    with explicit operators.  The ``"literal"`` RHS is

        |H|^-1 sum_{psi, chi} psi(g2) conj(psi(h1 - h2)) chi(g1 + g2 + h1 - h2) mu_{f1,f2}(psi).

    With the stated conventions the operator side evaluates to
    ``delta(g1 + g2 + h1 - h2 = 0) <alpha_{g2 + h1 - h2} f1, f2>``, so the factor
    that actually matches is ``conj(psi(g2))``; ``formula="corrected"`` uses
    it.  The two agree whenever ``2 g2 = 0`` or the spectral measure is
    invariant under ``psi -> conj(psi)`` after the other factors are applied.
    """
    if formula not in SNAG_FORMULAS:
        raise PreconditionError(f"formula must be one of {SNAG_FORMULAS}")
    f1 = np.asarray(f1, dtype=complex)
    f2 = np.asarray(f2, dtype=complex)
    _require_mean_zero(model, f1, "f1")
    _require_mean_zero(model, f2, "f2")
    Om = model.omega
    left = model.apply_w(g1, model.apply_alpha(f1, model.apply_w(h1, model.apply_w(g2, Om))))
    right = model.apply_alpha(f2, model.apply_w(h2, Om))
    lhs = model.crossed_inner(left, right)
    inv = model.invariants
    g1, g2, h1, h2 = (np.array(model.elements[model.element_index(x)]) for x in (g1, g2, h1, h2))
    mu = model.spectral_measure(f1, f2)
    total = tuple(int(x) % n for x, n in zip(g1 + g2 + h1 - h2, inv))
    d = tuple(int(x) % n for x, n in zip(h1 - h2, inv))
    psi_g2 = model.chi_table[:, model.element_index(tuple(g2))]
    psi_d = model.chi_table[:, model.element_index(d)]
    chi_sum = model.chi_table[:, model.element_index(total)].mean()
    if formula == "corrected":
        psi_g2 = np.conj(psi_g2)
    rhs = complex(np.sum(psi_g2 * np.conj(psi_d) * mu) * chi_sum)
    return lhs, rhs, abs(lhs - rhs)


def transport_S(mu: np.ndarray, model_or_invariants) -> BivariateMeasure:
    """Push ``mu (x) lambda`` forward by ``S(psi, chi) = (chi, chi psi)``; characters indexed additively."""
    inv = model_or_invariants.invariants if isinstance(model_or_invariants, FiniteKoopmanModel) else tuple(model_or_invariants)
    elems = list(itertools.product(*(range(n) for n in inv)))
    mu = np.asarray(mu, dtype=complex)
    if mu.size != len(elems):
        raise PreconditionError("mu needs one mass per character")
    pts: dict = {}
    for i, psi in enumerate(elems):
        if mu[i] == 0:
            continue
        for chi in elems:
            key = (_label(chi), _label(tuple((a + b) % n for a, b, n in zip(chi, psi, inv))))
            pts[key] = pts.get(key, 0) + mu[i] / len(elems)
    return BivariateMeasure(pts, tuple(_label(c) for c in elems), inv[0] if len(inv) == 1 else None)


def eta_alpha(model: FiniteKoopmanModel, f1, f2=None) -> BivariateMeasure:
    """``eta_{alpha(f1), alpha(f2)}`` on ``H^ x H^`` from ``kappa(g1, g2) = <w_g1 alpha(f1) w_g2 Omega, alpha(f2) Omega>``."""
    f1 = np.asarray(f1, dtype=complex)
    f2 = f1 if f2 is None else np.asarray(f2, dtype=complex)
    n = model.order
    Om = model.omega
    right = model.apply_alpha(f2, Om)
    K = np.empty((n, n), dtype=complex)
    for j, g2 in enumerate(model.elements):
        base = model.apply_alpha(f1, model.apply_w(g2, Om))
        for i, g1 in enumerate(model.elements):
            K[i, j] = model.crossed_inner(model.apply_w(g1, base), right)
    C = model.chi_table.conj()
    E = C @ K @ C.T / (n * n)
    labels = [_label(c) for c in model.elements]
    pts = {(labels[a], labels[b]): complex(E[a, b]) for a in range(n) for b in range(n)}
    return BivariateMeasure(pts, tuple(labels), model.invariants[0] if len(model.invariants) == 1 else None)


@dataclass
class SpectralType:
    f0: np.ndarray
    mu: np.ndarray
    support_size: int
    nonzero_projections: int

    @property
    def is_maximal(self) -> bool:
        return self.support_size == self.nonzero_projections


def _candidates(model: FiniteKoopmanModel) -> list[np.ndarray]:
    nX = model.n_points
    out = []
    for x in range(nX):
        f = np.zeros(nX)
        f[x] = 1.0
        out.append(f - model.nu[x])
    seen, reps = set(), []
    for x in range(nX):
        if x in seen:
            continue
        orbit = set(int(p[x]) for p in model._perm)
        seen |= orbit
        reps.append(x)
    f = np.zeros(nX)
    for w, x in enumerate(reps, start=1):
        f[x] = float(w)
    out.append(f - model.mean(f).real)
    return out


def maximal_spectral_type(model: FiniteKoopmanModel, tol: float = 1e-12) -> SpectralType:
    """Sweep centered candidate vectors; keep the first one whose spectral measure has the largest support."""
    E = model.spectral_projections()
    centered = np.eye(model.n_points) - np.ones((model.n_points, 1)) * model.nu[None, :]
    nonzero = int(sum(np.abs(E[c] @ centered).max() > tol for c in range(model.order)))
    best = None
    for f in _candidates(model):
        mu = model.spectral_measure(f).real
        size = int((mu > tol).sum())
        if best is None or size > best.support_size:
            best = SpectralType(f, np.where(mu > tol, mu, 0.0), size, nonzero)
    return best


def transport_identity_defect(model: FiniteKoopmanModel, f0: np.ndarray | None = None) -> float:
    """``max |S_*(mu_f0 (x) lambda) - eta_{alpha(f0)}|`` pointwise."""
    if f0 is None:
        st = maximal_spectral_type(model)
        f0, mu = st.f0, model.spectral_measure(st.f0)
    else:
        mu = model.spectral_measure(f0)
    return transport_S(mu, model).max_defect(eta_alpha(model, f0))


def fiber_expectation_identity(model: FiniteKoopmanModel, f: np.ndarray, m) -> tuple[float, float]:
    """Checks behind ``E_{L(H)}(x w_m x*) = tau(x alpha_m(x*)) w_m`` for ``x = alpha(f)``.

    Returns ``(d1, d2)``: d1 is the distance between the crossed-product
    expectation of ``x w_m x*`` and the single term ``<alpha_m(conj f), conj f>
    w_m`` computed on X alone; d2 is the largest gap over characters t between
    the fiber integral ``eta^t(1 (x) w_m^)`` (Haar fibers) and that
    expectation evaluated at t.
    """
    from .measures import disintegrate

    f = np.asarray(f, dtype=complex)
    _require_mean_zero(model, f, "f")
    Om = model.omega
    # y = alpha(f) w_m alpha(f)*; alpha(f)* = alpha(conj f)
    Phi = model.apply_alpha(f, model.apply_w(m, model.apply_alpha(np.conj(f), Om)))
    coeffs = model.crossed_expectation(Phi)
    mi = model.element_index(m)
    mkey = model.elements[mi]
    scalar = model.inner(model.alpha_h(tuple(-x for x in mkey), f), f)
    expected = {h: (scalar if h == mkey else 0.0) for h in model.elements}
    d1 = max(abs(coeffs[h] - expected[h]) for h in model.elements)
    eta = eta_alpha(model, f)
    fib = disintegrate(eta, axis=1, base="haar")
    d2 = 0.0
    for ci, c in enumerate(model.elements):
        t = _label(c)
        val = fib.fiber_integral(t, lambda a, s: model.chi_table[model.elements.index(s if isinstance(s, tuple) else (s,)), mi])
        ey = sum(coeffs[h] * model.chi_table[ci, model.element_index(h)] for h in model.elements)
        d2 = max(d2, abs(complex(val) - complex(ey)))
    return float(d1), float(d2)


def subgroup_absolute_continuity(invariants: Sequence[int]) -> list[dict]:
    """For each subgroup G of a finite abelian group, whether its counting measure dominates the full one.

    Exhaustive enumeration; the full group is the only subgroup whose
    normalized counting measure charges every point.
    """
    inv = tuple(invariants)
    elems = list(itertools.product(*(range(n) for n in inv)))
    check_budget("subgroup enumeration", len(elems) ** 2)

    def close(gens):
        S = {tuple(0 for _ in inv)}
        frontier = list(S)
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = tuple((a + b) % n for a, b, n in zip(x, g, inv))
                    if y not in S:
                        S.add(y)
                        nxt.append(y)
            frontier = nxt
        return frozenset(S)

    subgroups = {close([])}
    frontier = list(subgroups)
    while frontier:
        nxt = []
        for S in frontier:
            for g in elems:
                if g not in S:
                    T = close(list(S) + [g])
                    if T not in subgroups:
                        subgroups.add(T)
                        nxt.append(T)
        frontier = nxt
    full = frozenset(elems)
    return [
        {"order": len(S), "dominates_full": full <= S, "is_full": S == full}
        for S in sorted(subgroups, key=lambda S: (len(S), sorted(S)))
    ]
