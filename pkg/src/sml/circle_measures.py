"""Finite measures on the circle [0, 1) and their Fourier diagnostics.

A :class:`CircleMeasure` is a sum of three parts: finitely many atoms, a
nonnegative density sampled on a uniform power-of-two grid, and an optional
Riesz product ``prod_j (1 + a_j cos(2 pi n_j t)) dt`` with dissociate
frequencies.  Coefficients use the convention

    mu_hat(n) = integral of exp(2 pi i n t) d mu(t).

Every mixing statement here is a finite-horizon profile. Nothing in this module
returns a yes/no verdict on mixing.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import PreconditionError

Point = Union[Fraction, float]

DEFAULT_GRID = 2**14
DEFAULT_HORIZON = 10**4
DEFAULT_TOL = 1e-8


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def parse_point(value) -> Point:
    """Read an atom location; strings like ``"1/3"`` become exact rationals."""
    if isinstance(value, Fraction):
        t = value
    elif isinstance(value, int):
        t = Fraction(value)
    elif isinstance(value, str):
        t = Fraction(value.strip())
    else:
        t = float(value)
        if not math.isfinite(t):
            raise PreconditionError(f"atom location must be finite, got {value!r}")
    return t % 1


def format_point(t: Point):
    if isinstance(t, Fraction):
        return f"{t.numerator}/{t.denominator}" if t.denominator != 1 else str(t.numerator)
    return float(t)


@dataclass(frozen=True)
class RieszSpec:
    """Dissociate Riesz product ``prod_j (1 + a_j cos(2 pi n_j t))``.

    Frequencies must satisfy ``n_{j+1} >= 3 n_j + 1`` so that every integer has
    at most one representation ``sum_j eps_j n_j`` with ``eps_j`` in {-1, 0, 1}.
    """

    frequencies: tuple[int, ...]
    coefficients: tuple[float, ...]

    def __post_init__(self):
        freqs = tuple(int(n) for n in self.frequencies)
        coeffs = tuple(float(a) for a in self.coefficients)
        if len(freqs) != len(coeffs):
            raise PreconditionError("Riesz frequencies and coefficients differ in length")
        if not freqs:
            raise PreconditionError("Riesz product needs at least one factor")
        if freqs[0] < 1:
            raise PreconditionError("Riesz frequencies must be positive")
        for lo, hi in zip(freqs, freqs[1:]):
            if hi < 3 * lo + 1:
                raise PreconditionError(
                    f"frequencies {lo}, {hi} are not dissociate (need {hi} >= {3 * lo + 1})"
                )
        for a in coeffs:
            if abs(a) > 1:
                raise PreconditionError(f"Riesz coefficient {a} has |a| > 1")
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "coefficients", coeffs)

    def representation(self, n: int) -> tuple[int, ...] | None:
        """Signs ``eps`` with ``n = sum eps_j n_j``, or None if there are none.

        Greedy from the largest frequency; exact because each frequency exceeds
        twice the sum of all smaller ones.
        """
        r = int(n)
        eps = [0] * len(self.frequencies)
        for j in range(len(self.frequencies) - 1, -1, -1):
            nj = self.frequencies[j]
            if 2 * r > nj:
                eps[j], r = 1, r - nj
            elif 2 * r < -nj:
                eps[j], r = -1, r + nj
        return tuple(eps) if r == 0 else None

    def coefficient(self, n: int) -> float:
        eps = self.representation(n)
        if eps is None:
            return 0.0
        value = 1.0
        for e, a in zip(eps, self.coefficients):
            if e:
                value *= a / 2
        return value

    def coefficient_array(self, ns: np.ndarray) -> np.ndarray:
        r = np.asarray(ns, dtype=np.int64).copy()
        value = np.ones(r.shape, dtype=float)
        for nj, a in zip(reversed(self.frequencies), reversed(self.coefficients)):
            up = 2 * r > nj
            down = 2 * r < -nj
            hit = up | down
            r = np.where(up, r - nj, np.where(down, r + nj, r))
            value = np.where(hit, value * (a / 2), value)
        return np.where(r == 0, value, 0.0)

    def density(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        for nj, a in zip(self.frequencies, self.coefficients):
            out *= 1 + a * np.cos(2 * np.pi * nj * t)
        return out

    def to_json(self) -> dict:
        return {"freqs": list(self.frequencies), "coeffs": list(self.coefficients)}


@dataclass(eq=False)
class CircleMeasure:
    """Atoms + sampled density + optional Riesz product on [0, 1).

    ``density`` holds samples at ``j / G``; its mass is the sample mean.
    ``riesz_mass`` scales the (probability) Riesz product.
    Coincident atoms are merged at construction.
    """

    atoms: tuple[tuple[Point, float], ...] = ()
    density: np.ndarray | None = None
    riesz: RieszSpec | None = None
    riesz_mass: float = 1.0

    def __post_init__(self):
        merged: dict[Point, float] = {}
        order: list[Point] = []
        for t, m in self.atoms:
            t = parse_point(t)
            m = float(m)
            if not m > 0 or not math.isfinite(m):
                raise PreconditionError(f"atom mass must be positive and finite, got {m}")
            key = next((k for k in order if k == t), None)
            if key is None:
                order.append(t)
                merged[t] = m
            else:
                merged[key] += m
        self.atoms = tuple((t, merged[t]) for t in order)
        if self.density is not None:
            d = np.asarray(self.density, dtype=float)
            if d.ndim != 1 or not _is_power_of_two(d.size):
                raise PreconditionError("density grid size must be a power of two")
            if np.any(d < 0) or not np.all(np.isfinite(d)):
                raise PreconditionError("density samples must be finite and nonnegative")
            d.setflags(write=False)
            self.density = d
        if self.riesz is not None:
            self.riesz_mass = float(self.riesz_mass)
            if not self.riesz_mass > 0:
                raise PreconditionError("riesz_mass must be positive")

    # constructors -----------------------------------------------------

    @classmethod
    def dirac(cls, t, mass: float = 1.0) -> "CircleMeasure":
        return cls(atoms=((t, mass),))

    @classmethod
    def lebesgue(cls, mass: float = 1.0, grid: int = DEFAULT_GRID) -> "CircleMeasure":
        return cls(density=np.full(grid, float(mass)))

    @classmethod
    def from_density(cls, f: Callable[[np.ndarray], np.ndarray], grid: int = DEFAULT_GRID):
        t = np.arange(grid) / grid
        return cls(density=np.asarray(f(t), dtype=float))

    @classmethod
    def riesz_product(cls, frequencies, coefficients, mass: float = 1.0) -> "CircleMeasure":
        return cls(riesz=RieszSpec(tuple(frequencies), tuple(coefficients)), riesz_mass=mass)

    def __add__(self, other: "CircleMeasure") -> "CircleMeasure":
        if not isinstance(other, CircleMeasure):
            return NotImplemented
        if self.riesz is not None and other.riesz is not None:
            raise PreconditionError("a CircleMeasure holds at most one Riesz product")
        if self.density is None or other.density is None:
            density = self.density if other.density is None else other.density
        elif self.density.size != other.density.size:
            raise PreconditionError("cannot add densities on different grids")
        else:
            density = self.density + other.density
        riesz, rmass = (self.riesz, self.riesz_mass) if self.riesz else (other.riesz, other.riesz_mass)
        return CircleMeasure(self.atoms + other.atoms, density, riesz, rmass)

    def scaled(self, c: float) -> "CircleMeasure":
        if not c > 0:
            raise PreconditionError("scale factor must be positive")
        return CircleMeasure(
            tuple((t, c * m) for t, m in self.atoms),
            None if self.density is None else c * self.density,
            self.riesz,
            c * self.riesz_mass,
        )

    # masses -----------------------------------------------------------

    @property
    def atom_mass(self) -> float:
        return float(sum(m for _, m in self.atoms))

    @property
    def density_mass(self) -> float:
        return 0.0 if self.density is None else float(self.density.mean())

    @property
    def total_mass(self) -> float:
        return self.atom_mass + self.density_mass + (self.riesz_mass if self.riesz else 0.0)

    @property
    def atom_energy(self) -> float:
        """Sum of squared atom masses, the Wiener limit."""
        return float(sum(m * m for _, m in self.atoms))

    # serialization ----------------------------------------------------

    def to_json(self) -> dict:
        doc: dict = {"atoms": [[format_point(t), m] for t, m in self.atoms]}
        if self.density is not None:
            doc["density"] = {"grid": int(self.density.size), "samples": self.density.tolist()}
        if self.riesz is not None:
            doc["riesz"] = self.riesz.to_json()
            if self.riesz_mass != 1.0:
                doc["riesz"]["mass"] = self.riesz_mass
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "CircleMeasure":
        unknown = set(doc) - {"atoms", "density", "riesz"}
        if unknown:
            raise PreconditionError(f"unknown measure keys: {sorted(unknown)}")
        atoms = tuple((parse_point(t), m) for t, m in doc.get("atoms", []))
        density = None
        if doc.get("density") is not None:
            d = doc["density"]
            samples = d.get("samples")
            grid = int(d.get("grid", len(samples) if samples is not None else 0))
            if samples is None:
                # {"grid": G, "constant": c} shorthand
                samples = [float(d.get("constant", 1.0))] * grid
            if len(samples) != grid:
                raise PreconditionError(f"density has {len(samples)} samples, grid says {grid}")
            density = np.asarray(samples, dtype=float)
        riesz, rmass = None, 1.0
        if doc.get("riesz") is not None:
            r = doc["riesz"]
            riesz = RieszSpec(tuple(r["freqs"]), tuple(r["coeffs"]))
            rmass = float(r.get("mass", 1.0))
        return cls(atoms, density, riesz, rmass)


# ----------------------------------------------------------------------
# coefficients


def _atom_phases(t: Point, ns: np.ndarray) -> np.ndarray:
    """Fractional part of ``n * t`` for each n, exact for rational t."""
    if isinstance(t, Fraction):
        p, q = t.numerator, t.denominator
        if q < 2**31 and np.abs(ns).max(initial=0) < 2**31:
            return (ns.astype(np.int64) * p % q) / q
        return np.array([float((int(n) * p) % q) / q for n in ns])
    return np.mod(ns * float(t), 1.0)


def fourier_coefficients(mu: CircleMeasure, ns: Iterable[int]) -> np.ndarray:
    """Vectorized :func:`fourier_coefficient` over integer indices ``ns``."""
    ns = np.asarray(list(ns) if not isinstance(ns, np.ndarray) else ns, dtype=np.int64)
    out = np.zeros(ns.shape, dtype=complex)
    for t, m in mu.atoms:
        out += m * np.exp(2j * np.pi * _atom_phases(t, ns))
    if mu.density is not None:
        G = mu.density.size
        # ifft(x)[k] = (1/G) sum_j x_j exp(2 pi i j k / G)
        spectrum = np.fft.ifft(mu.density)
        out += spectrum[np.mod(ns, G)]
    if mu.riesz is not None:
        out += mu.riesz_mass * mu.riesz.coefficient_array(ns)
    return out


def fourier_coefficient(mu: CircleMeasure, n: int) -> complex:
    return complex(fourier_coefficients(mu, np.array([n]))[0])


def _symmetric_coefficients(mu: CircleMeasure, N: int) -> np.ndarray:
    return fourier_coefficients(mu, np.arange(-N, N + 1))


def _cesaro(values_sym: np.ndarray) -> np.ndarray:
    """Cesàro means over |k| <= N' for N' = 0..N of a symmetric-indexed array."""
    N = (values_sym.size - 1) // 2
    centre = values_sym[N]
    pos = values_sym[N + 1 :]
    neg = values_sym[:N][::-1]
    partial = centre + np.concatenate(([0.0], np.cumsum(pos + neg)))
    return partial / (2 * np.arange(N + 1) + 1)


def wiener_atom_energy(mu: CircleMeasure, N: int = DEFAULT_HORIZON) -> np.ndarray:
    """Cesàro means of |mu_hat(k)|^2 for horizons 0..N.

    By Wiener's theorem the sequence tends to the sum of squared atom masses.
    """
    if N < 1:
        raise PreconditionError("horizon N must be >= 1")
    c = _symmetric_coefficients(mu, N)
    return _cesaro(np.abs(c) ** 2)


def weak_mixing_profile(mu: CircleMeasure, N: int = DEFAULT_HORIZON) -> np.ndarray:
    """Cesàro means of |mu_hat(k)|, which tend to 0 iff mu has no atoms."""
    if N < 1:
        raise PreconditionError("horizon N must be >= 1")
    c = _symmetric_coefficients(mu, N)
    return _cesaro(np.abs(c))


@dataclass
class FourierProfile:
    """Coefficients for |n| <= N with Cesàro sequences and a tail supremum."""

    ns: np.ndarray
    values: np.ndarray
    cesaro_sq: np.ndarray
    cesaro_abs: np.ndarray
    tail_sup: float
    tail_argmax: tuple[int, ...]
    N0: int
    N: int = field(init=False)

    def __post_init__(self):
        self.N = int(self.ns[-1])

    @property
    def coefficients(self) -> dict[int, complex]:
        return {int(n): complex(v) for n, v in zip(self.ns, self.values)}

    def coefficient(self, n: int) -> complex:
        return complex(self.values[int(n) + self.N])

    def summary(self) -> dict:
        return {
            "N0": self.N0,
            "N": self.N,
            "mass": float(self.values[self.N].real),
            "tail_sup": self.tail_sup,
            "tail_argmax": list(self.tail_argmax),
            "cesaro_sq_last": float(self.cesaro_sq[-1]),
            "cesaro_abs_last": float(self.cesaro_abs[-1]),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "re", "im", "abs"])
        for n, v in zip(self.ns, self.values):
            w.writerow([int(n), _fmt(v.real), _fmt(v.imag), _fmt(abs(v))])
        return buf.getvalue()


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _profile(ns: np.ndarray, values: np.ndarray, N0: int) -> FourierProfile:
    N = int(ns[-1])
    absval = np.abs(values)
    tail_mask = np.abs(ns) >= N0
    tail = absval[tail_mask]
    tail_sup = float(tail.max()) if tail.size else 0.0
    # ties within rounding noise all count as maximizers
    hits = ns[tail_mask][np.isclose(tail, tail_sup, rtol=1e-12, atol=1e-14)] if tail.size else []
    argmax = tuple(sorted({abs(int(n)) for n in hits})) if tail_sup > 1e-14 else ()
    return FourierProfile(
        ns=ns,
        values=values,
        cesaro_sq=_cesaro(absval**2),
        cesaro_abs=_cesaro(absval),
        tail_sup=tail_sup,
        tail_argmax=argmax,
        N0=N0,
    )


def rajchman_profile(mu: CircleMeasure, N0: int, N: int) -> FourierProfile:
    """Finite-horizon decay profile; ``tail_sup`` is max |mu_hat(n)| over N0 <= |n| <= N."""
    if not 0 < N0 < N:
        raise PreconditionError(f"need 0 < N0 < N, got N0={N0}, N={N}")
    ns = np.arange(-N, N + 1)
    return _profile(ns, fourier_coefficients(mu, ns), N0)


def profile_from_coefficients(coeffs: Sequence[complex], N0: int = 1) -> FourierProfile:
    """Profile of the measure whose coefficients are ``coeffs[m]`` for m >= 0.

    Negative indices are filled by conjugate symmetry, so the input is read as
    the coefficient sequence of a real measure (e.g. a correlation sequence).
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.size < 2:
        raise PreconditionError("need coefficients for at least m = 0, 1")
    N = c.size - 1
    if not 0 < N0 <= N:
        raise PreconditionError(f"need 0 < N0 <= {N}")
    values = np.concatenate((np.conj(c[1:][::-1]), c))
    return _profile(np.arange(-N, N + 1), values, N0)


def cesaro_equivalence_check(
    a: Union[Callable[[int], complex], Sequence[complex], np.ndarray],
    N: int,
    bound: float = 1.0,
) -> tuple[float, float]:
    """Cesàro means of |a_k| and |a_k|^2 over |k| <= N.

    ``a`` is either a callable ``k -> a_k`` or an array of length 2N+1 holding
    ``a_{-N}, ..., a_N``.  Both means vanish in the limit together for any
    bounded sequence; at a finite horizon they obey
    ``mean|a|^2 <= bound * mean|a|`` and ``(mean|a|)^2 <= mean|a|^2``.
    """
    if N < 0:
        raise PreconditionError("horizon N must be >= 0")
    if callable(a):
        vals = np.array([a(k) for k in range(-N, N + 1)], dtype=complex)
    else:
        vals = np.asarray(a, dtype=complex)
        if vals.size != 2 * N + 1:
            raise PreconditionError(f"expected {2 * N + 1} values for horizon {N}, got {vals.size}")
    absval = np.abs(vals)
    if absval.size and absval.max() > bound:
        raise PreconditionError(f"sequence exceeds declared bound {bound}: max |a_k| = {absval.max()}")
    return float(absval.mean()), float((absval**2).mean())
